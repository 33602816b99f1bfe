#include "tadkit/residuals.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tadkit/csv.hpp"
#include "tadkit/errors.hpp"

namespace tadkit {

std::vector<const ResidualEntry*> ResidualFrame::of_split(Split s) const {
  std::vector<const ResidualEntry*> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(&e);
  }
  return out;
}

namespace {

struct Partial {
  Split split = Split::kTrain;
  bool has_for = false;
  bool has_rec = false;
  double e_for = 0.0;
  double e_rec = 0.0;
};

}  // namespace

ResidualFrame compute_residuals(Model& model, const TelemetryDataset& ds, const SplitTable& splits,
                                int stride, int batch_size) {
  if (stride < 1) throw ContractError("stride must be >= 1");
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
  const int L = model.config().L;
  const int H = model.config().H;
  const int k = model.config().k;
  if (k != ds.k()) throw DimensionError("model expects k=" + std::to_string(k) +
                                        " but dataset has " + std::to_string(ds.k()));

  auto windows = enumerate_windows(ds, splits, L, H, stride);
  // (ne, feature, t) -> partial residuals. Distinct windows target distinct
  // (t, head) slots, so each side is written at most once.
  std::map<std::tuple<int, int, int>, Partial> cells;

  auto batches = plan_batches(std::move(windows), batch_size, /*shuffle_seed=*/0,
                              /*shuffle=*/false);
  for (const auto& refs : batches) {
    WindowBatch batch = build_batch(ds, refs, L, H);
    Graph g;
    ForwardResult fr = model.forward(g, batch, /*train_mode=*/false);
    const Tensor& forecast = g.value(fr.forecast);
    const Tensor& recon = g.value(fr.recon);

    for (int b = 0; b < batch.B; ++b) {
      const WindowRef& ref = refs[static_cast<size_t>(b)];
      const NESeries& ne = ds.nes[static_cast<size_t>(ref.ne)];
      const int t_rec = ref.t0 + L - 1;
      const int t_for = ref.t0 + L;
      for (int f = 0; f < k; ++f) {
        if (!ne.mask[static_cast<size_t>(t_rec) * k + f]) {
          const double truth = ne.x[static_cast<size_t>(t_rec) * k + f];
          const double pred = recon.values()[(static_cast<size_t>(b) * L + (L - 1)) * k + f];
          auto& cell = cells[{ref.ne, f, t_rec}];
          cell.split = ref.split;
          cell.has_rec = true;
          cell.e_rec = std::fabs(pred - truth);
        }
        if (!ne.mask[static_cast<size_t>(t_for) * k + f]) {
          const double truth = ne.x[static_cast<size_t>(t_for) * k + f];
          const double pred = forecast.values()[(static_cast<size_t>(b) * H + 0) * k + f];
          auto& cell = cells[{ref.ne, f, t_for}];
          cell.split = ref.split;
          cell.has_for = true;
          cell.e_for = std::fabs(pred - truth);
        }
      }
    }
  }

  ResidualFrame frame;
  frame.stride = stride;
  frame.entries.reserve(cells.size());
  for (const auto& [key, cell] : cells) {
    ResidualEntry e;
    e.ne = std::get<0>(key);
    e.feature = std::get<1>(key);
    e.t = std::get<2>(key);
    e.split = cell.split;
    e.has_for = cell.has_for;
    e.has_rec = cell.has_rec;
    e.e_for = cell.e_for;
    e.e_rec = cell.e_rec;
    if (cell.has_for && cell.has_rec) {
      e.e = 0.5 * (cell.e_for + cell.e_rec);
    } else {
      e.e = cell.has_for ? cell.e_for : cell.e_rec;
      ++frame.single_head_count;
    }
    frame.entries.push_back(e);
  }
  return frame;
}

void write_residuals_csv(const std::string& path, const ResidualFrame& frame,
                         const TelemetryDataset& ds) {
  CsvTable table;
  table.header = {"ne_id", "feature", "timestamp", "split", "e_for", "e_rec", "e"};
  table.rows.reserve(frame.entries.size());
  for (const auto& e : frame.entries) {
    const NESeries& ne = ds.nes[static_cast<size_t>(e.ne)];
    table.rows.push_back({ne.ne_id, ds.schema.dynamic_real[static_cast<size_t>(e.feature)],
                          format_timestamp_iso(ne.timestamps[static_cast<size_t>(e.t)]),
                          std::string(split_name(e.split)),
                          e.has_for ? format_double(e.e_for) : std::string(),
                          e.has_rec ? format_double(e.e_rec) : std::string(),
                          format_double(e.e)});
  }
  write_csv(path, table);
}

ResidualFrame read_residuals_csv(const std::string& path, const TelemetryDataset& ds) {
  CsvTable table = read_csv(path);
  const int c_ne = table.require_column("ne_id");
  const int c_feat = table.require_column("feature");
  const int c_ts = table.require_column("timestamp");
  const int c_split = table.require_column("split");
  const int c_for = table.require_column("e_for");
  const int c_rec = table.require_column("e_rec");
  const int c_e = table.require_column("e");

  std::map<std::string, int> feature_index;
  for (int f = 0; f < ds.k(); ++f) feature_index[ds.schema.dynamic_real[static_cast<size_t>(f)]] = f;

  ResidualFrame frame;
  frame.entries.reserve(table.rows.size());
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path + ":row " + std::to_string(r + 2);
    ResidualEntry e;
    e.ne = ds.ne_index(row[static_cast<size_t>(c_ne)]);
    if (e.ne < 0) throw DataError(where + ": unknown ne_id '" + row[static_cast<size_t>(c_ne)] + "'");
    auto fit = feature_index.find(row[static_cast<size_t>(c_feat)]);
    if (fit == feature_index.end()) {
      throw DataError(where + ": unknown feature '" + row[static_cast<size_t>(c_feat)] + "'");
    }
    e.feature = fit->second;
    const std::int64_t ts = parse_timestamp(row[static_cast<size_t>(c_ts)], where);
    const NESeries& ne = ds.nes[static_cast<size_t>(e.ne)];
    auto tit = std::lower_bound(ne.timestamps.begin(), ne.timestamps.end(), ts);
    if (tit == ne.timestamps.end() || *tit != ts) {
      throw DataError(where + ": timestamp not on the NE timeline");
    }
    e.t = static_cast<int>(tit - ne.timestamps.begin());
    const std::string& sp = row[static_cast<size_t>(c_split)];
    if (sp == "train") e.split = Split::kTrain;
    else if (sp == "val") e.split = Split::kVal;
    else if (sp == "test") e.split = Split::kTest;
    else throw DataError(where + ": unknown split '" + sp + "'");
    e.has_for = !row[static_cast<size_t>(c_for)].empty();
    e.has_rec = !row[static_cast<size_t>(c_rec)].empty();
    if (!e.has_for && !e.has_rec) throw DataError(where + ": row carries no residual");
    if (e.has_for) e.e_for = parse_double(row[static_cast<size_t>(c_for)], where);
    if (e.has_rec) e.e_rec = parse_double(row[static_cast<size_t>(c_rec)], where);
    e.e = parse_double(row[static_cast<size_t>(c_e)], where);
    if (!(e.e >= 0.0) || (e.has_for && !(e.e_for >= 0.0)) || (e.has_rec && !(e.e_rec >= 0.0))) {
      throw DataError(where + ": negative residual");
    }
    if (!e.has_for || !e.has_rec) ++frame.single_head_count;
    frame.entries.push_back(e);
  }
  std::sort(frame.entries.begin(), frame.entries.end(), [](const auto& a, const auto& b) {
    return std::tie(a.ne, a.feature, a.t) < std::tie(b.ne, b.feature, b.t);
  });
  return frame;
}

}  // namespace tadkit
