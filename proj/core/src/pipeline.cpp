#include "tadkit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tadkit/errors.hpp"
#include "tadkit/rng.hpp"

namespace tadkit {

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

SplitTable split_timeline(const TelemetryDataset& ds, double test_frac, double val_frac) {
  if (test_frac < 0 || test_frac >= 1 || val_frac < 0 || val_frac >= 1) {
    throw ConfigError("split fractions must lie in [0,1)");
  }
  SplitTable out;
  out.reserve(ds.nes.size());
  for (const auto& ne : ds.nes) {
    const int T = ne.T();
    const int trainval = static_cast<int>(std::floor(T * (1.0 - test_frac)));
    const int train = static_cast<int>(std::floor(trainval * (1.0 - val_frac)));
    out.push_back({train, trainval});
  }
  return out;
}

SplitTable load_splits(const CsvTable& table, const TelemetryDataset& ds) {
  const int c_ne = table.require_column("ne_id");
  const int c_tr = table.require_column("train_end");
  const int c_va = table.require_column("val_end");
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> bounds;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    std::string ctx = "splits row " + std::to_string(r + 2);
    std::int64_t tr = parse_timestamp(row[static_cast<size_t>(c_tr)], ctx);
    std::int64_t va = parse_timestamp(row[static_cast<size_t>(c_va)], ctx);
    if (va < tr) throw DataError(ctx + ": val_end precedes train_end");
    if (!bounds.emplace(row[static_cast<size_t>(c_ne)], std::make_pair(tr, va)).second) {
      throw DataError(ctx + ": duplicate ne_id");
    }
  }
  SplitTable out;
  out.reserve(ds.nes.size());
  for (const auto& ne : ds.nes) {
    auto it = bounds.find(ne.ne_id);
    if (it == bounds.end()) throw DataError("split file misses ne_id '" + ne.ne_id + "'");
    auto upper = [&](std::int64_t ts) {
      return static_cast<int>(std::upper_bound(ne.timestamps.begin(), ne.timestamps.end(), ts) -
                              ne.timestamps.begin());
    };
    out.push_back({upper(it->second.first), upper(it->second.second)});
  }
  return out;
}

SplitTable load_splits_file(const std::string& path, const TelemetryDataset& ds) {
  return load_splits(read_csv(path), ds);
}

std::vector<RemovalRecord> filter_eligible(TelemetryDataset& ds, SplitTable& splits, int L, int H,
                                           double max_missing_frac) {
  if (L <= 0 || H <= 0) throw ConfigError("window lengths must be positive");
  std::vector<RemovalRecord> removed;
  TelemetryDataset kept;
  kept.schema = ds.schema;
  SplitTable kept_splits;
  for (size_t i = 0; i < ds.nes.size(); ++i) {
    NESeries& ne = ds.nes[i];
    const SplitBounds& sb = splits[i];
    std::int64_t missing = 0;
    for (auto m : ne.mask) missing += m;
    double frac = ne.mask.empty() ? 1.0 : static_cast<double>(missing) / static_cast<double>(ne.mask.size());
    if (frac > max_missing_frac) {
      removed.push_back({ne.ne_id, "missing fraction " + format_double(frac) + " exceeds " +
                                       format_double(max_missing_frac)});
      continue;
    }
    const int lens[3] = {sb.train_end, sb.val_end - sb.train_end, ne.T() - sb.val_end};
    const char* names[3] = {"train", "val", "test"};
    bool ok = true;
    for (int s = 0; s < 3 && ok; ++s) {
      if (lens[s] == 0) continue;  // empty split carries no requirement
      if (lens[s] / (L + H) < 2) {
        removed.push_back({ne.ne_id, std::string("split ") + names[s] + " holds fewer than two " +
                                         std::to_string(L + H) + "-step windows"});
        ok = false;
      }
    }
    if (!ok) continue;
    kept.nes.push_back(std::move(ne));
    kept_splits.push_back(sb);
  }
  ds.nes = std::move(kept.nes);
  splits = std::move(kept_splits);
  return removed;
}

void OrdinalEncoder::fit(const std::vector<std::vector<std::string>>& columns) {
  maps_.clear();
  maps_.reserve(columns.size());
  for (const auto& col : columns) {
    std::set<std::string> uniq;
    for (const auto& v : col) {
      if (!v.empty()) uniq.insert(v);
    }
    std::map<std::string, int> m;
    int code = 1;
    for (const auto& v : uniq) m[v] = code++;
    maps_.push_back(std::move(m));
  }
}

int OrdinalEncoder::transform(int column, const std::string& value) const {
  if (column < 0 || column >= columns()) throw ContractError("encoder column out of range");
  if (value.empty()) return 0;
  const auto& m = maps_[static_cast<size_t>(column)];
  auto it = m.find(value);
  return it == m.end() ? 0 : it->second;
}

int OrdinalEncoder::vocab(int column) const {
  if (column < 0 || column >= columns()) throw ContractError("encoder column out of range");
  return static_cast<int>(maps_[static_cast<size_t>(column)].size()) + 1;
}

Scalers fit_scalers(const TelemetryDataset& ds, const SplitTable& splits, EncoderFit enc_fit) {
  if (splits.size() != ds.nes.size()) throw ContractError("split table does not match dataset");
  Scalers sc;
  const int k = ds.k();
  const int d_dyn = ds.d_dyn();

  for (size_t i = 0; i < ds.nes.size(); ++i) {
    const NESeries& ne = ds.nes[i];
    std::vector<Scalers::Range> ranges(static_cast<size_t>(k));
    for (int f = 0; f < k; ++f) {
      double lo = 0, hi = 0;
      bool seen = false;
      for (int t = 0; t < splits[i].train_end; ++t) {
        auto ix = static_cast<size_t>(t) * k + static_cast<size_t>(f);
        if (ne.mask[ix]) continue;
        double v = ne.x[ix];
        if (!seen) {
          lo = hi = v;
          seen = true;
        } else {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
      ranges[static_cast<size_t>(f)] = {lo, hi};  // all-masked: 0/0, zero-range guard applies
    }
    sc.kpi[ne.ne_id] = std::move(ranges);
  }

  sc.static_real.assign(static_cast<size_t>(ds.d_static_real()), {0.0, 0.0});
  for (int c = 0; c < ds.d_static_real(); ++c) {
    bool seen = false;
    for (const auto& ne : ds.nes) {
      double v = ne.static_real[static_cast<size_t>(c)];
      auto& r = sc.static_real[static_cast<size_t>(c)];
      if (!seen) {
        r = {v, v};
        seen = true;
      } else {
        r.lo = std::min(r.lo, v);
        r.hi = std::max(r.hi, v);
      }
    }
  }

  auto collect = [&](bool dynamic) {
    std::vector<std::vector<std::string>> cols;
    if (dynamic) {
      cols.resize(static_cast<size_t>(d_dyn));
      for (size_t i = 0; i < ds.nes.size(); ++i) {
        const NESeries& ne = ds.nes[i];
        const int limit = enc_fit == EncoderFit::kTrainOnly ? splits[i].train_end : ne.T();
        for (int t = 0; t < limit; ++t) {
          for (int c = 0; c < d_dyn; ++c) {
            cols[static_cast<size_t>(c)].push_back(
                ne.dyn_cat_raw[static_cast<size_t>(t) * d_dyn + static_cast<size_t>(c)]);
          }
        }
      }
    } else {
      cols.resize(static_cast<size_t>(ds.d_static_cat()));
      for (const auto& ne : ds.nes) {
        for (int c = 0; c < ds.d_static_cat(); ++c) {
          cols[static_cast<size_t>(c)].push_back(ne.static_cat_raw[static_cast<size_t>(c)]);
        }
      }
    }
    return cols;
  };
  sc.dyn_encoder.fit(collect(true));
  sc.static_encoder.fit(collect(false));
  return sc;
}

void apply_scalers(TelemetryDataset& ds, const Scalers& sc) {
  const int k = ds.k();
  const int d_dyn = ds.d_dyn();
  for (auto& ne : ds.nes) {
    auto it = sc.kpi.find(ne.ne_id);
    if (it == sc.kpi.end()) throw ContractError("no scaler fitted for ne '" + ne.ne_id + "'");
    const auto& ranges = it->second;
    for (int t = 0; t < ne.T(); ++t) {
      for (int f = 0; f < k; ++f) {
        auto ix = static_cast<size_t>(t) * k + static_cast<size_t>(f);
        if (ne.mask[ix]) {
          ne.x[ix] = 0.0;  // masked cells are exactly 0 in model space
          continue;
        }
        const auto& r = ranges[static_cast<size_t>(f)];
        double span = r.hi - r.lo;
        ne.x[ix] = span > 0 ? (ne.x[ix] - r.lo) / span : 0.0;
      }
    }
    for (size_t c = 0; c < ne.static_real.size(); ++c) {
      const auto& r = sc.static_real[c];
      double span = r.hi - r.lo;
      ne.static_real[c] = span > 0 ? (ne.static_real[c] - r.lo) / span : 0.0;
    }
    ne.dyn_cat.assign(static_cast<size_t>(ne.T()) * d_dyn, 0);
    for (int t = 0; t < ne.T(); ++t) {
      for (int c = 0; c < d_dyn; ++c) {
        auto ix = static_cast<size_t>(t) * d_dyn + static_cast<size_t>(c);
        ne.dyn_cat[ix] = sc.dyn_encoder.transform(c, ne.dyn_cat_raw[ix]);
      }
    }
    ne.static_cat.assign(ne.static_cat_raw.size(), 0);
    for (size_t c = 0; c < ne.static_cat_raw.size(); ++c) {
      ne.static_cat[c] = sc.static_encoder.transform(static_cast<int>(c), ne.static_cat_raw[c]);
    }
  }
}

double inverse_scale_kpi(const Scalers& sc, const std::string& ne_id, int feature, double v) {
  auto it = sc.kpi.find(ne_id);
  if (it == sc.kpi.end()) throw ContractError("no scaler fitted for ne '" + ne_id + "'");
  const auto& r = it->second[static_cast<size_t>(feature)];
  double span = r.hi - r.lo;
  return span > 0 ? v * span + r.lo : r.lo;
}

std::vector<WindowRef> enumerate_windows(const TelemetryDataset& ds, const SplitTable& splits,
                                         int L, int H, int S) {
  if (L <= 0 || H <= 0 || S <= 0) throw ConfigError("window geometry must be positive");
  if (splits.size() != ds.nes.size()) throw ContractError("split table does not match dataset");
  std::vector<WindowRef> out;
  for (size_t i = 0; i < ds.nes.size(); ++i) {
    const int T = ds.nes[i].T();
    const SplitBounds& sb = splits[i];
    const int starts[3] = {0, sb.train_end, sb.val_end};
    const int ends[3] = {sb.train_end, sb.val_end, T};
    const Split tags[3] = {Split::kTrain, Split::kVal, Split::kTest};
    for (int s = 0; s < 3; ++s) {
      for (int t0 = starts[s]; t0 + L + H <= ends[s]; t0 += S) {
        out.push_back({static_cast<int>(i), t0, tags[s]});
      }
    }
  }
  return out;
}

std::vector<WindowRef> windows_of_split(const std::vector<WindowRef>& all, Split split) {
  std::vector<WindowRef> out;
  for (const auto& w : all) {
    if (w.split == split) out.push_back(w);
  }
  return out;
}

std::vector<std::vector<WindowRef>> plan_batches(std::vector<WindowRef> refs, int batch_size,
                                                 std::uint64_t shuffle_seed, bool shuffle) {
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (shuffle) {
    Rng rng(shuffle_seed);
    rng.shuffle(refs);
  }
  std::vector<std::vector<WindowRef>> out;
  for (size_t i = 0; i < refs.size(); i += static_cast<size_t>(batch_size)) {
    size_t end = std::min(refs.size(), i + static_cast<size_t>(batch_size));
    out.emplace_back(refs.begin() + static_cast<std::ptrdiff_t>(i),
                     refs.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

WindowBatch build_batch(const TelemetryDataset& ds, const std::vector<WindowRef>& refs, int L,
                        int H) {
  if (refs.empty()) throw ContractError("build_batch: empty window list");
  WindowBatch b;
  b.B = static_cast<int>(refs.size());
  b.L = L;
  b.H = H;
  b.k = ds.k();
  const int d_dyn = ds.d_dyn();
  const int d_stat = ds.d_static_cat();
  const int d_real = ds.d_static_real();

  std::vector<double> inputs(static_cast<size_t>(b.B) * L * b.k);
  std::vector<double> targets(static_cast<size_t>(b.B) * H * b.k);
  b.dyn_codes.resize(static_cast<size_t>(b.B) * L * d_dyn);
  b.static_codes.resize(static_cast<size_t>(b.B) * d_stat);
  std::vector<double> sreal(static_cast<size_t>(b.B) * d_real);

  for (int w = 0; w < b.B; ++w) {
    const WindowRef& r = refs[static_cast<size_t>(w)];
    const NESeries& ne = ds.nes[static_cast<size_t>(r.ne)];
    if (ne.dyn_cat.empty() && d_dyn > 0) {
      throw ContractError("build_batch: dataset not encoded (apply_scalers first)");
    }
    if (r.t0 < 0 || r.t0 + L + H > ne.T()) throw ContractError("build_batch: window out of range");
    std::copy(ne.x.begin() + static_cast<std::ptrdiff_t>(r.t0) * b.k,
              ne.x.begin() + static_cast<std::ptrdiff_t>(r.t0 + L) * b.k,
              inputs.begin() + static_cast<std::ptrdiff_t>(w) * L * b.k);
    std::copy(ne.x.begin() + static_cast<std::ptrdiff_t>(r.t0 + L) * b.k,
              ne.x.begin() + static_cast<std::ptrdiff_t>(r.t0 + L + H) * b.k,
              targets.begin() + static_cast<std::ptrdiff_t>(w) * H * b.k);
    if (d_dyn > 0) {
      for (int t = 0; t < L; ++t) {
        for (int c = 0; c < d_dyn; ++c) {
          b.dyn_codes[(static_cast<size_t>(w) * L + static_cast<size_t>(t)) * d_dyn +
                      static_cast<size_t>(c)] =
              ne.dyn_cat[static_cast<size_t>(r.t0 + t) * d_dyn + static_cast<size_t>(c)];
        }
      }
    }
    for (int c = 0; c < d_stat; ++c) {
      b.static_codes[static_cast<size_t>(w) * d_stat + static_cast<size_t>(c)] =
          ne.static_cat[static_cast<size_t>(c)];
    }
    for (int c = 0; c < d_real; ++c) {
      sreal[static_cast<size_t>(w) * d_real + static_cast<size_t>(c)] =
          ne.static_real[static_cast<size_t>(c)];
    }
  }

  b.inputs = Tensor::raw({b.B, L, b.k}, std::move(inputs));
  b.targets = Tensor::raw({b.B, H, b.k}, std::move(targets));
  if (d_real > 0) b.static_reals = Tensor::raw({b.B, d_real}, std::move(sreal));
  b.refs = refs;
  return b;
}

}  // namespace tadkit
