#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "tadkit/dataset.hpp"
#include "tadkit/errors.hpp"
#include "tadkit/pipeline.hpp"

using tadkit::DatasetSchema;
using tadkit::Split;
using tadkit::TelemetryDataset;

namespace {

// Two NEs, 2 KPIs on an hourly grid starting 2024-01-01. Values are chosen
// so scaling is easy to verify: n1 feature a counts 0..T-1, feature b is
// 10*a; n2 runs the other way.
TelemetryDataset grid_dataset(int T, bool with_gap = false) {
  DatasetSchema schema;
  schema.dynamic_real = {"a", "b"};
  schema.dynamic_cat = {"hour"};
  schema.static_cat = {"site"};
  schema.static_real = {"cap"};
  std::string csv = "ne_id,timestamp,a,b,hour,site,cap\n";
  const std::int64_t t0 = 1704067200;
  for (int ne = 0; ne < 2; ++ne) {
    for (int t = 0; t < T; ++t) {
      if (with_gap && ne == 0 && t == 3) continue;  // hole in n1's timeline
      int v = ne == 0 ? t : T - t;
      csv += (ne == 0 ? "n1," : "n2,") + tadkit::format_timestamp_iso(t0 + t * 3600) + "," +
             std::to_string(v) + "," + std::to_string(10 * v) + "," + std::to_string(t % 24) +
             (ne == 0 ? ",alpha," : ",beta,") + (ne == 0 ? "0.5" : "1.5") + "\n";
    }
  }
  return tadkit::ingest_csv(tadkit::parse_csv(csv, "test"), schema, false);
}

}  // namespace

TEST_CASE("fractional splits use floor rounding and stay chronological") {
  TelemetryDataset ds = grid_dataset(20);
  auto splits = tadkit::split_timeline(ds, 0.2, 0.25);
  REQUIRE(splits.size() == 2);
  // trainval = floor(20*0.8) = 16, train = floor(16*0.75) = 12
  CHECK(splits[0].train_end == 12);
  CHECK(splits[0].val_end == 16);
  CHECK_THROWS_AS(tadkit::split_timeline(ds, 1.0, 0.2), tadkit::ConfigError);
}

TEST_CASE("split files map inclusive last timestamps to row bounds") {
  TelemetryDataset ds = grid_dataset(20);
  const std::string t_end9 = tadkit::format_timestamp_iso(1704067200 + 9 * 3600);
  const std::string t_end14 = tadkit::format_timestamp_iso(1704067200 + 14 * 3600);
  auto splits = tadkit::load_splits(
      tadkit::parse_csv("ne_id,train_end,val_end\nn1," + t_end9 + "," + t_end14 + "\nn2," +
                            t_end9 + "," + t_end14 + "\n",
                        "t"),
      ds);
  CHECK(splits[0].train_end == 10);  // rows 0..9 inclusive
  CHECK(splits[0].val_end == 15);

  CHECK_THROWS_AS(
      tadkit::load_splits(
          tadkit::parse_csv("ne_id,train_end,val_end\nn1," + t_end9 + "," + t_end14 + "\n", "t"),
          ds),
      tadkit::DataError);  // n2 missing
  CHECK_THROWS_AS(
      tadkit::load_splits(
          tadkit::parse_csv("ne_id,train_end,val_end\nn1," + t_end14 + "," + t_end9 + "\nn2," +
                                t_end9 + "," + t_end14 + "\n",
                            "t"),
          ds),
      tadkit::DataError);  // val before train
}

TEST_CASE("eligibility filter drops gappy or short NEs with reasons") {
  TelemetryDataset ds = grid_dataset(20, true);
  auto splits = tadkit::split_timeline(ds, 0.2, 0.25);

  SUBCASE("missing fraction gate") {
    // n1 has 1 gap row = 2 masked cells of 40 -> 5%; gate at 4% drops it
    auto removed = tadkit::filter_eligible(ds, splits, 1, 1, 0.04);
    REQUIRE(removed.size() == 1);
    CHECK(removed[0].ne_id == "n1");
    CHECK(removed[0].reason.find("missing fraction") != std::string::npos);
    REQUIRE(ds.nes.size() == 1);
    CHECK(ds.nes[0].ne_id == "n2");
    CHECK(splits.size() == 1);
  }

  SUBCASE("history gate needs two windows per non-empty split") {
    // L+H = 8: train block of 12 rows holds only one 8-window
    auto removed = tadkit::filter_eligible(ds, splits, 6, 2, 0.5);
    CHECK(removed.size() == 2);
    CHECK(ds.nes.empty());
  }

  SUBCASE("everything passes with generous gates") {
    auto removed = tadkit::filter_eligible(ds, splits, 1, 1, 0.5);
    CHECK(removed.empty());
    CHECK(ds.nes.size() == 2);
  }
}

TEST_CASE("ordinal encoder reserves code 0 for missing and unseen") {
  tadkit::OrdinalEncoder enc;
  enc.fit({{"b", "a", "b", "", "c"}});
  CHECK(enc.vocab(0) == 4);  // a,b,c + null
  CHECK(enc.transform(0, "a") == 1);  // lexicographic order
  CHECK(enc.transform(0, "b") == 2);
  CHECK(enc.transform(0, "c") == 3);
  CHECK(enc.transform(0, "") == 0);
  CHECK(enc.transform(0, "zz") == 0);
  CHECK_THROWS_AS(enc.transform(1, "a"), tadkit::ContractError);
}

TEST_CASE("scalers fit on train rows only and map masked cells to zero") {
  TelemetryDataset ds = grid_dataset(20, true);
  auto splits = tadkit::split_timeline(ds, 0.2, 0.25);  // train rows [0,12)
  auto sc = tadkit::fit_scalers(ds, splits, tadkit::EncoderFit::kFullDataset);

  // n1 feature a sees 0..11 minus the masked row 3 -> range [0,11]
  CHECK(sc.kpi.at("n1")[0].lo == 0.0);
  CHECK(sc.kpi.at("n1")[0].hi == 11.0);
  // n2 feature a runs 20-t over rows 0..11 -> [9,20]
  CHECK(sc.kpi.at("n2")[0].lo == 9.0);
  CHECK(sc.kpi.at("n2")[0].hi == 20.0);
  // static reals fit globally
  CHECK(sc.static_real[0].lo == 0.5);
  CHECK(sc.static_real[0].hi == 1.5);

  tadkit::apply_scalers(ds, sc);
  const auto& n1 = ds.nes[0];
  CHECK(n1.x[0] == 0.0);
  CHECK(n1.x[11 * 2] == 1.0);
  CHECK(n1.x[3 * 2] == 0.0);       // masked row pinned to 0
  CHECK(n1.x[19 * 2] > 1.0);       // beyond the train range, no clipping
  CHECK(n1.static_real[0] == 0.0); // 0.5 of [0.5,1.5]
  CHECK(ds.nes[1].static_real[0] == 1.0);

  // categorical codes populated
  CHECK(n1.dyn_cat.size() == static_cast<std::size_t>(n1.T()));
  CHECK(n1.static_cat[0] == sc.static_encoder.transform(0, "alpha"));

  // inverse undoes the forward map for unmasked cells
  double v = tadkit::inverse_scale_kpi(sc, "n1", 0, n1.x[11 * 2]);
  CHECK(v == doctest::Approx(11.0));
}

TEST_CASE("zero-range features scale to exactly zero") {
  DatasetSchema schema;
  schema.dynamic_real = {"flat"};
  std::string csv = "ne_id,timestamp,flat\n";
  for (int t = 0; t < 10; ++t) {
    csv += "n1," + tadkit::format_timestamp_iso(1704067200 + t * 3600) + ",7\n";
  }
  TelemetryDataset ds = tadkit::ingest_csv(tadkit::parse_csv(csv, "t"), schema, false);
  auto splits = tadkit::split_timeline(ds, 0.2, 0.25);
  auto sc = tadkit::fit_scalers(ds, splits, tadkit::EncoderFit::kFullDataset);
  tadkit::apply_scalers(ds, sc);
  for (double v : ds.nes[0].x) CHECK(v == 0.0);
  CHECK(tadkit::inverse_scale_kpi(sc, "n1", 0, 0.0) == 7.0);
}

TEST_CASE("window enumeration respects stride and split containment") {
  TelemetryDataset ds = grid_dataset(40);
  tadkit::SplitTable splits{{20, 30}, {20, 30}};

  auto windows = tadkit::enumerate_windows(ds, splits, 6, 2, 3);
  for (const auto& w : windows) {
    const int lo = w.split == Split::kTrain ? 0 : (w.split == Split::kVal ? 20 : 30);
    const int hi = w.split == Split::kTrain ? 20 : (w.split == Split::kVal ? 30 : 40);
    CHECK(w.t0 >= lo);
    CHECK(w.t0 + 6 + 2 <= hi);
    CHECK((w.t0 - lo) % 3 == 0);
  }
  // train block [0,20): starts 0,3,6,9,12; val [20,30) and test [30,40): start 20 resp. 30 only
  auto count = [&](Split s) {
    return std::count_if(windows.begin(), windows.end(),
                         [&](const tadkit::WindowRef& w) { return w.split == s; });
  };
  CHECK(count(Split::kTrain) == 2 * 5);
  CHECK(count(Split::kVal) == 2 * 1);
  CHECK(count(Split::kTest) == 2 * 1);
  CHECK(tadkit::windows_of_split(windows, Split::kVal).size() == 2);
}

TEST_CASE("batch planning shuffles deterministically and keeps the tail") {
  TelemetryDataset ds = grid_dataset(40);
  tadkit::SplitTable splits{{20, 30}, {20, 30}};
  auto windows = tadkit::enumerate_windows(ds, splits, 6, 2, 3);
  auto train = tadkit::windows_of_split(windows, Split::kTrain);  // 10 windows

  auto plain = tadkit::plan_batches(train, 4, 0, false);
  REQUIRE(plain.size() == 3);
  CHECK(plain[0].size() == 4);
  CHECK(plain[2].size() == 2);  // final partial batch kept
  CHECK(plain[0][0].t0 == train[0].t0);

  auto shuf1 = tadkit::plan_batches(train, 4, 99, true);
  auto shuf2 = tadkit::plan_batches(train, 4, 99, true);
  auto shuf3 = tadkit::plan_batches(train, 4, 100, true);
  CHECK(shuf1[0][0].ne == shuf2[0][0].ne);
  CHECK(shuf1[0][0].t0 == shuf2[0][0].t0);
  bool same_as_3 = true;
  for (std::size_t b = 0; b < shuf1.size() && same_as_3; ++b) {
    for (std::size_t i = 0; i < shuf1[b].size() && same_as_3; ++i) {
      same_as_3 = shuf1[b][i].ne == shuf3[b][i].ne && shuf1[b][i].t0 == shuf3[b][i].t0;
    }
  }
  CHECK(!same_as_3);

  // all windows appear exactly once after shuffling
  std::set<std::pair<int, int>> seen;
  for (const auto& b : shuf1) {
    for (const auto& w : b) seen.insert({w.ne, w.t0});
  }
  CHECK(seen.size() == train.size());
}

TEST_CASE("batches carry inputs, targets, codes and statics in window order") {
  TelemetryDataset ds = grid_dataset(40);
  tadkit::SplitTable splits{{20, 30}, {20, 30}};
  auto sc = tadkit::fit_scalers(ds, splits, tadkit::EncoderFit::kFullDataset);
  tadkit::apply_scalers(ds, sc);

  std::vector<tadkit::WindowRef> refs{{0, 2, Split::kTrain}, {1, 5, Split::kTrain}};
  auto batch = tadkit::build_batch(ds, refs, 6, 2);
  CHECK(batch.B == 2);
  CHECK(batch.L == 6);
  CHECK(batch.H == 2);
  CHECK(batch.k == 2);
  CHECK(batch.inputs.shape() == std::vector<int>{2, 6, 2});
  CHECK(batch.targets.shape() == std::vector<int>{2, 2, 2});

  // window 0 input row 0 is ne0 row 2; target row 0 is ne0 row 8
  CHECK(batch.inputs.at({0, 0, 0}) == ds.nes[0].x[2 * 2 + 0]);
  CHECK(batch.inputs.at({0, 5, 1}) == ds.nes[0].x[7 * 2 + 1]);
  CHECK(batch.targets.at({0, 0, 0}) == ds.nes[0].x[8 * 2 + 0]);
  CHECK(batch.targets.at({0, 1, 1}) == ds.nes[0].x[9 * 2 + 1]);
  CHECK(batch.inputs.at({1, 0, 0}) == ds.nes[1].x[5 * 2 + 0]);

  // per-timestep categorical codes flattened [B,L,d_dyn]
  REQUIRE(batch.dyn_codes.size() == 2 * 6 * 1);
  CHECK(batch.dyn_codes[0] == ds.nes[0].dyn_cat[2]);
  CHECK(batch.static_codes.size() == 2);
  CHECK(batch.static_reals.shape() == std::vector<int>{2, 1});
  CHECK(batch.static_reals.at({1, 0}) == ds.nes[1].static_real[0]);
}
