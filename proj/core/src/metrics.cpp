#include "tadkit/metrics.hpp"

#include <algorithm>
#include <map>

#include "tadkit/errors.hpp"
#include "tadkit/rng.hpp"

namespace tadkit {

std::vector<EventInterval> merge_events(const std::vector<std::uint8_t>& stream) {
  std::vector<EventInterval> events;
  int start = -1;
  for (int t = 0; t < static_cast<int>(stream.size()); ++t) {
    if (stream[static_cast<size_t>(t)]) {
      if (start < 0) start = t;
    } else if (start >= 0) {
      events.push_back({start, t - 1});
      start = -1;
    }
  }
  if (start >= 0) events.push_back({start, static_cast<int>(stream.size()) - 1});
  return events;
}

std::vector<std::uint8_t> expand_events(const std::vector<EventInterval>& events, int length) {
  std::vector<std::uint8_t> stream(static_cast<size_t>(length), 0);
  for (const auto& ev : events) {
    if (ev.start < 0 || ev.end >= length || ev.start > ev.end) {
      throw ContractError("event interval outside stream bounds");
    }
    for (int t = ev.start; t <= ev.end; ++t) stream[static_cast<size_t>(t)] = 1;
  }
  return stream;
}

double iou(const EventInterval& a, const EventInterval& b) {
  const int lo = std::max(a.start, b.start);
  const int hi = std::min(a.end, b.end);
  if (lo > hi) return 0.0;
  const double inter = hi - lo + 1;
  const double len_a = a.end - a.start + 1;
  const double len_b = b.end - b.start + 1;
  return inter / (len_a + len_b - inter);
}

PRF prf_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  PRF r;
  r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

namespace {

// P counts predicted events, R counts covered ground-truth events.
PRF affiliation_prf_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn,
                                std::int64_t gt_total) {
  PRF prf;
  prf.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  prf.recall = gt_total > 0 ? static_cast<double>(gt_total - fn) / static_cast<double>(gt_total)
                            : 0.0;
  prf.f1 = prf.precision + prf.recall > 0.0
               ? 2.0 * prf.precision * prf.recall / (prf.precision + prf.recall)
               : 0.0;
  return prf;
}

}  // namespace

AffiliationResult affiliation_prf(const std::vector<EventInterval>& gt,
                                  const std::vector<EventInterval>& pred) {
  AffiliationResult r;
  for (const auto& p : pred) {
    // Affiliation to the argmax-IoU gt event; strict > keeps the
    // earliest-starting event on ties. Only overlap-vs-not matters for TP.
    double best = 0.0;
    for (const auto& g : gt) best = std::max(best, iou(g, p));
    if (best > 0.0) {
      ++r.tp;
    } else {
      ++r.fp;
    }
  }
  for (const auto& g : gt) {
    bool overlapped = false;
    for (const auto& p : pred) {
      if (iou(g, p) > 0.0) {
        overlapped = true;
        break;
      }
    }
    if (!overlapped) ++r.fn;
  }
  r.prf = affiliation_prf_from_counts(r.tp, r.fp, r.fn, static_cast<std::int64_t>(gt.size()));
  return r;
}

PointwiseResult pointwise_prf(const std::vector<std::uint8_t>& gt,
                              const std::vector<std::uint8_t>& pred) {
  if (gt.size() != pred.size()) throw ContractError("pointwise streams differ in length");
  PointwiseResult r;
  for (size_t t = 0; t < gt.size(); ++t) {
    if (gt[t] && pred[t]) ++r.tp;
    else if (!gt[t] && pred[t]) ++r.fp;
    else if (gt[t] && !pred[t]) ++r.fn;
  }
  r.prf = prf_from_counts(r.tp, r.fp, r.fn);
  return r;
}

namespace {

PRF macro_mean(const std::vector<PRF>& parts) {
  PRF m;
  if (parts.empty()) return m;
  for (const auto& p : parts) {
    m.precision += p.precision;
    m.recall += p.recall;
    m.f1 += p.f1;
  }
  const auto n = static_cast<double>(parts.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

}  // namespace

MetricReport evaluate_streams(const std::vector<StreamPair>& streams) {
  MetricReport report;
  std::vector<PRF> point_parts, aff_parts;
  std::int64_t mic_p_tp = 0, mic_p_fp = 0, mic_p_fn = 0;
  std::int64_t mic_a_tp = 0, mic_a_fp = 0, mic_a_fn = 0, mic_a_gt = 0;

  for (const auto& s : streams) {
    if (s.gt.size() != s.pred.size()) throw ContractError("stream pair lengths differ");
    UnitMetrics u;
    u.ne_id = s.ne_id;
    u.feature = s.feature;
    u.length = static_cast<std::int64_t>(s.gt.size());
    u.pointwise = pointwise_prf(s.gt, s.pred);
    const auto gt_events = merge_events(s.gt);
    const auto pred_events = merge_events(s.pred);
    u.affiliation = affiliation_prf(gt_events, pred_events);
    u.gt_events = static_cast<std::int64_t>(gt_events.size());
    u.pred_events = static_cast<std::int64_t>(pred_events.size());
    for (auto v : s.gt) u.gt_points += v;
    for (auto v : s.pred) u.pred_points += v;

    point_parts.push_back(u.pointwise.prf);
    aff_parts.push_back(u.affiliation.prf);
    mic_p_tp += u.pointwise.tp;
    mic_p_fp += u.pointwise.fp;
    mic_p_fn += u.pointwise.fn;
    mic_a_tp += u.affiliation.tp;
    mic_a_fp += u.affiliation.fp;
    mic_a_fn += u.affiliation.fn;
    mic_a_gt += u.gt_events;

    report.gt_events += u.gt_events;
    report.pred_events += u.pred_events;
    report.gt_points += u.gt_points;
    report.pred_points += u.pred_points;
    report.units.push_back(std::move(u));
  }

  report.macro_pointwise = macro_mean(point_parts);
  report.macro_affiliation = macro_mean(aff_parts);
  report.micro_pointwise = prf_from_counts(mic_p_tp, mic_p_fp, mic_p_fn);
  report.micro_affiliation = affiliation_prf_from_counts(mic_a_tp, mic_a_fp, mic_a_fn, mic_a_gt);

  // Union: OR the features of each NE into one stream, then pool across NEs.
  std::map<std::string, std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>>> per_ne;
  for (const auto& s : streams) {
    auto& [gt, pred] = per_ne[s.ne_id];
    if (gt.empty()) {
      gt = s.gt;
      pred = s.pred;
    } else {
      if (gt.size() != s.gt.size()) throw ContractError("union streams differ in length within NE");
      for (size_t t = 0; t < gt.size(); ++t) {
        gt[t] |= s.gt[t];
        pred[t] |= s.pred[t];
      }
    }
  }
  std::int64_t uni_p_tp = 0, uni_p_fp = 0, uni_p_fn = 0;
  std::int64_t uni_a_tp = 0, uni_a_fp = 0, uni_a_fn = 0, uni_a_gt = 0;
  for (const auto& [ne_id, pair] : per_ne) {
    const auto pw = pointwise_prf(pair.first, pair.second);
    uni_p_tp += pw.tp;
    uni_p_fp += pw.fp;
    uni_p_fn += pw.fn;
    const auto gt_events = merge_events(pair.first);
    const auto aff = affiliation_prf(gt_events, merge_events(pair.second));
    uni_a_tp += aff.tp;
    uni_a_fp += aff.fp;
    uni_a_fn += aff.fn;
    uni_a_gt += static_cast<std::int64_t>(gt_events.size());
  }
  report.union_pointwise = prf_from_counts(uni_p_tp, uni_p_fp, uni_p_fn);
  report.union_affiliation = affiliation_prf_from_counts(uni_a_tp, uni_a_fp, uni_a_fn, uni_a_gt);
  return report;
}

std::vector<StreamPair> random_baseline(const std::vector<StreamPair>& streams, std::uint64_t seed) {
  std::vector<StreamPair> out = streams;
  for (auto& s : out) {
    Rng rng(Rng::derive(seed, "random-baseline." + s.ne_id + "." + s.feature));
    std::int64_t positives = 0;
    for (auto v : s.gt) positives += v;
    const double prevalence =
        s.gt.empty() ? 0.0 : static_cast<double>(positives) / static_cast<double>(s.gt.size());
    for (auto& v : s.pred) v = rng.bernoulli(prevalence) ? 1 : 0;
  }
  return out;
}

double jaccard_overlap(std::vector<LabelKey> a, std::vector<LabelKey> b) {
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  if (a.empty() && b.empty()) return 1.0;
  std::vector<LabelKey> inter;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
  const auto uni = a.size() + b.size() - inter.size();
  return static_cast<double>(inter.size()) / static_cast<double>(uni);
}

std::vector<LabelKey> decision_keys(const DecisionFrame& frame, const TelemetryDataset& ds) {
  std::vector<LabelKey> keys;
  for (const auto& d : frame.decisions) {
    if (!d.flagged) continue;
    keys.push_back(
        {d.ne, d.feature, ds.nes[static_cast<size_t>(d.ne)].timestamps[static_cast<size_t>(d.t)]});
  }
  return keys;
}

std::vector<StreamPair> build_streams(const DecisionFrame& decisions,
                                      const std::vector<LabelKey>& labels,
                                      const TelemetryDataset& ds, const SplitTable& splits,
                                      Split split) {
  auto range_of = [&](int ne) {
    const SplitBounds& b = splits[static_cast<size_t>(ne)];
    int lo = 0, hi = ds.nes[static_cast<size_t>(ne)].T();
    switch (split) {
      case Split::kTrain: hi = b.train_end; break;
      case Split::kVal: lo = b.train_end; hi = b.val_end; break;
      case Split::kTest: lo = b.val_end; break;
    }
    return std::pair{lo, hi};
  };

  std::vector<StreamPair> streams;
  std::map<std::pair<int, int>, size_t> slot;  // (ne, feature) -> stream index
  for (int ne = 0; ne < static_cast<int>(ds.nes.size()); ++ne) {
    const auto [lo, hi] = range_of(ne);
    if (lo >= hi) continue;
    const NESeries& series = ds.nes[static_cast<size_t>(ne)];
    for (int f = 0; f < ds.k(); ++f) {
      StreamPair s;
      s.ne_id = series.ne_id;
      s.feature = ds.schema.dynamic_real[static_cast<size_t>(f)];
      s.gt.assign(static_cast<size_t>(hi - lo), 0);
      s.pred.assign(static_cast<size_t>(hi - lo), 0);
      slot[{ne, f}] = streams.size();
      streams.push_back(std::move(s));
    }
  }

  for (const auto& d : decisions.decisions) {
    if (d.split != split) continue;
    auto [lo, hi] = range_of(d.ne);
    if (d.t < lo || d.t >= hi) throw ContractError("decision row outside its split range");
    streams[slot.at({d.ne, d.feature})].pred[static_cast<size_t>(d.t - lo)] = d.flagged ? 1 : 0;
  }
  for (const auto& key : labels) {
    const NESeries& series = ds.nes[static_cast<size_t>(key.ne)];
    auto it = std::lower_bound(series.timestamps.begin(), series.timestamps.end(), key.ts);
    if (it == series.timestamps.end() || *it != key.ts) continue;  // off-grid label
    const int t = static_cast<int>(it - series.timestamps.begin());
    auto [lo, hi] = range_of(key.ne);
    if (t < lo || t >= hi) continue;  // label belongs to another split
    auto sit = slot.find({key.ne, key.feature});
    if (sit == slot.end()) continue;
    streams[sit->second].gt[static_cast<size_t>(t - lo)] = 1;
  }
  return streams;
}

}  // namespace tadkit
