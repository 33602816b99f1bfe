#pragma once

// Independent reference implementations the tests check the library
// against. Everything here is deliberately naive — quadratic scans,
// direct counting, central differences — and shares no code with the
// library paths under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "tadkit/graph.hpp"
#include "tadkit/tensor.hpp"

namespace oracle {

// ---------------------------------------------------------------- gradients

using GraphBuilder = std::function<tadkit::NodeId(tadkit::Graph&)>;

inline double eval_scalar(const GraphBuilder& build) {
  tadkit::Graph g;
  tadkit::NodeId loss = build(g);
  return g.value(loss).values()[0];
}

// d(loss)/d(p[i]) by central differences, one parameter tensor at a time.
// build() must construct a fresh graph from the *current* parameter values.
inline std::vector<double> fd_gradient(tadkit::Tensor& p, const GraphBuilder& build,
                                       double h = 1e-5) {
  std::vector<double> g(static_cast<std::size_t>(p.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double orig = p.mutable_values()[i];
    p.mutable_values()[i] = orig + h;
    const double up = eval_scalar(build);
    p.mutable_values()[i] = orig - h;
    const double dn = eval_scalar(build);
    p.mutable_values()[i] = orig;
    g[i] = (up - dn) / (2.0 * h);
  }
  return g;
}

inline std::vector<double> analytic_gradient(tadkit::Tensor& p, const GraphBuilder& build) {
  p.set_requires_grad(true);
  p.zero_grad();
  tadkit::Graph g;
  tadkit::NodeId loss = build(g);
  g.backward(loss);
  return p.grad();
}

// Relative error with an absolute floor so near-zero gradients compare
// on absolute terms.
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::fabs(a - b) / std::max({floor, std::fabs(a), std::fabs(b)});
}

inline double max_grad_rel_err(tadkit::Tensor& p, const GraphBuilder& build, double h = 1e-5) {
  const std::vector<double> fd = fd_gradient(p, build, h);
  const std::vector<double> an = analytic_gradient(p, build);
  double worst = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) worst = std::max(worst, rel_err(an[i], fd[i]));
  return worst;
}

// ------------------------------------------------------------ event metrics

struct Interval {
  int start = 0;
  int end = 0;  // inclusive
};

inline std::vector<Interval> merge_runs(const std::vector<std::uint8_t>& s) {
  std::vector<Interval> out;
  int i = 0;
  const int n = static_cast<int>(s.size());
  while (i < n) {
    if (!s[static_cast<std::size_t>(i)]) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && s[static_cast<std::size_t>(j + 1)]) ++j;
    out.push_back({i, j});
    i = j + 1;
  }
  return out;
}

inline bool overlaps(const Interval& a, const Interval& b) {
  return a.start <= b.end && b.start <= a.end;
}

struct Counts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};

// Event counting: a predicted event is a hit iff it overlaps any ground
// truth event; a ground truth event is missed iff no prediction touches it.
inline Counts event_counts(const std::vector<std::uint8_t>& gt,
                           const std::vector<std::uint8_t>& pred) {
  const auto ge = merge_runs(gt);
  const auto pe = merge_runs(pred);
  Counts c;
  for (const auto& p : pe) {
    bool hit = false;
    for (const auto& g : ge) hit = hit || overlaps(g, p);
    hit ? ++c.tp : ++c.fp;
  }
  for (const auto& g : ge) {
    bool covered = false;
    for (const auto& p : pe) covered = covered || overlaps(g, p);
    if (!covered) ++c.fn;
  }
  return c;
}

inline Counts point_counts(const std::vector<std::uint8_t>& gt,
                           const std::vector<std::uint8_t>& pred) {
  Counts c;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] && pred[i]) ++c.tp;
    if (!gt[i] && pred[i]) ++c.fp;
    if (gt[i] && !pred[i]) ++c.fn;
  }
  return c;
}

struct Prf {
  double p = 0.0;
  double r = 0.0;
  double f1 = 0.0;
};

inline Prf prf_of(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  Prf m;
  m.p = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.r = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = (m.p + m.r > 0) ? 2.0 * m.p * m.r / (m.p + m.r) : 0.0;
  return m;
}

// Event recall is over ground-truth events: R = (|G| - FN) / |G|.
inline Prf event_prf(const Counts& c, std::int64_t gt_events) {
  Prf m;
  m.p = (c.tp + c.fp) ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  m.r = gt_events ? static_cast<double>(gt_events - c.fn) / static_cast<double>(gt_events) : 0.0;
  m.f1 = (m.p + m.r > 0) ? 2.0 * m.p * m.r / (m.p + m.r) : 0.0;
  return m;
}

inline std::vector<std::uint8_t> random_stream(std::mt19937& rng, int length, double density) {
  std::bernoulli_distribution bit(density);
  std::vector<std::uint8_t> s(static_cast<std::size_t>(length));
  for (auto& v : s) v = bit(rng) ? 1 : 0;
  return s;
}

// ---------------------------------------------------------------- jaccard

template <typename Key>
double jaccard(const std::set<Key>& a, const std::set<Key>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& k : a) inter += b.count(k);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

}  // namespace oracle
