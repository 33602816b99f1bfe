#include "tadkit/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "tadkit/errors.hpp"
#include "tadkit/stats.hpp"

namespace tadkit {

using nlohmann::json;

namespace {

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string fmt_mean_sd(const std::vector<double>& xs) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f +/- %.4f", stats::mean(xs), stats::stddev(xs));
  return buf;
}

// Monospace table: first column left-aligned, the rest right-aligned.
std::string layout_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows,
                         const std::vector<size_t>& rule_after = {}) {
  std::vector<size_t> width(header.size());
  for (size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  size_t total = width.empty() ? 0 : 2 * (width.size() - 1);
  for (size_t w : width) total += w;
  const std::string rule(total, '-');

  auto emit_row = [&](const std::vector<std::string>& row, std::string& out) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) out += "  ";
      const size_t pad = width[c] - row[c].size();
      if (c == 0) {
        out += row[c];
        out.append(pad, ' ');
      } else {
        out.append(pad, ' ');
        out += row[c];
      }
    }
    out += '\n';
  };

  std::string out;
  emit_row(header, out);
  out += rule + "\n";
  std::set<size_t> rules(rule_after.begin(), rule_after.end());
  for (size_t r = 0; r < rows.size(); ++r) {
    emit_row(rows[r], out);
    if (rules.count(r)) out += rule + "\n";
  }
  return out;
}

std::string unit_label(const UnitMetrics& u, bool single_ne) {
  return single_ne ? u.feature : u.ne_id + "/" + u.feature;
}

const char* sig_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "ns";
}

json prf_json(const PRF& p) {
  return json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

}  // namespace

json metric_report_to_json(const MetricReport& report) {
  json units = json::array();
  for (const auto& u : report.units) {
    units.push_back({{"ne_id", u.ne_id},
                     {"feature", u.feature},
                     {"pointwise",
                      {{"tp", u.pointwise.tp},
                       {"fp", u.pointwise.fp},
                       {"fn", u.pointwise.fn},
                       {"prf", prf_json(u.pointwise.prf)}}},
                     {"affiliation",
                      {{"tp", u.affiliation.tp},
                       {"fp", u.affiliation.fp},
                       {"fn", u.affiliation.fn},
                       {"prf", prf_json(u.affiliation.prf)}}},
                     {"gt_events", u.gt_events},
                     {"pred_events", u.pred_events},
                     {"gt_points", u.gt_points},
                     {"pred_points", u.pred_points},
                     {"length", u.length}});
  }
  return json{{"units", units},
              {"macro", {{"pointwise", prf_json(report.macro_pointwise)},
                         {"affiliation", prf_json(report.macro_affiliation)}}},
              {"micro", {{"pointwise", prf_json(report.micro_pointwise)},
                         {"affiliation", prf_json(report.micro_affiliation)}}},
              {"union", {{"pointwise", prf_json(report.union_pointwise)},
                         {"affiliation", prf_json(report.union_affiliation)}}},
              {"counts",
               {{"gt_events", report.gt_events},
                {"pred_events", report.pred_events},
                {"gt_points", report.gt_points},
                {"pred_points", report.pred_points}}}};
}

std::string render_per_feature_table(const std::vector<NamedReport>& models, bool affiliation) {
  if (models.empty()) throw ContractError("no reports to render");
  const auto& units0 = models.front().report.units;
  for (const auto& m : models) {
    if (m.report.units.size() != units0.size()) {
      throw ContractError("reports cover different unit sets");
    }
  }
  std::set<std::string> nes;
  for (const auto& u : units0) nes.insert(u.ne_id);
  const bool single_ne = nes.size() <= 1;

  std::vector<std::string> header = {"Feature", "GT"};
  for (const auto& m : models) {
    header.push_back(m.name + " Pred");
    header.push_back(m.name + " F1");
  }
  if (!affiliation) header.push_back("prevalence");

  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < units0.size(); ++i) {
    std::vector<std::string> row;
    row.push_back(unit_label(units0[i], single_ne));
    row.push_back(std::to_string(affiliation ? units0[i].gt_events : units0[i].gt_points));
    for (const auto& m : models) {
      const auto& u = m.report.units[i];
      row.push_back(std::to_string(affiliation ? u.pred_events : u.pred_points));
      row.push_back(fmt3(affiliation ? u.affiliation.prf.f1 : u.pointwise.prf.f1));
    }
    if (!affiliation) {
      const auto& u = units0[i];
      row.push_back(fmt3(u.length > 0
                             ? static_cast<double>(u.gt_points) / static_cast<double>(u.length)
                             : 0.0));
    }
    rows.push_back(std::move(row));
  }
  std::string title = affiliation ? "Affiliation (event-level) F1 per feature\n"
                                  : "Pointwise (timestamp-level) F1 per feature\n";
  return title + layout_table(header, rows);
}

std::string render_aggregate_table(const std::vector<NamedReport>& models, bool affiliation) {
  if (models.empty()) throw ContractError("no reports to render");
  std::vector<std::string> header = {"Model",   "MacroP", "MacroR", "MacroF1", "MicroP",
                                     "MicroR",  "MicroF1", "UnionP", "UnionR", "UnionF1"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& m : models) {
    const auto& r = m.report;
    const PRF& mac = affiliation ? r.macro_affiliation : r.macro_pointwise;
    const PRF& mic = affiliation ? r.micro_affiliation : r.micro_pointwise;
    const PRF& uni = affiliation ? r.union_affiliation : r.union_pointwise;
    rows.push_back({m.name, fmt3(mac.precision), fmt3(mac.recall), fmt3(mac.f1),
                    fmt3(mic.precision), fmt3(mic.recall), fmt3(mic.f1), fmt3(uni.precision),
                    fmt3(uni.recall), fmt3(uni.f1)});
  }
  std::string out = affiliation ? "Aggregated affiliation scores\n" : "Aggregated pointwise scores\n";
  out += layout_table(header, rows);
  out += "Counts: ";
  for (size_t i = 0; i < models.size(); ++i) {
    const auto& r = models[i].report;
    if (i) out += "; ";
    out += models[i].name + " pred " +
           std::to_string(affiliation ? r.pred_events : r.pred_points);
  }
  out += "; GT " + std::to_string(affiliation ? models.front().report.gt_events
                                              : models.front().report.gt_points);
  out += affiliation ? " events\n" : " timestamps\n";
  return out;
}

std::string render_threshold_comparison(const MetricReport& pot, const MetricReport& exponential,
                                        bool affiliation) {
  if (pot.units.size() != exponential.units.size()) {
    throw ContractError("threshold comparison reports cover different unit sets");
  }
  std::set<std::string> nes;
  for (const auto& u : pot.units) nes.insert(u.ne_id);
  const bool single_ne = nes.size() <= 1;

  auto pick = [&](const UnitMetrics& u) -> const PRF& {
    return affiliation ? u.affiliation.prf : u.pointwise.prf;
  };
  std::vector<std::string> header = {"Feature", "POT P", "POT R", "POT F1",
                                     "Exp P",   "Exp R", "Exp F1"};
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < pot.units.size(); ++i) {
    const PRF& a = pick(pot.units[i]);
    const PRF& b = pick(exponential.units[i]);
    rows.push_back({unit_label(pot.units[i], single_ne), fmt3(a.precision), fmt3(a.recall),
                    fmt3(a.f1), fmt3(b.precision), fmt3(b.recall), fmt3(b.f1)});
  }
  const size_t unit_rows = rows.size();
  auto agg_row = [&](const char* name, const PRF& a, const PRF& b) {
    rows.push_back({name, fmt3(a.precision), fmt3(a.recall), fmt3(a.f1), fmt3(b.precision),
                    fmt3(b.recall), fmt3(b.f1)});
  };
  if (affiliation) {
    agg_row("Macro", pot.macro_affiliation, exponential.macro_affiliation);
    agg_row("Micro", pot.micro_affiliation, exponential.micro_affiliation);
    agg_row("Union", pot.union_affiliation, exponential.union_affiliation);
  } else {
    agg_row("Macro", pot.macro_pointwise, exponential.macro_pointwise);
    agg_row("Micro", pot.micro_pointwise, exponential.micro_pointwise);
    agg_row("Union", pot.union_pointwise, exponential.union_pointwise);
  }
  return "POT vs exponential thresholding (" +
         std::string(affiliation ? "affiliation" : "pointwise") + ")\n" +
         layout_table(header, rows, {unit_rows - 1});
}

std::string render_ablation_minima(const AblationReport& report) {
  std::vector<std::string> header = {"Configuration", "val_total|min", "val_forecast|min",
                                     "val_recon|min"};
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < report.variants.size(); ++i) {
    const auto& v = report.variants[i];
    std::string name = v.name;
    if (static_cast<int>(i) == report.baseline) name += " (baseline)";
    rows.push_back({name, fmt_mean_sd(v.val_total_min), fmt_mean_sd(v.val_forecast_min),
                    fmt_mean_sd(v.val_recon_min)});
  }
  return "Per-seed validation minima (mean +/- sd over " +
         std::to_string(report.seeds.size()) + " seeds)\n" + layout_table(header, rows);
}

std::string render_ablation_deltas(const AblationReport& report) {
  const auto& base = report.variants[static_cast<size_t>(report.baseline)];
  std::vector<size_t> others;
  std::vector<stats::PairedComparison> cmp;
  std::vector<double> pvals;
  for (size_t i = 0; i < report.variants.size(); ++i) {
    if (static_cast<int>(i) == report.baseline) continue;
    others.push_back(i);
    cmp.push_back(stats::paired_compare(report.variants[i].val_total_min, base.val_total_min));
    pvals.push_back(cmp.back().p_value);
  }
  const std::vector<double> p_adj = stats::bh_fdr(pvals);

  std::vector<std::string> header = {"Configuration", "Delta", "Delta%", "p_adj",
                                     "Sig",           "d",     "Jaccard"};
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < others.size(); ++i) {
    const auto& v = report.variants[others[i]];
    char dbuf[32], pctbuf[32], pbuf[32], cbuf[32];
    std::snprintf(dbuf, sizeof dbuf, "%+.5f", cmp[i].delta);
    std::snprintf(pctbuf, sizeof pctbuf, "%+.2f%%", cmp[i].delta_pct);
    std::snprintf(pbuf, sizeof pbuf, "%.4f", p_adj[i]);
    std::snprintf(cbuf, sizeof cbuf, "%+.3f", cmp[i].cohens_d);
    rows.push_back({v.name, dbuf, pctbuf, pbuf, sig_stars(p_adj[i]),
                    cbuf,
                    v.jaccard_vs_baseline.empty() ? "-" : fmt3(stats::mean(v.jaccard_vs_baseline))});
  }
  return "Paired differences to '" + base.name +
         "' on val_total|min (positive favours the baseline)\n" + layout_table(header, rows);
}

json ablation_report_to_json(const AblationReport& report) {
  const auto& base = report.variants[static_cast<size_t>(report.baseline)];
  json variants = json::array();
  std::vector<double> pvals;
  std::vector<size_t> others;
  std::vector<stats::PairedComparison> cmp;
  for (size_t i = 0; i < report.variants.size(); ++i) {
    if (static_cast<int>(i) == report.baseline) continue;
    others.push_back(i);
    cmp.push_back(stats::paired_compare(report.variants[i].val_total_min, base.val_total_min));
    pvals.push_back(cmp.back().p_value);
  }
  const std::vector<double> p_adj = stats::bh_fdr(pvals);

  for (size_t i = 0; i < report.variants.size(); ++i) {
    const auto& v = report.variants[i];
    json jv{{"name", v.name},
            {"is_baseline", static_cast<int>(i) == report.baseline},
            {"val_total_min", v.val_total_min},
            {"val_forecast_min", v.val_forecast_min},
            {"val_recon_min", v.val_recon_min}};
    if (!v.jaccard_vs_baseline.empty()) jv["jaccard_vs_baseline"] = v.jaccard_vs_baseline;
    for (size_t o = 0; o < others.size(); ++o) {
      if (others[o] != i) continue;
      jv["delta"] = cmp[o].delta;
      jv["delta_pct"] = cmp[o].delta_pct;
      jv["t_stat"] = cmp[o].t_stat;
      jv["p_value"] = cmp[o].p_value;
      jv["p_adj"] = p_adj[o];
      jv["cohens_d"] = cmp[o].cohens_d;
    }
    variants.push_back(std::move(jv));
  }
  return json{{"seeds", report.seeds}, {"baseline", base.name}, {"variants", variants}};
}

std::string render_jaccard_curve(const JaccardCurve& curve) {
  std::vector<std::string> header = {"Family", "mean J", "95% CI", "n"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : curve.points) {
    const double m = stats::mean(p.per_ne);
    const double half =
        1.96 * stats::stddev(p.per_ne) / std::sqrt(static_cast<double>(p.per_ne.size()));
    char ci[48];
    std::snprintf(ci, sizeof ci, "[%.3f, %.3f]", m - half, m + half);
    rows.push_back({p.family, fmt3(m), ci, std::to_string(p.per_ne.size())});
  }
  return "Anomaly-set Jaccard overlap vs per-NE baseline\n" + layout_table(header, rows);
}

json jaccard_curve_to_json(const JaccardCurve& curve) {
  json points = json::array();
  for (const auto& p : curve.points) {
    points.push_back({{"family", p.family},
                      {"per_ne", p.per_ne},
                      {"mean", stats::mean(p.per_ne)}});
  }
  return json{{"points", points}};
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  f << content;
}

void write_json_file(const std::string& path, const nlohmann::json& doc) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  f << doc.dump(2) << "\n";
}

}  // namespace tadkit
