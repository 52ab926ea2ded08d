#include "realvul/report.hpp"

#include <algorithm>
#include <cstdio>

#include "realvul/error.hpp"
#include "realvul/text.hpp"

namespace realvul::report {

using evaluator::Outcome;
using harness::CellStatus;
using harness::ResultLog;

namespace {

constexpr Outcome kOutcomes[] = {Outcome::kCpCr, Outcome::kCpIcr, Outcome::kIcpIcr};
constexpr const char* kOutcomeColors[] = {"#2e7d32", "#f9a825", "#c62828"};

template <typename F>
void for_each_evaluated(const ResultLog& log, F&& f) {
  std::size_t n = 0;
  for (const auto& r : log.results) {
    if (r.status != CellStatus::kOk || !r.evaluation) continue;
    f(r, *r.evaluation);
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::kEmptyLog, "log has no evaluated results");
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string svg_open(int w, int h, std::string_view title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         "<text x=\"10\" y=\"18\" font-size=\"14\">" +
         xml_escape(title) + "</text>\n";
}

std::string rect(double x, double y, double w, double h, std::string_view fill) {
  return "<rect x=\"" + fmt("%.2f", x) + "\" y=\"" + fmt("%.2f", y) + "\" width=\"" + fmt("%.2f", w) +
         "\" height=\"" + fmt("%.2f", h) + "\" fill=\"" + std::string(fill) + "\"/>\n";
}

std::string label(double x, double y, std::string_view s, std::string_view anchor = "start") {
  return "<text x=\"" + fmt("%.2f", x) + "\" y=\"" + fmt("%.2f", y) + "\" text-anchor=\"" + std::string(anchor) +
         "\">" + xml_escape(s) + "</text>\n";
}

std::string legend(double x, double y) {
  std::string out;
  for (std::size_t i = 0; i < 3; ++i) {
    double lx = x + static_cast<double>(i) * 90.0;
    out += rect(lx, y - 9, 10, 10, kOutcomeColors[i]);
    out += label(lx + 14, y, evaluator::label(kOutcomes[i]));
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& body, std::vector<std::filesystem::path>& out) {
  text::write_file(path, body);
  out.push_back(path);
}

}  // namespace

std::size_t BreakdownRow::count(Outcome o) const {
  switch (o) {
    case Outcome::kCpCr: return cp_cr;
    case Outcome::kCpIcr: return cp_icr;
    case Outcome::kIcpIcr: return icp_icr;
  }
  return 0;
}

const BreakdownRow* OutcomeBreakdown::find(std::string_view model, promptkit::Setting setting) const {
  for (const auto& r : rows) {
    if (r.model == model && r.setting == setting) return &r;
  }
  return nullptr;
}

std::size_t HeatmapMatrix::at(std::string_view model, std::string_view cve_id) const {
  auto m = std::find(models.begin(), models.end(), model);
  auto c = std::find(cve_ids.begin(), cve_ids.end(), cve_id);
  if (m == models.end() || c == cve_ids.end()) return 0;
  return cells[static_cast<std::size_t>(m - models.begin())][static_cast<std::size_t>(c - cve_ids.begin())];
}

std::size_t SmHistogram::total() const {
  std::size_t n = 0;
  for (const auto& [o, v] : counts) {
    for (auto c : v) n += c;
  }
  return n;
}

OutcomeBreakdown outcome_breakdown(const ResultLog& log) {
  std::map<std::pair<std::string, promptkit::Setting>, BreakdownRow> groups;
  for_each_evaluated(log, [&](const harness::RunResult& r, const evaluator::Evaluation& e) {
    auto& row = groups[{r.model, r.setting}];
    row.model = r.model;
    row.setting = r.setting;
    switch (e.outcome) {
      case Outcome::kCpCr: ++row.cp_cr; break;
      case Outcome::kCpIcr: ++row.cp_icr; break;
      case Outcome::kIcpIcr: ++row.icp_icr; break;
    }
    ++row.total;
  });
  OutcomeBreakdown b;
  for (auto& [key, row] : groups) b.rows.push_back(std::move(row));
  return b;
}

HeatmapMatrix heatmap_matrix(const ResultLog& log, const std::vector<std::string>& cve_universe) {
  std::set<std::string> models;
  std::set<std::string> cves(cve_universe.begin(), cve_universe.end());
  std::map<std::pair<std::string, std::string>, std::size_t> tally;
  for_each_evaluated(log, [&](const harness::RunResult& r, const evaluator::Evaluation& e) {
    models.insert(r.model);
    cves.insert(r.cve_id);
    if (e.outcome == Outcome::kCpCr) ++tally[{r.model, r.cve_id}];
  });
  HeatmapMatrix h{{models.begin(), models.end()}, {cves.begin(), cves.end()}, {}};
  for (const auto& m : h.models) {
    auto& row = h.cells.emplace_back();
    for (const auto& c : h.cve_ids) {
      auto it = tally.find({m, c});
      row.push_back(it == tally.end() ? 0 : it->second);
    }
  }
  return h;
}

PromptCurve prompt_curves(const ResultLog& log) {
  PromptCurve c;
  std::set<promptkit::Strategy> seen;
  std::set<std::string> models;
  for_each_evaluated(log, [&](const harness::RunResult& r, const evaluator::Evaluation& e) {
    seen.insert(r.strategy);
    models.insert(r.model);
    if (e.outcome == Outcome::kCpCr) ++c.counts[r.model][r.strategy];
  });
  c.strategies.assign(seen.begin(), seen.end());
  for (const auto& m : models) {
    for (auto s : c.strategies) c.counts[m].try_emplace(s, 0);
  }
  return c;
}

std::size_t bin_index(const std::vector<double>& edges, double sm) {
  auto it = std::upper_bound(edges.begin(), edges.end(), sm);
  std::size_t i = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
  return std::min(i, edges.size() - 2);
}

SmHistogram sm_histogram(const ResultLog& log, std::size_t bins) {
  if (bins == 0) throw Error(ErrorCode::kInvalidConfig, "histogram needs at least one bin");
  SmHistogram h;
  for (std::size_t i = 0; i <= bins; ++i) h.edges.push_back(static_cast<double>(i) / static_cast<double>(bins));
  for (auto o : kOutcomes) h.counts[o].assign(bins, 0);
  for_each_evaluated(log, [&](const harness::RunResult&, const evaluator::Evaluation& e) {
    ++h.counts[e.outcome][bin_index(h.edges, e.sm)];
  });
  return h;
}

std::string format_percent(std::size_t count, std::size_t total) {
  if (total == 0) return "0.0";
  // tenths of a percent, rounded half up: floor((count*2000 + total) / (2*total))
  std::uint64_t tenths = (static_cast<std::uint64_t>(count) * 2000 + total) / (2 * static_cast<std::uint64_t>(total));
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

Artifacts aggregate(const ResultLog& log, const std::vector<std::string>& cve_universe) {
  return {outcome_breakdown(log), heatmap_matrix(log, cve_universe), prompt_curves(log), sm_histogram(log)};
}

// ---------------------------------------------------------------------------
// Tables

std::string breakdown_csv(const OutcomeBreakdown& b) {
  std::string out = "model,setting,cp_cr,cp_icr,icp_icr,total,pct_cp_cr,pct_cp_icr,pct_icp_icr\n";
  for (const auto& r : b.rows) {
    out += csv_field(r.model) + "," + std::string(promptkit::to_string(r.setting)) + "," + std::to_string(r.cp_cr) +
           "," + std::to_string(r.cp_icr) + "," + std::to_string(r.icp_icr) + "," + std::to_string(r.total) + "," +
           format_percent(r.cp_cr, r.total) + "," + format_percent(r.cp_icr, r.total) + "," +
           format_percent(r.icp_icr, r.total) + "\n";
  }
  return out;
}

std::string heatmap_csv(const HeatmapMatrix& h) {
  std::string out = "model,cve_id,cp_cr\n";
  for (std::size_t m = 0; m < h.models.size(); ++m) {
    for (std::size_t c = 0; c < h.cve_ids.size(); ++c) {
      out += csv_field(h.models[m]) + "," + h.cve_ids[c] + "," + std::to_string(h.cells[m][c]) + "\n";
    }
  }
  return out;
}

std::string curves_csv(const PromptCurve& c) {
  std::string out = "model,strategy,cp_cr\n";
  for (const auto& [model, series] : c.counts) {
    for (const auto& [s, n] : series) {
      out += csv_field(model) + "," + std::string(promptkit::label(s)) + "," + std::to_string(n) + "\n";
    }
  }
  return out;
}

std::string histogram_csv(const SmHistogram& h) {
  std::string out = "bin_lo,bin_hi,outcome,count\n";
  for (std::size_t i = 0; i < h.bins(); ++i) {
    for (auto o : kOutcomes) {
      out += fmt("%.2f", h.edges[i]) + "," + fmt("%.2f", h.edges[i + 1]) + "," +
             std::string(evaluator::to_string(o)) + "," + std::to_string(h.counts.at(o)[i]) + "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plots

std::string breakdown_svg(const OutcomeBreakdown& b) {
  const double left = 170, bar_w = 420, bar_h = 18, gap = 8, top = 50;
  int height = static_cast<int>(top + static_cast<double>(b.rows.size()) * (bar_h + gap) + 40);
  std::string out = svg_open(static_cast<int>(left + bar_w + 30), height, "Outcome breakdown per model and setting");
  out += legend(left, 36);
  double y = top;
  for (const auto& r : b.rows) {
    out += label(left - 6, y + 13, r.model + " " + std::string(promptkit::to_string(r.setting)), "end");
    double x = left;
    for (std::size_t i = 0; i < 3; ++i) {
      double w = r.total == 0 ? 0.0 : bar_w * static_cast<double>(r.count(kOutcomes[i])) / static_cast<double>(r.total);
      out += rect(x, y, w, bar_h, kOutcomeColors[i]);
      if (r.count(kOutcomes[i]) > 0) out += label(x + w / 2, y + 13, std::to_string(r.count(kOutcomes[i])), "middle");
      x += w;
    }
    y += bar_h + gap;
  }
  return out + "</svg>\n";
}

std::string heatmap_svg(const HeatmapMatrix& h) {
  const double left = 170, top = 120, cell = 26;
  std::size_t max = 1;
  for (const auto& row : h.cells) {
    for (auto v : row) max = std::max(max, v);
  }
  int width = static_cast<int>(left + static_cast<double>(h.cve_ids.size()) * cell + 30);
  int height = static_cast<int>(top + static_cast<double>(h.models.size()) * cell + 20);
  std::string out = svg_open(width, height, "CP-CR count per model and CVE");
  for (std::size_t c = 0; c < h.cve_ids.size(); ++c) {
    double x = left + static_cast<double>(c) * cell + cell / 2;
    out += "<text x=\"" + fmt("%.2f", x) + "\" y=\"" + fmt("%.2f", top - 6) + "\" transform=\"rotate(-60 " +
           fmt("%.2f", x) + " " + fmt("%.2f", top - 6) + ")\">" + xml_escape(h.cve_ids[c]) + "</text>\n";
  }
  for (std::size_t m = 0; m < h.models.size(); ++m) {
    double y = top + static_cast<double>(m) * cell;
    out += label(left - 6, y + cell / 2 + 4, h.models[m], "end");
    for (std::size_t c = 0; c < h.cve_ids.size(); ++c) {
      double t = static_cast<double>(h.cells[m][c]) / static_cast<double>(max);
      int shade = static_cast<int>(255.0 - 200.0 * t);
      char color[16];
      std::snprintf(color, sizeof color, "#%02x%02xff", shade, shade);
      out += rect(left + static_cast<double>(c) * cell, y, cell - 1, cell - 1, color);
      out += label(left + static_cast<double>(c) * cell + cell / 2, y + cell / 2 + 4,
                   std::to_string(h.cells[m][c]), "middle");
    }
  }
  return out + "</svg>\n";
}

std::string curves_svg(const PromptCurve& c) {
  static constexpr const char* kPalette[] = {"#1565c0", "#ef6c00", "#2e7d32", "#6a1b9a", "#c62828", "#00838f"};
  const double left = 60, top = 50, plot_w = 420, plot_h = 240;
  std::size_t max = 1;
  for (const auto& [m, series] : c.counts) {
    for (const auto& [s, n] : series) max = std::max(max, n);
  }
  std::string out = svg_open(static_cast<int>(left + plot_w + 170), static_cast<int>(top + plot_h + 50),
                             "CP-CR count per prompting strategy");
  out += "<line x1=\"" + fmt("%.2f", left) + "\" y1=\"" + fmt("%.2f", top + plot_h) + "\" x2=\"" +
         fmt("%.2f", left + plot_w) + "\" y2=\"" + fmt("%.2f", top + plot_h) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + fmt("%.2f", left) + "\" y1=\"" + fmt("%.2f", top) + "\" x2=\"" + fmt("%.2f", left) +
         "\" y2=\"" + fmt("%.2f", top + plot_h) + "\" stroke=\"black\"/>\n";
  out += label(left - 6, top + 4, std::to_string(max), "end");
  out += label(left - 6, top + plot_h + 4, "0", "end");
  std::size_t n = c.strategies.size();
  auto x_of = [&](std::size_t i) {
    return n <= 1 ? left + plot_w / 2 : left + plot_w * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  for (std::size_t i = 0; i < n; ++i) out += label(x_of(i), top + plot_h + 18, promptkit::label(c.strategies[i]), "middle");
  std::size_t k = 0;
  for (const auto& [model, series] : c.counts) {
    const char* color = kPalette[k % std::size(kPalette)];
    std::string points;
    for (std::size_t i = 0; i < n; ++i) {
      double y = top + plot_h - plot_h * static_cast<double>(series.at(c.strategies[i])) / static_cast<double>(max);
      if (!points.empty()) points += ' ';
      points += fmt("%.2f", x_of(i)) + "," + fmt("%.2f", y);
      out += "<circle cx=\"" + fmt("%.2f", x_of(i)) + "\" cy=\"" + fmt("%.2f", y) + "\" r=\"3\" fill=\"" + color +
             "\"/>\n";
    }
    out += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    double ly = top + 10 + static_cast<double>(k) * 16;
    out += rect(left + plot_w + 20, ly - 9, 10, 10, color);
    out += label(left + plot_w + 34, ly, model);
    ++k;
  }
  return out + "</svg>\n";
}

std::string histogram_svg(const SmHistogram& h) {
  const double left = 60, top = 50, plot_w = 500, plot_h = 240;
  std::size_t bins = h.bins();
  std::size_t max = 1;
  for (std::size_t i = 0; i < bins; ++i) {
    std::size_t stack = 0;
    for (auto o : kOutcomes) stack += h.counts.at(o)[i];
    max = std::max(max, stack);
  }
  std::string out = svg_open(static_cast<int>(left + plot_w + 30), static_cast<int>(top + plot_h + 50),
                             "Distribution of the scoring metric");
  out += legend(left, 36);
  double bw = bins == 0 ? 0.0 : plot_w / static_cast<double>(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    double y = top + plot_h;
    for (std::size_t k = 0; k < 3; ++k) {
      double bh = plot_h * static_cast<double>(h.counts.at(kOutcomes[k])[i]) / static_cast<double>(max);
      y -= bh;
      if (bh > 0) out += rect(left + static_cast<double>(i) * bw, y, bw - 1, bh, kOutcomeColors[k]);
    }
  }
  for (std::size_t i = 0; i <= bins; i += 4) {
    out += label(left + static_cast<double>(i) * bw, top + plot_h + 16, fmt("%.2f", h.edges[i]), "middle");
  }
  out += label(left - 6, top + 4, std::to_string(max), "end");
  return out + "</svg>\n";
}

std::optional<Format> parse_format(std::string_view s) {
  auto lower = text::to_lower(s);
  if (lower == "table" || lower == "csv") return Format::kTable;
  if (lower == "plot" || lower == "svg") return Format::kPlot;
  return std::nullopt;
}

std::vector<std::filesystem::path> emit(const Artifacts& a, const std::filesystem::path& out_dir,
                                        const std::set<Format>& formats) {
  std::vector<std::filesystem::path> files;
  if (formats.empty()) return files;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + out_dir.string() + ": " + ec.message());
  if (formats.contains(Format::kTable)) {
    write_text(out_dir / "breakdown.csv", breakdown_csv(a.breakdown), files);
    write_text(out_dir / "heatmap.csv", heatmap_csv(a.heatmap), files);
    write_text(out_dir / "curves.csv", curves_csv(a.curves), files);
    write_text(out_dir / "histogram.csv", histogram_csv(a.histogram), files);
  }
  if (formats.contains(Format::kPlot)) {
    write_text(out_dir / "breakdown.svg", breakdown_svg(a.breakdown), files);
    write_text(out_dir / "heatmap.svg", heatmap_svg(a.heatmap), files);
    write_text(out_dir / "curves.svg", curves_svg(a.curves), files);
    write_text(out_dir / "histogram.svg", histogram_svg(a.histogram), files);
  }
  return files;
}

}  // namespace realvul::report
