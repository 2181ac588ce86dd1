#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "peerinf/experiment.hpp"
#include "peerinf/io.hpp"

namespace peerinf {

enum class ReportFormat { kCsv, kJson, kSvg };

inline ReportFormat parse_report_format(const std::string& s) {
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "json") return ReportFormat::kJson;
  if (s == "svg") return ReportFormat::kSvg;
  throw ConfigError("unknown report format '" + s + "'");
}

inline constexpr const char* kRowsFile = "rows.csv";
inline constexpr const char* kSummaryFile = "summary.json";
inline constexpr const char* kPlotFile = "bias.svg";
inline constexpr const char* kRowsHeader = "n,replication,strategy,beta_hat,recovery_error,exact_recovery,bias_bound,status";

// ---------------------------------------------------------------------------
// rows.csv
// ---------------------------------------------------------------------------

inline void write_rows(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << kRowsHeader << '\n';
  for (const auto& r : rows)
    os << r.n << ',' << r.replication << ',' << r.strategy << ',' << io::format_double(r.beta_hat) << ','
       << io::format_double(r.recovery_error) << ',' << (r.exact_recovery ? 1 : 0) << ','
       << io::format_double(r.bias_bound) << ',' << r.status << '\n';
}

inline std::vector<ResultRow> read_rows(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kRowsHeader) throw IoError("rows file has an unexpected header");
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = io::split(line, ',');
    if (f.size() != 8) throw IoError("rows file line " + std::to_string(lineno) + ": expected 8 fields");
    ResultRow r;
    r.n = static_cast<std::size_t>(io::parse_int(f[0]));
    r.replication = static_cast<std::size_t>(io::parse_int(f[1]));
    r.strategy = f[2];
    r.beta_hat = io::parse_double(f[3]);
    r.recovery_error = io::parse_double(f[4]);
    r.exact_recovery = f[5] == "1";
    r.bias_bound = io::parse_double(f[6]);
    r.status = f[7];
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// summary.json
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline double num(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

/// Equality that treats NaN and infinities as "missing", matching the JSON encoding.
inline bool same(double a, double b) { return std::isfinite(a) ? a == b : !std::isfinite(b); }

}  // namespace detail

inline nlohmann::json summary_json(const ExperimentResult& r) {
  using nlohmann::json;
  json j;
  j["setting"] = to_string(r.meta.setting);
  j["beta_true"] = r.meta.beta_true;
  j["confidence_level"] = r.meta.confidence_level;
  j["strategies"] = r.meta.strategies;
  j["total_replications"] = r.total_replications;
  j["failed_replications"] = r.failed_replications;
  j["warnings"] = r.warnings;
  json grid = json::array();
  for (const auto& g : r.summaries) {
    json e;
    e["n"] = g.n;
    e["ok"] = g.ok;
    e["failed"] = g.failed;
    e["delta_hat"] = detail::num(g.delta_hat);
    e["delta_ci"] = {detail::num(g.delta_lower), detail::num(g.delta_upper)};
    e["median_recovery_error"] = detail::num(g.median_recovery_error);
    json strategies = json::object();
    for (const auto& s : g.strategies)
      strategies[s.strategy] = {{"count", s.count},
                                {"mean_beta", detail::num(s.mean_beta)},
                                {"mean_bias", detail::num(s.mean_bias)},
                                {"se", detail::num(s.se)},
                                {"ci", {detail::num(s.ci_low), detail::num(s.ci_high)}},
                                {"bias_bound", detail::num(s.bias_bound)}};
    e["strategies"] = strategies;
    grid.push_back(e);
  }
  j["grid"] = grid;
  return j;
}

inline ExperimentMeta meta_from_json(const nlohmann::json& j) {
  ExperimentMeta m;
  const auto setting = j.at("setting").get<std::string>();
  if (setting != "community" && setting != "continuous") throw IoError("summary has unknown setting '" + setting + "'");
  m.setting = setting == "community" ? Setting::kCommunity : Setting::kContinuous;
  m.beta_true = j.at("beta_true").get<double>();
  m.confidence_level = j.at("confidence_level").get<double>();
  m.strategies = j.at("strategies").get<std::vector<std::string>>();
  return m;
}

/// True when every statistic stored in `j` equals the recomputed one.
inline bool summary_matches(const nlohmann::json& j, const std::vector<GridSummary>& summaries) {
  const auto& grid = j.at("grid");
  if (grid.size() != summaries.size()) return false;
  for (std::size_t q = 0; q < summaries.size(); ++q) {
    const auto& e = grid[q];
    const auto& g = summaries[q];
    if (e.at("n").get<std::size_t>() != g.n || e.at("ok").get<std::size_t>() != g.ok ||
        e.at("failed").get<std::size_t>() != g.failed)
      return false;
    if (!detail::same(detail::num(e.at("delta_hat")), g.delta_hat) ||
        !detail::same(detail::num(e.at("delta_ci")[0]), g.delta_lower) ||
        !detail::same(detail::num(e.at("delta_ci")[1]), g.delta_upper) ||
        !detail::same(detail::num(e.at("median_recovery_error")), g.median_recovery_error))
      return false;
    for (const auto& s : g.strategies) {
      const auto& x = e.at("strategies").at(s.strategy);
      if (x.at("count").get<std::size_t>() != s.count || !detail::same(detail::num(x.at("mean_beta")), s.mean_beta) ||
          !detail::same(detail::num(x.at("mean_bias")), s.mean_bias) || !detail::same(detail::num(x.at("se")), s.se) ||
          !detail::same(detail::num(x.at("ci")[0]), s.ci_low) || !detail::same(detail::num(x.at("ci")[1]), s.ci_high) ||
          !detail::same(detail::num(x.at("bias_bound")), s.bias_bound))
        return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// SVG line chart
// ---------------------------------------------------------------------------

struct PlotOptions {
  bool log_y = false;
  int width = 640;
  int height = 420;
};

inline std::string render_svg(const ExperimentResult& r, const PlotOptions& opt = {}) {
  if (r.summaries.empty()) throw DomainError("nothing to plot");
  struct Series {
    std::string name, css;
    std::vector<std::pair<double, double>> pts;
  };
  std::vector<Series> series;
  static const char* palette[] = {"#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#d35400"};
  for (std::size_t s = 0; s < r.meta.strategies.size(); ++s) {
    Series ser{r.meta.strategies[s], "strategy", {}};
    for (const auto& g : r.summaries) ser.pts.emplace_back(static_cast<double>(g.n), std::abs(g.strategies[s].mean_bias));
    series.push_back(std::move(ser));
  }
  if (r.meta.setting == Setting::kCommunity) {
    Series d{"delta_hat", "delta", {}};
    for (const auto& g : r.summaries) d.pts.emplace_back(static_cast<double>(g.n), g.delta_hat);
    series.push_back(std::move(d));
  }

  // Axis ranges; log-y clips non-positive values to a floor below the data.
  double ymin = std::numeric_limits<double>::infinity(), ymax = 0.0;
  for (const auto& s : series)
    for (const auto& [x, y] : s.pts)
      if (std::isfinite(y) && (!opt.log_y || y > 0.0)) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
  if (!std::isfinite(ymin)) ymin = ymax = opt.log_y ? 1.0 : 0.0;
  double lo, hi;
  if (opt.log_y) {
    lo = std::floor(std::log10(ymin)) - (ymin == ymax ? 1.0 : 0.0);
    hi = std::ceil(std::log10(ymax));
    if (hi <= lo) hi = lo + 1.0;
  } else {
    lo = 0.0;
    hi = ymax > 0.0 ? ymax * 1.1 : 1.0;
  }
  const double xmin = static_cast<double>(r.summaries.front().n), xmax = static_cast<double>(r.summaries.back().n);
  const double left = 70, right = opt.width - 130, top = 30, bottom = opt.height - 50;
  auto px = [&](double x) { return xmax > xmin ? left + (right - left) * (x - xmin) / (xmax - xmin) : (left + right) / 2; };
  auto py = [&](double y) {
    double v = opt.log_y ? (y > 0.0 && std::isfinite(y) ? std::log10(y) : lo) : (std::isfinite(y) ? y : 0.0);
    v = std::clamp(v, lo, hi);
    return bottom - (bottom - top) * (v - lo) / (hi - lo);
  };
  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line class=\"axis\" x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\"" << bottom
     << "\" stroke=\"black\"/>\n";
  os << "<line class=\"axis\" x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
     << "\" stroke=\"black\"/>\n";
  for (const auto& g : r.summaries) {
    const double x = px(static_cast<double>(g.n));
    os << "<text x=\"" << fmt(x) << "\" y=\"" << bottom + 15 << "\" text-anchor=\"middle\">" << g.n << "</text>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    const double y = bottom - (bottom - top) * t / 4.0;
    os << "<text x=\"" << left - 5 << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\">"
       << fmt(opt.log_y ? std::pow(10.0, v) : v) << "</text>\n";
  }
  os << "<text x=\"" << (left + right) / 2 << "\" y=\"" << opt.height - 12 << "\" text-anchor=\"middle\">n</text>\n";
  os << "<text x=\"14\" y=\"" << (top + bottom) / 2 << "\" transform=\"rotate(-90 14 " << (top + bottom) / 2
     << ")\" text-anchor=\"middle\">|mean bias|" << (opt.log_y ? " (log scale)" : "") << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    const char* colour = ser.css == "delta" ? "#555555" : palette[s % 5];
    os << "<polyline class=\"" << ser.css << "\" data-name=\"" << ser.name << "\" fill=\"none\" stroke=\"" << colour
       << "\" stroke-width=\"2\"" << (ser.css == "delta" ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
    for (std::size_t q = 0; q < ser.pts.size(); ++q)
      os << (q ? " " : "") << fmt(px(ser.pts[q].first)) << ',' << fmt(py(ser.pts[q].second));
    os << "\"/>\n";
    os << "<text x=\"" << right + 10 << "\" y=\"" << top + 16 * s + 4 << "\" fill=\"" << colour << "\">" << ser.name
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Emission and reload
// ---------------------------------------------------------------------------

inline std::filesystem::path report_path(const std::filesystem::path& dir, ReportFormat f) {
  switch (f) {
    case ReportFormat::kCsv: return dir / kRowsFile;
    case ReportFormat::kJson: return dir / kSummaryFile;
    case ReportFormat::kSvg: return dir / kPlotFile;
  }
  return dir;
}

/// Writes the requested formats into `dir`. Existing files are an error
/// unless `overwrite` is set; nothing is ever appended.
inline std::vector<std::filesystem::path> emit_report(const ExperimentResult& r, const std::filesystem::path& dir,
                                                      const std::vector<ReportFormat>& formats, bool overwrite = false,
                                                      const PlotOptions& plot = {}) {
  if (r.meta.strategies.empty()) throw DomainError("result has no strategies");
  if (r.rows.empty()) throw DomainError("result has no rows");
  std::vector<std::filesystem::path> out;
  for (auto f : formats) {
    const auto p = report_path(dir, f);
    if (!overwrite && std::filesystem::exists(p)) throw IoError(p.string() + " exists; pass --overwrite to replace it");
    out.push_back(p);
  }
  for (std::size_t q = 0; q < formats.size(); ++q) {
    auto os = io::open_out(out[q]);
    switch (formats[q]) {
      case ReportFormat::kCsv: write_rows(os, r.rows); break;
      case ReportFormat::kJson: os << summary_json(r).dump(2) << '\n'; break;
      case ReportFormat::kSvg: os << render_svg(r, plot); break;
    }
    if (!os) throw IoError("write failed for " + out[q].string());
  }
  return out;
}

/// Reloads rows.csv and summary.json from `dir`, recomputes the summaries
/// from the rows and throws IoError if they disagree with the stored ones.
inline ExperimentResult load_result(const std::filesystem::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(dir / kSummaryFile));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed summary: ") + e.what());
  }
  ExperimentResult r;
  try {
    r.meta = meta_from_json(j);
    r.total_replications = j.at("total_replications").get<std::size_t>();
    r.failed_replications = j.at("failed_replications").get<std::size_t>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed summary: ") + e.what());
  }
  auto is = io::open_in(dir / kRowsFile);
  r.rows = read_rows(is);
  r.summaries = summarize(r.rows, r.meta);
  bool ok = false;
  try {
    ok = summary_matches(j, r.summaries);
  } catch (const nlohmann::json::exception&) {
    ok = false;
  }
  if (!ok) throw IoError("summary statistics do not match the rows in " + dir.string());
  return r;
}

}  // namespace peerinf
