#include "ofe/runner/plots.hpp"

#include "ofe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace ofe {
namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 80, kRight = 190, kTop = 40, kBottom = 60;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Series {
  std::string label;
  std::vector<double> mean, lo, hi;
};

}  // namespace

std::vector<double> MetricsTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ConfigError(path.string() + ": no column '" + name + "'");
  const auto j = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[j]);
  return out;
}

MetricsTable read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  MetricsTable t;
  t.path = path;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# label=", 0) == 0) t.label = line.substr(8);
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (t.columns.empty()) {
      t.columns = cells;
      continue;
    }
    if (cells.size() != t.columns.size()) throw ConfigError(path.string() + ": ragged row");
    std::vector<double> row;
    for (const auto& v : cells) {
      row.push_back(v.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(v));
    }
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty() || t.columns.front() != "env_step") {
    throw ConfigError(path.string() + ": not a metrics CSV");
  }
  if (t.label.empty()) t.label = path.parent_path().filename().string();
  return t;
}

std::vector<std::filesystem::path> emit_plots(const std::vector<std::filesystem::path>& csv_paths,
                                              const std::filesystem::path& out_dir) {
  if (csv_paths.empty()) throw ConfigError("plot: no CSV files given");
  std::vector<MetricsTable> tables;
  for (const auto& p : csv_paths) tables.push_back(read_metrics_csv(p));

  const auto grid = tables.front().column("env_step");
  std::vector<std::string> offending;
  for (const auto& t : tables) {
    if (t.column("env_step") != grid || t.columns != tables.front().columns) {
      offending.push_back(t.path.string());
    }
  }
  if (!offending.empty()) {
    std::string msg = "plot: step grid differs from " + tables.front().path.string() + " in:";
    for (const auto& o : offending) msg += " " + o;
    throw ConfigError(msg);
  }
  if (grid.empty()) throw ConfigError("plot: no rows in " + tables.front().path.string());

  std::vector<std::string> labels;
  for (const auto& t : tables) {
    if (std::find(labels.begin(), labels.end(), t.label) == labels.end()) labels.push_back(t.label);
  }

  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  for (const auto& metric : tables.front().columns) {
    if (metric == "env_step") continue;
    std::vector<Series> series;
    double ymin = std::numeric_limits<double>::infinity();
    double ymax = -ymin;
    for (const auto& label : labels) {
      Series s;
      s.label = label;
      for (std::size_t r = 0; r < grid.size(); ++r) {
        std::vector<double> vals;
        for (const auto& t : tables) {
          if (t.label != label) continue;
          const double v = t.column(metric)[r];
          if (std::isfinite(v)) vals.push_back(v);
        }
        double m = std::numeric_limits<double>::quiet_NaN(), sd = 0.0;
        if (!vals.empty()) {
          m = 0.0;
          for (double v : vals) m += v;
          m /= static_cast<double>(vals.size());
          if (vals.size() > 1) {
            for (double v : vals) sd += (v - m) * (v - m);
            sd = std::sqrt(sd / static_cast<double>(vals.size() - 1));
          }
          ymin = std::min(ymin, m - sd);
          ymax = std::max(ymax, m + sd);
        }
        s.mean.push_back(m);
        s.lo.push_back(m - sd);
        s.hi.push_back(m + sd);
      }
      series.push_back(std::move(s));
    }
    if (!std::isfinite(ymin)) continue;
    if (ymax - ymin < 1e-12) {
      const double pad = std::max(1.0, std::abs(ymin)) * 0.05;
      ymin -= pad;
      ymax += pad;
    }
    const double xmin = grid.front();
    const double xmax = grid.size() > 1 ? grid.back() : grid.front() + 1.0;
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << num(kLeft) << "\" y=\"24\" font-size=\"15\">" << escape(metric)
        << "</text>\n"
        << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw)
        << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double yv = ymin + (ymax - ymin) * i / 4.0;
      const double xv = xmin + (xmax - xmin) * i / 4.0;
      svg << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(sy(yv) + 4)
          << "\" text-anchor=\"end\">" << tick(yv) << "</text>\n"
          << "<text x=\"" << num(sx(xv)) << "\" y=\"" << num(kTop + ph + 18)
          << "\" text-anchor=\"middle\">" << tick(xv) << "</text>\n";
    }
    svg << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 16)
        << "\" text-anchor=\"middle\">env_step</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
      const auto& s = series[k];
      const char* color = kPalette[k % std::size(kPalette)];
      std::ostringstream band, line;
      std::vector<std::size_t> idx;
      for (std::size_t r = 0; r < grid.size(); ++r) {
        if (std::isfinite(s.mean[r])) idx.push_back(r);
      }
      if (idx.empty()) continue;
      for (std::size_t r : idx) band << num(sx(grid[r])) << ',' << num(sy(s.hi[r])) << ' ';
      for (auto it = idx.rbegin(); it != idx.rend(); ++it) {
        band << num(sx(grid[*it])) << ',' << num(sy(s.lo[*it])) << ' ';
      }
      for (std::size_t r : idx) line << num(sx(grid[r])) << ',' << num(sy(s.mean[r])) << ' ';
      svg << "<polygon points=\"" << band.str() << "\" fill=\"" << color
          << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n"
          << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n";
      const double ly = kTop + 16 + 20.0 * static_cast<double>(k);
      svg << "<line x1=\"" << num(kLeft + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\""
          << num(kLeft + pw + 36) << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n"
          << "<text x=\"" << num(kLeft + pw + 42) << "\" y=\"" << num(ly + 4) << "\">"
          << escape(s.label) << "</text>\n";
    }
    svg << "</svg>\n";
    const auto path = out_dir / (metric + ".svg");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << svg.str();
    written.push_back(path);
  }
  return written;
}

}  // namespace ofe
