// Static SVG line charts: E[f] - f_min on a log axis and success probability.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "qhdlab/cli.hpp"

namespace qhdlab::cli {

namespace fs = std::filesystem;

namespace {

struct Line {
  std::string label;
  std::vector<double> k, gap, prob;
};

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

Line load(const fs::path& p) {
  const MetricsSeries s = read_series_csv(p);
  if (s.records.empty()) throw std::runtime_error(p.string() + ": no rows");
  Line l;
  l.label = p.parent_path().filename().string();
  if (l.label.empty()) l.label = p.stem().string();
  double f_min = 0.0;
  const fs::path manifest = p.parent_path() / "manifest.json";
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    const nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (!j.is_discarded()) {
      if (j.contains("objective")) f_min = j["objective"].value("f_min", 0.0);
      if (j.contains("config") && j["config"].contains("run")) l.label = j["config"]["run"].value("name", l.label);
    }
  }
  for (const auto& r : s.records) {
    l.k.push_back(r.k);
    l.gap.push_back(r.exp_f - f_min);
    l.prob.push_back(r.success_prob);
  }
  return l;
}

struct Panel {
  double x0, y0, w, h;  // plot area in SVG units
  double kmin, kmax, vmin, vmax;
  bool log;
  double px(double k) const { return x0 + (kmax > kmin ? (k - kmin) / (kmax - kmin) : 0.5) * w; }
  double py(double v) const {
    const double a = log ? std::log10(v) : v, lo = log ? std::log10(vmin) : vmin, hi = log ? std::log10(vmax) : vmax;
    return y0 + h - (hi > lo ? (a - lo) / (hi - lo) : 0.5) * h;
  }
};

void axes(std::ostream& o, const Panel& p, const std::string& title) {
  o << "<rect x='" << p.x0 << "' y='" << p.y0 << "' width='" << p.w << "' height='" << p.h
    << "' fill='none' stroke='#333'/>\n";
  o << "<text x='" << p.x0 + p.w / 2 << "' y='" << p.y0 - 10 << "' text-anchor='middle'>" << title << "</text>\n";
  o << "<text x='" << p.x0 + p.w / 2 << "' y='" << p.y0 + p.h + 36 << "' text-anchor='middle'>iteration k</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double k = p.kmin + (p.kmax - p.kmin) * i / 4.0;
    o << "<text x='" << p.px(k) << "' y='" << p.y0 + p.h + 18 << "' text-anchor='middle' font-size='11'>"
      << std::lround(k) << "</text>\n";
  }
  if (p.log) {
    for (int e = static_cast<int>(std::ceil(std::log10(p.vmin))); e <= std::floor(std::log10(p.vmax)); ++e) {
      const double y = p.py(std::pow(10.0, e));
      o << "<line x1='" << p.x0 << "' x2='" << p.x0 + p.w << "' y1='" << y << "' y2='" << y
        << "' stroke='#ddd'/>\n<text x='" << p.x0 - 6 << "' y='" << y + 4
        << "' text-anchor='end' font-size='11'>1e" << e << "</text>\n";
    }
  } else {
    for (int i = 0; i <= 4; ++i) {
      const double v = p.vmin + (p.vmax - p.vmin) * i / 4.0, y = p.py(v);
      o << "<line x1='" << p.x0 << "' x2='" << p.x0 + p.w << "' y1='" << y << "' y2='" << y
        << "' stroke='#ddd'/>\n<text x='" << p.x0 - 6 << "' y='" << y + 4 << "' text-anchor='end' font-size='11'>"
        << v << "</text>\n";
    }
  }
}

void polyline(std::ostream& o, const Panel& p, const std::vector<double>& k, const std::vector<double>& v,
              const char* color) {
  o << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (p.log && !(v[i] > 0.0)) continue;
    o << p.px(k[i]) << "," << p.py(p.log ? std::max(v[i], p.vmin) : v[i]) << " ";
  }
  o << "'/>\n";
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

void cmd_plot(const std::vector<fs::path>& series, const fs::path& out) {
  if (series.empty()) throw std::invalid_argument("plot: no series given");
  std::vector<Line> lines;
  for (const auto& p : series) lines.push_back(load(p));

  double kmin = std::numeric_limits<double>::infinity(), kmax = -kmin;
  double gmin = std::numeric_limits<double>::infinity(), gmax = 0.0;
  for (const auto& l : lines) {
    kmin = std::min(kmin, *std::min_element(l.k.begin(), l.k.end()));
    kmax = std::max(kmax, *std::max_element(l.k.begin(), l.k.end()));
    for (double g : l.gap)
      if (g > 0.0) {
        gmin = std::min(gmin, g);
        gmax = std::max(gmax, g);
      }
  }
  if (!(gmax > 0.0)) gmin = 1e-3, gmax = 1.0;
  gmin = std::pow(10.0, std::floor(std::log10(gmin)));
  gmax = std::pow(10.0, std::ceil(std::log10(gmax)));
  if (gmax <= gmin) gmax = gmin * 10.0;

  const Panel left{70, 40, 380, 280, kmin, kmax, gmin, gmax, true};
  const Panel right{550, 40, 380, 280, kmin, kmax, 0.0, 1.0, false};

  std::ostringstream o;
  o << "<svg xmlns='http://www.w3.org/2000/svg' width='1000' height='" << 400 + 18 * lines.size()
    << "' font-family='sans-serif' font-size='13'>\n<rect width='100%' height='100%' fill='white'/>\n";
  axes(o, left, "E[f] - f_min");
  axes(o, right, "success probability");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const char* c = kColors[i % std::size(kColors)];
    polyline(o, left, lines[i].k, lines[i].gap, c);
    polyline(o, right, lines[i].k, lines[i].prob, c);
    const double y = 380 + 18 * static_cast<double>(i);
    o << "<line x1='70' x2='100' y1='" << y << "' y2='" << y << "' stroke='" << c
      << "' stroke-width='2'/>\n<text x='108' y='" << y + 4 << "'>" << escape(lines[i].label) << "</text>\n";
  }
  o << "</svg>\n";

  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write " + out.string());
  f << o.str();
}

}  // namespace qhdlab::cli
