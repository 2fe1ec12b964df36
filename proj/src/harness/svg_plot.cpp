#include "aknet/harness/svg_plot.hpp"

#include "aknet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace aknet {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 420;
constexpr double kLeft = 70;
constexpr double kRight = 150;
constexpr double kTop = 40;
constexpr double kBottom = 55;

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                               "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };
  for (const auto& s : spec.series) {
    if (s.x.size() != s.y.size()) throw ContractViolation("plot series '" + s.label + "' is ragged");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (spec.log_x && !(s.x[i] > 0.0)) throw ContractViolation("log axis needs positive x");
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (tx(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(spec.title) << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int i = 0; i <= 5; ++i) {
    const double v = y0 + (y1 - y0) * i / 5.0;
    os << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << py(v) << "\" y2=\""
       << py(v) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">"
       << num(v) << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double t = x0 + (x1 - x0) * i / 5.0;
    const double v = spec.log_x ? std::pow(10.0, t) : t;
    os << "<text x=\"" << px(v) << "\" y=\"" << kTop + ph + 16
       << "\" text-anchor=\"middle\">" << num(v) << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
  os << "<text transform=\"translate(18," << kTop + ph / 2
     << ") rotate(-90)\" text-anchor=\"middle\">" << escape(spec.y_label) << "</text>\n";

  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& s = spec.series[k];
    const char* color = kColors[k % std::size(kColors)];
    std::vector<std::size_t> order(s.x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.x[a] < s.x[b]; });
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\"";
    if (s.dashed) os << " stroke-dasharray=\"6,4\"";
    os << " points=\"";
    for (std::size_t i : order) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    os << "\"/>\n";
    for (std::size_t i : order) {
      os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"2.5\" fill=\""
         << color << "\"/>\n";
    }
    const double ly = kTop + 14 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << kLeft + pw + 10 << "\" x2=\"" << kLeft + pw + 34 << "\" y1=\"" << ly
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"1.8\""
       << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    os << "<text x=\"" << kLeft + pw + 38 << "\" y=\"" << ly + 4 << "\">" << escape(s.label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_svg(const std::filesystem::path& path, const PlotSpec& spec) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  os << render_svg(spec);
}

std::vector<std::filesystem::path> plot_results(const ResultTable& table,
                                                const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> written;
  std::set<std::string> experiments;
  for (const auto& r : table.rows) experiments.insert(r.experiment);

  for (const auto& exp : experiments) {
    // ratio / jump panels: one series per (filter, source) over sow or r2_after
    for (const std::string panel : {"ratio", "jump"}) {
      std::map<std::string, PlotSeries> series;
      for (const auto& r : table.rows) {
        if (r.experiment != exp || r.panel != panel) continue;
        const std::string label = r.filter + " (" + r.sow_source + ")";
        auto& s = series[label];
        s.label = label;
        s.dashed = r.filter != "AKNet";
        s.x.push_back(panel == "ratio" ? r.sow : r.r2);
        s.y.push_back(r.mse_db);
      }
      if (series.empty()) continue;
      PlotSpec spec;
      spec.title = exp + (panel == "ratio" ? ": unseen SoW ratios" : ": SoW jump");
      spec.x_label = panel == "ratio" ? "SoW" : "r2 after jump";
      spec.y_label = "MSE [dB]";
      for (auto& [k, s] : series) spec.series.push_back(std::move(s));
      auto path = out_dir / (exp + "-" + panel + ".svg");
      write_svg(path, spec);
      written.push_back(path);
    }
    // scaling panel: one series per (filter, ratio) over q2
    std::map<std::string, PlotSeries> series;
    for (const auto& r : table.rows) {
      if (r.experiment != exp || r.panel != "scaling") continue;
      const std::string label = r.filter + " sow=" + num(r.sow);
      auto& s = series[label];
      s.label = label;
      s.dashed = r.filter != "AKNet";
      s.x.push_back(r.q2);
      s.y.push_back(r.mse_db);
    }
    if (!series.empty()) {
      PlotSpec spec;
      spec.title = exp + ": joint scaling at fixed SoW";
      spec.x_label = "q2";
      spec.y_label = "MSE [dB]";
      for (auto& [k, s] : series) spec.series.push_back(std::move(s));
      auto path = out_dir / (exp + "-scaling.svg");
      write_svg(path, spec);
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace aknet
