#include "svea/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "svea/errors.hpp"

namespace svea {
namespace {

constexpr double kPanelW = 420, kPanelH = 300;
constexpr double kLeft = 60, kRight = 15, kTop = 30, kBottom = 45;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!std::isfinite(lo)) lo = 0, hi = 1;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  }
};

void panel(std::ostringstream& out, const SvgPanel& p, double ox) {
  Range xr, yr;
  for (const auto& s : p.series) {
    if (s.x.size() != s.y.size()) throw UsageError("svg series '" + s.label + "' has mismatched x and y");
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
    for (double v : s.lo) yr.add(v);
    for (double v : s.hi) yr.add(v);
  }
  xr.settle();
  yr.settle();
  const double pw = kPanelW - kLeft - kRight, ph = kPanelH - kTop - kBottom;
  auto px = [&](double x) { return ox + kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  out << "<text x=\"" << num(ox + kPanelW / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
      << esc(p.title) << "</text>\n";
  out << "<rect x=\"" << num(ox + kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\""
      << num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 4, yv = yr.lo + (yr.hi - yr.lo) * i / 4;
    out << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kTop + ph + 15)
        << "\" text-anchor=\"middle\" font-size=\"10\">" << tick(xv) << "</text>\n";
    out << "<text x=\"" << num(ox + kLeft - 4) << "\" y=\"" << num(py(yv) + 3)
        << "\" text-anchor=\"end\" font-size=\"10\">" << tick(yv) << "</text>\n";
  }
  out << "<text x=\"" << num(ox + kLeft + pw / 2) << "\" y=\"" << num(kPanelH - 8)
      << "\" text-anchor=\"middle\" font-size=\"11\">" << esc(p.x_label) << "</text>\n";
  out << "<text transform=\"translate(" << num(ox + 14) << "," << num(kTop + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"11\">" << esc(p.y_label) << "</text>\n";

  for (std::size_t k = 0; k < p.series.size(); ++k) {
    const auto& s = p.series[k];
    const char* color = kColors[k % (sizeof kColors / sizeof kColors[0])];
    if (!s.lo.empty() && s.lo.size() == s.x.size() && s.hi.size() == s.x.size() && !s.x.empty()) {
      out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) out << num(px(s.x[i])) << "," << num(py(s.hi[i])) << " ";
      for (std::size_t i = s.x.size(); i-- > 0;) out << num(px(s.x[i])) << "," << num(py(s.lo[i])) << " ";
      out << "\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.y[i])) out << num(px(s.x[i])) << "," << num(py(s.y[i])) << " ";
    out << "\"/>\n";
    const double ly = kTop + 12 + 14 * static_cast<double>(k);
    out << "<line x1=\"" << num(ox + kLeft + 8) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(ox + kLeft + 24)
        << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << num(ox + kLeft + 28) << "\" y=\"" << num(ly) << "\" font-size=\"10\">" << esc(s.label)
        << "</text>\n";
  }
}

}  // namespace

std::string render_svg(const std::vector<SvgPanel>& panels) {
  const double width = kPanelW * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width) << "\" height=\""
      << num(kPanelH) << "\" font-family=\"sans-serif\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) panel(out, panels[i], kPanelW * static_cast<double>(i));
  out << "</svg>\n";
  return out.str();
}

void write_svg(const std::filesystem::path& path, const std::vector<SvgPanel>& panels) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << render_svg(panels);
}

}  // namespace svea
