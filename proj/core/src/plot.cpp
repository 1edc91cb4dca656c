#include "mfd/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "mfd/errors.hpp"

namespace mfd {

namespace {

constexpr double kW = 640, kH = 360, kL = 70, kR = 70, kT = 40, kB = 50;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

std::pair<double, double> range_of(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 1.0};
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  double a = *lo, b = *hi;
  if (b - a < 1e-12 * std::max(1.0, std::abs(a))) {
    a -= 0.5;
    b += 0.5;
  }
  return {a, b};
}

std::string polyline(const Series& s, double x0, double x1, double y0, double y1, const char* color) {
  std::string pts;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    const double px = kL + (s.x[i] - x0) / (x1 - x0) * (kW - kL - kR);
    const double py = kH - kB - (s.y[i] - y0) / (y1 - y0) * (kH - kT - kB);
    pts += (i ? " " : "") + num(px) + "," + num(py);
  }
  return "  <polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + pts +
         "\"/>\n";
}

}  // namespace

std::string dual_axis_svg(const std::string& title, const std::string& x_label, const Series& left,
                          const Series& right) {
  for (const Series* s : {&left, &right}) {
    if (s->x.size() != s->y.size()) throw InvalidArgument("series '" + s->label + "' has mismatched lengths");
    for (double v : s->y)
      if (!std::isfinite(v)) throw InvalidArgument("series '" + s->label + "' contains a non-finite value");
  }
  std::vector<double> xs = left.x;
  xs.insert(xs.end(), right.x.begin(), right.x.end());
  const auto [x0, x1] = range_of(xs);
  const auto [l0, l1] = range_of(left.y);
  const auto [r0, r1] = range_of(right.y);
  const char* lc = "#1f3b73";
  const char* rc = "#d9822b";

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kW) + "\" height=\"" + num(kH) +
       "\" viewBox=\"0 0 " + num(kW) + " " + num(kH) + "\">\n";
  s += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "  <text x=\"" + num(kW / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
       escape(title) + "</text>\n";
  s += "  <rect x=\"" + num(kL) + "\" y=\"" + num(kT) + "\" width=\"" + num(kW - kL - kR) + "\" height=\"" +
       num(kH - kT - kB) + "\" fill=\"none\" stroke=\"#888\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double f = i / 4.0;
    const double py = kH - kB - f * (kH - kT - kB);
    const double px = kL + f * (kW - kL - kR);
    s += "  <text x=\"" + num(kL - 6) + "\" y=\"" + num(py + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" + lc + "\">" +
         tick(l0 + f * (l1 - l0)) + "</text>\n";
    s += "  <text x=\"" + num(kW - kR + 6) + "\" y=\"" + num(py + 4) +
         "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" + rc + "\">" + tick(r0 + f * (r1 - r0)) +
         "</text>\n";
    s += "  <text x=\"" + num(px) + "\" y=\"" + num(kH - kB + 16) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + tick(x0 + f * (x1 - x0)) +
         "</text>\n";
  }
  s += "  <text x=\"" + num(kW / 2) + "\" y=\"" + num(kH - 10) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + escape(x_label) + "</text>\n";
  s += "  <text x=\"14\" y=\"" + num(kH / 2) + "\" transform=\"rotate(-90 14 " + num(kH / 2) +
       ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" + lc + "\">" +
       escape(left.label) + "</text>\n";
  s += "  <text x=\"" + num(kW - 14) + "\" y=\"" + num(kH / 2) + "\" transform=\"rotate(90 " + num(kW - 14) + " " +
       num(kH / 2) + ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" + rc + "\">" +
       escape(right.label) + "</text>\n";
  s += polyline(left, x0, x1, l0, l1, lc);
  s += polyline(right, x0, x1, r0, r1, rc);
  s += "</svg>\n";
  return s;
}

std::vector<std::pair<std::string, std::string>> trace_svgs(const MetricTrace& trace) {
  if (trace.empty()) throw EmptyTrace("cannot plot an empty trace");
  Series loss{"train loss", {}, {}}, align{"alignment", {}, {}}, merr{"manifold error", {}, {}},
      memo{"memorization", {}, {}};
  for (const auto& r : trace) {
    const double x = r.step;
    loss.x.push_back(x);
    loss.y.push_back(r.loss);
    align.x.push_back(x);
    align.y.push_back(r.alignment);
    merr.x.push_back(x);
    merr.y.push_back(r.manifold_error);
    memo.x.push_back(x);
    memo.y.push_back(r.memorization);
  }
  return {{"trace_loss_alignment.svg", dual_axis_svg("Loss and alignment", "step", loss, align)},
          {"trace_error_memorization.svg", dual_axis_svg("Manifold error and memorization", "step", merr, memo)}};
}

std::vector<std::string> emit_plots(const MetricTrace& trace, const std::string& out_dir) {
  auto svgs = trace_svgs(trace);
  ensure_dir(out_dir);
  std::vector<std::string> paths;
  for (const auto& [name, body] : svgs) {
    const std::string p = (std::filesystem::path(out_dir) / name).string();
    write_text(p, body);
    paths.push_back(p);
  }
  return paths;
}

}  // namespace mfd
