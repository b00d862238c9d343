#include "svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace sq::cli {

namespace {

const double W = 560, H = 400, M = 40;

struct Frame {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  double X(double x) const { return M + (x - x0) / std::max(1e-12, x1 - x0) * (W - 2 * M); }
  double Y(double y) const { return H - M - (y - y0) / std::max(1e-12, y1 - y0) * (H - 2 * M); }
};

std::string head(const std::string& title) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n<!-- sheafq svg 1 -->\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{}\" y=\"20\">{}</text>\n",
      W, H, M, title);
}

std::string axes(const Frame& f, const std::string& xl, const std::string& yl) {
  return fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n"
      "<text x=\"{}\" y=\"{}\">{:.3g}</text><text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3g}</text>\n"
      "<text x=\"{}\" y=\"{}\">{}</text>\n"
      "<text x=\"4\" y=\"{}\">{:.3g}</text><text x=\"4\" y=\"{}\">{:.3g}</text><text x=\"4\" y=\"{}\">{}</text>\n",
      M, M, W - 2 * M, H - 2 * M, M, H - M + 16, f.x0, W - M, H - M + 16, f.x1, W / 2, H - 6, xl, H - M, f.y0,
      M + 4, f.y1, H / 2, yl);
}

}  // namespace

std::string svg_scatter(const std::string& title, const std::vector<Series>& series) {
  Frame f{1e300, -1e300, 1e300, -1e300};
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      f.x0 = std::min(f.x0, x);
      f.x1 = std::max(f.x1, x);
      f.y0 = std::min(f.y0, y);
      f.y1 = std::max(f.y1, y);
    }
  if (f.x0 > f.x1) f = Frame{};
  std::string out = head(title) + axes(f, "x", "t");
  double ly = M + 16;
  for (const auto& s : series) {
    for (auto [x, y] : s.points)
      out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{}\" fill=\"{}\"/>\n", f.X(x), f.Y(y), s.radius,
                         s.color);
    out += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", W - M - 150, ly, s.color, s.label);
    ly += 14;
  }
  return out + "</svg>\n";
}

std::string svg_barcode(const std::string& title, const Barcode& bc) {
  Frame f{1e300, -1e300, 0, static_cast<double>(bc.bars.size())};
  for (const auto& b : bc.bars) {
    f.x0 = std::min(f.x0, b.birth);
    f.x1 = std::max(f.x1, std::isfinite(b.death) ? b.death : b.birth);
  }
  if (bc.bars.empty()) f = Frame{};
  const double pad = 0.1 * std::max(1.0, f.x1 - f.x0);
  f.x0 -= pad;
  f.x1 += pad;
  auto bars = bc.bars;
  std::sort(bars.begin(), bars.end(), [](const Bar& a, const Bar& b) {
    return std::tie(a.degree, a.birth, a.death) < std::tie(b.degree, b.birth, b.death);
  });
  std::string out = head(title) + axes(f, "t", "bars");
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double y = f.Y(i + 0.5);
    const double end = std::isfinite(b.death) ? f.X(b.death) : W - M;
    out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" "
                       "stroke-width=\"3\"/>\n",
                       f.X(b.birth), y, end, y, colors[std::clamp(b.degree, 0, 3)]);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">H{}</text>\n", end + 4, y + 4, b.degree);
  }
  return out + "</svg>\n";
}

std::string svg_cones(const std::string& title, const ConeSet& ss, const ConeSet& reference) {
  Frame f{1e300, -1e300, 1e300, -1e300};
  for (const auto* set : {&ss, &reference})
    for (const auto& q : set->points) {
      if (q.x.empty()) continue;
      f.x0 = std::min(f.x0, q.x[0]);
      f.x1 = std::max(f.x1, q.x[0]);
      f.y0 = std::min(f.y0, q.t);
      f.y1 = std::max(f.y1, q.t);
    }
  if (f.x0 > f.x1) f = Frame{};
  std::string out = head(title) + axes(f, "x", "t");
  for (const auto& q : reference.points)
    if (!q.x.empty() && q.tau > 0)
      out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2\" fill=\"#bbb\"/>\n", f.X(q.x[0]), f.Y(q.t));
  for (const auto& q : ss.points) {
    if (q.x.empty()) continue;
    // the covector tau dt - tau p dx as a normal vector in screen units
    const double sx = (W - 2 * M) / std::max(1e-12, f.x1 - f.x0), st = (H - 2 * M) / std::max(1e-12, f.y1 - f.y0);
    const double a = -(q.p.empty() ? 0.0 : q.p[0]) / sx, b = q.tau / st, n = std::hypot(a, b);
    const double x = f.X(q.x[0]), y = f.Y(q.t);
    if (n == 0) continue;
    const double dx = 12 * a / n, dy = -12 * b / n;
    out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"black\"/>"
                       "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"1.2\" fill=\"black\"/>\n",
                       x, y, x + dx, y + dy, x + dx, y + dy);
  }
  return out + "</svg>\n";
}

}  // namespace sq::cli
