#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ibf {

enum class MarkerState { crystallized, transient, gated_off };

struct ParticleMarker {
  double x = 0.0;
  double y = 0.0;
  MarkerState state = MarkerState::transient;
};

// Correction-field snapshot on a square grid over [lo, hi]^2.
// values is row-major with row 0 at the top of the image (world y == hi).
struct LandscapeSnapshot {
  int epoch = 0;
  int phase = 0;
  int grid_n = 60;
  double lo = -3.0;
  double hi = 3.0;
  std::vector<double> values;
  std::vector<ParticleMarker> markers;
};

namespace detail {

inline std::string rgb(double t, int r0, int g0, int b0, int r1, int g1, int b1) {
  const int r = static_cast<int>(std::lround(r0 + t * (r1 - r0)));
  const int g = static_cast<int>(std::lround(g0 + t * (g1 - g0)));
  const int b = static_cast<int>(std::lround(b0 + t * (b1 - b0)));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

// Diverging map: blue for negative, light grey at zero, red for positive.
inline std::string diverging_color(double v, double abs_max) {
  if (abs_max <= 0.0) return "#f5f5f5";
  const double t = std::max(-1.0, std::min(1.0, v / abs_max));
  if (t >= 0.0) return rgb(t, 245, 245, 245, 178, 24, 43);
  return rgb(-t, 245, 245, 245, 33, 102, 172);
}

}  // namespace detail

inline std::string render_landscape_svg(const LandscapeSnapshot& snap) {
  if (snap.grid_n <= 0 || snap.values.size() != static_cast<std::size_t>(snap.grid_n) * static_cast<std::size_t>(snap.grid_n))
    throw std::invalid_argument("render_landscape_svg: grid size mismatch");
  if (!(snap.hi > snap.lo)) throw std::invalid_argument("render_landscape_svg: empty extent");
  const int cell = 8;
  const int n = snap.grid_n;
  const int side = n * cell;
  const int legend_h = 44;
  double abs_max = 0.0;
  for (double v : snap.values) abs_max = std::max(abs_max, std::fabs(v));

  std::string svg;
  svg.reserve(snap.values.size() * 64 + snap.markers.size() * 96 + 1024);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "viewBox=\"0 0 %d %d\">\n",
                side, side + legend_h, side, side + legend_h);
  svg += buf;
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const double v = snap.values[static_cast<std::size_t>(iy) * static_cast<std::size_t>(n) + static_cast<std::size_t>(ix)];
      std::snprintf(buf, sizeof(buf), "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"%s\"/>\n",
                    ix * cell, iy * cell, cell, cell, detail::diverging_color(v, abs_max).c_str());
      svg += buf;
    }
  }
  const double span = snap.hi - snap.lo;
  for (const ParticleMarker& m : snap.markers) {
    const double px = (m.x - snap.lo) / span * side;
    const double py = (snap.hi - m.y) / span * side;
    const char* style = "fill=\"#111111\" stroke=\"#111111\"";
    if (m.state == MarkerState::transient) style = "fill=\"none\" stroke=\"#111111\"";
    if (m.state == MarkerState::gated_off) style = "fill=\"#999999\" stroke=\"#666666\"";
    std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" stroke-width=\"1.5\" %s/>\n", px, py, style);
    svg += buf;
  }
  const int ly = side + 14;
  std::snprintf(buf, sizeof(buf),
                "<circle cx=\"10\" cy=\"%d\" r=\"4\" fill=\"#111111\"/>"
                "<text x=\"18\" y=\"%d\" font-size=\"11\">crystallized</text>\n", ly, ly + 4);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<circle cx=\"100\" cy=\"%d\" r=\"4\" fill=\"none\" stroke=\"#111111\"/>"
                "<text x=\"108\" y=\"%d\" font-size=\"11\">transient</text>\n", ly, ly + 4);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<circle cx=\"180\" cy=\"%d\" r=\"4\" fill=\"#999999\" stroke=\"#666666\"/>"
                "<text x=\"188\" y=\"%d\" font-size=\"11\">gated off</text>\n", ly, ly + 4);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"8\" y=\"%d\" font-size=\"11\">epoch %d, phase %d, |dR| max %.4g</text>\n",
                ly + 22, snap.epoch, snap.phase, abs_max);
  svg += buf;
  svg += "</svg>\n";
  return svg;
}

inline void emit_landscape_svg(const LandscapeSnapshot& snap, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_landscape_svg: cannot open " + path);
  out << render_landscape_svg(snap);
  if (!out) throw std::runtime_error("emit_landscape_svg: write failed for " + path);
}

}  // namespace ibf
