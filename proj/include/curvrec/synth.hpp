#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "curvrec/error.hpp"
#include "curvrec/raster.hpp"

namespace curvrec {

struct SynthOptions {
  int width = 192;
  int height = 192;
  int thickness = 5;
  double noise = 0.1;  // standard deviation of the additive Gaussian noise
  double background = 0.25;
  double foreground = 0.75;
  int branches = 4;
  double segment_min = 18;
  double segment_max = 32;
  double max_turn_deg = 25;

  void validate() const {
    if (width < 16 || height < 16) throw InvalidParameter("synthetic images must be at least 16x16");
    if (thickness < 1) throw InvalidParameter("thickness must be >= 1");
    if (noise < 0) throw InvalidParameter("noise must be non-negative");
    if (branches < 0) throw InvalidParameter("branches must be non-negative");
    if (!(segment_min > 0 && segment_max >= segment_min)) throw InvalidParameter("bad segment length range");
  }
};

struct Segment {
  double x0, y0, x1, y1;  // x = column, y = row
};

struct SynthSample {
  GrayImage image;
  BinaryMap truth;
  std::vector<Segment> segments;
};

namespace detail {

inline double segment_distance(const Segment& s, double x, double y) noexcept {
  const double dx = s.x1 - s.x0, dy = s.y1 - s.y0;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((x - s.x0) * dx + (y - s.y0) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double px = s.x0 + t * dx - x, py = s.y0 + t * dy - y;
  return std::sqrt(px * px + py * py);
}

class TreeGrower {
 public:
  TreeGrower(const SynthOptions& opt, std::mt19937_64& rng) : opt_(opt), rng_(rng) {}

  std::vector<Segment> grow() {
    const double margin = opt_.thickness + 2.0;
    // trunk enters from the left edge and heads across the image
    const double y = uniform(0.3, 0.7) * opt_.height;
    grow_branch(margin, y, deg(uniform(-20, 20)), 1000);
    if (segments_.empty()) return segments_;
    for (int b = 0, attempts = 0; b < opt_.branches && attempts < 50 * (opt_.branches + 1); ++attempts) {
      const std::size_t parent = index(segments_.size());
      const Segment& p = segments_[parent];
      const double t = uniform(0.2, 0.8);
      const double x0 = p.x0 + t * (p.x1 - p.x0), y0 = p.y0 + t * (p.y1 - p.y0);
      const double heading = std::atan2(p.y1 - p.y0, p.x1 - p.x0) + (coin() ? 1 : -1) * deg(uniform(35, 75));
      const std::size_t before = segments_.size();
      grow_branch(x0, y0, heading, 3 + static_cast<int>(index(4)));
      if (segments_.size() > before) ++b;
    }
    return segments_;
  }

 private:
  static double deg(double d) { return d * std::numbers::pi / 180.0; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  bool coin() { return (rng_() >> 63) != 0; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(unit() * static_cast<double>(n)) % n; }

  bool inside(double x, double y) const {
    const double m = opt_.thickness + 2.0;
    return x >= m && y >= m && x <= opt_.width - 1 - m && y <= opt_.height - 1 - m;
  }

  // A new segment must keep a clear gap to every earlier segment outside its
  // own branch. Points near the branch origin are exempt on the first segment.
  bool clear_of_others(const Segment& s, std::size_t own_from, bool first) const {
    const double gap = 2.0 * opt_.thickness + 2.0;
    const int steps = std::max(2, static_cast<int>(std::hypot(s.x1 - s.x0, s.y1 - s.y0)));
    for (int k = 0; k <= steps; ++k) {
      const double t = static_cast<double>(k) / steps;
      const double x = s.x0 + t * (s.x1 - s.x0), y = s.y0 + t * (s.y1 - s.y0);
      if (first && std::hypot(x - s.x0, y - s.y0) <= gap) continue;
      for (std::size_t i = 0; i < own_from; ++i)
        if (segment_distance(segments_[i], x, y) < gap) return false;
    }
    return true;
  }

  void grow_branch(double x, double y, double heading, int max_segments) {
    const std::size_t own_from = segments_.size();
    for (int k = 0; k < max_segments; ++k) {
      const double len = uniform(opt_.segment_min, opt_.segment_max);
      const double nx = x + len * std::cos(heading), ny = y + len * std::sin(heading);
      if (!inside(nx, ny)) break;
      const Segment s{x, y, nx, ny};
      if (!clear_of_others(s, own_from, k == 0)) break;
      segments_.push_back(s);
      x = nx;
      y = ny;
      heading += deg(uniform(-opt_.max_turn_deg, opt_.max_turn_deg));
    }
  }

  const SynthOptions& opt_;
  std::mt19937_64& rng_;
  std::vector<Segment> segments_;
};

}  // namespace detail

/// Renders one labeled image of a random tree of polylines: bright structure of
/// the given thickness on a dark background plus Gaussian noise, clamped to [0, 1].
inline SynthSample synthesize_network(const SynthOptions& opt, std::uint64_t seed) {
  opt.validate();
  std::mt19937_64 rng(seed);
  SynthSample out;
  out.segments = detail::TreeGrower(opt, rng).grow();
  out.truth = BinaryMap(opt.width, opt.height, 0);
  out.image = GrayImage(opt.width, opt.height, opt.background);
  const double radius = opt.thickness / 2.0;
  for (const auto& s : out.segments) {
    const int c0 = static_cast<int>(std::floor(std::min(s.x0, s.x1) - radius - 1));
    const int c1 = static_cast<int>(std::ceil(std::max(s.x0, s.x1) + radius + 1));
    const int r0 = static_cast<int>(std::floor(std::min(s.y0, s.y1) - radius - 1));
    const int r1 = static_cast<int>(std::ceil(std::max(s.y0, s.y1) + radius + 1));
    for (int r = std::max(0, r0); r <= std::min(opt.height - 1, r1); ++r)
      for (int c = std::max(0, c0); c <= std::min(opt.width - 1, c1); ++c)
        if (detail::segment_distance(s, c, r) <= radius) out.truth(r, c) = 1;
  }
  // Box-Muller on raw 64-bit draws keeps the noise identical across standard libraries.
  auto unit = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  for (std::size_t i = 0; i < out.image.size(); ++i) {
    const double u1 = unit(), u2 = unit();
    const double g = std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
    const double base = out.truth.values()[i] ? opt.foreground : opt.background;
    out.image.values()[i] = std::clamp(base + opt.noise * g, 0.0, 1.0);
  }
  return out;
}

}  // namespace curvrec
