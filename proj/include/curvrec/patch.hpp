#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "curvrec/error.hpp"
#include "curvrec/imaging.hpp"
#include "curvrec/raster.hpp"

namespace curvrec {

/// Ground-truth structure mask, nonzero on the structure.
using GroundTruthMap = BinaryMap;

/// Horizontal bar of `thickness` rows centred in a side x side window: the
/// canonical appearance of a line at orientation 0.
struct BasisPattern {
  int side = 0;
  int thickness = 0;
  BinaryMap mask;

  std::size_t dimension() const { return static_cast<std::size_t>(side) * thickness; }
  int first_row() const { return side / 2 - thickness / 2; }
  int last_row() const { return side / 2 + thickness / 2; }
};

inline BasisPattern make_basis_pattern(int side, int thickness) {
  if (side <= 0 || side % 2 == 0) throw InvalidParameter("basis pattern side must be odd");
  if (thickness <= 0 || thickness % 2 == 0) throw InvalidParameter("bar thickness must be odd");
  if (thickness >= side) throw InvalidParameter("bar thickness must be smaller than the side");
  BasisPattern b{side, thickness, BinaryMap(side, side, 0)};
  for (int r = b.first_row(); r <= b.last_row(); ++r)
    for (int c = 0; c < side; ++c) b.mask(r, c) = 1;
  return b;
}

struct OrientedPatch {
  Pixel center;
  double angle = 0;  // degrees
  Raster<double> values;

  int side() const noexcept { return values.width(); }
};

struct FeatureVector {
  std::vector<double> values;
  Pixel center;
  double angle = 0;
};

namespace detail {

// cos/sin with exact values on multiples of 90 degrees, so axis-aligned
// rotations resample on the integer grid.
inline std::pair<double, double> cos_sin_deg(double deg) {
  const double q = deg / 90.0;
  if (q == std::round(q)) {
    switch (((static_cast<long long>(q) % 4) + 4) % 4) {
      case 0: return {1, 0};
      case 1: return {0, 1};
      case 2: return {-1, 0};
      default: return {0, -1};
    }
  }
  return {std::cos(deg2rad(deg)), std::sin(deg2rad(deg))};
}

}  // namespace detail

/// Resamples a side x side window around `center`, rotated so that direction
/// theta of the source maps onto the window's horizontal axis. Sample (r, c)
/// reads the source at center + R(theta) * (c - h, r - h) in (column, row)
/// coordinates, bilinearly, with reflect padding.
template <typename T>
OrientedPatch extract_rotated_patch(const Raster<T>& map, Pixel center, double theta_deg, int side) {
  if (side <= 0 || side % 2 == 0) throw InvalidParameter("patch side must be odd");
  if (map.empty()) throw InvalidInput("extract_rotated_patch: empty raster");
  const auto [c, s] = detail::cos_sin_deg(theta_deg);
  const int h = side / 2;
  OrientedPatch p{center, theta_deg, Raster<double>(side, side)};
  for (int r = 0; r < side; ++r) {
    const double dv = r - h;
    for (int q = 0; q < side; ++q) {
      const double du = q - h;
      const double col = center.col + c * du - s * dv;
      const double row = center.row + s * du + c * dv;
      p.values(r, q) = sample_bilinear(map, row, col);
    }
  }
  return p;
}

inline constexpr int kHistogramBins = 32;
using Histogram = std::array<double, kHistogramBins>;

/// Normalized 32-bin histogram of values mapped through `range` onto [0, 1].
/// An empty selection yields an all-zero histogram.
inline Histogram histogram(std::span<const double> values, ValueRange range) {
  Histogram h{};
  if (values.empty()) return h;
  const double span = range.hi - range.lo;
  for (double v : values) {
    double t = span > 0 ? (v - range.lo) / span : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const int bin = std::min(kHistogramBins - 1, static_cast<int>(t * kHistogramBins));
    h[bin] += 1;
  }
  for (auto& x : h) x /= static_cast<double>(values.size());
  return h;
}

/// Chi-squared distance; bins empty in both histograms contribute nothing.
inline double chi_squared(const Histogram& p, const Histogram& q) noexcept {
  double acc = 0;
  for (int i = 0; i < kHistogramBins; ++i) {
    const double den = p[i] + q[i];
    if (den > 0) acc += (p[i] - q[i]) * (p[i] - q[i]) / den;
  }
  return 0.5 * acc;
}

/// Chi-squared contrast between on-template and off-template samples.
inline double template_contrast(const OrientedPatch& patch, const BasisPattern& b, ValueRange range) {
  std::vector<double> on, off;
  on.reserve(b.dimension());
  off.reserve(patch.values.size() - b.dimension());
  const auto& m = b.mask.values();
  const auto& v = patch.values.values();
  for (std::size_t i = 0; i < v.size(); ++i) (m[i] ? on : off).push_back(v[i]);
  return chi_squared(histogram(on, range), histogram(off, range));
}

/// Chi-squared contrast for every angle in `thetas`, in order.
inline std::vector<double> orientation_scores(const FeatureMap& feature, Pixel x, const BasisPattern& b,
                                              std::span<const double> thetas, ValueRange range) {
  std::vector<double> out;
  out.reserve(thetas.size());
  for (double t : thetas) out.push_back(template_contrast(extract_rotated_patch(feature, x, t, b.side), b, range));
  return out;
}

/// Angle maximizing the chi-squared contrast between the template's bar and
/// its complement. Ties go to the earliest angle in `thetas`. `range` is the
/// histogram domain, normally the feature map's min-max range.
inline double estimate_orientation(const FeatureMap& feature, Pixel x, const BasisPattern& b,
                                   std::span<const double> thetas, ValueRange range) {
  if (thetas.empty()) throw InvalidParameter("estimate_orientation: empty angle set");
  const auto scores = orientation_scores(feature, x, b, thetas, range);
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return thetas[best];
}

inline double estimate_orientation(const FeatureMap& feature, Pixel x, const BasisPattern& b,
                                   std::span<const double> thetas) {
  return estimate_orientation(feature, x, b, thetas, value_range(feature));
}

/// Patch values under the template's bar, row-major.
inline FeatureVector feature_vector(const OrientedPatch& patch, const BasisPattern& b) {
  if (patch.side() != b.side)
    throw InvalidInput("feature_vector: patch side " + std::to_string(patch.side()) +
                       " does not match pattern side " + std::to_string(b.side));
  FeatureVector z{{}, patch.center, patch.angle};
  z.values.reserve(b.dimension());
  const auto& m = b.mask.values();
  const auto& v = patch.values.values();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (m[i]) z.values.push_back(v[i]);
  return z;
}

/// One minus the intersection-over-union between the (binarized at 0.5)
/// rotated ground-truth patch and the template. The union always contains the
/// template, so it is never empty for a valid pattern; an empty union would
/// still map to 1.
inline double patch_loss(const OrientedPatch& gt_patch, const BasisPattern& b) {
  if (gt_patch.side() != b.side) throw InvalidInput("patch_loss: side mismatch");
  std::size_t inter = 0, uni = 0;
  const auto& m = b.mask.values();
  const auto& v = gt_patch.values.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const bool g = v[i] >= 0.5;
    const bool t = m[i] != 0;
    inter += g && t;
    uni += g || t;
  }
  if (uni == 0) return 1.0;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

/// IoU loss between two binary masks of equal shape (symmetric form).
inline double mask_loss(const BinaryMap& a, const BinaryMap& b) {
  require_same_shape(a, b, "mask_loss");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a.values()[i] != 0, y = b.values()[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  if (uni == 0) return 1.0;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace curvrec
