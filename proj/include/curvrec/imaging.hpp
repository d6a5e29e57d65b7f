#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "curvrec/error.hpp"
#include "curvrec/parallel.hpp"
#include "curvrec/raster.hpp"

namespace curvrec {

/// Logistic-normalized image; every value lies strictly inside (0, 1).
struct NormalizedImage {
  GrayImage pixels;
  int width() const noexcept { return pixels.width(); }
  int height() const noexcept { return pixels.height(); }
};

/// Square convolution kernel, row-major, odd side.
using Kernel = Raster<double>;

/// Curvilinear feature map, same dimensions as the source image.
using FeatureMap = Raster<double>;

/// Which intensity polarity the curvilinear structures have. The second
/// derivative responds positively to dark valleys, so bright structures are
/// handled by negating the image before filtering.
enum class Polarity { dark, bright };

inline double deg2rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }

/// Sigmoid illumination normalization around the image mean, scaled by the
/// dynamic range. A constant image maps to 0.5 everywhere.
inline NormalizedImage normalize_image(const GrayImage& img) {
  if (img.empty()) throw InvalidInput("normalize_image: empty image");
  const auto& v = img.values();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  const double range = *hi - *lo;
  GrayImage out(img.width(), img.height(), 0.5);
  if (range > 0) {
    auto& o = out.values();
    for (std::size_t i = 0; i < v.size(); ++i) o[i] = 1.0 / (1.0 + std::exp(-(v[i] - mean) / range));
  }
  return {std::move(out)};
}

namespace detail {

inline void check_kernel_params(double variance, int size) {
  if (size <= 0 || size % 2 == 0)
    throw InvalidParameter("kernel size must be a positive odd number, got " + std::to_string(size));
  if (!(variance > 0) || !std::isfinite(variance))
    throw InvalidParameter("kernel variance must be positive");
}

// Second partial derivatives of the isotropic Gaussian with variance s2,
// evaluated at offset (x = column, y = row).
struct GaussianHessian {
  double xx, xy, yy;
};

inline GaussianHessian gaussian_hessian(double x, double y, double s2) noexcept {
  const double g = std::exp(-(x * x + y * y) / (2 * s2)) / (2 * std::numbers::pi * s2);
  const double s4 = s2 * s2;
  return {g * (x * x / s4 - 1 / s2), g * x * y / s4, g * (y * y / s4 - 1 / s2)};
}

inline void remove_mean(Kernel& k) {
  auto& v = k.values();
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (auto& x : v) x -= mean;
}

}  // namespace detail

/// Second directional derivative of the Gaussian along theta, sampled on the
/// integer grid without any correction. Angles follow the (column, row) frame.
inline Kernel steerable_kernel_raw(double theta_deg, double variance, int size) {
  detail::check_kernel_params(variance, size);
  const double c = std::cos(deg2rad(theta_deg));
  const double s = std::sin(deg2rad(theta_deg));
  const int h = size / 2;
  Kernel k(size, size);
  for (int r = 0; r < size; ++r)
    for (int q = 0; q < size; ++q) {
      const auto H = detail::gaussian_hessian(q - h, r - h, variance);
      k(r, q) = c * c * H.xx + 2 * c * s * H.xy + s * s * H.yy;
    }
  return k;
}

/// Oriented second-derivative-of-Gaussian filter with its sampled mean
/// removed, so the coefficients sum to zero.
inline Kernel steerable_kernel(double theta_deg, double variance, int size) {
  Kernel k = steerable_kernel_raw(theta_deg, variance, size);
  detail::remove_mean(k);
  return k;
}

/// 2D convolution with reflect padding; output has the input's shape.
inline GrayImage convolve(const GrayImage& img, const Kernel& k) {
  if (img.empty()) throw InvalidInput("convolve: empty image");
  if (k.width() != k.height() || k.width() % 2 == 0)
    throw InvalidParameter("convolve: kernel must be square with odd side");
  const int h = k.width() / 2;
  const int W = img.width();
  const int H = img.height();
  // Pre-reflected column/row indices avoid per-tap modulo.
  std::vector<int> cols(W + 2 * h), rows(H + 2 * h);
  for (int i = 0; i < W + 2 * h; ++i) cols[i] = reflect_index(i - h, W);
  for (int i = 0; i < H + 2 * h; ++i) rows[i] = reflect_index(i - h, H);
  GrayImage out(W, H);
  parallel_for(0, static_cast<std::size_t>(H), [&](std::size_t ri) {
    const int r = static_cast<int>(ri);
    for (int c = 0; c < W; ++c) {
      double acc = 0;
      for (int i = 0; i < k.height(); ++i) {
        const int src_r = rows[r - (i - h) + h];
        for (int j = 0; j < k.width(); ++j) acc += k(i, j) * img(src_r, cols[c - (j - h) + h]);
      }
      out(r, c) = acc;
    }
  });
  return out;
}

/// Steerable filter bank: orientations (degrees in [0, 180)), Gaussian
/// variances and a common odd kernel side.
struct FilterBank {
  std::vector<double> orientations{0, 22.5, 45, 67.5, 90, 112.5, 135, 157.5};
  std::vector<double> scales{2, 4, 8};
  int kernel_size = 21;

  void validate() const {
    if (orientations.empty()) throw InvalidParameter("filter bank needs at least one orientation");
    if (scales.empty()) throw InvalidParameter("filter bank needs at least one scale");
    for (double a : orientations)
      if (!(a >= 0 && a < 180)) throw InvalidParameter("orientations must lie in [0, 180)");
    for (double s : scales) detail::check_kernel_params(s, kernel_size);
    if (kernel_size % 2 == 0) throw InvalidParameter("kernel size must be odd");
  }
};

/// Per-orientation responses averaged after taking the maximum over scales.
/// Each oriented response is steered from the three (mean-removed) Hessian
/// basis responses, which is exact because mean removal is linear.
inline FeatureMap feature_map(const NormalizedImage& img, const FilterBank& bank,
                              Polarity polarity = Polarity::dark) {
  bank.validate();
  if (img.pixels.empty()) throw InvalidInput("feature_map: empty image");
  GrayImage src = img.pixels;
  if (polarity == Polarity::bright)
    for (auto& v : src.values()) v = -v;

  const std::size_t n = src.size();
  const std::size_t n_theta = bank.orientations.size();
  std::vector<std::vector<double>> best(n_theta, std::vector<double>(n, -HUGE_VAL));

  for (double variance : bank.scales) {
    const int size = bank.kernel_size;
    const int h = size / 2;
    Kernel kxx(size, size), kxy(size, size), kyy(size, size);
    for (int r = 0; r < size; ++r)
      for (int q = 0; q < size; ++q) {
        const auto H = detail::gaussian_hessian(q - h, r - h, variance);
        kxx(r, q) = H.xx;
        kxy(r, q) = H.xy;
        kyy(r, q) = H.yy;
      }
    detail::remove_mean(kxx);
    detail::remove_mean(kxy);
    detail::remove_mean(kyy);
    const GrayImage rxx = convolve(src, kxx);
    const GrayImage rxy = convolve(src, kxy);
    const GrayImage ryy = convolve(src, kyy);
    for (std::size_t t = 0; t < n_theta; ++t) {
      const double c = std::cos(deg2rad(bank.orientations[t]));
      const double s = std::sin(deg2rad(bank.orientations[t]));
      auto& b = best[t];
      for (std::size_t i = 0; i < n; ++i) {
        const double resp = c * c * rxx.values()[i] + 2 * c * s * rxy.values()[i] + s * s * ryy.values()[i];
        b[i] = std::max(b[i], resp);
      }
    }
  }

  FeatureMap phi(src.width(), src.height(), 0.0);
  for (std::size_t t = 0; t < n_theta; ++t)
    for (std::size_t i = 0; i < n; ++i) phi.values()[i] += best[t][i];
  for (auto& v : phi.values()) v /= static_cast<double>(n_theta);
  return phi;
}

/// Min-max range of a raster; used to put feature values on a common scale.
struct ValueRange {
  double lo = 0;
  double hi = 1;
};

template <typename T>
ValueRange value_range(const Raster<T>& r) {
  if (r.empty()) return {};
  const auto [lo, hi] = std::minmax_element(r.values().begin(), r.values().end());
  return {static_cast<double>(*lo), static_cast<double>(*hi)};
}

}  // namespace curvrec
