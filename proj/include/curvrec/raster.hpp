#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "curvrec/error.hpp"

namespace curvrec {

/// Integer pixel coordinate. Rows grow downwards, columns to the right.
struct Pixel {
  int row = 0;
  int col = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Dense row-major 2D raster.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;

  Raster(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw InvalidParameter("raster dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  Raster(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width < 0 || height < 0) throw InvalidParameter("raster dimensions must be non-negative");
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw InvalidInput("raster data length does not match width*height");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int row, int col) const noexcept {
    return row >= 0 && col >= 0 && row < height_ && col < width_;
  }
  bool contains(Pixel p) const noexcept { return contains(p.row, p.col); }

  T& operator()(int row, int col) noexcept {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  const T& operator()(int row, int col) const noexcept {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  T& operator[](Pixel p) noexcept { return (*this)(p.row, p.col); }
  const T& operator[](Pixel p) const noexcept { return (*this)(p.row, p.col); }

  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * width_ + col;
  }
  Pixel pixel(std::size_t index) const noexcept {
    return {static_cast<int>(index / width_), static_cast<int>(index % width_)};
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& values() noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  bool same_shape(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using GrayImage = Raster<double>;
using BinaryMap = Raster<std::uint8_t>;

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height())
    throw InvalidInput(std::string(what) + ": dimension mismatch (" + std::to_string(a.width()) +
                       "x" + std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                       "x" + std::to_string(b.height()) + ")");
}

/// Mirror an integer index into [0, n) without repeating the edge sample
/// (…, 2, 1, 0, 1, 2, …). Works for arbitrarily distant indices.
inline int reflect_index(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

/// Continuous counterpart of reflect_index: mirrors about 0 and n-1.
inline double reflect_coord(double x, int n) noexcept {
  if (n == 1) return 0.0;
  const double period = 2.0 * (n - 1);
  x = std::fmod(x, period);
  if (x < 0) x += period;
  return x <= n - 1 ? x : period - x;
}

/// Bilinear sample at a continuous (row, col) position with reflect padding.
template <typename T>
double sample_bilinear(const Raster<T>& r, double row, double col) noexcept {
  row = reflect_coord(row, r.height());
  col = reflect_coord(col, r.width());
  const int r0 = std::min(static_cast<int>(std::floor(row)), r.height() - 1);
  const int c0 = std::min(static_cast<int>(std::floor(col)), r.width() - 1);
  const int r1 = std::min(r0 + 1, r.height() - 1);
  const int c1 = std::min(c0 + 1, r.width() - 1);
  const double fr = row - r0;
  const double fc = col - c0;
  const double top = (1 - fc) * static_cast<double>(r(r0, c0)) + fc * static_cast<double>(r(r0, c1));
  const double bot = (1 - fc) * static_cast<double>(r(r1, c0)) + fc * static_cast<double>(r(r1, c1));
  return (1 - fr) * top + fr * bot;
}

template <typename T>
std::size_t popcount(const Raster<T>& r) {
  return static_cast<std::size_t>(
      std::count_if(r.values().begin(), r.values().end(), [](const T& v) { return v != T{}; }));
}

}  // namespace curvrec
