#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "curvrec/error.hpp"
#include "curvrec/raster.hpp"

namespace curvrec {

struct MatchReport {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double tolerance = 0;
};

inline double f1_score(double precision, double recall) noexcept {
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

/// Offsets (dr, dc) with dr^2 + dc^2 <= radius^2.
inline std::vector<Pixel> disk_offsets(double radius) {
  std::vector<Pixel> out;
  const int r = static_cast<int>(std::floor(radius));
  const double r2 = radius * radius;
  for (int dr = -r; dr <= r; ++dr)
    for (int dc = -r; dc <= r; ++dc)
      if (dr * dr + dc * dc <= r2 + 1e-9) out.push_back({dr, dc});
  return out;
}

/// Every pixel within Euclidean distance `radius` of a set pixel.
inline BinaryMap dilate(const BinaryMap& mask, double radius) {
  BinaryMap out(mask.width(), mask.height(), 0);
  const auto disk = disk_offsets(radius);
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask(r, c)) continue;
      for (const auto& d : disk)
        if (out.contains(r + d.row, c + d.col)) out(r + d.row, c + d.col) = 1;
    }
  return out;
}

/// Precision/recall/F1 where a prediction within `tolerance` pixels of the
/// ground truth is a hit, and a ground-truth pixel with a prediction within
/// `tolerance` counts as recalled. Empty predictions give precision 0; empty
/// ground truth gives recall 0; F1 is 0 when both are 0.
inline MatchReport tolerant_f1(const BinaryMap& pred, const BinaryMap& gt, double tolerance) {
  require_same_shape(pred, gt, "tolerant_f1");
  if (!(tolerance >= 0)) throw InvalidParameter("tolerant_f1: tolerance must be >= 0");
  const BinaryMap gt_near = dilate(gt, tolerance);
  const BinaryMap pred_near = dilate(pred, tolerance);
  MatchReport m;
  m.tolerance = tolerance;
  std::size_t gt_count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred.values()[i]) (gt_near.values()[i] ? m.tp : m.fp) += 1;
    if (gt.values()[i]) {
      ++gt_count;
      if (!pred_near.values()[i]) ++m.fn;
    }
  }
  m.precision = m.tp + m.fp ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
  m.recall = gt_count ? static_cast<double>(gt_count - m.fn) / static_cast<double>(gt_count) : 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

/// Percentage of set pixels.
inline double pixel_proportion(const BinaryMap& pred) {
  if (pred.empty()) throw InvalidInput("pixel_proportion: empty map");
  return 100.0 * static_cast<double>(popcount(pred)) / static_cast<double>(pred.size());
}

/// Image -> fold assignment, round-robin by image index.
struct FoldSplit {
  int k = 3;
  std::vector<int> assignments;

  std::vector<std::size_t> members(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] == fold) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> complement(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] != fold) out.push_back(i);
    return out;
  }
};

inline FoldSplit make_folds(std::size_t n_images, int k) {
  if (k < 2) throw InvalidParameter("cross validation needs k >= 2");
  if (n_images < static_cast<std::size_t>(k))
    throw InvalidInput("cross validation: " + std::to_string(n_images) + " images cannot fill " + std::to_string(k) +
                       " folds");
  FoldSplit s{k, std::vector<int>(n_images)};
  for (std::size_t i = 0; i < n_images; ++i) s.assignments[i] = static_cast<int>(i % static_cast<std::size_t>(k));
  return s;
}

struct CrossValidationResult {
  std::size_t best_index = 0;
  double best_mean_f1 = 0;
  std::vector<double> best_fold_f1;
  std::vector<double> mean_f1;  // per grid point
};

/// k-fold grid search. `evaluate(params, train_ids, test_ids)` trains on the
/// training images and returns the mean F1 on the held-out ones. Ties go to
/// the earliest grid point.
template <typename Params, typename Evaluate>
CrossValidationResult cross_validate(std::size_t n_images, std::span<const Params> grid, int k, Evaluate&& evaluate) {
  if (grid.empty()) throw InvalidParameter("cross_validate: empty parameter grid");
  const FoldSplit folds = make_folds(n_images, k);
  CrossValidationResult res;
  res.mean_f1.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> per_fold;
    for (int f = 0; f < k; ++f) {
      const auto train_ids = folds.complement(f);
      const auto test_ids = folds.members(f);
      per_fold.push_back(evaluate(grid[g], std::span<const std::size_t>(train_ids),
                                  std::span<const std::size_t>(test_ids)));
    }
    double mean = 0;
    for (double v : per_fold) mean += v / k;
    res.mean_f1[g] = mean;
    if (g == 0 || mean > res.best_mean_f1) {
      res.best_index = g;
      res.best_mean_f1 = mean;
      res.best_fold_f1 = per_fold;
    }
  }
  return res;
}

}  // namespace curvrec
