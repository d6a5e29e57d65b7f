#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "curvrec/error.hpp"
#include "curvrec/eval.hpp"
#include "curvrec/imaging.hpp"
#include "curvrec/parallel.hpp"
#include "curvrec/patch.hpp"
#include "curvrec/ranking.hpp"

namespace curvrec {

/// Ranking scores and estimated orientations on a regular subsampling grid.
/// Grid point (gr, gc) sits at pixel (offset + gr*stride, offset + gc*stride).
struct RankScoreMap {
  int width = 0;
  int height = 0;
  int stride = 1;
  int offset = 0;
  int grid_cols = 0;
  int grid_rows = 0;
  std::vector<double> score;  // row-major over the grid
  std::vector<double> theta;

  std::size_t size() const noexcept { return score.size(); }
  Pixel pixel(std::size_t g) const noexcept {
    return {offset + static_cast<int>(g / grid_cols) * stride, offset + static_cast<int>(g % grid_cols) * stride};
  }
};

inline RankScoreMap make_grid(int width, int height, int stride) {
  if (stride < 1) throw InvalidParameter("grid stride must be >= 1");
  if (width < 1 || height < 1) throw InvalidInput("grid over an empty image");
  RankScoreMap m;
  m.width = width;
  m.height = height;
  m.stride = stride;
  m.offset = (std::min({stride, width, height}) - 1) / 2;
  m.grid_cols = (width - 1 - m.offset) / stride + 1;
  m.grid_rows = (height - 1 - m.offset) / stride + 1;
  m.score.assign(static_cast<std::size_t>(m.grid_cols) * m.grid_rows, 0.0);
  m.theta.assign(m.score.size(), 0.0);
  return m;
}

/// Scores every grid point: estimate the local orientation, rotate the patch
/// onto the template and rank it with the model.
inline RankScoreMap infer_scores(const FeatureMap& feature, const RankingModel& model, const BasisPattern& b,
                                 std::span<const double> thetas, int stride) {
  if (model.dimension() != b.dimension())
    throw InvalidInput("infer_scores: model dimension " + std::to_string(model.dimension()) +
                       " does not match pattern dimension " + std::to_string(b.dimension()));
  RankScoreMap m = make_grid(feature.width(), feature.height(), stride);
  const ValueRange range = value_range(feature);
  parallel_for(0, m.size(), [&](std::size_t g) {
    const Pixel x = m.pixel(g);
    const double t = estimate_orientation(feature, x, b, thetas, range);
    const auto z = feature_vector(extract_rotated_patch(feature, x, t, b.side), b);
    m.theta[g] = t;
    m.score[g] = score(model, z.values);
  });
  return m;
}

/// Grid indices ordered by decreasing score; equal scores keep row-major order.
inline std::vector<std::size_t> rank_order(const RankScoreMap& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores.score[a] > scores.score[b]; });
  return idx;
}

/// Number of grid points retained for proportion rho of the image pixels.
inline std::size_t retained_count(const RankScoreMap& scores, double rho) {
  const double k = rho * static_cast<double>(scores.width) * static_cast<double>(scores.height);
  return std::min(scores.size(), static_cast<std::size_t>(std::llround(k)));
}

/// Marks the grid points ranked 1 .. rho*|I| (|I| counts all image pixels).
inline BinaryMap top_rank_binary_map(const RankScoreMap& scores, double rho) {
  if (!(rho > 0 && rho <= 1)) throw InvalidParameter("top_rank_binary_map: rho must lie in (0, 1]");
  BinaryMap mask(scores.width, scores.height, 0);
  const auto order = rank_order(scores);
  const std::size_t k = retained_count(scores, rho);
  for (std::size_t i = 0; i < k; ++i) mask[scores.pixel(order[i])] = 1;
  return mask;
}

/// Candidate proportions: 0.001 .. 0.050 in steps of 0.001, then 0.06 .. 0.50
/// in steps of 0.01.
inline std::vector<double> rho_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 50; ++i) g.push_back(i / 1000.0);
  for (int i = 6; i <= 50; ++i) g.push_back(i / 100.0);
  return g;
}

struct RhoCalibration {
  double rho = 0;
  double mean_f1 = 0;
  std::vector<double> grid;
  std::vector<double> curve;  // mean F1 per grid value
};

/// Picks the grid proportion whose top-rank maps maximize the mean tolerant
/// F1 against the training ground truth; ties go to the smaller rho.
inline RhoCalibration calibrate_rho(std::span<const RankScoreMap> scores, std::span<const GroundTruthMap> gts,
                                    double tolerance) {
  if (scores.empty() || scores.size() != gts.size())
    throw InvalidInput("calibrate_rho: need matching, non-empty score maps and ground truths");
  RhoCalibration cal;
  cal.grid = rho_grid();
  cal.curve.assign(cal.grid.size(), 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].width != gts[i].width() || scores[i].height != gts[i].height())
      throw InvalidInput("calibrate_rho: score map and ground truth differ in size");
    const auto order = rank_order(scores[i]);
    for (std::size_t g = 0; g < cal.grid.size(); ++g) {
      BinaryMap mask(scores[i].width, scores[i].height, 0);
      const std::size_t k = retained_count(scores[i], cal.grid[g]);
      for (std::size_t r = 0; r < k; ++r) mask[scores[i].pixel(order[r])] = 1;
      cal.curve[g] += tolerant_f1(mask, gts[i], tolerance).f1 / static_cast<double>(scores.size());
    }
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < cal.grid.size(); ++g)
    if (cal.curve[g] > cal.curve[best]) best = g;
  cal.rho = cal.grid[best];
  cal.mean_f1 = cal.curve[best];
  return cal;
}

struct StructuredScoreMap {
  Raster<double> pi;
  std::size_t patches_used = 0;
  std::string warning;
};

inline constexpr double kMinScoreFraction = 1e-3;

/// Blends the template, scaled by the inverse ranking score b / s_i, at every
/// selected grid point (rotated by its orientation). Each placed bar pixel is
/// one least-squares observation of the map, so overlaps average. Patches
/// scoring at or below 1e-3 of the best selected score are skipped.
inline StructuredScoreMap synthesize(const RankScoreMap& scores, const BinaryMap& selected, const BasisPattern& b) {
  if (selected.width() != scores.width || selected.height() != scores.height)
    throw InvalidInput("synthesize: selection and score map differ in size");
  StructuredScoreMap out{Raster<double>(scores.width, scores.height, 0.0), 0, {}};
  std::vector<std::size_t> chosen;
  double best = -HUGE_VAL;
  for (std::size_t g = 0; g < scores.size(); ++g)
    if (selected[scores.pixel(g)]) {
      chosen.push_back(g);
      best = std::max(best, scores.score[g]);
    }
  if (chosen.empty()) {
    out.warning = "no grid point selected";
    return out;
  }
  if (!(best > 0)) {
    out.warning = "all selected scores are non-positive; structured score map is empty";
    return out;
  }
  const double s_min = kMinScoreFraction * best;

  Raster<double> sum(scores.width, scores.height, 0.0);
  Raster<std::uint32_t> count(scores.width, scores.height, 0);
  const int h = b.side / 2;
  const int reach = static_cast<int>(std::ceil(h * std::numbers::sqrt2)) + 1;
  for (std::size_t g : chosen) {
    const double s = scores.score[g];
    if (s <= s_min) continue;
    ++out.patches_used;
    const double value = 1.0 / s;
    const Pixel x = scores.pixel(g);
    const auto [c, sn] = detail::cos_sin_deg(scores.theta[g]);
    for (int dr = -reach; dr <= reach; ++dr)
      for (int dc = -reach; dc <= reach; ++dc) {
        const int row = x.row + dr, col = x.col + dc;
        if (!sum.contains(row, col)) continue;
        const double du = c * dc + sn * dr;
        const double dv = -sn * dc + c * dr;
        const long q = std::lround(du) + h;
        const long r = std::lround(dv) + h;
        if (q < 0 || r < 0 || q >= b.side || r >= b.side) continue;
        if (!b.mask(static_cast<int>(r), static_cast<int>(q))) continue;
        sum(row, col) += value;
        count(row, col) += 1;
      }
  }
  for (std::size_t i = 0; i < sum.size(); ++i)
    if (count.values()[i]) out.pi.values()[i] = sum.values()[i] / count.values()[i];
  if (out.patches_used == 0) out.warning = "no selected patch scored above the minimum";
  return out;
}

}  // namespace curvrec
