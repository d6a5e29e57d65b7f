#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "curvrec/error.hpp"

namespace curvrec {

struct TrainingSample {
  std::vector<double> z;
  double loss = 0;  // IoU loss in [0, 1]; lower ranks higher
};

struct TrainingSet {
  std::vector<TrainingSample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  std::size_t dimension() const noexcept { return samples.empty() ? 0 : samples.front().z.size(); }

  void validate() const {
    if (samples.size() < 2) throw InvalidInput("training set needs at least 2 samples");
    const std::size_t n = dimension();
    if (n == 0) throw InvalidInput("training samples have zero dimension");
    for (const auto& s : samples) {
      if (s.z.size() != n) throw InvalidInput("training samples differ in dimension");
      if (!(s.loss >= 0 && s.loss <= 1)) throw InvalidInput("sample loss outside [0, 1]");
      for (double v : s.z)
        if (!std::isfinite(v)) throw InvalidInput("non-finite feature value in training set");
    }
  }
};

/// How much score separation an ordered pair (i, j), loss_i < loss_j, must have.
///   loss_scaled: loss_j - loss_i (margin rescaling, the default)
///   unit:        1, with c_ij = [w'z_i - w'z_j < 1]
enum class MarginMode { loss_scaled, unit };

inline std::string to_string(MarginMode m) { return m == MarginMode::unit ? "unit" : "loss_scaled"; }

/// Per-dimension affine standardization fitted on training features.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  bool empty() const noexcept { return mean.empty(); }

  static Standardizer identity(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)}; }

  static Standardizer fit(const TrainingSet& data) {
    const std::size_t n = data.dimension();
    Standardizer s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    const double k = static_cast<double>(data.size());
    for (const auto& smp : data.samples)
      for (std::size_t d = 0; d < n; ++d) s.mean[d] += smp.z[d] / k;
    for (const auto& smp : data.samples)
      for (std::size_t d = 0; d < n; ++d) s.stddev[d] += (smp.z[d] - s.mean[d]) * (smp.z[d] - s.mean[d]) / k;
    for (auto& v : s.stddev) v = v > 1e-24 ? std::sqrt(v) : 1.0;
    return s;
  }

  std::vector<double> apply(std::span<const double> z) const {
    std::vector<double> out(z.begin(), z.end());
    if (empty()) return out;
    for (std::size_t d = 0; d < out.size(); ++d) out[d] = (out[d] - mean[d]) / stddev[d];
    return out;
  }
};

struct TrainStats {
  int iterations = 0;
  double slack = 0;      // true slack at the returned w (most violated constraint)
  double objective = 0;  // 0.5 |w|^2 + C * slack
  double lower_bound = 0;
  double cached_slack = 0;  // slack over the cached planes only
  bool converged = false;
  std::size_t pair_count = 0;
  std::size_t constraint_count = 0;
  std::vector<double> lower_bound_history;
};

struct RankingModel {
  std::vector<double> w;
  double C = 0.1;
  MarginMode margin = MarginMode::loss_scaled;
  Standardizer standardizer;
  TrainStats stats;

  std::size_t dimension() const noexcept { return w.size(); }
};

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

/// Ranking score w'z of a raw feature vector (standardized first when the
/// model carries standardization statistics).
inline double score(const RankingModel& model, std::span<const double> z) {
  if (z.size() != model.dimension())
    throw InvalidInput("score: feature dimension " + std::to_string(z.size()) + " does not match model dimension " +
                       std::to_string(model.dimension()));
  if (model.standardizer.empty()) return dot(model.w, z);
  double acc = 0;
  for (std::size_t d = 0; d < z.size(); ++d)
    acc += model.w[d] * (z[d] - model.standardizer.mean[d]) / model.standardizer.stddev[d];
  return acc;
}

inline constexpr double kMinLossGap = 1e-6;

struct OrderedPair {
  std::uint32_t i;  // lower loss, should score higher
  std::uint32_t j;
};

/// All ordered pairs (i, j) with loss_i < loss_j - min_gap.
inline std::vector<OrderedPair> make_pair_set(const TrainingSet& data, double min_gap = kMinLossGap) {
  std::vector<OrderedPair> pairs;
  const auto k = static_cast<std::uint32_t>(data.size());
  for (std::uint32_t i = 0; i < k; ++i)
    for (std::uint32_t j = 0; j < k; ++j)
      if (data.samples[i].loss < data.samples[j].loss - min_gap) pairs.push_back({i, j});
  return pairs;
}

inline double pair_margin(const TrainingSet& data, OrderedPair p, MarginMode mode) {
  return mode == MarginMode::unit ? 1.0 : data.samples[p.j].loss - data.samples[p.i].loss;
}

/// One aggregated 1-slack constraint: lhs' w >= rhs - xi.
struct ViolatedConstraint {
  std::vector<std::uint8_t> active;  // c_ij per pair, in pair-set order
  std::size_t active_count = 0;
  std::vector<double> lhs;  // (1/|N|) sum c_ij (z_i - z_j)
  double rhs = 0;           // (1/|N|) sum c_ij margin_ij

  double violation(std::span<const double> w) const { return rhs - dot(lhs, w); }
};

/// Most violated aggregated constraint under w: c_ij = 1 exactly when the pair's
/// score difference falls short of its margin. An empty pair set gives an
/// empty constraint.
inline ViolatedConstraint find_most_violated(std::span<const double> w, const TrainingSet& data,
                                             std::span<const OrderedPair> pairs,
                                             MarginMode mode = MarginMode::unit) {
  ViolatedConstraint vc;
  const std::size_t n = data.dimension();
  vc.lhs.assign(n, 0.0);
  vc.active.assign(pairs.size(), 0);
  if (pairs.empty()) return vc;

  std::vector<double> s(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) s[i] = dot(w, data.samples[i].z);

  std::vector<double> coef(data.size(), 0.0);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    const double m = pair_margin(data, pairs[p], mode);
    if (s[i] - s[j] < m) {
      vc.active[p] = 1;
      ++vc.active_count;
      coef[i] += 1;
      coef[j] -= 1;
      vc.rhs += m;
    }
  }
  const double inv = 1.0 / static_cast<double>(pairs.size());
  vc.rhs *= inv;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (coef[i] == 0) continue;
    const double c = coef[i] * inv;
    for (std::size_t d = 0; d < n; ++d) vc.lhs[d] += c * data.samples[i].z[d];
  }
  return vc;
}

namespace detail {

// Dual of  min 0.5|w|^2 + C xi  s.t.  a_k'w >= b_k - xi, xi >= 0
// over the cached cutting planes:
//   max sum alpha_k b_k - 0.5 |sum alpha_k a_k|^2,  alpha >= 0, sum alpha <= C.
// Slot 0 is a zero constraint standing in for xi >= 0 so that the budget
// constraint becomes an equality and pairwise (SMO) updates apply.
class CuttingPlaneDual {
 public:
  CuttingPlaneDual(std::size_t dim, double C) : C_(C), w_(dim, 0.0) {
    a_.emplace_back(dim, 0.0);
    b_.push_back(0.0);
    alpha_.push_back(C);
    gram_.push_back({0.0});
  }

  void add(std::vector<double> a, double b) {
    std::vector<double> row;
    row.reserve(a_.size() + 1);
    for (const auto& other : a_) row.push_back(dot(a, other));
    const double self = dot(a, a);
    for (std::size_t k = 0; k < gram_.size(); ++k) gram_[k].push_back(row[k]);
    row.push_back(self);
    gram_.push_back(std::move(row));
    a_.push_back(std::move(a));
    b_.push_back(b);
    alpha_.push_back(0.0);
  }

  void solve(double tol, int max_steps = 200000) {
    const std::size_t m = a_.size();
    std::vector<double> g(m);
    // g_k = b_k - a_k'w, with a_k'w = sum_l alpha_l G_kl
    for (std::size_t k = 0; k < m; ++k) {
      double aw = 0;
      for (std::size_t l = 0; l < m; ++l) aw += alpha_[l] * gram_[k][l];
      g[k] = b_[k] - aw;
    }
    for (int step = 0; step < max_steps; ++step) {
      std::size_t up = 0, down = m;
      for (std::size_t k = 1; k < m; ++k)
        if (g[k] > g[up]) up = k;
      for (std::size_t k = 0; k < m; ++k)
        if (alpha_[k] > 0 && (down == m || g[k] < g[down])) down = k;
      if (down == m || g[up] - g[down] <= tol) break;
      const double curv = gram_[up][up] + gram_[down][down] - 2 * gram_[up][down];
      double t = alpha_[down];
      if (curv > 1e-300) t = std::min(t, (g[up] - g[down]) / curv);
      alpha_[up] += t;
      alpha_[down] -= t;
      if (alpha_[down] < 1e-300) alpha_[down] = 0;
      for (std::size_t k = 0; k < m; ++k) g[k] -= t * (gram_[k][up] - gram_[k][down]);
    }
    std::fill(w_.begin(), w_.end(), 0.0);
    for (std::size_t k = 1; k < m; ++k)
      if (alpha_[k] != 0)
        for (std::size_t d = 0; d < w_.size(); ++d) w_[d] += alpha_[k] * a_[k][d];
  }

  const std::vector<double>& w() const noexcept { return w_; }
  std::size_t size() const noexcept { return a_.size() - 1; }

  double dual_objective() const {
    double lin = 0;
    for (std::size_t k = 0; k < a_.size(); ++k) lin += alpha_[k] * b_[k];
    return lin - 0.5 * dot(w_, w_);
  }

  /// Largest violation of any cached plane at the current w (0 if none).
  double cached_slack() const {
    double xi = 0;
    for (std::size_t k = 1; k < a_.size(); ++k) xi = std::max(xi, b_[k] - dot(a_[k], w_));
    return xi;
  }


 private:
  double C_;
  std::vector<std::vector<double>> a_;
  std::vector<double> b_;
  std::vector<double> alpha_;
  std::vector<std::vector<double>> gram_;
  std::vector<double> w_;
};

}  // namespace detail

struct TrainOptions {
  double C = 0.1;
  double epsilon = 1e-3;
  int max_iter = 1000;
  MarginMode margin = MarginMode::loss_scaled;
  bool standardize = false;
  double dual_tolerance = 1e-8;
};

/// 1-slack structured SVM for ordinal ranking, trained with the cutting-plane
/// method: repeatedly add the most violated aggregated constraint and re-solve
/// the restricted QP in the dual. Stops once the new constraint is violated by
/// no more than the current slack plus epsilon, or after max_iter planes.
inline RankingModel train(const TrainingSet& input, const TrainOptions& opt = {}) {
  input.validate();
  if (!(opt.C > 0)) throw InvalidParameter("train: C must be positive");
  if (!(opt.epsilon > 0)) throw InvalidParameter("train: epsilon must be positive");
  if (opt.max_iter < 1) throw InvalidParameter("train: max_iter must be >= 1");

  const auto pairs = make_pair_set(input);
  if (pairs.empty()) throw InvalidInput("no ordered pairs: all sample losses are equal");

  RankingModel model;
  model.C = opt.C;
  model.margin = opt.margin;
  const TrainingSet* data = &input;
  TrainingSet scaled;
  if (opt.standardize) {
    model.standardizer = Standardizer::fit(input);
    scaled.samples.reserve(input.size());
    for (const auto& s : input.samples) scaled.samples.push_back({model.standardizer.apply(s.z), s.loss});
    data = &scaled;
  }

  detail::CuttingPlaneDual dual(data->dimension(), opt.C);
  TrainStats& st = model.stats;
  st.pair_count = pairs.size();
  for (st.iterations = 0; st.iterations < opt.max_iter;) {
    auto vc = find_most_violated(dual.w(), *data, pairs, opt.margin);
    const double xi = dual.cached_slack();
    if (vc.violation(dual.w()) <= xi + opt.epsilon) {
      st.converged = true;
      break;
    }
    dual.add(std::move(vc.lhs), vc.rhs);
    ++st.iterations;
    dual.solve(opt.dual_tolerance);
    st.lower_bound_history.push_back(dual.dual_objective());
  }
  model.w = dual.w();
  st.constraint_count = dual.size();
  st.lower_bound = st.lower_bound_history.empty() ? 0.0 : st.lower_bound_history.back();
  st.cached_slack = dual.cached_slack();
  const auto last = find_most_violated(model.w, *data, pairs, opt.margin);
  st.slack = std::max(0.0, last.violation(model.w));
  if (!st.converged && st.slack <= st.cached_slack + opt.epsilon) st.converged = true;
  st.objective = 0.5 * dot(model.w, model.w) + opt.C * st.slack;
  return model;
}

}  // namespace curvrec
