#pragma once

#include <chrono>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "curvrec/eval.hpp"
#include "curvrec/graph.hpp"
#include "curvrec/imaging.hpp"
#include "curvrec/patch.hpp"
#include "curvrec/ranking.hpp"
#include "curvrec/scoremap.hpp"

namespace curvrec {

/// Algorithm parameters shared by every stage.
struct PipelineParams {
  FilterBank bank;
  Polarity polarity = Polarity::dark;
  int patch_side = 33;
  int thickness = 5;
  std::size_t samples = 2000;
  TrainOptions train{.standardize = true};
  double rho = 0;  // 0 = calibrate on the training set
  int stride = 0;  // 0 = thickness
  int min_length = 40;
  int max_paths = 1000;
  double graph_threshold = 0;
  WeightMode weight_mode = WeightMode::score;
  double tolerance = 5;  // eval radius
  std::uint64_t seed = 0;

  int grid_stride() const { return stride > 0 ? stride : thickness; }
  BasisPattern pattern() const { return make_basis_pattern(patch_side, thickness); }
};

/// Trained ranking model together with the settings needed to apply it.
struct TrainedModel {
  RankingModel ranking;
  int patch_side = 33;
  int thickness = 5;
  std::vector<double> thetas;
  double rho = 0;
  RhoCalibration calibration;
};

inline FeatureMap compute_features(const GrayImage& image, const PipelineParams& p) {
  return feature_map(normalize_image(image), p.bank, p.polarity);
}

/// Draws `count` patches, half centred on structure pixels and half elsewhere,
/// uniformly over all images. Each patch is rotated to its estimated
/// orientation; the feature vector and the loss are read from the same frame.
inline TrainingSet sample_training_set(std::span<const FeatureMap> features, std::span<const GroundTruthMap> truths,
                                       const BasisPattern& b, std::span<const double> thetas, std::size_t count,
                                       std::uint64_t seed) {
  if (features.size() != truths.size() || features.empty())
    throw InvalidInput("sample_training_set: need matching, non-empty feature maps and ground truths");
  if (count < 2) throw InvalidInput("insufficient samples: at least 2 patches are needed");
  struct Site {
    std::uint32_t image;
    Pixel x;
  };
  std::vector<Site> on, off;
  for (std::size_t i = 0; i < features.size(); ++i) {
    require_same_shape(features[i], truths[i], "sample_training_set");
    for (int r = 0; r < truths[i].height(); ++r)
      for (int c = 0; c < truths[i].width(); ++c)
        (truths[i](r, c) ? on : off).push_back({static_cast<std::uint32_t>(i), {r, c}});
  }
  if (on.empty()) throw InvalidInput("ground truth contains no structure pixels");
  if (off.empty()) throw InvalidInput("ground truth contains no background pixels");

  std::mt19937_64 rng(seed);
  std::vector<Site> picks;
  picks.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto& pool = k % 2 == 0 ? on : off;
    picks.push_back(pool[rng() % pool.size()]);
  }

  std::vector<ValueRange> ranges;
  for (const auto& f : features) ranges.push_back(value_range(f));
  TrainingSet set;
  set.samples.resize(count);
  parallel_for(0, count, [&](std::size_t k) {
    const auto [i, x] = picks[k];
    const double t = estimate_orientation(features[i], x, b, thetas, ranges[i]);
    set.samples[k].z = feature_vector(extract_rotated_patch(features[i], x, t, b.side), b).values;
    set.samples[k].loss = patch_loss(extract_rotated_patch(truths[i], x, t, b.side), b);
  });
  return set;
}

inline TrainedModel train_model(std::span<const FeatureMap> features, std::span<const GroundTruthMap> truths,
                                const PipelineParams& p) {
  const auto b = p.pattern();
  TrainedModel m;
  m.patch_side = p.patch_side;
  m.thickness = p.thickness;
  m.thetas = p.bank.orientations;
  const auto set = sample_training_set(features, truths, b, m.thetas, p.samples, p.seed);
  m.ranking = train(set, p.train);
  if (p.rho > 0) {
    m.rho = p.rho;
  } else {
    std::vector<RankScoreMap> scores;
    for (const auto& f : features) scores.push_back(infer_scores(f, m.ranking, b, m.thetas, p.grid_stride()));
    m.calibration = calibrate_rho(scores, truths, p.tolerance);
    m.rho = m.calibration.rho;
  }
  return m;
}

struct ImageReconstruction {
  RankScoreMap scores;
  BinaryMap selected;
  StructuredScoreMap structured;
  Reconstruction reconstruction;
  std::vector<Pixel> vertex_pixels;  // pixel of every graph vertex, by id
  BinaryMap mask;

  std::vector<Pixel> path_pixels(const GeodesicPath& path) const {
    std::vector<Pixel> out;
    out.reserve(path.vertices.size());
    for (VertexId v : path.vertices) out.push_back(vertex_pixels[v]);
    return out;
  }
};

/// infer -> top-rank selection -> synthesis -> graph -> progressive geodesics.
inline ImageReconstruction reconstruct_image(const FeatureMap& feature, const TrainedModel& m,
                                             const PipelineParams& p) {
  const auto b = make_basis_pattern(m.patch_side, m.thickness);
  ImageReconstruction out;
  out.scores = infer_scores(feature, m.ranking, b, m.thetas, p.grid_stride());
  out.selected = top_rank_binary_map(out.scores, m.rho);
  out.structured = synthesize(out.scores, out.selected, b);
  auto g = build_graph(out.structured.pi, p.graph_threshold, p.weight_mode);
  out.reconstruction = reconstruct(g, p.min_length, p.max_paths, p.seed);
  out.vertex_pixels.reserve(g.vertex_count());
  for (VertexId v = 0; v < g.vertex_count(); ++v) out.vertex_pixels.push_back(g.pixel(v));
  out.mask = reconstruction_mask(g, out.reconstruction);
  return out;
}

struct ImageMetrics {
  MatchReport match;
  double proportion = 0;
};

inline ImageMetrics evaluate_mask(const BinaryMap& pred, const GroundTruthMap& gt, double tolerance) {
  return {tolerant_f1(pred, gt, tolerance), pixel_proportion(pred)};
}

}  // namespace curvrec
