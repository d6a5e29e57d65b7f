#include <gtest/gtest.h>

#include <numbers>
#include <random>
#include <set>

#include "curvrec/graph.hpp"
#include "graph_oracle.hpp"

using namespace curvrec;
using curvrec::testing::bellman_ford;
using curvrec::testing::brute_force_diameter;
using curvrec::testing::random_grid_graph;
using curvrec::testing::random_pixel_tree;

namespace {

BinaryMap mask_of(const std::vector<Pixel>& px, int w, int h) {
  BinaryMap m(w, h, 0);
  for (auto p : px) m[p] = 1;
  return m;
}

PixelGraph unit_graph(const BinaryMap& m) {
  return PixelGraph::from_mask(m, [](Pixel a, Pixel b) { return pixel_distance(a, b); });
}

bool is_simple_connected_path(const PixelGraph& g, const std::vector<VertexId>& p) {
  std::set<VertexId> seen(p.begin(), p.end());
  if (seen.size() != p.size()) return false;
  for (std::size_t i = 1; i < p.size(); ++i) {
    bool adjacent = false;
    for (const auto& e : g.neighbors(p[i - 1])) adjacent = adjacent || e.to == p[i];
    if (!adjacent) return false;
  }
  return true;
}

// T shape: trunk along row 0 (80 px, cols 0..79), branch down from col 40
// (rows 1..40). Branch pixels carry a lower map value so that the trunk is
// the diameter.
Raster<double> t_shape() {
  Raster<double> pi(80, 41, 0.0);
  for (int c = 0; c < 80; ++c) pi(0, c) = 1.0;
  for (int r = 1; r <= 40; ++r) pi(r, 40) = 0.5;
  return pi;
}

}  // namespace

TEST(BuildGraph, TwoByTwoEnumeration) {
  const auto g = build_graph(Raster<double>(2, 2, 0.3));
  EXPECT_EQ(g.vertex_count(), 4u);
  EXPECT_EQ(g.edge_count(), 6u);
}

TEST(BuildGraph, HorizontalWeight) {
  Raster<double> pi(2, 1, std::vector<double>{0.4, 0.6});
  const auto g = build_graph(pi);
  EXPECT_DOUBLE_EQ(g.weight(0, 1), 0.5);
}

TEST(BuildGraph, DiagonalWeight) {
  Raster<double> pi(2, 2, std::vector<double>{0.7, 0, 0, 0.7});
  const auto g = build_graph(pi);
  ASSERT_EQ(g.vertex_count(), 2u);
  EXPECT_DOUBLE_EQ(g.weight(0, 1), std::numbers::sqrt2 * 0.7);
}

TEST(BuildGraph, ThresholdAndInvertedWeights) {
  Raster<double> pi(3, 1, std::vector<double>{0.2, 0.5, 0.05});
  const auto g = build_graph(pi, 0.1);
  EXPECT_EQ(g.vertex_count(), 2u);
  const auto inv = build_graph(pi, 0.1, WeightMode::inverted);
  EXPECT_DOUBLE_EQ(inv.weight(0, 1), 1.0 / 0.35);
  EXPECT_THROW(build_graph(pi, -1), InvalidParameter);
  EXPECT_TRUE(build_graph(Raster<double>(4, 4, 0.0)).empty());
}

TEST(BuildGraphProperty, UndirectedNonNegativeEightConnected) {
  std::mt19937_64 rng(1);
  Raster<double> pi(15, 12);
  std::uniform_real_distribution<double> u(-0.5, 1);
  for (auto& v : pi.values()) v = u(rng);
  const auto g = build_graph(pi);
  for (VertexId v = 0; v < g.vertex_count(); ++v)
    for (const auto& e : g.neighbors(v)) {
      EXPECT_GE(e.weight, 0.0);
      EXPECT_EQ(e.weight, g.weight(e.to, v));
      EXPECT_LE(pixel_distance(g.pixel(v), g.pixel(e.to)), std::numbers::sqrt2 + 1e-12);
    }
}

TEST(Dijkstra, SourceAtZero) {
  const auto g = build_graph(Raster<double>(3, 3, 1.0));
  EXPECT_EQ(dijkstra(g, 4).dist[4], 0.0);
}

TEST(Dijkstra, ThreeVertexPath) {
  Raster<double> pi(3, 1, std::vector<double>{1, 1, 3});  // weights 1 and 2
  const auto g = build_graph(pi);
  const auto sp = dijkstra(g, 0);
  EXPECT_DOUBLE_EQ(sp.dist[2], 3.0);
  EXPECT_EQ(sp.path_to(2), (std::vector<VertexId>{0, 1, 2}));
}

TEST(Dijkstra, UnreachableAndMissingSource) {
  const auto g = unit_graph(mask_of({{0, 0}, {0, 3}}, 4, 1));
  const auto sp = dijkstra(g, 0);
  EXPECT_EQ(sp.dist[1], kInfinity);
  EXPECT_TRUE(sp.path_to(1).empty());
  EXPECT_THROW(dijkstra(g, 2), InvalidInput);
}

TEST(Dijkstra, TieBreaksTowardSmallerPredecessor) {
  // square of unit weights: the far corner is reachable via 1 or 2 equally
  BinaryMap m(2, 2, 1);
  const auto g = PixelGraph::from_mask(m, [](Pixel a, Pixel b) { return pixel_distance(a, b) > 1 ? 10.0 : 1.0; });
  const auto sp = dijkstra(g, 0);
  EXPECT_EQ(sp.parent[3], 1u);
}

TEST(Dijkstra, ZeroWeightsKeepPredecessorsAcyclic) {
  BinaryMap m(6, 6, 1);
  auto g = PixelGraph::from_mask(m, [](Pixel, Pixel) { return 0.0; });
  const auto sp = dijkstra(g, 35);
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    const auto p = sp.path_to(v);
    ASSERT_FALSE(p.empty());
    EXPECT_EQ(p.front(), 35u);
    EXPECT_TRUE(is_simple_connected_path(g, p));
  }
}

TEST(DijkstraProperty, MatchesBellmanFordOnRandomGrids) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = random_grid_graph(rng, 12, 12, trial % 2 ? 0.7 : 1.0);
    if (g.empty()) continue;
    const VertexId s = static_cast<VertexId>(rng() % g.vertex_count());
    const auto sp = dijkstra(g, s);
    const auto ref = bellman_ford(g, s);
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
      EXPECT_EQ(sp.dist[v], ref[v]);
      if (ref[v] == kInfinity || v == s) continue;
      // the predecessor chain realizes the distance
      const auto p = sp.path_to(v);
      double len = 0;
      for (std::size_t i = 1; i < p.size(); ++i) len += g.weight(p[i - 1], p[i]);
      EXPECT_NEAR(len, ref[v], 1e-12);
    }
  }
}

TEST(TwoSweep, PathGraphIsExact) {
  const auto g = unit_graph(mask_of({{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}}, 5, 1));
  const auto p = two_sweep(g);
  EXPECT_EQ(p.vertices.size(), 5u);
  EXPECT_DOUBLE_EQ(p.weighted_length, 4.0);
}

TEST(TwoSweep, StarWithThreeLeaves) {
  // centre (2,2) with leaves (1,1), (1,3), (3,2): no two leaves touch
  const auto m = mask_of({{1, 1}, {1, 3}, {2, 2}, {3, 2}}, 5, 5);
  const auto star = PixelGraph::from_mask(m, [](Pixel, Pixel) { return 1.0; });
  ASSERT_EQ(star.edge_count(), 3u);
  const auto p = two_sweep(star);
  EXPECT_DOUBLE_EQ(brute_force_diameter(star), 2.0);
  EXPECT_DOUBLE_EQ(p.weighted_length, 2.0);
  ASSERT_EQ(p.vertices.size(), 3u);
  EXPECT_EQ(p.vertices[1], star.vertex_at({2, 2}));
}

TEST(TwoSweep, EmptyGraphThrows) { EXPECT_THROW(two_sweep(PixelGraph{}), InvalidInput); }

TEST(TwoSweepProperty, LowerBoundAndUsuallyTight) {
  std::mt19937_64 rng(31);
  int close = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = random_grid_graph(rng, 10, 10);
    const auto p = two_sweep(g, trial);
    const double diam = brute_force_diameter(g);
    EXPECT_LE(p.weighted_length, diam + 1e-12);
    close += p.weighted_length >= 0.9 * diam;
    EXPECT_TRUE(is_simple_connected_path(g, p.vertices));
  }
  EXPECT_GE(close, 45);
}

TEST(TwoSweepProperty, ExactOnTrees) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = random_pixel_tree(rng, 30, 30, 20 + rng() % 180);
    ASSERT_EQ(g.edge_count() + 1, g.vertex_count());  // acyclic and connected
    EXPECT_NEAR(two_sweep(g, trial).weighted_length, brute_force_diameter(g), 1e-9);
  }
}

TEST(Reconstruct, StraightBarGivesOnePath) {
  Raster<double> pi(100, 1, 1.0);
  auto g = build_graph(pi);
  const auto rec = reconstruct(g, 30);
  ASSERT_EQ(rec.paths.size(), 1u);
  EXPECT_EQ(rec.paths[0].vertices.size(), 100u);
  EXPECT_EQ(rec.paths[0].new_vertex_count, 100u);
  EXPECT_DOUBLE_EQ(rec.paths[0].weighted_length, 99.0);
  EXPECT_EQ(rec.sweeps, 2);
}

TEST(Reconstruct, ThickBarSpineThenStop) {
  Raster<double> pi(100, 5, 1.0);
  auto g = build_graph(pi);
  const auto rec = reconstruct(g, 30);
  ASSERT_EQ(rec.paths.size(), 1u);
  const auto& p = rec.paths[0].vertices;
  EXPECT_EQ(g.pixel(p.front()).col == 0 || g.pixel(p.front()).col == 99, true);
  EXPECT_EQ(g.pixel(p.back()).col == 0 || g.pixel(p.back()).col == 99, true);
  EXPECT_NE(g.pixel(p.front()).col, g.pixel(p.back()).col);
}

TEST(Reconstruct, ShortComponentsGiveNothing) {
  BinaryMap m(40, 40, 0);
  for (int c = 0; c < 10; ++c) m(5, c) = 1, m(20, c + 20) = 1;
  auto g = unit_graph(m);
  const auto rec = reconstruct(g, 30);
  EXPECT_TRUE(rec.paths.empty());
  EXPECT_EQ(rec.sweeps, 1);
}

TEST(Reconstruct, EmptyGraph) {
  PixelGraph g;
  EXPECT_TRUE(reconstruct(g, 5).paths.empty());
  EXPECT_THROW(reconstruct(g, 0), InvalidParameter);
}

TEST(Reconstruct, TShapeTrunkThenBranch) {
  const auto pi = t_shape();
  auto g = build_graph(pi);
  const auto rec = reconstruct(g, 30);
  ASSERT_EQ(rec.paths.size(), 2u);
  // iteration 1 spans the trunk end to end
  const auto& trunk = rec.paths[0];
  std::set<int> cols;
  for (VertexId v : trunk.vertices) {
    EXPECT_EQ(g.pixel(v).row, 0);
    cols.insert(g.pixel(v).col);
  }
  EXPECT_EQ(cols.size(), 80u);
  EXPECT_EQ(trunk.iteration, 1);
  // iteration 2 brings exactly the 40 branch pixels, reached over the zeroed trunk
  const auto& branch = rec.paths[1];
  EXPECT_EQ(branch.iteration, 2);
  EXPECT_EQ(branch.new_vertex_count, 40u);
  // 39 branch edges at 0.5 plus the junction edge (0.5 + 1) / 2
  EXPECT_DOUBLE_EQ(branch.weighted_length, 39 * 0.5 + 0.75);
  EXPECT_EQ(rec.sweeps, 3);
  EXPECT_EQ(rec.vertex_count(), 120u);
}

TEST(Reconstruct, TShapeOracleDiameter) {
  // exhaustive check that the trunk is the longest geodesic of the T shape
  const auto g = build_graph(t_shape());
  EXPECT_DOUBLE_EQ(brute_force_diameter(g), 79.0);
}

TEST(ReconstructProperty, TerminationBoundAndPathShape) {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 30; ++trial) {
    auto g = random_grid_graph(rng, 14, 14, 0.45 + 0.02 * (trial % 10));
    const auto original = g;
    const int min_len = 1 + static_cast<int>(rng() % 8);
    const auto rec = reconstruct(g, min_len, 1000, trial);
    EXPECT_LE(rec.sweeps, static_cast<int>(original.vertex_count()) / min_len + 1);
    std::vector<std::uint8_t> seen(original.vertex_count(), 0);
    for (std::size_t k = 0; k < rec.paths.size(); ++k) {
      const auto& p = rec.paths[k];
      EXPECT_EQ(p.iteration, static_cast<int>(k) + 1);
      EXPECT_GE(p.new_vertex_count, static_cast<std::size_t>(min_len));
      EXPECT_TRUE(is_simple_connected_path(original, p.vertices));
      std::size_t fresh = 0;
      for (VertexId v : p.vertices) fresh += !seen[v], seen[v] = 1;
      EXPECT_EQ(fresh, p.new_vertex_count);
    }
  }
}

TEST(ReconstructProperty, ExtractedPathsAreContracted) {
  // distance 0 between any two vertices joined through extracted paths
  const auto pi = t_shape();
  auto g = build_graph(pi);
  const auto rec = reconstruct(g, 30);
  const VertexId root = rec.paths[0].vertices.front();
  const auto sp = dijkstra(g, root);
  for (const auto& p : rec.paths)
    for (VertexId v : p.vertices) EXPECT_EQ(sp.dist[v], 0.0);
}

TEST(ReconstructProperty, CoarseToFineOnTrees) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = random_pixel_tree(rng, 40, 40, 150);
    const auto rec = reconstruct(g, 5);
    for (std::size_t k = 1; k < rec.paths.size(); ++k)
      EXPECT_GE(rec.paths[0].weighted_length + 1e-12, rec.paths[k].weighted_length);
  }
}

TEST(Reconstruct, MaxIterCapsExtraction) {
  auto g = build_graph(t_shape());
  EXPECT_EQ(reconstruct(g, 30, 1).paths.size(), 1u);
}

TEST(ReconstructProperty, DeterministicForFixedSeed) {
  std::mt19937_64 rng(71);
  const auto base = random_grid_graph(rng, 14, 14, 0.6);
  auto g1 = base, g2 = base;
  const auto r1 = reconstruct(g1, 3, 1000, 99), r2 = reconstruct(g2, 3, 1000, 99);
  ASSERT_EQ(r1.paths.size(), r2.paths.size());
  for (std::size_t k = 0; k < r1.paths.size(); ++k) EXPECT_EQ(r1.paths[k].vertices, r2.paths[k].vertices);
}
