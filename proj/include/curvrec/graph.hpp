#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "curvrec/error.hpp"
#include "curvrec/raster.hpp"

namespace curvrec {

using VertexId = std::uint32_t;
inline constexpr VertexId kNoVertex = std::numeric_limits<VertexId>::max();
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Edge weight rule. `score`: |u-v| * (Pi(u)+Pi(v))/2. `inverted`:
/// |u-v| / ((Pi(u)+Pi(v))/2), which makes high-valued pixels cheap instead.
enum class WeightMode { score, inverted };

/// Undirected 8-connected graph over a set of pixels. Vertex ids follow the
/// row-major order of their pixels. Weights are mutable so that extracted
/// paths can be contracted to zero length.
class PixelGraph {
 public:
  struct Edge {
    VertexId to;
    double weight;
  };

  PixelGraph() = default;

  /// Builds a graph over the pixels with mask != 0, using `weight(u, v)` for
  /// every 8-neighbour pair. Exposed for tests; build_graph is the usual entry.
  template <typename WeightFn>
  static PixelGraph from_mask(const BinaryMap& mask, WeightFn&& weight) {
    PixelGraph g;
    g.width_ = mask.width();
    g.height_ = mask.height();
    g.index_ = Raster<VertexId>(mask.width(), mask.height(), kNoVertex);
    for (int r = 0; r < mask.height(); ++r)
      for (int c = 0; c < mask.width(); ++c)
        if (mask(r, c)) {
          g.index_(r, c) = static_cast<VertexId>(g.pixels_.size());
          g.pixels_.push_back({r, c});
        }
    g.adj_.resize(g.pixels_.size());
    static constexpr int kDr[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
    static constexpr int kDc[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
    for (VertexId v = 0; v < g.pixels_.size(); ++v) {
      const Pixel p = g.pixels_[v];
      for (int k = 0; k < 8; ++k) {
        const Pixel q{p.row + kDr[k], p.col + kDc[k]};
        if (!mask.contains(q) || !mask[q]) continue;
        g.adj_[v].push_back({g.index_[q], weight(p, q)});
      }
    }
    return g;
  }

  std::size_t vertex_count() const noexcept { return pixels_.size(); }
  std::size_t edge_count() const noexcept {
    std::size_t n = 0;
    for (const auto& a : adj_) n += a.size();
    return n / 2;
  }
  bool empty() const noexcept { return pixels_.empty(); }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  Pixel pixel(VertexId v) const { return pixels_.at(v); }
  VertexId vertex_at(Pixel p) const { return index_.contains(p) ? index_[p] : kNoVertex; }
  const std::vector<Edge>& neighbors(VertexId v) const { return adj_.at(v); }

  double weight(VertexId u, VertexId v) const {
    for (const auto& e : adj_.at(u))
      if (e.to == v) return e.weight;
    throw InvalidInput("no edge between the given vertices");
  }

  void set_weight(VertexId u, VertexId v, double w) {
    bool found = false;
    for (auto& e : adj_.at(u))
      if (e.to == v) e.weight = w, found = true;
    for (auto& e : adj_.at(v))
      if (e.to == u) e.weight = w;
    if (!found) throw InvalidInput("no edge between the given vertices");
  }

  /// Connected-component label per vertex, labels in order of smallest member.
  std::vector<std::uint32_t> components() const {
    std::vector<std::uint32_t> label(pixels_.size(), kNoVertex);
    std::uint32_t next = 0;
    std::vector<VertexId> stack;
    for (VertexId s = 0; s < pixels_.size(); ++s) {
      if (label[s] != kNoVertex) continue;
      label[s] = next;
      stack.push_back(s);
      while (!stack.empty()) {
        const VertexId v = stack.back();
        stack.pop_back();
        for (const auto& e : adj_[v])
          if (label[e.to] == kNoVertex) label[e.to] = next, stack.push_back(e.to);
      }
      ++next;
    }
    return label;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Pixel> pixels_;
  Raster<VertexId> index_;
  std::vector<std::vector<Edge>> adj_;
};

inline double pixel_distance(Pixel a, Pixel b) noexcept {
  return std::hypot(static_cast<double>(a.row - b.row), static_cast<double>(a.col - b.col));
}

/// Graph over the pixels with Pi > threshold, edges between 8-neighbours.
inline PixelGraph build_graph(const Raster<double>& pi, double threshold = 0.0,
                              WeightMode mode = WeightMode::score) {
  if (!(threshold >= 0)) throw InvalidParameter("build_graph: threshold must be >= 0");
  BinaryMap mask(pi.width(), pi.height(), 0);
  for (std::size_t i = 0; i < pi.size(); ++i) mask.values()[i] = pi.values()[i] > threshold;
  return PixelGraph::from_mask(mask, [&](Pixel u, Pixel v) {
    const double mean = 0.5 * (pi[u] + pi[v]);
    const double len = pixel_distance(u, v);
    return mode == WeightMode::score ? len * mean : len / mean;
  });
}

struct ShortestPaths {
  VertexId source = kNoVertex;
  std::vector<double> dist;      // kInfinity when unreachable
  std::vector<VertexId> parent;  // kNoVertex for the source and unreachable vertices

  /// Vertices from the source to `target`, inclusive. Empty if unreachable.
  std::vector<VertexId> path_to(VertexId target) const {
    std::vector<VertexId> path;
    if (target >= dist.size() || dist[target] == kInfinity) return path;
    for (VertexId v = target; v != kNoVertex; v = parent[v]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
  }
};

/// Single-source shortest paths with a binary heap. Among equal-length
/// alternatives the predecessor with the smaller vertex id wins.
inline ShortestPaths dijkstra(const PixelGraph& g, VertexId source) {
  if (source >= g.vertex_count()) throw InvalidInput("dijkstra: source vertex is not in the graph");
  ShortestPaths sp{source, std::vector<double>(g.vertex_count(), kInfinity),
                   std::vector<VertexId>(g.vertex_count(), kNoVertex)};
  std::vector<std::uint8_t> done(g.vertex_count(), 0);
  using Item = std::pair<double, VertexId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  sp.dist[source] = 0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (done[u]) continue;
    done[u] = 1;
    for (const auto& e : g.neighbors(u)) {
      if (done[e.to]) continue;
      const double nd = d + e.weight;
      if (nd < sp.dist[e.to] || (nd == sp.dist[e.to] && u < sp.parent[e.to])) {
        const bool improved = nd < sp.dist[e.to];
        sp.dist[e.to] = nd;
        sp.parent[e.to] = u;
        if (improved) heap.push({nd, e.to});
      }
    }
  }
  return sp;
}

/// Reachable vertex at maximum distance; ties go to the smallest id.
inline VertexId farthest_vertex(const ShortestPaths& sp) {
  VertexId best = sp.source;
  for (VertexId v = 0; v < sp.dist.size(); ++v)
    if (sp.dist[v] != kInfinity && sp.dist[v] > sp.dist[best]) best = v;
  return best;
}

struct GeodesicPath {
  std::vector<VertexId> vertices;
  double weighted_length = 0;
  std::size_t new_vertex_count = 0;
  int iteration = 0;
};

/// Two Dijkstra sweeps from `start`: to the farthest vertex u, then from u to
/// its farthest vertex v. Returns the shortest u -> v path; its length is a
/// lower bound on the component diameter and exact on trees.
inline GeodesicPath two_sweep_from(const PixelGraph& g, VertexId start) {
  const auto first = dijkstra(g, start);
  const VertexId u = farthest_vertex(first);
  const auto second = dijkstra(g, u);
  const VertexId v = farthest_vertex(second);
  return {second.path_to(v), second.dist[v], 0, 0};
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Members of each component, in increasing vertex id.
inline std::vector<std::vector<VertexId>> group_components(const std::vector<std::uint32_t>& label) {
  std::uint32_t n = 0;
  for (auto l : label) n = std::max(n, l + 1);
  std::vector<std::vector<VertexId>> groups(n);
  for (VertexId v = 0; v < label.size(); ++v) groups[label[v]].push_back(v);
  return groups;
}

}  // namespace detail

/// Deterministic sweep start inside a component: seed 0 takes its lowest
/// vertex id, other seeds pick a hashed member.
inline VertexId sweep_start(const std::vector<VertexId>& members, std::uint64_t seed) {
  if (seed == 0) return members.front();
  return members[detail::splitmix64(seed) % members.size()];
}

/// 2-sweep over the largest connected component (ties: the one holding the
/// lowest vertex id).
inline GeodesicPath two_sweep(const PixelGraph& g, std::uint64_t seed = 0) {
  if (g.empty()) throw InvalidInput("two_sweep: empty graph");
  const auto groups = detail::group_components(g.components());
  std::size_t largest = 0;
  for (std::size_t i = 1; i < groups.size(); ++i)
    if (groups[i].size() > groups[largest].size()) largest = i;
  return two_sweep_from(g, sweep_start(groups[largest], seed));
}

struct Reconstruction {
  std::vector<GeodesicPath> paths;  // in extraction order, iteration = 1, 2, ...
  std::vector<std::uint8_t> in_paths;  // per vertex
  int sweeps = 0;                      // loop passes, including the final failing check
  int width = 0;
  int height = 0;

  std::size_t vertex_count() const {
    return static_cast<std::size_t>(std::count(in_paths.begin(), in_paths.end(), 1));
  }
};

/// Progressive reconstruction: repeatedly take the longest 2-sweep geodesic
/// among all components, keep it if it brings at least `min_length` vertices
/// not yet extracted, and contract it by zeroing its edge weights. Candidates
/// are tried longest first; the loop stops when none qualifies or after
/// `max_iter` extractions. The graph is modified in place.
inline Reconstruction reconstruct(PixelGraph& g, int min_length, int max_iter = 1000, std::uint64_t seed = 0) {
  if (min_length < 1) throw InvalidParameter("reconstruct: minimum path length must be >= 1");
  if (max_iter < 0) throw InvalidParameter("reconstruct: max_iter must be >= 0");
  Reconstruction rec;
  rec.width = g.width();
  rec.height = g.height();
  rec.in_paths.assign(g.vertex_count(), 0);
  if (g.empty()) return rec;

  const auto label = g.components();
  const auto groups = detail::group_components(label);
  std::vector<GeodesicPath> candidate(groups.size());
  std::vector<std::uint8_t> stale(groups.size(), 1);

  auto count_new = [&](const GeodesicPath& p) {
    std::size_t n = 0;
    for (VertexId v : p.vertices) n += rec.in_paths[v] == 0;
    return n;
  };

  while (static_cast<int>(rec.paths.size()) < max_iter) {
    ++rec.sweeps;
    for (std::size_t c = 0; c < groups.size(); ++c) {
      if (!stale[c]) continue;
      candidate[c] = two_sweep_from(g, sweep_start(groups[c], seed));
      candidate[c].new_vertex_count = count_new(candidate[c]);
      stale[c] = 0;
    }
    std::size_t best = groups.size();
    for (std::size_t c = 0; c < groups.size(); ++c) {
      const auto& p = candidate[c];
      if (p.new_vertex_count < static_cast<std::size_t>(min_length)) continue;
      if (best == groups.size() || p.weighted_length > candidate[best].weighted_length ||
          (p.weighted_length == candidate[best].weighted_length &&
           p.new_vertex_count > candidate[best].new_vertex_count))
        best = c;
    }
    if (best == groups.size()) break;

    GeodesicPath path = candidate[best];
    path.iteration = static_cast<int>(rec.paths.size()) + 1;
    for (VertexId v : path.vertices) rec.in_paths[v] = 1;
    for (std::size_t i = 1; i < path.vertices.size(); ++i) g.set_weight(path.vertices[i - 1], path.vertices[i], 0.0);
    rec.paths.push_back(std::move(path));
    stale[best] = 1;
  }
  return rec;
}

/// Pixels covered by the extracted paths.
inline BinaryMap reconstruction_mask(const PixelGraph& g, const Reconstruction& rec) {
  BinaryMap mask(g.width(), g.height(), 0);
  for (VertexId v = 0; v < rec.in_paths.size(); ++v)
    if (rec.in_paths[v]) mask[g.pixel(v)] = 1;
  return mask;
}

}  // namespace curvrec
