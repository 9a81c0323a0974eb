#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "hkbary/errors.hpp"
#include "hkbary/geometry.hpp"
#include "hkbary/measures.hpp"

namespace hkbary {

// One agglomeration event.  Leaves are numbered 0..n-1; the cluster created
// by merge k gets id n+k, matching the common linkage-matrix convention.
struct LinkageMerge {
  std::size_t cluster_a = 0;  // smaller id first
  std::size_t cluster_b = 0;
  double distance = 0.0;
  std::size_t size = 0;  // leaves in the new cluster
};

// Exact single-linkage hierarchy of the atom positions: the minimum spanning
// tree's edges, merged shortest first.  Deterministic — equal distances are
// broken by (smaller id, then smaller second id).
inline std::vector<LinkageMerge> single_linkage(const ParticleMeasure& points) {
  const std::size_t n = points.size();
  if (n < 2) throw InvalidInput("single linkage needs at least two points");
  std::vector<LinkageMerge> merges;

  // Prim's algorithm, O(n^2) with no heap: fine for sample-sized inputs.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> best(n, kInf);
  std::vector<std::size_t> best_from(n, 0);
  std::vector<bool> in_tree(n, false);
  struct Edge {
    std::size_t a, b;
    double d;
  };
  std::vector<Edge> edges;
  edges.reserve(n - 1);
  std::size_t cur = 0;
  in_tree[0] = true;
  for (std::size_t added = 1; added < n; ++added) {
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double d = distance(points.positions[cur], points.positions[j], points.dim);
      if (d < best[j] || (d == best[j] && cur < best_from[j])) {
        best[j] = d;
        best_from[j] = cur;
      }
    }
    std::size_t pick = SIZE_MAX;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      if (pick == SIZE_MAX || best[j] < best[pick] ||
          (best[j] == best[pick] && j < pick))
        pick = j;
    }
    edges.push_back({std::min(best_from[pick], pick), std::max(best_from[pick], pick),
                     best[pick]});
    in_tree[pick] = true;
    cur = pick;
  }

  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    if (x.d != y.d) return x.d < y.d;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  // Kruskal-style merging of the sorted tree edges into linkage rows.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::vector<std::size_t> cluster_id(n);
  std::iota(cluster_id.begin(), cluster_id.end(), std::size_t{0});
  std::vector<std::size_t> cluster_size(n, 1);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  std::size_t next_id = n;
  merges.reserve(n - 1);
  for (const Edge& e : edges) {
    const std::size_t ra = find(e.a), rb = find(e.b);
    LinkageMerge m;
    m.cluster_a = std::min(cluster_id[ra], cluster_id[rb]);
    m.cluster_b = std::max(cluster_id[ra], cluster_id[rb]);
    m.distance = e.d;
    m.size = cluster_size[ra] + cluster_size[rb];
    merges.push_back(m);
    parent[rb] = ra;
    cluster_id[ra] = next_id++;
    cluster_size[ra] = m.size;
  }
  return merges;
}

}  // namespace hkbary
