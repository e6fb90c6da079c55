#include "cldice/graphmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "cldice/rng.hpp"

namespace cldice {

namespace {

double step_length(const VoxelIndex& a, const VoxelIndex& b) {
  int n = 0;
  for (int x = 0; x < 3; ++x) n += std::abs(a.c[x] - b.c[x]);
  return std::sqrt(static_cast<double>(n));
}

double polyline_length(const std::vector<VoxelIndex>& poly) {
  double len = 0.0;
  for (std::size_t i = 1; i < poly.size(); ++i)
    len += step_length(poly[i - 1], poly[i]);
  return len;
}

}  // namespace

double SpatialGraph::total_length() const {
  double t = 0.0;
  for (const auto& e : edges) t += e.length;
  return t;
}

namespace {

// Foreground adjacency (8/26) with redundant diagonal links pruned: a
// diagonal step is skipped when a foreground voxel at a strict sub-offset
// already connects the pair. Keeps chain degrees at 2 along staircases and
// around junction clusters; symmetric, and reachability is unchanged.
std::vector<VoxelIndex> linked_neighbors(const BinaryMask& skel,
                                         const VoxelIndex& v) {
  const Shape& s = skel.shape();
  std::vector<VoxelIndex> out;
  for (const auto& o : connectivity_offsets(foreground_connectivity(s.nd))) {
    const VoxelIndex n{v.c[0] + o[0], v.c[1] + o[1], v.c[2] + o[2]};
    if (!in_bounds(n, s) || !skel.at(n.c[0], n.c[1], n.c[2])) continue;
    bool redundant = false;
    for (int mask = 1; mask < 7 && !redundant; ++mask) {
      std::array<int, 3> sub{};
      int kept = 0, axes = 0;
      for (int a = 0; a < 3; ++a) {
        if (o[a] != 0) ++axes;
        if ((mask >> a) & 1) {
          sub[a] = o[a];
          if (o[a] != 0) ++kept;
        }
      }
      if (kept == 0 || kept >= axes) continue;  // strict nonempty sub-offset
      const VoxelIndex w{v.c[0] + sub[0], v.c[1] + sub[1], v.c[2] + sub[2]};
      if (in_bounds(w, s) && skel.at(w.c[0], w.c[1], w.c[2])) redundant = true;
    }
    if (!redundant) out.push_back(n);
  }
  return out;
}

}  // namespace

SpatialGraph skeleton_to_graph(const BinaryMask& skel) {
  const Shape& s = skel.shape();
  SpatialGraph g;
  g.dims = s;

  // pruned adjacency, lexicographic neighbor lists
  std::map<VoxelIndex, std::vector<VoxelIndex>> adj;
  for (int i = 0; i < s.d[0]; ++i)
    for (int j = 0; j < s.d[1]; ++j)
      for (int k = 0; k < s.d[2]; ++k) {
        if (!skel.at(i, j, k)) continue;
        VoxelIndex v{i, j, k};
        adj.emplace(v, linked_neighbors(skel, v));
      }

  auto degree = [&](const VoxelIndex& v) {
    return static_cast<int>(adj.at(v).size());
  };

  std::map<VoxelIndex, int> node_id;
  auto add_node = [&](const VoxelIndex& v) {
    const int id = static_cast<int>(g.nodes.size());
    node_id.emplace(v, id);
    g.nodes.push_back(GraphNode{id, v, degree(v)});
    return id;
  };
  for (const auto& [v, ns] : adj)
    if (ns.size() != 2) add_node(v);

  std::set<VoxelIndex> chain_visited;
  std::set<std::pair<VoxelIndex, VoxelIndex>> used_exit;

  auto walk_chain = [&](const VoxelIndex& start, const VoxelIndex& first) {
    // follow degree-2 voxels until the next node voxel
    std::vector<VoxelIndex> poly{start};
    VoxelIndex prev = start, cur = first;
    while (!node_id.contains(cur)) {
      poly.push_back(cur);
      chain_visited.insert(cur);
      const auto& ns = adj.at(cur);
      cur = ns[0] == prev ? ns[1] : ns[0];
      prev = poly.back();
    }
    poly.push_back(cur);
    return std::pair{poly, prev};
  };

  for (const auto& node : g.nodes) {
    for (const auto& first : adj.at(node.pos)) {
      if (used_exit.contains({node.pos, first})) continue;
      used_exit.insert({node.pos, first});
      auto [poly, arrived_from] = walk_chain(node.pos, first);
      used_exit.insert({poly.back(), arrived_from});
      g.edges.push_back(GraphEdge{node.id, node_id.at(poly.back()),
                                  poly, polyline_length(poly)});
    }
  }

  // junction-free cycles: one representative node per cycle, self-loop edge
  for (const auto& [v, ns] : adj) {
    if (ns.size() != 2 || chain_visited.contains(v) || node_id.contains(v))
      continue;
    const int rep = add_node(v);  // map order makes v the lex-smallest of its cycle
    std::vector<VoxelIndex> poly{v};
    VoxelIndex prev = v, cur = ns[0];
    while (cur != v) {
      poly.push_back(cur);
      chain_visited.insert(cur);
      const auto& cns = adj.at(cur);
      const VoxelIndex next = cns[0] == prev ? cns[1] : cns[0];
      prev = cur;
      cur = next;
    }
    poly.push_back(v);
    g.edges.push_back(GraphEdge{rep, rep, poly, polyline_length(poly)});
  }
  return g;
}

PointSample sample_graph_points(const SpatialGraph& g, int n, std::uint64_t seed) {
  if (g.empty()) throw std::invalid_argument("sample_graph_points: empty graph");
  if (n < 1) throw std::invalid_argument("sample_graph_points: n must be >= 1");
  PointSample out;
  out.seed = seed;
  out.points.reserve(static_cast<std::size_t>(n));

  const double total = g.total_length();
  Rng rng(seed);
  if (total <= 0.0) {
    for (int i = 0; i < n; ++i) {
      const auto& p = g.nodes[static_cast<std::size_t>(i) % g.nodes.size()].pos;
      out.points.push_back({static_cast<double>(p.c[0]),
                            static_cast<double>(p.c[1]),
                            static_cast<double>(p.c[2])});
    }
    return out;
  }

  std::vector<double> cum(g.edges.size());
  double acc = 0.0;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    acc += g.edges[e].length;
    cum[e] = acc;
  }

  for (int i = 0; i < n; ++i) {
    const double target = rng.next_unit() * total;
    const std::size_t e = static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), target) - cum.begin());
    const auto& edge = g.edges[std::min(e, g.edges.size() - 1)];
    double along = target - (e == 0 ? 0.0 : cum[e - 1]);
    std::array<double, 3> pt{static_cast<double>(edge.polyline.front().c[0]),
                             static_cast<double>(edge.polyline.front().c[1]),
                             static_cast<double>(edge.polyline.front().c[2])};
    for (std::size_t sgm = 1; sgm < edge.polyline.size(); ++sgm) {
      const VoxelIndex& a = edge.polyline[sgm - 1];
      const VoxelIndex& b = edge.polyline[sgm];
      const double len = step_length(a, b);
      if (along <= len || sgm + 1 == edge.polyline.size()) {
        const double t = len > 0.0 ? std::clamp(along / len, 0.0, 1.0) : 0.0;
        for (int x = 0; x < 3; ++x)
          pt[x] = a.c[x] + t * (b.c[x] - a.c[x]);
        break;
      }
      along -= len;
    }
    out.points.push_back(pt);
  }
  return out;
}

AssignmentResult solve_assignment(const std::vector<double>& cost, int n) {
  if (n < 1) throw std::invalid_argument("solve_assignment: n must be >= 1");
  if (cost.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("solve_assignment: cost matrix size mismatch");
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // shortest augmenting paths with potentials; 1-based helpers, column 0 is
  // the virtual root
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] -
                           u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  AssignmentResult res;
  res.col_of_row.assign(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) res.col_of_row[p[j] - 1] = j - 1;
  for (int i = 0; i < n; ++i)
    res.total_cost += cost[static_cast<std::size_t>(i) * n + res.col_of_row[i]];
  return res;
}

SmdResult streetmover_distance(const SpatialGraph& g1, const SpatialGraph& g2,
                               int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("streetmover_distance: n must be >= 1");
  SmdResult r;
  if (g1.empty() && g2.empty()) return r;

  Shape dom = g1.empty() ? g2.dims : g1.dims;
  if (!g1.empty() && !g2.empty())
    for (int a = 0; a < 3; ++a) dom.d[a] = std::max(g1.dims.d[a], g2.dims.d[a]);
  double diag = 0.0;
  for (int a = 0; a < dom.nd; ++a)
    diag += static_cast<double>(dom.d[a]) * dom.d[a];
  diag = std::sqrt(diag);

  if (g1.empty() != g2.empty()) {
    r.empty_mismatch = true;
    r.value = 1.0;
    r.mean_distance = diag;
    return r;
  }

  // same seed for both graphs: identical arc-length draws on congruent graphs
  const PointSample s1 = sample_graph_points(g1, n, seed);
  const PointSample s2 = sample_graph_points(g2, n, seed);

  std::vector<double> cost(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double d2 = 0.0;
      for (int x = 0; x < 3; ++x) {
        const double dx = s1.points[i][x] - s2.points[j][x];
        d2 += dx * dx;
      }
      cost[static_cast<std::size_t>(i) * n + j] = std::sqrt(d2);
    }
  const AssignmentResult a = solve_assignment(cost, n);
  r.mean_distance = a.total_cost / n;
  r.value = diag > 0.0 ? r.mean_distance / diag : 0.0;
  return r;
}

}  // namespace cldice
