#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cldice/grid.hpp"

namespace cldice {

struct GraphNode {
  int id = 0;
  VoxelIndex pos;
  int degree = 0;
};

struct GraphEdge {
  int a = 0;
  int b = 0;
  std::vector<VoxelIndex> polyline;  // ordered voxel chain, node coords at both ends
  double length = 0.0;               // sum of step lengths (1, sqrt2, sqrt3)
};

struct SpatialGraph {
  Shape dims;
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  bool empty() const { return nodes.empty(); }
  double total_length() const;
};

struct PointSample {
  std::vector<std::array<double, 3>> points;
  std::uint64_t seed = 0;
};

struct SmdResult {
  double value = 0.0;          // mean matched distance / domain diagonal
  double mean_distance = 0.0;  // before normalization
  bool empty_mismatch = false; // one graph empty, the other not
};

struct AssignmentResult {
  std::vector<int> col_of_row;
  double total_cost = 0.0;
};

// Junction/endpoint graph of a (roughly) unit-wide skeleton: nodes are voxels
// of degree != 2 plus one deterministic representative per junction-free
// cycle; edges are maximal degree-2 chains. Degree uses foreground adjacency
// (8/26) with redundant diagonal links pruned (a diagonal next to a
// foreground orthogonal intermediate does not count), so staircases and unit
// rings read as plain curves.
SpatialGraph skeleton_to_graph(const BinaryMask& skel);

// n points drawn uniformly by arc length over the edge polylines;
// deterministic for a fixed seed. A graph with nodes but zero total edge
// length yields node positions cycled in order.
PointSample sample_graph_points(const SpatialGraph& g, int n, std::uint64_t seed);

// Exact minimum-cost perfect matching (Hungarian, O(n^3)) on a dense
// row-major n x n cost matrix.
AssignmentResult solve_assignment(const std::vector<double>& cost, int n);

// Wasserstein-style distance: n points sampled from each graph with the same
// seed, matched at minimum total Euclidean cost; the mean matched distance is
// normalized by the domain diagonal. Empty vs non-empty yields 1.0 with a
// flag; empty vs empty yields 0.
SmdResult streetmover_distance(const SpatialGraph& g1, const SpatialGraph& g2,
                               int n, std::uint64_t seed);

}  // namespace cldice
