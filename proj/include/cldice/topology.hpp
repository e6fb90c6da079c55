#pragma once

#include <cstdint>
#include <vector>

#include "cldice/grid.hpp"

namespace cldice {

// Cell counts of the union of closed unit cubes over foreground voxels,
// shared cells counted once. n3 is 0 in 2D.
struct CubicalComplexCounts {
  std::int64_t n0 = 0;
  std::int64_t n1 = 0;
  std::int64_t n2 = 0;
  std::int64_t n3 = 0;
  bool operator==(const CubicalComplexCounts&) const = default;
};

struct BettiTriple {
  std::int64_t b0 = 0;
  std::int64_t b1 = 0;
  std::int64_t b2 = 0;
  bool operator==(const BettiTriple&) const = default;
};

struct ComponentLabels {
  std::vector<std::int32_t> labels;  // 1..count, 0 = not in query set
  int count = 0;
};

struct TopologyReport {
  std::vector<std::vector<VoxelIndex>> ghosts;
  std::vector<std::vector<VoxelIndex>> misses;
  bool cl_dice_consistent = false;  // no ghosts and no misses
};

struct HomotopyCertificate {
  bool fg_skel_in_pred = false;     // skeleton(fg V_L) within fg V_P
  bool pred_skel_in_fg = false;     // skeleton(fg V_P) within fg V_L
  bool bg_skel_in_pred_bg = false;  // skeleton(bg V_L) within bg V_P
  bool pred_bg_skel_in_bg = false;  // skeleton(bg V_P) within bg V_L
  bool betti_fg_equal = false;
  bool betti_bg_equal = false;
  bool certified = false;  // all four inclusions
};

// Labels assigned by first-encounter raster order.
ComponentLabels connected_components(const BinaryMask& m, Connectivity conn);

// Components as voxel lists, same order as the labels.
std::vector<std::vector<VoxelIndex>> component_voxels(const BinaryMask& m,
                                                      Connectivity conn);

CubicalComplexCounts cubical_counts(const BinaryMask& m);

// Alternating sum of cell counts; includes the -n3 term in 3D.
std::int64_t euler_characteristic(const BinaryMask& m);

// b0 from foreground components (8/26), b2 from bounded background
// components (4/6, 3D only, after a one-voxel background pad),
// b1 = b0 + b2 - chi.
BettiTriple betti_numbers(const BinaryMask& m);

// Independent homology oracle: ranks of the GF(2) boundary maps of the
// cubical chain complex. Exact; limited to small masks (<= ~20 per axis).
BettiTriple betti_oracle(const BinaryMask& m);

// Betti triple of the open complement (background) of m, modeled on the
// half-shifted dual grid after a one-voxel background pad. Used by the
// homotopy certificate.
BettiTriple complement_betti(const BinaryMask& m);

// A foreground voxel is simple iff deleting it leaves the Betti triple of
// the mask unchanged (dual pair: of its complement). Decided by the local
// neighborhood test first — exactly one fg component in the punctured
// neighborhood adjacent to the voxel and exactly one adjacent bg component
// (4-in-N8 in 2D, 6-within-18 in 3D for the default pair) — which is sound
// but in 3D misses rare configurations whose deletion is homologically
// silent; those fall back to an exact Euler/Betti comparison.
bool is_simple_point(const BinaryMask& m, const VoxelIndex& idx);
bool is_simple_point(const BinaryMask& m, const VoxelIndex& idx,
                     const AdjacencyPair& pair);

namespace detail {
// Unchecked variant on raw bits for the thinning inner loop.
bool is_simple_point_raw(const std::vector<std::uint8_t>& bits, const Shape& s,
                         int i, int j, int k, const AdjacencyPair& pair);
}  // namespace detail

// Connected components of S_P & !V_L (prediction skeleton outside the
// ground-truth mask) under foreground adjacency.
std::vector<std::vector<VoxelIndex>> detect_ghosts(const BinaryMask& pred_skel,
                                                   const BinaryMask& label_mask);

// Connected components of S_L & !V_P.
std::vector<std::vector<VoxelIndex>> detect_misses(const BinaryMask& label_skel,
                                                   const BinaryMask& pred_mask);

TopologyReport topology_report(const BinaryMask& pred_skel,
                               const BinaryMask& label_skel,
                               const BinaryMask& pred_mask,
                               const BinaryMask& label_mask);

// Mutual-inclusion certificate over thinning skeleta of foreground and
// background; certified implies both Betti triples agree (the machine-checkable
// shadow of homotopy equivalence).
HomotopyCertificate homotopy_certificate(const BinaryMask& pred,
                                         const BinaryMask& label);

}  // namespace cldice
