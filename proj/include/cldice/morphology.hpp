#pragma once

#include "cldice/grid.hpp"

namespace cldice {

// Soft morphology on [0,1] fields. Erosion is the pointwise minimum of
// axis-aligned 3-element min-pools (a cross/diamond structuring element);
// dilation is a full 3x3 (2D) or 3x3x3 (3D) max-pool. Windows are clipped at
// the boundary: out-of-frame cells take part in neither the min nor the max.
ScalarField soft_erode(const ScalarField& f);
ScalarField soft_dilate(const ScalarField& f);

// Dilation with the same clipped cross kernel as soft_erode; exposed for the
// erosion/dilation duality check.
ScalarField soft_dilate_cross(const ScalarField& f);

ScalarField soft_open(const ScalarField& f);

// Iterative min/max-pool skeletonization: S accumulates ReLU(I - open(I))
// ridges while I is eroded k times; update S <- S + (1 - S) * delta.
// k = 0 runs only the initial opening residue.
ScalarField soft_skeleton(const ScalarField& f, int k);

// Sequential simple-point thinning with directional sub-iterations.
// Preserves the Betti triple under the adjacency pair and never deletes curve
// endpoints (foreground voxels with at most one foreground neighbor).
BinaryMask thin_skeletonize(const BinaryMask& m);
BinaryMask thin_skeletonize(const BinaryMask& m, const AdjacencyPair& pair);

// Largest number of erosions any foreground voxel survives: the saturation
// iteration count for soft_skeleton. Voxels never reachable from in-frame
// background (e.g. an all-ones mask) contribute 0.
int max_inscribed_radius(const BinaryMask& m);

}  // namespace cldice
