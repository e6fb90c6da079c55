#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "cldice/grid.hpp"

namespace cldice {

struct MetricReport {
  double dice = 0.0;
  double accuracy = 0.0;
  double cldice = 0.0;
  double betti0_err = 0.0;
  double betti1_err = 0.0;
  double betti2_err = 0.0;
  double euler_err = 0.0;
  std::optional<double> euler_ratio;        // chi_pred / chi_label when defined
  std::optional<double> smd;
  std::optional<double> cldice_background;
  int patch_count = 0;
};

struct LossParams {
  double alpha = 0.5;    // mixing weight, in [0, 0.5]
  int k = 1;             // skeletonization iterations, >= 1
  double epsilon = 1e-6; // smoothing, > 0
};

void validate(const LossParams& p);

// k set to the saturation radius of the label mask (clamped to >= 1).
LossParams auto_loss_params(const BinaryMask& label, double alpha,
                            double epsilon = 1e-6);

struct SkeletonFraction {
  double value = 0.0;
  bool empty_skeleton = false;  // continuous extension with 0
};

// (2*sum(p*l) + eps) / (sum(p) + sum(l) + eps)
double soft_dice(const ScalarField& p, const ScalarField& l, double epsilon);

double dice_hard(const BinaryMask& p, const BinaryMask& l);  // empty-vs-empty = 1
double accuracy(const BinaryMask& p, const BinaryMask& l);

// fraction of the skeleton inside the mask
SkeletonFraction tprec(const BinaryMask& pred_skel, const BinaryMask& label_mask);
SkeletonFraction tsens(const BinaryMask& label_skel, const BinaryMask& pred_mask);

// harmonic mean of tprec/tsens over thinning skeleta; 0 when both vanish,
// 1 for two empty masks
double cl_dice(const BinaryMask& pred, const BinaryMask& label);

// same measure on the complements (dual adjacency skeleta)
double cl_dice_background(const BinaryMask& pred, const BinaryMask& label);

double soft_cl_dice(const ScalarField& pred, const ScalarField& label,
                    const LossParams& params);

// (1 - alpha) * (1 - softDice) + alpha * (1 - softclDice)
double combined_loss(const ScalarField& pred, const ScalarField& label,
                     const LossParams& params);

std::array<std::int64_t, 3> betti_errors(const BinaryMask& p, const BinaryMask& l);
std::int64_t euler_error(const BinaryMask& p, const BinaryMask& l);

struct PatchEvalOptions {
  bool with_smd = false;
  bool with_background = false;
  int smd_points = 100;
  int jobs = 1;
};

// Overlap metrics on the whole volume; topology metrics (and SMD when
// enabled) averaged over n_patches seeded random cubic patches of side
// patch_size. Deterministic for a fixed seed regardless of jobs.
MetricReport patch_evaluate(const BinaryMask& pred, const BinaryMask& label,
                            int patch_size, int n_patches, std::uint64_t seed,
                            const PatchEvalOptions& options = {});

}  // namespace cldice
