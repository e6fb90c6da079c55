#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cldice/grid.hpp"
#include "cldice/metrics.hpp"

namespace cldice {

struct SyntheticSample {
  ScalarField image;
  BinaryMask label;
  std::uint64_t seed = 0;
};

struct DataConfig {
  int size = 40;
  int n_curves = 2;
  int radius_min = 1;
  int radius_max = 2;
  double noise_sigma = 0.1;
  int n_train = 2;  // held-out sample generated on top of these
};

struct TrainConfig {
  LossParams loss;
  int steps = 200;
  double learning_rate = 1.0;
  std::vector<std::uint64_t> seeds{1};
  int kernel_size = 5;
  int log_every = 10;
};

struct TrainRecord {
  int step = 0;
  double loss = 0.0;
  double dice = 0.0;
  double cldice = 0.0;
  double b0_err = 0.0;
  double b1_err = 0.0;
};

struct TrainResult {
  std::vector<TrainRecord> history;
  MetricReport heldout_report;
  std::vector<double> kernel;
  double bias = 0.0;
  std::optional<ScalarField> heldout_prediction;
  std::vector<ScalarField> train_predictions;
};

// Tubes as smooth x-monotone polylines in disjoint horizontal bands, dilated
// to per-curve radii, with one deliberately width-1 stretch so connectivity is
// fragile. Image = blurred rendering + clamped Gaussian noise. Deterministic
// per seed; label has exactly n_curves components and no loops.
SyntheticSample gen_synthetic_tubes(std::uint64_t seed, int size, int n_curves,
                                    int radius_min, int radius_max,
                                    double noise_sigma);

// The noise-free image (two clipped box-blur passes of the rendered label).
ScalarField render_blurred_label(const BinaryMask& label);

// n_train + 1 samples with seeds derived from base_seed; the last one is the
// held-out sample.
std::vector<SyntheticSample> make_dataset(const DataConfig& cfg,
                                          std::uint64_t base_seed);

// Plain gradient descent on the combined loss for a single-conv + sigmoid
// predictor. Trains on all but the last sample (on all of them when only one
// is given); history metrics and the final report are on the held-out sample.
// Throws when the loss becomes non-finite, naming the step.
TrainResult train_demo(const TrainConfig& cfg,
                       const std::vector<SyntheticSample>& data);

// Convenience: build the dataset for one seed and train on it.
TrainResult run_seed(const TrainConfig& cfg, const DataConfig& data_cfg,
                     std::uint64_t seed);

}  // namespace cldice
