#include "cldice/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cldice/autodiff.hpp"
#include "cldice/morphology.hpp"
#include "cldice/rng.hpp"
#include "cldice/topology.hpp"

namespace cldice {

namespace {

ScalarField box_blur(const ScalarField& f) {
  const Shape& s = f.shape();
  std::vector<double> out(f.size(), 0.0);
  for (int i = 0; i < s.d[0]; ++i)
    for (int j = 0; j < s.d[1]; ++j) {
      double acc = 0.0;
      int cnt = 0;
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          const int ni = i + di, nj = j + dj;
          if (ni < 0 || ni >= s.d[0] || nj < 0 || nj >= s.d[1]) continue;
          acc += f.at(ni, nj);
          ++cnt;
        }
      out[s.flat(i, j)] = acc / cnt;
    }
  return ScalarField(s, std::move(out));
}

}  // namespace

ScalarField render_blurred_label(const BinaryMask& label) {
  return box_blur(box_blur(to_field(label)));
}

SyntheticSample gen_synthetic_tubes(std::uint64_t seed, int size, int n_curves,
                                    int radius_min, int radius_max,
                                    double noise_sigma) {
  if (size < 8) throw std::invalid_argument("gen_synthetic_tubes: size too small");
  if (n_curves < 1) throw std::invalid_argument("gen_synthetic_tubes: n_curves >= 1");
  if (radius_min < 1 || radius_max < radius_min || radius_max > size / 8)
    throw std::invalid_argument("gen_synthetic_tubes: radius range invalid");
  if (noise_sigma < 0.0)
    throw std::invalid_argument("gen_synthetic_tubes: negative noise");
  const int band = size / n_curves;
  if (band < 2 * radius_max + 5)
    throw std::invalid_argument("gen_synthetic_tubes: bands too narrow for radii");

  Rng rng(seed);
  const Shape s = Shape::of2d(size, size);
  std::vector<std::uint8_t> bits(s.size(), 0);

  for (int c = 0; c < n_curves; ++c) {
    const int r = rng.next_int(radius_min, radius_max);
    const int lo = c * band + r + 1;
    const int hi = (c + 1) * band - r - 3;  // two background rows between bands
    int y = rng.next_int(lo, std::max(lo, hi));
    int v = rng.next_int(-1, 1);
    // every curve gets a width-1 stretch away from the frame edges
    const int frag_len = std::max(4, size / 6);
    const int frag_start = rng.next_int(size / 4, 3 * size / 4 - frag_len);
    for (int x = 0; x < size; ++x) {
      const bool thin = x >= frag_start && x < frag_start + frag_len;
      const int rr = thin ? 0 : r;
      for (int di = -rr; di <= rr; ++di)
        for (int dj = -rr; dj <= rr; ++dj) {
          if (di * di + dj * dj > rr * rr) continue;
          const int yy = y + di, xx = x + dj;
          if (yy < 0 || yy >= size || xx < 0 || xx >= size) continue;
          bits[s.flat(yy, xx)] = 1;
        }
      if (rng.next_unit() < 0.3) v = rng.next_int(-1, 1);
      y = std::clamp(y + v, lo, std::max(lo, hi));
    }
  }
  BinaryMask label(s, std::move(bits));

  ScalarField clean = render_blurred_label(label);
  std::vector<double> img = clean.data();
  if (noise_sigma > 0.0)
    for (double& p : img)
      p = std::clamp(p + noise_sigma * rng.next_gaussian(), 0.0, 1.0);
  return SyntheticSample{ScalarField(s, std::move(img)), std::move(label), seed};
}

std::vector<SyntheticSample> make_dataset(const DataConfig& cfg,
                                          std::uint64_t base_seed) {
  std::vector<SyntheticSample> out;
  for (int i = 0; i <= cfg.n_train; ++i)
    out.push_back(gen_synthetic_tubes(Rng::derive(base_seed, i + 1), cfg.size,
                                      cfg.n_curves, cfg.radius_min,
                                      cfg.radius_max, cfg.noise_sigma));
  return out;
}

namespace {

struct SampleGraph {
  Tape tape;
  int kernel_leaf = -1;
  int bias_leaf = -1;
  int pred = -1;
  int loss = -1;
};

void build_sample_graph(SampleGraph& sg, const SyntheticSample& sample,
                        const Shape& kshape, const std::vector<double>& kernel,
                        double bias, const LossParams& loss) {
  const int img = sg.tape.leaf(sample.image);
  const int lbl = sg.tape.leaf(to_field(sample.label));
  sg.kernel_leaf = sg.tape.leaf(kshape, kernel);
  sg.bias_leaf = sg.tape.scalar_leaf(bias);
  sg.pred = sg.tape.sigmoid(
      sg.tape.add(sg.tape.conv2d(img, sg.kernel_leaf), sg.bias_leaf));
  sg.loss = build_combined_loss(sg.tape, sg.pred, lbl, loss);
}

}  // namespace

TrainResult train_demo(const TrainConfig& cfg,
                       const std::vector<SyntheticSample>& data) {
  if (data.empty()) throw std::invalid_argument("train_demo: no data");
  validate(cfg.loss);
  if (cfg.steps < 1) throw std::invalid_argument("train_demo: steps >= 1");
  if (cfg.kernel_size < 1 || cfg.kernel_size % 2 == 0)
    throw std::invalid_argument("train_demo: kernel size must be odd");

  const SyntheticSample& heldout = data.back();
  const std::size_t n_train = data.size() > 1 ? data.size() - 1 : 1;

  const Shape kshape = Shape::of2d(cfg.kernel_size, cfg.kernel_size);
  Rng init(cfg.seeds.empty() ? heldout.seed : cfg.seeds[0]);
  std::vector<double> kernel(kshape.size());
  for (double& w : kernel) w = 0.1 * init.next_gaussian();
  kernel[kshape.flat(cfg.kernel_size / 2, cfg.kernel_size / 2)] += 1.0;
  double bias = 0.0;

  std::vector<SampleGraph> graphs(n_train);
  for (std::size_t i = 0; i < n_train; ++i)
    build_sample_graph(graphs[i], data[i], kshape, kernel, bias, cfg.loss);
  SampleGraph held;
  build_sample_graph(held, heldout, kshape, kernel, bias, cfg.loss);

  const BinaryMask& heldout_label = heldout.label;
  TrainResult res;

  auto heldout_metrics = [&](TrainRecord& row) {
    held.tape.set_leaf(held.kernel_leaf, kernel);
    held.tape.set_leaf_scalar(held.bias_leaf, bias);
    held.tape.forward();
    ScalarField pred(heldout.image.shape(), held.tape.values(held.pred));
    const BinaryMask hard = threshold(pred, 0.5);
    row.dice = dice_hard(hard, heldout_label);
    row.cldice = cl_dice(hard, heldout_label);
    const auto be = betti_errors(hard, heldout_label);
    row.b0_err = static_cast<double>(be[0]);
    row.b1_err = static_cast<double>(be[1]);
    return pred;
  };

  std::vector<double> gk(kernel.size());
  for (int step = 0; step < cfg.steps; ++step) {
    std::fill(gk.begin(), gk.end(), 0.0);
    double gb = 0.0, mean_loss = 0.0;
    for (auto& sg : graphs) {
      sg.tape.set_leaf(sg.kernel_leaf, kernel);
      sg.tape.set_leaf_scalar(sg.bias_leaf, bias);
      sg.tape.forward();
      mean_loss += sg.tape.value(sg.loss);
      sg.tape.backward(sg.loss);
      const auto& ak = sg.tape.adjoint(sg.kernel_leaf);
      for (std::size_t i = 0; i < gk.size(); ++i) gk[i] += ak[i];
      gb += sg.tape.adjoint(sg.bias_leaf)[0];
    }
    const double inv = 1.0 / static_cast<double>(n_train);
    mean_loss *= inv;
    if (!std::isfinite(mean_loss))
      throw std::runtime_error("training diverged at step " + std::to_string(step));

    const bool log_now = cfg.log_every > 0 && (step % cfg.log_every == 0 ||
                                               step + 1 == cfg.steps);
    if (log_now) {
      TrainRecord row;
      row.step = step;
      row.loss = mean_loss;
      heldout_metrics(row);
      res.history.push_back(row);
    }

    for (std::size_t i = 0; i < kernel.size(); ++i)
      kernel[i] -= cfg.learning_rate * gk[i] * inv;
    bias -= cfg.learning_rate * gb * inv;
  }

  // final state: record once more and assemble the report
  TrainRecord final_row;
  final_row.step = cfg.steps;
  double final_loss = 0.0;
  res.train_predictions.clear();
  for (auto& sg : graphs) {
    sg.tape.set_leaf(sg.kernel_leaf, kernel);
    sg.tape.set_leaf_scalar(sg.bias_leaf, bias);
    sg.tape.forward();
    final_loss += sg.tape.value(sg.loss);
    res.train_predictions.emplace_back(data[res.train_predictions.size()].image.shape(),
                                       sg.tape.values(sg.pred));
  }
  final_row.loss = final_loss / static_cast<double>(n_train);
  ScalarField heldout_pred = heldout_metrics(final_row);
  res.history.push_back(final_row);

  const BinaryMask hard = threshold(heldout_pred, 0.5);
  PatchEvalOptions opt;
  opt.with_smd = true;
  res.heldout_report = patch_evaluate(hard, heldout_label,
                                      heldout_label.shape().d[0], 1,
                                      heldout.seed, opt);
  res.kernel = kernel;
  res.bias = bias;
  res.heldout_prediction = std::move(heldout_pred);
  return res;
}

TrainResult run_seed(const TrainConfig& cfg, const DataConfig& data_cfg,
                     std::uint64_t seed) {
  TrainConfig c = cfg;
  c.seeds = {seed};
  return train_demo(c, make_dataset(data_cfg, seed));
}

}  // namespace cldice
