#include "cldice/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "cldice/graphmetrics.hpp"
#include "cldice/morphology.hpp"
#include "cldice/rng.hpp"
#include "cldice/topology.hpp"

namespace cldice {

void validate(const LossParams& p) {
  if (!(p.alpha >= 0.0 && p.alpha <= 0.5))
    throw std::invalid_argument("alpha must be in [0, 0.5]");
  if (p.k < 1) throw std::invalid_argument("k must be >= 1");
  if (!(p.epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
}

LossParams auto_loss_params(const BinaryMask& label, double alpha, double epsilon) {
  LossParams p;
  p.alpha = alpha;
  p.epsilon = epsilon;
  p.k = std::max(1, max_inscribed_radius(label));
  validate(p);
  return p;
}

namespace {

double field_sum(const ScalarField& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i];
  return s;
}

double product_sum(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double harmonic_mean(double a, double b) {
  if (a <= 0.0 && b <= 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

}  // namespace

double soft_dice(const ScalarField& p, const ScalarField& l, double epsilon) {
  require_same_shape(p.shape(), l.shape());
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  return (2.0 * product_sum(p, l) + epsilon) /
         (field_sum(p) + field_sum(l) + epsilon);
}

double dice_hard(const BinaryMask& p, const BinaryMask& l) {
  require_same_shape(p.shape(), l.shape());
  const std::size_t np = p.count(), nl = l.count();
  if (np == 0 && nl == 0) return 1.0;
  const std::size_t inter = mask_and(p, l).count();
  return 2.0 * static_cast<double>(inter) / static_cast<double>(np + nl);
}

double accuracy(const BinaryMask& p, const BinaryMask& l) {
  require_same_shape(p.shape(), l.shape());
  std::size_t agree = 0;
  for (std::size_t i = 0; i < p.size(); ++i) agree += p[i] == l[i];
  return static_cast<double>(agree) / static_cast<double>(p.size());
}

SkeletonFraction tprec(const BinaryMask& pred_skel, const BinaryMask& label_mask) {
  require_same_shape(pred_skel.shape(), label_mask.shape());
  const std::size_t n = pred_skel.count();
  if (n == 0) return {0.0, true};
  return {static_cast<double>(mask_and(pred_skel, label_mask).count()) /
              static_cast<double>(n),
          false};
}

SkeletonFraction tsens(const BinaryMask& label_skel, const BinaryMask& pred_mask) {
  return tprec(label_skel, pred_mask);
}

double cl_dice(const BinaryMask& pred, const BinaryMask& label) {
  require_same_shape(pred.shape(), label.shape());
  if (pred.empty_mask() && label.empty_mask()) return 1.0;
  const BinaryMask skel_pred = thin_skeletonize(pred);
  const BinaryMask skel_label = thin_skeletonize(label);
  const SkeletonFraction tp = tprec(skel_pred, label);
  const SkeletonFraction ts = tsens(skel_label, pred);
  return harmonic_mean(tp.value, ts.value);
}

double cl_dice_background(const BinaryMask& pred, const BinaryMask& label) {
  require_same_shape(pred.shape(), label.shape());
  const BinaryMask bg_pred = pad(complement(pred), 1, true);
  const BinaryMask bg_label = pad(complement(label), 1, true);
  const AdjacencyPair dual = dual_pair(pred.shape().nd);
  const BinaryMask skel_pred = thin_skeletonize(bg_pred, dual);
  const BinaryMask skel_label = thin_skeletonize(bg_label, dual);
  // an unbounded background region retracts past the frame and can leave no
  // skeleton voxels at all; two such trivial backgrounds agree perfectly
  if (skel_pred.empty_mask() && skel_label.empty_mask()) return 1.0;
  const SkeletonFraction tp = tprec(skel_pred, bg_label);
  const SkeletonFraction ts = tsens(skel_label, bg_pred);
  return harmonic_mean(tp.value, ts.value);
}

double soft_cl_dice(const ScalarField& pred, const ScalarField& label,
                    const LossParams& params) {
  require_same_shape(pred.shape(), label.shape());
  validate(params);
  const ScalarField skel_pred = soft_skeleton(pred, params.k);
  const ScalarField skel_label = soft_skeleton(label, params.k);
  const double tp = (product_sum(skel_pred, label) + params.epsilon) /
                    (field_sum(skel_pred) + params.epsilon);
  const double ts = (product_sum(skel_label, pred) + params.epsilon) /
                    (field_sum(skel_label) + params.epsilon);
  return harmonic_mean(tp, ts);
}

double combined_loss(const ScalarField& pred, const ScalarField& label,
                     const LossParams& params) {
  validate(params);
  const double dice_term = 1.0 - soft_dice(pred, label, params.epsilon);
  if (params.alpha == 0.0) return dice_term;
  return (1.0 - params.alpha) * dice_term +
         params.alpha * (1.0 - soft_cl_dice(pred, label, params));
}

std::array<std::int64_t, 3> betti_errors(const BinaryMask& p, const BinaryMask& l) {
  require_same_shape(p.shape(), l.shape());
  const BettiTriple bp = betti_numbers(p), bl = betti_numbers(l);
  return {std::abs(bp.b0 - bl.b0), std::abs(bp.b1 - bl.b1), std::abs(bp.b2 - bl.b2)};
}

std::int64_t euler_error(const BinaryMask& p, const BinaryMask& l) {
  require_same_shape(p.shape(), l.shape());
  return std::abs(euler_characteristic(p) - euler_characteristic(l));
}

namespace {

struct PatchScores {
  double b0 = 0, b1 = 0, b2 = 0, euler = 0, smd = 0;
};

PatchScores score_patch(const BinaryMask& pred, const BinaryMask& label,
                        const VoxelIndex& origin, const Shape& window,
                        const PatchEvalOptions& opt, std::uint64_t patch_seed) {
  PatchScores out;
  const BinaryMask pc = crop(pred, origin, window);
  const BinaryMask lc = crop(label, origin, window);
  const auto be = betti_errors(pc, lc);
  out.b0 = static_cast<double>(be[0]);
  out.b1 = static_cast<double>(be[1]);
  out.b2 = static_cast<double>(be[2]);
  out.euler = static_cast<double>(euler_error(pc, lc));
  if (opt.with_smd) {
    const SpatialGraph gp = skeleton_to_graph(thin_skeletonize(pc));
    const SpatialGraph gl = skeleton_to_graph(thin_skeletonize(lc));
    out.smd = streetmover_distance(gp, gl, opt.smd_points, patch_seed).value;
  }
  return out;
}

}  // namespace

MetricReport patch_evaluate(const BinaryMask& pred, const BinaryMask& label,
                            int patch_size, int n_patches, std::uint64_t seed,
                            const PatchEvalOptions& options) {
  require_same_shape(pred.shape(), label.shape());
  const Shape& s = pred.shape();
  if (patch_size < 1) throw std::invalid_argument("patch size must be >= 1");
  for (int a = 0; a < s.nd; ++a)
    if (patch_size > s.d[a])
      throw std::invalid_argument("patch larger than volume");
  if (n_patches < 1) throw std::invalid_argument("n_patches must be >= 1");

  MetricReport rep;
  rep.dice = dice_hard(pred, label);
  rep.accuracy = accuracy(pred, label);
  rep.cldice = cl_dice(pred, label);
  if (options.with_background)
    rep.cldice_background = cl_dice_background(pred, label);
  const std::int64_t chi_label = euler_characteristic(label);
  if (chi_label != 0)
    rep.euler_ratio = static_cast<double>(euler_characteristic(pred)) /
                      static_cast<double>(chi_label);

  Shape window = s;
  for (int a = 0; a < s.nd; ++a) window.d[a] = patch_size;

  // patch list generated up front so parallel evaluation cannot change results
  Rng rng(seed);
  std::vector<VoxelIndex> origins;
  std::vector<std::uint64_t> patch_seeds;
  for (int p = 0; p < n_patches; ++p) {
    VoxelIndex o;
    for (int a = 0; a < s.nd; ++a)
      o.c[a] = static_cast<int>(rng.next_below(
          static_cast<std::uint64_t>(s.d[a] - patch_size + 1)));
    origins.push_back(o);
    patch_seeds.push_back(Rng::derive(seed, static_cast<std::uint64_t>(p) + 1));
  }

  std::vector<PatchScores> scores(static_cast<std::size_t>(n_patches));
  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    for (int p = 0; p < n_patches; ++p)
      scores[p] = score_patch(pred, label, origins[p], window, options,
                              patch_seeds[p]);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (int p = next.fetch_add(1); p < n_patches; p = next.fetch_add(1))
          scores[p] = score_patch(pred, label, origins[p], window, options,
                                  patch_seeds[p]);
      });
    for (auto& th : pool) th.join();
  }

  double smd_sum = 0.0;
  for (const auto& sc : scores) {
    rep.betti0_err += sc.b0;
    rep.betti1_err += sc.b1;
    rep.betti2_err += sc.b2;
    rep.euler_err += sc.euler;
    smd_sum += sc.smd;
  }
  const double inv = 1.0 / n_patches;
  rep.betti0_err *= inv;
  rep.betti1_err *= inv;
  rep.betti2_err *= inv;
  rep.euler_err *= inv;
  if (options.with_smd) rep.smd = smd_sum * inv;
  rep.patch_count = n_patches;
  return rep;
}

}  // namespace cldice
