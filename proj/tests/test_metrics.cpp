#include <doctest.h>

#include "cldice/metrics.hpp"
#include "cldice/morphology.hpp"
#include "cldice/topology.hpp"
#include "test_util.hpp"

using namespace cldice;
using namespace testutil;

namespace {

// 12-long unit-wide line with equal-Dice connected/gapped predictions:
// A adds 6 spread-out bumps, B removes 4 interior pixels; both have
// dice = 0.8 exactly while only B breaks the tube.
struct EqualDicePair {
  BinaryMask label;
  BinaryMask connected;
  BinaryMask gapped;
};

EqualDicePair equal_dice_pair() {
  const Shape s = Shape::of2d(9, 16);
  std::vector<std::uint8_t> lb(s.size(), 0), ab(s.size(), 0), bb(s.size(), 0);
  for (int j = 2; j < 14; ++j) lb[s.flat(4, j)] = 1;
  for (int j = 2; j < 14; ++j) ab[s.flat(4, j)] = 1;
  for (int j : {2, 4, 6, 8, 10, 12}) ab[s.flat(3, j)] = 1;
  for (int j = 2; j < 14; ++j)
    if (j < 6 || j >= 10) bb[s.flat(4, j)] = 1;
  return {BinaryMask(s, lb), BinaryMask(s, ab), BinaryMask(s, bb)};
}

BinaryMask line_mask(const Shape& s, int row, int j0, int j1,
                     std::vector<int> holes = {}) {
  std::vector<std::uint8_t> b(s.size(), 0);
  for (int j = j0; j < j1; ++j) b[s.flat(row, j)] = 1;
  for (int j : holes) b[s.flat(row, j)] = 0;
  return BinaryMask(s, std::move(b));
}

}  // namespace

TEST_CASE("soft_dice on binary fixtures") {
  const BinaryMask m = from_rows({"##..", ".##.", "...#"});
  CHECK(soft_dice(to_field(m), to_field(m), 1e-9) == doctest::Approx(1.0));

  const BinaryMask p = from_rows({"##..", "....", "...."});
  const BinaryMask l = from_rows({".#..", ".#..", "...."});
  // |p|=|l|=2, overlap 1 -> 0.5 as eps -> 0
  CHECK(soft_dice(to_field(p), to_field(l), 1e-9) == doctest::Approx(0.5));

  const BinaryMask q = from_rows({"....", "....", "#..."});
  CHECK(soft_dice(to_field(p), to_field(q), 1e-6) ==
        doctest::Approx(1e-6 / (3 + 1e-6)));
  CHECK_THROWS_AS(soft_dice(to_field(p), ScalarField::zeros(Shape::of2d(2, 2)), 1e-6),
                  std::invalid_argument);
}

TEST_CASE("hard dice and accuracy") {
  const BinaryMask a = from_rows({"##", ".#"});
  CHECK(dice_hard(a, a) == 1.0);
  CHECK(accuracy(a, a) == 1.0);
  CHECK(dice_hard(a, complement(a)) == 0.0);
  CHECK(accuracy(a, complement(a)) == 0.0);

  // checkerboard vs all-ones on 4x4
  const BinaryMask board = from_rows({"#.#.", ".#.#", "#.#.", ".#.#"});
  const BinaryMask ones = complement(BinaryMask::zeros(Shape::of2d(4, 4)));
  CHECK(dice_hard(board, ones) == doctest::Approx(2.0 * 8 / (8 + 16)));
  CHECK(accuracy(board, ones) == doctest::Approx(0.5));

  const BinaryMask empty = BinaryMask::zeros(Shape::of2d(4, 4));
  CHECK(dice_hard(empty, empty) == 1.0);  // agreement on nothing
}

TEST_CASE("tprec and tsens") {
  const BinaryMask mask = from_rows({"#####", "#####", "....."});
  const BinaryMask skel = from_rows({"#.#.#", "....#", "....."});
  CHECK(tprec(skel, mask).value == doctest::Approx(1.0));

  const BinaryMask skel2 = from_rows({"#.#.#", ".....", "....#"});
  const SkeletonFraction f = tprec(skel2, mask);
  CHECK(f.value == doctest::Approx(0.75));
  CHECK_FALSE(f.empty_skeleton);

  const SkeletonFraction e = tprec(BinaryMask::zeros(mask.shape()), mask);
  CHECK(e.value == 0.0);
  CHECK(e.empty_skeleton);
}

TEST_CASE("cl_dice basics and the equal-Dice ordering") {
  const EqualDicePair fx = equal_dice_pair();
  CHECK(cl_dice(fx.label, fx.label) == doctest::Approx(1.0));
  CHECK(std::abs(dice_hard(fx.connected, fx.label) -
                 dice_hard(fx.gapped, fx.label)) < 1e-9);
  const double cl_conn = cl_dice(fx.connected, fx.label);
  const double cl_gap = cl_dice(fx.gapped, fx.label);
  CHECK(cl_conn > cl_gap + 0.05);

  // disjoint masks share no skeleton mass
  const Shape s = Shape::of2d(9, 16);
  CHECK(cl_dice(line_mask(s, 1, 2, 10), line_mask(s, 7, 2, 10)) == 0.0);
  CHECK(cl_dice(BinaryMask::zeros(s), BinaryMask::zeros(s)) == 1.0);
}

TEST_CASE("cl_dice is symmetric") {
  Rng rng(61);
  const Shape s = Shape::of2d(12, 12);
  for (int t = 0; t < 8; ++t) {
    const BinaryMask a = random_tube_mask(rng, s, 1);
    const BinaryMask b = random_tube_mask(rng, s, 1);
    CHECK(cl_dice(a, b) == doctest::Approx(cl_dice(b, a)).epsilon(1e-12));
    CHECK(dice_hard(a, b) == doctest::Approx(dice_hard(b, a)));
  }
}

TEST_CASE("similarity measures stay within [0,1] on random inputs") {
  Rng rng(62);
  const Shape s = Shape::of2d(10, 10);
  LossParams params;
  params.alpha = 0.4;
  params.k = 3;
  for (int t = 0; t < 10; ++t) {
    const BinaryMask a = random_mask(rng, s, rng.next_unit());
    const BinaryMask b = random_mask(rng, s, rng.next_unit());
    for (double v : {dice_hard(a, b), accuracy(a, b), cl_dice(a, b)}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    const ScalarField fa = random_field(rng, s), fb = random_field(rng, s);
    const double sc = soft_cl_dice(fa, fb, params);
    const double sd = soft_dice(fa, fb, params.epsilon);
    const double lc = combined_loss(fa, fb, params);
    for (double v : {sc, sd, lc}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("soft_cl_dice pinned fixtures") {
  const Shape s = Shape::of2d(4, 4);
  LossParams params;
  params.alpha = 0.5;
  params.k = 2;
  params.epsilon = 1e-6;

  SUBCASE("identical tube is 1 within epsilon") {
    const BinaryMask tube = line_mask(Shape::of2d(8, 8), 4, 1, 7);
    LossParams p8 = params;
    const double v = soft_cl_dice(to_field(tube), to_field(tube), p8);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
  }

  SUBCASE("all-zero prediction collapses to ~0 via the epsilon ratios") {
    const BinaryMask tube = line_mask(Shape::of2d(8, 8), 4, 1, 7);  // 6 long
    const double v =
        soft_cl_dice(ScalarField::zeros(Shape::of2d(8, 8)), to_field(tube), params);
    // closed form: tprec = eps/eps = 1, tsens = eps/(6+eps)
    const double ts = 1e-6 / (6.0 + 1e-6);
    CHECK(v == doctest::Approx(2.0 * ts / (1.0 + ts)).epsilon(1e-12));
    CHECK(v == doctest::Approx(3.3333322222225919e-07).epsilon(1e-9));
    CHECK(v < 1e-5);
  }

  SUBCASE("4x4 line with one missing interior pixel, k=2") {
    const BinaryMask label = line_mask(s, 1, 0, 4);
    const BinaryMask pred = line_mask(s, 1, 0, 4, {2});
    const double v = soft_cl_dice(to_field(pred), to_field(label), params);
    // width-1 lines are their own soft skeletons; hand-traced ratios:
    // tprec = (3+eps)/(3+eps), tsens = (3+eps)/(4+eps)
    const double eps = params.epsilon;
    const double tp = (3 + eps) / (3 + eps), ts = (3 + eps) / (4 + eps);
    CHECK(v == doctest::Approx(2 * tp * ts / (tp + ts)).epsilon(1e-15));
    CHECK(v == doctest::Approx(0.85714289795917209).epsilon(1e-15));  // frozen
  }
}

TEST_CASE("epsilon consistency of soft_cl_dice on binary inputs") {
  const Shape s = Shape::of2d(10, 10);
  const BinaryMask label = line_mask(s, 4, 1, 9);
  const BinaryMask pred = line_mask(s, 4, 1, 9, {5});
  LossParams p;
  p.k = 2;

  // epsilon-free ratio value from the same soft skeletons
  const ScalarField sp = soft_skeleton(to_field(pred), p.k);
  const ScalarField sl = soft_skeleton(to_field(label), p.k);
  auto dot = [](const ScalarField& a, const ScalarField& b) {
    double t = 0;
    for (std::size_t i = 0; i < a.size(); ++i) t += a[i] * b[i];
    return t;
  };
  auto total = [](const ScalarField& a) {
    double t = 0;
    for (std::size_t i = 0; i < a.size(); ++i) t += a[i];
    return t;
  };
  const double tp0 = dot(sp, to_field(label)) / total(sp);
  const double ts0 = dot(sl, to_field(pred)) / total(sl);
  const double limit = 2 * tp0 * ts0 / (tp0 + ts0);

  double prev_gap = 1.0;
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    p.epsilon = eps;
    const double gap = std::abs(soft_cl_dice(to_field(pred), to_field(label), p) - limit);
    CHECK(gap <= prev_gap + 1e-15);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-6);
}

TEST_CASE("combined_loss composition") {
  const Shape s = Shape::of2d(8, 8);
  const BinaryMask tube = line_mask(s, 4, 1, 7);
  LossParams p;
  p.alpha = 0.0;
  p.k = 2;

  SUBCASE("alpha = 0 reduces exactly to 1 - soft_dice") {
    Rng rng(5);
    const ScalarField f = random_field(rng, s);
    CHECK(combined_loss(f, to_field(tube), p) ==
          1.0 - soft_dice(f, to_field(tube), p.epsilon));
  }
  SUBCASE("perfect prediction is ~0") {
    p.alpha = 0.5;
    CHECK(combined_loss(to_field(tube), to_field(tube), p) ==
          doctest::Approx(0.0).epsilon(1e-6));
  }
  SUBCASE("pinned 4x4 gap case at alpha = 0.5") {
    p.alpha = 0.5;
    const Shape s4 = Shape::of2d(4, 4);
    const double v = combined_loss(to_field(line_mask(s4, 1, 0, 4, {2})),
                                   to_field(line_mask(s4, 1, 0, 4)), p);
    CHECK(v == doctest::Approx(0.14285711224490522).epsilon(1e-15));  // frozen
  }
  SUBCASE("alpha outside [0, 0.5] is rejected") {
    p.alpha = 0.6;
    CHECK_THROWS_AS(combined_loss(to_field(tube), to_field(tube), p),
                    std::invalid_argument);
    p.alpha = -0.1;
    CHECK_THROWS_AS(combined_loss(to_field(tube), to_field(tube), p),
                    std::invalid_argument);
  }
}

TEST_CASE("betti and euler errors") {
  const BinaryMask ring = from_rows({"####", "#..#", "#..#", "####"});
  const BinaryMask disk = from_rows({"####", "####", "####", "####"});
  CHECK(betti_errors(ring, ring) == std::array<std::int64_t, 3>{0, 0, 0});
  CHECK(euler_error(ring, ring) == 0);
  const auto be = betti_errors(disk, ring);
  CHECK(be[0] == 0);
  CHECK(be[1] == 1);
  CHECK(euler_error(disk, ring) == 1);
}

TEST_CASE("betti errors agree with oracle differences on random pairs") {
  Rng rng(63);
  for (int t = 0; t < 15; ++t) {
    const BinaryMask a = random_mask(rng, Shape::of2d(7, 7), 0.45);
    const BinaryMask b = random_mask(rng, Shape::of2d(7, 7), 0.45);
    const BettiTriple oa = betti_oracle(a), ob = betti_oracle(b);
    const auto be = betti_errors(a, b);
    CHECK(be[0] == std::abs(oa.b0 - ob.b0));
    CHECK(be[1] == std::abs(oa.b1 - ob.b1));
    CHECK(be[2] == std::abs(oa.b2 - ob.b2));
  }
}

TEST_CASE("Lemma-1 biconditional: clDice = 1 iff no ghosts and no misses") {
  const Shape s = Shape::of2d(12, 20);
  std::vector<std::pair<BinaryMask, BinaryMask>> pairs;
  // identical and nested tubes (no ghosts, no misses)
  for (int len : {6, 9, 14}) {
    const BinaryMask l = line_mask(s, 5, 2, 2 + len);
    pairs.emplace_back(l, l);
    pairs.emplace_back(dilate_mask(l, Connectivity::c8), l);
  }
  // gaps (misses)
  for (int hole : {4, 6, 8}) {
    pairs.emplace_back(line_mask(s, 5, 2, 16, {hole}), line_mask(s, 5, 2, 16));
  }
  // stray blob (ghost)
  for (int col : {2, 10, 17}) {
    std::vector<std::uint8_t> b = line_mask(s, 5, 2, 16).bits();
    b[s.flat(9, col)] = 1;
    pairs.emplace_back(BinaryMask(s, b), line_mask(s, 5, 2, 16));
  }
  // disjoint lines (both)
  pairs.emplace_back(line_mask(s, 2, 2, 10), line_mask(s, 8, 2, 10));
  // empty vs empty (vacuously consistent)
  pairs.emplace_back(BinaryMask::zeros(s), BinaryMask::zeros(s));

  for (const auto& [pred, label] : pairs) {
    const BinaryMask sp = thin_skeletonize(pred);
    const BinaryMask sl = thin_skeletonize(label);
    const bool clean =
        detect_ghosts(sp, label).empty() && detect_misses(sl, pred).empty();
    const bool unit = cl_dice(pred, label) == doctest::Approx(1.0).epsilon(1e-12);
    CHECK(clean == unit);
  }
}

TEST_CASE("patch_evaluate") {
  const EqualDicePair fx = equal_dice_pair();

  SUBCASE("single whole-image patch equals global metrics") {
    const MetricReport r = patch_evaluate(fx.gapped, fx.label, 9, 1, 7);
    CHECK(r.dice == doctest::Approx(dice_hard(fx.gapped, fx.label)));
    CHECK(r.cldice == doctest::Approx(cl_dice(fx.gapped, fx.label)));
    CHECK(r.patch_count == 1);
  }

  SUBCASE("whole-volume patch reproduces global topology errors") {
    // patch as large as the smaller axis of a square mask
    const Shape s = Shape::of2d(12, 12);
    const BinaryMask l = line_mask(s, 5, 1, 11);
    const BinaryMask p = line_mask(s, 5, 1, 11, {6});
    const MetricReport r = patch_evaluate(p, l, 12, 1, 3);
    CHECK(r.betti0_err == doctest::Approx(betti_errors(p, l)[0]));
    CHECK(r.euler_err == doctest::Approx(euler_error(p, l)));
  }

  SUBCASE("deterministic for a fixed seed, independent of jobs") {
    PatchEvalOptions opt;
    opt.with_smd = true;
    opt.smd_points = 24;
    const MetricReport a = patch_evaluate(fx.gapped, fx.label, 6, 5, 99, opt);
    const MetricReport b = patch_evaluate(fx.gapped, fx.label, 6, 5, 99, opt);
    PatchEvalOptions par = opt;
    par.jobs = 3;
    const MetricReport c = patch_evaluate(fx.gapped, fx.label, 6, 5, 99, par);
    CHECK(a.betti0_err == b.betti0_err);
    CHECK(a.euler_err == b.euler_err);
    CHECK(*a.smd == *b.smd);
    CHECK(a.betti0_err == c.betti0_err);
    CHECK(*a.smd == *c.smd);
  }

  SUBCASE("identical masks give perfect scores") {
    const MetricReport r = patch_evaluate(fx.label, fx.label, 6, 4, 5);
    CHECK(r.dice == 1.0);
    CHECK(r.accuracy == 1.0);
    CHECK(r.cldice == 1.0);
    CHECK(r.betti0_err == 0.0);
    CHECK(r.betti1_err == 0.0);
    CHECK(r.euler_err == 0.0);
  }

  SUBCASE("patch larger than the volume is an error") {
    CHECK_THROWS_AS(patch_evaluate(fx.label, fx.label, 32, 1, 1),
                    std::invalid_argument);
  }

  SUBCASE("background clDice is reported on request") {
    PatchEvalOptions opt;
    opt.with_background = true;
    const MetricReport r = patch_evaluate(fx.label, fx.label, 6, 2, 5, opt);
    REQUIRE(r.cldice_background.has_value());
    CHECK(*r.cldice_background == doctest::Approx(1.0));
  }
}

TEST_CASE("patch_evaluate on a 3D volume") {
  Rng rng(64);
  const Shape s = Shape::of3d(10, 10, 10);
  const BinaryMask label = random_tube_mask(rng, s, 1);
  PatchEvalOptions opt;
  opt.with_smd = true;
  opt.smd_points = 12;
  const MetricReport self = patch_evaluate(label, label, 6, 3, 2, opt);
  CHECK(self.dice == 1.0);
  CHECK(self.cldice == 1.0);
  CHECK(self.betti0_err == 0.0);
  CHECK(self.betti2_err == 0.0);
  REQUIRE(self.smd.has_value());
  CHECK(*self.smd == 0.0);

  const BinaryMask other = random_tube_mask(rng, s, 1);
  const MetricReport r = patch_evaluate(other, label, 6, 3, 2, opt);
  CHECK(r.dice <= 1.0);
  CHECK(r.patch_count == 3);
}

TEST_CASE("auto_loss_params picks the saturation radius") {
  const Shape s = Shape::of2d(13, 13);
  std::vector<std::uint8_t> b(s.size(), 0);
  for (int i = 0; i < 13; ++i)
    for (int j = 0; j < 13; ++j)
      if (std::abs(i - 6) + std::abs(j - 6) <= 3) b[s.flat(i, j)] = 1;
  const LossParams p = auto_loss_params(BinaryMask(s, b), 0.3);
  CHECK(p.k == 3);
  CHECK(p.alpha == 0.3);
  // width-1 structures still get the k >= 1 floor
  CHECK(auto_loss_params(line_mask(Shape::of2d(5, 5), 2, 0, 5), 0.0).k == 1);
}
