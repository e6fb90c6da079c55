#include <doctest.h>

#include "cldice/autodiff.hpp"
#include "cldice/morphology.hpp"
#include "cldice/trainer.hpp"
#include "test_util.hpp"

using namespace cldice;
using namespace testutil;

namespace {

ScalarField tube_label_10() {
  const Shape s = Shape::of2d(10, 10);
  std::vector<double> d(s.size(), 0.0);
  for (int j = 1; j < 9; ++j) d[s.flat(4, j)] = 1.0;
  for (int j = 3; j < 7; ++j) d[s.flat(5, j)] = 1.0;
  return ScalarField(s, std::move(d));
}

}  // namespace

TEST_CASE("forward op values") {
  Tape t;
  SUBCASE("relu") {
    const int x = t.leaf(Shape::of2d(1, 3), {-1.0, 0.0, 2.0});
    const int r = t.relu(x);
    CHECK(t.values(r) == std::vector<double>{0.0, 0.0, 2.0});
  }
  SUBCASE("clipped max pool keeps boundary windows") {
    const int x = t.leaf(Shape::of2d(1, 3), {1.0, 5.0, 2.0});
    const int p = t.max_pool_1d(x, 1);
    CHECK(t.values(p) == std::vector<double>{5.0, 5.0, 5.0});
  }
  SUBCASE("min pool is the negated max pool") {
    const int x = t.leaf(Shape::of2d(1, 4), {0.3, 0.1, 0.7, 0.2});
    const int p = t.min_pool_1d(x, 1);
    CHECK(t.values(p) == std::vector<double>{0.1, 0.1, 0.1, 0.2});
  }
  SUBCASE("conv2d with a delta kernel is the identity") {
    Rng rng(1);
    const ScalarField f = random_field(rng, Shape::of2d(5, 7));
    const int x = t.leaf(f);
    const int k = t.leaf(Shape::of2d(3, 3), {0, 0, 0, 0, 1, 0, 0, 0, 0});
    const int y = t.conv2d(x, k);
    CHECK(t.values(y) == f.data());
  }
  SUBCASE("sum and scalar broadcast") {
    const int x = t.leaf(Shape::of2d(2, 2), {0.1, 0.2, 0.3, 0.4});
    CHECK(t.value(t.sum(x)) == doctest::Approx(1.0));
    const int shifted = t.add(x, t.scalar_const(1.0));
    CHECK(t.values(shifted)[3] == doctest::Approx(1.4));
    const int flipped = t.sub(t.scalar_const(1.0), x);
    CHECK(t.values(flipped)[0] == doctest::Approx(0.9));
  }
  SUBCASE("shape mismatch is an error") {
    const int a = t.leaf(Shape::of2d(2, 2), {0, 0, 0, 0});
    const int b = t.leaf(Shape::of2d(1, 3), {0, 0, 0});
    CHECK_THROWS_AS(t.add(a, b), std::invalid_argument);
  }
}

TEST_CASE("backward basics") {
  SUBCASE("d sum(x) / dx is all ones") {
    Tape t;
    const int x = t.leaf(Shape::of2d(2, 3), {0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
    const int s = t.sum(x);
    t.backward(s);
    CHECK(t.adjoint(x) == std::vector<double>(6, 1.0));
  }
  SUBCASE("d sum(relu(x)) routes only through active inputs") {
    Tape t;
    const int x = t.leaf(Shape::of2d(1, 2), {-1.0, 2.0});
    t.forward();
    const int s = t.sum(t.relu(x));
    t.backward(s);
    CHECK(t.adjoint(x) == std::vector<double>{0.0, 1.0});
  }
  SUBCASE("pooling sends the whole adjoint to the first argmax") {
    Tape t;
    const int x = t.leaf(Shape::of2d(1, 3), {0.5, 0.5, 0.5});  // all tied
    const int p = t.max_pool_1d(x, 1);
    const int s = t.sum(p);
    t.backward(s);
    // windows: {0,1}, {0,1,2}, {1,2}; first index wins each time
    CHECK(t.adjoint(x) == std::vector<double>{2.0, 1.0, 0.0});
  }
  SUBCASE("non-scalar loss is rejected") {
    Tape t;
    const int x = t.leaf(Shape::of2d(1, 2), {0.1, 0.2});
    CHECK_THROWS_AS(t.backward(x), std::invalid_argument);
  }
}

TEST_CASE("backward is deterministic and linear") {
  Rng rng(17);
  const ScalarField f = random_field(rng, Shape::of2d(6, 6));
  auto run = [&](double a, double b) {
    Tape t;
    const int x = t.leaf(f);
    const int fa = t.mul(t.scalar_const(a), t.sum(t.mul(x, x)));
    const int fb = t.mul(t.scalar_const(b), t.sum(t.relu(x)));
    t.backward(t.add(fa, fb));
    return t.adjoint(x);
  };
  const auto g10 = run(1, 0), g01 = run(0, 1), g23 = run(2, 3);
  for (std::size_t i = 0; i < g10.size(); ++i)
    CHECK(g23[i] == doctest::Approx(2 * g10[i] + 3 * g01[i]).epsilon(1e-12));
  CHECK(run(2, 3) == g23);  // bit-identical on identical tapes
}

TEST_CASE("tape soft skeleton matches the eager implementation") {
  Rng rng(23);
  for (const Shape& s : {Shape::of2d(9, 9), Shape::of3d(5, 5, 5)}) {
    const ScalarField f = random_field(rng, s);
    for (int k : {0, 1, 3}) {
      Tape t;
      const int x = t.leaf(f);
      const int skel = build_soft_skeleton(t, x, k);
      const ScalarField eager = soft_skeleton(f, k);
      const auto& taped = t.values(skel);
      for (std::size_t i = 0; i < eager.size(); ++i)
        CHECK(taped[i] == doctest::Approx(eager[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("tape losses match the eager metrics") {
  Rng rng(29);
  const Shape s = Shape::of2d(8, 8);
  const ScalarField p = random_field(rng, s);
  const ScalarField l = random_field(rng, s);
  LossParams params;
  params.alpha = 0.4;
  params.k = 2;

  Tape t;
  const int pn = t.leaf(p), ln = t.leaf(l);
  CHECK(t.value(build_soft_dice(t, pn, ln, params.epsilon)) ==
        doctest::Approx(soft_dice(p, l, params.epsilon)).epsilon(1e-12));
  CHECK(t.value(build_soft_cl_dice(t, pn, ln, params)) ==
        doctest::Approx(soft_cl_dice(p, l, params)).epsilon(1e-12));
  CHECK(t.value(build_combined_loss(t, pn, ln, params)) ==
        doctest::Approx(combined_loss(p, l, params)).epsilon(1e-12));
}

TEST_CASE("grad_check on smooth losses is near machine precision") {
  Rng rng(31);
  const ScalarField f = random_field(rng, Shape::of2d(6, 6));
  const GradCheckReport rep = grad_check(
      [](Tape& t, int x) { return t.sum(t.mul(x, x)); }, f, 1e-5, 1e-8);
  CHECK(rep.excluded_ties == 0);
  CHECK(rep.max_rel_err < 1e-8);
}

TEST_CASE("grad_check validates the soft dice loss") {
  Rng rng(37);
  const ScalarField f = random_field(rng, Shape::of2d(8, 8));
  const ScalarField l = tube_label_10();
  const ScalarField label =
      crop(l, VoxelIndex{0, 0}, Shape::of2d(8, 8));
  const GradCheckReport rep = grad_check(
      [&](Tape& t, int x) {
        return t.sub(t.scalar_const(1.0), build_soft_dice(t, x, t.leaf(label), 1e-6));
      },
      f, 1e-5, 1e-4);
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("grad_check validates the full combined loss") {
  Rng rng(41);
  const ScalarField f = random_field(rng, Shape::of2d(10, 10));
  const ScalarField label = tube_label_10();
  for (double alpha : {0.0, 0.25, 0.5}) {
    for (int k : {3, 5}) {
      LossParams params;
      params.alpha = alpha;
      params.k = k;
      const GradCheckReport rep = grad_check(
          [&](Tape& t, int x) {
            return build_combined_loss(t, x, t.leaf(label), params);
          },
          f, 1e-5, 1e-4);
      CAPTURE(alpha);
      CAPTURE(k);
      CHECK(rep.max_rel_err < 1e-4);
      CHECK(rep.checked > 0);
    }
  }
}

TEST_CASE("per-op finite-difference checks") {
  Rng rng(47);
  SUBCASE("sigmoid after conv, gradient w.r.t. the image") {
    const ScalarField img = random_field(rng, Shape::of2d(7, 7));
    std::vector<double> kd(9);
    for (auto& v : kd) v = rng.next_unit();
    const GradCheckReport rep = grad_check(
        [&](Tape& t, int x) {
          const int ker = t.constant(Shape::of2d(3, 3), kd);
          return t.sum(t.sigmoid(t.conv2d(x, ker)));
        },
        img, 1e-5, 1e-6);
    CHECK(rep.max_rel_err < 1e-6);
  }
  SUBCASE("gradient w.r.t. the kernel through the same graph") {
    const ScalarField img = random_field(rng, Shape::of2d(7, 7));
    std::vector<double> kd(9);
    for (auto& v : kd) v = rng.next_unit();
    const ScalarField kernel(Shape::of2d(3, 3), kd);
    const GradCheckReport rep = grad_check(
        [&](Tape& t, int ker) {
          return t.sum(t.sigmoid(t.conv2d(t.leaf(img), ker)));
        },
        kernel, 1e-5, 1e-6);
    CHECK(rep.max_rel_err < 1e-6);
  }
  SUBCASE("division and negation") {
    const ScalarField f = random_field(rng, Shape::of2d(5, 5));
    const GradCheckReport rep = grad_check(
        [](Tape& t, int x) {
          const int denom = t.add(x, t.scalar_const(2.0));
          return t.sum(t.div(t.neg(x), denom));
        },
        f, 1e-5, 1e-6);
    CHECK(rep.max_rel_err < 1e-6);
  }
}

TEST_CASE("route signature catches pooling ties") {
  // two equal values in one window: probing either coordinate flips the
  // argmax, so both coordinates must be excluded
  const ScalarField f(Shape::of2d(1, 3), {0.5, 0.5, 0.1});
  const GradCheckReport rep = grad_check(
      [](Tape& t, int x) { return t.sum(t.max_pool_1d(x, 1)); }, f, 1e-5, 1e-4);
  CHECK(rep.excluded_ties >= 2);
}

TEST_CASE("set_leaf replays the graph on new values") {
  Tape t;
  const int x = t.leaf(Shape::of2d(1, 2), {0.1, 0.2});
  const int loss = t.sum(t.mul(x, x));
  CHECK(t.value(loss) == doctest::Approx(0.05));
  t.set_leaf(x, {0.3, 0.4});
  t.forward();
  CHECK(t.value(loss) == doctest::Approx(0.25));
  CHECK_THROWS_AS(t.set_leaf(loss, {1.0}), std::invalid_argument);
}
