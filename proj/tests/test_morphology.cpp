#include <doctest.h>

#include "cldice/morphology.hpp"
#include "cldice/topology.hpp"
#include "cldice/trainer.hpp"
#include "test_util.hpp"

using namespace cldice;
using namespace testutil;

namespace {

ScalarField block_in_5x5() {
  return to_field(from_rows({".....", ".###.", ".###.", ".###.", "....."}));
}


}  // namespace

TEST_CASE("soft_erode hand traces") {
  CHECK(soft_erode(ScalarField::zeros(Shape::of2d(5, 5))) ==
        ScalarField::zeros(Shape::of2d(5, 5)));

  const ScalarField eroded = soft_erode(block_in_5x5());
  CHECK(eroded == to_field(from_rows({".....", ".....", "..#..", ".....", "....."})));

  const ScalarField single = to_field(from_rows({".....", ".....", "..#..",
                                                 ".....", "....."}));
  CHECK(soft_erode(single) == ScalarField::zeros(Shape::of2d(5, 5)));
}

TEST_CASE("soft_erode never erodes a full frame (clipped windows)") {
  const ScalarField ones(Shape::of2d(4, 6), std::vector<double>(24, 1.0));
  CHECK(soft_erode(ones) == ones);
}

TEST_CASE("soft_dilate hand traces") {
  const ScalarField ones(Shape::of2d(3, 3), std::vector<double>(9, 1.0));
  CHECK(soft_dilate(ones) == ones);
  CHECK(soft_dilate(ScalarField::zeros(Shape::of2d(5, 5))) ==
        ScalarField::zeros(Shape::of2d(5, 5)));

  const ScalarField single = to_field(from_rows({".....", ".....", "..#..",
                                                 ".....", "....."}));
  CHECK(soft_dilate(single) == block_in_5x5());
}

TEST_CASE("soft_open hand traces") {
  CHECK(soft_open(block_in_5x5()) == block_in_5x5());

  // width-1 line dies under opening: the cross erosion hits a zero
  const ScalarField line = to_field(from_rows({".....", ".....", "#####",
                                               ".....", "....."}));
  CHECK(soft_open(line) == ScalarField::zeros(Shape::of2d(5, 5)));

  const ScalarField ones(Shape::of2d(5, 5), std::vector<double>(25, 1.0));
  CHECK(soft_open(ones) == ones);
}

TEST_CASE("soft_skeleton of a width-1 line is the line, any k") {
  const ScalarField line = to_field(from_rows({".....", ".....", "#####",
                                               ".....", "....."}));
  for (int k : {0, 1, 3, 7}) CHECK(soft_skeleton(line, k) == line);
}

TEST_CASE("soft_skeleton of a 3x3 block collapses to the center for k >= 1") {
  const ScalarField center = to_field(from_rows({".....", ".....", "..#..",
                                                 ".....", "....."}));
  CHECK(soft_skeleton(block_in_5x5(), 0) == ScalarField::zeros(Shape::of2d(5, 5)));
  for (int k : {1, 2, 5}) CHECK(soft_skeleton(block_in_5x5(), k) == center);
  CHECK(soft_skeleton(ScalarField::zeros(Shape::of2d(5, 5)), 4) ==
        ScalarField::zeros(Shape::of2d(5, 5)));
}

TEST_CASE("the two skeleton update forms agree on [0,1] values") {
  // S + (1-S)*delta vs S + relu(delta - S*delta)
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const double s = rng.next_unit(), d = rng.next_unit();
    const double main_form = s + (1.0 - s) * d;
    const double appendix_form = s + std::max(d - s * d, 0.0);
    CHECK(main_form == doctest::Approx(appendix_form).epsilon(1e-15));
  }
}

TEST_CASE("erosion/dilation duality with the cross kernel") {
  Rng rng(5);
  for (const Shape& s : {Shape::of2d(7, 9), Shape::of3d(5, 6, 4)}) {
    for (int trial = 0; trial < 10; ++trial) {
      const ScalarField f = random_field(rng, s);
      std::vector<double> inv(f.size());
      for (std::size_t i = 0; i < f.size(); ++i) inv[i] = 1.0 - f[i];
      const ScalarField dil = soft_dilate_cross(ScalarField(s, inv));
      const ScalarField ero = soft_erode(f);
      for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(ero[i] == doctest::Approx(1.0 - dil[i]).epsilon(1e-15));
    }
  }
}

TEST_CASE("the skeleton residue is not monotone: grown input can lose skeleton") {
  // the residue ReLU(I - open(I)) vanishes on an all-ones frame while a
  // width-1 line inside it is its own skeleton, so f <= g does not order
  // the skeletons
  const Shape s = Shape::of2d(5, 5);
  const ScalarField line = to_field(from_rows({".....", ".....", "#####",
                                               ".....", "....."}));
  const ScalarField ones(s, std::vector<double>(25, 1.0));
  const ScalarField skel_line = soft_skeleton(line, 2);
  const ScalarField skel_ones = soft_skeleton(ones, 2);
  CHECK(skel_line.at(2, 2) == 1.0);
  CHECK(skel_ones == ScalarField::zeros(s));
}

TEST_CASE("monotonicity of the soft operators") {
  Rng rng(17);
  const Shape s = Shape::of2d(8, 8);
  for (int trial = 0; trial < 10; ++trial) {
    const ScalarField f = random_field(rng, s);
    std::vector<double> gd(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
      gd[i] = f[i] + (1.0 - f[i]) * rng.next_unit();  // g >= f pointwise
    const ScalarField g(s, gd);

    auto leq = [](const ScalarField& a, const ScalarField& b) {
      for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] > b[i] + 1e-15) return false;
      return true;
    };
    CHECK(leq(soft_erode(f), soft_erode(g)));
    CHECK(leq(soft_dilate(f), soft_dilate(g)));
    CHECK(leq(soft_open(f), soft_open(g)));
    // erosion shrinks, dilation grows
    CHECK(leq(soft_erode(f), f));
    CHECK(leq(f, soft_dilate(f)));
  }
}

TEST_CASE("binary closure: binary input gives exactly binary skeleton") {
  Rng rng(29);
  for (const Shape& s : {Shape::of2d(10, 10), Shape::of3d(6, 6, 6)}) {
    for (int trial = 0; trial < 8; ++trial) {
      const BinaryMask m = random_mask(rng, s, 0.45);
      const ScalarField skel = soft_skeleton(to_field(m), 3);
      for (std::size_t i = 0; i < skel.size(); ++i)
        CHECK((skel[i] == 0.0 || skel[i] == 1.0));
      // support subset of the input support
      CHECK(is_subset(threshold(skel, 0.5), m));
    }
  }
}

TEST_CASE("soft_skeleton saturates at the inscribed radius") {
  for (int r : {1, 2, 3}) {
    // city-block ball of radius r at the center of a comfortable frame
    const int n = 4 * r + 5;
    const Shape s = Shape::of2d(n, n);
    std::vector<std::uint8_t> bits(s.size(), 0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (std::abs(i - n / 2) + std::abs(j - n / 2) <= r) bits[s.flat(i, j)] = 1;
    const BinaryMask ball(s, bits);
    CHECK(max_inscribed_radius(ball) == r);
    const ScalarField f = to_field(ball);
    const ScalarField sat = soft_skeleton(f, r);
    CHECK(soft_skeleton(f, r + 1) == sat);
    CHECK(soft_skeleton(f, r + 5) == sat);
  }
}

TEST_CASE("thin_skeletonize leaves width-1 curves unchanged") {
  // staircase without redundant elbows: no interior point is simple
  const BinaryMask curve = from_rows({
      ".......",
      ".##....",
      "...#...",
      "....##.",
      ".......",
  });
  CHECK(thin_skeletonize(curve) == curve);
  const BinaryMask diag = from_rows({
      "#....",
      ".#...",
      "..#..",
      "...#.",
      "....#",
  });
  CHECK(thin_skeletonize(diag) == diag);
}

TEST_CASE("thin_skeletonize of a disk is a connected dot-like set") {
  const int n = 13;
  const Shape s = Shape::of2d(n, n);
  std::vector<std::uint8_t> bits(s.size(), 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if ((i - 6) * (i - 6) + (j - 6) * (j - 6) <= 25) bits[s.flat(i, j)] = 1;
  const BinaryMask disk(s, bits);
  const BinaryMask thin = thin_skeletonize(disk);
  CHECK(is_subset(thin, disk));
  CHECK(betti_numbers(thin) == BettiTriple{1, 0, 0});
  CHECK(thin.count() < disk.count() / 4);
}

TEST_CASE("thin_skeletonize of an annulus is a 1-wide closed loop") {
  const int n = 13;
  const Shape s = Shape::of2d(n, n);
  std::vector<std::uint8_t> bits(s.size(), 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int r2 = (i - 6) * (i - 6) + (j - 6) * (j - 6);
      if (r2 >= 6 && r2 <= 30) bits[s.flat(i, j)] = 1;
    }
  const BinaryMask ring(s, bits);
  const BinaryMask thin = thin_skeletonize(ring);
  CHECK(betti_numbers(ring) == BettiTriple{1, 1, 0});
  CHECK(betti_numbers(thin) == BettiTriple{1, 1, 0});
  CHECK(is_subset(thin, ring));
  // closed curve: every voxel has exactly two foreground neighbors
  const Connectivity conn = Connectivity::c8;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (!thin.at(i, j)) continue;
      int deg = 0;
      for (const auto& nb : neighbors(VoxelIndex{i, j}, conn, s))
        deg += thin.at(nb.c[0], nb.c[1]);
      CHECK(deg == 2);
    }
}

TEST_CASE("thin_skeletonize preserves Betti numbers on random masks") {
  Rng rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    const BinaryMask m2 = random_mask(rng, Shape::of2d(8, 8), 0.5);
    CHECK(betti_numbers(thin_skeletonize(m2)) == betti_numbers(m2));
    const BinaryMask m3 = random_mask(rng, Shape::of3d(5, 5, 5), 0.4);
    CHECK(betti_numbers(thin_skeletonize(m3)) == betti_numbers(m3));
  }
}

TEST_CASE("thin_skeletonize preserves Betti numbers on tube fixtures") {
  Rng rng(202);
  for (int trial = 0; trial < 10; ++trial) {
    const BinaryMask t2 = random_tube_mask(rng, Shape::of2d(16, 16), 2);
    CHECK(betti_numbers(thin_skeletonize(t2)) == betti_numbers(t2));
    const BinaryMask t3 = random_tube_mask(rng, Shape::of3d(9, 9, 9), 1);
    CHECK(betti_numbers(thin_skeletonize(t3)) == betti_numbers(t3));
  }
}

TEST_CASE("empty mask maps to empty skeleton in both skeletonizers") {
  const BinaryMask empty = BinaryMask::zeros(Shape::of2d(6, 6));
  CHECK(thin_skeletonize(empty) == empty);
  CHECK(soft_skeleton(to_field(empty), 4) == to_field(empty));
}

TEST_CASE("max_inscribed_radius conventions") {
  CHECK(max_inscribed_radius(from_rows({"#####"})) == 0);  // width-1
  CHECK(max_inscribed_radius(BinaryMask::zeros(Shape::of2d(4, 4))) == 0);
  // all-ones mask has no in-frame background to erode from
  CHECK(max_inscribed_radius(from_rows({"###", "###", "###"})) == 0);
  CHECK(max_inscribed_radius(from_rows({".....", ".###.", ".###.", ".###.",
                                        "....."})) == 1);
}
