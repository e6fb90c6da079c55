#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cldice {

// Extent of a dense 2D/3D grid. nd == 0 is reserved for rank-0 (scalar)
// autodiff values; grid types require nd of 2 or 3. Unused axes stay 1 so
// flat indexing is uniform: flat = (i*d[1] + j)*d[2] + k.
struct Shape {
  int nd = 0;
  std::array<int, 3> d{1, 1, 1};

  static Shape of2d(int d0, int d1) { return Shape{2, {d0, d1, 1}}; }
  static Shape of3d(int d0, int d1, int d2) { return Shape{3, {d0, d1, d2}}; }

  std::size_t size() const {
    return static_cast<std::size_t>(d[0]) * d[1] * d[2];
  }
  std::size_t flat(int i, int j, int k = 0) const {
    return (static_cast<std::size_t>(i) * d[1] + j) * d[2] + k;
  }
  bool operator==(const Shape&) const = default;
};

struct VoxelIndex {
  std::array<int, 3> c{0, 0, 0};

  VoxelIndex() = default;
  VoxelIndex(int i, int j, int k = 0) : c{i, j, k} {}
  bool operator==(const VoxelIndex&) const = default;
  auto operator<=>(const VoxelIndex&) const = default;
};

inline bool in_bounds(const VoxelIndex& v, const Shape& s) {
  for (int a = 0; a < 3; ++a)
    if (v.c[a] < 0 || v.c[a] >= s.d[a]) return false;
  return true;
}

enum class Connectivity : int {
  c4 = 4,
  c8 = 8,
  c6 = 6,
  c18 = 18,
  c26 = 26,
};

inline bool connectivity_valid(Connectivity c, int nd) {
  if (nd == 2) return c == Connectivity::c4 || c == Connectivity::c8;
  if (nd == 3)
    return c == Connectivity::c6 || c == Connectivity::c18 ||
           c == Connectivity::c26;
  return false;
}

inline Connectivity foreground_connectivity(int nd) {
  return nd == 2 ? Connectivity::c8 : Connectivity::c26;
}
inline Connectivity background_connectivity(int nd) {
  return nd == 2 ? Connectivity::c4 : Connectivity::c6;
}

// Complementary adjacency pair used for topology tests; the dual pair swaps
// the roles and is what background analysis uses.
struct AdjacencyPair {
  Connectivity fg;
  Connectivity bg;
};

inline AdjacencyPair default_pair(int nd) {
  return {foreground_connectivity(nd), background_connectivity(nd)};
}
inline AdjacencyPair dual_pair(int nd) {
  return {background_connectivity(nd), foreground_connectivity(nd)};
}

// Neighbor offsets for a connectivity, lexicographically ordered.
const std::vector<std::array<int, 3>>& connectivity_offsets(Connectivity c);

// Dense real-valued grid with every value in [0, 1].
class ScalarField {
 public:
  ScalarField(Shape shape, std::vector<double> data);
  static ScalarField zeros(Shape shape);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  double at(int i, int j, int k = 0) const { return data_[shape_.flat(i, j, k)]; }
  double operator[](std::size_t flat) const { return data_[flat]; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const ScalarField&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Dense {0,1} grid.
class BinaryMask {
 public:
  BinaryMask(Shape shape, std::vector<std::uint8_t> bits);
  static BinaryMask zeros(Shape shape);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return bits_.size(); }
  bool at(int i, int j, int k = 0) const { return bits_[shape_.flat(i, j, k)] != 0; }
  std::uint8_t operator[](std::size_t flat) const { return bits_[flat]; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  std::size_t count() const;
  bool empty_mask() const { return count() == 0; }

  bool operator==(const BinaryMask&) const = default;

 private:
  Shape shape_;
  std::vector<std::uint8_t> bits_;
};

// Bit is set iff field value >= t, so thresholding a hard {0,1} field at 0.5
// is the identity.
BinaryMask threshold(const ScalarField& field, double t);

// In-bounds neighbors of idx under conn, lexicographic offset order.
std::vector<VoxelIndex> neighbors(const VoxelIndex& idx, Connectivity conn,
                                  const Shape& dims);

// Set algebra helpers shared by the topology and metrics code.
BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_andnot(const BinaryMask& a, const BinaryMask& b);  // a & !b
BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b);
BinaryMask complement(const BinaryMask& m);
bool is_subset(const BinaryMask& inner, const BinaryMask& outer);

// Pad with a margin of constant fill on every side.
BinaryMask pad(const BinaryMask& m, int margin, bool fill);

// Crop a window starting at origin with the given shape (must fit).
BinaryMask crop(const BinaryMask& m, const VoxelIndex& origin, const Shape& window);
ScalarField crop(const ScalarField& f, const VoxelIndex& origin, const Shape& window);

ScalarField to_field(const BinaryMask& m);

inline void require_same_shape(const Shape& a, const Shape& b) {
  if (!(a == b)) throw std::invalid_argument("shape mismatch");
}

}  // namespace cldice
