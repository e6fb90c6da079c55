#include "cldice/grid.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace cldice {

namespace {

void check_grid_shape(const Shape& s) {
  if (s.nd != 2 && s.nd != 3)
    throw std::invalid_argument("grid must be 2D or 3D");
  for (int a = 0; a < s.nd; ++a)
    if (s.d[a] < 1) throw std::invalid_argument("grid extent must be >= 1");
  for (int a = s.nd; a < 3; ++a)
    if (s.d[a] != 1) throw std::invalid_argument("unused axes must have extent 1");
}

std::vector<std::array<int, 3>> build_offsets(Connectivity c) {
  std::vector<std::array<int, 3>> out;
  const bool is2d = c == Connectivity::c4 || c == Connectivity::c8;
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj)
      for (int dk = -1; dk <= 1; ++dk) {
        if (di == 0 && dj == 0 && dk == 0) continue;
        if (is2d && dk != 0) continue;
        const int l1 = std::abs(di) + std::abs(dj) + std::abs(dk);
        switch (c) {
          case Connectivity::c4:
          case Connectivity::c6:
            if (l1 != 1) continue;
            break;
          case Connectivity::c18:
            if (l1 > 2) continue;
            break;
          case Connectivity::c8:
          case Connectivity::c26:
            break;
        }
        out.push_back({di, dj, dk});
      }
  return out;  // triple loop emits lexicographic order already
}

}  // namespace

const std::vector<std::array<int, 3>>& connectivity_offsets(Connectivity c) {
  static const std::map<Connectivity, std::vector<std::array<int, 3>>> table = {
      {Connectivity::c4, build_offsets(Connectivity::c4)},
      {Connectivity::c8, build_offsets(Connectivity::c8)},
      {Connectivity::c6, build_offsets(Connectivity::c6)},
      {Connectivity::c18, build_offsets(Connectivity::c18)},
      {Connectivity::c26, build_offsets(Connectivity::c26)},
  };
  return table.at(c);
}

ScalarField::ScalarField(Shape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  check_grid_shape(shape_);
  if (shape_.size() != data_.size())
    throw std::invalid_argument("data length does not match dims product");
  for (double v : data_)
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("scalar field value outside [0, 1]");
}

ScalarField ScalarField::zeros(Shape shape) {
  check_grid_shape(shape);
  return ScalarField(shape, std::vector<double>(shape.size(), 0.0));
}

BinaryMask::BinaryMask(Shape shape, std::vector<std::uint8_t> bits)
    : shape_(shape), bits_(std::move(bits)) {
  check_grid_shape(shape_);
  if (shape_.size() != bits_.size())
    throw std::invalid_argument("bit count does not match dims product");
  for (std::uint8_t b : bits_)
    if (b > 1) throw std::invalid_argument("mask bits must be 0 or 1");
}

BinaryMask BinaryMask::zeros(Shape shape) {
  check_grid_shape(shape);
  return BinaryMask(shape, std::vector<std::uint8_t>(shape.size(), 0));
}

std::size_t BinaryMask::count() const {
  return std::accumulate(bits_.begin(), bits_.end(), std::size_t{0});
}

BinaryMask threshold(const ScalarField& field, double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("threshold must be in [0, 1]");
  std::vector<std::uint8_t> bits(field.size());
  for (std::size_t i = 0; i < field.size(); ++i)
    bits[i] = field[i] >= t ? 1 : 0;
  return BinaryMask(field.shape(), std::move(bits));
}

std::vector<VoxelIndex> neighbors(const VoxelIndex& idx, Connectivity conn,
                                  const Shape& dims) {
  if (!connectivity_valid(conn, dims.nd))
    throw std::invalid_argument("connectivity invalid for dimensionality");
  if (!in_bounds(idx, dims)) throw std::out_of_range("voxel index out of bounds");
  std::vector<VoxelIndex> out;
  for (const auto& o : connectivity_offsets(conn)) {
    VoxelIndex n{idx.c[0] + o[0], idx.c[1] + o[1], idx.c[2] + o[2]};
    if (in_bounds(n, dims)) out.push_back(n);
  }
  return out;
}

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a.shape(), b.shape());
  std::vector<std::uint8_t> bits(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) bits[i] = a[i] & b[i];
  return BinaryMask(a.shape(), std::move(bits));
}

BinaryMask mask_andnot(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a.shape(), b.shape());
  std::vector<std::uint8_t> bits(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    bits[i] = static_cast<std::uint8_t>(a[i] & (1 - b[i]));
  return BinaryMask(a.shape(), std::move(bits));
}

BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a.shape(), b.shape());
  std::vector<std::uint8_t> bits(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) bits[i] = a[i] | b[i];
  return BinaryMask(a.shape(), std::move(bits));
}

BinaryMask complement(const BinaryMask& m) {
  std::vector<std::uint8_t> bits(m.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    bits[i] = static_cast<std::uint8_t>(1 - m[i]);
  return BinaryMask(m.shape(), std::move(bits));
}

bool is_subset(const BinaryMask& inner, const BinaryMask& outer) {
  require_same_shape(inner.shape(), outer.shape());
  for (std::size_t i = 0; i < inner.size(); ++i)
    if (inner[i] && !outer[i]) return false;
  return true;
}

BinaryMask pad(const BinaryMask& m, int margin, bool fill) {
  if (margin < 0) throw std::invalid_argument("margin must be >= 0");
  const Shape& s = m.shape();
  Shape p = s;
  for (int a = 0; a < s.nd; ++a) p.d[a] = s.d[a] + 2 * margin;
  std::vector<std::uint8_t> bits(p.size(), fill ? 1 : 0);
  for (int i = 0; i < s.d[0]; ++i)
    for (int j = 0; j < s.d[1]; ++j)
      for (int k = 0; k < s.d[2]; ++k)
        bits[p.flat(i + margin, j + margin, s.nd == 3 ? k + margin : k)] =
            m[s.flat(i, j, k)];
  return BinaryMask(p, std::move(bits));
}

namespace {
void check_window(const Shape& s, const VoxelIndex& origin, const Shape& w) {
  if (w.nd != s.nd) throw std::invalid_argument("window dimensionality mismatch");
  for (int a = 0; a < s.nd; ++a)
    if (origin.c[a] < 0 || origin.c[a] + w.d[a] > s.d[a])
      throw std::invalid_argument("crop window out of bounds");
}
}  // namespace

BinaryMask crop(const BinaryMask& m, const VoxelIndex& origin, const Shape& window) {
  check_window(m.shape(), origin, window);
  std::vector<std::uint8_t> bits(window.size());
  for (int i = 0; i < window.d[0]; ++i)
    for (int j = 0; j < window.d[1]; ++j)
      for (int k = 0; k < window.d[2]; ++k)
        bits[window.flat(i, j, k)] =
            m[m.shape().flat(origin.c[0] + i, origin.c[1] + j, origin.c[2] + k)];
  return BinaryMask(window, std::move(bits));
}

ScalarField crop(const ScalarField& f, const VoxelIndex& origin, const Shape& window) {
  check_window(f.shape(), origin, window);
  std::vector<double> data(window.size());
  for (int i = 0; i < window.d[0]; ++i)
    for (int j = 0; j < window.d[1]; ++j)
      for (int k = 0; k < window.d[2]; ++k)
        data[window.flat(i, j, k)] =
            f[f.shape().flat(origin.c[0] + i, origin.c[1] + j, origin.c[2] + k)];
  return ScalarField(window, std::move(data));
}

ScalarField to_field(const BinaryMask& m) {
  std::vector<double> data(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) data[i] = m[i] ? 1.0 : 0.0;
  return ScalarField(m.shape(), std::move(data));
}

}  // namespace cldice
