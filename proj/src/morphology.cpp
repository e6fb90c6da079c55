#include "cldice/morphology.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "cldice/topology.hpp"

namespace cldice {

namespace {

enum class PoolKind { Min, Max };

// 3-element pooling along one axis, stride 1, window clipped at the frame;
// writes into a caller-provided buffer so iterative callers avoid all
// allocation churn.
void pool_axis_into(const std::vector<double>& in, const Shape& s, int axis,
                    PoolKind kind, std::vector<double>& out) {
  out.resize(in.size());
  const auto stride = [&]() -> std::size_t {
    if (axis == 0) return static_cast<std::size_t>(s.d[1]) * s.d[2];
    if (axis == 1) return static_cast<std::size_t>(s.d[2]);
    return 1;
  }();
  for (int i = 0; i < s.d[0]; ++i)
    for (int j = 0; j < s.d[1]; ++j)
      for (int k = 0; k < s.d[2]; ++k) {
        const std::size_t f = s.flat(i, j, k);
        const int pos = axis == 0 ? i : axis == 1 ? j : k;
        const int ext = s.d[axis];
        double v = in[f];
        if (pos > 0) {
          const double w = in[f - stride];
          v = kind == PoolKind::Min ? std::min(v, w) : std::max(v, w);
        }
        if (pos + 1 < ext) {
          const double w = in[f + stride];
          v = kind == PoolKind::Min ? std::min(v, w) : std::max(v, w);
        }
        out[f] = v;
      }
}

struct Scratch {
  std::vector<double> a, b;
};

// pointwise min of the axis-aligned min-pools (cross structuring element)
void erode_into(const std::vector<double>& in, const Shape& s, Scratch& tmp,
                std::vector<double>& out) {
  pool_axis_into(in, s, 0, PoolKind::Min, out);
  pool_axis_into(in, s, 1, PoolKind::Min, tmp.a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(out[i], tmp.a[i]);
  if (s.nd == 3) {
    pool_axis_into(in, s, 2, PoolKind::Min, tmp.a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(out[i], tmp.a[i]);
  }
}

// full 3x3(x3) box via chained axis pools
void dilate_into(const std::vector<double>& in, const Shape& s, Scratch& tmp,
                 std::vector<double>& out) {
  pool_axis_into(in, s, 0, PoolKind::Max, tmp.a);
  if (s.nd == 3) {
    pool_axis_into(tmp.a, s, 1, PoolKind::Max, tmp.b);
    pool_axis_into(tmp.b, s, 2, PoolKind::Max, out);
  } else {
    pool_axis_into(tmp.a, s, 1, PoolKind::Max, out);
  }
}

void open_into(const std::vector<double>& in, const Shape& s, Scratch& tmp,
               std::vector<double>& eroded, std::vector<double>& out) {
  erode_into(in, s, tmp, eroded);
  dilate_into(eroded, s, tmp, out);
}

ScalarField wrap(const Shape& s, std::vector<double> v) {
  for (double& x : v) x = std::clamp(x, 0.0, 1.0);
  return ScalarField(s, std::move(v));
}

}  // namespace

ScalarField soft_erode(const ScalarField& f) {
  Scratch tmp;
  std::vector<double> out;
  erode_into(f.data(), f.shape(), tmp, out);
  return wrap(f.shape(), std::move(out));
}

ScalarField soft_dilate(const ScalarField& f) {
  Scratch tmp;
  std::vector<double> out;
  dilate_into(f.data(), f.shape(), tmp, out);
  return wrap(f.shape(), std::move(out));
}

ScalarField soft_dilate_cross(const ScalarField& f) {
  const Shape& s = f.shape();
  std::vector<double> m, m1;
  pool_axis_into(f.data(), s, 0, PoolKind::Max, m);
  pool_axis_into(f.data(), s, 1, PoolKind::Max, m1);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::max(m[i], m1[i]);
  if (s.nd == 3) {
    pool_axis_into(f.data(), s, 2, PoolKind::Max, m1);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::max(m[i], m1[i]);
  }
  return wrap(s, std::move(m));
}

ScalarField soft_open(const ScalarField& f) {
  Scratch tmp;
  std::vector<double> eroded, out;
  open_into(f.data(), f.shape(), tmp, eroded, out);
  return wrap(f.shape(), std::move(out));
}

ScalarField soft_skeleton(const ScalarField& f, int k) {
  if (k < 0) throw std::invalid_argument("soft_skeleton: k must be >= 0");
  const Shape& s = f.shape();
  Scratch tmp;
  std::vector<double> img = f.data();
  std::vector<double> eroded, opened, skel(img.size());
  open_into(img, s, tmp, eroded, opened);
  for (std::size_t i = 0; i < img.size(); ++i)
    skel[i] = std::max(img[i] - opened[i], 0.0);
  for (int it = 0; it < k; ++it) {
    erode_into(img, s, tmp, eroded);
    std::swap(img, eroded);
    open_into(img, s, tmp, eroded, opened);
    for (std::size_t i = 0; i < skel.size(); ++i) {
      const double delta = std::max(img[i] - opened[i], 0.0);
      skel[i] += (1.0 - skel[i]) * delta;
    }
  }
  return wrap(s, std::move(skel));
}

namespace {

int fg_neighbor_count(const std::vector<std::uint8_t>& bits, const Shape& s,
                      int i, int j, int k, const std::vector<std::array<int, 3>>& offs,
                      bool oob_fg) {
  int n = 0;
  for (const auto& o : offs) {
    const int ni = i + o[0], nj = j + o[1], nk = k + o[2];
    if (ni < 0 || ni >= s.d[0] || nj < 0 || nj >= s.d[1] || nk < 0 || nk >= s.d[2]) {
      n += oob_fg ? 1 : 0;
      continue;
    }
    n += bits[s.flat(ni, nj, nk)];
  }
  return n;
}

}  // namespace

BinaryMask thin_skeletonize(const BinaryMask& m, const AdjacencyPair& pair) {
  const Shape& s = m.shape();
  if (!connectivity_valid(pair.fg, s.nd) || !connectivity_valid(pair.bg, s.nd))
    throw std::invalid_argument("adjacency pair invalid for dimensionality");
  std::vector<std::uint8_t> bits = m.bits();
  const auto& fg_offs = connectivity_offsets(pair.fg);
  // dual pair: the mask is a background object that continues past the frame,
  // so the frame edge exposes nothing and counts as occupied
  const bool oob_fg = pair.fg == background_connectivity(s.nd);

  std::vector<std::array<int, 3>> directions;
  for (const auto& o : connectivity_offsets(s.nd == 2 ? Connectivity::c4
                                                      : Connectivity::c6))
    directions.push_back(o);

  std::vector<std::size_t> candidates;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& dir : directions) {
      // boundary voxels whose neighbor in this direction is exposed,
      // in raster order
      candidates.clear();
      for (int i = 0; i < s.d[0]; ++i)
        for (int j = 0; j < s.d[1]; ++j)
          for (int k = 0; k < s.d[2]; ++k) {
            const std::size_t f = s.flat(i, j, k);
            if (!bits[f]) continue;
            const int ni = i + dir[0], nj = j + dir[1], nk = k + dir[2];
            const bool outside = ni < 0 || ni >= s.d[0] || nj < 0 ||
                                 nj >= s.d[1] || nk < 0 || nk >= s.d[2];
            const bool exposed =
                outside ? !oob_fg : !bits[s.flat(ni, nj, nk)];
            if (exposed) candidates.push_back(f);
          }
      // sequential deletion: simplicity re-evaluated against the current mask
      for (std::size_t f : candidates) {
        const int k = static_cast<int>(f % s.d[2]);
        const int j = static_cast<int>((f / s.d[2]) % s.d[1]);
        const int i = static_cast<int>(f / (static_cast<std::size_t>(s.d[1]) * s.d[2]));
        if (fg_neighbor_count(bits, s, i, j, k, fg_offs, oob_fg) <= 1)
          continue;  // endpoint
        if (!detail::is_simple_point_raw(bits, s, i, j, k, pair)) continue;
        bits[f] = 0;
        changed = true;
      }
    }
  }
  return BinaryMask(s, std::move(bits));
}

BinaryMask thin_skeletonize(const BinaryMask& m) {
  return thin_skeletonize(m, default_pair(m.shape().nd));
}

int max_inscribed_radius(const BinaryMask& m) {
  const Shape& s = m.shape();
  // multi-source BFS from in-frame background under city-block adjacency
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> dist(m.size(), kInf);
  std::deque<std::size_t> queue;
  for (std::size_t f = 0; f < m.size(); ++f)
    if (!m[f]) {
      dist[f] = 0;
      queue.push_back(f);
    }
  const auto& offs = connectivity_offsets(s.nd == 2 ? Connectivity::c4
                                                    : Connectivity::c6);
  while (!queue.empty()) {
    const std::size_t f = queue.front();
    queue.pop_front();
    const int k = static_cast<int>(f % s.d[2]);
    const int j = static_cast<int>((f / s.d[2]) % s.d[1]);
    const int i = static_cast<int>(f / (static_cast<std::size_t>(s.d[1]) * s.d[2]));
    for (const auto& o : offs) {
      const int ni = i + o[0], nj = j + o[1], nk = k + o[2];
      if (ni < 0 || ni >= s.d[0] || nj < 0 || nj >= s.d[1] || nk < 0 || nk >= s.d[2])
        continue;
      const std::size_t nf = s.flat(ni, nj, nk);
      if (dist[nf] == kInf) {
        dist[nf] = dist[f] + 1;
        queue.push_back(nf);
      }
    }
  }
  int max_dist = 0;
  for (std::size_t f = 0; f < m.size(); ++f)
    if (m[f] && dist[f] != kInf) max_dist = std::max(max_dist, dist[f]);
  return max_dist > 0 ? max_dist - 1 : 0;
}

}  // namespace cldice
