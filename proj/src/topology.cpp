#include "cldice/topology.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdlib>

#include "cldice/morphology.hpp"

namespace cldice {

namespace {

// ---------------------------------------------------------------------------
// Connected components

std::vector<std::size_t> flat_neighbors(std::size_t flat, const Shape& s,
                                        const std::vector<std::array<int, 3>>& offs) {
  std::vector<std::size_t> out;
  const int k = static_cast<int>(flat % s.d[2]);
  const int j = static_cast<int>((flat / s.d[2]) % s.d[1]);
  const int i = static_cast<int>(flat / (static_cast<std::size_t>(s.d[1]) * s.d[2]));
  for (const auto& o : offs) {
    const int ni = i + o[0], nj = j + o[1], nk = k + o[2];
    if (ni < 0 || ni >= s.d[0] || nj < 0 || nj >= s.d[1] || nk < 0 || nk >= s.d[2])
      continue;
    out.push_back(s.flat(ni, nj, nk));
  }
  return out;
}

}  // namespace

ComponentLabels connected_components(const BinaryMask& m, Connectivity conn) {
  const Shape& s = m.shape();
  if (!connectivity_valid(conn, s.nd))
    throw std::invalid_argument("connectivity invalid for dimensionality");
  const auto& offs = connectivity_offsets(conn);
  ComponentLabels out;
  out.labels.assign(m.size(), 0);
  std::vector<std::size_t> queue;
  for (std::size_t seed = 0; seed < m.size(); ++seed) {
    if (!m[seed] || out.labels[seed] != 0) continue;
    const std::int32_t label = ++out.count;
    out.labels[seed] = label;
    queue.assign(1, seed);
    while (!queue.empty()) {
      const std::size_t cur = queue.back();
      queue.pop_back();
      for (std::size_t n : flat_neighbors(cur, s, offs)) {
        if (m[n] && out.labels[n] == 0) {
          out.labels[n] = label;
          queue.push_back(n);
        }
      }
    }
  }
  return out;
}

std::vector<std::vector<VoxelIndex>> component_voxels(const BinaryMask& m,
                                                      Connectivity conn) {
  const ComponentLabels cl = connected_components(m, conn);
  std::vector<std::vector<VoxelIndex>> comps(cl.count);
  const Shape& s = m.shape();
  for (int i = 0; i < s.d[0]; ++i)
    for (int j = 0; j < s.d[1]; ++j)
      for (int k = 0; k < s.d[2]; ++k) {
        const std::int32_t l = cl.labels[s.flat(i, j, k)];
        if (l > 0) comps[l - 1].push_back(VoxelIndex{i, j, k});
      }
  return comps;
}

// ---------------------------------------------------------------------------
// Cubical complex cell counts

CubicalComplexCounts cubical_counts(const BinaryMask& m) {
  const Shape& s = m.shape();
  CubicalComplexCounts c;
  if (s.nd == 2) {
    const int v0 = s.d[0] + 1, v1 = s.d[1] + 1;
    std::vector<std::uint8_t> verts(static_cast<std::size_t>(v0) * v1, 0);
    // edge along axis a at base lattice point (i, j)
    std::vector<std::uint8_t> e0(static_cast<std::size_t>(s.d[0]) * v1, 0);
    std::vector<std::uint8_t> e1(static_cast<std::size_t>(v0) * s.d[1], 0);
    for (int i = 0; i < s.d[0]; ++i)
      for (int j = 0; j < s.d[1]; ++j) {
        if (!m.at(i, j)) continue;
        ++c.n2;
        for (int a = 0; a <= 1; ++a)
          for (int b = 0; b <= 1; ++b)
            verts[static_cast<std::size_t>(i + a) * v1 + (j + b)] = 1;
        e0[static_cast<std::size_t>(i) * v1 + j] = 1;
        e0[static_cast<std::size_t>(i) * v1 + j + 1] = 1;
        e1[static_cast<std::size_t>(i) * s.d[1] + j] = 1;
        e1[static_cast<std::size_t>(i + 1) * s.d[1] + j] = 1;
      }
    for (auto b : verts) c.n0 += b;
    for (auto b : e0) c.n1 += b;
    for (auto b : e1) c.n1 += b;
    return c;
  }
  const int v0 = s.d[0] + 1, v1 = s.d[1] + 1, v2 = s.d[2] + 1;
  auto vidx = [&](int i, int j, int k) {
    return (static_cast<std::size_t>(i) * v1 + j) * v2 + k;
  };
  std::vector<std::uint8_t> verts(static_cast<std::size_t>(v0) * v1 * v2, 0);
  // edges indexed by direction and base vertex; faces by normal axis and base
  std::array<std::vector<std::uint8_t>, 3> edges;
  std::array<std::vector<std::uint8_t>, 3> faces;
  edges[0].assign(static_cast<std::size_t>(s.d[0]) * v1 * v2, 0);
  edges[1].assign(static_cast<std::size_t>(v0) * s.d[1] * v2, 0);
  edges[2].assign(static_cast<std::size_t>(v0) * v1 * s.d[2], 0);
  faces[0].assign(static_cast<std::size_t>(v0) * s.d[1] * s.d[2], 0);
  faces[1].assign(static_cast<std::size_t>(s.d[0]) * v1 * s.d[2], 0);
  faces[2].assign(static_cast<std::size_t>(s.d[0]) * s.d[1] * v2, 0);
  auto eidx = [&](int dir, int i, int j, int k) -> std::size_t {
    switch (dir) {
      case 0: return (static_cast<std::size_t>(i) * v1 + j) * v2 + k;
      case 1: return (static_cast<std::size_t>(i) * s.d[1] + j) * v2 + k;
      default: return (static_cast<std::size_t>(i) * v1 + j) * s.d[2] + k;
    }
  };
  auto fidx = [&](int normal, int i, int j, int k) -> std::size_t {
    switch (normal) {
      case 0: return (static_cast<std::size_t>(i) * s.d[1] + j) * s.d[2] + k;
      case 1: return (static_cast<std::size_t>(i) * v1 + j) * s.d[2] + k;
      default: return (static_cast<std::size_t>(i) * s.d[1] + j) * v2 + k;
    }
  };
  for (int i = 0; i < s.d[0]; ++i)
    for (int j = 0; j < s.d[1]; ++j)
      for (int k = 0; k < s.d[2]; ++k) {
        if (!m.at(i, j, k)) continue;
        ++c.n3;
        for (int a = 0; a <= 1; ++a)
          for (int b = 0; b <= 1; ++b)
            for (int d = 0; d <= 1; ++d) verts[vidx(i + a, j + b, k + d)] = 1;
        for (int b = 0; b <= 1; ++b)
          for (int d = 0; d <= 1; ++d) {
            edges[0][eidx(0, i, j + b, k + d)] = 1;
            edges[1][eidx(1, i + b, j, k + d)] = 1;
            edges[2][eidx(2, i + b, j + d, k)] = 1;
          }
        for (int a = 0; a <= 1; ++a) {
          faces[0][fidx(0, i + a, j, k)] = 1;
          faces[1][fidx(1, i, j + a, k)] = 1;
          faces[2][fidx(2, i, j, k + a)] = 1;
        }
      }
  for (auto b : verts) c.n0 += b;
  for (int d = 0; d < 3; ++d) {
    for (auto b : edges[d]) c.n1 += b;
    for (auto b : faces[d]) c.n2 += b;
  }
  return c;
}

std::int64_t euler_characteristic(const BinaryMask& m) {
  const CubicalComplexCounts c = cubical_counts(m);
  return c.n0 - c.n1 + c.n2 - c.n3;
}

// ---------------------------------------------------------------------------
// Betti numbers

BettiTriple betti_numbers(const BinaryMask& m) {
  const int nd = m.shape().nd;
  BettiTriple b;
  b.b0 = connected_components(m, foreground_connectivity(nd)).count;
  if (nd == 3) {
    // bounded cavities: 6-components of the padded background minus the
    // single exterior component
    const BinaryMask bg = pad(complement(m), 1, true);
    const int bg_comps = connected_components(bg, Connectivity::c6).count;
    b.b2 = bg_comps > 0 ? bg_comps - 1 : 0;
  }
  b.b1 = b.b0 + b.b2 - euler_characteristic(m);
  return b;
}

// ---------------------------------------------------------------------------
// GF(2) homology oracle

namespace {

int gf2_rank(std::vector<std::vector<std::uint64_t>>& rows, std::size_t ncols) {
  // reduce each row against stored pivots; pivot = lowest set bit
  std::vector<int> pivot_owner(ncols, -1);
  int rank = 0;
  const std::size_t words = (ncols + 63) / 64;
  std::vector<int> stored;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto& row = rows[r];
    while (true) {
      std::size_t p = ncols;
      for (std::size_t w = 0; w < words; ++w)
        if (row[w]) {
          p = w * 64 + static_cast<std::size_t>(std::countr_zero(row[w]));
          break;
        }
      if (p == ncols) break;  // zero row
      if (pivot_owner[p] < 0) {
        pivot_owner[p] = static_cast<int>(r);
        ++rank;
        break;
      }
      const auto& other = rows[pivot_owner[p]];
      for (std::size_t w = 0; w < words; ++w) row[w] ^= other[w];
    }
  }
  return rank;
}

struct CellIds {
  std::vector<std::int32_t> id;  // dense lattice array, -1 = absent
  std::int64_t count = 0;
};

void set_bit(std::vector<std::uint64_t>& row, std::int32_t col) {
  row[static_cast<std::size_t>(col) / 64] |= std::uint64_t{1} << (col % 64);
}

}  // namespace

BettiTriple betti_oracle(const BinaryMask& m) {
  const Shape& s = m.shape();
  if (m.size() > 8000 || s.d[0] > 20 || s.d[1] > 20 || s.d[2] > 20)
    throw std::invalid_argument("betti_oracle: mask too large for dense GF(2) solve");
  if (m.empty_mask()) return BettiTriple{0, 0, 0};

  const int v0 = s.d[0] + 1, v1 = s.d[1] + 1, v2 = s.nd == 3 ? s.d[2] + 1 : 1;
  auto lat = [&](int i, int j, int k) {
    return (static_cast<std::size_t>(i) * v1 + j) * v2 + k;
  };

  // vertex ids
  CellIds verts;
  verts.id.assign(static_cast<std::size_t>(v0) * v1 * v2, -1);
  auto touch_vert = [&](int i, int j, int k) {
    auto& e = verts.id[lat(i, j, k)];
    if (e < 0) e = static_cast<std::int32_t>(verts.count++);
  };

  // edge ids: direction in {0,1,2}, base lattice point
  std::array<CellIds, 3> edges;
  for (auto& e : edges) e.id.assign(static_cast<std::size_t>(v0) * v1 * v2, -1);
  auto touch_edge = [&](int dir, int i, int j, int k) {
    auto& e = edges[dir].id[lat(i, j, k)];
    if (e < 0) e = static_cast<std::int32_t>(edges[dir].count++);
  };

  // face ids: normal axis, base lattice point (2D uses normal 2 only)
  std::array<CellIds, 3> faces;
  for (auto& f : faces) f.id.assign(static_cast<std::size_t>(v0) * v1 * v2, -1);
  auto touch_face = [&](int normal, int i, int j, int k) {
    auto& e = faces[normal].id[lat(i, j, k)];
    if (e < 0) e = static_cast<std::int32_t>(faces[normal].count++);
  };

  CellIds cubes;
  if (s.nd == 3) cubes.id.assign(static_cast<std::size_t>(v0) * v1 * v2, -1);

  const int kmax = s.nd == 3 ? s.d[2] : 1;
  for (int i = 0; i < s.d[0]; ++i)
    for (int j = 0; j < s.d[1]; ++j)
      for (int k = 0; k < kmax; ++k) {
        if (!m.at(i, j, s.nd == 3 ? k : 0)) continue;
        if (s.nd == 2) {
          for (int a = 0; a <= 1; ++a)
            for (int b = 0; b <= 1; ++b) touch_vert(i + a, j + b, 0);
          touch_edge(0, i, j, 0);
          touch_edge(0, i, j + 1, 0);
          touch_edge(1, i, j, 0);
          touch_edge(1, i + 1, j, 0);
          touch_face(2, i, j, 0);
        } else {
          for (int a = 0; a <= 1; ++a)
            for (int b = 0; b <= 1; ++b)
              for (int d = 0; d <= 1; ++d) touch_vert(i + a, j + b, k + d);
          for (int b = 0; b <= 1; ++b)
            for (int d = 0; d <= 1; ++d) {
              touch_edge(0, i, j + b, k + d);
              touch_edge(1, i + b, j, k + d);
              touch_edge(2, i + b, j + d, k);
            }
          for (int a = 0; a <= 1; ++a) {
            touch_face(0, i + a, j, k);
            touch_face(1, i, j + a, k);
            touch_face(2, i, j, k + a);
          }
          auto& e = cubes.id[lat(i, j, k)];
          if (e < 0) e = static_cast<std::int32_t>(cubes.count++);
        }
      }

  const std::int64_t ne = edges[0].count + edges[1].count + edges[2].count;
  const std::int64_t nf = faces[0].count + faces[1].count + faces[2].count;
  auto edge_gid = [&](int dir, int i, int j, int k) -> std::int32_t {
    std::int32_t base = 0;
    for (int d = 0; d < dir; ++d) base += static_cast<std::int32_t>(edges[d].count);
    return base + edges[dir].id[lat(i, j, k)];
  };
  auto face_gid = [&](int normal, int i, int j, int k) -> std::int32_t {
    std::int32_t base = 0;
    for (int d = 0; d < normal; ++d) base += static_cast<std::int32_t>(faces[d].count);
    return base + faces[normal].id[lat(i, j, k)];
  };

  // boundary of edges -> vertices
  const std::size_t vwords = (static_cast<std::size_t>(verts.count) + 63) / 64;
  std::vector<std::vector<std::uint64_t>> d1(
      static_cast<std::size_t>(ne), std::vector<std::uint64_t>(vwords, 0));
  for (int dir = 0; dir < 3; ++dir) {
    if (edges[dir].count == 0) continue;
    for (int i = 0; i < v0; ++i)
      for (int j = 0; j < v1; ++j)
        for (int k = 0; k < v2; ++k) {
          const auto e = edges[dir].id[lat(i, j, k)];
          if (e < 0) continue;
          auto& row = d1[static_cast<std::size_t>(edge_gid(dir, i, j, k))];
          set_bit(row, verts.id[lat(i, j, k)]);
          const int ni = i + (dir == 0), nj = j + (dir == 1), nk = k + (dir == 2);
          set_bit(row, verts.id[lat(ni, nj, nk)]);
        }
  }

  // boundary of faces -> edges
  const std::size_t ewords = (static_cast<std::size_t>(ne) + 63) / 64;
  std::vector<std::vector<std::uint64_t>> d2(
      static_cast<std::size_t>(nf), std::vector<std::uint64_t>(ewords, 0));
  for (int normal = 0; normal < 3; ++normal) {
    if (faces[normal].count == 0) continue;
    const int s1 = (normal + 1) % 3, s2 = (normal + 2) % 3;  // spanning axes
    for (int i = 0; i < v0; ++i)
      for (int j = 0; j < v1; ++j)
        for (int k = 0; k < v2; ++k) {
          const auto f = faces[normal].id[lat(i, j, k)];
          if (f < 0) continue;
          auto& row = d2[static_cast<std::size_t>(face_gid(normal, i, j, k))];
          std::array<int, 3> base{i, j, k};
          for (int step = 0; step <= 1; ++step) {
            std::array<int, 3> p = base;
            p[s2] += step;
            set_bit(row, edge_gid(s1, p[0], p[1], p[2]));
            p = base;
            p[s1] += step;
            set_bit(row, edge_gid(s2, p[0], p[1], p[2]));
          }
        }
  }

  BettiTriple out;
  std::int64_t rank_d1 = gf2_rank(d1, static_cast<std::size_t>(verts.count));
  std::int64_t rank_d2 = gf2_rank(d2, static_cast<std::size_t>(ne));
  out.b0 = verts.count - rank_d1;
  if (s.nd == 2) {
    out.b1 = ne - rank_d1 - rank_d2;
    out.b2 = 0;
    // cells are faces of pixels; H2 of a 2-complex embedded in the plane with
    // every face bounded by foreground is zero, and b0/b1 follow from ranks
    return out;
  }

  // boundary of cubes -> faces
  const std::size_t fwords = (static_cast<std::size_t>(nf) + 63) / 64;
  std::vector<std::vector<std::uint64_t>> d3(
      static_cast<std::size_t>(cubes.count), std::vector<std::uint64_t>(fwords, 0));
  for (int i = 0; i < s.d[0]; ++i)
    for (int j = 0; j < s.d[1]; ++j)
      for (int k = 0; k < s.d[2]; ++k) {
        const auto cid = cubes.id[lat(i, j, k)];
        if (cid < 0) continue;
        auto& row = d3[static_cast<std::size_t>(cid)];
        for (int a = 0; a <= 1; ++a) {
          set_bit(row, face_gid(0, i + a, j, k));
          set_bit(row, face_gid(1, i, j + a, k));
          set_bit(row, face_gid(2, i, j, k + a));
        }
      }
  std::int64_t rank_d3 = gf2_rank(d3, static_cast<std::size_t>(nf));
  out.b1 = ne - rank_d1 - rank_d2;
  out.b2 = nf - rank_d2 - rank_d3;
  return out;
}

// ---------------------------------------------------------------------------
// Complement (background) Betti via the half-shifted dual complex

BettiTriple complement_betti(const BinaryMask& m) {
  const int nd = m.shape().nd;
  const BinaryMask bg = pad(complement(m), 1, true);
  const Shape& s = bg.shape();
  BettiTriple b;
  b.b0 = connected_components(bg, background_connectivity(nd)).count;
  b.b2 = nd == 3 ? connected_components(m, Connectivity::c26).count : 0;

  // dual complex: vertices = bg voxels, edges = face-adjacent bg pairs,
  // faces = all-bg 2x2(x1) blocks, cubes = all-bg 2x2x2 blocks
  std::int64_t n0 = static_cast<std::int64_t>(bg.count());
  std::int64_t n1 = 0, n2 = 0, n3 = 0;
  const int kmax = nd == 3 ? s.d[2] : 1;
  auto bgat = [&](int i, int j, int k) { return bg.at(i, j, nd == 3 ? k : 0); };
  for (int i = 0; i < s.d[0]; ++i)
    for (int j = 0; j < s.d[1]; ++j)
      for (int k = 0; k < kmax; ++k) {
        if (!bgat(i, j, k)) continue;
        if (i + 1 < s.d[0] && bgat(i + 1, j, k)) ++n1;
        if (j + 1 < s.d[1] && bgat(i, j + 1, k)) ++n1;
        if (nd == 3 && k + 1 < s.d[2] && bgat(i, j, k + 1)) ++n1;
        const bool bi = i + 1 < s.d[0], bj = j + 1 < s.d[1],
                   bk = nd == 3 && k + 1 < s.d[2];
        if (bi && bj && bgat(i + 1, j, k) && bgat(i, j + 1, k) && bgat(i + 1, j + 1, k))
          ++n2;
        if (nd == 3) {
          if (bi && bk && bgat(i + 1, j, k) && bgat(i, j, k + 1) && bgat(i + 1, j, k + 1))
            ++n2;
          if (bj && bk && bgat(i, j + 1, k) && bgat(i, j, k + 1) && bgat(i, j + 1, k + 1))
            ++n2;
          if (bi && bj && bk) {
            bool all = true;
            for (int a = 0; a <= 1 && all; ++a)
              for (int bb = 0; bb <= 1 && all; ++bb)
                for (int d = 0; d <= 1 && all; ++d)
                  all = bgat(i + a, j + bb, k + d);
            if (all) ++n3;
          }
        }
      }
  const std::int64_t chi = n0 - n1 + n2 - n3;
  b.b1 = b.b0 + b.b2 - chi;
  return b;
}

// ---------------------------------------------------------------------------
// Simple points

namespace {

// 3x3x3 window cells indexed by (di+1)*9 + (dj+1)*3 + (dk+1); center = 13.
// 2D uses the dk = 0 plane (cells with index % 3 == 1).
struct WindowTables {
  std::array<std::uint32_t, 27> adj26{};
  std::array<std::uint32_t, 27> adj6{};
  std::array<std::uint32_t, 27> adj8{};   // 2D, within plane
  std::array<std::uint32_t, 27> adj4{};   // 2D, within plane
  std::uint32_t punct26 = 0;              // all 26 non-center cells
  std::uint32_t n18 = 0;                  // face+edge neighbors of center
  std::uint32_t n6 = 0;                   // face neighbors of center
  std::uint32_t plane8 = 0;               // 2D punctured plane
  std::uint32_t plane4 = 0;               // 2D face neighbors
};

WindowTables build_window_tables() {
  WindowTables t;
  auto cell = [](int di, int dj, int dk) { return (di + 1) * 9 + (dj + 1) * 3 + (dk + 1); };
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj)
      for (int dk = -1; dk <= 1; ++dk) {
        const int c = cell(di, dj, dk);
        const int l1 = std::abs(di) + std::abs(dj) + std::abs(dk);
        if (l1 > 0) t.punct26 |= 1u << c;
        if (l1 >= 1 && l1 <= 2) t.n18 |= 1u << c;
        if (l1 == 1) t.n6 |= 1u << c;
        if (dk == 0 && l1 > 0) t.plane8 |= 1u << c;
        if (dk == 0 && l1 == 1) t.plane4 |= 1u << c;
        for (int ei = -1; ei <= 1; ++ei)
          for (int ej = -1; ej <= 1; ++ej)
            for (int ek = -1; ek <= 1; ++ek) {
              if (ei == di && ej == dj && ek == dk) continue;
              const int e = cell(ei, ej, ek);
              const int cheb = std::max({std::abs(ei - di), std::abs(ej - dj),
                                         std::abs(ek - dk)});
              const int dl1 = std::abs(ei - di) + std::abs(ej - dj) + std::abs(ek - dk);
              if (cheb == 1) t.adj26[c] |= 1u << e;
              if (dl1 == 1) t.adj6[c] |= 1u << e;
              if (dk == 0 && ek == 0) {
                if (cheb == 1) t.adj8[c] |= 1u << e;
                if (dl1 == 1) t.adj4[c] |= 1u << e;
              }
            }
      }
  return t;
}

const WindowTables& window_tables() {
  static const WindowTables t = build_window_tables();
  return t;
}

// Components of the cell set under the given local adjacency; if touch != 0,
// count only components intersecting it.
int local_components(std::uint32_t cells, const std::array<std::uint32_t, 27>& adj,
                     std::uint32_t touch) {
  int count = 0;
  std::uint32_t rest = cells;
  while (rest) {
    std::uint32_t comp = rest & (~rest + 1);  // lowest set bit
    while (true) {
      std::uint32_t grow = comp;
      std::uint32_t scan = comp;
      while (scan) {
        const int c = std::countr_zero(scan);
        scan &= scan - 1;
        grow |= adj[c] & cells;
      }
      if (grow == comp) break;
      comp = grow;
    }
    rest &= ~comp;
    if (touch == 0 || (comp & touch)) ++count;
  }
  return count;
}

// Window bits of the mask; oob_fg selects which side the out-of-frame cells
// belong to. The default pair models a bounded object in an unbounded
// background (OOB = background); the dual pair models the background itself,
// which extends past the frame (OOB = mask side).
std::uint32_t window_fg(const std::vector<std::uint8_t>& bits, const Shape& s,
                        int ci, int cj, int ck, bool oob_fg) {
  std::uint32_t fg = 0;
  const int kspan = s.nd == 3 ? 1 : 0;
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj)
      for (int dk = -kspan; dk <= kspan; ++dk) {
        const int i = ci + di, j = cj + dj, k = ck + dk;
        const bool inside = i >= 0 && i < s.d[0] && j >= 0 && j < s.d[1] &&
                            k >= 0 && k < s.d[2];
        const bool on = inside ? bits[s.flat(i, j, k)] != 0 : oob_fg;
        if (on) fg |= 1u << ((di + 1) * 9 + (dj + 1) * 3 + (dk + 1));
      }
  return fg;
}

std::uint32_t window_inframe(const Shape& s, int ci, int cj, int ck) {
  std::uint32_t in = 0;
  const int kspan = s.nd == 3 ? 1 : 0;
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj)
      for (int dk = -kspan; dk <= kspan; ++dk) {
        const int i = ci + di, j = cj + dj, k = ck + dk;
        if (i < 0 || i >= s.d[0] || j < 0 || j >= s.d[1] || k < 0 || k >= s.d[2])
          continue;
        in |= 1u << ((di + 1) * 9 + (dj + 1) * 3 + (dk + 1));
      }
  return in;
}

}  // namespace

namespace detail {

bool is_simple_point_raw(const std::vector<std::uint8_t>& bits, const Shape& s,
                         int i, int j, int k, const AdjacencyPair& pair) {
  const WindowTables& t = window_tables();
  const bool dual = pair.fg == background_connectivity(s.nd);
  const std::uint32_t fg = window_fg(bits, s, i, j, k, dual) & ~(1u << 13);
  if (s.nd == 2) {
    const std::uint32_t bg = t.plane8 & ~fg;
    if (pair.fg == Connectivity::c8) {
      return local_components(fg & t.plane8, t.adj8, 0) == 1 &&
             local_components(bg, t.adj4, t.plane4) == 1;
    }
    return local_components(fg & t.plane8, t.adj4, t.plane4) == 1 &&
           local_components(bg, t.adj8, 0) == 1;
  }
  const std::uint32_t bg26 = t.punct26 & ~fg;
  if (pair.fg == Connectivity::c26) {
    return local_components(fg & t.punct26, t.adj26, 0) == 1 &&
           local_components(bg26 & t.n18, t.adj6, t.n6) == 1;
  }
  // (6, 26) pair, used when analyzing a background mask
  return local_components(fg & t.n18, t.adj6, t.n6) == 1 &&
         local_components(bg26, t.adj26, 0) == 1;
}

}  // namespace detail

namespace {

// Euler change of removing the center cube from the object whose foreground
// occupies the given window bits: the cube takes its exclusively-owned
// vertices, edges and faces with it. Zero is necessary for the Betti triple
// to survive the deletion.
std::int64_t deletion_chi_delta(std::uint32_t fg, int nd) {
  auto on = [&](int di, int dj, int dk) {
    return (fg >> ((di + 1) * 9 + (dj + 1) * 3 + (dk + 1))) & 1u;
  };
  if (nd == 2) {
    int v_ex = 0, e_ex = 0;
    for (int si : {-1, 1})
      for (int sj : {-1, 1})
        if (!on(si, 0, 0) && !on(0, sj, 0) && !on(si, sj, 0)) ++v_ex;
    for (int si : {-1, 1}) {
      if (!on(si, 0, 0)) ++e_ex;
      if (!on(0, si, 0)) ++e_ex;
    }
    return -v_ex + e_ex - 1;
  }
  int v_ex = 0, e_ex = 0, f_ex = 0;
  for (int si : {-1, 1})
    for (int sj : {-1, 1})
      for (int sk : {-1, 1}) {
        bool shared = false;
        for (int a = 0; a <= 1 && !shared; ++a)
          for (int b = 0; b <= 1 && !shared; ++b)
            for (int c = 0; c <= 1 && !shared; ++c) {
              if (a == 0 && b == 0 && c == 0) continue;
              shared = on(a * si, b * sj, c * sk);
            }
        if (!shared) ++v_ex;
      }
  // edges along each axis, four corners of the orthogonal square
  for (int axis = 0; axis < 3; ++axis)
    for (int s1 : {-1, 1})
      for (int s2 : {-1, 1}) {
        std::array<int, 3> u{}, w{};
        u[(axis + 1) % 3] = s1;
        w[(axis + 2) % 3] = s2;
        const bool shared = on(u[0], u[1], u[2]) || on(w[0], w[1], w[2]) ||
                            on(u[0] + w[0], u[1] + w[1], u[2] + w[2]);
        if (!shared) ++e_ex;
      }
  for (int axis = 0; axis < 3; ++axis)
    for (int side : {-1, 1}) {
      std::array<int, 3> o{};
      o[axis] = side;
      if (!on(o[0], o[1], o[2])) ++f_ex;
    }
  return -v_ex + e_ex - f_ex + 1;
}

}  // namespace

bool is_simple_point(const BinaryMask& m, const VoxelIndex& idx,
                     const AdjacencyPair& pair) {
  const Shape& s = m.shape();
  if (!in_bounds(idx, s)) throw std::out_of_range("voxel index out of bounds");
  if (!m.at(idx.c[0], idx.c[1], idx.c[2]))
    throw std::invalid_argument("is_simple_point: voxel is not foreground");
  if (!connectivity_valid(pair.fg, s.nd) || !connectivity_valid(pair.bg, s.nd))
    throw std::invalid_argument("adjacency pair invalid for dimensionality");
  // local neighborhood test: sound but (in 3D) not complete against the
  // cubical-complex Betti triple, which the contract is stated in
  if (detail::is_simple_point_raw(m.bits(), s, idx.c[0], idx.c[1], idx.c[2], pair))
    return true;

  // exact fallback for the rare configurations the local rule misses:
  // a zero Euler change is necessary, the full triple settles the rest
  const bool dual = pair.fg == background_connectivity(s.nd);
  const std::uint32_t fg_in =
      window_fg(m.bits(), s, idx.c[0], idx.c[1], idx.c[2], false) & ~(1u << 13);
  std::vector<std::uint8_t> del_bits = m.bits();
  del_bits[s.flat(idx.c[0], idx.c[1], idx.c[2])] = 0;
  const BinaryMask del(s, std::move(del_bits));
  if (!dual) {
    if (deletion_chi_delta(fg_in, s.nd) != 0) return false;
    return betti_numbers(del) == betti_numbers(m);
  }
  // dual pair: deleting the voxel adds its cube to the in-frame complement
  // object, whose closed triple must survive; by Alexander duality this is
  // exactly preservation of the ambient topology of the mask-as-background
  const std::uint32_t comp_fg =
      window_inframe(s, idx.c[0], idx.c[1], idx.c[2]) & ~fg_in & ~(1u << 13);
  if (deletion_chi_delta(comp_fg, s.nd) != 0) return false;
  return betti_numbers(complement(del)) == betti_numbers(complement(m));
}

bool is_simple_point(const BinaryMask& m, const VoxelIndex& idx) {
  return is_simple_point(m, idx, default_pair(m.shape().nd));
}

// ---------------------------------------------------------------------------
// Ghosts, misses, certificate

std::vector<std::vector<VoxelIndex>> detect_ghosts(const BinaryMask& pred_skel,
                                                   const BinaryMask& label_mask) {
  require_same_shape(pred_skel.shape(), label_mask.shape());
  return component_voxels(mask_andnot(pred_skel, label_mask),
                          foreground_connectivity(pred_skel.shape().nd));
}

std::vector<std::vector<VoxelIndex>> detect_misses(const BinaryMask& label_skel,
                                                   const BinaryMask& pred_mask) {
  require_same_shape(label_skel.shape(), pred_mask.shape());
  return component_voxels(mask_andnot(label_skel, pred_mask),
                          foreground_connectivity(label_skel.shape().nd));
}

TopologyReport topology_report(const BinaryMask& pred_skel,
                               const BinaryMask& label_skel,
                               const BinaryMask& pred_mask,
                               const BinaryMask& label_mask) {
  TopologyReport r;
  r.ghosts = detect_ghosts(pred_skel, label_mask);
  r.misses = detect_misses(label_skel, pred_mask);
  r.cl_dice_consistent = r.ghosts.empty() && r.misses.empty();
  return r;
}

HomotopyCertificate homotopy_certificate(const BinaryMask& pred,
                                         const BinaryMask& label) {
  require_same_shape(pred.shape(), label.shape());
  const int nd = pred.shape().nd;
  HomotopyCertificate cert;

  const BinaryMask skel_label = thin_skeletonize(label);
  const BinaryMask skel_pred = thin_skeletonize(pred);
  cert.fg_skel_in_pred = is_subset(skel_label, pred);
  cert.pred_skel_in_fg = is_subset(skel_pred, label);

  const BinaryMask bg_label = pad(complement(label), 1, true);
  const BinaryMask bg_pred = pad(complement(pred), 1, true);
  const AdjacencyPair dual = dual_pair(nd);
  cert.bg_skel_in_pred_bg = is_subset(thin_skeletonize(bg_label, dual), bg_pred);
  cert.pred_bg_skel_in_bg = is_subset(thin_skeletonize(bg_pred, dual), bg_label);

  cert.betti_fg_equal = betti_numbers(pred) == betti_numbers(label);
  cert.betti_bg_equal = complement_betti(pred) == complement_betti(label);
  cert.certified = cert.fg_skel_in_pred && cert.pred_skel_in_fg &&
                   cert.bg_skel_in_pred_bg && cert.pred_bg_skel_in_bg;
  return cert;
}

}  // namespace cldice
