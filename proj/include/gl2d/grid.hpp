#pragma once

// Masked Cartesian grid over a bounding box: cell labels for the domain
// Omega, its holes, and the filled domain Omega-tilde, plus boundary face
// classification, quadrature weights and cell-complex topology.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace gl2d {

template <class T> struct Grid2 {
  int nx = 0, ny = 0;
  std::vector<T> v;
  Grid2() = default;
  Grid2(int nx_, int ny_, T fill = T{}) : nx(nx_), ny(ny_), v(size_t(nx_) * ny_, fill) {}
  T& operator()(int i, int j) { return v[size_t(j) * nx + i]; }
  const T& operator()(int i, int j) const { return v[size_t(j) * nx + i]; }
  void fill(T x) { std::fill(v.begin(), v.end(), x); }
};

enum class Shape { Rectangle, Disk, Annulus, RectangleWithRectHoles };

struct HoleSpec {
  bool disk = true;       // disk or axis-aligned rectangle
  double cx = 0, cy = 0;  // center
  double r = 0;           // disk radius
  double wx = 0, wy = 0;  // rectangle side lengths
};

struct DomainSpec {
  double lx = 1.0, ly = 1.0;  // bounding box side lengths
  Shape shape = Shape::Rectangle;
  double outer_radius = 0.5;             // for Disk / Annulus
  std::vector<HoleSpec> holes;           // Annulus uses holes[0] (disk)
  int n = 32;                            // cells along x
};

// Cell labels. 0 = exterior, 1 = Omega, 2+k = hole k.
constexpr int CELL_EXT = 0;
constexpr int CELL_OMEGA = 1;
constexpr int CELL_HOLE0 = 2;

struct BoundaryFace {
  int axis;        // 0: x-face (normal +-e1), 1: y-face (normal +-e2)
  int i, j;        // face index
  int normal;      // +1 or -1, outward from Omega along axis
  int boundary_id; // -1 outer, k >= 0 hole k
};

struct Domain {
  DomainSpec spec;
  int nx = 0, ny = 0;
  double h = 0;
  double x0 = 0, y0 = 0;  // coordinates of grid corner (vertex (0,0))
  int n_holes = 0;

  Grid2<int> cell;             // label per cell
  Grid2<uint8_t> tilde;        // 1 if cell in Omega-tilde
  std::vector<BoundaryFace> boundary_faces;

  // Precomputed masks
  Grid2<uint8_t> xface_omega, yface_omega;   // both cells in Omega
  Grid2<uint8_t> xface_tilde, yface_tilde;   // both cells in Omega-tilde
  Grid2<uint8_t> vert_tilde;                 // all 4 cells in Omega-tilde
  Grid2<uint8_t> vert_omega;                 // all 4 cells in Omega
  Grid2<int> vert_hole;                      // all 4 cells in hole k -> k, else -1

  double cell_x(int i) const { return x0 + (i + 0.5) * h; }
  double cell_y(int j) const { return y0 + (j + 0.5) * h; }
  double vert_x(int i) const { return x0 + i * h; }
  double vert_y(int j) const { return y0 + j * h; }

  int cell_label(int i, int j) const {
    if (i < 0 || j < 0 || i >= nx || j >= ny) return CELL_EXT;
    return cell(i, j);
  }
  bool in_omega(int i, int j) const { return cell_label(i, j) == CELL_OMEGA; }
  bool in_tilde(int i, int j) const { return cell_label(i, j) >= CELL_OMEGA; }

  double cell_area_weight() const { return h * h; }
};

namespace detail {

inline bool point_in_outer(const DomainSpec& s, double x, double y) {
  switch (s.shape) {
    case Shape::Rectangle:
    case Shape::RectangleWithRectHoles:
      return std::abs(x) < 0.5 * s.lx && std::abs(y) < 0.5 * s.ly;
    case Shape::Disk:
    case Shape::Annulus:
      return x * x + y * y < s.outer_radius * s.outer_radius;
  }
  return false;
}

inline bool point_in_hole(const HoleSpec& hs, double x, double y) {
  if (hs.disk) {
    double dx = x - hs.cx, dy = y - hs.cy;
    return dx * dx + dy * dy < hs.r * hs.r;
  }
  return std::abs(x - hs.cx) < 0.5 * hs.wx && std::abs(y - hs.cy) < 0.5 * hs.wy;
}

inline double hole_bound_radius(const HoleSpec& hs) {
  return hs.disk ? hs.r : 0.5 * std::hypot(hs.wx, hs.wy);
}

}  // namespace detail

inline void validate_spec(const DomainSpec& s) {
  if (s.n < 8) throw std::invalid_argument("grid resolution must be >= 8");
  if (s.lx <= 0 || s.ly <= 0) throw std::invalid_argument("bounding box sides must be positive");
  if ((s.shape == Shape::Disk || s.shape == Shape::Annulus) &&
      (2 * s.outer_radius > s.lx || 2 * s.outer_radius > s.ly))
    throw std::invalid_argument("outer disk does not fit in bounding box");
  if (s.shape == Shape::Annulus && s.holes.size() != 1)
    throw std::invalid_argument("annulus requires exactly one disk hole");
  // Holes pairwise disjoint, strictly inside, away from the outer boundary.
  for (size_t a = 0; a < s.holes.size(); ++a) {
    const auto& ha = s.holes[a];
    double ra = detail::hole_bound_radius(ha);
    double margin;
    if (s.shape == Shape::Disk || s.shape == Shape::Annulus) {
      margin = s.outer_radius - (std::hypot(ha.cx, ha.cy) + ra);
    } else {
      margin = std::min({0.5 * s.lx - std::abs(ha.cx) - 0.5 * (ha.disk ? 2 * ha.r : ha.wx),
                         0.5 * s.ly - std::abs(ha.cy) - 0.5 * (ha.disk ? 2 * ha.r : ha.wy)});
    }
    if (margin <= 0) throw std::invalid_argument("hole " + std::to_string(a) + " touches the outer boundary");
    for (size_t b = a + 1; b < s.holes.size(); ++b) {
      const auto& hb = s.holes[b];
      double d = std::hypot(ha.cx - hb.cx, ha.cy - hb.cy);
      if (d <= ra + detail::hole_bound_radius(hb))
        throw std::invalid_argument("holes " + std::to_string(a) + " and " + std::to_string(b) + " overlap");
    }
  }
}

// Connected components of a cell predicate (4-adjacency). Returns count.
template <class Pred>
inline int cell_components(int nx, int ny, Pred in) {
  Grid2<int> comp(nx, ny, -1);
  int n_comp = 0;
  std::vector<std::pair<int, int>> stack;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (!in(i, j) || comp(i, j) >= 0) continue;
      comp(i, j) = n_comp;
      stack.push_back({i, j});
      while (!stack.empty()) {
        auto [ci, cj] = stack.back();
        stack.pop_back();
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
          int ni = ci + di[d], nj = cj + dj[d];
          if (ni < 0 || nj < 0 || ni >= nx || nj >= ny) continue;
          if (in(ni, nj) && comp(ni, nj) < 0) {
            comp(ni, nj) = n_comp;
            stack.push_back({ni, nj});
          }
        }
      }
      ++n_comp;
    }
  return n_comp;
}

// First Betti number of the square cell subcomplex selected by `in`.
// b1 = b0 - chi with chi = V - E + F counted over incident simplices;
// b0 uses vertex adjacency (complex connectivity).
template <class Pred>
inline int complex_betti1(int nx, int ny, Pred in) {
  Grid2<uint8_t> vert(nx + 1, ny + 1, 0);
  Grid2<uint8_t> ex(nx + 1, ny, 0);  // vertical grid edges (sides of cells), x = const
  Grid2<uint8_t> ey(nx, ny + 1, 0);  // horizontal grid edges
  long F = 0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (!in(i, j)) continue;
      ++F;
      vert(i, j) = vert(i + 1, j) = vert(i, j + 1) = vert(i + 1, j + 1) = 1;
      ex(i, j) = ex(i + 1, j) = 1;
      ey(i, j) = ey(i, j + 1) = 1;
    }
  long V = std::accumulate(vert.v.begin(), vert.v.end(), 0L);
  long E = std::accumulate(ex.v.begin(), ex.v.end(), 0L) +
           std::accumulate(ey.v.begin(), ey.v.end(), 0L);
  // b0 with corner adjacency: union-find over cells sharing a vertex.
  Grid2<int> id(nx, ny, -1);
  std::vector<int> parent;
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (in(i, j)) {
        id(i, j) = (int)parent.size();
        parent.push_back(id(i, j));
      }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (!in(i, j)) continue;
      const int di[4] = {1, 1, 0, -1}, dj[4] = {0, 1, 1, 1};
      for (int d = 0; d < 4; ++d) {
        int ni = i + di[d], nj = j + dj[d];
        if (ni < 0 || nj < 0 || ni >= nx || nj >= ny) continue;
        if (in(ni, nj)) unite(id(i, j), id(ni, nj));
      }
    }
  long b0 = 0;
  for (size_t k = 0; k < parent.size(); ++k)
    if (find((int)k) == (int)k) ++b0;
  long chi = V - E + F;
  return (int)(b0 - chi);
}

inline Domain build_domain(const DomainSpec& spec) {
  validate_spec(spec);
  Domain d;
  d.spec = spec;
  d.nx = spec.n;
  d.h = spec.lx / spec.n;
  d.ny = (int)std::lround(spec.ly / d.h);
  if (std::abs(d.ny * d.h - spec.ly) > 1e-9 * spec.ly)
    throw std::invalid_argument("bounding box sides must be commensurate with a square grid");
  d.x0 = -0.5 * spec.lx;
  d.y0 = -0.5 * spec.ly;
  d.n_holes = (int)spec.holes.size();

  d.cell = Grid2<int>(d.nx, d.ny, CELL_EXT);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) {
      double x = d.cell_x(i), y = d.cell_y(j);
      if (!detail::point_in_outer(spec, x, y)) continue;
      int lab = CELL_OMEGA;
      for (int k = 0; k < d.n_holes; ++k)
        if (detail::point_in_hole(spec.holes[k], x, y)) {
          lab = CELL_HOLE0 + k;
          break;
        }
      d.cell(i, j) = lab;
    }

  // Every hole must be represented by at least one cell, and each hole
  // region must be connected and strictly surrounded by Omega cells.
  for (int k = 0; k < d.n_holes; ++k) {
    auto in_hole = [&](int i, int j) { return d.cell(i, j) == CELL_HOLE0 + k; };
    long cnt = 0;
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i)
        if (in_hole(i, j)) ++cnt;
    if (cnt == 0) throw std::invalid_argument("hole " + std::to_string(k) + " is unresolved at this grid resolution");
    if (cell_components(d.nx, d.ny, in_hole) != 1)
      throw std::invalid_argument("hole " + std::to_string(k) + " is not connected on the grid");
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i) {
        if (!in_hole(i, j)) continue;
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int dd = 0; dd < 4; ++dd) {
          int lab = d.cell_label(i + di[dd], j + dj[dd]);
          if (lab == CELL_EXT)
            throw std::invalid_argument("hole " + std::to_string(k) + " touches the outer boundary on the grid");
        }
      }
  }

  if (cell_components(d.nx, d.ny, [&](int i, int j) { return d.cell(i, j) == CELL_OMEGA; }) != 1)
    throw std::invalid_argument("Omega is not connected on the grid");

  d.tilde = Grid2<uint8_t>(d.nx, d.ny, 0);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) d.tilde(i, j) = d.cell(i, j) >= CELL_OMEGA;

  if (complex_betti1(d.nx, d.ny, [&](int i, int j) { return d.tilde(i, j) != 0; }) != 0)
    throw std::invalid_argument("filled domain is not simply connected on the grid");

  // Face / vertex masks.
  d.xface_omega = Grid2<uint8_t>(d.nx + 1, d.ny, 0);
  d.xface_tilde = Grid2<uint8_t>(d.nx + 1, d.ny, 0);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i) {
      d.xface_omega(i, j) = d.in_omega(i - 1, j) && d.in_omega(i, j);
      d.xface_tilde(i, j) = d.in_tilde(i - 1, j) && d.in_tilde(i, j);
    }
  d.yface_omega = Grid2<uint8_t>(d.nx, d.ny + 1, 0);
  d.yface_tilde = Grid2<uint8_t>(d.nx, d.ny + 1, 0);
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) {
      d.yface_omega(i, j) = d.in_omega(i, j - 1) && d.in_omega(i, j);
      d.yface_tilde(i, j) = d.in_tilde(i, j - 1) && d.in_tilde(i, j);
    }
  d.vert_tilde = Grid2<uint8_t>(d.nx + 1, d.ny + 1, 0);
  d.vert_omega = Grid2<uint8_t>(d.nx + 1, d.ny + 1, 0);
  d.vert_hole = Grid2<int>(d.nx + 1, d.ny + 1, -1);
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i) {
      bool t = true, o = true;
      int hk = -2;  // -2 undecided, -1 mixed
      for (int dj = -1; dj <= 0; ++dj)
        for (int di = -1; di <= 0; ++di) {
          int lab = d.cell_label(i + di, j + dj);
          t &= lab >= CELL_OMEGA;
          o &= lab == CELL_OMEGA;
          int k = lab >= CELL_HOLE0 ? lab - CELL_HOLE0 : -1;
          if (hk == -2) hk = k;
          else if (hk != k) hk = -1;
        }
      d.vert_tilde(i, j) = t;
      d.vert_omega(i, j) = o;
      d.vert_hole(i, j) = hk >= 0 ? hk : -1;
    }

  // Boundary faces of Omega with outward normals and boundary ids.
  auto id_of = [&](int lab) { return lab == CELL_EXT ? -1 : lab - CELL_HOLE0; };
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i) {
      int lm = d.cell_label(i - 1, j), lp = d.cell_label(i, j);
      if ((lm == CELL_OMEGA) != (lp == CELL_OMEGA)) {
        bool omega_left = lm == CELL_OMEGA;
        int other = omega_left ? lp : lm;
        if (other == CELL_OMEGA) continue;
        d.boundary_faces.push_back({0, i, j, omega_left ? +1 : -1, id_of(other)});
      }
    }
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) {
      int lm = d.cell_label(i, j - 1), lp = d.cell_label(i, j);
      if ((lm == CELL_OMEGA) != (lp == CELL_OMEGA)) {
        bool omega_below = lm == CELL_OMEGA;
        int other = omega_below ? lp : lm;
        if (other == CELL_OMEGA) continue;
        d.boundary_faces.push_back({1, i, j, omega_below ? +1 : -1, id_of(other)});
      }
    }

  return d;
}

enum class Region { Omega, Tilde, Hole };

inline double area(const Domain& d, Region r, int hole = 0) {
  if (r == Region::Hole && (hole < 0 || hole >= d.n_holes))
    throw std::invalid_argument("unknown hole id");
  double w = d.cell_area_weight(), s = 0;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) {
      int lab = d.cell(i, j);
      bool take = r == Region::Omega   ? lab == CELL_OMEGA
                  : r == Region::Tilde ? lab >= CELL_OMEGA
                                       : lab == CELL_HOLE0 + hole;
      if (take) s += w;
    }
  return s;
}

inline int omega_betti1(const Domain& d) {
  return complex_betti1(d.nx, d.ny, [&](int i, int j) { return d.cell(i, j) == CELL_OMEGA; });
}

// Ordered loop of hole-boundary grid vertices (staircase polygon) and its
// winding number around a point. Throws if the boundary is not a single
// closed loop.
inline std::vector<std::pair<int, int>> hole_boundary_loop(const Domain& d, int hole) {
  // Grid edges separating hole cells from Omega cells.
  std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> adj;
  auto add_edge = [&](int va, int ja, int vb, int jb) {
    adj[{va, ja}].push_back({vb, jb});
    adj[{vb, jb}].push_back({va, ja});
  };
  int lab = CELL_HOLE0 + hole;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i) {
      int lm = d.cell_label(i - 1, j), lp = d.cell_label(i, j);
      if ((lm == lab) != (lp == lab)) add_edge(i, j, i, j + 1);
    }
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) {
      int lm = d.cell_label(i, j - 1), lp = d.cell_label(i, j);
      if ((lm == lab) != (lp == lab)) add_edge(i, j, i + 1, j);
    }
  if (adj.empty()) throw std::runtime_error("hole has no boundary");
  for (auto& [v, nb] : adj)
    if (nb.size() != 2) throw std::runtime_error("hole boundary is not a simple loop");
  std::vector<std::pair<int, int>> loop;
  auto start = adj.begin()->first;
  auto prev = start, cur = adj[start][0];
  loop.push_back(start);
  while (cur != start) {
    loop.push_back(cur);
    auto& nb = adj[cur];
    auto next = nb[0] == prev ? nb[1] : nb[0];
    prev = cur;
    cur = next;
  }
  if (loop.size() != adj.size()) throw std::runtime_error("hole boundary has multiple loops");
  return loop;
}

inline int winding_number(const Domain& d, const std::vector<std::pair<int, int>>& loop,
                          double px, double py) {
  double total = 0;
  size_t n = loop.size();
  for (size_t k = 0; k < n; ++k) {
    auto [i1, j1] = loop[k];
    auto [i2, j2] = loop[(k + 1) % n];
    double a1 = std::atan2(d.vert_y(j1) - py, d.vert_x(i1) - px);
    double a2 = std::atan2(d.vert_y(j2) - py, d.vert_x(i2) - px);
    double da = a2 - a1;
    while (da > M_PI) da -= 2 * M_PI;
    while (da < -M_PI) da += 2 * M_PI;
    total += da;
  }
  return (int)std::lround(std::abs(total) / (2 * M_PI));
}

}  // namespace gl2d
