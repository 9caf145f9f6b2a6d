#pragma once

// Discrete vector calculus on the staggered grid and the link-phase
// (Peierls) carrier of the covariant derivative. With scalars at vertices,
// vector components at faces and divergences at cell centers the identities
// div(rot* f) = 0 and rot(rot* f) = -Lap f hold exactly on interior stencils
// and rot* is the exact adjoint of rot.

#include "fields.hpp"

namespace gl2d {

// rot A = dx A2 - dy A1, at Omega-tilde interior vertices.
inline VertexField curl(const Domain& d, const VectorField& a) {
  VertexField b(d);
  double ih = 1.0 / d.h;
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i) {
      if (!d.vert_tilde(i, j)) continue;
      b.v(i, j) = (a.y(i, j) - a.y(i - 1, j)) * ih - (a.x(i, j) - a.x(i, j - 1)) * ih;
    }
  return b;
}

// rot* f = (dy f, -dx f), faces incident to interior vertices; f is taken
// as 0 outside the Omega-tilde interior vertex set (Dirichlet extension).
inline VectorField curl_adjoint(const Domain& d, const VertexField& f) {
  VectorField a(d);
  double ih = 1.0 / d.h;
  auto fv = [&](int i, int j) -> double {
    if (i < 0 || j < 0 || i > d.nx || j > d.ny) return 0.0;
    return d.vert_tilde(i, j) ? f.v(i, j) : 0.0;
  };
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.xface_tilde(i, j)) a.x(i, j) = (fv(i, j + 1) - fv(i, j)) * ih;
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.yface_tilde(i, j)) a.y(i, j) = -(fv(i + 1, j) - fv(i, j)) * ih;
  return a;
}

// div A = dx A1 + dy A2 at Omega-tilde cell centers.
inline CellField divergence(const Domain& d, const VectorField& a) {
  CellField f(d);
  double ih = 1.0 / d.h;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_tilde(i, j))
        f.c(i, j) = (a.x(i + 1, j) - a.x(i, j)) * ih + (a.y(i, j + 1) - a.y(i, j)) * ih;
  return f;
}

// Discrete gradient of a cell scalar, on interior faces of the region.
inline VectorField grad_cells(const Domain& d, const CellField& t, bool tilde = true) {
  VectorField g(d);
  double ih = 1.0 / d.h;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (tilde ? d.xface_tilde(i, j) : d.xface_omega(i, j))
        g.x(i, j) = (t.c(i, j) - t.c(i - 1, j)) * ih;
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (tilde ? d.yface_tilde(i, j) : d.yface_omega(i, j))
        g.y(i, j) = (t.c(i, j) - t.c(i, j - 1)) * ih;
  return g;
}

// Unit-modulus phase per Omega-interior face: U = exp(-i h A_face),
// the midpoint rule for exp(-i int A.dl) between adjacent cell centers.
struct LinkPhases {
  Grid2<cd> ux, uy;
  LinkPhases() = default;
  explicit LinkPhases(const Domain& d)
      : ux(d.nx + 1, d.ny, cd(1, 0)), uy(d.nx, d.ny + 1, cd(1, 0)) {}
};

inline LinkPhases build_links(const Domain& d, const VectorField& a) {
  LinkPhases l(d);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.xface_omega(i, j)) l.ux(i, j) = std::polar(1.0, -d.h * a.x(i, j));
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.yface_omega(i, j)) l.uy(i, j) = std::polar(1.0, -d.h * a.y(i, j));
  return l;
}

// Covariant derivative per face: D_f u = (U_f u_head - u_tail)/h, stored as
// a complex pair on the face grids (zero on non-Omega faces).
struct EdgeComplexField {
  Grid2<cd> x, y;
  EdgeComplexField() = default;
  explicit EdgeComplexField(const Domain& d)
      : x(d.nx + 1, d.ny, cd(0, 0)), y(d.nx, d.ny + 1, cd(0, 0)) {}
};

inline EdgeComplexField covariant_derivative(const Domain& d, const ComplexField& u,
                                             const LinkPhases& l) {
  EdgeComplexField D(d);
  double ih = 1.0 / d.h;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.xface_omega(i, j)) D.x(i, j) = (l.ux(i, j) * u.c(i, j) - u.c(i - 1, j)) * ih;
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.yface_omega(i, j)) D.y(i, j) = (l.uy(i, j) * u.c(i, j) - u.c(i, j - 1)) * ih;
  return D;
}

// Kinetic energy sum_f h^2 |D_f u|^2 over Omega-interior faces.
inline double kinetic_energy(const Domain& d, const ComplexField& u, const LinkPhases& l) {
  double s = 0;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.xface_omega(i, j)) s += std::norm(l.ux(i, j) * u.c(i, j) - u.c(i - 1, j));
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.yface_omega(i, j)) s += std::norm(l.uy(i, j) * u.c(i, j) - u.c(i, j - 1));
  return s;
}

// (1/2pi) sum of H over vertices strictly interior to hole k, weight h^2.
inline double hole_flux(const Domain& d, const VertexField& H, int hole) {
  if (hole < 0 || hole >= d.n_holes) throw std::invalid_argument("unknown hole id");
  double s = 0;
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.vert_hole(i, j) == hole) s += H.v(i, j);
  return s * d.h * d.h / (2 * M_PI);
}

// Gauge transform (u, A) -> (u e^{i theta}, A + grad theta) with a
// single-valued theta on Omega-tilde cells. Exact edge integrals of
// grad theta are the cell-center differences, so the discrete kinetic
// energy is invariant to round-off.
inline void gauge_transform(const Domain& d, ComplexField& u, VectorField& a,
                            const CellField& theta) {
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_omega(i, j)) u.c(i, j) *= std::polar(1.0, theta.c(i, j));
  VectorField g = grad_cells(d, theta, true);
  axpy(a, 1.0, g);
}

}  // namespace gl2d
