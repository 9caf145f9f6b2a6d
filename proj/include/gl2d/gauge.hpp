#pragma once

// External potentials and gauge fixing. All potentials live on Omega-tilde;
// the Coulomb representative is built through a vertex stream function
// (a = rot* psi, -Lap psi = H, psi = 0 on the boundary), which makes
// div a = 0 and a.nu = 0 exact in the discrete calculus.

#include "poisson.hpp"

namespace gl2d {

enum class FieldProfile { None, UniformInHoles, Uniform, Ring, Custom };

struct ExternalField {
  VertexField H;
  FieldProfile profile = FieldProfile::None;
  std::vector<double> hole_flux_targets;  // UniformInHoles: flux/2pi per hole
  double amplitude = 0;                   // Uniform / Ring
  ExternalField() = default;
  explicit ExternalField(const Domain& d) : H(d) {}
};

// H = 0 everywhere.
inline ExternalField field_none(const Domain& d) {
  ExternalField f(d);
  return f;
}

// Uniform value on the strict interior vertices of each hole, normalized so
// the quadrature flux (1/2pi) h^2 sum H equals the requested value exactly.
inline ExternalField field_uniform_in_holes(const Domain& d, const std::vector<double>& fluxes) {
  if ((int)fluxes.size() != d.n_holes)
    throw std::invalid_argument("one flux value per hole required");
  ExternalField f(d);
  f.profile = FieldProfile::UniformInHoles;
  f.hole_flux_targets = fluxes;
  std::vector<long> counts(d.n_holes, 0);
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.vert_hole(i, j) >= 0) ++counts[d.vert_hole(i, j)];
  for (int k = 0; k < d.n_holes; ++k)
    if (counts[k] == 0)
      throw std::invalid_argument("hole " + std::to_string(k) + " has no interior vertices at this resolution");
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i) {
      int k = d.vert_hole(i, j);
      if (k >= 0) f.H.v(i, j) = 2 * M_PI * fluxes[k] / (counts[k] * d.h * d.h);
    }
  return f;
}

// H = h0 at every Omega-tilde interior vertex.
inline ExternalField field_uniform(const Domain& d, double h0) {
  ExternalField f(d);
  f.profile = FieldProfile::Uniform;
  f.amplitude = h0;
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.vert_tilde(i, j)) f.H.v(i, j) = h0;
  return f;
}

// H = h0 on an annular ring r0 < |x| < r1 (vertex positions).
inline ExternalField field_ring(const Domain& d, double h0, double r0, double r1) {
  ExternalField f(d);
  f.profile = FieldProfile::Ring;
  f.amplitude = h0;
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i) {
      if (!d.vert_tilde(i, j)) continue;
      double r = std::hypot(d.vert_x(i), d.vert_y(j));
      if (r > r0 && r < r1) f.H.v(i, j) = h0;
    }
  return f;
}

// True if H vanishes on every vertex touching an Omega cell.
inline bool field_zero_on_omega(const Domain& d, const VertexField& H, double tol = 1e-10) {
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i) {
      bool touches_omega = false;
      for (int dj = -1; dj <= 0; ++dj)
        for (int di = -1; di <= 0; ++di)
          touches_omega |= d.cell_label(i + di, j + dj) == CELL_OMEGA;
      if (touches_omega && std::abs(H.v(i, j)) > tol) return false;
    }
  return true;
}

struct GaugeData {
  VectorField A;                    // external potential A_e on Omega-tilde
  std::vector<double> hole_fluxes;  // circulation / 2pi per hole
  double div_residual = 0;          // ||div A||_L2
  double normal_residual = 0;       // max |A.nu| over boundary faces of Omega-tilde
  double curl_residual = 0;         // relative solver residual of rot A = H
};

inline std::vector<double> hole_fluxes_of(const Domain& d, const VertexField& H) {
  std::vector<double> f(d.n_holes);
  for (int k = 0; k < d.n_holes; ++k) f[k] = hole_flux(d, H, k);
  return f;
}

inline double max_boundary_normal(const Domain& d, const VectorField& a) {
  double m = 0;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.in_tilde(i - 1, j) != d.in_tilde(i, j)) m = std::max(m, std::abs(a.x(i, j)));
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_tilde(i, j - 1) != d.in_tilde(i, j)) m = std::max(m, std::abs(a.y(i, j)));
  return m;
}

inline GaugeData gauge_from_potential(const Domain& d, const VectorField& a,
                                      const VertexField& H) {
  GaugeData g;
  g.A = a;
  g.hole_fluxes = hole_fluxes_of(d, H);
  CellField div = divergence(d, a);
  double s = 0;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_tilde(i, j)) s += div.c(i, j) * div.c(i, j);
  g.div_residual = std::sqrt(s * d.h * d.h);
  g.normal_residual = max_boundary_normal(d, a);
  VertexField r = curl(d, a);
  double num = 0, den = 0, w = d.h * d.h;
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.vert_tilde(i, j)) {
        double e = r.v(i, j) - H.v(i, j);
        num += e * e * w;
        den += H.v(i, j) * H.v(i, j) * w;
      }
  g.curl_residual = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
  return g;
}

// rot A_e = H_e, div A_e = 0, A_e.nu = 0 on the boundary of Omega-tilde.
inline GaugeData external_potential(const Domain& d, const ExternalField& H) {
  VertexPoisson pois(d);
  VertexField psi = pois.solve(H.H);
  VectorField a = curl_adjoint(d, psi);
  return gauge_from_potential(d, a, H.H);
}

// Solve rot a = b, div a = 0, a.nu = 0 on Omega-tilde (stream-function form).
inline VectorField curl_inverse(const Domain& d, const VertexField& b) {
  VertexPoisson pois(d);
  return curl_adjoint(d, pois.solve(b));
}

// Coulomb projection: zero the boundary normal components, then add the
// gradient of the Neumann solve of Lap theta = -div A. Curl is preserved on
// interior vertices exactly.
inline VectorField coulomb_project(const Domain& d, const VectorField& a_in,
                                   bool tilde = true) {
  VectorField a = a_in;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i) {
      bool in = tilde ? d.xface_tilde(i, j) : d.xface_omega(i, j);
      if (!in) a.x(i, j) = 0;
    }
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) {
      bool in = tilde ? d.yface_tilde(i, j) : d.yface_omega(i, j);
      if (!in) a.y(i, j) = 0;
    }
  CellPoisson pois(d, tilde);
  CellField div = divergence(d, a);
  // -Lap theta = div a  =>  div(a + grad theta) = 0
  CellField theta = pois.solve(div);
  VectorField g = grad_cells(d, theta, tilde);
  axpy(a, 1.0, g);
  return a;
}

// Transversal gauge for a vertex field b supported outside the disk
// (cx,cy,r): a1 = -y int_0^1 s b(s x) ds, a2 = x int_0^1 s b(s x) ds, with
// the ray integral taken from the disk center by composite Simpson rule on
// a bilinear interpolant of b.
inline double interp_vertex(const Domain& d, const VertexField& b, double x, double y) {
  double fx = (x - d.x0) / d.h, fy = (y - d.y0) / d.h;
  int i = (int)std::floor(fx), j = (int)std::floor(fy);
  i = std::clamp(i, 0, d.nx - 1);
  j = std::clamp(j, 0, d.ny - 1);
  double tx = fx - i, ty = fy - j;
  auto val = [&](int ii, int jj) {
    if (ii < 0 || jj < 0 || ii > d.nx || jj > d.ny) return 0.0;
    return b.v(ii, jj);
  };
  return (1 - tx) * (1 - ty) * val(i, j) + tx * (1 - ty) * val(i + 1, j) +
         (1 - tx) * ty * val(i, j + 1) + tx * ty * val(i + 1, j + 1);
}

inline VectorField transversal_gauge(const Domain& d, const VertexField& b,
                                     double cx, double cy, double r,
                                     bool check_support = true) {
  if (check_support) {
    for (int j = 0; j <= d.ny; ++j)
      for (int i = 0; i <= d.nx; ++i) {
        double dx = d.vert_x(i) - cx, dy = d.vert_y(j) - cy;
        if (dx * dx + dy * dy < r * r && std::abs(b.v(i, j)) > 1e-12)
          throw std::invalid_argument("field is nonzero inside the excluded disk");
      }
  }
  int nseg = 4 * std::max(d.nx, d.ny);  // Simpson panels along the ray
  auto ray_integral = [&](double x, double y) {
    double s = 0, ds = 1.0 / nseg;
    for (int k = 0; k < nseg; ++k) {
      double s0 = k * ds, s1 = (k + 0.5) * ds, s2 = (k + 1) * ds;
      double f0 = s0 * interp_vertex(d, b, cx + s0 * x, cy + s0 * y);
      double f1 = s1 * interp_vertex(d, b, cx + s1 * x, cy + s1 * y);
      double f2 = s2 * interp_vertex(d, b, cx + s2 * x, cy + s2 * y);
      s += ds / 6.0 * (f0 + 4 * f1 + f2);
    }
    return s;
  };
  VectorField a(d);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i) {
      if (!d.xface_tilde(i, j)) continue;
      double x = d.vert_x(i) - cx, y = d.cell_y(j) - cy;
      a.x(i, j) = -y * ray_integral(x, y);
    }
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) {
      if (!d.yface_tilde(i, j)) continue;
      double x = d.cell_x(i) - cx, y = d.vert_y(j) - cy;
      a.y(i, j) = x * ray_integral(x, y);
    }
  return a;
}

// Least-squares stream function of a slice field: -Lap psi = rot a; exact
// when a is divergence free with zero boundary normal component.
inline VertexField stream_of(const Domain& d, const VectorField& a) {
  VertexPoisson pois(d);
  return pois.solve(curl(d, a));
}

}  // namespace gl2d
