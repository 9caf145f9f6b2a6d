#pragma once

// Field containers on the staggered grid: complex order parameter at cell
// centers, real vector fields on faces, real scalars at cell centers or
// vertices. Norms and inner products use the grid quadrature weight h^2.

#include <complex>
#include <fstream>
#include <random>

#include "grid.hpp"

namespace gl2d {

using cd = std::complex<double>;

// Complex samples at cell centers; meaningful on Omega cells, zero elsewhere.
struct ComplexField {
  Grid2<cd> c;
  ComplexField() = default;
  explicit ComplexField(const Domain& d) : c(d.nx, d.ny, cd(0, 0)) {}
};

// Real vector field: x-component on x-faces, y-component on y-faces.
struct VectorField {
  Grid2<double> x, y;
  VectorField() = default;
  explicit VectorField(const Domain& d)
      : x(d.nx + 1, d.ny, 0.0), y(d.nx, d.ny + 1, 0.0) {}
};

// Real scalar at cell centers (divergence, gauge functions).
struct CellField {
  Grid2<double> c;
  CellField() = default;
  explicit CellField(const Domain& d) : c(d.nx, d.ny, 0.0) {}
};

// Real scalar at grid vertices (magnetic field, curl, stream functions).
struct VertexField {
  Grid2<double> v;
  VertexField() = default;
  explicit VertexField(const Domain& d) : v(d.nx + 1, d.ny + 1, 0.0) {}
};

inline cd inner(const Domain& d, const ComplexField& a, const ComplexField& b) {
  cd s(0, 0);
  double w = d.h * d.h;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_omega(i, j)) s += std::conj(a.c(i, j)) * b.c(i, j);
  return s * w;
}

inline double norm2(const Domain& d, const ComplexField& a) {
  return std::real(inner(d, a, a));
}

inline double max_modulus(const Domain& d, const ComplexField& a) {
  double m = 0;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_omega(i, j)) m = std::max(m, std::abs(a.c(i, j)));
  return m;
}

// L2 inner product of vector fields over Omega-tilde interior faces.
inline double inner(const Domain& d, const VectorField& a, const VectorField& b) {
  double s = 0, w = d.h * d.h;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.xface_tilde(i, j)) s += a.x(i, j) * b.x(i, j);
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.yface_tilde(i, j)) s += a.y(i, j) * b.y(i, j);
  return s * w;
}

inline double norm2(const Domain& d, const VectorField& a) {
  return inner(d, a, a);
}

// L2 inner product of vertex fields over Omega-tilde interior vertices.
inline double inner(const Domain& d, const VertexField& a, const VertexField& b) {
  double s = 0, w = d.h * d.h;
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.vert_tilde(i, j)) s += a.v(i, j) * b.v(i, j);
  return s * w;
}

inline double norm2(const Domain& d, const VertexField& a) {
  return inner(d, a, a);
}

inline void scale(ComplexField& a, cd s) {
  for (auto& z : a.c.v) z *= s;
}

inline void axpy(ComplexField& y, cd alpha, const ComplexField& x) {
  for (size_t k = 0; k < y.c.v.size(); ++k) y.c.v[k] += alpha * x.c.v[k];
}

inline void axpy(VectorField& y, double alpha, const VectorField& x) {
  for (size_t k = 0; k < y.x.v.size(); ++k) y.x.v[k] += alpha * x.x.v[k];
  for (size_t k = 0; k < y.y.v.size(); ++k) y.y.v[k] += alpha * x.y.v[k];
}

inline ComplexField random_field(const Domain& d, uint64_t seed) {
  ComplexField u(d);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_omega(i, j)) u.c(i, j) = cd(dist(rng), dist(rng));
  return u;
}

// CSV exports: x, y, value columns, row order fixed for reproducibility.
inline void write_csv(const Domain& d, const ComplexField& u, const std::string& path) {
  std::ofstream f(path);
  f.precision(17);
  f << "x,y,re,im\n";
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_omega(i, j))
        f << d.cell_x(i) << ',' << d.cell_y(j) << ','
          << u.c(i, j).real() << ',' << u.c(i, j).imag() << '\n';
}

inline void write_csv(const Domain& d, const VectorField& a, const std::string& path) {
  std::ofstream f(path);
  f.precision(17);
  f << "x,y,component,value\n";
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.xface_tilde(i, j))
        f << d.vert_x(i) << ',' << d.cell_y(j) << ",1," << a.x(i, j) << '\n';
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.yface_tilde(i, j))
        f << d.cell_x(i) << ',' << d.vert_y(j) << ",2," << a.y(i, j) << '\n';
}

inline void write_csv(const Domain& d, const VertexField& b, const std::string& path) {
  std::ofstream f(path);
  f.precision(17);
  f << "x,y,value\n";
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.vert_tilde(i, j))
        f << d.vert_x(i) << ',' << d.vert_y(j) << ',' << b.v(i, j) << '\n';
}

}  // namespace gl2d
