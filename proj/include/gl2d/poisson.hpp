#pragma once

// Krylov solvers (CG, MINRES) over packed dof vectors, and the two Poisson
// problems used throughout: the Dirichlet vertex Laplacian on Omega-tilde
// and the Neumann cell Laplacian on a region.

#include <functional>

#include "calculus.hpp"

namespace gl2d {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline void axpy(Vec& y, double a, const Vec& x) {
  for (size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}
inline void scal(Vec& x, double a) {
  for (auto& v : x) v *= a;
}
inline double nrm2(const Vec& x) { return std::sqrt(dot(x, x)); }

struct SolveStats {
  int iterations = 0;
  double residual = 0;   // final relative residual
  bool converged = false;
};

using LinOp = std::function<void(const Vec&, Vec&)>;

// Preconditioned conjugate gradients for SPD (or consistent PSD) systems.
inline SolveStats cg(const LinOp& A, const Vec& b, Vec& x, double tol, int maxit,
                     const LinOp& M = nullptr) {
  size_t n = b.size();
  Vec r(n), z(n), p(n), Ap(n);
  A(x, Ap);
  for (size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
  double bnorm = nrm2(b);
  if (bnorm == 0) bnorm = 1;
  SolveStats st;
  if (M) M(r, z); else z = r;
  p = z;
  double rz = dot(r, z);
  for (int it = 0; it < maxit; ++it) {
    double rn = nrm2(r);
    st.iterations = it;
    st.residual = rn / bnorm;
    if (rn <= tol * bnorm) {
      st.converged = true;
      return st;
    }
    A(p, Ap);
    double pAp = dot(p, Ap);
    if (pAp <= 0) break;  // lost positivity (round-off on PSD systems)
    double alpha = rz / pAp;
    axpy(x, alpha, p);
    axpy(r, -alpha, Ap);
    if (M) M(r, z); else z = r;
    double rz_new = dot(r, z);
    double beta = rz_new / rz;
    rz = rz_new;
    for (size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  st.residual = nrm2(r) / bnorm;
  st.converged = st.residual <= tol;
  return st;
}

// MINRES for symmetric (possibly indefinite) systems.
inline SolveStats minres(const LinOp& A, const Vec& b, Vec& x, double tol, int maxit) {
  size_t n = b.size();
  Vec r(n), Ax(n);
  A(x, Ax);
  for (size_t i = 0; i < n; ++i) r[i] = b[i] - Ax[i];
  double beta = nrm2(r);
  double bnorm = nrm2(b);
  if (bnorm == 0) bnorm = 1;
  SolveStats st;
  if (beta <= tol * bnorm) {
    st.converged = true;
    return st;
  }
  Vec v_old(n, 0.0), v(n), w(n, 0.0), w_old(n, 0.0), Av(n);
  v = r;
  scal(v, 1.0 / beta);
  double eta = beta, c_old = 1, c = 1, s_old = 0, s = 0, beta_old = beta;
  double res = beta;
  for (int it = 1; it <= maxit; ++it) {
    A(v, Av);
    double alpha = dot(v, Av);
    for (size_t i = 0; i < n; ++i) Av[i] -= alpha * v[i] + beta_old * v_old[i];
    double beta_new = nrm2(Av);
    // Givens rotations
    double delta = c * alpha - c_old * s * beta_old;
    double rho1 = std::sqrt(delta * delta + beta_new * beta_new);
    double rho2 = s * alpha + c_old * c * beta_old;
    double rho3 = s_old * beta_old;
    if (rho1 == 0) break;
    double c_new = delta / rho1, s_new = beta_new / rho1;
    Vec w_new(n);
    for (size_t i = 0; i < n; ++i)
      w_new[i] = (v[i] - rho2 * w[i] - rho3 * w_old[i]) / rho1;
    axpy(x, c_new * eta, w_new);
    res *= std::abs(s_new);
    st.iterations = it;
    st.residual = res / bnorm;
    if (res <= tol * bnorm) {
      st.converged = true;
      return st;
    }
    eta *= -s_new;
    v_old = v;
    v = Av;
    if (beta_new > 0) scal(v, 1.0 / beta_new);
    w_old = w;
    w = w_new;
    c_old = c; s_old = s; c = c_new; s = s_new;
    beta_old = beta_new;
  }
  st.converged = st.residual <= tol;
  return st;
}

// ---------------------------------------------------------------------------
// Dirichlet vertex Poisson on Omega-tilde: -Lap psi = b at interior vertices,
// psi = 0 elsewhere.

struct VertexPoisson {
  const Domain* d;
  std::vector<std::pair<int, int>> dofs;  // interior vertices
  Grid2<int> index;
  double tol = 1e-12;
  int maxit = 200000;

  explicit VertexPoisson(const Domain& dom) : d(&dom), index(dom.nx + 1, dom.ny + 1, -1) {
    for (int j = 0; j <= d->ny; ++j)
      for (int i = 0; i <= d->nx; ++i)
        if (d->vert_tilde(i, j)) {
          index(i, j) = (int)dofs.size();
          dofs.push_back({i, j});
        }
  }

  Vec pack(const VertexField& f) const {
    Vec x(dofs.size());
    for (size_t k = 0; k < dofs.size(); ++k) x[k] = f.v(dofs[k].first, dofs[k].second);
    return x;
  }
  VertexField unpack(const Vec& x) const {
    VertexField f(*d);
    for (size_t k = 0; k < dofs.size(); ++k) f.v(dofs[k].first, dofs[k].second) = x[k];
    return f;
  }

  // y = -Lap x with zero Dirichlet values outside the dof set.
  void apply(const Vec& x, Vec& y) const {
    double ih2 = 1.0 / (d->h * d->h);
    for (size_t k = 0; k < dofs.size(); ++k) {
      auto [i, j] = dofs[k];
      double c = x[k], s = 4.0 * c;
      const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
      for (int t = 0; t < 4; ++t) {
        int ni = i + di[t], nj = j + dj[t];
        int idx = (ni < 0 || nj < 0 || ni > d->nx || nj > d->ny) ? -1 : index(ni, nj);
        if (idx >= 0) s -= x[idx];
      }
      y[k] = s * ih2;
    }
  }

  // Solve -Lap psi = b.
  VertexField solve(const VertexField& b, SolveStats* stats = nullptr) const {
    Vec rhs = pack(b), x(rhs.size(), 0.0);
    auto A = [this](const Vec& in, Vec& out) { apply(in, out); };
    auto st = cg(A, rhs, x, tol, maxit);
    if (stats) *stats = st;
    if (!st.converged) throw std::runtime_error("Dirichlet Poisson solve failed to converge");
    return unpack(x);
  }
};

// ---------------------------------------------------------------------------
// Neumann cell Poisson on a region: Lap theta = rhs with zero flux through
// boundary faces; null space (constants) fixed by the zero-mean constraint.

struct CellPoisson {
  const Domain* d;
  bool tilde;
  std::vector<std::pair<int, int>> dofs;
  Grid2<int> index;
  double tol = 1e-12;
  int maxit = 200000;

  CellPoisson(const Domain& dom, bool on_tilde) : d(&dom), tilde(on_tilde), index(dom.nx, dom.ny, -1) {
    for (int j = 0; j < d->ny; ++j)
      for (int i = 0; i < d->nx; ++i)
        if (tilde ? d->in_tilde(i, j) : d->in_omega(i, j)) {
          index(i, j) = (int)dofs.size();
          dofs.push_back({i, j});
        }
  }

  Vec pack(const CellField& f) const {
    Vec x(dofs.size());
    for (size_t k = 0; k < dofs.size(); ++k) x[k] = f.c(dofs[k].first, dofs[k].second);
    return x;
  }
  CellField unpack(const Vec& x) const {
    CellField f(*d);
    for (size_t k = 0; k < dofs.size(); ++k) f.c(dofs[k].first, dofs[k].second) = x[k];
    return f;
  }

  void project_mean(Vec& x) const {
    double m = 0;
    for (double v : x) m += v;
    m /= x.size();
    for (double& v : x) v -= m;
  }

  // y = -Lap_N x (only interior-face fluxes contribute).
  void apply(const Vec& x, Vec& y) const {
    double ih2 = 1.0 / (d->h * d->h);
    for (size_t k = 0; k < dofs.size(); ++k) {
      auto [i, j] = dofs[k];
      double s = 0;
      const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
      for (int t = 0; t < 4; ++t) {
        int ni = i + di[t], nj = j + dj[t];
        int idx = (ni < 0 || nj < 0 || ni >= d->nx || nj >= d->ny) ? -1 : index(ni, nj);
        if (idx >= 0) s += x[k] - x[idx];
      }
      y[k] = s * ih2;
    }
  }

  // Solve -Lap_N theta = b (b projected to zero mean), zero-mean solution.
  CellField solve(const CellField& b, SolveStats* stats = nullptr) const {
    Vec rhs = pack(b), x(rhs.size(), 0.0);
    project_mean(rhs);
    auto A = [this](const Vec& in, Vec& out) {
      apply(in, out);
    };
    auto st = cg(A, rhs, x, tol, maxit);
    project_mean(x);
    if (stats) *stats = st;
    if (!st.converged) throw std::runtime_error("Neumann Poisson solve failed to converge");
    return unpack(x);
  }
};

}  // namespace gl2d
