#pragma once

// The Neumann magnetic Laplacian on Omega and its lowest eigenpairs.
//
// The operator acts on cell-centered complex fields through link phases on
// Omega-interior faces; faces touching the boundary are simply omitted, which
// is the discrete form of the zero covariant flux (Neumann) condition.  With
// A = 0 this is exactly the 5-point Neumann Laplacian.

#include <Eigen/Dense>
#include <string>

#include "calculus.hpp"
#include "gauge.hpp"

namespace gl2d {

struct MagneticOperator {
  const Domain* dom = nullptr;
  LinkPhases links;
  GaugeData gauge;                 // potential this operator was built from
  std::vector<int> dof_of;         // cell linear index -> dof index or -1
  std::vector<std::pair<int, int>> cell_of;  // dof -> (i, j)
  int n = 0;

  int dof(int i, int j) const { return dof_of[size_t(j) * dom->nx + i]; }

  // y = H x on packed Omega-cell vectors.
  void apply(const std::vector<cd>& x, std::vector<cd>& y) const {
    const Domain& d = *dom;
    double ih2 = 1.0 / (d.h * d.h);
    y.assign(n, cd(0, 0));
    for (int j = 0; j < d.ny; ++j)
      for (int i = 1; i < d.nx; ++i) {
        if (!d.xface_omega(i, j)) continue;
        int t = dof(i - 1, j), h = dof(i, j);
        cd U = links.ux(i, j);
        y[t] += (x[t] - U * x[h]) * ih2;
        y[h] += (x[h] - std::conj(U) * x[t]) * ih2;
      }
    for (int j = 1; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i) {
        if (!d.yface_omega(i, j)) continue;
        int t = dof(i, j - 1), h = dof(i, j);
        cd U = links.uy(i, j);
        y[t] += (x[t] - U * x[h]) * ih2;
        y[h] += (x[h] - std::conj(U) * x[t]) * ih2;
      }
  }

  ComplexField unpack(const std::vector<cd>& x) const {
    ComplexField f(*dom);
    for (int k = 0; k < n; ++k) f.c(cell_of[k].first, cell_of[k].second) = x[k];
    return f;
  }
  std::vector<cd> pack(const ComplexField& f) const {
    std::vector<cd> x(n);
    for (int k = 0; k < n; ++k) x[k] = f.c(cell_of[k].first, cell_of[k].second);
    return x;
  }
};

inline MagneticOperator assemble(const GaugeData& g, const Domain& d) {
  MagneticOperator op;
  op.dom = &d;
  op.links = build_links(d, g.A);
  op.gauge = g;
  op.dof_of.assign(size_t(d.nx) * d.ny, -1);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_omega(i, j)) {
        op.dof_of[size_t(j) * d.nx + i] = op.n++;
        op.cell_of.push_back({i, j});
      }
  return op;
}

namespace detail {

inline cd zdot(const std::vector<cd>& a, const std::vector<cd>& b) {
  cd s(0, 0);
  for (size_t k = 0; k < a.size(); ++k) s += std::conj(a[k]) * b[k];
  return s;
}
inline double znorm(const std::vector<cd>& a) { return std::sqrt(std::real(zdot(a, a))); }
inline void zaxpy(std::vector<cd>& y, cd alpha, const std::vector<cd>& x) {
  for (size_t k = 0; k < y.size(); ++k) y[k] += alpha * x[k];
}
inline void zscal(std::vector<cd>& a, cd s) {
  for (auto& v : a) v *= s;
}

// Conjugate gradients for a Hermitian positive definite operator.
template <class Op>
SolveStats cg_complex(Op&& A, const std::vector<cd>& b, std::vector<cd>& x,
                      double tol, int maxit) {
  std::vector<cd> r(b.size()), p, Ap(b.size());
  A(x, r);
  for (size_t k = 0; k < b.size(); ++k) r[k] = b[k] - r[k];
  p = r;
  double bnorm = znorm(b);
  if (bnorm == 0) {
    x.assign(b.size(), cd(0, 0));
    return {0, 0.0, true};
  }
  double rz = std::real(zdot(r, r));
  SolveStats st{0, std::sqrt(rz) / bnorm, std::sqrt(rz) <= tol * bnorm};
  for (int it = 0; it < maxit && std::sqrt(rz) > tol * bnorm; ++it) {
    A(p, Ap);
    double pAp = std::real(zdot(p, Ap));
    double alpha = rz / pAp;
    zaxpy(x, alpha, p);
    zaxpy(r, -alpha, Ap);
    double rz2 = std::real(zdot(r, r));
    double beta = rz2 / rz;
    rz = rz2;
    for (size_t k = 0; k < p.size(); ++k) p[k] = r[k] + beta * p[k];
    st.iterations = it + 1;
  }
  st.residual = std::sqrt(rz) / bnorm;
  st.converged = st.residual <= tol;
  return st;
}

}  // namespace detail

struct Spectrum {
  std::vector<double> eigenvalues;   // ascending
  std::vector<ComplexField> modes;   // L2-normalized
  std::vector<double> residuals;     // ||(H - lambda) u|| per pair
  int iterations = 0;
  bool converged = false;
  bool near_degenerate = false;

  double lambda1() const { return eigenvalues.at(0); }
  double lambda2() const { return eigenvalues.at(1); }
  double gap() const { return lambda2() - lambda1(); }
  const ComplexField& u1() const { return modes.at(0); }
  bool simple(double rel = 1e-6) const {
    return gap() / std::max(lambda1(), 1.0) > rel;
  }
};

// Lowest k eigenpairs by block inverse iteration on (H + sigma)^{-1} with a
// small fixed regularization sigma (H itself is exactly singular when A = 0),
// subspace orthogonalization, and a small Rayleigh-Ritz rotation per sweep.
inline Spectrum ground_state(const MagneticOperator& op, int k, double tol = 1e-8,
                             int max_outer = 300, uint64_t seed = 1234) {
  if (k < 2) throw std::invalid_argument("ground_state requires k >= 2");
  const Domain& d = *op.dom;
  int nb = std::min(op.n, k + 1);  // one guard vector sharpens the k-th pair
  double sigma = 1e-2;
  double h = d.h;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0, 1);
  std::vector<std::vector<cd>> V(nb, std::vector<cd>(op.n));
  for (auto& v : V)
    for (auto& z : v) z = cd(gauss(rng), gauss(rng));

  auto shifted = [&](const std::vector<cd>& x, std::vector<cd>& y) {
    op.apply(x, y);
    detail::zaxpy(y, sigma, x);
  };

  std::vector<double> theta(nb, 0), resid(nb, 1);
  std::vector<std::vector<cd>> W(nb), HW(nb);
  Spectrum s;
  for (int outer = 0; outer < max_outer; ++outer) {
    // Inverse-iteration sweep.
    for (int i = 0; i < nb; ++i) {
      W[i] = V[i];  // warm start
      double inner_tol = std::clamp(0.01 * resid[i], 1e-12, 1e-4);
      detail::cg_complex(shifted, V[i], W[i], inner_tol, 40 * op.n);
    }
    // Orthonormalize (modified Gram-Schmidt).
    for (int i = 0; i < nb; ++i) {
      for (int j = 0; j < i; ++j) detail::zaxpy(W[i], -detail::zdot(W[j], W[i]), W[j]);
      double nw = detail::znorm(W[i]);
      if (nw < 1e-14) {  // re-seed a collapsed direction
        for (auto& z : W[i]) z = cd(gauss(rng), gauss(rng));
        for (int j = 0; j < i; ++j) detail::zaxpy(W[i], -detail::zdot(W[j], W[i]), W[j]);
        nw = detail::znorm(W[i]);
      }
      detail::zscal(W[i], 1.0 / nw);
    }
    // Rayleigh-Ritz on the block.
    for (int i = 0; i < nb; ++i) {
      HW[i].assign(op.n, cd(0, 0));
      op.apply(W[i], HW[i]);
    }
    Eigen::MatrixXcd S(nb, nb);
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j) S(i, j) = detail::zdot(W[i], HW[j]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(S);
    for (int i = 0; i < nb; ++i) {
      V[i].assign(op.n, cd(0, 0));
      for (int j = 0; j < nb; ++j) detail::zaxpy(V[i], es.eigenvectors()(j, i), W[j]);
      theta[i] = es.eigenvalues()(i);
    }
    // Residuals of the k requested pairs.
    bool done = true;
    std::vector<cd> r(op.n);
    for (int i = 0; i < nb; ++i) {
      op.apply(V[i], r);
      detail::zaxpy(r, -theta[i], V[i]);
      resid[i] = detail::znorm(r);  // packed norm; V[i] has packed norm 1
      if (i < k && resid[i] > tol * std::max(1.0, theta[i])) done = false;
    }
    s.iterations = outer + 1;
    if (done) {
      s.converged = true;
      break;
    }
  }
  if (!s.converged) {
    std::string msg = "eigensolver did not converge; residuals:";
    for (int i = 0; i < k; ++i) msg += " " + std::to_string(resid[i]);
    throw std::runtime_error(msg);
  }
  for (int i = 0; i < k; ++i) {
    s.eigenvalues.push_back(theta[i]);
    std::vector<cd> v = V[i];
    detail::zscal(v, 1.0 / h);  // packed norm 1 -> L2 norm 1 (L2 = h * packed)
    s.modes.push_back(op.unpack(v));
    s.residuals.push_back(resid[i]);
  }
  s.near_degenerate = !s.simple();
  return s;
}

// Dense full diagonalization; test oracle for small grids only.
inline std::vector<double> dense_spectrum(const MagneticOperator& op,
                                          std::vector<ComplexField>* modes = nullptr) {
  if (op.n > 2500) throw std::invalid_argument("dense_spectrum: grid too large");
  Eigen::MatrixXcd M(op.n, op.n);
  std::vector<cd> e(op.n, cd(0, 0)), col(op.n);
  for (int j = 0; j < op.n; ++j) {
    e[j] = 1;
    op.apply(e, col);
    e[j] = 0;
    for (int i = 0; i < op.n; ++i) M(i, j) = col[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M);
  std::vector<double> evals(op.n);
  for (int i = 0; i < op.n; ++i) evals[i] = es.eigenvalues()(i);
  if (modes) {
    modes->clear();
    for (int i = 0; i < op.n; ++i) {
      std::vector<cd> v(op.n);
      for (int r = 0; r < op.n; ++r) v[r] = es.eigenvectors()(r, i) / op.dom->h;
      modes->push_back(op.unpack(v));
    }
  }
  return evals;
}

struct FluxPrediction {
  bool positive = false;   // predicted lambda1 > 0
  std::string reason;
};

// lambda1 > 0 iff the field is nonzero somewhere in Omega or some hole
// carries non-integer circulation.
inline FluxPrediction flux_criterion(const GaugeData& g, const ExternalField& H,
                                     const Domain& d) {
  if (!field_zero_on_omega(d, H.H, 1e-10)) return {true, "field in Omega"};
  for (size_t k = 0; k < g.hole_fluxes.size(); ++k) {
    double f = g.hole_fluxes[k];
    if (std::abs(f - std::round(f)) > 1e-6)
      return {true, "non-integer circulation around hole " + std::to_string(k)};
  }
  return {false, "no field in Omega and integer hole circulations"};
}

}  // namespace gl2d
