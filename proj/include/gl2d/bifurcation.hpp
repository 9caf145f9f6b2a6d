#pragma once

// Expansion data at the first Neumann eigenvalue of the covariant Laplacian
// and numerical continuation of the branch of condensed solutions that
// bifurcates there: supercurrent, induced-field response, the quartic energy
// coefficients, the third-order corrector, Newton tracing of the branch, and
// second-variation stability verdicts.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "functional.hpp"
#include "spectra.hpp"

namespace gl2d {

// Gauge-covariant supercurrent Im(conj(u) (grad - iA) u) sampled on faces,
// zero outside the sample region so the curl inversion sees the extension.
inline VectorField supercurrent(const Domain& d, const ComplexField& u,
                                const GaugeData& g) {
  return supercurrent_links(d, u, build_links(d, g.A));
}

// Solve L b = J in the divergence-free slice: with b = curl* chi the normal
// equation reduces to (-Lap)^2 chi = curl J, i.e. two Dirichlet Poisson
// solves. The result is exactly divergence-free and tangential.
inline VectorField field_response(const Domain& d, const VectorField& J) {
  VertexPoisson vp(d);
  VertexField chi = vp.solve(vp.solve(curl(d, J)));
  return curl_adjoint(d, chi);
}

// Exact derivative of the covariant operator with respect to the potential:
// y = d/dt (-Lap_{A+tb} u) at t = 0. Continuum limit 2i b.(grad - iA)u for
// divergence-free b.
inline ComplexField potential_derivative_apply(const Domain& d,
                                               const LinkPhases& l,
                                               const VectorField& b,
                                               const ComplexField& u) {
  ComplexField y(d);
  cd I(0, 1);
  double ih = 1.0 / d.h;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 1; i < d.nx; ++i) {
      if (!d.xface_omega(i, j)) continue;
      cd U = l.ux(i, j);
      y.c(i - 1, j) += I * b.x(i, j) * ih * U * u.c(i, j);
      y.c(i, j) += -I * b.x(i, j) * ih * std::conj(U) * u.c(i - 1, j);
    }
  for (int j = 1; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) {
      if (!d.yface_omega(i, j)) continue;
      cd U = l.uy(i, j);
      y.c(i, j - 1) += I * b.y(i, j) * ih * U * u.c(i, j);
      y.c(i, j) += -I * b.y(i, j) * ih * std::conj(U) * u.c(i, j - 1);
    }
  return y;
}

// Reduced resolvent: w = (H - lambda1)^{-1} f restricted to the orthogonal
// complement of u1, with R0 u1 = 0 enforced by projection.
inline ComplexField reduced_resolvent(const MagneticOperator& op, double lambda1,
                                      const ComplexField& u1, const ComplexField& f,
                                      double tol = 1e-11) {
  const Domain& d = *op.dom;
  double h2 = d.h * d.h;
  std::vector<cd> pu1 = op.pack(u1);
  auto project = [&](std::vector<cd>& x) {
    cd ip = detail::zdot(pu1, x) * h2;
    detail::zaxpy(x, -ip, pu1);
  };
  std::vector<cd> rhs = op.pack(f);
  project(rhs);
  auto A = [&](const std::vector<cd>& x, std::vector<cd>& y) {
    op.apply(x, y);
    detail::zaxpy(y, -lambda1, x);
    project(y);
  };
  std::vector<cd> w(rhs.size(), cd(0, 0));
  auto st = detail::cg_complex(A, rhs, w, tol, 200000);
  if (!st.converged)
    throw std::runtime_error("reduced resolvent solve did not converge");
  project(w);
  return op.unpack(w);
}

struct BifurcationCoefficients {
  double lambda1 = 0;
  double kappa = 0;
  double I0 = 0;          // integral of |u1|^4
  VectorField J1;         // supercurrent of u1
  VectorField b2;         // induced-field response L^{-1} J1
  VectorField a2;         // (lambda1/kappa^2) b2
  double K0 = 0;          // <L^{-1} J1, J1>
  double K0_pairing = 0;  // same constant from the current-potential pairing
  double K0_imag = 0;     // imaginary part of the pairing (vanishes)
  double c_kappa = 0;     // lambda1 (I0 - 2 K0 / kappa^2)
  double kappa_c = 0;     // sqrt(2 K0 / I0)
  ComplexField u1;
  ComplexField u3;        // third-order corrector, orthogonal to u1
};

inline BifurcationCoefficients coefficients(const Domain& d, const Spectrum& sp,
                                            const GaugeData& g,
                                            const GLParameters& p) {
  if (sp.near_degenerate || !sp.simple())
    throw std::invalid_argument(
        "ground eigenvalue is not simple; the expansion is undefined");
  BifurcationCoefficients c;
  c.lambda1 = sp.lambda1();
  c.kappa = p.kappa;
  c.u1 = sp.u1();

  double h2 = d.h * d.h;
  c.I0 = 0;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_omega(i, j)) {
        double m = std::norm(c.u1.c(i, j));
        c.I0 += m * m;
      }
  c.I0 *= h2;
  if (c.I0 <= 0) throw std::runtime_error("vanishing quartic norm of the ground mode");

  MagneticOperator op = assemble(g, d);
  c.J1 = supercurrent_links(d, c.u1, op.links);
  c.b2 = field_response(d, c.J1);
  c.a2 = c.b2;
  double s = c.lambda1 / (p.kappa * p.kappa);
  for (auto& v : c.a2.x.v) v *= s;
  for (auto& v : c.a2.y.v) v *= s;

  // First formula: quadratic form of the inverse response operator.
  c.K0 = inner(d, c.b2, c.J1);

  // Second formula: -<i b2.(grad - iA_e)u1, u1> with the symmetric
  // face-average pairing; the imaginary part vanishes because b2 is
  // divergence-free.
  {
    cd acc(0, 0);
    cd I(0, 1);
    double ih = 1.0 / d.h;
    auto face = [&](double b, cd U, cd ut, cd uh) {
      cd Du = (U * uh - ut) * ih;
      cd uavg = 0.5 * (ut + U * uh);
      acc += -I * b * Du * std::conj(uavg);
    };
    for (int j = 0; j < d.ny; ++j)
      for (int i = 1; i < d.nx; ++i)
        if (d.xface_omega(i, j))
          face(c.b2.x(i, j), op.links.ux(i, j), c.u1.c(i - 1, j), c.u1.c(i, j));
    for (int j = 1; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i)
        if (d.yface_omega(i, j))
          face(c.b2.y(i, j), op.links.uy(i, j), c.u1.c(i, j - 1), c.u1.c(i, j));
    acc *= h2;
    c.K0_pairing = acc.real();
    c.K0_imag = acc.imag();
  }
  if (c.K0 < -1e-12)
    throw std::runtime_error("negative response quadratic form");

  c.c_kappa = c.lambda1 * (c.I0 - 2.0 * c.K0 / (p.kappa * p.kappa));
  c.kappa_c = c.K0 <= 0 ? 0.0 : std::sqrt(2.0 * c.K0 / c.I0);

  // Third-order corrector from the cubic-order balance of the order-parameter
  // equation: (H - lambda1) u3 = c u1 - lambda1 |u1|^2 u1 - M1(a2) u1, solved
  // on the complement of u1 (the u1 component fixes c and drops out).
  ComplexField rhs(d);
  ComplexField m1 = potential_derivative_apply(d, op.links, c.a2, c.u1);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_omega(i, j))
        rhs.c(i, j) = -c.lambda1 * std::norm(c.u1.c(i, j)) * c.u1.c(i, j) - m1.c(i, j);
  c.u3 = reduced_resolvent(op, c.lambda1, c.u1, rhs);
  return c;
}

// Leading quartic term of the energy along the branch.
inline double branch_energy(const BifurcationCoefficients& c, double alpha,
                            const GLParameters& p) {
  double a2 = alpha * alpha;
  return -a2 * a2 * 0.5 * c.lambda1 *
         (c.I0 - 2.0 * c.K0 / (p.kappa * p.kappa));
}

// Coupling threshold at which the branch energy changes sign.
inline double kappa_c(const BifurcationCoefficients& c) {
  if (c.I0 <= 0) throw std::runtime_error("vanishing quartic norm");
  return c.K0 <= 0 ? 0.0 : std::sqrt(2.0 * c.K0 / c.I0);
}

// Predictor state for amplitude alpha: (alpha u1 + alpha^3 u3, alpha^2 a2)
// at lambda(alpha) = lambda1 + c alpha^2.
inline GLState predictor_state(const Domain& d, const BifurcationCoefficients& c,
                               const GaugeData& g, double alpha, double* lambda_out) {
  GLState s = normal_state(d, g);
  double a3 = alpha * alpha * alpha;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_omega(i, j))
        s.u.c(i, j) = alpha * c.u1.c(i, j) + a3 * c.u3.c(i, j);
  double a2 = alpha * alpha;
  s.a = c.a2;
  for (auto& v : s.a.x.v) v *= a2;
  for (auto& v : s.a.y.v) v *= a2;
  if (lambda_out) *lambda_out = c.lambda1 + c.c_kappa * a2;
  return s;
}

struct BranchSample {
  double alpha = 0;
  double lambda = 0;
  double energy = 0;
  double newton_residual = 0;
  bool ok = false;
  GLState state;
};

struct Branch {
  std::vector<BranchSample> samples;
  double fit_c = 0;  // slope of (lambda - lambda1) against alpha^2
};

struct BranchOptions {
  double residual_tol = 1e-9;
  int max_newton = 30;
  double linear_tol = 1e-11;  // floor for the inner solve tolerance
  int linear_maxit = 30000;
};

// Newton continuation of the bifurcating branch: unknowns (u, a, lambda)
// restricted to the divergence-free slice, amplitude fixed by the real
// constraint <u1, u> = alpha; the unit-phase degeneracy is removed by
// rotating each iterate so the constraint value is real.
inline Branch trace_branch(const Domain& d, const Spectrum& sp, const GaugeData& g,
                           const GLParameters& p, const std::vector<double>& alphas,
                           BranchOptions opts = {}) {
  if (sp.near_degenerate || !sp.simple())
    throw std::invalid_argument(
        "ground eigenvalue is not simple; the branch is undefined");
  BifurcationCoefficients co = coefficients(d, sp, g, p);
  Minimizer m(d, g);
  double h2 = d.h * d.h;
  std::vector<cd> pu1 = m.lap0.pack(co.u1);

  Branch br;
  for (double alpha : alphas) {
    BranchSample sm;
    sm.alpha = alpha;
    if (alpha == 0) {
      sm.lambda = co.lambda1;
      sm.state = normal_state(d, g);
      GLParameters pc(co.lambda1, p.kappa);
      sm.energy = energy(d, sm.state, pc);
      sm.newton_residual = 0;
      sm.ok = true;
      br.samples.push_back(std::move(sm));
      continue;
    }
    double lambda;
    GLState s = predictor_state(d, co, g, alpha, &lambda);
    Minimizer::Point x;
    x.u = m.lap0.pack(s.u);
    x.psi = m.vpois.pack(m.vpois.solve(curl(d, s.a)));

    auto rotate = [&](Minimizer::Point& pt) {
      cd ip = detail::zdot(pu1, pt.u) * h2;
      if (std::abs(ip) == 0) return;
      cd ph = std::conj(ip) / std::abs(ip);
      if (alpha < 0) ph = -ph;  // keep the constraint value near alpha
      detail::zscal(pt.u, ph);
    };
    rotate(x);

    bool converged = false;
    double rnorm = 0;
    double best_rnorm = std::numeric_limits<double>::infinity();
    Minimizer::Point best_x = x;
    double best_lambda = lambda;
    for (int it = 0; it < opts.max_newton; ++it) {
      s = m.unpack(x);
      GLParameters pc(lambda, p.kappa);
      Variation r = el_residual(d, s, pc);
      rnorm = std::sqrt(norm2(d, r.u) + norm2(d, r.a));
      double cgap = alpha - (detail::zdot(pu1, x.u) * h2).real();
      if (rnorm < best_rnorm) {
        best_rnorm = rnorm;
        best_x = x;
        best_lambda = lambda;
      }
      if (rnorm <= opts.residual_tol && std::abs(cgap) <= 1e-10) {
        converged = true;
        break;
      }
      Minimizer::Point gp = m.pack_gradient(energy_gradient(d, s, pc));
      // Derivative of the gradient in lambda.
      Variation bl(d);
      for (int j = 0; j < d.ny; ++j)
        for (int i = 0; i < d.nx; ++i)
          if (d.in_omega(i, j))
            bl.u.c(i, j) = (std::norm(s.u.c(i, j)) - 1.0) * s.u.c(i, j);
      bl.a = curl_adjoint(d, curl(d, s.a));
      double fs = -p.kappa * p.kappa / (lambda * lambda);
      for (auto& v : bl.a.x.v) v *= fs;
      for (auto& v : bl.a.y.v) v *= fs;
      Minimizer::Point bp = m.pack_gradient(bl);

      auto H = [&](const Vec& in, Vec& out) {
        Minimizer::Point pin = m.unflatten(in);
        Variation dv;
        dv.u = m.lap0.unpack(pin.u);
        dv.a = curl_adjoint(d, m.vpois.unpack(pin.psi));
        out = m.flatten(m.pack_gradient(hessian_apply(d, s, pc, dv)));
      };
      Vec r1 = m.flatten(gp), r2 = m.flatten(bp);
      for (auto& v : r1) v = -v;
      for (auto& v : r2) v = -v;
      // Inexact Newton: solve just accurately enough to land below the
      // residual target; over-solving only excites the phase null direction.
      double tol_lin = std::clamp(0.5 * opts.residual_tol / rnorm,
                                  opts.linear_tol, 1e-2);
      Vec w1(r1.size(), 0.0), w2(r2.size(), 0.0);
      minres(H, r1, w1, tol_lin, opts.linear_maxit);
      minres(H, r2, w2, tol_lin, opts.linear_maxit);
      // Remove any drift along the global-phase direction (iu, 0), which is
      // in the kernel of the second variation at critical points.
      {
        Minimizer::Point piu;
        ComplexField iu = s.u;
        scale(iu, cd(0, 1));
        piu.u = m.lap0.pack(iu);
        piu.psi.assign(x.psi.size(), 0.0);
        Vec pv = m.flatten(piu);
        double pn2 = dot(pv, pv);
        if (pn2 > 1e-30) {
          axpy(w1, -dot(w1, pv) / pn2, pv);
          axpy(w2, -dot(w2, pv) / pn2, pv);
        }
      }
      Minimizer::Point pw1 = m.unflatten(w1), pw2 = m.unflatten(w2);
      double denom = (detail::zdot(pu1, pw2.u) * h2).real();
      if (std::abs(denom) < 1e-14) break;  // fold; cannot continue
      double dl = (cgap - (detail::zdot(pu1, pw1.u) * h2).real()) / denom;
      m.paxpy(x, 1.0, pw1);
      m.paxpy(x, dl, pw2);
      lambda += dl;
      if (!(lambda > 0)) break;
      rotate(x);
    }
    if (!converged && best_rnorm < rnorm) {
      x = best_x;
      lambda = best_lambda;
      rnorm = best_rnorm;
    }
    sm.lambda = lambda;
    sm.state = m.unpack(x);
    sm.newton_residual = rnorm;
    sm.ok = converged && rnorm <= 1e-8;
    GLParameters pc(lambda, p.kappa);
    sm.energy = energy(d, sm.state, pc);
    br.samples.push_back(std::move(sm));
    if (!br.samples.back().ok) break;  // truncate on divergence
  }

  // Least-squares slope of lambda - lambda1 against alpha^2 through the
  // origin, over the three smallest nonzero amplitudes.
  std::vector<std::pair<double, double>> pts;  // (alpha^2, dlambda)
  for (const auto& sm : br.samples)
    if (sm.ok && sm.alpha != 0)
      pts.push_back({sm.alpha * sm.alpha, sm.lambda - co.lambda1});
  std::sort(pts.begin(), pts.end());
  double num = 0, den = 0;
  for (size_t k = 0; k < pts.size() && k < 3; ++k) {
    num += pts[k].first * pts[k].second;
    den += pts[k].first * pts[k].first;
  }
  br.fit_c = den > 0 ? num / den : 0.0;
  return br;
}

enum class StabilityVerdict { StrictlyStable, Unstable, Marginal };

struct StabilityReport {
  StabilityVerdict verdict = StabilityVerdict::Marginal;
  std::vector<double> eigenvalues;  // lowest pencil eigenvalues, ascending
  int phase_index = -1;             // index of the phase direction, if found
  double stab_tol = 0;
  int iterations = 0;
};

// Lowest eigenvalues of the second variation restricted to the
// divergence-free slice, as the pencil H x = mu B x where B is the metric of
// the slice parametrization, by shifted inverse block iteration.
inline StabilityReport strict_stability(const Domain& d, const GLState& state,
                                        const GLParameters& p, int k,
                                        double stab_tol = -1) {
  Variation r0 = el_residual(d, state, p);
  double res = std::sqrt(norm2(d, r0.u) + norm2(d, r0.a));
  if (res > 1e-6 * std::max(1.0, p.lambda))
    throw std::invalid_argument("state is not a critical point (residual " +
                                std::to_string(res) + ")");
  if (k < 1) throw std::invalid_argument("at least one eigenvalue required");

  StabilityReport rep;
  rep.stab_tol = stab_tol > 0 ? stab_tol : 1e-6 * p.lambda;

  Minimizer m(d, state.gauge);
  size_t nu = m.lap0.n, npsi = m.vpois.dofs.size();
  size_t n = 2 * nu + npsi;
  auto Hmul = [&](const Vec& in, Vec& out) {
    Minimizer::Point pin = m.unflatten(in);
    Variation dv;
    dv.u = m.lap0.unpack(pin.u);
    dv.a = curl_adjoint(d, m.vpois.unpack(pin.psi));
    out = m.flatten(m.pack_gradient(hessian_apply(d, state, p, dv)));
  };
  auto Bmul = [&](const Vec& in, Vec& out) {
    out = in;  // u block: identity
    Vec psi(in.begin() + 2 * nu, in.end());
    Vec bp(npsi, 0.0);
    if (npsi) m.vpois.apply(psi, bp);
    std::copy(bp.begin(), bp.end(), out.begin() + 2 * nu);
  };
  auto bdot = [&](const Vec& a, const Vec& b) {
    Vec t(n);
    Bmul(b, t);
    return dot(a, t);
  };

  int blk = k + 1;
  std::mt19937_64 rng(4242);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<Vec> X(blk, Vec(n));
  for (auto& x : X)
    for (auto& v : x) v = nd(rng);

  double sigma = 2.0 * (p.lambda + 1.0);
  for (int attempt = 0; attempt < 3; ++attempt) {
    auto S = [&](const Vec& in, Vec& out) {
      Hmul(in, out);
      Vec b(n);
      Bmul(in, b);
      axpy(out, sigma, b);
    };
    // B-orthonormalize the block.
    auto orthonormalize = [&]() {
      for (int a = 0; a < blk; ++a) {
        for (int b = 0; b < a; ++b) axpy(X[a], -bdot(X[a], X[b]), X[b]);
        double nn = std::sqrt(std::max(bdot(X[a], X[a]), 1e-300));
        scal(X[a], 1.0 / nn);
      }
    };
    orthonormalize();
    std::vector<double> theta(blk, 0.0);
    bool done = false;
    for (int outer = 0; outer < 200 && !done; ++outer) {
      rep.iterations = outer + 1;
      // One block step of inverse iteration on (H + sigma B).
      for (int a = 0; a < blk; ++a) {
        Vec rhs(n);
        Bmul(X[a], rhs);
        Vec y(n, 0.0);
        minres(S, rhs, y, 1e-10, 100000);
        X[a] = std::move(y);
      }
      orthonormalize();
      // Rayleigh-Ritz on the pencil.
      Eigen::MatrixXd Hm(blk, blk), Bm(blk, blk);
      std::vector<Vec> HX(blk, Vec(n));
      for (int a = 0; a < blk; ++a) Hmul(X[a], HX[a]);
      for (int a = 0; a < blk; ++a)
        for (int b = 0; b < blk; ++b) {
          Hm(a, b) = dot(X[a], HX[b]);
          Bm(a, b) = bdot(X[a], X[b]);
        }
      Hm = 0.5 * (Hm + Hm.transpose()).eval();
      Bm = 0.5 * (Bm + Bm.transpose()).eval();
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Hm, Bm);
      std::vector<Vec> Y(blk, Vec(n, 0.0));
      for (int a = 0; a < blk; ++a) {
        for (int b = 0; b < blk; ++b) axpy(Y[a], es.eigenvectors()(b, a), X[b]);
        theta[a] = es.eigenvalues()(a);
      }
      X = std::move(Y);
      // Residual check on the k requested pairs.
      double worst = 0;
      for (int a = 0; a < k; ++a) {
        Vec hx(n), bx(n);
        Hmul(X[a], hx);
        Bmul(X[a], bx);
        axpy(hx, -theta[a], bx);
        worst = std::max(worst, nrm2(hx) / (std::abs(theta[a]) + sigma));
      }
      if (worst <= 1e-9) done = true;
    }
    if (theta[0] > -0.5 * sigma || attempt == 2) {
      rep.eigenvalues.assign(theta.begin(), theta.begin() + k);
      break;
    }
    sigma *= 4.0;  // shift too small to keep the map order-preserving
  }

  // Identify the phase direction (iu, 0).
  double unorm2 = norm2(d, state.u);
  if (unorm2 > 1e-20) {
    ComplexField iu = state.u;
    scale(iu, cd(0, 1));
    Minimizer::Point pp;
    pp.u = m.lap0.pack(iu);
    pp.psi.assign(npsi, 0.0);
    Vec pv = m.flatten(pp);
    double pn = std::sqrt(bdot(pv, pv));
    double best = 0;
    for (int a = 0; a < k; ++a) {
      double ov = std::abs(bdot(X[a], pv)) / (pn * std::sqrt(bdot(X[a], X[a])));
      if (ov > best && ov > 0.5) {
        best = ov;
        rep.phase_index = a;
      }
    }
  }

  bool has_negative = false, has_marginal = false;
  for (int a = 0; a < k; ++a) {
    if (a == rep.phase_index) {
      if (std::abs(rep.eigenvalues[a]) > rep.stab_tol) has_marginal = true;
      continue;
    }
    if (rep.eigenvalues[a] < -rep.stab_tol)
      has_negative = true;
    else if (rep.eigenvalues[a] <= rep.stab_tol)
      has_marginal = true;
  }
  if (unorm2 > 1e-20 && rep.phase_index < 0) has_marginal = true;
  rep.verdict = has_negative ? StabilityVerdict::Unstable
               : has_marginal ? StabilityVerdict::Marginal
                              : StabilityVerdict::StrictlyStable;
  return rep;
}

}  // namespace gl2d
