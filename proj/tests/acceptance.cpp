// Acceptance checks: one pass/fail line per criterion, exit 0 only if all
// pass. Grids stay at or below 128x128 so the whole suite runs at desk scale.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gl2d/bifurcation.hpp"
#include "gl2d/calculus.hpp"
#include "gl2d/functional.hpp"
#include "gl2d/gauge.hpp"
#include "gl2d/grid.hpp"
#include "gl2d/phasediagram.hpp"
#include "gl2d/spectra.hpp"
#include "gl2d/symmetry.hpp"

using namespace gl2d;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream why;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (why.tellp() > 0) why << "; ";
      why << what;
    }
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Scenario {
  Domain d;
  ExternalField f;
  GaugeData g;
};

Scenario offset_annulus(int n) {
  DomainSpec ds;
  ds.shape = Shape::Annulus;
  ds.outer_radius = 0.48;
  ds.n = n;
  HoleSpec h;
  h.disk = true;
  h.cx = 0.08;
  h.cy = 0.048;
  h.r = 0.15;
  ds.holes = {h};
  Scenario sc;
  sc.d = build_domain(ds);
  sc.f = field_uniform_in_holes(sc.d, {0.5});
  sc.g = external_potential(sc.d, sc.f);
  return sc;
}

Scenario disk_in_field(int n, double h0) {
  DomainSpec ds;
  ds.shape = Shape::Disk;
  ds.outer_radius = 0.48;
  ds.n = n;
  Scenario sc;
  sc.d = build_domain(ds);
  sc.f = field_uniform(sc.d, h0);
  sc.g = external_potential(sc.d, sc.f);
  return sc;
}

Scenario square_no_field(int n) {
  DomainSpec ds;
  ds.shape = Shape::Rectangle;
  ds.n = n;
  Scenario sc;
  sc.d = build_domain(ds);
  sc.f = field_none(sc.d);
  sc.g = external_potential(sc.d, sc.f);
  return sc;
}

ComplexField random_u(const Domain& d, uint64_t seed, double amp = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, amp);
  ComplexField u(d);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_omega(i, j)) u.c(i, j) = cd(nd(rng), nd(rng));
  return u;
}

Variation random_variation(const Domain& d, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Variation v(d);
  v.u = random_u(d, seed + 1);
  VertexField psi(d);
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.vert_tilde(i, j)) psi.v(i, j) = nd(rng);
  v.a = curl_adjoint(d, psi);
  for (auto& x : v.a.x.v) x *= d.h;  // keep the direction O(1)
  for (auto& x : v.a.y.v) x *= d.h;
  return v;
}

GLState perturbed(const GLState& s, const Variation& v, double t) {
  GLState r = s;
  for (size_t k = 0; k < r.u.c.v.size(); ++k) r.u.c.v[k] += t * v.u.c.v[k];
  axpy(r.a, t, v.a);
  return r;
}

// --- criteria ------------------------------------------------------------

void c1_zero_field(Check& c) {
  Scenario sc = square_no_field(24);
  MagneticOperator op = assemble(sc.g, sc.d);
  Spectrum sp = ground_state(op, 2, 1e-12);
  c.require(sp.lambda1() <= 1e-10, "lambda1 = " + num(sp.lambda1()) + " > 1e-10");
  const ComplexField& u1 = sp.u1();
  cd mean = 0;
  int cnt = 0;
  for (int j = 0; j < sc.d.ny; ++j)
    for (int i = 0; i < sc.d.nx; ++i)
      if (sc.d.in_omega(i, j)) {
        mean += u1.c(i, j);
        ++cnt;
      }
  mean /= double(cnt);
  double dev = 0;
  for (int j = 0; j < sc.d.ny; ++j)
    for (int i = 0; i < sc.d.nx; ++i)
      if (sc.d.in_omega(i, j)) dev = std::max(dev, std::abs(u1.c(i, j) - mean));
  c.require(dev <= 1e-8 * std::abs(mean), "mode deviates from constant by " + num(dev));
  c.require(!flux_criterion(sc.g, sc.f, sc.d).positive, "flux criterion should be negative");
}

void c2_half_flux_positive(Check& c) {
  double lam[3];
  int k = 0;
  for (int n : {24, 48, 96}) {
    Scenario sc = offset_annulus(n);
    Spectrum sp = ground_state(assemble(sc.g, sc.d), 2, 1e-11);
    lam[k++] = sp.lambda1();
    c.require(sp.lambda1() > 0, "lambda1 not positive at n=" + std::to_string(n));
  }
  double d1 = std::abs(lam[1] - lam[0]), d2 = std::abs(lam[2] - lam[1]);
  c.require(d2 <= d1, "refinement changes not shrinking: " + num(d1) + " then " + num(d2));
}

void c3_dense_oracle(Check& c) {
  std::vector<Scenario> scs;
  scs.push_back(square_no_field(16));
  scs.push_back(disk_in_field(24, 8.0));
  scs.push_back(offset_annulus(24));
  {
    DomainSpec ds;
    ds.shape = Shape::Rectangle;
    ds.n = 16;
    Scenario sc;
    sc.d = build_domain(ds);
    sc.f = field_uniform(sc.d, 5.0);
    sc.g = external_potential(sc.d, sc.f);
    scs.push_back(sc);
  }
  for (size_t s = 0; s < scs.size(); ++s) {
    MagneticOperator op = assemble(scs[s].g, scs[s].d);
    Spectrum sp = ground_state(op, 2, 1e-12);
    std::vector<double> ev = dense_spectrum(op);
    for (int k = 0; k < 2; ++k) {
      double rel = std::abs(sp.eigenvalues[k] - ev[k]) / std::max(std::abs(ev[k]), 1.0);
      c.require(rel <= 1e-9, "scenario " + std::to_string(s) + " eigenvalue " +
                                 std::to_string(k) + " off by " + num(rel));
    }
  }
}

void c4_gauge_invariance(Check& c) {
  Scenario sc = disk_in_field(24, 8.0);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ud(-M_PI, M_PI);
  CellField theta(sc.d);
  for (int j = 0; j < sc.d.ny; ++j)
    for (int i = 0; i < sc.d.nx; ++i) theta.c(i, j) = ud(rng);

  // Energy of a random state is exactly invariant.
  GLParameters p(1.3, 0.9);
  GLState s = normal_state(sc.d, sc.g);
  s.u = random_u(sc.d, 3);
  Variation v = random_variation(sc.d, 4);
  s.a = v.a;
  double e0 = energy(sc.d, s, p);
  GLState st = s;
  gauge_transform(sc.d, st.u, st.a, theta);
  double rel_e = std::abs(energy(sc.d, st, p) - e0) / std::max(std::abs(e0), 1.0);
  c.require(rel_e <= 1e-10, "energy drifts by " + num(rel_e));

  // Transformed external potential: same spectrum and expansion scalars.
  GLState gt = normal_state(sc.d, sc.g);
  gauge_transform(sc.d, gt.u, gt.a, theta);
  VectorField A2 = sc.g.A;
  axpy(A2, 1.0, gt.a);  // A_e + grad theta
  GaugeData g2 = gauge_from_potential(sc.d, A2, sc.f.H);

  MagneticOperator op1 = assemble(sc.g, sc.d), op2 = assemble(g2, sc.d);
  std::vector<double> ev1 = dense_spectrum(op1), ev2 = dense_spectrum(op2);
  for (int k = 0; k < 3; ++k) {
    double rel = std::abs(ev1[k] - ev2[k]) / std::max(std::abs(ev1[k]), 1.0);
    c.require(rel <= 1e-10, "eigenvalue " + std::to_string(k) + " drifts by " + num(rel));
  }

  Spectrum sp1 = ground_state(op1, 2, 1e-12);
  Spectrum sp2 = ground_state(op2, 2, 1e-12);
  BifurcationCoefficients co1 = coefficients(sc.d, sp1, sc.g, p);
  BifurcationCoefficients co2 = coefficients(sc.d, sp2, g2, p);
  auto rel = [](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-9});
  };
  c.require(rel(co1.I0, co2.I0) <= 1e-10, "I0 drifts by " + num(rel(co1.I0, co2.I0)));
  c.require(rel(co1.K0, co2.K0) <= 1e-10, "K0 drifts by " + num(rel(co1.K0, co2.K0)));
  c.require(rel(co1.c_kappa, co2.c_kappa) <= 1e-10,
            "c(kappa) drifts by " + num(rel(co1.c_kappa, co2.c_kappa)));
}

void c5_gradient_fd(Check& c) {
  Scenario sc = offset_annulus(20);
  GLParameters p(1.1, 1.4);
  GLState s = normal_state(sc.d, sc.g);
  s.u = random_u(sc.d, 7);
  s.a = random_variation(sc.d, 8).a;
  Variation g = energy_gradient(sc.d, s, p);
  double t = 1e-5;
  for (int k = 0; k < 20; ++k) {
    Variation v = random_variation(sc.d, 100 + k);
    double fd = (energy(sc.d, perturbed(s, v, t), p) -
                 energy(sc.d, perturbed(s, v, -t), p)) / (2 * t);
    double an = 2 * inner(sc.d, g, v);
    double rel = std::abs(fd - an) / std::max(1.0, std::abs(an));
    c.require(rel < 1e-6, "direction " + std::to_string(k) + " off by " + num(rel));
  }
}

void c6_maximum_principle(Check& c) {
  Scenario sc = offset_annulus(32);
  Spectrum sp = ground_state(assemble(sc.g, sc.d), 2, 1e-10);
  ComplexField u1 = sp.u1();
  for (double lf : {0.9, 1.5, 2.5})
    for (double kappa : {0.6, 1.0, 1.8}) {
      GLParameters p(lf * sp.lambda1(), kappa);
      MinimizeResult r = multistart_minimize(sc.d, p, sc.g, &u1);
      if (!r.converged) continue;  // only converged minimizers are claimed
      c.require(r.report.max_modulus <= 1.0 + 1e-6,
                "max modulus " + num(r.report.max_modulus) + " at lambda=" +
                    num(p.lambda) + ", kappa=" + num(kappa));
    }
}

void c7_normal_energy(Check& c) {
  Scenario sc = disk_in_field(24, 8.0);
  GLParameters p(1.7, 0.8);
  double e_norm = energy(sc.d, normal_state(sc.d, sc.g), p);
  c.require(std::abs(e_norm) <= 1e-12, "normal-state energy " + num(e_norm));

  GLState s = normal_state(sc.d, sc.g);
  for (int j = 0; j < sc.d.ny; ++j)
    for (int i = 0; i < sc.d.nx; ++i)
      if (sc.d.in_omega(i, j)) s.u.c(i, j) = 1.0;
  s.a = sc.g.A;
  for (auto& v : s.a.x.v) v = -v;
  for (auto& v : s.a.y.v) v = -v;
  double closed = -0.5 * p.lambda * area(sc.d, Region::Omega) +
                  (p.kappa * p.kappa / p.lambda) * field_square_integral(sc.d, curl(sc.d, sc.g.A));
  double rel = std::abs(energy(sc.d, s, p) - closed) / std::abs(closed);
  c.require(rel <= 1e-10, "expelled-state energy off by " + num(rel));
}

void c8_small_lambda(Check& c) {
  Scenario sc = offset_annulus(32);
  Spectrum sp = ground_state(assemble(sc.g, sc.d), 2, 1e-10);
  ComplexField u1 = sp.u1();
  GLParameters p(0.1 * sp.lambda1(), 1.0);
  Minimizer m(sc.d, sc.g);
  int k = 0;
  for (const GLState& s0 : start_portfolio(sc.d, sc.g, &u1)) {
    MinimizeResult r = m.run(p, s0);
    c.require(r.converged, "start " + std::to_string(k) + " did not converge");
    c.require(r.report.energy >= -1e-9,
              "start " + std::to_string(k) + " energy " + num(r.report.energy));
    ++k;
  }
}

void c9_branch_consistency(Check& c) {
  Scenario sc = offset_annulus(32);
  Spectrum sp = ground_state(assemble(sc.g, sc.d), 2, 1e-11);
  GLParameters p(1.0, 1.0);
  BifurcationCoefficients co = coefficients(sc.d, sp, sc.g, p);

  Branch br = trace_branch(sc.d, sp, sc.g, p, {0.05, 0.1, 0.2});
  for (const auto& sm : br.samples)
    c.require(sm.ok, "branch sample alpha=" + num(sm.alpha) + " failed");
  // Quadratic coefficient of lambda(alpha): least squares against
  // alpha^2 and alpha^4, since the branch carries a visible quartic term.
  double s22 = 0, s24 = 0, s44 = 0, b2 = 0, b4 = 0;
  for (const auto& sm : br.samples) {
    double a2 = sm.alpha * sm.alpha, a4 = a2 * a2;
    double y = sm.lambda - sp.lambda1();
    s22 += a2 * a2;
    s24 += a2 * a4;
    s44 += a4 * a4;
    b2 += a2 * y;
    b4 += a4 * y;
  }
  double det = s22 * s44 - s24 * s24;
  double fit = (s44 * b2 - s24 * b4) / det;
  double rel = std::abs(fit - co.c_kappa) / std::abs(co.c_kappa);
  c.require(rel <= 0.05, "fitted curvature off by " + num(rel));

  // Predictor residual order: the truncation leaves an O(alpha^4) defect.
  std::vector<double> la, lr;
  for (double alpha : {0.4, 0.2, 0.1, 0.05, 0.025}) {
    double lambda = 0;
    GLState s = predictor_state(sc.d, co, sc.g, alpha, &lambda);
    Variation r = el_residual(sc.d, s, GLParameters(lambda, p.kappa));
    la.push_back(std::log(alpha));
    lr.push_back(std::log(std::sqrt(norm2(sc.d, r.u) + norm2(sc.d, r.a))));
  }
  double mx = 0, my = 0;
  for (size_t k = 0; k < la.size(); ++k) {
    mx += la[k] / la.size();
    my += lr[k] / lr.size();
  }
  double sxy = 0, sxx = 0;
  for (size_t k = 0; k < la.size(); ++k) {
    sxy += (la[k] - mx) * (lr[k] - my);
    sxx += (la[k] - mx) * (la[k] - mx);
  }
  double slope = sxy / sxx;
  c.require(slope >= 3.5, "predictor residual slope " + num(slope));
}

void c10_half_flux_current(Check& c) {
  Scenario sc = offset_annulus(48);
  Spectrum sp = ground_state(assemble(sc.g, sc.d), 2, 1e-11);
  GLParameters p1(1.0, 1.0);
  BifurcationCoefficients co = coefficients(sc.d, sp, sc.g, p1);
  double jn = std::sqrt(inner(sc.d, co.J1, co.J1));
  c.require(jn <= 1e-6, "||J1|| = " + num(jn));
  c.require(co.K0 <= 1e-10, "K0 = " + num(co.K0));
  c.require(co.kappa_c <= 1e-5, "kappa_c = " + num(co.kappa_c));
  BifurcationCoefficients co3 = coefficients(sc.d, sp, sc.g, GLParameters(1.0, 3.0));
  double rel = std::abs(co.c_kappa - co3.c_kappa) / std::abs(co.c_kappa);
  c.require(rel <= 1e-10, "c(kappa) depends on kappa by " + num(rel));
}

void c11_K0_positive(Check& c) {
  Scenario sc = disk_in_field(24, 8.0);
  Spectrum sp = ground_state(assemble(sc.g, sc.d), 2, 1e-12);
  c.require(sp.lambda1() > 0, "lambda1 not positive");
  BifurcationCoefficients co = coefficients(sc.d, sp, sc.g, GLParameters(1.0, 1.0));
  c.require(co.K0 > 0, "K0 = " + num(co.K0) + " not positive");
  double diff = std::abs(co.K0 - co.K0_pairing) / std::max(1.0, co.K0);
  c.require(diff <= 1e-8, "K0 formulas disagree by " + num(diff));
}

void c12_stability_threshold(Check& c) {
  Scenario sc = disk_in_field(24, 8.0);
  Spectrum sp = ground_state(assemble(sc.g, sc.d), 2, 1e-12);
  BifurcationCoefficients co = coefficients(sc.d, sp, sc.g, GLParameters(1.0, 1.0));
  double kc = kappa_c(co);
  c.require(kc > 0, "kappa_c not positive");

  // Branch energy at matched amplitude flips sign across the threshold.
  double alpha = 0.1;
  Branch below = trace_branch(sc.d, sp, sc.g, GLParameters(1.0, 0.8 * kc), {alpha});
  Branch above = trace_branch(sc.d, sp, sc.g, GLParameters(1.0, 1.25 * kc), {alpha});
  c.require(below.samples.size() == 1 && below.samples[0].ok, "trace below kappa_c failed");
  c.require(above.samples.size() == 1 && above.samples[0].ok, "trace above kappa_c failed");
  if (c.ok) {
    c.require(below.samples[0].energy > 0,
              "energy below threshold " + num(below.samples[0].energy));
    c.require(above.samples[0].energy < 0,
              "energy above threshold " + num(above.samples[0].energy));
  }

  // Strict stability of the branch at twice the threshold.
  GLParameters p2(1.0, 2.0 * kc);
  Branch stable_br = trace_branch(sc.d, sp, sc.g, p2, {alpha});
  c.require(stable_br.samples.size() == 1 && stable_br.samples[0].ok,
            "trace at 2 kappa_c failed");
  if (c.ok) {
    GLParameters pl(stable_br.samples[0].lambda, p2.kappa);
    StabilityReport rep = strict_stability(sc.d, stable_br.samples[0].state, pl, 3);
    c.require(rep.verdict == StabilityVerdict::StrictlyStable,
              "bifurcating state not strictly stable");
  }

  // The normal state loses stability past the eigenvalue.
  GLParameters pn(1.05 * sp.lambda1(), 1.0);
  StabilityReport rn = strict_stability(sc.d, normal_state(sc.d, sc.g), pn, 3);
  c.require(rn.verdict == StabilityVerdict::Unstable,
            "normal state not unstable past lambda1");
}

void c13_phase_diagram(Check& c) {
  Scenario sc = offset_annulus(32);
  Spectrum sp = ground_state(assemble(sc.g, sc.d), 2, 1e-10);
  double lambda1 = sp.lambda1();
  double tol = 0.02 * lambda1;
  std::vector<double> kappas = {0.25, 0.4, 0.6, 0.9, 1.3, 1.8, 2.5, 3.5};
  std::vector<PhasePoint> pts = sweep_lambda_opt(sc.d, sc.g, sp, kappas, tol, 4);

  for (const auto& pt : pts) {
    c.require(!pt.flagged, "flagged at kappa " + num(pt.kappa));
    c.require(pt.lambda_hi <= lambda1 + tol, "exceeds lambda1 at kappa " + num(pt.kappa));
    c.require(pt.lambda_opt > 0, "threshold not positive at kappa " + num(pt.kappa));
  }
  for (size_t k = 0; k + 1 < pts.size(); ++k)
    c.require(pts[k].lambda_opt <= pts[k + 1].lambda_opt + tol,
              "not monotone between kappa " + num(pts[k].kappa) + " and " +
                  num(pts[k + 1].kappa));

  // Half flux: the branch coupling vanishes, so the measured saturation point
  // must sit at (or below) every swept kappa, matching kappa_c = 0.
  BifurcationCoefficients co = coefficients(sc.d, sp, sc.g, GLParameters(1.0, 1.0));
  double kappa_sat = kappas.back();
  for (size_t k = pts.size(); k-- > 0;) {
    if (pts[k].lambda_opt < lambda1 - tol) break;
    kappa_sat = pts[k].kappa;
  }
  c.require(kappa_sat <= kappas.front(),
            "saturation first seen at kappa " + num(kappa_sat) +
                " but kappa_c = " + num(co.kappa_c));

  double bound = std::sqrt(area(sc.d, Region::Omega) /
                           (2.0 * field_square_integral(sc.d, curl(sc.d, sc.g.A))));
  for (const auto& pt : pts)
    c.require(pt.lambda_hi / pt.kappa >= bound - tol / pt.kappa,
              "small-kappa bound violated at kappa " + num(pt.kappa));
}

void c14_K_algebra(Check& c) {
  Scenario sc = offset_annulus(32);
  HalfFluxPhase ph = half_flux_phase(sc.g, sc.d);
  MagneticOperator op = assemble(sc.g, sc.d);
  ComplexField u = random_u(sc.d, 17);
  double un = std::sqrt(norm2(sc.d, u));

  ComplexField kku = K_apply(sc.d, K_apply(sc.d, u, ph), ph);
  double inv = 0;
  for (size_t k = 0; k < u.c.v.size(); ++k)
    inv = std::max(inv, std::abs(kku.c.v[k] - u.c.v[k]));
  c.require(inv <= 1e-14 * un, "K^2 deviates from identity by " + num(inv));

  std::vector<cd> y;
  op.apply(op.pack(u), y);
  ComplexField khu = K_apply(sc.d, op.unpack(y), ph);
  op.apply(op.pack(K_apply(sc.d, u, ph)), y);
  ComplexField hku = op.unpack(y);
  double comm = 0;
  for (size_t k = 0; k < khu.c.v.size(); ++k)
    comm += std::norm(khu.c.v[k] - hku.c.v[k]);
  comm = std::sqrt(comm * sc.d.h * sc.d.h);
  c.require(comm <= 1e-8 * un, "commutator norm " + num(comm));

  Spectrum sp = ground_state(op, 2, 1e-10);
  ComplexField w = k_real_ground(sc.d, sp, ph);
  op.apply(op.pack(w), y);
  ComplexField r = op.unpack(y);
  for (size_t k = 0; k < r.c.v.size(); ++k) r.c.v[k] -= sp.lambda1() * w.c.v[k];
  double res = std::sqrt(norm2(sc.d, r));
  c.require(res <= 1e-7, "projected mode eigen-residual " + num(res));
}

void c15_nodal_slitting(Check& c) {
  Scenario sc = offset_annulus(96);
  Spectrum sp = ground_state(assemble(sc.g, sc.d), 2, 1e-11);
  HalfFluxPhase ph = half_flux_phase(sc.g, sc.d);
  Branch br = reduced_branch(sc.d, sp, sc.g, ph, GLParameters(1.0, 1.0), {0.1});
  c.require(br.samples.size() == 1 && br.samples[0].ok, "reduced branch failed");
  if (!c.ok) return;
  for (double eps : {0.02, 0.05, 0.1, 0.2}) {
    NodalReport rep = nodal_set(sc.d, br.samples[0].state.u, ph, eps);
    c.require(rep.curve_components == 1,
              num(eps) + ": " + std::to_string(rep.curve_components) + " components");
    c.require(rep.slits, num(eps) + ": does not slit");
    if (rep.touches.size() == 1) {
      c.require(rep.touches[0].count(-1) == 1, num(eps) + ": misses outer boundary");
      c.require(rep.touches[0].count(0) == 1, num(eps) + ": misses hole boundary");
    }
  }
}

void c16_scaling(Check& c) {
  PhysicalParameters ph;
  ph.a = -2.5;
  ph.b = 1.75;
  ph.m = 9.109;
  ph.e = 4.803;
  ph.c_light = 2.998e2;
  ph.hbar = 1.055;
  ScalingResult r = scaling_convert(ph);
  double lam = 4.0 * ph.m * std::abs(ph.a) / (ph.hbar * ph.hbar);
  double kap = ph.m * ph.c_light / (ph.e * ph.hbar) * std::sqrt(ph.b / (8.0 * M_PI));
  c.require(r.params.lambda == lam, "lambda formula not exact");
  c.require(r.params.kappa == kap, "kappa formula not exact");
  double scale = std::abs(ph.a) * ph.hbar * ph.hbar / (4.0 * ph.m * ph.b);
  double round_trip = std::abs(r.energy_scale * r.params.lambda - ph.a * ph.a / ph.b);
  c.require(std::abs(r.energy_scale - scale) <= 1e-12 * scale, "energy scale off");
  c.require(round_trip <= 1e-12 * ph.a * ph.a / ph.b,
            "energy round trip off by " + num(round_trip));
}

}  // namespace

int main() {
  struct Item {
    const char* name;
    std::function<void(Check&)> fn;
  };
  std::vector<Item> items = {
      {"zero-field baseline: flat ground state, zero eigenvalue", c1_zero_field},
      {"half-flux annulus: positive eigenvalue, first-order refinement", c2_half_flux_positive},
      {"iterative eigenpairs match dense diagonalization", c3_dense_oracle},
      {"gauge invariance of energy, spectrum, and expansion scalars", c4_gauge_invariance},
      {"energy gradient matches central finite differences", c5_gradient_fd},
      {"converged minimizers respect the modulus bound", c6_maximum_principle},
      {"normal-state and field-expelling energy identities", c7_normal_energy},
      {"small lambda: every start returns to the normal state", c8_small_lambda},
      {"branch curvature matches the expansion; predictor order", c9_branch_consistency},
      {"half flux kills the current coupling", c10_half_flux_current},
      {"simply connected field: positive coupling, matching formulas", c11_K0_positive},
      {"branch energy and stability flip across the threshold coupling", c12_stability_threshold},
      {"phase diagram: monotone, bounded, saturated threshold sweep", c13_phase_diagram},
      {"antilinear symmetry algebra", c14_K_algebra},
      {"nodal line of the reduced state slits the annulus", c15_nodal_slitting},
      {"physical-to-dimensionless scaling formulas", c16_scaling},
  };

  int failures = 0;
  for (size_t k = 0; k < items.size(); ++k) {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    try {
      items[k].fn(c);
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  %2zu. %s (%.1fs)%s%s\n", c.ok ? "PASS" : "FAIL", k + 1,
                items[k].name, secs, c.ok ? "" : " -- ",
                c.ok ? "" : c.why.str().c_str());
    std::fflush(stdout);
    if (!c.ok) ++failures;
  }
  if (failures) std::printf("%d of %zu criteria failed\n", failures, items.size());
  return failures ? 1 : 0;
}
