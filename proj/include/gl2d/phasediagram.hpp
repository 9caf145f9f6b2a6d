#pragma once

// Phase boundary of the normal state: for each coupling kappa there is a
// threshold lambda below which the normal state is the global minimizer; the
// threshold is increasing in kappa, bounded by the ground eigenvalue, and
// saturates there once the bifurcating branch turns energetically favorable.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <stdexcept>
#include <vector>

#include "functional.hpp"
#include "gauge.hpp"
#include "spectra.hpp"

namespace gl2d {

// h^2-weighted integral of H^2 over the interior vertices of the filled
// domain (matches the quadrature of the gauge residuals).
inline double field_square_integral(const Domain& d, const VertexField& H) {
  double s = 0;
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.vert_tilde(i, j)) s += H.v(i, j) * H.v(i, j);
  return s * d.h * d.h;
}

// Energy scale separating "zero" from "negative" verdicts; proportional to
// lambda * |Omega| so the classification does not drift with resolution.
inline double phase_energy_tol(const Domain& d, double lambda) {
  return 1e-9 * lambda * area(d, Region::Omega);
}

enum class PhaseVerdict { NormalWins, CondensedWins };

struct PhaseProbe {
  double lambda = 0;
  double best_energy = 0;  // over the fixed multi-start portfolio
  bool converged = false;
  PhaseVerdict verdict = PhaseVerdict::NormalWins;
};

struct PhasePoint {
  double kappa = 0;
  double lambda_opt = 0;  // midpoint of the final bracket
  double lambda_lo = 0, lambda_hi = 0;
  double lambda1 = 0;
  std::vector<PhaseProbe> verdicts;
  bool flagged = false;  // some probe failed to converge or verdicts clash
  // Verdicts rest on a fixed multi-start portfolio, so "normal wins" is an
  // approximation; "condensed wins" carries a negative-energy witness.
  static constexpr const char* method_note =
      "global-optimality verdicts approximated by a fixed multi-start portfolio";
};

// Threshold search by bisection on (0, lambda1]: the threshold never exceeds
// the ground eigenvalue, and a probe reporting negative energy is a
// certificate that the normal state is beaten there.
inline PhasePoint lambda_opt(const Domain& d, const GaugeData& g, const Spectrum& sp,
                             double kappa, double tol, int max_probes = 20) {
  if (!(sp.lambda1() > 0))
    throw std::invalid_argument("threshold search requires a positive ground eigenvalue");
  if (!(tol > 0)) throw std::invalid_argument("tolerance must be positive");
  PhasePoint pt;
  pt.kappa = kappa;
  pt.lambda1 = sp.lambda1();
  ComplexField u1 = sp.u1();

  auto probe = [&](double lambda) {
    PhaseProbe pr;
    pr.lambda = lambda;
    GLParameters p(lambda, kappa);
    MinimizeResult r = multistart_minimize(d, p, g, &u1);
    pr.best_energy = r.report.energy;
    pr.converged = r.converged;
    pr.verdict = pr.best_energy >= -phase_energy_tol(d, lambda)
                     ? PhaseVerdict::NormalWins
                     : PhaseVerdict::CondensedWins;
    pt.verdicts.push_back(pr);
    pt.flagged |= !pr.converged;
    return pr.verdict;
  };

  double lo = 0, hi = pt.lambda1;
  if (probe(pt.lambda1) == PhaseVerdict::NormalWins) {
    lo = pt.lambda1;  // saturated at the eigenvalue
  } else {
    for (int k = 1; k < max_probes && hi - lo > tol; ++k) {
      double mid = 0.5 * (lo + hi);
      if (probe(mid) == PhaseVerdict::NormalWins)
        lo = mid;
      else
        hi = mid;
    }
  }

  // Condensed verdicts are certificates; normal verdicts can be optimizer
  // misses. If they interleave, keep the widest bracket consistent with the
  // certificates and flag the run.
  double hi_c = pt.lambda1;
  bool saturated = true;
  for (const auto& pr : pt.verdicts)
    if (pr.verdict == PhaseVerdict::CondensedWins) {
      hi_c = std::min(hi_c, pr.lambda);
      saturated = false;
    }
  if (saturated) {  // the normal state still wins at the eigenvalue
    pt.lambda_lo = pt.lambda_hi = pt.lambda_opt = pt.lambda1;
    return pt;
  }
  double lo_c = 0;
  for (const auto& pr : pt.verdicts)
    if (pr.verdict == PhaseVerdict::NormalWins && pr.lambda < hi_c)
      lo_c = std::max(lo_c, pr.lambda);
  if (lo_c != lo || hi_c != hi) pt.flagged = true;
  pt.lambda_lo = lo_c;
  pt.lambda_hi = hi_c;
  pt.lambda_opt = 0.5 * (pt.lambda_lo + pt.lambda_hi);
  return pt;
}

// Embarrassingly parallel sweep over couplings.
inline std::vector<PhasePoint> sweep_lambda_opt(const Domain& d, const GaugeData& g,
                                                const Spectrum& sp,
                                                const std::vector<double>& kappas,
                                                double tol, int threads = 1) {
  std::vector<PhasePoint> out(kappas.size());
  if (threads <= 1) {
    for (size_t k = 0; k < kappas.size(); ++k)
      out[k] = lambda_opt(d, g, sp, kappas[k], tol);
    return out;
  }
  std::vector<std::future<void>> jobs;
  std::atomic<size_t> next{0};
  for (int t = 0; t < threads; ++t)
    jobs.push_back(std::async(std::launch::async, [&] {
      for (size_t k = next.fetch_add(1); k < kappas.size(); k = next.fetch_add(1))
        out[k] = lambda_opt(d, g, sp, kappas[k], tol);
    }));
  for (auto& j : jobs) j.get();
  return out;
}

struct ProbeReport {
  PhaseVerdict verdict = PhaseVerdict::NormalWins;
  double competitor_energy = 0;  // field-expelling constant state
  double best_energy = 0;        // over the multi-start portfolio
  GLState witness;
  bool approximate = true;  // normal verdicts rest on the portfolio
};

// One-shot comparison at fixed parameters: evaluate the closed-form
// field-expelling competitor (u = 1 with the applied potential cancelled,
// admissible because the filled domain is simply connected) and the
// multi-start minimizer, and report which side wins.
inline ProbeReport normal_vs_condensed_probe(const Domain& d, const GaugeData& g,
                                             const GLParameters& p) {
  ProbeReport rep;
  GLState comp = normal_state(d, g);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_omega(i, j)) comp.u.c(i, j) = 1.0;
  comp.a = g.A;
  for (auto& v : comp.a.x.v) v = -v;
  for (auto& v : comp.a.y.v) v = -v;
  rep.competitor_energy = energy(d, comp, p);

  MinimizeResult r = multistart_minimize(d, p, g);
  rep.best_energy = std::min(r.report.energy, rep.competitor_energy);
  rep.witness = r.report.energy <= rep.competitor_energy ? r.state : comp;
  rep.verdict = rep.best_energy >= -phase_energy_tol(d, p.lambda)
                    ? PhaseVerdict::NormalWins
                    : PhaseVerdict::CondensedWins;
  return rep;
}

struct PhysicalParameters {
  double a = -1;        // condensation coefficient, < 0 below transition
  double b = 1;         // quartic coefficient, > 0
  double m = 1;         // carrier mass
  double e = 1;         // carrier charge
  double c_light = 1;   // speed of light
  double hbar = 1;      // reduced Planck constant
};

struct ScalingResult {
  GLParameters params{1.0, 1.0};
  double energy_scale = 0;  // physical F = energy_scale * dimensionless G
  double field_scale = 0;   // dimensionless H_e = field_scale * physical field
};

// Dimensionless couplings from material constants.
inline ScalingResult scaling_convert(const PhysicalParameters& ph) {
  if (!(ph.a < 0)) throw std::invalid_argument("condensation coefficient must be negative");
  if (!(ph.b > 0)) throw std::invalid_argument("quartic coefficient must be positive");
  if (!(ph.m > 0 && ph.e > 0 && ph.c_light > 0 && ph.hbar > 0))
    throw std::invalid_argument("physical constants must be positive");
  ScalingResult r;
  double lambda = 4.0 * ph.m * std::abs(ph.a) / (ph.hbar * ph.hbar);
  double kappa = (ph.m * ph.c_light / (ph.e * ph.hbar)) * std::sqrt(ph.b / (8.0 * M_PI));
  r.params = GLParameters(lambda, kappa);
  r.energy_scale = std::abs(ph.a) * ph.hbar * ph.hbar / (4.0 * ph.m * ph.b);
  r.field_scale = 2.0 * ph.e / (ph.hbar * ph.c_light);
  return r;
}

struct HatRescale {
  double length_factor = 0;  // hat lengths = length_factor * model lengths
  double field_factor = 0;   // hat field = field_factor * model field
  double area = 0;           // rescaled sample area
};

// Bookkeeping for the kappa^2-normalized description; no recomputation.
inline HatRescale hat_rescale(const GLParameters& p, const Domain& d) {
  if (!(p.lambda > 0 && p.kappa > 0))
    throw std::invalid_argument("couplings must be positive");
  HatRescale r;
  r.length_factor = std::sqrt(p.lambda) / p.kappa;
  r.field_factor = p.kappa * p.kappa / p.lambda;
  r.area = (p.lambda / (p.kappa * p.kappa)) * area(d, Region::Omega);
  return r;
}

}  // namespace gl2d
