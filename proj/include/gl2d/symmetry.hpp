#pragma once

// Half-flux machinery: when the applied field vanishes on the sample and
// every hole carries half-integer flux, the squared connection integrates to
// a single-valued unit factor. Conjugation twisted by that factor is an
// antilinear involution commuting with the covariant operator; its fixed
// subspace carries a reduced (real) bifurcation problem whose states have
// vanishing supercurrent, and the nodal line of the reduced states slits the
// sample.

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "bifurcation.hpp"
#include "functional.hpp"
#include "spectra.hpp"

namespace gl2d {

struct HalfFluxPhase {
  const Domain* d = nullptr;
  VectorField A;            // potential the phase integrates
  Grid2<double> phi;        // tree-integrated phase per cell (0 outside)
  Grid2<uint8_t> visited;   // cells reached by the tree
  double loop_defect = 0;   // max cycle mismatch of the increments, mod 2pi

  cd factor(int i, int j) const { return std::polar(1.0, phi(i, j)); }
  // Square root of the conjugate factor, on the same tree branch choice.
  cd half(int i, int j) const { return std::polar(1.0, -0.5 * phi(i, j)); }
};

namespace detail {
inline double wrap_angle(double t) {
  t = std::fmod(t, 2 * M_PI);
  if (t > M_PI) t -= 2 * M_PI;
  if (t <= -M_PI) t += 2 * M_PI;
  return t;
}
}  // namespace detail

// Phase increment along the dual edge crossing face f, chosen so that the
// twisted conjugation commutes exactly with the link-phase operator.
inline double edge_increment_x(const Domain& d, const VectorField& A, int i, int j) {
  return -2.0 * d.h * A.x(i, j);
}
inline double edge_increment_y(const Domain& d, const VectorField& A, int i, int j) {
  return -2.0 * d.h * A.y(i, j);
}

// Integrate twice the connection along a spanning tree of the cell graph.
// Requires a field-free sample and half-integer hole fluxes, which make the
// resulting unit factor single-valued (cycle defect zero mod 2pi).
inline HalfFluxPhase half_flux_phase(const GaugeData& g, const Domain& d) {
  // Field-free sample: the curl must vanish on all vertices interior to the
  // sample region.
  VertexField H = curl(d, g.A);
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.vert_omega(i, j) && std::abs(H.v(i, j)) > 1e-8)
        throw std::invalid_argument("applied field does not vanish on the sample");
  for (size_t k = 0; k < g.hole_fluxes.size(); ++k) {
    double f = g.hole_fluxes[k];
    if (std::abs(f - std::round(f - 0.5) - 0.5) > 1e-6)
      throw std::invalid_argument("hole " + std::to_string(k) + " flux " +
                                  std::to_string(f) + " is not half-integer");
  }

  HalfFluxPhase ph;
  ph.d = &d;
  ph.A = g.A;
  ph.phi = Grid2<double>(d.nx, d.ny, 0.0);
  ph.visited = Grid2<uint8_t>(d.nx, d.ny, 0);

  // Breadth-first spanning tree from the first sample cell.
  std::queue<std::pair<int, int>> q;
  bool seeded = false;
  for (int j = 0; j < d.ny && !seeded; ++j)
    for (int i = 0; i < d.nx && !seeded; ++i)
      if (d.in_omega(i, j)) {
        ph.visited(i, j) = 1;
        q.push({i, j});
        seeded = true;
      }
  while (!q.empty()) {
    auto [i, j] = q.front();
    q.pop();
    auto visit = [&](int ni, int nj, double dphi) {
      if (ni < 0 || nj < 0 || ni >= d.nx || nj >= d.ny) return;
      if (!d.in_omega(ni, nj) || ph.visited(ni, nj)) return;
      ph.phi(ni, nj) = ph.phi(i, j) + dphi;
      ph.visited(ni, nj) = 1;
      q.push({ni, nj});
    };
    if (d.xface_omega(i + 1, j)) visit(i + 1, j, edge_increment_x(d, ph.A, i + 1, j));
    if (d.xface_omega(i, j)) visit(i - 1, j, -edge_increment_x(d, ph.A, i, j));
    if (d.yface_omega(i, j + 1)) visit(i, j + 1, edge_increment_y(d, ph.A, i, j + 1));
    if (d.yface_omega(i, j)) visit(i, j - 1, -edge_increment_y(d, ph.A, i, j));
  }

  // Cycle defect over the non-tree edges.
  double worst = 0;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 1; i < d.nx; ++i)
      if (d.xface_omega(i, j) && ph.visited(i - 1, j) && ph.visited(i, j))
        worst = std::max(worst, std::abs(detail::wrap_angle(
                                    ph.phi(i, j) - ph.phi(i - 1, j) -
                                    edge_increment_x(d, ph.A, i, j))));
  for (int j = 1; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.yface_omega(i, j) && ph.visited(i, j - 1) && ph.visited(i, j))
        worst = std::max(worst, std::abs(detail::wrap_angle(
                                    ph.phi(i, j) - ph.phi(i, j - 1) -
                                    edge_increment_y(d, ph.A, i, j))));
  ph.loop_defect = worst;
  if (worst > 1e-6)
    throw std::runtime_error("phase factor is not single-valued (defect " +
                             std::to_string(worst) + ")");
  return ph;
}

// Antilinear involution: conjugation twisted by the unit factor.
inline ComplexField K_apply(const Domain& d, const ComplexField& u,
                            const HalfFluxPhase& ph) {
  ComplexField r(d);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_omega(i, j))
        r.c(i, j) = std::conj(ph.factor(i, j)) * std::conj(u.c(i, j));
  return r;
}

// Projection onto the fixed subspace of the involution: (u + Ku)/2.
inline ComplexField project_K_real(const Domain& d, const ComplexField& u,
                                   const HalfFluxPhase& ph) {
  ComplexField r = K_apply(d, u, ph);
  for (size_t k = 0; k < r.c.v.size(); ++k) r.c.v[k] = 0.5 * (r.c.v[k] + u.c.v[k]);
  double nu = std::sqrt(norm2(d, u)), nr = std::sqrt(norm2(d, r));
  if (nr <= 1e-8 * std::max(nu, 1e-300))
    throw std::invalid_argument(
        "projection vanishes: the input is anti-real; rotate it by i first");
  return r;
}

// Canonical fixed-subspace ground state: project the ground mode (rotating
// by i if it happens to be anti-real) and re-normalize.
inline ComplexField k_real_ground(const Domain& d, const Spectrum& sp,
                                  const HalfFluxPhase& ph) {
  // The mode carries an arbitrary global phase; of the two candidate
  // projections (of u and of iu) at least one keeps most of the norm.
  ComplexField u1 = sp.u1();
  ComplexField ku = K_apply(d, u1, ph);
  ComplexField wa(d), wb(d);
  for (size_t k = 0; k < wa.c.v.size(); ++k) {
    wa.c.v[k] = 0.5 * (u1.c.v[k] + ku.c.v[k]);
    wb.c.v[k] = 0.5 * (cd(0, 1) * u1.c.v[k] + cd(0, -1) * ku.c.v[k]);
  }
  ComplexField& w = norm2(d, wa) >= norm2(d, wb) ? wa : wb;
  scale(w, 1.0 / std::sqrt(norm2(d, w)));
  return w;
}

// Newton continuation of the reduced branch: the potential stays pinned at
// the applied one (zero induced part), the order parameter stays in the
// fixed subspace of the involution, and the current source vanishes
// identically along the branch.
inline Branch reduced_branch(const Domain& d, const Spectrum& sp, const GaugeData& g,
                             const HalfFluxPhase& ph, const GLParameters& p,
                             const std::vector<double>& alphas,
                             BranchOptions opts = {}) {
  if (sp.near_degenerate || !sp.simple())
    throw std::invalid_argument(
        "ground eigenvalue is not simple; the branch is undefined");
  ComplexField u1k = k_real_ground(d, sp, ph);
  MagneticOperator op = assemble(g, d);
  double h2 = d.h * d.h;
  std::vector<cd> pu1 = op.pack(u1k);
  double lambda1 = sp.lambda1();

  auto flatten = [&](const std::vector<cd>& z) {
    Vec v(2 * z.size());
    for (size_t k = 0; k < z.size(); ++k) {
      v[2 * k] = z[k].real();
      v[2 * k + 1] = z[k].imag();
    }
    return v;
  };
  auto unflatten = [&](const Vec& v) {
    std::vector<cd> z(v.size() / 2);
    for (size_t k = 0; k < z.size(); ++k) z[k] = cd(v[2 * k], v[2 * k + 1]);
    return z;
  };

  Branch br;
  for (double alpha : alphas) {
    BranchSample sm;
    sm.alpha = alpha;
    if (alpha == 0) {
      sm.lambda = lambda1;
      sm.state = normal_state(d, g);
      sm.energy = 0;
      sm.ok = true;
      br.samples.push_back(std::move(sm));
      continue;
    }
    double lambda = lambda1;
    GLState s = normal_state(d, g);
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i)
        if (d.in_omega(i, j)) s.u.c(i, j) = alpha * u1k.c(i, j);

    bool converged = false;
    double rnorm = 0;
    double best_rnorm = std::numeric_limits<double>::infinity();
    GLState best_s = s;
    double best_lambda = lambda;
    for (int it = 0; it < opts.max_newton; ++it) {
      s.u = project_K_real(d, s.u, ph);
      GLParameters pc(lambda, p.kappa);
      Variation grad = energy_gradient(d, s, pc);
      rnorm = std::sqrt(norm2(d, grad.u));
      double cgap = alpha - inner(d, u1k, s.u).real();
      if (rnorm < best_rnorm) {
        best_rnorm = rnorm;
        best_s = s;
        best_lambda = lambda;
      }
      if (rnorm <= opts.residual_tol && std::abs(cgap) <= 1e-10) {
        converged = true;
        break;
      }
      auto H = [&](const Vec& x, Vec& y) {
        Variation dv(d);
        dv.u = op.unpack(unflatten(x));
        y = flatten(op.pack(hessian_apply(d, s, pc, dv).u));
      };
      std::vector<cd> zr2(pu1.size());
      for (size_t k = 0; k < zr2.size(); ++k) {
        auto [ci, cj] = op.cell_of[k];
        cd uc = s.u.c(ci, cj);
        zr2[k] = -(std::norm(uc) - 1.0) * uc;
      }
      Vec r1 = flatten(op.pack(grad.u)), r2 = flatten(zr2);
      for (auto& v : r1) v = -v;
      double tol_lin = std::clamp(0.5 * opts.residual_tol / rnorm,
                                  opts.linear_tol, 1e-2);
      Vec w1(r1.size(), 0.0), w2(r2.size(), 0.0);
      minres(H, r1, w1, tol_lin, opts.linear_maxit);
      minres(H, r2, w2, tol_lin, opts.linear_maxit);
      std::vector<cd> zw1 = unflatten(w1), zw2 = unflatten(w2);
      double denom = (detail::zdot(pu1, zw2) * h2).real();
      if (std::abs(denom) < 1e-14) break;
      double dl = (cgap - (detail::zdot(pu1, zw1) * h2).real()) / denom;
      ComplexField du1 = op.unpack(zw1), du2 = op.unpack(zw2);
      for (int j = 0; j < d.ny; ++j)
        for (int i = 0; i < d.nx; ++i)
          if (d.in_omega(i, j))
            s.u.c(i, j) += du1.c(i, j) + dl * du2.c(i, j);
      lambda += dl;
      if (!(lambda > 0)) break;
    }
    if (!converged && best_rnorm < rnorm) {
      s = best_s;
      lambda = best_lambda;
      rnorm = best_rnorm;
    }
    sm.lambda = lambda;
    sm.state = s;
    sm.newton_residual = rnorm;
    sm.ok = converged && rnorm <= 1e-8;
    sm.energy = energy(d, s, GLParameters(lambda, p.kappa));
    br.samples.push_back(std::move(sm));
    if (!br.samples.back().ok) break;
  }

  std::vector<std::pair<double, double>> pts;
  for (const auto& sm : br.samples)
    if (sm.ok && sm.alpha != 0)
      pts.push_back({sm.alpha * sm.alpha, sm.lambda - lambda1});
  std::sort(pts.begin(), pts.end());
  double num = 0, den = 0;
  for (size_t k = 0; k < pts.size() && k < 3; ++k) {
    num += pts[k].first * pts[k].second;
    den += pts[k].first * pts[k].first;
  }
  br.fit_c = den > 0 ? num / den : 0.0;
  return br;
}

struct NodalReport {
  std::vector<std::pair<int, int>> zero_cells;
  int curve_components = 0;
  std::vector<std::set<int>> touches;  // per component: -1 outer, k hole k
  bool slits = false;
  double epsilon = 0;
  std::string slit_criterion =
      "first Betti number of the remaining cell complex is zero";
};

// Nodal set of the twisted-real representative: cells of small modulus where
// the representative changes sign across a face, components and reached
// boundaries by cell connectivity, slitting by the homology of the rest.
inline NodalReport nodal_set(const Domain& d, const ComplexField& u,
                             const HalfFluxPhase& ph, double epsilon = 0.05) {
  if (!(epsilon > 0 && epsilon < 0.5))
    throw std::invalid_argument("epsilon must lie in (0, 0.5)");
  NodalReport rep;
  rep.epsilon = epsilon;

  double umax = 0;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_omega(i, j)) umax = std::max(umax, std::abs(u.c(i, j)));
  if (umax == 0) umax = 1;

  // Real representative and the +-1 transport across each sample face.
  Grid2<double> w(d.nx, d.ny, 0.0);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_omega(i, j)) w(i, j) = (std::conj(ph.half(i, j)) * u.c(i, j)).real();
  auto sign_x = [&](int i, int j) {  // face between (i-1,j) and (i,j)
    double t = ph.phi(i, j) - ph.phi(i - 1, j) - edge_increment_x(d, ph.A, i, j);
    return std::cos(0.5 * t) >= 0 ? 1.0 : -1.0;
  };
  auto sign_y = [&](int i, int j) {
    double t = ph.phi(i, j) - ph.phi(i, j - 1) - edge_increment_y(d, ph.A, i, j);
    return std::cos(0.5 * t) >= 0 ? 1.0 : -1.0;
  };

  Grid2<uint8_t> zero(d.nx, d.ny, 0);
  auto flag_pair = [&](int it, int jt, int ih, int jh, double s) {
    if (w(it, jt) * s * w(ih, jh) >= 0) return;
    if (std::abs(u.c(it, jt)) < epsilon * umax) zero(it, jt) = 1;
    if (std::abs(u.c(ih, jh)) < epsilon * umax) zero(ih, jh) = 1;
  };
  for (int j = 0; j < d.ny; ++j)
    for (int i = 1; i < d.nx; ++i)
      if (d.xface_omega(i, j)) flag_pair(i - 1, j, i, j, sign_x(i, j));
  for (int j = 1; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.yface_omega(i, j)) flag_pair(i, j - 1, i, j, sign_y(i, j));

  // Components of the flagged set and the boundaries each one reaches.
  Grid2<int> comp(d.nx, d.ny, -1);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) {
      if (!zero(i, j) || comp(i, j) >= 0) continue;
      int id = rep.curve_components++;
      rep.touches.push_back({});
      std::queue<std::pair<int, int>> q;
      comp(i, j) = id;
      q.push({i, j});
      while (!q.empty()) {
        auto [ci, cj] = q.front();
        q.pop();
        rep.zero_cells.push_back({ci, cj});
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int t = 0; t < 4; ++t) {
          int ni = ci + di[t], nj = cj + dj[t];
          int lab = d.cell_label(ni, nj);
          if (lab == CELL_EXT)
            rep.touches[id].insert(-1);
          else if (lab >= CELL_HOLE0)
            rep.touches[id].insert(lab - CELL_HOLE0);
          else if (lab == CELL_OMEGA && zero(ni, nj) && comp(ni, nj) < 0) {
            comp(ni, nj) = id;
            q.push({ni, nj});
          }
        }
      }
    }
  std::sort(rep.zero_cells.begin(), rep.zero_cells.end());

  rep.slits = complex_betti1(d.nx, d.ny, [&](int i, int j) {
                return d.in_omega(i, j) && !zero(i, j);
              }) == 0;
  return rep;
}

}  // namespace gl2d
