#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gl2d/gauge.hpp>

using namespace gl2d;

namespace {

DomainSpec square(int n) {
  DomainSpec s;
  s.lx = s.ly = 1.0;
  s.n = n;
  return s;
}

DomainSpec annulus(int n, double r = 0.3, double R = 1.0) {
  DomainSpec s;
  s.lx = s.ly = 2 * R;
  s.shape = Shape::Annulus;
  s.outer_radius = R;
  HoleSpec h;
  h.disk = true;
  h.r = r;
  s.holes = {h};
  s.n = n;
  return s;
}

double max_interior_curl_error(const Domain& d, const VectorField& a,
                               const VertexField& H) {
  VertexField b = curl(d, a);
  double err = 0;
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.vert_tilde(i, j)) err = std::max(err, std::abs(b.v(i, j) - H.v(i, j)));
  return err;
}

double vnorm(const Domain& d, const VectorField& a) { return std::sqrt(norm2(d, a)); }

}  // namespace

TEST_CASE("zero field gives zero potential") {
  Domain d = build_domain(annulus(32));
  ExternalField f = field_none(d);
  GaugeData g = external_potential(d, f);
  CHECK(vnorm(d, g.A) == 0.0);
  CHECK(g.div_residual == 0.0);
  CHECK(g.normal_residual == 0.0);
  CHECK(g.curl_residual == 0.0);
}

TEST_CASE("external potential reproduces the prescribed field exactly") {
  Domain d = build_domain(square(24));
  ExternalField f = field_uniform(d, 1.0);
  GaugeData g = external_potential(d, f);
  CHECK(max_interior_curl_error(d, g.A, f.H) < 1e-10);
  CHECK(g.div_residual < 1e-12);
  CHECK(g.normal_residual == 0.0);  // stream-function fields never cross the boundary
}

TEST_CASE("external potential on an annulus with half flux") {
  Domain d = build_domain(annulus(48));
  ExternalField f = field_uniform_in_holes(d, {0.5});
  GaugeData g = external_potential(d, f);
  CHECK(max_interior_curl_error(d, g.A, f.H) < 1e-9);
  CHECK(g.div_residual < 1e-11);
  CHECK(g.normal_residual == 0.0);
  CHECK(g.hole_fluxes.size() == 1);
  CHECK(g.hole_fluxes[0] == doctest::Approx(0.5).epsilon(1e-12));

  // Circulation around the hole: summing h^2 * curl(A) over the vertices
  // strictly inside the hole telescopes to the line integral of A around it,
  // which must equal 2*pi*flux.
  VertexField b = curl(d, g.A);
  double circ = 0;
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.vert_hole(i, j) == 0) circ += d.h * d.h * b.v(i, j);
  CHECK(circ == doctest::Approx(2 * M_PI * 0.5).epsilon(1e-10));
}

TEST_CASE("coulomb projection preserves curl and kills divergence") {
  Domain d = build_domain(annulus(32));
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> dist(-1, 1);
  VectorField a(d);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.xface_tilde(i, j)) a.x(i, j) = dist(rng);
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.yface_tilde(i, j)) a.y(i, j) = dist(rng);

  VertexField b0 = curl(d, a);
  VectorField p = coulomb_project(d, a);
  VertexField b1 = curl(d, p);
  double cerr = 0;
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.vert_tilde(i, j)) cerr = std::max(cerr, std::abs(b1.v(i, j) - b0.v(i, j)));
  CHECK(cerr < 1e-12);

  CellField div1 = divergence(d, p);
  double derr = 0;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.cell(i, j) != CELL_EXT) derr = std::max(derr, std::abs(div1.c(i, j)));
  CHECK(derr < 1e-10);

  // Idempotence.
  VectorField pp = coulomb_project(d, p);
  axpy(pp, -1.0, p);
  CHECK(vnorm(d, pp) < 5e-6 * std::max(1.0, vnorm(d, p)));
}

TEST_CASE("coulomb projection annihilates pure gradients") {
  Domain d = build_domain(square(24));
  CellField theta(d);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      theta.c(i, j) = std::sin(2 * d.cell_x(i)) * d.cell_y(j);
  VectorField g = grad_cells(d, theta);
  VectorField p = coulomb_project(d, g);
  CHECK(vnorm(d, p) < 5e-6 * std::max(1.0, vnorm(d, g)));
}

TEST_CASE("curl_inverse round trip and linearity") {
  Domain d = build_domain(annulus(32));
  ExternalField f = field_uniform(d, 0.7);
  VectorField a = curl_inverse(d, f.H);
  CHECK(max_interior_curl_error(d, a, f.H) < 1e-10);
  CellField div = divergence(d, a);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.cell(i, j) != CELL_EXT) CHECK(std::abs(div.c(i, j)) < 1e-12);

  ExternalField f2 = field_uniform(d, -0.2);
  VectorField a2 = curl_inverse(d, f2.H);
  VertexField sum(d);
  for (size_t k = 0; k < sum.v.v.size(); ++k)
    sum.v.v[k] = f.H.v.v[k] + f2.H.v.v[k];
  VectorField as = curl_inverse(d, sum);
  axpy(a, 1.0, a2);
  axpy(a, -1.0, as);
  CHECK(vnorm(d, a) < 5e-6 * std::max(1.0, vnorm(d, as)));
}

TEST_CASE("curl_inverse is bounded uniformly in resolution") {
  double prev_ratio = 0;
  for (int pass = 0; pass < 2; ++pass) {
    int n = 24 << pass;
    Domain d = build_domain(square(n));
    VertexField H(d);
    for (int j = 0; j <= d.ny; ++j)
      for (int i = 0; i <= d.nx; ++i)
        if (d.vert_tilde(i, j))
          H.v(i, j) = std::sin(2 * M_PI * (d.vert_x(i) + 0.5)) *
                      std::sin(M_PI * (d.vert_y(j) + 0.5));
    VectorField a = curl_inverse(d, H);
    double ratio = std::sqrt(norm2(d, a) / norm2(d, H));
    if (pass > 0) CHECK(ratio == doctest::Approx(prev_ratio).epsilon(0.1));
    prev_ratio = ratio;
  }
}

TEST_CASE("transversal gauge of a uniform field") {
  Domain d = build_domain(square(32));
  VertexField b(d);
  for (auto& v : b.v.v) v = 1.0;  // b == 1 on the whole grid
  VectorField a = transversal_gauge(d, b, 0.0, 0.0, 0.0, false);
  // Exact at every interior face midpoint: a = (-y/2, x/2).
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i)
      if (d.xface_tilde(i, j))
        CHECK(a.x(i, j) == doctest::Approx(-0.5 * d.cell_y(j)).epsilon(1e-12));
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.yface_tilde(i, j))
        CHECK(a.y(i, j) == doctest::Approx(0.5 * d.cell_x(i)).epsilon(1e-12));
  VertexField c = curl(d, a);
  for (int j = 2; j < d.ny - 1; ++j)
    for (int i = 2; i < d.nx - 1; ++i)
      CHECK(c.v(i, j) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("transversal gauge of a compactly supported bump is azimuthal outside") {
  Domain d = build_domain(square(64));
  double r = 0.2;
  auto bump = [r](double x, double y) {
    double s = (x * x + y * y) / (r * r);
    return s < 1 ? std::exp(1 - 1 / (1 - s)) : 0.0;
  };
  VertexField b(d);
  for (int j = 0; j <= d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i) b.v(i, j) = bump(d.vert_x(i), d.vert_y(j));
  VectorField a = transversal_gauge(d, b, 0.0, 0.0, 0.0, false);

  // Outside the support a = (-y, x) * M / rho^2 with M = int_0^inf t b(t) dt.
  int nq = 20000;
  double M = 0, dt = r / nq;
  for (int k = 0; k < nq; ++k) {
    double t = (k + 0.5) * dt;
    M += t * bump(t, 0) * dt;
  }
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i <= d.nx; ++i) {
      if (!d.xface_tilde(i, j)) continue;
      double x = d.vert_x(i), y = d.cell_y(j);
      double rho2 = x * x + y * y;
      if (rho2 < (1.5 * r) * (1.5 * r)) continue;
      double exact = -y * M / rho2;
      CHECK(std::abs(a.x(i, j) - exact) < 3e-3 * M / std::sqrt(rho2) + 1e-12);
    }
}

TEST_CASE("stream function recovers slice fields") {
  Domain d = build_domain(annulus(32));
  ExternalField f = field_uniform(d, 1.3);
  GaugeData g = external_potential(d, f);
  VertexField psi = stream_of(d, g.A);
  VectorField a2 = curl_adjoint(d, psi);
  axpy(a2, -1.0, g.A);
  CHECK(vnorm(d, a2) < 5e-6 * std::max(1.0, vnorm(d, g.A)));
}

TEST_CASE("field constructors validate input") {
  Domain d = build_domain(annulus(32));
  CHECK_THROWS(field_uniform_in_holes(d, {0.5, 0.5}));  // wrong hole count
  ExternalField f = field_ring(d, 2.0, 0.5, 0.8);
  CHECK(field_zero_on_omega(d, f.H) == false);  // ring lies inside the physical region
}
