#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "nodalforge/builders.hpp"
#include "nodalforge/metric.hpp"
#include "nodalforge/nodal.hpp"

using namespace nodalforge;
using Catch::Approx;

namespace {

/// Collar-only slice of a 3-torus: cross-section T^2, x in [-1, 1] over
/// `layers` element layers, with all collar bookkeeping attached.
Submesh collar_slice(int layers) {
  CollarSpec collar;
  collar.sigma = SigmaModel::torus2;
  collar.r = 1.0;
  collar.gamma = 1.0;
  collar.layers = layers;
  SimplicialMesh full = build_torus_mesh(3, 6, collar, 2.0, 4);
  return submesh(full, [](Index tag) { return region_is_collar(tag); });
}

Eigen::VectorXd collar_profile(const SimplicialMesh& mesh, int k) {
  Eigen::VectorXd u(mesh.vertex_count());
  for (Index v = 0; v < mesh.vertex_count(); ++v) {
    const double x = mesh.collar_x[static_cast<std::size_t>(v)];
    REQUIRE(std::isfinite(x));
    u[v] = std::cos(k * M_PI * (x + 1.0) / 2.0);
  }
  return u;
}

double total_volume(const DomainReport& rep) {
  double s = 0.0;
  for (double v : rep.volumes) s += v;
  return s;
}

}  // namespace

TEST_CASE("constant field has an empty zero set; zero field is rejected") {
  SimplicialMesh mesh = build_torus_mesh(3, 4);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.vertex_count());

  NodalComplex nc = extract_zero_set(mesh, ones);
  CHECK(nc.piece_count() == 0);
  CHECK(nc.component_count() == 0);

  DomainReport rep = nodal_domains(mesh, ones);
  CHECK(rep.count == 1);
  CHECK(rep.sign[0] == 1);
  CHECK(total_volume(rep) == Approx(1.0).epsilon(1e-9));  // unit 3-torus

  Eigen::VectorXd zeros = Eigen::VectorXd::Zero(mesh.vertex_count());
  CHECK_THROWS(extract_zero_set(mesh, zeros));
  CHECK_THROWS(nodal_domains(mesh, zeros));

  // an empty complex can never satisfy a one-component expectation
  CensusExpectation want;
  want.count = 1;
  CHECK_FALSE(component_census(nc, want).pass);
}

TEST_CASE("linear collar coordinate cuts a single flat torus copy") {
  Submesh sub = collar_slice(5);  // odd layer count: no vertex sits at x = 0
  const SimplicialMesh& mesh = sub.mesh;
  Eigen::VectorXd u(mesh.vertex_count());
  for (Index v = 0; v < mesh.vertex_count(); ++v)
    u[v] = mesh.collar_x[static_cast<std::size_t>(v)];

  EdgeLengthMetric metric = reference_metric(mesh);
  NodalComplex nc = extract_zero_set(mesh, u, 1e-9, &metric);

  REQUIRE(nc.component_count() == 1);
  const NodalComponent& C = nc.components[0];
  CHECK(C.euler_char == 0);  // a 2-torus
  CHECK(C.orientable);
  CHECK_FALSE(C.touches_boundary);  // the slice boundary sits at x = +-1
  CHECK(C.collar == 0);
  CHECK(C.collar_frac == 1.0);
  CHECK(C.collar_mean == Approx(0.0).margin(1e-12));
  CHECK(C.collar_std <= 1e-12);

  // extraction is exact linear geometry: the interpolated field vanishes
  // at every crossing point
  for (const NodalPoint& p : nc.points) {
    const double val = (1.0 - p.t) * u[p.a] + p.t * u[p.b];
    CHECK(std::abs(val) <= 1e-12);
    CHECK(p.t > 0.0);
    CHECK(p.t < 1.0);
  }

  // the cut is a true cross-section: its area times the collar length
  // reproduces the collar volume (product structure, flat metric)
  double vol = 0.0;
  for (double v2 : metric.cell_vol2) vol += std::sqrt(std::max(0.0, v2));
  CHECK(C.area == Approx(vol / 2.0).epsilon(1e-9));

  DomainReport rep = nodal_domains(mesh, u, 1e-9, &metric);
  CHECK(rep.count == 2);
  CHECK(total_volume(rep) == Approx(vol).epsilon(1e-9));
}

TEST_CASE("k=2 cosine: copies at +-1/2, three domains, census verdicts") {
  Submesh sub = collar_slice(6);  // layers at multiples of 1/3: zeros fall
  const SimplicialMesh& mesh = sub.mesh;  // exactly mid-interval
  Eigen::VectorXd u = collar_profile(mesh, 2);

  NodalComplex nc = extract_zero_set(mesh, u);
  REQUIRE(nc.component_count() == 2);
  for (const NodalComponent& C : nc.components) {
    CHECK(C.euler_char == 0);
    CHECK(C.orientable);
    CHECK(C.collar_frac == 1.0);
    // the sampled cosine is antisymmetric about each zero, so the linear
    // crossings land exactly at the analytic positions
    CHECK(std::abs(std::abs(C.collar_mean) - 0.5) <= 1e-12);
    CHECK(C.collar_std <= 1e-12);
  }

  DomainReport rep = nodal_domains(mesh, u);
  CHECK(rep.count == 3);

  CensusExpectation want;
  want.count = 2;
  want.euler_char = 0;
  want.positions = {-0.5, 0.5};
  want.position_tol = 0.05;
  want.collar = 0;
  CensusVerdict v = component_census(nc, want);
  CHECK(v.count_ok);
  CHECK(v.euler_ok);
  CHECK(v.positions_ok);
  CHECK(v.pass);
  REQUIRE(v.matched_positions.size() == 2);
  CHECK(v.matched_positions[0] == Approx(-0.5).margin(1e-9));
  CHECK(v.matched_positions[1] == Approx(0.5).margin(1e-9));

  CensusExpectation wrong = want;
  wrong.count = 1;
  wrong.positions = {0.0};
  CHECK_FALSE(component_census(nc, wrong).pass);

  // stability: perturbations below half the smallest vertex magnitude
  // cannot change the component count (minimum |u| here is 1/2)
  SplitMix64 rng(99);
  Eigen::VectorXd pert = u;
  for (Index v2 = 0; v2 < mesh.vertex_count(); ++v2)
    pert[v2] += 0.2 * (rng.next_uniform() - 0.5);
  CHECK(extract_zero_set(mesh, pert).component_count() == 2);
  CHECK(nodal_domains(mesh, pert).count == 3);
}

TEST_CASE("capsule k=1: one sphere copy through the tie-broken midplane") {
  CollarSpec collar;
  collar.sigma = SigmaModel::sphere2;
  collar.r = 0.4;
  collar.gamma = 1.0;
  collar.layers = 6;  // even: a full vertex layer sits exactly at x = 0
  SimplicialMesh mesh = build_sphere_mesh(3, 2, collar);

  Eigen::VectorXd u(mesh.vertex_count());
  for (Index v = 0; v < mesh.vertex_count(); ++v) {
    const double x = mesh.collar_x[static_cast<std::size_t>(v)];
    if (std::isfinite(x))
      u[v] = std::cos(M_PI * (x + 1.0) / 2.0);
    else  // caps: constant continuation of the profile's boundary values
      u[v] = mesh.coords(v, 3) > 0 ? -1.0 : 1.0;
  }

  NodalComplex nc = extract_zero_set(mesh, u);
  REQUIRE(nc.component_count() == 1);
  const NodalComponent& C = nc.components[0];
  CHECK(C.euler_char == 2);  // a 2-sphere
  CHECK(C.orientable);
  CHECK_FALSE(C.touches_boundary);
  CHECK(C.collar_frac == 1.0);
  // the x = 0 vertex layer is shifted positive by the tie-break, so the
  // surface clings to it from the positive side at shift scale
  CHECK(C.collar_mean == Approx(0.0).margin(1e-6));
  CHECK(C.collar_std <= 1e-6);

  CHECK(nodal_domains(mesh, u).count == 2);

  // exact profile: unit amplitude, vanishing misfit
  EdgeLengthMetric metric = reference_metric(mesh);
  ProfileFit fit = profile_error(mesh, metric, u, 0, 1);
  CHECK(fit.beta == Approx(1.0).margin(1e-12));
  CHECK(fit.rel_l2_error <= 1e-12);

  // an orthogonal k=2 contamination of relative size 0.1 shows up as a
  // misfit of about 0.1 and barely moves the fitted amplitude
  Eigen::VectorXd mixed = u;
  for (Index v = 0; v < mesh.vertex_count(); ++v) {
    const double x = mesh.collar_x[static_cast<std::size_t>(v)];
    if (std::isfinite(x)) mixed[v] += 0.1 * std::cos(M_PI * (x + 1.0));
  }
  ProfileFit fit2 = profile_error(mesh, metric, mixed, 0, 1);
  CHECK(fit2.beta == Approx(1.0).margin(0.02));
  CHECK(fit2.rel_l2_error == Approx(0.1).margin(0.02));

  CHECK_THROWS(profile_error(mesh, metric, u, 7, 1));  // no such collar
}

TEST_CASE("surface case: cosine band on the flat 2-torus") {
  SimplicialMesh mesh = build_torus_mesh(2, 6);
  Eigen::VectorXd u(mesh.vertex_count());
  for (Index v = 0; v < mesh.vertex_count(); ++v)
    u[v] = std::cos(2.0 * M_PI * mesh.coords(v, 1));

  NodalComplex nc = extract_zero_set(mesh, u);
  REQUIRE(nc.component_count() == 2);
  for (const NodalComponent& C : nc.components) {
    CHECK(C.euler_char == 0);  // closed loops
    CHECK_FALSE(C.touches_boundary);
    CHECK(C.area == Approx(1.0).epsilon(1e-9));  // straight unit-period lines
  }
  CHECK(nodal_domains(mesh, u).count == 2);
}

TEST_CASE("zero fringe of a one-signed region joins it instead of splitting") {
  // Dirichlet-style field on a 3-ball: strictly negative inside, exact zeros
  // on the boundary sphere.  The sub-threshold boundary ring must adopt the
  // interior sign -- no phantom nodal sheet, no phantom domain.
  CollarSpec collar;
  collar.sigma = SigmaModel::sphere2;
  collar.r = 0.5;
  collar.layers = 6;
  SimplicialMesh mesh = build_ball_mesh(3, 1, collar);

  Eigen::VectorXd r2(mesh.vertex_count());
  for (Index v = 0; v < mesh.vertex_count(); ++v)
    r2[v] = mesh.coords.row(v).squaredNorm();
  const double rb2 = r2.maxCoeff();
  Eigen::VectorXd u = r2.array() - rb2;  // 0 on the boundary, < 0 inside

  NodalComplex nc = extract_zero_set(mesh, u);
  CHECK(nc.component_count() == 0);

  DomainReport rep = nodal_domains(mesh, u);
  CHECK(rep.count == 1);
  CHECK(rep.sign[0] == -1);
}

TEST_CASE("exact-zero ring between two signs keeps the positive tie-break") {
  // sin(2 pi x) on an 8-division flat torus: the zero rings at x = 0 and
  // x = 1/2 sit exactly on grid vertices with both signs adjacent, so they
  // are nudged positive and the two crossing circles survive.
  SimplicialMesh mesh = build_torus_mesh(2, 8);
  Eigen::VectorXd u(mesh.vertex_count());
  for (Index v = 0; v < mesh.vertex_count(); ++v)
    u[v] = std::sin(2.0 * M_PI * mesh.coords(v, 0));

  NodalComplex nc = extract_zero_set(mesh, u);
  REQUIRE(nc.component_count() == 2);
  for (const NodalComponent& C : nc.components) CHECK(C.euler_char == 0);
  CHECK(nodal_domains(mesh, u).count == 2);
}
