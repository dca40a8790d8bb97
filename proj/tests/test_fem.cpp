#include <catch2/catch_amalgamated.hpp>

#include "nodalforge/builders.hpp"
#include "nodalforge/fem.hpp"
#include "nodalforge/metric.hpp"

using namespace nodalforge;

namespace {

// unit square split along the (0,2) diagonal into two right triangles
SimplicialMesh unit_square_mesh() {
  SimplicialMesh mesh;
  mesh.name = "square";
  mesh.dim = 2;
  mesh.coords.resize(4, 2);
  mesh.coords << 0, 0, 1, 0, 1, 1, 0, 1;
  mesh.cells = {{0, 1, 2, -1}, {0, 2, 3, -1}};
  mesh.region = {kRegionExterior, kRegionExterior};
  mesh.collar_x.assign(4, kNaN);
  mesh.collar_id.assign(4, -1);
  mesh.ext_depth.assign(4, 0.0);
  derive_boundary_facets(mesh);
  return mesh;
}

}  // namespace

TEST_CASE("two-triangle unit square: five-point stiffness, mass total") {
  SimplicialMesh mesh = unit_square_mesh();
  EdgeLengthMetric metric = reference_metric(mesh);
  OperatorPair ops = assemble(mesh, metric, BoundaryCondition::neumann,
                              MassKind::consistent);

  Eigen::MatrixXd K = Eigen::MatrixXd(ops.stiffness);
  Eigen::MatrixXd M = Eigen::MatrixXd(ops.mass);

  // cotangent weights of the unit square: 1 on the axis-aligned edges, 0 on
  // the diagonal, diagonal entries 1 (corner) and 2 (diagonal endpoints)
  CHECK(K(0, 1) == Catch::Approx(-0.5));
  CHECK(K(0, 3) == Catch::Approx(-0.5));
  CHECK(K(0, 2) == Catch::Approx(0.0).margin(1e-14));
  CHECK(K(1, 2) == Catch::Approx(-0.5));
  CHECK(K(2, 3) == Catch::Approx(-0.5));
  CHECK(K(1, 3) == Catch::Approx(0.0).margin(1e-14));
  CHECK(K(0, 0) == Catch::Approx(1.0));
  CHECK(K(1, 1) == Catch::Approx(1.0));
  CHECK((K - K.transpose()).norm() == Catch::Approx(0.0).margin(1e-14));
  CHECK((K * Eigen::VectorXd::Ones(4)).norm() ==
        Catch::Approx(0.0).margin(1e-13));

  // consistent mass: vertex 0 carries both triangles
  CHECK(M(0, 0) == Catch::Approx(1.0 / 6.0));
  CHECK(M(0, 2) == Catch::Approx(1.0 / 12.0));
  CHECK(M(0, 1) == Catch::Approx(1.0 / 24.0));
  CHECK(M.sum() == Catch::Approx(1.0));  // total area
  CHECK(ops.lumped.sum() == Catch::Approx(1.0));
}

TEST_CASE("constants are in the kernel on a closed flat torus") {
  SimplicialMesh mesh = build_torus_mesh(3, 4);
  EdgeLengthMetric metric = reference_metric(mesh);
  OperatorPair ops = assemble(mesh, metric);
  Eigen::VectorXd c = Eigen::VectorXd::Constant(ops.dof_count(), 2.5);
  CHECK((ops.stiffness * c).cwiseAbs().maxCoeff() ==
        Catch::Approx(0.0).margin(1e-12));
  CHECK(c.dot(ops.mass * c) == Catch::Approx(2.5 * 2.5 * 1.0));  // volume 1
  CHECK(ops.lumped.sum() == Catch::Approx(1.0));
}

TEST_CASE("interpolated collar cosine gives pi^2/4 within O(h^2)") {
  CollarSpec collar;
  collar.sigma = SigmaModel::torus2;
  collar.r = 1.0;
  collar.gamma = 1.0;
  collar.layers = 12;
  SimplicialMesh mesh = build_torus_mesh(3, 8, collar, 2.0, 4);
  Submesh sub = submesh(mesh, [](Index tag) { return region_is_collar(tag); });
  EdgeLengthMetric full = reference_metric(mesh);
  EdgeLengthMetric restricted = restrict_metric(mesh, full, sub);
  OperatorPair ops =
      assemble(sub.mesh, restricted, BoundaryCondition::neumann);

  Eigen::VectorXd v(sub.mesh.vertex_count());
  for (Index w = 0; w < sub.mesh.vertex_count(); ++w) {
    double x = mesh.collar_x[static_cast<std::size_t>(
        sub.vertex_to_parent[static_cast<std::size_t>(w)])];
    REQUIRE(std::isfinite(x));
    v[w] = std::cos(M_PI * (x + 1.0) / 2.0);
  }
  double q = rayleigh(ops, v);
  double mu1 = M_PI * M_PI / 4.0;
  CHECK(std::abs(q - mu1) / mu1 < 0.015);  // h = 1/6 across the collar
}

TEST_CASE("degeneration weights emerge from the sqrt(eps) edge scaling") {
  CollarSpec collar;
  collar.sigma = SigmaModel::torus2;
  collar.r = 1.0;
  collar.gamma = 1.0;
  collar.layers = 6;
  SimplicialMesh mesh = build_torus_mesh(3, 8, collar, 2.0, 4);
  EdgeLengthMetric ref = reference_metric(mesh);
  double eps = 0.25;
  EdgeLengthMetric deg = degenerate_metric(mesh, ref, eps);

  OperatorPair ops_ref = assemble(mesh, ref);
  OperatorPair ops_eps = assemble(mesh, deg);

  // a vertex at the deepest point of the slab: every cell in its support has
  // all its edges scaled, so the local forms scale exactly
  Index deep = -1;
  double dmax = -1.0;
  for (Index v = 0; v < mesh.vertex_count(); ++v)
    if (mesh.ext_depth[static_cast<std::size_t>(v)] > dmax) {
      dmax = mesh.ext_depth[static_cast<std::size_t>(v)];
      deep = v;
    }
  REQUIRE(dmax == Catch::Approx(1.0));

  Eigen::VectorXd phi = Eigen::VectorXd::Zero(mesh.vertex_count());
  phi[deep] = 1.0;
  double k_ratio = phi.dot(ops_eps.stiffness * phi) /
                   phi.dot(ops_ref.stiffness * phi);
  double m_ratio = phi.dot(ops_eps.mass * phi) / phi.dot(ops_ref.mass * phi);
  // n = 3: stiffness scales by eps^(n/2-1), mass by eps^(n/2)
  CHECK(k_ratio == Catch::Approx(std::sqrt(eps)).epsilon(1e-10));
  CHECK(m_ratio == Catch::Approx(std::pow(eps, 1.5)).epsilon(1e-10));
  CHECK(rayleigh(ops_eps, phi) ==
        Catch::Approx(rayleigh(ops_ref, phi) / eps).epsilon(1e-10));
}

TEST_CASE("harmonic extension: constants, maximum principle, energy") {
  CollarSpec collar;
  collar.sigma = SigmaModel::torus2;
  collar.r = 1.0;
  collar.gamma = 1.0;
  collar.layers = 6;
  SimplicialMesh mesh = build_torus_mesh(3, 8, collar, 2.0, 4);
  EdgeLengthMetric ref = reference_metric(mesh);

  // constant data extends to the constant
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.vertex_count());
  ExtensionReport rep = harmonic_extension(mesh, ref, ones);
  CHECK(rep.exterior_components == 1);
  CHECK(rep.components_without_data == 0);
  for (Index v = 0; v < mesh.vertex_count(); ++v)
    if (mesh.collar_id[static_cast<std::size_t>(v)] < 0)
      CHECK(rep.values[v] == Catch::Approx(1.0).margin(1e-10));

  // the first collar profile has trace +1 / -1 on the two interfaces; the
  // extension obeys the discrete maximum principle
  Eigen::VectorXd v1 = collar_mode_field(mesh, 0, 1);
  ExtensionReport rep1 = harmonic_extension(mesh, ref, v1);
  double lo = 0.0, hi = 0.0;
  for (Index v = 0; v < mesh.vertex_count(); ++v)
    if (mesh.collar_id[static_cast<std::size_t>(v)] < 0) {
      lo = std::min(lo, rep1.values[v]);
      hi = std::max(hi, rep1.values[v]);
    }
  CHECK(lo >= -1.0 - 1e-10);
  CHECK(hi <= 1.0 + 1e-10);
  CHECK(rep1.h1_energy > 0.0);
  CHECK(rep1.h1_energy < 50.0);
}

TEST_CASE("span upper bound: constant direction, ordering, capsule") {
  CollarSpec collar;
  collar.sigma = SigmaModel::sphere2;
  collar.r = 0.4;
  collar.gamma = 1.0;
  collar.layers = 6;
  SimplicialMesh mesh = build_sphere_mesh(3, 2, collar);
  EdgeLengthMetric ref = reference_metric(mesh);
  EdgeLengthMetric deg = degenerate_metric(mesh, ref, 0.5);

  UpperBoundReport rep = upper_bound_check(mesh, deg, 2);
  REQUIRE(rep.entries.size() == 3);
  CHECK(rep.entries[0].mu == Catch::Approx(0.0).margin(1e-15));
  CHECK(rep.entries[1].mu == Catch::Approx(M_PI * M_PI / 4.0));
  CHECK(rep.entries[2].mu == Catch::Approx(M_PI * M_PI));
  // the constant test function is exactly the kernel direction
  CHECK(rep.entries[0].bound == Catch::Approx(0.0).margin(1e-9));
  // leading-block maxima are non-decreasing in k
  CHECK(rep.entries[1].bound >= rep.entries[0].bound);
  CHECK(rep.entries[2].bound >= rep.entries[1].bound);
  CHECK(rep.entries[1].bound > 0.5);  // within reach of mu_1 at this eps
  CHECK(rep.entries[1].bound < 10.0);
}

TEST_CASE("dirichlet elimination removes exactly the boundary vertices") {
  CollarSpec collar;
  collar.sigma = SigmaModel::sphere2;
  collar.r = 0.5;
  collar.gamma = 1.0;
  collar.layers = 4;
  SimplicialMesh mesh = build_ball_mesh(3, 1, collar);
  EdgeLengthMetric ref = reference_metric(mesh);
  OperatorPair ops = assemble(mesh, ref, BoundaryCondition::dirichlet);

  std::set<Index> bdry;
  for (const auto& f : mesh.boundary_facets)
    for (int i = 0; i < 3; ++i) bdry.insert(f[static_cast<std::size_t>(i)]);
  CHECK(ops.dof_count() ==
        mesh.vertex_count() - static_cast<Index>(bdry.size()));
  for (Index v : bdry)
    CHECK(ops.dof_of_vertex[static_cast<std::size_t>(v)] == -1);

  // constants are no longer in the kernel
  Eigen::VectorXd c = Eigen::VectorXd::Ones(ops.dof_count());
  CHECK(c.dot(ops.stiffness * c) > 0.1);
  // expand/restrict round-trip
  Eigen::VectorXd full = ops.expand(c);
  CHECK(full.size() == mesh.vertex_count());
  CHECK(ops.restrict_to_dofs(full).isApprox(c));
}
