#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "nodalforge/builders.hpp"
#include "nodalforge/morse.hpp"

using namespace nodalforge;
using Catch::Approx;

namespace {

/// Doughnut torus embedded in R^3 with vertical ring plane: major circle in
/// the (x, z) plane, so the height z restricted to the surface is the
/// textbook Morse function with one minimum, two saddles, one maximum.
SimplicialMesh doughnut(int nt, int np, double R = 2.0, double rho = 0.75) {
  SimplicialMesh mesh;
  mesh.name = "doughnut";
  mesh.dim = 2;
  mesh.coords.resize(nt * np, 3);
  auto vid = [&](int i, int j) {
    return static_cast<Index>(((i + nt) % nt) * np + ((j + np) % np));
  };
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < np; ++j) {
      const double th = 2.0 * M_PI * i / nt;   // along the major circle
      const double ph = 2.0 * M_PI * j / np;   // around the tube
      const double w = R + rho * std::cos(ph);
      mesh.coords.row(vid(i, j)) << w * std::cos(th), rho * std::sin(ph),
          w * std::sin(th);
    }
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < np; ++j) {
      mesh.cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), -1});
      mesh.cells.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1), -1});
      mesh.region.push_back(kRegionExterior);
      mesh.region.push_back(kRegionExterior);
    }
  const Index nv = mesh.vertex_count();
  mesh.collar_x.assign(static_cast<std::size_t>(nv), kNaN);
  mesh.collar_id.assign(static_cast<std::size_t>(nv), -1);
  mesh.ext_depth.assign(static_cast<std::size_t>(nv), 0.0);
  mesh.boundary_facets = derive_boundary_facets(mesh);
  return mesh;
}

}  // namespace

TEST_CASE("height on the icosphere: exactly one minimum and one maximum") {
  for (int refinement : {2, 3}) {
    SimplicialMesh mesh = build_sphere_mesh(2, refinement);
    Eigen::VectorXd u = mesh.coords.col(2);

    CriticalReport rep = classify_critical_vertices(mesh, u);
    CHECK(rep.total() == 2);
    CHECK(rep.counts_by_index == std::vector<int>{1, 0, 1});
    CHECK(rep.degenerate_count == 0);
    CHECK(rep.euler_sum() == 2);  // chi of the sphere

    // the index-ordered tie-break is an infinitesimal perturbation: noise
    // at 1e-12 scale that respects vertex order cannot move any count
    Eigen::VectorXd noisy = u;
    for (Index v = 0; v < mesh.vertex_count(); ++v)
      noisy[v] += 1e-12 * (v + 1.0) / mesh.vertex_count();
    CriticalReport rep2 = classify_critical_vertices(mesh, noisy);
    CHECK(rep2.counts_by_index == rep.counts_by_index);
  }
}

TEST_CASE("height on the upright doughnut: the classical 1-2-1 pattern") {
  SimplicialMesh mesh = doughnut(12, 8);
  Eigen::VectorXd u = mesh.coords.col(2);

  CriticalReport rep = classify_critical_vertices(mesh, u);
  CHECK(rep.total() == 4);
  CHECK(rep.counts_by_index == std::vector<int>{1, 2, 1});
  CHECK(rep.degenerate_count == 0);
  CHECK(rep.euler_sum() == 0);  // chi of the torus

  // the saddles sit on the inner equator at heights +-(R - rho)
  std::vector<double> saddle_heights;
  for (const auto& p : rep.points)
    if (p.index == 1) saddle_heights.push_back(p.value);
  REQUIRE(saddle_heights.size() == 2);
  std::sort(saddle_heights.begin(), saddle_heights.end());
  CHECK(saddle_heights[0] == Approx(-1.25).margin(1e-9));
  CHECK(saddle_heights[1] == Approx(1.25).margin(1e-9));
}

TEST_CASE("trigonometric field on the 3-torus: hypercube counts") {
  SimplicialMesh mesh = build_torus_mesh(3, 8);
  Eigen::VectorXd u(mesh.vertex_count());
  for (Index v = 0; v < mesh.vertex_count(); ++v)
    u[v] = std::cos(2.0 * M_PI * mesh.coords(v, 0)) +
           0.5 * std::cos(2.0 * M_PI * mesh.coords(v, 1)) +
           0.25 * std::cos(2.0 * M_PI * mesh.coords(v, 2));

  CriticalReport rep = classify_critical_vertices(mesh, u);
  CHECK(rep.counts_by_index == std::vector<int>{1, 3, 3, 1});
  CHECK(rep.degenerate_count == 0);
  CHECK(rep.euler_sum() == 0);  // chi of the 3-torus

  // classification invariant: index-0 points are true local minima,
  // index-3 points true local maxima (strictly extreme over all
  // cell-sharing neighbors)
  for (const auto& p : rep.points) {
    if (p.index != 0 && p.index != 3) continue;
    std::set<Index> nbrs;
    for (const auto& cell : mesh.cells) {
      bool has = false;
      for (int i = 0; i <= 3; ++i)
        if (cell[static_cast<std::size_t>(i)] == p.vertex) has = true;
      if (!has) continue;
      for (int i = 0; i <= 3; ++i)
        if (cell[static_cast<std::size_t>(i)] != p.vertex)
          nbrs.insert(cell[static_cast<std::size_t>(i)]);
    }
    for (Index w : nbrs) {
      if (p.index == 0) CHECK(u[w] > u[p.vertex]);
      if (p.index == 3) CHECK(u[w] < u[p.vertex]);
    }
  }

  // filtering to the region above zero: critical values are +-1 +-1/2 +-1/4,
  // so that region holds the maximum (7/4), two index-2 saddles (5/4, 3/4),
  // and one index-1 saddle (1/4)
  CriticalReport pos =
      filter_critical(rep, [&](Index v) { return u[v] > 0.0; });
  CHECK(pos.counts_by_index == std::vector<int>{0, 1, 2, 1});
}

TEST_CASE("morse lower-bound verdicts and error paths") {
  CriticalReport rep;
  rep.counts_by_index = {1, 1, 0};
  CHECK(morse_betti_check(rep, {1, 1, 0}));
  CHECK(rep.morse_pass);
  CHECK(rep.betti_reference == std::vector<int>{1, 1, 0});

  CriticalReport thin;
  thin.counts_by_index = {1, 0, 0};
  CHECK_FALSE(morse_betti_check(thin, {1, 1, 0}));
  CHECK_FALSE(thin.morse_pass);

  // the top index is exempt: a solid-body reference {1, g, 0, 0} does not
  // constrain maxima
  CriticalReport solid;
  solid.counts_by_index = {1, 2, 0, 1};
  CHECK(morse_betti_check(solid, {1, 2, 0, 0}));

  CHECK_THROWS(morse_betti_check(rep, {1, 1, 0, 0}));  // length mismatch

  SimplicialMesh mesh = build_sphere_mesh(2, 1);
  Eigen::VectorXd c = Eigen::VectorXd::Constant(mesh.vertex_count(), 3.0);
  CHECK_THROWS(classify_critical_vertices(mesh, c));
}
