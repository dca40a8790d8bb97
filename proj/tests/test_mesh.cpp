#include <catch2/catch_amalgamated.hpp>

#include "nodalforge/builders.hpp"
#include "nodalforge/mesh.hpp"

using namespace nodalforge;

TEST_CASE("flat 2-torus grid: counts and Euler characteristic") {
  SimplicialMesh mesh = build_torus_mesh(2, 4);
  AuditReport rep = mesh_audit(mesh);
  INFO(rep.summary());
  REQUIRE(rep.pass);
  CHECK(rep.vertices == 16);
  CHECK(rep.cells == 32);
  CHECK(rep.edges == 48);
  CHECK(rep.euler == 0);
  CHECK(rep.boundary_facet_count == 0);
}

TEST_CASE("flat 3-torus grid: counts and Euler characteristic") {
  SimplicialMesh mesh = build_torus_mesh(3, 4);
  AuditReport rep = mesh_audit(mesh);
  INFO(rep.summary());
  REQUIRE(rep.pass);
  CHECK(rep.vertices == 64);
  CHECK(rep.cells == 384);
  CHECK(rep.euler == 0);  // closed odd-dimensional manifold
  CHECK(rep.boundary_facet_count == 0);
}

TEST_CASE("icosphere: counts, Euler characteristic 2") {
  SimplicialMesh base = build_sphere_mesh(2, 0);
  AuditReport rep0 = mesh_audit(base);
  INFO(rep0.summary());
  REQUIRE(rep0.pass);
  CHECK(rep0.vertices == 12);
  CHECK(rep0.cells == 20);
  CHECK(rep0.euler == 2);

  SimplicialMesh fine = build_sphere_mesh(2, 2);
  AuditReport rep2 = mesh_audit(fine);
  REQUIRE(rep2.pass);
  CHECK(rep2.vertices == 162);
  CHECK(rep2.cells == 320);
  CHECK(rep2.euler == 2);
}

TEST_CASE("3-sphere from the cross-polytope: counts and chi") {
  SimplicialMesh base = build_sphere_mesh(3, 0);
  AuditReport rep = mesh_audit(base);
  INFO(rep.summary());
  REQUIRE(rep.pass);
  CHECK(rep.vertices == 8);
  CHECK(rep.cells == 16);
  CHECK(rep.euler == 0);

  SimplicialMesh fine = build_sphere_mesh(3, 2);
  AuditReport repf = mesh_audit(fine);
  INFO(repf.summary());
  REQUIRE(repf.pass);
  CHECK(repf.cells == 16 * 64);
  CHECK(repf.euler == 0);
}

TEST_CASE("uniform subdivision multiplies cells by 2^n and preserves chi") {
  SimplicialMesh t2 = build_torus_mesh(2, 4);
  SimplicialMesh t2s = subdivide(t2);
  AuditReport rep = mesh_audit(t2s);
  INFO(rep.summary());
  REQUIRE(rep.pass);
  CHECK(t2s.cell_count() == 4 * t2.cell_count());
  CHECK(rep.euler == 0);

  SimplicialMesh s2 = build_sphere_mesh(2, 1);
  SimplicialMesh s2s = subdivide(s2);
  AuditReport reps = mesh_audit(s2s);
  REQUIRE(reps.pass);
  CHECK(s2s.cell_count() == 4 * s2.cell_count());
  CHECK(reps.euler == 2);

  SimplicialMesh t3 = build_torus_mesh(3, 3);
  SimplicialMesh t3s = subdivide(t3);
  AuditReport rept = mesh_audit(t3s);
  INFO(rept.summary());
  REQUIRE(rept.pass);
  CHECK(t3s.cell_count() == 8 * t3.cell_count());
  CHECK(rept.euler == 0);
}

TEST_CASE("audit rejects broken meshes") {
  SimplicialMesh mesh = build_torus_mesh(2, 4);

  SECTION("repeated vertex in a cell") {
    mesh.cells[0][1] = mesh.cells[0][0];
    AuditReport rep = mesh_audit(mesh);
    CHECK_FALSE(rep.pass);
  }
  SECTION("flipped orientation") {
    std::swap(mesh.cells[0][0], mesh.cells[0][1]);
    AuditReport rep = mesh_audit(mesh);
    CHECK_FALSE(rep.pass);
  }
  SECTION("boundary list out of sync") {
    mesh.boundary_facets.push_back({0, 1, -1});
    AuditReport rep = mesh_audit(mesh);
    CHECK_FALSE(rep.pass);
  }
}

TEST_CASE("orient_cells repairs a scrambled orientation") {
  SimplicialMesh mesh = build_torus_mesh(3, 3);
  // scramble: flip every third cell
  for (Index c = 0; c < mesh.cell_count(); c += 3)
    std::swap(mesh.cells[static_cast<std::size_t>(c)][0],
              mesh.cells[static_cast<std::size_t>(c)][1]);
  orient_cells(mesh);
  AuditReport rep = mesh_audit(mesh);
  INFO(rep.summary());
  REQUIRE(rep.pass);
}

TEST_CASE("slice torus: zones, collar fields, depths") {
  TorusSliceOptions opts;
  opts.sigma_divisions = 6;
  opts.r = 1.0;
  CollarSpec collar;
  collar.sigma = SigmaModel::torus2;
  collar.r = 1.0;
  collar.gamma = 1.0;
  collar.layers = 8;
  opts.zones = {collar_zone(collar), slab_zone(2.0, 6)};
  SimplicialMesh mesh = build_torus_slice_mesh(3, opts);

  AuditReport rep = mesh_audit(mesh);
  INFO(rep.summary());
  REQUIRE(rep.pass);
  CHECK(mesh.vertex_count() == 36 * 14);
  CHECK(mesh.cell_count() == 36 * 14 * 6);
  CHECK(rep.euler == 0);
  REQUIRE(mesh.collars.size() == 1);
  const CollarBand& band = mesh.collars[0];
  CHECK(band.layer_verts.size() == 9);
  CHECK(band.x_of_layer.front() == Catch::Approx(-1.0));
  CHECK(band.x_of_layer.back() == Catch::Approx(1.0));

  // interface vertices belong to the collar; slab interior carries depth
  int collar_verts = 0, deep_verts = 0;
  for (Index v = 0; v < mesh.vertex_count(); ++v) {
    if (mesh.collar_id[static_cast<std::size_t>(v)] >= 0) ++collar_verts;
    if (mesh.ext_depth[static_cast<std::size_t>(v)] > 0) ++deep_verts;
  }
  CHECK(collar_verts == 36 * 9);
  CHECK(deep_verts == 36 * 5);
  // deepest slab vertex: 3 layers in, each of metric length 1/3
  double dmax = 0;
  for (double d : mesh.ext_depth) dmax = std::max(dmax, d);
  CHECK(dmax == Catch::Approx(1.0));

  // region tags: collar cells + transition at both slab ends
  int collar_cells = 0, transition_cells = 0, exterior_cells = 0;
  for (Index tag : mesh.region) {
    if (region_is_collar(tag)) ++collar_cells;
    else if (tag == kRegionTransition) ++transition_cells;
    else ++exterior_cells;
  }
  CHECK(collar_cells == 36 * 8 * 6);
  CHECK(transition_cells == 36 * 2 * 6);
  CHECK(exterior_cells == 36 * 4 * 6);
}

TEST_CASE("capsule 3-sphere: structure and graded caps") {
  CollarSpec collar;
  collar.sigma = SigmaModel::sphere2;
  collar.r = 0.4;
  collar.gamma = 1.0;
  collar.layers = 8;
  CapsuleOptions copts;
  SimplicialMesh mesh = build_sphere_mesh(3, 2, collar, copts);

  AuditReport rep = mesh_audit(mesh, copts.quality_floor);
  INFO(rep.summary());
  REQUIRE(rep.pass);
  CHECK(rep.euler == 0);
  CHECK(rep.boundary_facet_count == 0);

  // cross-section: refinement-2 octasphere has 66 vertices, 128 triangles
  REQUIRE(mesh.collars.size() == 1);
  CHECK(mesh.collars[0].sigma_count() == 66);
  CHECK(static_cast<int>(mesh.collars[0].sigma_tris.size()) == 128);
  // band cells: 128 tris * 8 layers * 3 tets
  int collar_cells = 0;
  for (Index tag : mesh.region)
    if (region_is_collar(tag)) ++collar_cells;
  CHECK(collar_cells == 128 * 8 * 3);
  // caps: 4 prism ring intervals (3 tets per triangle) plus a 128-tet cone
  int cap_intervals = static_cast<int>(copts.cap_pitch_fractions.size());
  int per_cap = (cap_intervals - 1) * 128 * 3 + 128;
  CHECK(mesh.cell_count() == collar_cells + 2 * per_cap);
  CHECK(mesh.vertex_count() == 66 * 9 + 2 * ((cap_intervals - 1) * 66 + 1));

  // all vertices on the unit 3-sphere
  for (Index v = 0; v < mesh.vertex_count(); ++v)
    CHECK(mesh.coords.row(v).norm() == Catch::Approx(1.0).margin(1e-12));

  // cap depth field reaches the pole depth r*pi/2 exactly at the apexes
  double smax = 0.0;
  int at_max = 0;
  for (double d : mesh.ext_depth) smax = std::max(smax, d);
  for (double d : mesh.ext_depth)
    if (d == smax) ++at_max;
  CHECK(smax == Catch::Approx(collar.r * M_PI / 2.0));
  CHECK(at_max == 2);
}

TEST_CASE("capsule 2-sphere builds and audits") {
  CollarSpec collar;
  collar.sigma = SigmaModel::circle;
  collar.r = 0.4;
  collar.gamma = 1.0;
  collar.layers = 8;
  SimplicialMesh mesh = build_sphere_mesh(2, 2, collar);
  AuditReport rep = mesh_audit(mesh, 0.04);
  INFO(rep.summary());
  REQUIRE(rep.pass);
  CHECK(rep.euler == 2);
}

TEST_CASE("ball mesh: boundary sphere and radial regions") {
  CollarSpec collar;
  collar.sigma = SigmaModel::sphere2;
  collar.r = 0.4;
  collar.gamma = 1.0;
  collar.layers = 8;
  BallOptions bopts;
  SimplicialMesh mesh = build_ball_mesh(3, 2, collar, bopts);

  AuditReport rep = mesh_audit(mesh, bopts.quality_floor);
  INFO(rep.summary());
  REQUIRE(rep.pass);
  // boundary = outermost octasphere copy
  CHECK(rep.boundary_facet_count == 128);
  CHECK(rep.euler == 1);  // solid ball

  // depth field increases inward and outward from the collar
  double shell_length = 0.0;
  for (double p : bopts.shell_pitches) shell_length += p;
  double dmax = 0;
  for (double d : mesh.ext_depth) dmax = std::max(dmax, d);
  CHECK(dmax == Catch::Approx(std::max(collar.r * M_PI / 2.0, shell_length)));
}

TEST_CASE("doubled genus-2 handlebody: closed, chi 0, custom cross-section") {
  CollarSpec collar;
  collar.sigma = SigmaModel::custom;
  collar.r = 0.3;
  collar.gamma = 1.0;
  collar.layers = 8;
  SimplicialMesh mesh = build_double_handlebody_mesh(collar);

  AuditReport rep = mesh_audit(mesh, 0.02);
  INFO(rep.summary());
  REQUIRE(rep.pass);
  CHECK(rep.euler == 0);
  CHECK(rep.boundary_facet_count == 0);

  // cross-section is a genus-2 surface: V - E + F = -2
  const CollarBand& band = mesh.collars[0];
  SimplicialMesh sig = sigma_as_surface(band);
  AuditReport srep = mesh_audit(sig, 0.0);
  INFO(srep.summary());
  REQUIRE(srep.pass);
  CHECK(srep.euler == -2);
  CHECK(srep.boundary_facet_count == 0);
}

TEST_CASE("submesh extracts the collar with remapped fields") {
  CollarSpec collar;
  collar.sigma = SigmaModel::torus2;
  collar.r = 1.0;
  collar.gamma = 0.8;
  collar.layers = 6;
  SimplicialMesh mesh = build_torus_mesh(3, 6, collar, 2.0, 6);
  Submesh sub = submesh(mesh, [](Index tag) { return region_is_collar(tag); });

  CHECK(sub.mesh.cell_count() == 36 * 6 * 6);
  CHECK(sub.mesh.vertex_count() == 36 * 7);
  // collar coordinates survive the renumbering
  for (Index v = 0; v < sub.mesh.vertex_count(); ++v) {
    REQUIRE(std::isfinite(sub.mesh.collar_x[static_cast<std::size_t>(v)]));
    Index pv = sub.vertex_to_parent[static_cast<std::size_t>(v)];
    CHECK(sub.mesh.collar_x[static_cast<std::size_t>(v)] ==
          mesh.collar_x[static_cast<std::size_t>(pv)]);
  }
  // the collar band record survives too
  REQUIRE(sub.mesh.collars.size() == 1);
  CHECK(sub.mesh.collars[0].layer_verts.size() == 7);
}
