#include <catch2/catch_amalgamated.hpp>

#include "nodalforge/builders.hpp"
#include "nodalforge/metric.hpp"

using namespace nodalforge;

TEST_CASE("Cayley-Menger measures") {
  // equilateral unit triangle: area^2 = 3/16
  CHECK(cayley_menger_area2(1, 1, 1) == Catch::Approx(3.0 / 16.0));
  // right triangle 3-4-5: area 6
  CHECK(cayley_menger_area2(3, 4, 5) == Catch::Approx(36.0));
  // degenerate: collinear points
  CHECK(cayley_menger_area2(1, 1, 2) == Catch::Approx(0.0).margin(1e-14));
  // violated triangle inequality: negative
  CHECK(cayley_menger_area2(1, 1, 3) < 0.0);

  // regular unit tetrahedron: volume^2 = 1/72
  CHECK(cayley_menger_volume2({1, 1, 1, 1, 1, 1}) == Catch::Approx(1.0 / 72.0));
  // right-corner tetrahedron with unit legs: volume 1/6
  std::array<double, 6> corner{1, 1, 1, std::sqrt(2.0), std::sqrt(2.0),
                               std::sqrt(2.0)};
  CHECK(cayley_menger_volume2(corner) == Catch::Approx(1.0 / 36.0));
  // flat (coplanar) configuration: the unit square read as a tetrahedron
  std::array<double, 6> flat{1, std::sqrt(2.0), 1, 1, std::sqrt(2.0), 1};
  CHECK(cayley_menger_volume2(flat) == Catch::Approx(0.0).margin(1e-12));
  // unrealizable lengths: negative
  std::array<double, 6> bad{1, 1, 1, 1, 1, 1.99};
  CHECK(cayley_menger_volume2(bad) < 0.0);
}

TEST_CASE("reference metric on the flat torus") {
  SimplicialMesh mesh = build_torus_mesh(2, 4);
  EdgeLengthMetric metric = reference_metric(mesh);
  // axis edges 1/4, diagonals sqrt(2)/4; every cell realizable
  int axis = 0, diag = 0;
  for (double l : metric.length) {
    if (l == Catch::Approx(0.25)) ++axis;
    else if (l == Catch::Approx(0.25 * std::sqrt(2.0))) ++diag;
  }
  CHECK(axis == 32);
  CHECK(diag == 16);
  for (double v2 : metric.cell_vol2)
    CHECK(std::sqrt(v2) == Catch::Approx(0.5 * 0.25 * 0.25));
  // total measure = 1
  double total = region_measure(mesh, metric, [](Index) { return true; });
  CHECK(total == Catch::Approx(1.0));
}

TEST_CASE("collar product rule on a slice torus") {
  CollarSpec collar;
  collar.sigma = SigmaModel::torus2;
  collar.r = 1.0;
  collar.gamma = 0.8;
  collar.layers = 8;
  SimplicialMesh mesh = build_torus_mesh(3, 6, collar, 2.0, 6);
  EdgeLengthMetric metric = reference_metric(mesh);

  const CollarBand& band = mesh.collars[0];
  // x-direction edge inside the collar: Gamma * dx = 0.8 * 2/8
  Index a = band.layer_verts[3][0], b = band.layer_verts[4][0];
  CHECK(metric.length_of(a, b) == Catch::Approx(0.8 * 0.25));
  // sigma-direction edge: r * (1/6)
  Index c = band.layer_verts[3][1];
  CHECK(metric.length_of(a, c) == Catch::Approx(1.0 / 6.0));
  // collar ownership recorded
  CHECK(metric.owner[static_cast<std::size_t>(metric.edge_id(a, b))] == 0);

  // collar volume = discrete cross-section area x metric width
  double collar_vol =
      region_measure(mesh, metric, [](Index tag) { return region_is_collar(tag); });
  CHECK(collar_vol == Catch::Approx(1.0 * 2 * 0.8));  // unit flat torus area
}

TEST_CASE("capsule cross-section edges follow the chordal rule") {
  CollarSpec collar;
  collar.sigma = SigmaModel::sphere2;
  collar.r = 0.4;
  collar.gamma = 1.0;
  collar.layers = 8;
  SimplicialMesh mesh = build_sphere_mesh(3, 1, collar);
  EdgeLengthMetric metric = reference_metric(mesh);

  const CollarBand& band = mesh.collars[0];
  // refinement-1 octasphere: vertices 0 (+x) and 6 (midpoint of +x,+y arc)
  // are pi/4 apart on the unit sphere; scaled chord = 0.4 * 2 sin(pi/8)
  double expect = 0.4 * 2.0 * std::sin(M_PI / 8.0);
  Index a = band.layer_verts[4][0];
  bool found = false;
  for (Index s = 0; s < band.sigma_count(); ++s) {
    Index b = band.layer_verts[4][static_cast<std::size_t>(s)];
    if (b == a) continue;
    auto it = metric.index.find(edge_key(a, b));
    if (it == metric.index.end()) continue;
    double len = metric.length[static_cast<std::size_t>(it->second)];
    if (len == Catch::Approx(expect).epsilon(1e-9)) found = true;
  }
  CHECK(found);
}

TEST_CASE("degeneration scales exterior edges by sqrt(eps)") {
  CollarSpec collar;
  collar.sigma = SigmaModel::torus2;
  collar.r = 1.0;
  collar.gamma = 1.0;
  collar.layers = 6;
  SimplicialMesh mesh = build_torus_mesh(3, 8, collar, 2.0, 4);
  EdgeLengthMetric ref = reference_metric(mesh);
  double eps = 0.5;
  EdgeLengthMetric deg = degenerate_metric(mesh, ref, eps);

  CHECK(deg.eps == eps);
  int scaled = 0, kept = 0;
  for (std::size_t e = 0; e < ref.edges.size(); ++e) {
    double ratio = deg.length[e] / ref.length[e];
    if (region_is_collar(ref.owner[e])) {
      CHECK(ratio == Catch::Approx(1.0));
      ++kept;
    } else {
      CHECK(ratio == Catch::Approx(std::sqrt(eps)));
      ++scaled;
    }
  }
  CHECK(scaled > 0);
  CHECK(kept > 0);
  // cells whose edges are all exterior-owned scale their volume by
  // eps^(3/2) = (sqrt(eps))^3; transition cells keep an unscaled base and
  // are excluded
  auto deep = [](Index tag) { return tag == kRegionExterior; };
  double ext_ref = region_measure(mesh, ref, deep);
  double ext_deg = region_measure(mesh, deg, deep);
  CHECK(ext_ref > 0.0);
  CHECK(ext_deg / ext_ref == Catch::Approx(std::pow(eps, 1.5)));
}

TEST_CASE("extreme squashing on a coarse mesh fails realizability loudly") {
  CollarSpec collar;
  collar.sigma = SigmaModel::torus2;
  collar.r = 1.0;
  collar.gamma = 1.0;
  collar.layers = 4;
  SimplicialMesh mesh = build_torus_mesh(3, 4, collar, 2.0, 4);
  EdgeLengthMetric ref = reference_metric(mesh);
  // cells straddling the interface keep their unscaled base but lose their
  // legs; at eps = 1e-6 the Cayley-Menger certificate goes negative
  CHECK_THROWS_WITH(degenerate_metric(mesh, ref, 1e-6),
                    Catch::Matchers::ContainsSubstring("not realizable") &&
                        Catch::Matchers::ContainsSubstring("cell"));
}

TEST_CASE("smoothing profile: geometric ramp, monotone, clamped") {
  SmoothingProfile p{0.5, 2};
  double eps = 0.01;
  CHECK(p.chi(0.0, eps) == 1.0);
  CHECK(p.chi(0.5, eps) == eps);
  CHECK(p.chi(1.0, eps) == eps);
  // log-space interpolation: the symmetric quintic gives exactly sqrt(eps)
  // at the midpoint of the ramp
  CHECK(p.chi(0.25, eps) == Catch::Approx(std::sqrt(eps)));
  double prev = 1.0;
  for (int i = 1; i <= 20; ++i) {
    double chi = p.chi(0.5 * i / 20.0, eps);
    CHECK(chi <= prev + 1e-15);
    CHECK(chi >= eps);
    prev = chi;
  }
  // near the interface the quintic ramp leaves lengths essentially intact
  CHECK(p.chi(0.05, eps) > 0.95);
  // order 0 interpolates eps^t
  SmoothingProfile lin{0.5, 0};
  CHECK(lin.chi(0.125, eps) == Catch::Approx(std::pow(eps, 0.25)));
  // sharp profile: eps immediately
  SmoothingProfile sharp{0.0, 2};
  CHECK(sharp.chi(1e-9, eps) == eps);
}

TEST_CASE("smoothed metric stays realizable where the sharp one breaks") {
  CollarSpec collar;
  collar.sigma = SigmaModel::torus2;
  collar.r = 0.25;
  collar.gamma = 1.0;
  collar.layers = 4;
  TorusSliceOptions opts;
  opts.sigma_divisions = 8;
  opts.r = collar.r;
  opts.zones = {collar_zone(collar), slab_zone({0.05, 0.05})};
  SimplicialMesh mesh = build_torus_slice_mesh(3, opts);
  EdgeLengthMetric ref = reference_metric(mesh);

  // at eps = 0.05 the sharp profile violates the Cayley-Menger certificate
  // on the cells next to the interface (their base is unscaled, their legs
  // are not); a ramp much wider than the slab keeps every cell realizable
  double eps = 0.05;
  CHECK_THROWS_WITH(degenerate_metric(mesh, ref, eps),
                    Catch::Matchers::ContainsSubstring("not realizable"));
  EdgeLengthMetric sm = smoothed_metric(mesh, ref, eps, 0.4, 2);
  CHECK(sm.cell_vol2.size() == static_cast<std::size_t>(mesh.cell_count()));
  // interior slab edges are squashed, but less than the sharp sqrt(eps)
  int shrunk = 0;
  for (std::size_t e = 0; e < ref.edges.size(); ++e) {
    double ratio = sm.length[e] / ref.length[e];
    CHECK(ratio >= std::sqrt(eps) - 1e-12);
    CHECK(ratio <= 1.0 + 1e-12);
    if (ratio < 0.999) ++shrunk;
  }
  CHECK(shrunk > 0);
}

TEST_CASE("metric restriction to the collar submesh") {
  CollarSpec collar;
  collar.sigma = SigmaModel::torus2;
  collar.r = 1.0;
  collar.gamma = 0.9;
  collar.layers = 6;
  SimplicialMesh mesh = build_torus_mesh(3, 6, collar, 2.0, 6);
  EdgeLengthMetric metric = reference_metric(mesh);
  Submesh sub = submesh(mesh, [](Index tag) { return region_is_collar(tag); });
  EdgeLengthMetric rmetric = restrict_metric(mesh, metric, sub);

  for (std::size_t e = 0; e < rmetric.edges.size(); ++e) {
    Index pa = sub.vertex_to_parent[static_cast<std::size_t>(rmetric.edges[e].first)];
    Index pb = sub.vertex_to_parent[static_cast<std::size_t>(rmetric.edges[e].second)];
    CHECK(rmetric.length[e] == metric.length_of(pa, pb));
  }
}

TEST_CASE("handlebody interior diagonals are exterior-owned and squashed") {
  CollarSpec collar;
  collar.sigma = SigmaModel::custom;
  collar.r = 0.3;
  collar.gamma = 1.0;
  collar.layers = 6;
  SimplicialMesh mesh = build_double_handlebody_mesh(collar);
  EdgeLengthMetric ref = reference_metric(mesh);
  double eps = 0.49;
  EdgeLengthMetric deg = degenerate_metric(mesh, ref, eps);

  // every vertex of the handlebody lies on the cross-section, yet edges that
  // tunnel through it (cube diagonals) must still be squashed
  int tunneled = 0, surface_kept = 0;
  for (std::size_t e = 0; e < ref.edges.size(); ++e) {
    double ratio = deg.length[e] / ref.length[e];
    if (region_is_collar(ref.owner[e])) {
      CHECK(ratio == Catch::Approx(1.0));
      ++surface_kept;
    } else {
      CHECK(ratio == Catch::Approx(0.7));  // sqrt(0.49)
      ++tunneled;
    }
  }
  CHECK(tunneled > 0);
  CHECK(surface_kept > 0);
}
