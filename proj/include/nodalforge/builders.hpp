#pragma once

// Mesh builders for the model manifolds: flat tori, round spheres, collared
// capsules, slice tori (cross-section x circle), balls with boundary, and
// doubled handlebodies.  Each builder produces a SimplicialMesh with region
// tags, collar bands, per-vertex collar coordinates / exterior depths, and a
// chart rule supplying reference lengths for every non-collar edge.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "nodalforge/core.hpp"
#include "nodalforge/mesh.hpp"
#include "nodalforge/metric.hpp"

namespace nodalforge {

// === chart rule backed by a precomputed table ===============================

class TableChart : public ChartRule {
public:
  std::unordered_map<std::uint64_t, double> lengths;

  double edge_length(Index a, Index b) const override {
    auto it = lengths.find(edge_key(a, b));
    require(it != lengths.end(), "chart: no reference length for edge " +
                                     std::to_string(a) + "-" +
                                     std::to_string(b));
    return it->second;
  }
};

// === cross-section meshes ===================================================

/// A cross-section complex at unit scale: a polyline circle (dim 1) or a
/// triangulated surface (dim 2).
struct SigmaMesh {
  Eigen::MatrixXd pos;  ///< unit-scale embedding (2 or 3 columns)
  std::vector<std::array<Index, 3>> tris;
  std::vector<std::array<Index, 2>> segs;
  bool periodic = false;  ///< flat coordinates wrap with period 1

  int dim() const { return tris.empty() ? 1 : 2; }
  Index count() const { return static_cast<Index>(pos.rows()); }

  /// Unit-scale distance between two nodes (chordal; min-image if periodic).
  double distance(Index a, Index b) const {
    if (!periodic) return (pos.row(a) - pos.row(b)).norm();
    double d2 = 0.0;
    for (int c = 0; c < pos.cols(); ++c) {
      double d = pos(a, c) - pos(b, c);
      d -= std::round(d);
      d2 += d * d;
    }
    return std::sqrt(d2);
  }
};

inline SigmaMesh circle_sigma(int divisions) {
  require(divisions >= 3, "circle_sigma: need at least 3 divisions");
  SigmaMesh s;
  s.pos.resize(divisions, 2);
  for (int i = 0; i < divisions; ++i) {
    double a = 2.0 * M_PI * i / divisions;
    s.pos(i, 0) = std::cos(a);
    s.pos(i, 1) = std::sin(a);
  }
  for (int i = 0; i < divisions; ++i)
    s.segs.push_back({static_cast<Index>(i),
                      static_cast<Index>((i + 1) % divisions)});
  return s;
}

namespace detail {

/// One 1:4 refinement of a triangle surface with optional projection to the
/// unit sphere.  Midpoints are deduplicated through an edge map.
inline void subdivide_surface(Eigen::MatrixXd& pos,
                              std::vector<std::array<Index, 3>>& tris,
                              bool project) {
  std::unordered_map<std::uint64_t, Index> midpoint;
  std::vector<Eigen::VectorXd> extra;
  auto mid = [&](Index a, Index b) -> Index {
    auto key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    Eigen::VectorXd m = 0.5 * (pos.row(a) + pos.row(b));
    if (project) m.normalize();
    Index id = static_cast<Index>(pos.rows() + extra.size());
    extra.push_back(m);
    midpoint[key] = id;
    return id;
  };
  std::vector<std::array<Index, 3>> out;
  out.reserve(tris.size() * 4);
  for (const auto& t : tris) {
    Index a = t[0], b = t[1], c = t[2];
    Index ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    out.push_back({a, ab, ca});
    out.push_back({b, bc, ab});
    out.push_back({c, ca, bc});
    out.push_back({ab, bc, ca});
  }
  Eigen::MatrixXd np(pos.rows() + static_cast<Index>(extra.size()), pos.cols());
  np.topRows(pos.rows()) = pos;
  for (std::size_t i = 0; i < extra.size(); ++i)
    np.row(pos.rows() + static_cast<Index>(i)) = extra[i].transpose();
  pos.swap(np);
  tris.swap(out);
}

}  // namespace detail

/// Subdivided octahedron projected to the unit 2-sphere.  Refinement k gives
/// 4^k * 8 triangles; the vertex pattern matches the base complex of the
/// capsule caps, which lets caps weld onto collar bands exactly.
inline SigmaMesh octasphere_sigma(int refinement) {
  SigmaMesh s;
  s.pos.resize(6, 3);
  s.pos << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
  s.tris = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
            {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
  for (int i = 0; i < refinement; ++i)
    detail::subdivide_surface(s.pos, s.tris, true);
  return s;
}

/// Subdivided icosahedron projected to the unit 2-sphere.
inline SigmaMesh icosphere_sigma(int refinement) {
  SigmaMesh s;
  double p = (1.0 + std::sqrt(5.0)) / 2.0;
  s.pos.resize(12, 3);
  s.pos << -1, p, 0, 1, p, 0, -1, -p, 0, 1, -p, 0,
            0, -1, p, 0, 1, p, 0, -1, -p, 0, 1, -p,
            p, 0, -1, p, 0, 1, -p, 0, -1, -p, 0, 1;
  for (int i = 0; i < 12; ++i) s.pos.row(i).normalize();
  s.tris = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
            {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
            {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
            {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int i = 0; i < refinement; ++i)
    detail::subdivide_surface(s.pos, s.tris, true);
  return s;
}

/// Flat unit 2-torus as a divisions x divisions grid with diagonal splits.
inline SigmaMesh torus_sigma(int divisions) {
  require(divisions >= 3, "torus_sigma: need at least 3 divisions");
  SigmaMesh s;
  int d = divisions;
  s.periodic = true;
  s.pos.resize(d * d, 2);
  auto vid = [&](int i, int j) {
    return static_cast<Index>(((i % d + d) % d) * d + ((j % d + d) % d));
  };
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      s.pos(vid(i, j), 0) = static_cast<double>(i) / d;
      s.pos(vid(i, j), 1) = static_cast<double>(j) / d;
    }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Index v00 = vid(i, j), v10 = vid(i + 1, j);
      Index v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
      s.tris.push_back({v00, v10, v11});
      s.tris.push_back({v00, v11, v01});
    }
  return s;
}

// === extrusion helpers ======================================================

namespace detail {

/// Split the prism over triangle (a,b,c) between two layers into three tets.
/// The split is driven by the cross-section node ranks, so neighbouring
/// prisms sharing a quad face agree on its diagonal.
inline void emit_prism(std::vector<std::array<Index, 4>>& cells,
                       std::vector<Index>& region, std::array<Index, 3> bot,
                       std::array<Index, 3> top, std::array<Index, 3> rank,
                       Index tag) {
  std::array<int, 3> ord{0, 1, 2};
  std::sort(ord.begin(), ord.end(),
            [&](int i, int j) { return rank[static_cast<std::size_t>(i)] < rank[static_cast<std::size_t>(j)]; });
  Index p = bot[static_cast<std::size_t>(ord[0])], q = bot[static_cast<std::size_t>(ord[1])],
        r = bot[static_cast<std::size_t>(ord[2])];
  Index P = top[static_cast<std::size_t>(ord[0])], Q = top[static_cast<std::size_t>(ord[1])],
        R = top[static_cast<std::size_t>(ord[2])];
  cells.push_back({p, q, r, P});
  cells.push_back({q, r, P, Q});
  cells.push_back({r, P, Q, R});
  region.push_back(tag);
  region.push_back(tag);
  region.push_back(tag);
}

/// Split the quad over segment (a,b) between two layers into two triangles.
inline void emit_quad(std::vector<std::array<Index, 4>>& cells,
                      std::vector<Index>& region, std::array<Index, 2> bot,
                      std::array<Index, 2> top, std::array<Index, 2> rank,
                      Index tag) {
  Index p = bot[0], q = bot[1], P = top[0], Q = top[1];
  if (rank[0] > rank[1]) {
    std::swap(p, q);
    std::swap(P, Q);
  }
  cells.push_back({p, q, P, -1});
  cells.push_back({q, Q, P, -1});
  region.push_back(tag);
  region.push_back(tag);
}

/// Emit all cells between two full layers of a cross-section mesh.
inline void emit_layer_cells(const SigmaMesh& sigma,
                             const std::vector<Index>& bot,
                             const std::vector<Index>& top,
                             std::vector<std::array<Index, 4>>& cells,
                             std::vector<Index>& region, Index tag) {
  if (sigma.dim() == 2) {
    for (const auto& t : sigma.tris)
      emit_prism(cells, region,
                 {bot[static_cast<std::size_t>(t[0])], bot[static_cast<std::size_t>(t[1])],
                  bot[static_cast<std::size_t>(t[2])]},
                 {top[static_cast<std::size_t>(t[0])], top[static_cast<std::size_t>(t[1])],
                  top[static_cast<std::size_t>(t[2])]},
                 {t[0], t[1], t[2]}, tag);
  } else {
    for (const auto& e : sigma.segs)
      emit_quad(cells, region,
                {bot[static_cast<std::size_t>(e[0])], bot[static_cast<std::size_t>(e[1])]},
                {top[static_cast<std::size_t>(e[0])], top[static_cast<std::size_t>(e[1])]},
                {e[0], e[1]}, tag);
  }
}

/// One 1:8 refinement of a tetrahedral complex with optional projection of
/// new vertices to the unit sphere of the ambient space.
inline void subdivide_tets(Eigen::MatrixXd& pos,
                           std::vector<std::array<Index, 4>>& tets,
                           bool project) {
  std::unordered_map<std::uint64_t, Index> midpoint;
  std::vector<Eigen::VectorXd> extra;
  auto mid = [&](Index a, Index b) -> Index {
    auto key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    Eigen::VectorXd m = 0.5 * (pos.row(a) + pos.row(b));
    if (project) m.normalize();
    Index id = static_cast<Index>(pos.rows() + extra.size());
    extra.push_back(m);
    midpoint[key] = id;
    return id;
  };
  std::vector<std::array<Index, 4>> out;
  out.reserve(tets.size() * 8);
  auto pt = [&](Index v) -> Eigen::VectorXd {
    if (v < pos.rows()) return pos.row(v).transpose();
    return extra[static_cast<std::size_t>(v - pos.rows())];
  };
  for (const auto& t : tets) {
    Index a = t[0], b = t[1], c = t[2], d = t[3];
    Index ab = mid(a, b), ac = mid(a, c), ad = mid(a, d);
    Index bc = mid(b, c), bd = mid(b, d), cd = mid(c, d);
    out.push_back({a, ab, ac, ad});
    out.push_back({b, ab, bc, bd});
    out.push_back({c, ac, bc, cd});
    out.push_back({d, ad, bd, cd});
    struct Diag {
      Index p, q;
      double len;
    };
    auto dlen = [&](Index p, Index q) { return (pt(p) - pt(q)).norm(); };
    std::array<Diag, 3> diags{Diag{ab, cd, dlen(ab, cd)},
                              Diag{ac, bd, dlen(ac, bd)},
                              Diag{ad, bc, dlen(ad, bc)}};
    std::stable_sort(diags.begin(), diags.end(),
                     [](const Diag& x, const Diag& y) { return x.len < y.len; });
    Index p = diags[0].p, q = diags[0].q;
    std::array<Index, 4> others{};
    std::size_t m = 0;
    for (Index w : {ab, ac, ad, bc, bd, cd})
      if (w != p && w != q) others[m++] = w;
    auto ends = [&](Index w) -> std::pair<Index, Index> {
      if (w == ab) return {a, b};
      if (w == ac) return {a, c};
      if (w == ad) return {a, d};
      if (w == bc) return {b, c};
      if (w == bd) return {b, d};
      return {c, d};
    };
    auto is_oct_edge = [&](Index u, Index v) {
      auto [u1, u2] = ends(u);
      auto [v1, v2] = ends(v);
      return ((u1 == v1) + (u1 == v2) + (u2 == v1) + (u2 == v2)) == 1;
    };
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j)
        if (is_oct_edge(others[i], others[j]))
          out.push_back({p, q, others[i], others[j]});
  }
  Eigen::MatrixXd np(pos.rows() + static_cast<Index>(extra.size()), pos.cols());
  np.topRows(pos.rows()) = pos;
  for (std::size_t i = 0; i < extra.size(); ++i)
    np.row(pos.rows() + static_cast<Index>(i)) = extra[i].transpose();
  pos.swap(np);
  tets.swap(out);
}

/// Finish a mesh under construction: consistent orientation, boundary scan,
/// and a structural + shape audit (throws on failure).
inline void finalize(SimplicialMesh& mesh, double quality_floor) {
  orient_cells(mesh);
  mesh.boundary_facets = derive_boundary_facets(mesh);
  AuditReport rep = mesh_audit(mesh, quality_floor);
  require(rep.pass, "builder audit failed for " + mesh.name + ":\n" +
                        rep.summary());
}

/// Two-point Gauss approximation of a cap edge length: s varies linearly,
/// the transverse chord factor is c, and the ring radius is rho(s).
template <typename Rho>
inline double cap_edge_length(double s1, double s2, double c, Rho rho) {
  auto integrand = [&](double t) {
    double s = s1 + (s2 - s1) * t;
    double rr = rho(s);
    double ds = s2 - s1;
    return std::sqrt(ds * ds + rr * rr * c * c);
  };
  double g = 1.0 / (2.0 * std::sqrt(3.0));
  return 0.5 * (integrand(0.5 - g) + integrand(0.5 + g));
}

}  // namespace detail

// === flat torus =============================================================

/// Uniform flat torus T^n (n = 2 or 3) on a periodic divisions^n grid.
/// Reference metric: unit side length (edge lengths are min-image distances).
inline SimplicialMesh build_torus_mesh(int n, int divisions) {
  require(n == 2 || n == 3, "build_torus_mesh: n must be 2 or 3");
  require(divisions >= 3, "build_torus_mesh: need at least 3 divisions");
  SimplicialMesh mesh;
  mesh.name = "torus" + std::to_string(n) + "_d" + std::to_string(divisions);
  mesh.dim = n;
  int d = divisions;

  if (n == 2) {
    mesh.coords.resize(d * d, 2);
    mesh.period = {1, 1, 0, 0};
    auto vid = [&](int i, int j) {
      return static_cast<Index>(((i % d + d) % d) * d + ((j % d + d) % d));
    };
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        mesh.coords(vid(i, j), 0) = static_cast<double>(i) / d;
        mesh.coords(vid(i, j), 1) = static_cast<double>(j) / d;
      }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        Index v00 = vid(i, j), v10 = vid(i + 1, j);
        Index v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
        mesh.cells.push_back({v00, v10, v11, -1});
        mesh.cells.push_back({v00, v11, v01, -1});
        mesh.region.push_back(kRegionExterior);
        mesh.region.push_back(kRegionExterior);
      }
  } else {
    mesh.coords.resize(d * d * d, 3);
    mesh.period = {1, 1, 1, 0};
    auto vid = [&](int i, int j, int k) {
      auto w = [&](int v) { return (v % d + d) % d; };
      return static_cast<Index>((w(i) * d + w(j)) * d + w(k));
    };
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          Index v = vid(i, j, k);
          mesh.coords(v, 0) = static_cast<double>(i) / d;
          mesh.coords(v, 1) = static_cast<double>(j) / d;
          mesh.coords(v, 2) = static_cast<double>(k) / d;
        }
    // Kuhn subdivision: six path tetrahedra per cube (one per axis order).
    static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                    {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (const auto& perm : perms) {
            std::array<int, 3> at{i, j, k};
            std::array<Index, 4> tet{};
            tet[0] = vid(at[0], at[1], at[2]);
            for (int step = 0; step < 3; ++step) {
              at[static_cast<std::size_t>(perm[step])] += 1;
              tet[static_cast<std::size_t>(step + 1)] = vid(at[0], at[1], at[2]);
            }
            mesh.cells.push_back(tet);
            mesh.region.push_back(kRegionExterior);
          }
  }

  Index nv = mesh.vertex_count();
  mesh.collar_x.assign(static_cast<std::size_t>(nv), kNaN);
  mesh.collar_id.assign(static_cast<std::size_t>(nv), -1);
  mesh.ext_depth.assign(static_cast<std::size_t>(nv), 0.0);

  auto chart = std::make_shared<TableChart>();
  for (const auto& [a, b] : collect_edges(mesh)) {
    Eigen::VectorXd pb = mesh.unwrapped(a, b);
    chart->lengths[edge_key(a, b)] =
        (pb - mesh.coords.row(a).transpose()).norm();
  }
  mesh.chart = chart;
  detail::finalize(mesh, 0.05);
  return mesh;
}

// === round spheres ==========================================================

/// Round sphere S^n (n = 2 or 3) at unit radius: subdivided icosahedron for
/// n = 2, subdivided 16-cell for n = 3.  Reference lengths are chordal.
inline SimplicialMesh build_sphere_mesh(int n, int refinement) {
  require(n == 2 || n == 3, "build_sphere_mesh: n must be 2 or 3");
  SimplicialMesh mesh;
  mesh.name = "sphere" + std::to_string(n) + "_r" + std::to_string(refinement);
  mesh.dim = n;

  if (n == 2) {
    SigmaMesh s = icosphere_sigma(refinement);
    mesh.coords = s.pos;
    for (const auto& t : s.tris) {
      mesh.cells.push_back({t[0], t[1], t[2], -1});
      mesh.region.push_back(kRegionExterior);
    }
  } else {
    Eigen::MatrixXd pos(8, 4);
    pos << 1, 0, 0, 0, -1, 0, 0, 0, 0, 1, 0, 0, 0, -1, 0, 0,
           0, 0, 1, 0, 0, 0, -1, 0, 0, 0, 0, 1, 0, 0, 0, -1;
    std::vector<std::array<Index, 4>> tets;
    for (int s0 = 0; s0 < 2; ++s0)
      for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2)
          for (int s3 = 0; s3 < 2; ++s3)
            tets.push_back({static_cast<Index>(0 + s0), static_cast<Index>(2 + s1),
                            static_cast<Index>(4 + s2), static_cast<Index>(6 + s3)});
    for (int i = 0; i < refinement; ++i)
      detail::subdivide_tets(pos, tets, true);
    mesh.coords = pos;
    mesh.cells = tets;
    mesh.region.assign(tets.size(), kRegionExterior);
  }

  Index nv = mesh.vertex_count();
  mesh.collar_x.assign(static_cast<std::size_t>(nv), kNaN);
  mesh.collar_id.assign(static_cast<std::size_t>(nv), -1);
  mesh.ext_depth.assign(static_cast<std::size_t>(nv), 0.0);

  auto chart = std::make_shared<TableChart>();
  for (const auto& [a, b] : collect_edges(mesh))
    chart->lengths[edge_key(a, b)] =
        (mesh.coords.row(a) - mesh.coords.row(b)).norm();
  mesh.chart = chart;
  detail::finalize(mesh, 0.05);
  return mesh;
}

// === slice torus ============================================================
// Sigma x S^1 manifolds assembled from an ordered cyclic schedule of zones:
// collar bands (product metric Gamma^2 dx^2 + r^2 g_Sigma over [-1,1]) and
// slabs (product metric ds^2 + r^2 g_Sigma of prescribed length).

struct TorusSliceZone {
  bool is_collar = false;
  CollarSpec collar;        ///< used when is_collar
  double slab_length = 1.0; ///< metric length of a slab zone
  int slab_layers = 8;
  /// Optional explicit slab layer thicknesses (summing to slab_length).
  /// A thick first/last interval keeps the cells next to the collar
  /// realizable once the slab is conformally squashed.
  std::vector<double> slab_pitches;
};

inline TorusSliceZone collar_zone(const CollarSpec& spec) {
  TorusSliceZone z;
  z.is_collar = true;
  z.collar = spec;
  return z;
}

inline TorusSliceZone slab_zone(double length, int layers) {
  TorusSliceZone z;
  z.slab_length = length;
  z.slab_layers = layers;
  return z;
}

inline TorusSliceZone slab_zone(std::vector<double> pitches) {
  TorusSliceZone z;
  z.slab_length = 0.0;
  for (double p : pitches) {
    require(p > 0, "slab_zone: pitches must be positive");
    z.slab_length += p;
  }
  z.slab_layers = static_cast<int>(pitches.size());
  z.slab_pitches = std::move(pitches);
  return z;
}

struct TorusSliceOptions {
  int sigma_divisions = 8;
  double r = 1.0;  ///< cross-section scale shared by every zone
  std::vector<TorusSliceZone> zones;
  double quality_floor = 0.05;
};

/// Build T^(n) = Sigma x S^1 with the given zone schedule around the circle
/// (n = 3: Sigma is a flat 2-torus; n = 2: Sigma is a circle).
inline SimplicialMesh build_torus_slice_mesh(int n,
                                             const TorusSliceOptions& opts) {
  require(n == 2 || n == 3, "build_torus_slice_mesh: n must be 2 or 3");
  require(!opts.zones.empty(), "build_torus_slice_mesh: no zones given");
  for (std::size_t z = 0; z < opts.zones.size(); ++z) {
    const auto& a = opts.zones[z];
    const auto& b = opts.zones[(z + 1) % opts.zones.size()];
    require(!(a.is_collar && b.is_collar),
            "build_torus_slice_mesh: adjacent collar zones are not supported");
  }

  SigmaMesh sigma = (n == 3) ? torus_sigma(opts.sigma_divisions)
                             : circle_sigma(opts.sigma_divisions);
  const Index ns = sigma.count();

  // layer schedule: layer count, metric coordinate of each layer, zone of
  // each interval
  int total_layers = 0;
  for (const auto& z : opts.zones)
    total_layers += z.is_collar ? z.collar.layers : z.slab_layers;
  require(total_layers >= 3, "build_torus_slice_mesh: too few layers");

  std::vector<double> s_of_layer(static_cast<std::size_t>(total_layers), 0.0);
  std::vector<int> zone_of_interval(static_cast<std::size_t>(total_layers), 0);
  {
    int lay = 0;
    double s = 0.0;
    for (std::size_t z = 0; z < opts.zones.size(); ++z) {
      const auto& zone = opts.zones[z];
      int count = zone.is_collar ? zone.collar.layers : zone.slab_layers;
      if (!zone.is_collar && !zone.slab_pitches.empty())
        require(static_cast<int>(zone.slab_pitches.size()) == count,
                "build_torus_slice_mesh: slab pitch count mismatch");
      for (int i = 0; i < count; ++i) {
        double step;
        if (zone.is_collar)
          step = 2.0 * zone.collar.gamma / zone.collar.layers;
        else if (!zone.slab_pitches.empty())
          step = zone.slab_pitches[static_cast<std::size_t>(i)];
        else
          step = zone.slab_length / zone.slab_layers;
        s_of_layer[static_cast<std::size_t>(lay)] = s;
        zone_of_interval[static_cast<std::size_t>(lay)] = static_cast<int>(z);
        s += step;
        ++lay;
      }
    }
  }
  double s_total = 0.0;
  for (const auto& z : opts.zones)
    s_total += z.is_collar ? 2.0 * z.collar.gamma : z.slab_length;

  SimplicialMesh mesh;
  mesh.name = "torus_slice" + std::to_string(n);
  mesh.dim = n;
  Index nv = static_cast<Index>(total_layers) * ns;
  mesh.coords.resize(nv, n);
  mesh.period = {1, 1, 1, 0};
  if (n == 2) mesh.period = {1, 1, 0, 0};
  mesh.collar_x.assign(static_cast<std::size_t>(nv), kNaN);
  mesh.collar_id.assign(static_cast<std::size_t>(nv), -1);
  mesh.ext_depth.assign(static_cast<std::size_t>(nv), 0.0);

  auto vid = [&](int layer, Index s) {
    return static_cast<Index>(((layer % total_layers + total_layers) %
                               total_layers) * ns + s);
  };

  for (int lay = 0; lay < total_layers; ++lay) {
    double zc = s_of_layer[static_cast<std::size_t>(lay)] / s_total;
    for (Index s = 0; s < ns; ++s) {
      Index v = vid(lay, s);
      if (n == 3) {
        mesh.coords(v, 0) = sigma.pos(s, 0);
        mesh.coords(v, 1) = sigma.pos(s, 1);
        mesh.coords(v, 2) = zc;
      } else {
        mesh.coords(v, 0) = static_cast<double>(s) / opts.sigma_divisions;
        mesh.coords(v, 1) = zc;
      }
    }
  }

  // collar bands: vertex fields and band records
  {
    int lay = 0;
    for (std::size_t z = 0; z < opts.zones.size(); ++z) {
      const auto& zone = opts.zones[z];
      int count = zone.is_collar ? zone.collar.layers : zone.slab_layers;
      if (zone.is_collar) {
        CollarBand band;
        band.spec = zone.collar;
        band.spec.r = opts.r;
        Index cid = static_cast<Index>(mesh.collars.size());
        for (int i = 0; i <= zone.collar.layers; ++i) {
          double x = -1.0 + 2.0 * i / zone.collar.layers;
          band.x_of_layer.push_back(x);
          std::vector<Index> verts(static_cast<std::size_t>(ns));
          for (Index s = 0; s < ns; ++s) {
            Index v = vid(lay + i, s);
            verts[static_cast<std::size_t>(s)] = v;
            Index prev = mesh.collar_id[static_cast<std::size_t>(v)];
            require(prev < 0 || prev == cid,
                    "build_torus_slice_mesh: collars share an interface layer");
            mesh.collar_x[static_cast<std::size_t>(v)] = x;
            mesh.collar_id[static_cast<std::size_t>(v)] = cid;
          }
          band.layer_verts.push_back(std::move(verts));
        }
        band.sigma_pos = sigma.pos;
        band.sigma_periodic = sigma.periodic;
        band.sigma_tris = sigma.tris;
        band.sigma_segs = sigma.segs;
        mesh.collars.push_back(std::move(band));
      }
      lay += count;
    }
  }

  // slab interior depths (distance to the nearest end of the slab zone)
  {
    int lay = 0;
    for (const auto& zone : opts.zones) {
      int count = zone.is_collar ? zone.collar.layers : zone.slab_layers;
      if (!zone.is_collar) {
        auto pitch = [&](int i) {
          return zone.slab_pitches.empty()
                     ? zone.slab_length / zone.slab_layers
                     : zone.slab_pitches[static_cast<std::size_t>(i)];
        };
        for (int i = 1; i < count; ++i) {
          double from_lo = 0.0, from_hi = 0.0;
          for (int j = 0; j < i; ++j) from_lo += pitch(j);
          for (int j = i; j < count; ++j) from_hi += pitch(j);
          double depth = std::min(from_lo, from_hi);
          for (Index s = 0; s < ns; ++s) {
            Index v = vid(lay + i, s);
            if (mesh.collar_id[static_cast<std::size_t>(v)] < 0)
              mesh.ext_depth[static_cast<std::size_t>(v)] = depth;
          }
        }
      }
      lay += count;
    }
  }

  // cells per interval
  for (int lay = 0; lay < total_layers; ++lay) {
    const auto& zone =
        opts.zones[static_cast<std::size_t>(zone_of_interval[static_cast<std::size_t>(lay)])];
    Index tag;
    if (zone.is_collar) {
      // which collar id? count collar zones up to this one
      Index cid = 0;
      for (int zz = 0; zz < zone_of_interval[static_cast<std::size_t>(lay)]; ++zz)
        if (opts.zones[static_cast<std::size_t>(zz)].is_collar) ++cid;
      tag = cid;
    } else {
      // a slab interval is a transition interval if it touches a collar
      bool touches = false;
      for (Index s = 0; s < ns && !touches; ++s)
        if (mesh.collar_id[static_cast<std::size_t>(vid(lay, s))] >= 0 ||
            mesh.collar_id[static_cast<std::size_t>(vid(lay + 1, s))] >= 0)
          touches = true;
      tag = touches ? kRegionTransition : kRegionExterior;
    }
    std::vector<Index> bot(static_cast<std::size_t>(ns)),
        top(static_cast<std::size_t>(ns));
    for (Index s = 0; s < ns; ++s) {
      bot[static_cast<std::size_t>(s)] = vid(lay, s);
      top[static_cast<std::size_t>(s)] = vid(lay + 1, s);
    }
    detail::emit_layer_cells(sigma, bot, top, mesh.cells, mesh.region, tag);
  }

  // chart: product lengths from the layer schedule
  {
    auto chart = std::make_shared<TableChart>();
    std::vector<double> s_of_vertex(static_cast<std::size_t>(nv), 0.0);
    std::vector<Index> sig_of_vertex(static_cast<std::size_t>(nv), 0);
    for (int lay = 0; lay < total_layers; ++lay)
      for (Index s = 0; s < ns; ++s) {
        s_of_vertex[static_cast<std::size_t>(vid(lay, s))] =
            s_of_layer[static_cast<std::size_t>(lay)];
        sig_of_vertex[static_cast<std::size_t>(vid(lay, s))] = s;
      }
    for (const auto& [a, b] : collect_edges(mesh)) {
      double ds = s_of_vertex[static_cast<std::size_t>(a)] -
                  s_of_vertex[static_cast<std::size_t>(b)];
      ds -= s_total * std::round(ds / s_total);
      double dt = opts.r * sigma.distance(sig_of_vertex[static_cast<std::size_t>(a)],
                                          sig_of_vertex[static_cast<std::size_t>(b)]);
      chart->lengths[edge_key(a, b)] = std::hypot(ds, dt);
    }
    mesh.chart = chart;
  }

  detail::finalize(mesh, opts.quality_floor);
  return mesh;
}

/// Convenience wrapper: one collar band plus one slab closing the circle.
inline SimplicialMesh build_torus_mesh(int n, int divisions,
                                       const CollarSpec& collar,
                                       double slab_length = 2.0,
                                       int slab_layers = 12) {
  TorusSliceOptions opts;
  opts.sigma_divisions = divisions;
  opts.r = collar.r;
  opts.zones = {collar_zone(collar), slab_zone(slab_length, slab_layers)};
  return build_torus_slice_mesh(n, opts);
}

// === collared capsule sphere ================================================
// S^n split as cap / collar band / cap.  The band carries the product metric
// Gamma^2 dx^2 + r^2 g_Sigma over a latitude band |theta| <= theta_c; each
// cap is a round hemisphere-like cap of meridian depth r*pi/2, with ring
// radius rho(s) = r cos(s/r) shrinking to a pole.

struct CapsuleOptions {
  double theta_c = 0.7;  ///< coordinate half-angle of the collar band
  /// Cap layer thicknesses as fractions of the cap depth r*pi/2, listed from
  /// the interface towards the pole; the final interval is the apex cone.
  /// The default front-loads a thick first interval: cells touching the
  /// unscaled interface stay realizable under conformal squashing exactly
  /// when the first exterior interval spans several sigma edges.  The last
  /// fraction matches the shrinking ring radius, keeping the cone isotropic.
  std::vector<double> cap_pitch_fractions{0.4456, 0.2546, 0.1592, 0.1406};
  double quality_floor = 0.04;
};

inline SimplicialMesh build_sphere_mesh(int n, int refinement,
                                        const CollarSpec& collar,
                                        const CapsuleOptions& opts = {}) {
  require(n == 2 || n == 3, "build_sphere_mesh: n must be 2 or 3");
  require(collar.gamma > 0.5 && collar.gamma <= 1.0,
          "build_sphere_mesh: gamma must lie in (1/2, 1]");

  const double r = collar.r;
  const int L = collar.layers;
  const double theta_c = opts.theta_c;
  const double s_cap = r * M_PI / 2.0;  // meridian depth of each cap

  SigmaMesh sigma = (n == 3) ? octasphere_sigma(refinement)
                             : circle_sigma(4 << refinement);
  const Index ns = sigma.count();
  const int ecols = sigma.pos.cols() + 1;  // ambient embedding dimension

  SimplicialMesh mesh;
  mesh.name = "capsule" + std::to_string(n);
  mesh.dim = n;

  std::vector<Eigen::VectorXd> coords;
  // per-vertex chart data for cap edges
  std::vector<double> s_depth;           // meridian depth into a cap
  std::vector<Eigen::VectorXd> sig_dir;  // unit sigma direction (empty: pole)

  auto embed = [&](const Eigen::VectorXd& dir, double theta) {
    Eigen::VectorXd p(ecols);
    p.head(ecols - 1) = std::cos(theta) * dir;
    p[ecols - 1] = std::sin(theta);
    return p;
  };

  auto add_vertex = [&](const Eigen::VectorXd& pos, double s,
                        const Eigen::VectorXd& dir) {
    coords.push_back(pos);
    s_depth.push_back(s);
    sig_dir.push_back(dir);
    return static_cast<Index>(coords.size() - 1);
  };

  // --- collar band ---
  CollarBand band;
  band.spec = collar;
  std::vector<std::vector<Index>> layer(static_cast<std::size_t>(L + 1));
  for (int j = 0; j <= L; ++j) {
    double x = -1.0 + 2.0 * j / L;
    band.x_of_layer.push_back(x);
    layer[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(ns));
    for (Index s = 0; s < ns; ++s) {
      Eigen::VectorXd dir = sigma.pos.row(s);
      layer[static_cast<std::size_t>(j)][static_cast<std::size_t>(s)] =
          add_vertex(embed(dir, theta_c * x), 0.0, dir);
    }
  }
  for (int j = 0; j < L; ++j)
    detail::emit_layer_cells(sigma, layer[static_cast<std::size_t>(j)],
                             layer[static_cast<std::size_t>(j + 1)], mesh.cells,
                             mesh.region, 0);
  band.layer_verts = layer;
  band.sigma_pos = sigma.pos;
  band.sigma_tris = sigma.tris;
  band.sigma_segs = sigma.segs;
  mesh.collars.push_back(band);

  // --- caps ---
  // Each cap is a stack of shrinking sigma rings ending in an apex cone.
  // Ring j sits at meridian depth s_j (partial sums of the pitch schedule)
  // and at ambient latitude interpolated between theta_c and the pole.
  // Cap edges are collected so the chart table covers exactly the exterior.
  std::vector<std::pair<Index, Index>> cap_edges;

  std::vector<double> pitches;
  {
    double sum = 0.0;
    for (double f : opts.cap_pitch_fractions) {
      require(f > 0.0, "capsule: cap pitch fractions must be positive");
      sum += f;
    }
    require(std::abs(sum - 1.0) < 1e-9,
            "capsule: cap pitch fractions must sum to 1");
    for (double f : opts.cap_pitch_fractions) pitches.push_back(f * s_cap);
  }
  const int P = static_cast<int>(pitches.size());
  require(P >= 2, "capsule: need at least two cap intervals");

  for (int side = -1; side <= 1; side += 2) {
    int interface_layer = (side > 0) ? L : 0;
    std::vector<Index> below = layer[static_cast<std::size_t>(interface_layer)];
    double s = 0.0;
    for (int j = 1; j <= P; ++j) {
      s += pitches[static_cast<std::size_t>(j - 1)];
      Index tag = (j == 1) ? kRegionTransition : kRegionExterior;
      std::size_t cell0 = mesh.cells.size();
      if (j == P) {
        // innermost interval: cone from the last ring to the apex
        Eigen::VectorXd pos = Eigen::VectorXd::Zero(ecols);
        pos[ecols - 1] = side;
        Index apex = add_vertex(pos, s_cap, Eigen::VectorXd());
        if (n == 3) {
          for (const auto& t : sigma.tris) {
            mesh.cells.push_back({below[static_cast<std::size_t>(t[0])],
                                  below[static_cast<std::size_t>(t[1])],
                                  below[static_cast<std::size_t>(t[2])], apex});
            mesh.region.push_back(tag);
          }
        } else {
          for (const auto& e : sigma.segs) {
            mesh.cells.push_back({below[static_cast<std::size_t>(e[0])],
                                  below[static_cast<std::size_t>(e[1])], apex,
                                  -1});
            mesh.region.push_back(tag);
          }
        }
      } else {
        double theta = theta_c + (M_PI / 2.0 - theta_c) * (s / s_cap);
        std::vector<Index> ring(static_cast<std::size_t>(ns));
        for (Index sv = 0; sv < ns; ++sv) {
          Eigen::VectorXd dir = sigma.pos.row(sv);
          Eigen::VectorXd pos = embed(dir, theta);
          pos[ecols - 1] *= side;
          ring[static_cast<std::size_t>(sv)] = add_vertex(pos, s, dir);
        }
        detail::emit_layer_cells(sigma, below, ring, mesh.cells, mesh.region,
                                 tag);
        below = ring;
      }
      for (std::size_t c = cell0; c < mesh.cells.size(); ++c)
        for (int i = 0; i < n + 1; ++i)
          for (int k = i + 1; k < n + 1; ++k)
            cap_edges.emplace_back(mesh.cells[c][static_cast<std::size_t>(i)],
                                   mesh.cells[c][static_cast<std::size_t>(k)]);
    }
  }

  // --- assemble fields ---
  Index nv = static_cast<Index>(coords.size());
  mesh.coords.resize(nv, ecols);
  for (Index v = 0; v < nv; ++v) mesh.coords.row(v) = coords[static_cast<std::size_t>(v)];
  mesh.collar_x.assign(static_cast<std::size_t>(nv), kNaN);
  mesh.collar_id.assign(static_cast<std::size_t>(nv), -1);
  mesh.ext_depth.assign(static_cast<std::size_t>(nv), 0.0);
  for (int j = 0; j <= L; ++j)
    for (Index s = 0; s < ns; ++s) {
      Index v = layer[static_cast<std::size_t>(j)][static_cast<std::size_t>(s)];
      mesh.collar_x[static_cast<std::size_t>(v)] = band.x_of_layer[static_cast<std::size_t>(j)];
      mesh.collar_id[static_cast<std::size_t>(v)] = 0;
    }
  for (Index v = 0; v < nv; ++v)
    if (mesh.collar_id[static_cast<std::size_t>(v)] < 0)
      mesh.ext_depth[static_cast<std::size_t>(v)] =
          s_depth[static_cast<std::size_t>(v)];

  // --- chart: cap edge lengths ---
  auto rho = [&](double s) { return r * std::cos(s / r); };
  auto chart = std::make_shared<TableChart>();
  for (const auto& [a, b] : cap_edges) {
    auto key = edge_key(a, b);
    if (chart->lengths.count(key)) continue;
    double sa = s_depth[static_cast<std::size_t>(a)];
    double sb = s_depth[static_cast<std::size_t>(b)];
    bool pole_a = sig_dir[static_cast<std::size_t>(a)].size() == 0;
    bool pole_b = sig_dir[static_cast<std::size_t>(b)].size() == 0;
    double len;
    if (pole_a || pole_b) {
      len = std::abs(sa - sb);
    } else {
      double c = (sig_dir[static_cast<std::size_t>(a)] -
                  sig_dir[static_cast<std::size_t>(b)])
                     .norm();
      len = detail::cap_edge_length(sa, sb, c, rho);
    }
    chart->lengths[key] = len;
  }
  mesh.chart = chart;

  detail::finalize(mesh, opts.quality_floor);
  return mesh;
}

// === collared ball ==========================================================
// B^n with Dirichlet boundary, split radially as: round inner cap / collar
// band / product outer shell ending at the boundary sphere.  The collar runs
// x = -1 (facing the centre) to x = +1 (facing the boundary).

struct BallOptions {
  /// Inner-cap layer thicknesses as fractions of the cap depth r*pi/2, from
  /// the interface towards the centre; the final interval is the apex cone.
  /// A thick first interval keeps the squashed metric realizable.
  std::vector<double> inner_pitch_fractions{0.6366, 0.3634};
  /// Outer-shell layer thicknesses (metric lengths) from the interface to
  /// the Dirichlet boundary; the shell carries the product metric.
  std::vector<double> shell_pitches{0.5, 0.5};
  double r_inner = 0.3;   ///< coordinate radius of the inner interface
  double r_outer = 0.75;  ///< coordinate radius of the outer interface
  double quality_floor = 0.03;
};

inline SimplicialMesh build_ball_mesh(int n, int refinement,
                                      const CollarSpec& collar,
                                      const BallOptions& opts = {}) {
  require(n == 2 || n == 3, "build_ball_mesh: n must be 2 or 3");
  require(opts.inner_pitch_fractions.size() >= 2,
          "build_ball_mesh: need >= 2 inner cap intervals");
  require(!opts.shell_pitches.empty(),
          "build_ball_mesh: need >= 1 shell layer");

  const double r = collar.r;
  const int L = collar.layers;
  const double s_cap = r * M_PI / 2.0;

  SigmaMesh sigma = (n == 3) ? octasphere_sigma(refinement)
                             : circle_sigma(4 << refinement);
  const Index ns = sigma.count();
  const int ecols = sigma.pos.cols();

  SimplicialMesh mesh;
  mesh.name = "ball" + std::to_string(n);
  mesh.dim = n;

  std::vector<Eigen::VectorXd> coords;
  std::vector<double> s_depth;  // 0 on the band, meridian/shell depth outside
  auto add_ring = [&](double radius, double s) {
    std::vector<Index> ids(static_cast<std::size_t>(ns));
    for (Index sg = 0; sg < ns; ++sg) {
      coords.push_back(radius * sigma.pos.row(sg).transpose());
      s_depth.push_back(s);
      ids[static_cast<std::size_t>(sg)] = static_cast<Index>(coords.size() - 1);
    }
    return ids;
  };

  // band rings (inner interface at layer 0, outer at layer L)
  CollarBand band;
  band.spec = collar;
  for (int j = 0; j <= L; ++j) {
    double x = -1.0 + 2.0 * j / L;
    band.x_of_layer.push_back(x);
    double radius = opts.r_inner + (opts.r_outer - opts.r_inner) * j / L;
    band.layer_verts.push_back(add_ring(radius, 0.0));
  }
  for (int j = 0; j < L; ++j)
    detail::emit_layer_cells(sigma, band.layer_verts[static_cast<std::size_t>(j)],
                             band.layer_verts[static_cast<std::size_t>(j + 1)],
                             mesh.cells, mesh.region, 0);
  band.sigma_pos = sigma.pos;
  band.sigma_tris = sigma.tris;
  band.sigma_segs = sigma.segs;
  mesh.collars.push_back(band);

  std::vector<std::pair<Index, Index>> inner_edges, outer_edges;
  auto collect_cell_edges = [&](std::vector<std::pair<Index, Index>>& into,
                                std::size_t first_cell) {
    for (std::size_t c = first_cell; c < mesh.cells.size(); ++c)
      for (int i = 0; i < n + 1; ++i)
        for (int j = i + 1; j < n + 1; ++j)
          into.emplace_back(mesh.cells[c][static_cast<std::size_t>(i)],
                            mesh.cells[c][static_cast<std::size_t>(j)]);
  };

  // inner cap: shrinking rings down to a single apex at the origin, with a
  // cone over the last ring
  Index apex;
  {
    std::size_t first_cell = mesh.cells.size();
    std::vector<double> pitches;
    double sum = 0.0;
    for (double f : opts.inner_pitch_fractions) {
      require(f > 0.0, "build_ball_mesh: inner pitch fractions must be > 0");
      sum += f;
    }
    require(std::abs(sum - 1.0) < 1e-9,
            "build_ball_mesh: inner pitch fractions must sum to 1");
    for (double f : opts.inner_pitch_fractions) pitches.push_back(f * s_cap);
    const int P = static_cast<int>(pitches.size());

    std::vector<Index> prev = band.layer_verts[0];
    double s = 0.0;
    for (int i = 1; i < P; ++i) {
      s += pitches[static_cast<std::size_t>(i - 1)];
      double radius = opts.r_inner * (1.0 - s / s_cap);
      std::vector<Index> ring = add_ring(radius, s);
      detail::emit_layer_cells(sigma, prev, ring, mesh.cells, mesh.region,
                               i == 1 ? kRegionTransition : kRegionExterior);
      prev = ring;
    }
    coords.push_back(Eigen::VectorXd::Zero(ecols));
    s_depth.push_back(s_cap);
    apex = static_cast<Index>(coords.size() - 1);
    Index tag = (P == 1) ? kRegionTransition : kRegionExterior;
    if (n == 3) {
      for (const auto& t : sigma.tris) {
        mesh.cells.push_back({prev[static_cast<std::size_t>(t[0])],
                              prev[static_cast<std::size_t>(t[1])],
                              prev[static_cast<std::size_t>(t[2])], apex});
        mesh.region.push_back(tag);
      }
    } else {
      for (const auto& e : sigma.segs) {
        mesh.cells.push_back({prev[static_cast<std::size_t>(e[0])],
                              prev[static_cast<std::size_t>(e[1])], apex, -1});
        mesh.region.push_back(tag);
      }
    }
    collect_cell_edges(inner_edges, first_cell);
  }

  // outer shell: constant-radius product metric out to the boundary sphere
  {
    std::size_t first_cell = mesh.cells.size();
    double shell_length = 0.0;
    for (double p : opts.shell_pitches) {
      require(p > 0.0, "build_ball_mesh: shell pitches must be > 0");
      shell_length += p;
    }
    std::vector<Index> prev = band.layer_verts[static_cast<std::size_t>(L)];
    double s = 0.0;
    for (std::size_t q = 0; q < opts.shell_pitches.size(); ++q) {
      s += opts.shell_pitches[q];
      double radius = opts.r_outer + (1.0 - opts.r_outer) * (s / shell_length);
      std::vector<Index> ring = add_ring(radius, s);
      detail::emit_layer_cells(sigma, prev, ring, mesh.cells, mesh.region,
                               q == 0 ? kRegionTransition : kRegionExterior);
      prev = ring;
    }
    collect_cell_edges(outer_edges, first_cell);
  }

  // fields
  Index nv = static_cast<Index>(coords.size());
  mesh.coords.resize(nv, ecols);
  for (Index v = 0; v < nv; ++v)
    mesh.coords.row(v) = coords[static_cast<std::size_t>(v)];
  mesh.collar_x.assign(static_cast<std::size_t>(nv), kNaN);
  mesh.collar_id.assign(static_cast<std::size_t>(nv), -1);
  mesh.ext_depth.assign(static_cast<std::size_t>(nv), 0.0);
  for (int j = 0; j <= L; ++j)
    for (Index sg = 0; sg < ns; ++sg) {
      Index v = band.layer_verts[static_cast<std::size_t>(j)]
                                [static_cast<std::size_t>(sg)];
      mesh.collar_x[static_cast<std::size_t>(v)] =
          band.x_of_layer[static_cast<std::size_t>(j)];
      mesh.collar_id[static_cast<std::size_t>(v)] = 0;
    }
  for (Index v = 0; v < nv; ++v)
    if (mesh.collar_id[static_cast<std::size_t>(v)] < 0)
      mesh.ext_depth[static_cast<std::size_t>(v)] =
          s_depth[static_cast<std::size_t>(v)];

  // chart
  auto chart = std::make_shared<TableChart>();
  auto rho = [&](double s) { return r * std::cos(s / r); };
  for (const auto& [a, b] : inner_edges) {
    auto key = edge_key(a, b);
    if (chart->lengths.count(key)) continue;
    double sa = s_depth[static_cast<std::size_t>(a)];
    double sb = s_depth[static_cast<std::size_t>(b)];
    if (a == apex || b == apex) {
      chart->lengths[key] = std::abs(sa - sb);
    } else {
      double c = (coords[static_cast<std::size_t>(a)].normalized() -
                  coords[static_cast<std::size_t>(b)].normalized())
                     .norm();
      chart->lengths[key] = detail::cap_edge_length(sa, sb, c, rho);
    }
  }
  for (const auto& [a, b] : outer_edges) {
    auto key = edge_key(a, b);
    if (chart->lengths.count(key)) continue;
    double ds = s_depth[static_cast<std::size_t>(a)] -
                s_depth[static_cast<std::size_t>(b)];
    double c = (coords[static_cast<std::size_t>(a)].normalized() -
                coords[static_cast<std::size_t>(b)].normalized())
                   .norm();
    chart->lengths[key] = std::hypot(ds, r * c);
  }
  mesh.chart = chart;

  detail::finalize(mesh, opts.quality_floor);
  require(!mesh.boundary_facets.empty(),
          "build_ball_mesh: expected a nonempty boundary");
  return mesh;
}

// === doubled handlebody =====================================================
// The double M = H ∪ (Sigma x [-1,1]) ∪ H' of a genus-g handlebody H built
// from a one-cube-thick polyomino: a (2g+1) x 3 block of unit cubes with g
// holes.  Sigma = ∂H is the staircase surface; both H and its mirror copy
// carry the flat metric scaled by r, matching the collar's cross-section.

struct HandlebodyOptions {
  int genus = 2;
  double w_step = 0.5;  ///< coordinate spacing of band layers (4th axis)
  double quality_floor = 0.02;
};

inline SimplicialMesh build_double_handlebody_mesh(
    const CollarSpec& collar, const HandlebodyOptions& opts = {}) {
  require(opts.genus >= 1, "build_double_handlebody_mesh: genus must be >= 1");
  const int W = 2 * opts.genus + 1;
  const int L = collar.layers;
  const double r = collar.r;

  // footprint: full W x 3 block minus the g holes at (2i-1, 1)
  auto in_footprint = [&](int x, int y) {
    if (x < 0 || x >= W || y < 0 || y >= 3) return false;
    if (y == 1 && x % 2 == 1) return false;
    return true;
  };

  // grid vertices of the handlebody
  std::map<std::array<int, 3>, Index> grid_id;
  std::vector<std::array<int, 3>> grid_pos;
  auto gid = [&](int x, int y, int z) {
    std::array<int, 3> key{x, y, z};
    auto it = grid_id.find(key);
    if (it != grid_id.end()) return it->second;
    Index id = static_cast<Index>(grid_pos.size());
    grid_id[key] = id;
    grid_pos.push_back(key);
    return id;
  };

  std::vector<std::array<Index, 4>> h_cells;
  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                  {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (int x = 0; x < W; ++x)
    for (int y = 0; y < 3; ++y) {
      if (!in_footprint(x, y)) continue;
      for (const auto& perm : perms) {
        std::array<int, 3> at{x, y, 0};
        std::array<Index, 4> tet{};
        tet[0] = gid(at[0], at[1], at[2]);
        for (int step = 0; step < 3; ++step) {
          at[static_cast<std::size_t>(perm[step])] += 1;
          tet[static_cast<std::size_t>(step + 1)] = gid(at[0], at[1], at[2]);
        }
        h_cells.push_back(tet);
      }
    }
  const Index vh = static_cast<Index>(grid_pos.size());

  // Sigma = boundary of the handlebody complex; every grid vertex lies on it
  std::vector<std::array<Index, 3>> sig_tris;
  {
    SimplicialMesh tmp;
    tmp.dim = 3;
    tmp.coords.resize(vh, 3);
    for (Index v = 0; v < vh; ++v)
      for (int c = 0; c < 3; ++c)
        tmp.coords(v, c) = grid_pos[static_cast<std::size_t>(v)]
                                   [static_cast<std::size_t>(c)];
    tmp.cells = h_cells;
    tmp.region.assign(h_cells.size(), kRegionExterior);
    sig_tris = derive_boundary_facets(tmp);
    std::vector<bool> on_sigma(static_cast<std::size_t>(vh), false);
    for (const auto& t : sig_tris)
      for (int i = 0; i < 3; ++i)
        on_sigma[static_cast<std::size_t>(t[static_cast<std::size_t>(i)])] = true;
    for (Index v = 0; v < vh; ++v)
      require(on_sigma[static_cast<std::size_t>(v)],
              "build_double_handlebody_mesh: interior vertex unexpected");
  }

  SigmaMesh sigma;
  sigma.pos.resize(vh, 3);
  for (Index v = 0; v < vh; ++v)
    for (int c = 0; c < 3; ++c)
      sigma.pos(v, c) = grid_pos[static_cast<std::size_t>(v)]
                                [static_cast<std::size_t>(c)];
  sigma.tris = sig_tris;

  // assemble the double: layer j vertex = j*vh + sigma node
  SimplicialMesh mesh;
  mesh.name = "double_handlebody_g" + std::to_string(opts.genus);
  mesh.dim = 3;
  Index nv = (static_cast<Index>(L) + 1) * vh;
  mesh.coords.resize(nv, 4);
  for (int j = 0; j <= L; ++j)
    for (Index v = 0; v < vh; ++v) {
      Index id = static_cast<Index>(j) * vh + v;
      for (int c = 0; c < 3; ++c)
        mesh.coords(id, c) = grid_pos[static_cast<std::size_t>(v)]
                                     [static_cast<std::size_t>(c)];
      mesh.coords(id, 3) = j * opts.w_step;
    }

  CollarBand band;
  band.spec = collar;
  for (int j = 0; j <= L; ++j) {
    band.x_of_layer.push_back(-1.0 + 2.0 * j / L);
    std::vector<Index> layer(static_cast<std::size_t>(vh));
    for (Index v = 0; v < vh; ++v)
      layer[static_cast<std::size_t>(v)] = static_cast<Index>(j) * vh + v;
    band.layer_verts.push_back(std::move(layer));
  }
  band.sigma_pos = sigma.pos;
  band.sigma_tris = sigma.tris;
  mesh.collars.push_back(band);

  // H at layer 0, its mirror copy at layer L, collar prisms in between
  for (const auto& tet : h_cells) {
    mesh.cells.push_back(tet);
    mesh.region.push_back(kRegionTransition);
  }
  for (int j = 0; j < L; ++j)
    detail::emit_layer_cells(sigma, band.layer_verts[static_cast<std::size_t>(j)],
                             band.layer_verts[static_cast<std::size_t>(j + 1)],
                             mesh.cells, mesh.region, 0);
  for (const auto& tet : h_cells) {
    std::array<Index, 4> shifted{};
    for (int i = 0; i < 4; ++i)
      shifted[static_cast<std::size_t>(i)] =
          tet[static_cast<std::size_t>(i)] + static_cast<Index>(L) * vh;
    mesh.cells.push_back(shifted);
    mesh.region.push_back(kRegionTransition);
  }

  mesh.collar_x.assign(static_cast<std::size_t>(nv), kNaN);
  mesh.collar_id.assign(static_cast<std::size_t>(nv), -1);
  mesh.ext_depth.assign(static_cast<std::size_t>(nv), 0.0);
  for (int j = 0; j <= L; ++j)
    for (Index v = 0; v < vh; ++v) {
      Index id = static_cast<Index>(j) * vh + v;
      mesh.collar_x[static_cast<std::size_t>(id)] =
          band.x_of_layer[static_cast<std::size_t>(j)];
      mesh.collar_id[static_cast<std::size_t>(id)] = 0;
    }

  // chart: flat scaled metric inside both handlebody copies
  auto chart = std::make_shared<TableChart>();
  for (const auto& tet : h_cells)
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        Index a = tet[static_cast<std::size_t>(i)];
        Index b = tet[static_cast<std::size_t>(j)];
        double len =
            r * (sigma.pos.row(a) - sigma.pos.row(b)).norm();
        chart->lengths[edge_key(a, b)] = len;
        chart->lengths[edge_key(a + static_cast<Index>(L) * vh,
                                b + static_cast<Index>(L) * vh)] = len;
      }
  mesh.chart = chart;

  detail::finalize(mesh, opts.quality_floor);
  return mesh;
}

/// Cross-section of a collar band as a standalone surface mesh (dim 2) with
/// the scaled chordal metric; used for cross-section spectral checks.
inline SimplicialMesh sigma_as_surface(const CollarBand& band) {
  require(!band.sigma_tris.empty(),
          "sigma_as_surface: band has no surface cross-section");
  SimplicialMesh mesh;
  mesh.name = "sigma_surface";
  mesh.dim = 2;
  mesh.coords = band.sigma_pos;
  if (band.sigma_periodic) mesh.period = {1, 1, 0, 0};
  for (const auto& t : band.sigma_tris) {
    mesh.cells.push_back({t[0], t[1], t[2], -1});
    mesh.region.push_back(kRegionExterior);
  }
  Index nv = mesh.vertex_count();
  mesh.collar_x.assign(static_cast<std::size_t>(nv), kNaN);
  mesh.collar_id.assign(static_cast<std::size_t>(nv), -1);
  mesh.ext_depth.assign(static_cast<std::size_t>(nv), 0.0);
  auto chart = std::make_shared<TableChart>();
  double r = band.spec.r;
  for (const auto& [a, b] : collect_edges(mesh)) {
    double d;
    if (band.sigma_periodic) {
      double d2 = 0.0;
      for (int c = 0; c < band.sigma_pos.cols(); ++c) {
        double dd = band.sigma_pos(a, c) - band.sigma_pos(b, c);
        dd -= std::round(dd);
        d2 += dd * dd;
      }
      d = std::sqrt(d2);
    } else {
      d = (band.sigma_pos.row(a) - band.sigma_pos.row(b)).norm();
    }
    chart->lengths[edge_key(a, b)] = r * d;
  }
  mesh.chart = chart;
  detail::finalize(mesh, 0.0);
  return mesh;
}

}  // namespace nodalforge
