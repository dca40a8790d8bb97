#pragma once

// Simplicial meshes with chart coordinates, region tags and collar-band
// bookkeeping.  A mesh is combinatorial plus a coordinate chart; all geometry
// used by the solvers comes from edge-length metrics (see metric.hpp).

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "nodalforge/core.hpp"

namespace nodalforge {

// === region tags ============================================================
// Per-cell tags: collar bands are numbered 0,1,...; exterior cells carry
// kRegionExterior; exterior cells with at least one vertex on a collar
// interface carry kRegionTransition.

constexpr Index kRegionExterior = -1;
constexpr Index kRegionTransition = -2;

inline bool region_is_collar(Index tag) { return tag >= 0; }

// === collar specification ===================================================

enum class SigmaModel { circle, sphere2, torus2, custom };

inline std::string sigma_model_name(SigmaModel m) {
  switch (m) {
    case SigmaModel::circle: return "circle";
    case SigmaModel::sphere2: return "sphere2";
    case SigmaModel::torus2: return "torus2";
    case SigmaModel::custom: return "custom";
  }
  return "?";
}

/// Parameters of one collar band (-1,1) x Sigma with metric
/// Gamma^2 dx^2 + r^2 g_Sigma.
struct CollarSpec {
  SigmaModel sigma = SigmaModel::circle;
  double r = 1.0;       ///< scale of the cross-section metric
  double gamma = 1.0;   ///< width factor Gamma in (1/2, 1]
  int layers = 16;      ///< element layers across [-1, 1]
  int modes = 1;        ///< number of low modes this collar should carry
};

/// Mesh-side record of a built collar band: which vertices form it and how
/// they are organised into layers over a fixed cross-section mesh.
struct CollarBand {
  CollarSpec spec;
  /// layer_verts[j][s] = global vertex id of cross-section node s at layer j;
  /// j runs 0..layers (inclusive), s runs over the Sigma mesh nodes.
  std::vector<std::vector<Index>> layer_verts;
  /// collar coordinate of each layer (size layers+1, from -1 to +1).
  std::vector<double> x_of_layer;
  /// Unit-scale embedding of the Sigma nodes (columns: 2 for circle, 3 for
  /// sphere2/custom, 2 for torus2 flat coordinates).  Cross-section distances
  /// are chordal in this embedding, times spec.r (torus2: min-image).
  Eigen::MatrixXd sigma_pos;
  bool sigma_periodic = false;  ///< torus2: coordinates wrap with period 1
  /// Cross-section cells (triangles for a surface Sigma, segments for a
  /// circle Sigma), indexing into sigma_pos rows.
  std::vector<std::array<Index, 3>> sigma_tris;
  std::vector<std::array<Index, 2>> sigma_segs;

  Index sigma_count() const { return static_cast<Index>(sigma_pos.rows()); }
};

// === chart rule =============================================================

/// Reference edge lengths for edges outside collar bands.  Installed by mesh
/// builders; not serialised (a mesh read back from disk must be paired with a
/// stored metric instead).
class ChartRule {
public:
  virtual ~ChartRule() = default;
  virtual double edge_length(Index a, Index b) const = 0;
};

// === mesh ===================================================================

struct SimplicialMesh {
  std::string name;
  int dim = 3;  ///< intrinsic dimension n (2 or 3)

  /// Chart coordinates, one row per vertex.  Column count depends on the
  /// chart (2 or 3 for flat/periodic charts, 3 or 4 for embedded spheres).
  Eigen::MatrixXd coords;
  /// Periodicity of each coordinate column (0 = not periodic).
  std::array<double, 4> period{0, 0, 0, 0};

  /// Cells as sorted-size (dim+1) vertex tuples; for dim==2 the last entry
  /// is -1.  Orientation is consistent after the builder's BFS pass.
  std::vector<std::array<Index, 4>> cells;
  /// Per-cell region tag (collar id >= 0, kRegionExterior, kRegionTransition).
  std::vector<Index> region;

  /// Per-vertex collar coordinate in [-1,1]; NaN outside every collar band.
  std::vector<double> collar_x;
  /// Per-vertex collar id; -1 outside every collar band.
  std::vector<Index> collar_id;
  /// Per-vertex metric distance into the exterior (0 on and inside collars).
  std::vector<double> ext_depth;

  std::vector<CollarBand> collars;

  /// Boundary facets (dim==3: triangles; dim==2: edges with last entry -1).
  std::vector<std::array<Index, 3>> boundary_facets;

  /// Reference lengths for non-collar edges; may be null for collar-only
  /// meshes.  Dropped on serialisation.
  std::shared_ptr<const ChartRule> chart;

  Index vertex_count() const { return static_cast<Index>(coords.rows()); }
  Index cell_count() const { return static_cast<Index>(cells.size()); }
  int verts_per_cell() const { return dim + 1; }

  /// Coordinates of vertex b unwrapped to the sheet of vertex a (min-image
  /// per periodic column).  For non-periodic charts this is just row b.
  Eigen::VectorXd unwrapped(Index a, Index b) const {
    Eigen::VectorXd pa = coords.row(a);
    Eigen::VectorXd pb = coords.row(b);
    for (int c = 0; c < coords.cols(); ++c) {
      double p = period[static_cast<std::size_t>(c)];
      if (p <= 0) continue;
      double d = pb[c] - pa[c];
      d -= p * std::round(d / p);
      pb[c] = pa[c] + d;
    }
    return pb;
  }
};

// === derived combinatorics ==================================================

/// All distinct edges as sorted pairs, ordered lexicographically.
inline std::vector<std::pair<Index, Index>> collect_edges(
    const SimplicialMesh& mesh) {
  std::set<std::pair<Index, Index>> uniq;
  const int k = mesh.verts_per_cell();
  for (const auto& cell : mesh.cells)
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) {
        Index a = cell[static_cast<std::size_t>(i)];
        Index b = cell[static_cast<std::size_t>(j)];
        if (a > b) std::swap(a, b);
        uniq.emplace(a, b);
      }
  return {uniq.begin(), uniq.end()};
}

/// Sorted facet -> list of (cell, local index of the opposite vertex).
inline std::map<std::array<Index, 3>, std::vector<std::pair<Index, int>>>
facet_incidence(const SimplicialMesh& mesh) {
  std::map<std::array<Index, 3>, std::vector<std::pair<Index, int>>> inc;
  const int k = mesh.verts_per_cell();
  for (Index c = 0; c < mesh.cell_count(); ++c) {
    const auto& cell = mesh.cells[static_cast<std::size_t>(c)];
    for (int drop = 0; drop < k; ++drop) {
      std::array<Index, 3> f{-1, -1, -1};
      int m = 0;
      for (int i = 0; i < k; ++i)
        if (i != drop) f[static_cast<std::size_t>(m++)] = cell[static_cast<std::size_t>(i)];
      std::sort(f.begin(), f.begin() + m);
      inc[f].emplace_back(c, drop);
    }
  }
  return inc;
}

/// Recompute the boundary facet list from scratch (facets with one incident
/// cell), sorted tuples in lexicographic order.
inline std::vector<std::array<Index, 3>> derive_boundary_facets(
    const SimplicialMesh& mesh) {
  std::vector<std::array<Index, 3>> out;
  for (const auto& [facet, cells] : facet_incidence(mesh))
    if (cells.size() == 1) out.push_back(facet);
  return out;
}

namespace detail {

/// Orientation sign of facet (cell minus vertex at local position `drop`)
/// as induced by the cell's vertex order, relative to the facet's sorted
/// order.  Two cells sharing a facet are consistently oriented iff their
/// induced signs are opposite.
inline int induced_facet_sign(const std::array<Index, 4>& cell, int k,
                              int drop) {
  std::array<Index, 4> f{};
  std::size_t m = 0;
  for (int i = 0; i < k; ++i)
    if (i != drop) f[m++] = cell[static_cast<std::size_t>(i)];
  int parity = sort_parity(f, m) % 2;
  // Removing vertex `drop` from an even permutation flips the induced
  // orientation by (-1)^drop.
  return ((parity + drop) % 2 == 0) ? +1 : -1;
}

}  // namespace detail

namespace detail {

/// Induced sign of a sorted facet within a cell, with the drop position
/// located fresh (flipping a cell changes which local position is dropped).
inline int induced_sign_for_facet(const std::array<Index, 4>& cell, int k,
                                  const std::array<Index, 3>& facet) {
  for (int drop = 0; drop < k; ++drop) {
    bool in_facet = false;
    for (int i = 0; i < k - 1; ++i)
      if (facet[static_cast<std::size_t>(i)] == cell[static_cast<std::size_t>(drop)])
        in_facet = true;
    if (!in_facet) return induced_facet_sign(cell, k, drop);
  }
  throw Error("induced_sign_for_facet: facet not part of cell");
}

}  // namespace detail

/// Flip cells (by swapping the first two vertices) so orientations agree
/// across every interior facet, per connected component.  Throws if the mesh
/// is non-orientable or a facet has more than two incident cells.
inline void orient_cells(SimplicialMesh& mesh) {
  auto inc = facet_incidence(mesh);
  const int k = mesh.verts_per_cell();
  // adjacency: cell -> list of (neighbour cell, shared sorted facet)
  std::vector<std::vector<std::pair<Index, std::array<Index, 3>>>> adj(
      static_cast<std::size_t>(mesh.cell_count()));
  for (const auto& [facet, cells] : inc) {
    require(cells.size() <= 2, "orient_cells: facet with >2 incident cells");
    if (cells.size() == 2) {
      adj[static_cast<std::size_t>(cells[0].first)].emplace_back(cells[1].first,
                                                                 facet);
      adj[static_cast<std::size_t>(cells[1].first)].emplace_back(cells[0].first,
                                                                 facet);
    }
  }
  std::vector<int> state(static_cast<std::size_t>(mesh.cell_count()), 0);
  for (Index seed = 0; seed < mesh.cell_count(); ++seed) {
    if (state[static_cast<std::size_t>(seed)] != 0) continue;
    state[static_cast<std::size_t>(seed)] = 1;
    std::vector<Index> stack{seed};
    while (!stack.empty()) {
      Index c = stack.back();
      stack.pop_back();
      for (const auto& [nb, facet] : adj[static_cast<std::size_t>(c)]) {
        int s_mine = detail::induced_sign_for_facet(
            mesh.cells[static_cast<std::size_t>(c)], k, facet);
        int s_theirs = detail::induced_sign_for_facet(
            mesh.cells[static_cast<std::size_t>(nb)], k, facet);
        bool consistent = (s_mine != s_theirs);
        if (state[static_cast<std::size_t>(nb)] == 0) {
          if (!consistent)
            std::swap(mesh.cells[static_cast<std::size_t>(nb)][0],
                      mesh.cells[static_cast<std::size_t>(nb)][1]);
          state[static_cast<std::size_t>(nb)] = 1;
          stack.push_back(nb);
        } else {
          require(consistent, "orient_cells: mesh is non-orientable");
        }
      }
    }
  }
}

// === audit ==================================================================

struct AuditReport {
  bool pass = false;
  Index vertices = 0;
  Index edges = 0;
  Index triangles = 0;  ///< dim==3 only (0 for dim==2)
  Index cells = 0;
  Index boundary_facet_count = 0;
  long long euler = 0;
  double min_quality = 0.0;  ///< n * inradius / circumradius, worst cell
  std::vector<std::string> errors;

  std::string summary() const {
    std::ostringstream os;
    os << (pass ? "ok" : "FAIL") << " V=" << vertices << " E=" << edges;
    if (triangles > 0) os << " T=" << triangles;
    os << " C=" << cells << " chi=" << euler << " bdry=" << boundary_facet_count
       << " q_min=" << min_quality;
    for (const auto& e : errors) os << "\n  error: " << e;
    return os.str();
  }
};

namespace detail {

/// Shape quality of a simplex from its realized vertex positions:
/// n * inradius / circumradius, in (0, 1], 1 for the regular simplex.
inline double simplex_quality(const Eigen::MatrixXd& pts, int n) {
  const int k = n + 1;
  // volume via the Gram determinant of edge vectors from vertex 0
  Eigen::MatrixXd edgevec(pts.cols(), n);
  for (int i = 1; i < k; ++i)
    edgevec.col(i - 1) = (pts.row(i) - pts.row(0)).transpose();
  Eigen::MatrixXd g = edgevec.transpose() * edgevec;
  double det = g.determinant();
  if (det <= 0) return 0.0;
  double fact = 1.0;
  for (int i = 2; i <= n; ++i) fact *= i;
  double vol = std::sqrt(det) / fact;

  // facet measures (opposite each vertex)
  double surf = 0.0;
  for (int drop = 0; drop < k; ++drop) {
    std::vector<int> ids;
    for (int i = 0; i < k; ++i)
      if (i != drop) ids.push_back(i);
    if (n == 2) {
      surf += (pts.row(ids[1]) - pts.row(ids[0])).norm();
    } else {
      Eigen::VectorXd u = (pts.row(ids[1]) - pts.row(ids[0])).transpose();
      Eigen::VectorXd v = (pts.row(ids[2]) - pts.row(ids[0])).transpose();
      double uu = u.squaredNorm(), vv = v.squaredNorm(), uv = u.dot(v);
      double a2 = uu * vv - uv * uv;
      surf += 0.5 * std::sqrt(std::max(0.0, a2));
    }
  }
  double inradius = n * vol / surf;

  // circumradius from pairwise distances: solve for the circumcentre in the
  // affine basis of the simplex.
  Eigen::MatrixXd A(n, n);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) A(i, j) = edgevec.col(i).dot(edgevec.col(j));
    rhs(i) = 0.5 * edgevec.col(i).squaredNorm();
  }
  Eigen::VectorXd w = A.ldlt().solve(rhs);
  double circ = (edgevec * w).norm();
  if (circ <= 0) return 0.0;
  return n * inradius / circ;
}

}  // namespace detail

/// Structural and shape checks.  `quality_floor` applies to the coordinate
/// realization of every cell; pass 0 to skip shape checking.
inline AuditReport mesh_audit(const SimplicialMesh& mesh,
                              double quality_floor = 0.05) {
  AuditReport rep;
  const int k = mesh.verts_per_cell();
  rep.vertices = mesh.vertex_count();
  rep.cells = mesh.cell_count();

  // index validity
  for (Index c = 0; c < mesh.cell_count(); ++c) {
    const auto& cell = mesh.cells[static_cast<std::size_t>(c)];
    for (int i = 0; i < k; ++i) {
      Index v = cell[static_cast<std::size_t>(i)];
      if (v < 0 || v >= mesh.vertex_count()) {
        rep.errors.push_back("cell " + std::to_string(c) +
                             " has out-of-range vertex");
        break;
      }
      for (int j = i + 1; j < k; ++j)
        if (v == cell[static_cast<std::size_t>(j)]) {
          rep.errors.push_back("cell " + std::to_string(c) +
                               " has repeated vertex");
          i = k;
          break;
        }
    }
  }
  if (!rep.errors.empty()) {
    rep.pass = false;
    return rep;
  }

  // facet incidence: each facet in at most two cells; boundary consistency
  auto inc = facet_incidence(mesh);
  std::vector<std::array<Index, 3>> derived_boundary;
  for (const auto& [facet, cells] : inc) {
    if (cells.size() > 2) {
      std::ostringstream os;
      os << "facet (" << facet[0] << "," << facet[1];
      if (facet[2] >= 0) os << "," << facet[2];
      os << ") shared by " << cells.size() << " cells";
      rep.errors.push_back(os.str());
    } else if (cells.size() == 1) {
      derived_boundary.push_back(facet);
    }
  }
  rep.boundary_facet_count = static_cast<Index>(derived_boundary.size());
  {
    std::vector<std::array<Index, 3>> declared = mesh.boundary_facets;
    std::sort(declared.begin(), declared.end());
    if (declared != derived_boundary)
      rep.errors.push_back("declared boundary facets do not match facet scan");
  }

  // orientation consistency across interior facets
  for (const auto& [facet, cells] : inc) {
    if (cells.size() != 2) continue;
    int s0 = detail::induced_facet_sign(
        mesh.cells[static_cast<std::size_t>(cells[0].first)], k, cells[0].second);
    int s1 = detail::induced_facet_sign(
        mesh.cells[static_cast<std::size_t>(cells[1].first)], k, cells[1].second);
    if (s0 == s1) {
      rep.errors.push_back("inconsistent orientation across facet of cells " +
                           std::to_string(cells[0].first) + "," +
                           std::to_string(cells[1].first));
      break;
    }
  }

  // vertex links connected (pseudomanifold sanity)
  {
    std::vector<std::vector<Index>> cells_at(
        static_cast<std::size_t>(mesh.vertex_count()));
    for (Index c = 0; c < mesh.cell_count(); ++c)
      for (int i = 0; i < k; ++i)
        cells_at[static_cast<std::size_t>(
                     mesh.cells[static_cast<std::size_t>(c)]
                               [static_cast<std::size_t>(i)])]
            .push_back(c);
    // cell adjacency through facets
    std::unordered_map<Index, std::vector<Index>> cell_adj;
    for (const auto& [facet, cc] : inc)
      if (cc.size() == 2) {
        cell_adj[cc[0].first].push_back(cc[1].first);
        cell_adj[cc[1].first].push_back(cc[0].first);
      }
    for (Index v = 0; v < mesh.vertex_count(); ++v) {
      const auto& star = cells_at[static_cast<std::size_t>(v)];
      if (star.empty()) {
        rep.errors.push_back("isolated vertex " + std::to_string(v));
        continue;
      }
      std::unordered_set<Index> in_star(star.begin(), star.end());
      std::unordered_set<Index> seen{star[0]};
      std::vector<Index> stack{star[0]};
      while (!stack.empty()) {
        Index c = stack.back();
        stack.pop_back();
        auto it = cell_adj.find(c);
        if (it == cell_adj.end()) continue;
        for (Index nb : it->second) {
          if (!in_star.count(nb) || seen.count(nb)) continue;
          // neighbour through a facet containing v?
          const auto& cn = mesh.cells[static_cast<std::size_t>(nb)];
          if (std::find(cn.begin(), cn.begin() + k, v) != cn.begin() + k) {
            seen.insert(nb);
            stack.push_back(nb);
          }
        }
      }
      if (seen.size() != in_star.size()) {
        rep.errors.push_back("disconnected link at vertex " + std::to_string(v));
        break;
      }
    }
  }

  // counts and Euler characteristic
  {
    auto edges = collect_edges(mesh);
    rep.edges = static_cast<Index>(edges.size());
    if (mesh.dim == 3) {
      rep.triangles = static_cast<Index>(inc.size());
      rep.euler = static_cast<long long>(rep.vertices) - rep.edges +
                  rep.triangles - rep.cells;
    } else {
      rep.euler = static_cast<long long>(rep.vertices) - rep.edges + rep.cells;
    }
  }

  // coordinate shape quality
  rep.min_quality = 1.0;
  if (quality_floor > 0) {
    for (Index c = 0; c < mesh.cell_count(); ++c) {
      const auto& cell = mesh.cells[static_cast<std::size_t>(c)];
      Eigen::MatrixXd pts(k, mesh.coords.cols());
      pts.row(0) = mesh.coords.row(cell[0]);
      for (int i = 1; i < k; ++i)
        pts.row(i) = mesh.unwrapped(cell[0], cell[static_cast<std::size_t>(i)]);
      double q = detail::simplex_quality(pts, mesh.dim);
      if (q < rep.min_quality) rep.min_quality = q;
      if (q < quality_floor) {
        rep.errors.push_back("cell " + std::to_string(c) +
                             " below quality floor: q=" + std::to_string(q));
        break;
      }
    }
  }

  rep.pass = rep.errors.empty();
  return rep;
}

// === uniform subdivision ====================================================

/// One level of uniform refinement (1:4 triangles, 1:8 tets with
/// shortest-diagonal octahedron split).  Collar bands are not carried through
/// refinement; build collared meshes at the desired resolution instead.
inline SimplicialMesh subdivide(const SimplicialMesh& mesh) {
  require(mesh.collars.empty(),
          "subdivide: collared meshes must be rebuilt, not subdivided");
  SimplicialMesh out;
  out.name = mesh.name + "+sub";
  out.dim = mesh.dim;
  out.period = mesh.period;
  // chart rules do not transfer; refined meshes get their lengths from coords

  auto edges = collect_edges(mesh);
  std::unordered_map<std::uint64_t, Index> midpoint;
  Index nv = mesh.vertex_count();
  out.coords.resize(nv + static_cast<Index>(edges.size()), mesh.coords.cols());
  out.coords.topRows(nv) = mesh.coords;
  for (const auto& [a, b] : edges) {
    Eigen::VectorXd pb = mesh.unwrapped(a, b);
    Eigen::VectorXd mid = 0.5 * (mesh.coords.row(a).transpose() + pb);
    for (int c = 0; c < mesh.coords.cols(); ++c) {
      double p = mesh.period[static_cast<std::size_t>(c)];
      if (p > 0) mid[c] = mid[c] - p * std::floor(mid[c] / p);
    }
    out.coords.row(nv) = mid.transpose();
    midpoint[edge_key(a, b)] = nv++;
  }

  auto mid = [&](Index a, Index b) { return midpoint.at(edge_key(a, b)); };

  auto push = [&](std::array<Index, 4> cell, Index tag) {
    out.cells.push_back(cell);
    out.region.push_back(tag);
  };

  for (Index c = 0; c < mesh.cell_count(); ++c) {
    const auto& cell = mesh.cells[static_cast<std::size_t>(c)];
    Index tag = mesh.region.empty() ? kRegionExterior
                                    : mesh.region[static_cast<std::size_t>(c)];
    if (mesh.dim == 2) {
      Index a = cell[0], b = cell[1], d = cell[2];
      Index ab = mid(a, b), bd = mid(b, d), ad = mid(a, d);
      push({a, ab, ad, -1}, tag);
      push({b, bd, ab, -1}, tag);
      push({d, ad, bd, -1}, tag);
      push({ab, bd, ad, -1}, tag);
    } else {
      Index a = cell[0], b = cell[1], cc = cell[2], d = cell[3];
      Index ab = mid(a, b), ac = mid(a, cc), ad = mid(a, d);
      Index bc = mid(b, cc), bd = mid(b, d), cd = mid(cc, d);
      push({a, ab, ac, ad}, tag);
      push({b, ab, bc, bd}, tag);
      push({cc, ac, bc, cd}, tag);
      push({d, ad, bd, cd}, tag);
      // Central octahedron ab-ac-ad-bc-bd-cd: split along the shortest of
      // its three diagonals (ab-cd, ac-bd, ad-bc); ties resolved by the
      // fixed listing order, so the choice is deterministic.
      auto dlen = [&](Index p, Index q) {
        return (out.unwrapped(p, q) - out.coords.row(p).transpose()).norm();
      };
      struct Diag {
        Index p, q;
        double len;
      };
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
      // The four remaining midpoints form a 4-cycle of octahedron edges;
      // each such edge (u,v) spans one tet (p,q,u,v) with the diagonal.
      // Midpoints span an octahedron edge iff their original edges share
      // exactly one endpoint (opposite midpoints come from disjoint edges).
      auto ends = [&](Index w) -> std::pair<Index, Index> {
        if (w == ab) return {a, b};
        if (w == ac) return {a, cc};
        if (w == ad) return {a, d};
        if (w == bc) return {b, cc};
        if (w == bd) return {b, d};
        return {cc, d};
      };
      auto is_oct_edge = [&](Index u, Index v) {
        auto [u1, u2] = ends(u);
        auto [v1, v2] = ends(v);
        int shared = (u1 == v1) + (u1 == v2) + (u2 == v1) + (u2 == v2);
        return shared == 1;
      };
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j)
          if (is_oct_edge(others[i], others[j]))
            push({p, q, others[i], others[j]}, tag);
    }
  }

  out.collar_x.assign(static_cast<std::size_t>(out.vertex_count()), kNaN);
  out.collar_id.assign(static_cast<std::size_t>(out.vertex_count()), -1);
  out.ext_depth.assign(static_cast<std::size_t>(out.vertex_count()), 0.0);
  orient_cells(out);
  out.boundary_facets = derive_boundary_facets(out);
  return out;
}

// === submesh ================================================================

struct Submesh {
  SimplicialMesh mesh;
  std::vector<Index> vertex_to_parent;
  std::vector<Index> vertex_from_parent;  ///< -1 if absent
  std::vector<Index> cell_to_parent;
};

/// Extract the submesh of all cells whose region tag satisfies `keep`.
/// Vertex fields and collar-band bookkeeping are remapped; the chart rule is
/// not carried over (restrict an existing metric instead).
template <typename Pred>
inline Submesh submesh(const SimplicialMesh& mesh, Pred keep) {
  Submesh sub;
  sub.mesh.name = mesh.name + "+sub";
  sub.mesh.dim = mesh.dim;
  sub.mesh.period = mesh.period;
  sub.vertex_from_parent.assign(static_cast<std::size_t>(mesh.vertex_count()),
                                -1);
  const int k = mesh.verts_per_cell();
  for (Index c = 0; c < mesh.cell_count(); ++c) {
    if (!keep(mesh.region[static_cast<std::size_t>(c)])) continue;
    std::array<Index, 4> cell = mesh.cells[static_cast<std::size_t>(c)];
    for (int i = 0; i < k; ++i) {
      Index v = cell[static_cast<std::size_t>(i)];
      if (sub.vertex_from_parent[static_cast<std::size_t>(v)] < 0) {
        sub.vertex_from_parent[static_cast<std::size_t>(v)] =
            static_cast<Index>(sub.vertex_to_parent.size());
        sub.vertex_to_parent.push_back(v);
      }
      cell[static_cast<std::size_t>(i)] =
          sub.vertex_from_parent[static_cast<std::size_t>(v)];
    }
    sub.mesh.cells.push_back(cell);
    sub.mesh.region.push_back(mesh.region[static_cast<std::size_t>(c)]);
    sub.cell_to_parent.push_back(c);
  }
  Index nv = static_cast<Index>(sub.vertex_to_parent.size());
  sub.mesh.coords.resize(nv, mesh.coords.cols());
  sub.mesh.collar_x.assign(static_cast<std::size_t>(nv), kNaN);
  sub.mesh.collar_id.assign(static_cast<std::size_t>(nv), -1);
  sub.mesh.ext_depth.assign(static_cast<std::size_t>(nv), 0.0);
  for (Index v = 0; v < nv; ++v) {
    Index pv = sub.vertex_to_parent[static_cast<std::size_t>(v)];
    sub.mesh.coords.row(v) = mesh.coords.row(pv);
    sub.mesh.collar_x[static_cast<std::size_t>(v)] =
        mesh.collar_x[static_cast<std::size_t>(pv)];
    sub.mesh.collar_id[static_cast<std::size_t>(v)] =
        mesh.collar_id[static_cast<std::size_t>(pv)];
    sub.mesh.ext_depth[static_cast<std::size_t>(v)] =
        mesh.ext_depth[static_cast<std::size_t>(pv)];
  }
  for (const auto& band : mesh.collars) {
    CollarBand nb;
    nb.spec = band.spec;
    nb.x_of_layer = band.x_of_layer;
    nb.sigma_pos = band.sigma_pos;
    nb.sigma_periodic = band.sigma_periodic;
    bool complete = true;
    for (const auto& layer : band.layer_verts) {
      std::vector<Index> mapped;
      mapped.reserve(layer.size());
      for (Index v : layer) {
        Index mv = sub.vertex_from_parent[static_cast<std::size_t>(v)];
        if (mv < 0) complete = false;
        mapped.push_back(mv);
      }
      nb.layer_verts.push_back(std::move(mapped));
    }
    if (complete) sub.mesh.collars.push_back(std::move(nb));
  }
  sub.mesh.boundary_facets = derive_boundary_facets(sub.mesh);
  return sub;
}

}  // namespace nodalforge
