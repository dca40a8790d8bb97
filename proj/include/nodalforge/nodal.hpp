#pragma once

/// Zero-set extraction and census for piecewise-linear fields.  The zero set
/// of a PL function meets each cell in a segment (dim 2) or a planar polygon
/// (dim 3); pieces are glued across cells through their shared edge
/// crossings, then each connected component is measured: Euler
/// characteristic, orientability, area, collar-coordinate statistics, and
/// boundary contact.  Sign-domain counting and collar-profile fitting round
/// out the analysis of a computed eigenfunction.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "nodalforge/core.hpp"
#include "nodalforge/mesh.hpp"
#include "nodalforge/metric.hpp"

namespace nodalforge {

/// One crossing of the zero set through a mesh edge.
struct NodalPoint {
  Index a = -1, b = -1;    ///< mesh edge carrying the crossing, a < b
  double t = 0.0;          ///< (1-t) u_a + t u_b = 0, t in (0,1)
  double collar_x = kNaN;  ///< interpolated collar coordinate, NaN off-collar
  int collar = -1;         ///< collar id when both endpoints share one
  bool on_boundary = false;
};

/// The zero set inside one cell: a segment (dim 2) or planar polygon (dim 3)
/// listed in cyclic order, referencing crossing points by id.
struct NodalPiece {
  Index cell = -1;
  std::vector<int> pts;
};

struct NodalComponent {
  int pieces = 0;
  int euler_char = 0;
  bool orientable = true;   ///< dim 3 only; curves are always orientable
  double area = 0.0;        ///< total piece measure (length in dim 2)
  double collar_mean = kNaN;  ///< stats of collar_x over crossing points
  double collar_std = kNaN;
  double collar_frac = 0.0;  ///< fraction of crossing points inside a collar
  int collar = -1;           ///< unique collar id, -1 when mixed or none
  bool touches_boundary = false;
};

struct NodalComplex {
  int dim = 0;
  std::vector<NodalPoint> points;
  Eigen::MatrixXd positions;  ///< ambient coordinates, one row per point
  std::vector<NodalPiece> pieces;
  std::vector<int> component_of_piece;
  std::vector<NodalComponent> components;

  std::size_t piece_count() const { return pieces.size(); }
  std::size_t component_count() const { return components.size(); }
};

namespace detail {

/// Local vertex coordinates of one cell, one row per cell vertex.  With a
/// metric: an isometric embedding of the edge-length simplex into R^dim
/// (Gram factorization).  Without: ambient chart coordinates unwrapped to
/// the sheet of the first vertex.
inline Eigen::MatrixXd cell_geometry(const SimplicialMesh& mesh,
                                     const EdgeLengthMetric* metric,
                                     Index c) {
  const int n = mesh.dim;
  const auto& cell = mesh.cells[static_cast<std::size_t>(c)];
  if (metric == nullptr) {
    Eigen::MatrixXd X(n + 1, mesh.coords.cols());
    for (int i = 0; i <= n; ++i)
      X.row(i) = mesh.unwrapped(cell[0], cell[static_cast<std::size_t>(i)]);
    return X;
  }
  Eigen::MatrixXd G(n, n);
  auto l2 = [&](int i, int j) {
    double l = metric->length_of(cell[static_cast<std::size_t>(i)],
                                 cell[static_cast<std::size_t>(j)]);
    return l * l;
  };
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      G(i - 1, j - 1) = (i == j) ? l2(0, i) : 0.5 * (l2(0, i) + l2(0, j) - l2(i, j));
  // rows of L reproduce the Gram matrix; eigen-clamp keeps nearly flat
  // cells (vol^2 at roundoff) from aborting the factorization
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd L =
      es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n + 1, n);
  for (int i = 1; i <= n; ++i) X.row(i) = L.row(i - 1);
  return X;
}

inline double triangle_area(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  double uu = u.squaredNorm(), vv = v.squaredNorm(), uv = u.dot(v);
  return 0.5 * std::sqrt(std::max(0.0, uu * vv - uv * uv));
}

/// Working copy of a vertex field for sign-based extraction.  Vertices with
/// |u| >= vertex_zero_shift * |u|_inf keep their values; the rest carry no
/// reliable sign of their own (exact zeros on a symmetry plane or a Dirichlet
/// boundary, near-dead squashed regions) and are assigned one by consistency.
/// Layer by layer, a sub-threshold vertex whose signed neighbours all agree
/// joins that side, so a uniformly-signed region absorbs its zero fringe
/// instead of being fenced off by a phantom crossing; a vertex bordered by
/// both signs sits on a genuine crossing and is nudged to the positive side
/// (deterministic tie-break).  Rounds are synchronous, so the result does not
/// depend on vertex order.  Sub-threshold pockets with no signed neighbours
/// at all default to the positive side.
inline Eigen::VectorXd signed_working_field(const SimplicialMesh& mesh,
                                            const Eigen::VectorXd& field,
                                            double vertex_zero_shift,
                                            const char* caller) {
  const int n = mesh.dim;
  const Index nv = mesh.vertex_count();
  require(field.size() == nv,
          std::string(caller) + ": field size mismatch");
  const double scale = field.cwiseAbs().maxCoeff();
  require(scale > 0.0, std::string(caller) + ": all-zero field");
  const double thresh = vertex_zero_shift * scale;

  Eigen::VectorXd u = field;
  std::vector<char> known(static_cast<std::size_t>(nv), 0);
  bool any_unknown = false;
  for (Index v = 0; v < nv; ++v) {
    if (std::abs(u[v]) >= thresh)
      known[static_cast<std::size_t>(v)] = 1;
    else
      any_unknown = true;
  }
  if (!any_unknown) return u;

  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(nv));
  std::unordered_set<std::uint64_t> edge_seen;
  for (const auto& cell : mesh.cells)
    for (int i = 0; i <= n; ++i)
      for (int j = i + 1; j <= n; ++j) {
        const Index a = cell[static_cast<std::size_t>(i)];
        const Index b = cell[static_cast<std::size_t>(j)];
        if (edge_seen.insert(edge_key(std::min(a, b), std::max(a, b))).second) {
          adj[static_cast<std::size_t>(a)].push_back(b);
          adj[static_cast<std::size_t>(b)].push_back(a);
        }
      }

  for (;;) {
    std::vector<std::pair<Index, double>> assign;
    for (Index v = 0; v < nv; ++v) {
      if (known[static_cast<std::size_t>(v)]) continue;
      bool has_pos = false, has_neg = false;
      for (Index w : adj[static_cast<std::size_t>(v)]) {
        if (!known[static_cast<std::size_t>(w)]) continue;
        (u[w] < 0.0 ? has_neg : has_pos) = true;
      }
      if (!has_pos && !has_neg) continue;
      assign.emplace_back(v, (has_neg && !has_pos) ? -thresh : thresh);
    }
    if (assign.empty()) break;
    for (const auto& [v, val] : assign) {
      u[v] = val;
      known[static_cast<std::size_t>(v)] = 1;
    }
  }
  for (Index v = 0; v < nv; ++v)
    if (!known[static_cast<std::size_t>(v)]) u[v] = thresh;
  return u;
}

}  // namespace detail

/// Extract the PL zero set of a vertex field.  Sub-threshold vertices first
/// receive a consistent sign (see detail::signed_working_field), so every
/// cell sees strictly signed corners and the extraction is exact linear
/// geometry; zero fringes of a one-signed region (Dirichlet boundaries, dead
/// squashed zones) do not spawn phantom sheets.  Areas use the given metric's
/// edge lengths when provided, ambient chart geometry otherwise.
inline NodalComplex extract_zero_set(const SimplicialMesh& mesh,
                                     const Eigen::VectorXd& field,
                                     double vertex_zero_shift = 1e-9,
                                     const EdgeLengthMetric* metric = nullptr) {
  const int n = mesh.dim;
  const Index nv = mesh.vertex_count();
  Eigen::VectorXd u = detail::signed_working_field(mesh, field,
                                                   vertex_zero_shift,
                                                   "extract_zero_set");

  // boundary mesh edges, for flagging components that touch the boundary
  std::unordered_set<std::uint64_t> boundary_edges;
  for (const auto& f : mesh.boundary_facets) {
    const int fv = (n == 3) ? 3 : 2;
    for (int i = 0; i < fv; ++i)
      for (int j = i + 1; j < fv; ++j)
        boundary_edges.insert(edge_key(f[static_cast<std::size_t>(i)],
                                       f[static_cast<std::size_t>(j)]));
  }

  NodalComplex nc;
  nc.dim = n;
  std::unordered_map<std::uint64_t, int> point_of_edge;
  std::vector<Eigen::VectorXd> pos_rows;

  auto point_id = [&](Index p, Index q) {
    const Index a = std::min(p, q), b = std::max(p, q);
    const std::uint64_t key = edge_key(a, b);
    auto it = point_of_edge.find(key);
    if (it != point_of_edge.end()) return it->second;
    NodalPoint pt;
    pt.a = a;
    pt.b = b;
    pt.t = u[a] / (u[a] - u[b]);
    if (mesh.collar_id[static_cast<std::size_t>(a)] >= 0 &&
        mesh.collar_id[static_cast<std::size_t>(a)] ==
            mesh.collar_id[static_cast<std::size_t>(b)]) {
      pt.collar = static_cast<int>(mesh.collar_id[static_cast<std::size_t>(a)]);
      pt.collar_x = (1.0 - pt.t) * mesh.collar_x[static_cast<std::size_t>(a)] +
                    pt.t * mesh.collar_x[static_cast<std::size_t>(b)];
    }
    pt.on_boundary = boundary_edges.count(key) > 0;
    const int id = static_cast<int>(nc.points.size());
    nc.points.push_back(pt);
    Eigen::VectorXd pa = mesh.coords.row(a);
    pos_rows.push_back(pa + pt.t * (mesh.unwrapped(a, b) - pa));
    point_of_edge.emplace(key, id);
    return id;
  };

  // pieces, glued through shared crossing points as they appear (each cell
  // contributes at most one piece, so cell count bounds the id space)
  UnionFind uf(mesh.cell_count());
  std::unordered_map<int, int> first_piece_of_point;
  for (Index c = 0; c < mesh.cell_count(); ++c) {
    const auto& cell = mesh.cells[static_cast<std::size_t>(c)];
    std::vector<Index> neg, pos;
    for (int i = 0; i <= n; ++i)
      (u[cell[static_cast<std::size_t>(i)]] < 0.0 ? neg : pos)
          .push_back(cell[static_cast<std::size_t>(i)]);
    if (neg.empty() || pos.empty()) continue;

    NodalPiece piece;
    piece.cell = c;
    if (neg.size() == 1 || pos.size() == 1) {
      const Index apex = (neg.size() == 1) ? neg[0] : pos[0];
      const auto& others = (neg.size() == 1) ? pos : neg;
      for (Index o : others) piece.pts.push_back(point_id(apex, o));
    } else {
      // two vertices on each side: the cyclic order below keeps every
      // consecutive pair of crossings on a common cell face
      piece.pts = {point_id(neg[0], pos[0]), point_id(neg[0], pos[1]),
                   point_id(neg[1], pos[1]), point_id(neg[1], pos[0])};
    }
    const int pid = static_cast<int>(nc.pieces.size());
    nc.pieces.push_back(std::move(piece));
    for (int pt : nc.pieces.back().pts) {
      auto [it, fresh] = first_piece_of_point.emplace(pt, pid);
      if (!fresh) uf.unite(pid, it->second);
    }
  }

  nc.positions.resize(static_cast<Eigen::Index>(pos_rows.size()),
                      mesh.coords.cols());
  for (std::size_t i = 0; i < pos_rows.size(); ++i)
    nc.positions.row(static_cast<Eigen::Index>(i)) = pos_rows[i];

  // dense component ids in order of first appearance
  std::unordered_map<int, int> comp_of_root;
  nc.component_of_piece.resize(nc.pieces.size());
  for (std::size_t p = 0; p < nc.pieces.size(); ++p) {
    const int root = uf.find(static_cast<int>(p));
    auto [it, fresh] =
        comp_of_root.emplace(root, static_cast<int>(nc.components.size()));
    if (fresh) nc.components.emplace_back();
    nc.component_of_piece[p] = it->second;
  }

  // census per component: counts, Euler characteristic via the polygon
  // complex (V - E + F), orientability by propagating traversal direction
  // across shared polygon edges, metric area, collar statistics
  const std::size_t ncomp = nc.components.size();
  std::vector<std::unordered_set<int>> comp_pts(ncomp);
  struct EdgeUse {
    int piece;
    int from, to;
  };
  std::map<std::pair<int, int>, std::vector<EdgeUse>> poly_edges;

  for (std::size_t p = 0; p < nc.pieces.size(); ++p) {
    const int comp = nc.component_of_piece[p];
    NodalComponent& C = nc.components[static_cast<std::size_t>(comp)];
    C.pieces += 1;
    const auto& pts = nc.pieces[p].pts;
    for (int pt : pts) comp_pts[static_cast<std::size_t>(comp)].insert(pt);

    const int sz = static_cast<int>(pts.size());
    const int edges_here = (n == 2) ? 1 : sz;
    for (int i = 0; i < edges_here; ++i) {
      const int a = pts[static_cast<std::size_t>(i)];
      const int b = pts[static_cast<std::size_t>((i + 1) % sz)];
      poly_edges[{std::min(a, b), std::max(a, b)}].push_back(
          {static_cast<int>(p), a, b});
    }

    // area from local cell geometry
    Eigen::MatrixXd X = detail::cell_geometry(mesh, metric, nc.pieces[p].cell);
    const auto& cell = mesh.cells[static_cast<std::size_t>(nc.pieces[p].cell)];
    auto local = [&](Index v) {
      for (int i = 0; i <= n; ++i)
        if (cell[static_cast<std::size_t>(i)] == v) return i;
      require(false, "extract_zero_set: vertex not in cell");
      return -1;
    };
    std::vector<Eigen::VectorXd> P;
    for (int pt : pts) {
      const NodalPoint& q = nc.points[static_cast<std::size_t>(pt)];
      P.push_back((1.0 - q.t) * X.row(local(q.a)) + q.t * X.row(local(q.b)));
    }
    if (n == 2)
      C.area += (P[1] - P[0]).norm();
    else
      for (std::size_t i = 1; i + 1 < P.size(); ++i)
        C.area += detail::triangle_area(P[i] - P[0], P[i + 1] - P[0]);
  }

  // orientability: adjacent polygons must traverse a shared edge in
  // opposite directions once their flips are reconciled
  if (n == 3) {
    std::vector<int> flip(nc.pieces.size(), -1);
    std::vector<std::vector<std::pair<int, int>>> adj(nc.pieces.size());
    for (auto& [key, uses] : poly_edges)
      if (uses.size() == 2) {
        const bool same_dir = uses[0].from == uses[1].from;
        adj[static_cast<std::size_t>(uses[0].piece)].push_back(
            {uses[1].piece, same_dir ? 1 : 0});
        adj[static_cast<std::size_t>(uses[1].piece)].push_back(
            {uses[0].piece, same_dir ? 1 : 0});
      }
    for (std::size_t s = 0; s < nc.pieces.size(); ++s) {
      if (flip[s] != -1) continue;
      flip[s] = 0;
      std::vector<int> stack{static_cast<int>(s)};
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        for (auto [q, rel] : adj[static_cast<std::size_t>(p)]) {
          const int want = flip[static_cast<std::size_t>(p)] ^ rel;
          if (flip[static_cast<std::size_t>(q)] == -1) {
            flip[static_cast<std::size_t>(q)] = want;
            stack.push_back(q);
          } else if (flip[static_cast<std::size_t>(q)] != want) {
            nc.components[static_cast<std::size_t>(
                              nc.component_of_piece[static_cast<std::size_t>(
                                  q)])]
                .orientable = false;
          }
        }
      }
    }
  }

  // Euler characteristic, boundary contact, collar statistics
  std::vector<int> comp_edge_count(ncomp, 0);
  for (auto& [key, uses] : poly_edges)
    comp_edge_count[static_cast<std::size_t>(
        nc.component_of_piece[static_cast<std::size_t>(uses[0].piece)])] += 1;

  for (std::size_t comp = 0; comp < ncomp; ++comp) {
    NodalComponent& C = nc.components[comp];
    const auto& pts = comp_pts[comp];
    C.euler_char = static_cast<int>(pts.size()) - comp_edge_count[comp] +
                   ((n == 3) ? C.pieces : 0);
    std::vector<double> xs;
    for (int pt : pts) {
      const NodalPoint& q = nc.points[static_cast<std::size_t>(pt)];
      if (q.on_boundary) C.touches_boundary = true;
      if (q.collar >= 0) {
        if (xs.empty())
          C.collar = q.collar;
        else if (C.collar != q.collar)
          C.collar = -1;
        xs.push_back(q.collar_x);
      }
    }
    C.collar_frac = pts.empty() ? 0.0 : double(xs.size()) / double(pts.size());
    if (!xs.empty()) {
      double sum = 0.0;
      for (double x : xs) sum += x;
      C.collar_mean = sum / static_cast<double>(xs.size());
      double dev2 = 0.0;  // two-pass variance: the centered one-pass form
      for (double x : xs)  // cancels to noise for tight copies
        dev2 += (x - C.collar_mean) * (x - C.collar_mean);
      C.collar_std = std::sqrt(dev2 / static_cast<double>(xs.size()));
    } else {
      C.collar = -1;
    }
  }
  return nc;
}

// === census =================================================================

/// What a scenario expects of the zero set of mode k: component count, the
/// per-component Euler characteristic of the model cross-section, and the
/// collar positions of the copies.
struct CensusExpectation {
  int count = -1;           ///< expected component count; -1 skips the check
  int euler_char = 9999;    ///< expected per-component chi; 9999 skips
  std::vector<double> positions;  ///< expected collar_x of each copy
  double position_tol = 0.1;
  int collar = -1;          ///< restrict position matching to this collar
  /// Containment-only mode: extra components are reported, not failed
  /// (needed when the cross-section does not separate the manifold).
  bool allow_extras = false;
};

struct CensusVerdict {
  bool count_ok = false;
  bool euler_ok = false;
  bool positions_ok = false;
  bool interior_ok = true;  ///< no matched copy touches the mesh boundary
  bool pass = false;
  int found_count = 0;
  int extra_components = 0;
  std::vector<double> matched_positions;  ///< component means, matched order
  std::string detail;
};

/// Compare an extracted complex against the scenario expectation.  Matching
/// is greedy by position: each expected position claims the nearest
/// unclaimed in-collar component; a match also requires the component's
/// Euler characteristic and a collar-x spread below the tolerance.
inline CensusVerdict component_census(const NodalComplex& nc,
                                      const CensusExpectation& expected) {
  CensusVerdict v;
  v.found_count = static_cast<int>(nc.components.size());

  std::vector<int> candidates;
  for (std::size_t i = 0; i < nc.components.size(); ++i) {
    const NodalComponent& C = nc.components[i];
    if (expected.collar >= 0 && C.collar != expected.collar) continue;
    if (C.collar_frac < 0.999 || std::isnan(C.collar_mean)) continue;
    candidates.push_back(static_cast<int>(i));
  }

  v.euler_ok = true;
  bool spread_ok = true;
  std::vector<bool> claimed(nc.components.size(), false);
  int matched = 0;
  for (double want : expected.positions) {
    int best = -1;
    double best_d = expected.position_tol;
    for (int i : candidates) {
      if (claimed[static_cast<std::size_t>(i)]) continue;
      const double d =
          std::abs(nc.components[static_cast<std::size_t>(i)].collar_mean - want);
      if (d <= best_d) {
        best_d = d;
        best = i;
      }
    }
    if (best < 0) {
      v.detail += "no component near x=" + std::to_string(want) + "; ";
      continue;
    }
    claimed[static_cast<std::size_t>(best)] = true;
    const NodalComponent& C = nc.components[static_cast<std::size_t>(best)];
    v.matched_positions.push_back(C.collar_mean);
    matched += 1;
    if (C.collar_std > expected.position_tol) {
      spread_ok = false;
      v.detail += "copy at x=" + std::to_string(C.collar_mean) +
                  " has spread " + std::to_string(C.collar_std) + "; ";
    }
    if (expected.euler_char != 9999 && C.euler_char != expected.euler_char) {
      v.euler_ok = false;
      v.detail += "chi=" + std::to_string(C.euler_char) + " at x=" +
                  std::to_string(C.collar_mean) + ", expected " +
                  std::to_string(expected.euler_char) + "; ";
    }
    if (C.touches_boundary) {
      v.interior_ok = false;
      v.detail += "copy at x=" + std::to_string(C.collar_mean) +
                  " touches the boundary; ";
    }
    if (!C.orientable) {
      v.euler_ok = false;
      v.detail += "non-orientable component; ";
    }
  }
  v.positions_ok =
      matched == static_cast<int>(expected.positions.size()) && spread_ok;

  v.extra_components = v.found_count - matched;
  if (expected.count >= 0)
    v.count_ok = expected.allow_extras ? matched >= expected.count
                                       : v.found_count == expected.count &&
                                             matched == expected.count;
  else
    v.count_ok = true;

  // strict mode also holds unmatched components to the model chi
  if (!expected.allow_extras && expected.euler_char != 9999)
    for (std::size_t i = 0; i < nc.components.size(); ++i)
      if (!claimed[i] && nc.components[i].euler_char != expected.euler_char)
        v.euler_ok = false;

  v.pass = v.count_ok && v.euler_ok && v.positions_ok && v.interior_ok;
  return v;
}

// === nodal domains ==========================================================

struct DomainReport {
  int count = 0;
  std::vector<double> volumes;  ///< per domain, under the given metric
  std::vector<int> sign;        ///< +1 / -1 per domain
};

/// Count sign domains of the PL field: connected components of the vertex
/// graph restricted to edges whose endpoints agree in sign (after the
/// consistent sub-threshold sign assignment of detail::signed_working_field,
/// so exact-zero fringes join their signed neighbourhood instead of forming
/// phantom domains).  Cell volumes are split between the adjacent domains in
/// proportion to their vertex counts.
inline DomainReport nodal_domains(const SimplicialMesh& mesh,
                                  const Eigen::VectorXd& field,
                                  double vertex_zero_shift = 1e-9,
                                  const EdgeLengthMetric* metric = nullptr) {
  const int n = mesh.dim;
  const Index nv = mesh.vertex_count();
  Eigen::VectorXd u = detail::signed_working_field(mesh, field,
                                                   vertex_zero_shift,
                                                   "nodal_domains");

  UnionFind uf(static_cast<int>(nv));
  for (const auto& cell : mesh.cells)
    for (int i = 0; i <= n; ++i)
      for (int j = i + 1; j <= n; ++j) {
        const Index a = cell[static_cast<std::size_t>(i)];
        const Index b = cell[static_cast<std::size_t>(j)];
        if ((u[a] < 0.0) == (u[b] < 0.0)) uf.unite(static_cast<int>(a),
                                                   static_cast<int>(b));
      }

  DomainReport rep;
  std::unordered_map<int, int> dom_of_root;
  std::vector<int> dom_of_vertex(static_cast<std::size_t>(nv), -1);
  for (Index v = 0; v < nv; ++v) {
    const int root = uf.find(static_cast<int>(v));
    auto [it, fresh] = dom_of_root.emplace(root, rep.count);
    if (fresh) {
      rep.count += 1;
      rep.volumes.push_back(0.0);
      rep.sign.push_back(u[v] < 0.0 ? -1 : +1);
    }
    dom_of_vertex[static_cast<std::size_t>(v)] = it->second;
  }

  for (Index c = 0; c < mesh.cell_count(); ++c) {
    const auto& cell = mesh.cells[static_cast<std::size_t>(c)];
    double vol;
    if (metric != nullptr) {
      vol = std::sqrt(std::max(0.0, metric->cell_vol2[static_cast<std::size_t>(c)]));
    } else {
      Eigen::MatrixXd X = detail::cell_geometry(mesh, nullptr, c);
      Eigen::MatrixXd E(n, X.cols());
      for (int i = 1; i <= n; ++i) E.row(i - 1) = X.row(i) - X.row(0);
      Eigen::MatrixXd Gm = E * E.transpose();
      vol = std::sqrt(std::max(0.0, Gm.determinant())) /
            ((n == 3) ? 6.0 : 2.0);
    }
    for (int i = 0; i <= n; ++i)
      rep.volumes[static_cast<std::size_t>(
          dom_of_vertex[static_cast<std::size_t>(
              cell[static_cast<std::size_t>(i)])])] += vol / (n + 1);
  }
  return rep;
}

// === collar profile fit =====================================================

struct ProfileFit {
  double beta = 0.0;        ///< fitted amplitude of the cosine profile
  double rel_l2_error = 0.0;  ///< mass-weighted, relative to |u| on the collar
  int vertex_count = 0;
};

/// Fit field ~ beta * cos(k pi (x+1)/2) over the vertices of one collar,
/// weighted by the lumped mass of the cells inside that collar under the
/// given metric.  Reports the best beta and the relative L2 misfit.
inline ProfileFit profile_error(const SimplicialMesh& mesh,
                                const EdgeLengthMetric& metric,
                                const Eigen::VectorXd& field, int collar,
                                int k) {
  const int n = mesh.dim;
  const Index nv = mesh.vertex_count();
  require(field.size() == nv, "profile_error: field size mismatch");
  require(k >= 1, "profile_error: k must be >= 1");

  Eigen::VectorXd w = Eigen::VectorXd::Zero(nv);
  for (Index c = 0; c < mesh.cell_count(); ++c) {
    const auto& cell = mesh.cells[static_cast<std::size_t>(c)];
    bool inside = true;
    for (int i = 0; i <= n; ++i)
      if (mesh.collar_id[static_cast<std::size_t>(
              cell[static_cast<std::size_t>(i)])] != collar)
        inside = false;
    if (!inside) continue;
    const double vol =
        std::sqrt(std::max(0.0, metric.cell_vol2[static_cast<std::size_t>(c)]));
    for (int i = 0; i <= n; ++i)
      w[cell[static_cast<std::size_t>(i)]] += vol / (n + 1);
  }

  ProfileFit fit;
  double num = 0.0, den = 0.0, uu = 0.0;
  for (Index v = 0; v < nv; ++v) {
    if (w[v] <= 0.0) continue;
    fit.vertex_count += 1;
    const double m =
        std::cos(k * M_PI * (mesh.collar_x[static_cast<std::size_t>(v)] + 1.0) / 2.0);
    num += w[v] * field[v] * m;
    den += w[v] * m * m;
    uu += w[v] * field[v] * field[v];
  }
  require(fit.vertex_count > 0, "profile_error: collar is empty");
  require(den > 0.0, "profile_error: degenerate profile weight");
  fit.beta = num / den;
  double err2 = 0.0;
  for (Index v = 0; v < nv; ++v) {
    if (w[v] <= 0.0) continue;
    const double m =
        std::cos(k * M_PI * (mesh.collar_x[static_cast<std::size_t>(v)] + 1.0) / 2.0);
    const double d = field[v] - fit.beta * m;
    err2 += w[v] * d * d;
  }
  fit.rel_l2_error = (uu > 0.0) ? std::sqrt(err2 / uu) : 0.0;
  return fit;
}

}  // namespace nodalforge
