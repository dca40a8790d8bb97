#pragma once

// Edge-length metrics.  All geometry downstream of the mesh builders is
// carried by one positive length per edge; cells are realized through their
// Gram matrices, so no global embedding is ever required.  Degeneration
// multiplies exterior lengths by sqrt(chi), chi in [eps, 1], which scales the
// exterior Dirichlet energy by chi^{(n-2)/2} and the mass by chi^{n/2}.

#include <cmath>
#include <sstream>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "nodalforge/core.hpp"
#include "nodalforge/mesh.hpp"

namespace nodalforge {

// === Cayley-Menger ==========================================================

/// Squared area of a triangle from its three edge lengths (Heron).
inline double cayley_menger_area2(double a, double b, double c) {
  double a2 = a * a, b2 = b * b, c2 = c * c;
  return (2 * a2 * b2 + 2 * b2 * c2 + 2 * c2 * a2 - a2 * a2 - b2 * b2 -
          c2 * c2) /
         16.0;
}

/// Squared volume of a tetrahedron from its six edge lengths, ordered
/// (l01, l02, l03, l12, l13, l23).
inline double cayley_menger_volume2(const std::array<double, 6>& l) {
  Eigen::Matrix<double, 5, 5> m;
  double d01 = l[0] * l[0], d02 = l[1] * l[1], d03 = l[2] * l[2];
  double d12 = l[3] * l[3], d13 = l[4] * l[4], d23 = l[5] * l[5];
  m << 0, 1, 1, 1, 1,
       1, 0, d01, d02, d03,
       1, d01, 0, d12, d13,
       1, d02, d12, 0, d23,
       1, d03, d13, d23, 0;
  return m.determinant() / 288.0;
}

// === metric type ============================================================

struct EdgeLengthMetric {
  /// Sorted vertex pairs in lexicographic order; index map built alongside.
  std::vector<std::pair<Index, Index>> edges;
  std::vector<double> length;
  /// Region owning each edge: a collar id if any incident cell lies in that
  /// collar band, else kRegionExterior.
  std::vector<Index> owner;
  /// Effective exterior depth of each edge (0 for collar-owned edges).
  std::vector<double> depth;
  /// Realizability certificate: squared measure of each cell under this
  /// metric (area^2 for dim 2, volume^2 for dim 3); positive iff realizable.
  std::vector<double> cell_vol2;
  double eps = 1.0;

  std::unordered_map<std::uint64_t, Index> index;

  void build_index() {
    index.clear();
    index.reserve(edges.size() * 2);
    for (Index i = 0; i < static_cast<Index>(edges.size()); ++i)
      index[edge_key(edges[static_cast<std::size_t>(i)].first,
                     edges[static_cast<std::size_t>(i)].second)] = i;
  }

  Index edge_id(Index a, Index b) const {
    auto it = index.find(edge_key(a, b));
    require(it != index.end(), "metric: unknown edge " + std::to_string(a) +
                                   "-" + std::to_string(b));
    return it->second;
  }

  double length_of(Index a, Index b) const {
    return length[static_cast<std::size_t>(edge_id(a, b))];
  }
};

// === cell measures / realizability =========================================

/// Squared measure of one cell under the metric.
inline double cell_measure2(const SimplicialMesh& mesh,
                            const EdgeLengthMetric& metric, Index c) {
  const auto& cell = mesh.cells[static_cast<std::size_t>(c)];
  if (mesh.dim == 2) {
    return cayley_menger_area2(metric.length_of(cell[0], cell[1]),
                               metric.length_of(cell[0], cell[2]),
                               metric.length_of(cell[1], cell[2]));
  }
  std::array<double, 6> l{metric.length_of(cell[0], cell[1]),
                          metric.length_of(cell[0], cell[2]),
                          metric.length_of(cell[0], cell[3]),
                          metric.length_of(cell[1], cell[2]),
                          metric.length_of(cell[1], cell[3]),
                          metric.length_of(cell[2], cell[3])};
  return cayley_menger_volume2(l);
}

/// Fill the metric's realizability certificate.  If `throw_on_fail`, raise an
/// Error naming the first cell whose squared measure is not positive.
inline bool verify_realizable(const SimplicialMesh& mesh,
                              EdgeLengthMetric& metric,
                              bool throw_on_fail = true) {
  metric.cell_vol2.assign(static_cast<std::size_t>(mesh.cell_count()), 0.0);
  for (Index c = 0; c < mesh.cell_count(); ++c) {
    double v2 = cell_measure2(mesh, metric, c);
    metric.cell_vol2[static_cast<std::size_t>(c)] = v2;
    if (v2 <= 0.0) {
      if (throw_on_fail) {
        std::ostringstream os;
        os << "metric not realizable: cell " << c << " (vertices";
        for (int i = 0; i < mesh.verts_per_cell(); ++i)
          os << " " << mesh.cells[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
        os << ") has squared measure " << v2;
        throw Error(os.str());
      }
      return false;
    }
  }
  return true;
}

/// Total measure of all cells whose region tag satisfies `keep`.
template <typename Pred>
inline double region_measure(const SimplicialMesh& mesh,
                             const EdgeLengthMetric& metric, Pred keep) {
  double total = 0.0;
  for (Index c = 0; c < mesh.cell_count(); ++c)
    if (keep(mesh.region[static_cast<std::size_t>(c)]))
      total += std::sqrt(
          std::max(0.0, metric.cell_vol2[static_cast<std::size_t>(c)]));
  return total;
}

// === collar product rule ====================================================

/// Vertex -> cross-section node index within one collar band.
struct CollarLookup {
  std::unordered_map<Index, Index> sigma_of;

  explicit CollarLookup(const CollarBand& band) {
    for (const auto& layer : band.layer_verts)
      for (Index s = 0; s < static_cast<Index>(layer.size()); ++s)
        if (layer[static_cast<std::size_t>(s)] >= 0)
          sigma_of[layer[static_cast<std::size_t>(s)]] = s;
  }
};

/// Cross-section distance (unit scale) between nodes sa, sb of a band.
inline double sigma_distance(const CollarBand& band, Index sa, Index sb) {
  Eigen::VectorXd pa = band.sigma_pos.row(sa);
  Eigen::VectorXd pb = band.sigma_pos.row(sb);
  if (band.sigma_periodic) {
    double d2 = 0.0;
    for (int c = 0; c < pa.size(); ++c) {
      double d = pb[c] - pa[c];
      d -= std::round(d);
      d2 += d * d;
    }
    return std::sqrt(d2);
  }
  return (pb - pa).norm();
}

/// Product-metric length Gamma^2 dx^2 + r^2 g_Sigma of a collar-owned edge.
inline double collar_edge_length(const SimplicialMesh& mesh,
                                 const CollarBand& band,
                                 const CollarLookup& lookup, Index a, Index b) {
  double xa = mesh.collar_x[static_cast<std::size_t>(a)];
  double xb = mesh.collar_x[static_cast<std::size_t>(b)];
  require(std::isfinite(xa) && std::isfinite(xb),
          "collar_edge_length: vertex without collar coordinate");
  double dx = band.spec.gamma * (xa - xb);
  double ds = band.spec.r *
              sigma_distance(band, lookup.sigma_of.at(a), lookup.sigma_of.at(b));
  return std::hypot(dx, ds);
}

// === reference metric =======================================================

/// The reference metric g0: collar-owned edges get the product rule from
/// their CollarSpec, everything else queries the builder's chart rule.
/// Also annotates edge ownership and exterior depth (used by degeneration).
inline EdgeLengthMetric reference_metric(const SimplicialMesh& mesh) {
  EdgeLengthMetric metric;
  metric.eps = 1.0;
  auto edge_list = collect_edges(mesh);
  metric.edges = edge_list;
  metric.build_index();
  metric.length.assign(edge_list.size(), 0.0);
  metric.owner.assign(edge_list.size(), kRegionExterior);
  metric.depth.assign(edge_list.size(), 0.0);

  // ownership: an edge belongs to collar i iff some incident cell does
  const int k = mesh.verts_per_cell();
  for (Index c = 0; c < mesh.cell_count(); ++c) {
    Index tag = mesh.region[static_cast<std::size_t>(c)];
    if (!region_is_collar(tag)) continue;
    const auto& cell = mesh.cells[static_cast<std::size_t>(c)];
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) {
        Index id = metric.edge_id(cell[static_cast<std::size_t>(i)],
                                  cell[static_cast<std::size_t>(j)]);
        metric.owner[static_cast<std::size_t>(id)] = tag;
      }
  }

  std::vector<CollarLookup> lookups;
  lookups.reserve(mesh.collars.size());
  for (const auto& band : mesh.collars) lookups.emplace_back(band);

  for (Index e = 0; e < static_cast<Index>(edge_list.size()); ++e) {
    auto [a, b] = edge_list[static_cast<std::size_t>(e)];
    Index own = metric.owner[static_cast<std::size_t>(e)];
    if (region_is_collar(own)) {
      metric.length[static_cast<std::size_t>(e)] = collar_edge_length(
          mesh, mesh.collars[static_cast<std::size_t>(own)],
          lookups[static_cast<std::size_t>(own)], a, b);
    } else if (mesh.chart != nullptr) {
      metric.length[static_cast<std::size_t>(e)] = mesh.chart->edge_length(a, b);
    } else {
      // no chart: ambient distance, shortest periodic image
      Eigen::VectorXd d = mesh.coords.row(a) - mesh.coords.row(b);
      for (int c = 0; c < d.size() && c < static_cast<int>(mesh.period.size());
           ++c)
        if (mesh.period[static_cast<std::size_t>(c)] > 0.0) {
          double p = mesh.period[static_cast<std::size_t>(c)];
          d[c] -= p * std::round(d[c] / p);
        }
      metric.length[static_cast<std::size_t>(e)] = d.norm();
    }
    require(metric.length[static_cast<std::size_t>(e)] > 0,
            "reference_metric: nonpositive edge length");

    // exterior depth: average of endpoint depths; an edge running between
    // two interface vertices through the exterior still dips inside, so give
    // it half its own length as a depth proxy.
    if (!region_is_collar(own)) {
      double da = mesh.ext_depth[static_cast<std::size_t>(a)];
      double db = mesh.ext_depth[static_cast<std::size_t>(b)];
      double d = 0.5 * (da + db);
      if (d == 0.0) d = 0.5 * metric.length[static_cast<std::size_t>(e)];
      metric.depth[static_cast<std::size_t>(e)] = d;
    }
  }

  verify_realizable(mesh, metric);
  return metric;
}

// === degeneration ===========================================================

/// Transition profile between the reference metric (depth 0) and the fully
/// squashed exterior (depth >= delta).  delta <= 0 gives the sharp profile.
struct SmoothingProfile {
  double delta = 0.0;
  int order = 2;  ///< continuity class at the junctions: 0 C^0, 1 C^1, 2 C^2

  /// chi(depth) in [eps, 1]; conformal factor applied to g0.
  ///
  /// The transition is geometric, chi = eps^{s(depth/delta)} with s a
  /// smoothstep polynomial of the requested continuity.  Interpolating in
  /// log space keeps the ratio of chi across neighbouring cells bounded by
  /// eps^{s'_max h/delta} (h the local edge pitch), which is what keeps the
  /// squashed cells realizable, and it degenerates to the sharp profile as
  /// eps -> 0 instead of leaving a residual metric tail in the shell.
  double chi(double depth, double eps) const {
    if (depth <= 0.0) return 1.0;
    if (delta <= 0.0 || depth >= delta) return eps;
    double t = depth / delta;  // 0 at the interface, 1 deep outside
    double s = t;
    if (order == 1) s = t * t * (3.0 - 2.0 * t);
    else if (order >= 2) s = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    return std::pow(eps, s);
  }
};

/// Conformally squash the exterior: multiply each exterior-owned edge by
/// sqrt(chi(depth)).  Sharp profile (the default) scales every exterior edge
/// by sqrt(eps).
inline EdgeLengthMetric degenerate_metric(const SimplicialMesh& mesh,
                                          const EdgeLengthMetric& reference,
                                          double eps,
                                          const SmoothingProfile& profile = {}) {
  require(eps > 0 && eps <= 1, "degenerate_metric: eps must lie in (0, 1]");
  EdgeLengthMetric metric = reference;
  metric.eps = eps;
  for (std::size_t e = 0; e < metric.edges.size(); ++e) {
    if (region_is_collar(metric.owner[e])) continue;
    double chi = profile.chi(metric.depth[e], eps);
    metric.length[e] = reference.length[e] * std::sqrt(chi);
  }
  verify_realizable(mesh, metric);
  return metric;
}

/// Same as degenerate_metric but with an explicit smooth transition collar
/// of width delta (in metric distance from the interface).
inline EdgeLengthMetric smoothed_metric(const SimplicialMesh& mesh,
                                        const EdgeLengthMetric& reference,
                                        double eps, double delta,
                                        int order = 1) {
  return degenerate_metric(mesh, reference, eps,
                           SmoothingProfile{delta, order});
}

// === restriction ============================================================

/// Restrict a parent-mesh metric to a submesh (vertex ids remapped).
inline EdgeLengthMetric restrict_metric(const SimplicialMesh& parent_mesh,
                                        const EdgeLengthMetric& parent,
                                        const Submesh& sub) {
  EdgeLengthMetric metric;
  metric.eps = parent.eps;
  metric.edges = collect_edges(sub.mesh);
  metric.build_index();
  metric.length.assign(metric.edges.size(), 0.0);
  metric.owner.assign(metric.edges.size(), kRegionExterior);
  metric.depth.assign(metric.edges.size(), 0.0);
  for (std::size_t e = 0; e < metric.edges.size(); ++e) {
    Index pa = sub.vertex_to_parent[static_cast<std::size_t>(metric.edges[e].first)];
    Index pb = sub.vertex_to_parent[static_cast<std::size_t>(metric.edges[e].second)];
    Index pe = parent.edge_id(pa, pb);
    metric.length[e] = parent.length[static_cast<std::size_t>(pe)];
    metric.owner[e] = parent.owner[static_cast<std::size_t>(pe)];
    metric.depth[e] = parent.depth[static_cast<std::size_t>(pe)];
  }
  verify_realizable(sub.mesh, metric);
  return metric;
}

}  // namespace nodalforge
