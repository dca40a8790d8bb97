#pragma once

/// Critical points of piecewise-linear vertex fields via lower-link
/// topology.  A vertex is regular when the subcomplex of its link spanned
/// by strictly lower neighbors is nonempty, connected, and acyclic;
/// otherwise the first nonvanishing reduced Betti number of that lower link
/// names the index: empty link = minimum (0), extra components = index 1,
/// cycles = index 2, a closed lower link = maximum (dim).  Ties between
/// vertex values are broken by vertex id, an infinitesimal index-ordered
/// perturbation that never needs actual arithmetic.

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nodalforge/core.hpp"
#include "nodalforge/mesh.hpp"

namespace nodalforge {

struct CriticalPoint {
  Index vertex = -1;
  int index = 0;  ///< Morse index in [0, dim]
  double value = 0.0;
  bool degenerate = false;  ///< lower link with total reduced Betti > 1
};

struct CriticalReport {
  std::vector<CriticalPoint> points;
  std::vector<int> counts_by_index;  ///< size dim+1
  std::vector<int> betti_reference;  ///< filled by morse_betti_check
  bool morse_pass = false;
  int degenerate_count = 0;

  int total() const { return static_cast<int>(points.size()); }
  int euler_sum() const {
    int s = 0, sign = 1;
    for (int c : counts_by_index) {
      s += sign * c;
      sign = -sign;
    }
    return s;
  }
};

/// Classify every vertex of the mesh by its lower link under the field u.
/// Works for dim 2 and 3; on dim-3 meshes a maximum is recognized by its
/// lower link being the entire (closed) link, so boundary vertices with no
/// upper neighbor come out regular — closed scenarios are the intended use.
inline CriticalReport classify_critical_vertices(const SimplicialMesh& mesh,
                                                 const Eigen::VectorXd& u) {
  const int n = mesh.dim;
  const Index nv = mesh.vertex_count();
  require(u.size() == nv, "classify_critical_vertices: field size mismatch");
  require(u.maxCoeff() > u.minCoeff(),
          "classify_critical_vertices: constant field");

  auto lower = [&](Index a, Index b) {
    return u[a] < u[b] || (u[a] == u[b] && a < b);
  };

  std::vector<std::vector<Index>> star(static_cast<std::size_t>(nv));
  for (Index c = 0; c < mesh.cell_count(); ++c)
    for (int i = 0; i <= n; ++i)
      star[static_cast<std::size_t>(
               mesh.cells[static_cast<std::size_t>(c)][static_cast<std::size_t>(
                   i)])]
          .push_back(c);

  std::vector<char> on_boundary(static_cast<std::size_t>(nv), 0);
  for (const auto& f : mesh.boundary_facets)
    for (int i = 0; i < ((n == 3) ? 3 : 2); ++i)
      on_boundary[static_cast<std::size_t>(f[static_cast<std::size_t>(i)])] = 1;

  CriticalReport rep;
  rep.counts_by_index.assign(static_cast<std::size_t>(n + 1), 0);

  std::map<Index, int> lid;            // lower neighbor -> local id
  std::set<std::pair<Index, Index>> ledges;
  for (Index v = 0; v < nv; ++v) {
    lid.clear();
    ledges.clear();
    int ltris = 0;
    bool any_upper = false;

    for (Index c : star[static_cast<std::size_t>(v)]) {
      const auto& cell = mesh.cells[static_cast<std::size_t>(c)];
      Index others[3];
      int no = 0;
      for (int i = 0; i <= n; ++i)
        if (cell[static_cast<std::size_t>(i)] != v)
          others[no++] = cell[static_cast<std::size_t>(i)];
      bool low[3];
      int nlow = 0;
      for (int i = 0; i < no; ++i) {
        low[i] = lower(others[i], v);
        if (low[i]) {
          lid.try_emplace(others[i], static_cast<int>(lid.size()));
          ++nlow;
        } else {
          any_upper = true;
        }
      }
      for (int i = 0; i < no; ++i)
        for (int j = i + 1; j < no; ++j)
          if (low[i] && low[j])
            ledges.insert({std::min(others[i], others[j]),
                           std::max(others[i], others[j])});
      if (n == 3 && nlow == 3) ++ltris;
    }

    const int V = static_cast<int>(lid.size());
    if (V == 0) {  // local minimum
      rep.points.push_back({v, 0, u[v], false});
      rep.counts_by_index[0] += 1;
      continue;
    }
    const int E = static_cast<int>(ledges.size());
    UnionFind uf(V);
    for (const auto& [a, b] : ledges) uf.unite(lid.at(a), lid.at(b));
    std::set<Index> roots;
    for (int i = 0; i < V; ++i) roots.insert(uf.find(i));
    const int comps = static_cast<int>(roots.size());

    const int b0r = comps - 1;
    int b1 = 0, b2 = 0;
    if (n == 3) {
      b2 = (!any_upper && !on_boundary[static_cast<std::size_t>(v)]) ? 1 : 0;
      b1 = comps - (V - E + ltris) + b2;
    } else {
      b1 = E - V + comps;
    }

    if (b0r == 0 && b1 == 0 && b2 == 0) continue;  // regular vertex
    const int idx = (b0r > 0) ? 1 : (b1 > 0 ? 2 : n);
    const bool degen = (b0r + b1 + b2) > 1;
    rep.points.push_back({v, idx, u[v], degen});
    rep.counts_by_index[static_cast<std::size_t>(idx)] += 1;
    if (degen) rep.degenerate_count += 1;
  }
  return rep;
}

/// Restrict a report to the points whose vertex satisfies `keep` (used to
/// focus on one nodal domain); counts are rebuilt.
template <typename Pred>
inline CriticalReport filter_critical(const CriticalReport& rep, Pred keep) {
  CriticalReport out;
  out.counts_by_index.assign(rep.counts_by_index.size(), 0);
  for (const auto& p : rep.points) {
    if (!keep(p.vertex)) continue;
    out.points.push_back(p);
    out.counts_by_index[static_cast<std::size_t>(p.index)] += 1;
    if (p.degenerate) out.degenerate_count += 1;
  }
  return out;
}

/// Morse lower bound: every index below the top dimension must carry at
/// least as many critical points as the reference Betti number.  Stores the
/// reference and the verdict in the report.
inline bool morse_betti_check(CriticalReport& rep,
                              const std::vector<int>& betti) {
  require(betti.size() == rep.counts_by_index.size(),
          "morse_betti_check: betti length does not match dimension");
  bool pass = true;
  for (std::size_t i = 0; i + 1 < betti.size(); ++i)
    if (rep.counts_by_index[i] < betti[i]) pass = false;
  rep.betti_reference = betti;
  rep.morse_pass = pass;
  return pass;
}

}  // namespace nodalforge
