#pragma once

/// P1 finite-element operators for an edge-length metric: stiffness and mass
/// assembly, Rayleigh quotients, harmonic extension into the squashed
/// exterior, and the span-based upper bound on low eigenvalues.
///
/// Every cell is realized from its edge lengths alone through the Gram
/// matrix G_ij = (l_0i^2 + l_0j^2 - l_ij^2)/2 of the edge vectors based at
/// vertex 0; P1 gradients satisfy grad(phi_i).grad(phi_j) = (G^-1)_ij, so no
/// ambient coordinates enter the operators.  All loops run in a fixed order,
/// making assembly bitwise deterministic.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nodalforge/core.hpp"
#include "nodalforge/mesh.hpp"
#include "nodalforge/metric.hpp"

namespace nodalforge {

enum class MassKind { consistent, lumped };
enum class BoundaryCondition { closed, neumann, dirichlet };
enum class OuterBC { none, dirichlet_zero };

/// Assembled stiffness/mass pair, reduced to the free degrees of freedom.
/// Under a Dirichlet condition the boundary vertices are eliminated (value
/// 0); `expand` maps a dof vector back to a full vertex field.
struct OperatorPair {
  Eigen::SparseMatrix<double> stiffness;
  Eigen::SparseMatrix<double> mass;   ///< consistent or diagonal, per kind
  Eigen::VectorXd lumped;             ///< lumped mass diagonal (free dofs)
  BoundaryCondition bc = BoundaryCondition::closed;
  MassKind mass_kind = MassKind::consistent;
  std::vector<Index> vertex_of_dof;
  std::vector<Index> dof_of_vertex;  ///< -1 for constrained vertices

  Index dof_count() const { return static_cast<Index>(vertex_of_dof.size()); }

  Eigen::VectorXd expand(const Eigen::VectorXd& u) const {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(
        static_cast<Eigen::Index>(dof_of_vertex.size()));
    for (std::size_t d = 0; d < vertex_of_dof.size(); ++d)
      full[vertex_of_dof[d]] = u[static_cast<Eigen::Index>(d)];
    return full;
  }

  Eigen::VectorXd restrict_to_dofs(const Eigen::VectorXd& field) const {
    Eigen::VectorXd u(dof_count());
    for (std::size_t d = 0; d < vertex_of_dof.size(); ++d)
      u[static_cast<Eigen::Index>(d)] = field[vertex_of_dof[d]];
    return u;
  }
};

namespace detail {

/// Local P1 stiffness for one cell from its edge lengths.  Returns the
/// (n+1)x(n+1) matrix vol * Grad Grad^T and the cell volume.
inline void local_operators(int n, const double* length2, double vol,
                            Eigen::Matrix4d& K) {
  // length2 holds the squared lengths in the order (01,02,03,12,13,23) for
  // n = 3 and (01,02,12) for n = 2.
  Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
  if (n == 3) {
    const double* l = length2;
    G(0, 0) = l[0];
    G(1, 1) = l[1];
    G(2, 2) = l[2];
    G(0, 1) = G(1, 0) = 0.5 * (l[0] + l[1] - l[3]);
    G(0, 2) = G(2, 0) = 0.5 * (l[0] + l[2] - l[4]);
    G(1, 2) = G(2, 1) = 0.5 * (l[1] + l[2] - l[5]);
  } else {
    const double* l = length2;
    G(0, 0) = l[0];
    G(1, 1) = l[1];
    G(0, 1) = G(1, 0) = 0.5 * (l[0] + l[1] - l[2]);
    G(2, 2) = 1.0;  // padding
  }
  Eigen::Matrix3d Ginv = G.inverse();
  K.setZero();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) K(i + 1, j + 1) = vol * Ginv(i, j);
  for (int i = 1; i <= n; ++i) {
    double s = 0.0;
    for (int j = 1; j <= n; ++j) s += K(i, j);
    K(i, 0) = K(0, i) = -s;
  }
  double s = 0.0;
  for (int j = 1; j <= n; ++j) s += K(0, j);
  K(0, 0) = -s;
}

}  // namespace detail

/// Assemble the P1 stiffness and mass operators of the given edge-length
/// metric.  `closed` requires an empty boundary; `dirichlet` eliminates the
/// boundary vertices; `neumann` leaves them free (natural condition).
inline OperatorPair assemble(const SimplicialMesh& mesh,
                             const EdgeLengthMetric& metric,
                             BoundaryCondition bc = BoundaryCondition::closed,
                             MassKind mass_kind = MassKind::consistent) {
  const int n = mesh.dim;
  const Index nv = mesh.vertex_count();
  require(metric.cell_vol2.size() == static_cast<std::size_t>(mesh.cell_count()),
          "assemble: metric does not match the mesh");

  std::vector<bool> constrained(static_cast<std::size_t>(nv), false);
  if (bc == BoundaryCondition::closed) {
    require(mesh.boundary_facets.empty(),
            "assemble: closed condition on a mesh with boundary");
  } else if (bc == BoundaryCondition::dirichlet) {
    require(!mesh.boundary_facets.empty(),
            "assemble: dirichlet condition needs a boundary");
    for (const auto& f : mesh.boundary_facets)
      for (int i = 0; i < n; ++i)
        if (f[static_cast<std::size_t>(i)] >= 0)
          constrained[static_cast<std::size_t>(f[static_cast<std::size_t>(i)])] =
              true;
  }

  OperatorPair ops;
  ops.bc = bc;
  ops.mass_kind = mass_kind;
  ops.dof_of_vertex.assign(static_cast<std::size_t>(nv), -1);
  for (Index v = 0; v < nv; ++v)
    if (!constrained[static_cast<std::size_t>(v)]) {
      ops.dof_of_vertex[static_cast<std::size_t>(v)] =
          static_cast<Index>(ops.vertex_of_dof.size());
      ops.vertex_of_dof.push_back(v);
    }
  const Index nd = ops.dof_count();

  std::vector<Eigen::Triplet<double>> tk, tm;
  tk.reserve(static_cast<std::size_t>(mesh.cell_count()) * 16);
  tm.reserve(static_cast<std::size_t>(mesh.cell_count()) * 16);
  Eigen::VectorXd lumped = Eigen::VectorXd::Zero(nd);

  const double mass_off = 1.0 / ((n + 1.0) * (n + 2.0));
  Eigen::Matrix4d Kloc;
  double length2[6];

  for (Index c = 0; c < mesh.cell_count(); ++c) {
    const auto& cell = mesh.cells[static_cast<std::size_t>(c)];
    int ne = 0;
    for (int i = 0; i < n + 1; ++i)
      for (int j = i + 1; j < n + 1; ++j) {
        double l = metric.length_of(cell[static_cast<std::size_t>(i)],
                                    cell[static_cast<std::size_t>(j)]);
        length2[ne++] = l * l;
      }
    double vol2 = metric.cell_vol2[static_cast<std::size_t>(c)];
    require(vol2 > 0.0, "assemble: zero-volume cell " + std::to_string(c));
    double vol = std::sqrt(vol2);
    detail::local_operators(n, length2, vol, Kloc);

    for (int i = 0; i < n + 1; ++i) {
      Index di = ops.dof_of_vertex[static_cast<std::size_t>(
          cell[static_cast<std::size_t>(i)])];
      if (di < 0) continue;
      lumped[di] += vol / (n + 1.0);
      for (int j = 0; j < n + 1; ++j) {
        Index dj = ops.dof_of_vertex[static_cast<std::size_t>(
            cell[static_cast<std::size_t>(j)])];
        if (dj < 0) continue;
        tk.emplace_back(di, dj, Kloc(i, j));
        if (mass_kind == MassKind::consistent)
          tm.emplace_back(di, dj, vol * mass_off * (i == j ? 2.0 : 1.0));
      }
    }
  }

  ops.stiffness.resize(nd, nd);
  ops.stiffness.setFromTriplets(tk.begin(), tk.end());
  ops.lumped = lumped;
  ops.mass.resize(nd, nd);
  if (mass_kind == MassKind::consistent) {
    ops.mass.setFromTriplets(tm.begin(), tm.end());
  } else {
    std::vector<Eigen::Triplet<double>> td;
    td.reserve(static_cast<std::size_t>(nd));
    for (Index d = 0; d < nd; ++d) td.emplace_back(d, d, lumped[d]);
    ops.mass.setFromTriplets(td.begin(), td.end());
  }
  return ops;
}

/// Rayleigh quotient v'Kv / v'Mv on dof vectors.
inline double rayleigh(const OperatorPair& ops, const Eigen::VectorXd& v) {
  double den = v.dot(ops.mass * v);
  require(den > 0.0, "rayleigh: zero mass norm");
  return v.dot(ops.stiffness * v) / den;
}

/// Result of extending interface data harmonically into the exterior.
struct ExtensionReport {
  Eigen::VectorXd values;  ///< full vertex field; collar interior left at 0
  int exterior_components = 0;
  int components_without_data = 0;  ///< flagged, assigned the constant 0
  double h1_energy = 0.0;  ///< u'(K+M)u over the exterior, given metric
};

/// Solve the discrete Laplace equation on the exterior region (every cell
/// whose region tag is not a collar id), with Dirichlet data prescribed on
/// the collar interface vertices and, optionally, zero on the mesh boundary.
/// Components of the exterior that carry no constraint at all are assigned
/// the constant 0 and counted in the report.
inline ExtensionReport harmonic_extension(const SimplicialMesh& mesh,
                                          const EdgeLengthMetric& metric,
                                          const Eigen::VectorXd& boundary_values,
                                          OuterBC outer = OuterBC::none) {
  const int n = mesh.dim;
  const Index nv = mesh.vertex_count();
  require(boundary_values.size() == nv,
          "harmonic_extension: data vector has wrong size");

  // interface vertices: first and last layer of every collar band
  std::vector<bool> on_interface(static_cast<std::size_t>(nv), false);
  for (const auto& band : mesh.collars) {
    require(!band.layer_verts.empty(), "harmonic_extension: empty collar band");
    for (Index v : band.layer_verts.front())
      on_interface[static_cast<std::size_t>(v)] = true;
    for (Index v : band.layer_verts.back())
      on_interface[static_cast<std::size_t>(v)] = true;
  }
  std::vector<bool> on_outer(static_cast<std::size_t>(nv), false);
  if (outer == OuterBC::dirichlet_zero) {
    require(!mesh.boundary_facets.empty(),
            "harmonic_extension: no boundary for the outer condition");
    for (const auto& f : mesh.boundary_facets)
      for (int i = 0; i < n; ++i)
        if (f[static_cast<std::size_t>(i)] >= 0)
          on_outer[static_cast<std::size_t>(f[static_cast<std::size_t>(i)])] =
              true;
  }

  // exterior cells and their vertices
  std::vector<bool> in_ext(static_cast<std::size_t>(nv), false);
  std::vector<Index> ext_cells;
  for (Index c = 0; c < mesh.cell_count(); ++c)
    if (!region_is_collar(mesh.region[static_cast<std::size_t>(c)])) {
      ext_cells.push_back(c);
      for (int i = 0; i < n + 1; ++i)
        in_ext[static_cast<std::size_t>(
            mesh.cells[static_cast<std::size_t>(c)][static_cast<std::size_t>(
                i)])] = true;
    }
  require(!ext_cells.empty(), "harmonic_extension: empty exterior");

  // components of the exterior, and whether each carries any constraint
  UnionFind uf(nv);
  for (Index c : ext_cells) {
    const auto& cell = mesh.cells[static_cast<std::size_t>(c)];
    for (int i = 1; i < n + 1; ++i)
      uf.unite(cell[0], cell[static_cast<std::size_t>(i)]);
  }
  std::vector<bool> root_has_data(static_cast<std::size_t>(nv), false);
  for (Index v = 0; v < nv; ++v)
    if (in_ext[static_cast<std::size_t>(v)] &&
        (on_interface[static_cast<std::size_t>(v)] ||
         on_outer[static_cast<std::size_t>(v)]))
      root_has_data[static_cast<std::size_t>(uf.find(v))] = true;

  ExtensionReport rep;
  rep.values = Eigen::VectorXd::Zero(nv);
  std::vector<Index> roots;
  for (Index v = 0; v < nv; ++v)
    if (in_ext[static_cast<std::size_t>(v)] && uf.find(v) == v)
      roots.push_back(v);
  rep.exterior_components = static_cast<int>(roots.size());
  for (Index r : roots)
    if (!root_has_data[static_cast<std::size_t>(r)]) ++rep.components_without_data;

  // unknowns: exterior vertices in a constrained component, minus the
  // constrained vertices themselves
  std::vector<Index> dof_of(static_cast<std::size_t>(nv), -1);
  std::vector<Index> vert_of;
  for (Index v = 0; v < nv; ++v) {
    if (!in_ext[static_cast<std::size_t>(v)]) continue;
    if (!root_has_data[static_cast<std::size_t>(uf.find(v))]) continue;
    if (on_interface[static_cast<std::size_t>(v)] ||
        on_outer[static_cast<std::size_t>(v)])
      continue;
    dof_of[static_cast<std::size_t>(v)] = static_cast<Index>(vert_of.size());
    vert_of.push_back(v);
  }

  // fixed values on the constrained vertices
  Eigen::VectorXd fixed = Eigen::VectorXd::Zero(nv);
  for (Index v = 0; v < nv; ++v)
    if (on_interface[static_cast<std::size_t>(v)] &&
        !on_outer[static_cast<std::size_t>(v)])
      fixed[v] = boundary_values[v];

  const Index nd = static_cast<Index>(vert_of.size());
  std::vector<Eigen::Triplet<double>> tk;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nd);
  Eigen::Matrix4d Kloc;
  double length2[6];
  for (Index c : ext_cells) {
    const auto& cell = mesh.cells[static_cast<std::size_t>(c)];
    int ne = 0;
    for (int i = 0; i < n + 1; ++i)
      for (int j = i + 1; j < n + 1; ++j) {
        double l = metric.length_of(cell[static_cast<std::size_t>(i)],
                                    cell[static_cast<std::size_t>(j)]);
        length2[ne++] = l * l;
      }
    double vol = std::sqrt(metric.cell_vol2[static_cast<std::size_t>(c)]);
    detail::local_operators(n, length2, vol, Kloc);
    for (int i = 0; i < n + 1; ++i) {
      Index vi = cell[static_cast<std::size_t>(i)];
      Index di = dof_of[static_cast<std::size_t>(vi)];
      if (di < 0) continue;
      for (int j = 0; j < n + 1; ++j) {
        Index vj = cell[static_cast<std::size_t>(j)];
        Index dj = dof_of[static_cast<std::size_t>(vj)];
        if (dj >= 0)
          tk.emplace_back(di, dj, Kloc(i, j));
        else
          rhs[di] -= Kloc(i, j) * fixed[vj];
      }
    }
  }

  if (nd > 0) {
    Eigen::SparseMatrix<double> K(nd, nd);
    K.setFromTriplets(tk.begin(), tk.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(K);
    require(solver.info() == Eigen::Success,
            "harmonic_extension: factorization failed");
    Eigen::VectorXd u = solver.solve(rhs);
    require(solver.info() == Eigen::Success,
            "harmonic_extension: solve failed");
    for (Index d = 0; d < nd; ++d)
      rep.values[vert_of[static_cast<std::size_t>(d)]] = u[d];
  }
  for (Index v = 0; v < nv; ++v)
    if (in_ext[static_cast<std::size_t>(v)] &&
        (on_interface[static_cast<std::size_t>(v)] ||
         on_outer[static_cast<std::size_t>(v)]))
      rep.values[v] = fixed[v];

  // H1 energy of the extension over the exterior, under the given metric
  const double mass_off = 1.0 / ((n + 1.0) * (n + 2.0));
  double energy = 0.0;
  for (Index c : ext_cells) {
    const auto& cell = mesh.cells[static_cast<std::size_t>(c)];
    int ne = 0;
    for (int i = 0; i < n + 1; ++i)
      for (int j = i + 1; j < n + 1; ++j) {
        double l = metric.length_of(cell[static_cast<std::size_t>(i)],
                                    cell[static_cast<std::size_t>(j)]);
        length2[ne++] = l * l;
      }
    double vol = std::sqrt(metric.cell_vol2[static_cast<std::size_t>(c)]);
    detail::local_operators(n, length2, vol, Kloc);
    for (int i = 0; i < n + 1; ++i)
      for (int j = 0; j < n + 1; ++j) {
        double ui = rep.values[cell[static_cast<std::size_t>(i)]];
        double uj = rep.values[cell[static_cast<std::size_t>(j)]];
        energy += ui * uj *
                  (Kloc(i, j) + vol * mass_off * (i == j ? 2.0 : 1.0));
      }
  }
  rep.h1_energy = energy;
  return rep;
}

/// One candidate low mode of the collar union: profile cos(k pi (x+1)/2) on
/// its owning collar with limit eigenvalue mu = k^2 pi^2 / (4 Gamma^2).
struct UpperBoundEntry {
  int k = 0;
  int collar = 0;
  double mu = 0.0;
  double bound = 0.0;
};

struct UpperBoundReport {
  std::vector<UpperBoundEntry> entries;  ///< sorted by mu, size l+1
};

/// The interpolated collar profile cos(k pi (x+1)/2) on collar `c`, zero on
/// every other vertex.
inline Eigen::VectorXd collar_mode_field(const SimplicialMesh& mesh, int c,
                                         int k) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.vertex_count());
  for (Index v = 0; v < mesh.vertex_count(); ++v)
    if (mesh.collar_id[static_cast<std::size_t>(v)] == c)
      f[v] = std::cos(k * M_PI *
                      (mesh.collar_x[static_cast<std::size_t>(v)] + 1.0) / 2.0);
  return f;
}

/// Upper bound on the first l+1 eigenvalues from the span of glued test
/// functions: the k-th candidate is the collar profile on its owning collar,
/// extended harmonically into the exterior (zero data on the interfaces of
/// the other collars).  The bound for mode k is the largest eigenvalue of
/// the (k+1)x(k+1) leading block of the span's stiffness/mass Gram pair; by
/// min-max it dominates the k-th discrete eigenvalue.
inline UpperBoundReport upper_bound_check(const SimplicialMesh& mesh,
                                          const EdgeLengthMetric& metric_eps,
                                          int l,
                                          OuterBC outer = OuterBC::none) {
  require(l >= 0, "upper_bound_check: l must be >= 0");
  require(!mesh.collars.empty(), "upper_bound_check: mesh has no collar");

  // candidate modes over all collars, sorted by their limit eigenvalue
  std::vector<UpperBoundEntry> cand;
  for (int c = 0; c < static_cast<int>(mesh.collars.size()); ++c) {
    double gamma = mesh.collars[static_cast<std::size_t>(c)].spec.gamma;
    for (int k = 0; k <= l; ++k) {
      UpperBoundEntry e;
      e.k = k;
      e.collar = c;
      e.mu = k * k * M_PI * M_PI / (4.0 * gamma * gamma);
      cand.push_back(e);
    }
  }
  std::stable_sort(cand.begin(), cand.end(),
                   [](const UpperBoundEntry& a, const UpperBoundEntry& b) {
                     if (a.mu != b.mu) return a.mu < b.mu;
                     if (a.collar != b.collar) return a.collar < b.collar;
                     return a.k < b.k;
                   });
  cand.resize(static_cast<std::size_t>(l + 1));

  BoundaryCondition bc = mesh.boundary_facets.empty()
                             ? BoundaryCondition::closed
                             : (outer == OuterBC::dirichlet_zero
                                    ? BoundaryCondition::dirichlet
                                    : BoundaryCondition::neumann);
  OperatorPair ops = assemble(mesh, metric_eps, bc, MassKind::consistent);

  // glued test functions psi_k
  std::vector<Eigen::VectorXd> psi;
  for (const auto& e : cand) {
    Eigen::VectorXd f = collar_mode_field(mesh, e.collar, e.k);
    ExtensionReport ext = harmonic_extension(mesh, metric_eps, f, outer);
    for (Index v = 0; v < mesh.vertex_count(); ++v)
      if (mesh.collar_id[static_cast<std::size_t>(v)] < 0)
        f[v] = ext.values[v];
    psi.push_back(ops.restrict_to_dofs(f));
  }

  const int m = static_cast<int>(psi.size());
  Eigen::MatrixXd A(m, m), B(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      A(i, j) = psi[static_cast<std::size_t>(i)].dot(
          ops.stiffness * psi[static_cast<std::size_t>(j)]);
      B(i, j) = psi[static_cast<std::size_t>(i)].dot(
          ops.mass * psi[static_cast<std::size_t>(j)]);
    }
  A = 0.5 * (A + A.transpose());
  B = 0.5 * (B + B.transpose());

  UpperBoundReport rep;
  for (int k = 0; k < m; ++k) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
        A.topLeftCorner(k + 1, k + 1), B.topLeftCorner(k + 1, k + 1));
    require(es.info() == Eigen::Success,
            "upper_bound_check: span eigenproblem failed");
    UpperBoundEntry e = cand[static_cast<std::size_t>(k)];
    e.bound = es.eigenvalues()[k];
    rep.entries.push_back(e);
  }
  return rep;
}

}  // namespace nodalforge
