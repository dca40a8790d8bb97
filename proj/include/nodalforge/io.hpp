#pragma once
// Report emission: JSON serialization of scenario reports, meshes, and
// extracted nodal complexes, plus the flat CSV used for plotting.

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lab.hpp"
#include "mesh.hpp"
#include "nodal.hpp"

namespace nodalforge {

using Json = nlohmann::ordered_json;

namespace detail {

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace detail

// === scenario / report ======================================================

inline Json scenario_json(const Scenario& sc) {
  Json j;
  j["name"] = to_string(sc.name);
  j["n"] = sc.n;
  j["l"] = sc.l;
  Json collars = Json::array();
  for (const auto& c : sc.collars) {
    Json jc;
    jc["sigma"] = sigma_model_name(c.sigma);
    jc["r"] = c.r;
    jc["gamma"] = c.gamma;
    jc["layers"] = c.layers;
    jc["modes"] = c.modes;
    collars.push_back(jc);
  }
  j["collars"] = collars;
  j["eps_list"] = sc.eps_list;
  j["delta"] = sc.delta;
  j["smooth_order"] = sc.smooth_order;
  j["refinement"] = sc.refinement;
  j["seed"] = sc.seed;
  j["tolerances"] = {{"eig_tol", sc.tol.eig_tol},
                     {"profile_tol", sc.tol.profile_tol},
                     {"position_tol", sc.tol.position_tol},
                     {"gap_min", sc.tol.gap_min}};
  j["run_morse"] = sc.run_morse;
  j["betti_reference"] = sc.betti_reference;
  return j;
}

inline Json audit_json(const AuditReport& a) {
  return Json{{"pass", a.pass},
              {"vertices", a.vertices},
              {"edges", a.edges},
              {"triangles", a.triangles},
              {"cells", a.cells},
              {"boundary_facets", a.boundary_facet_count},
              {"euler_char", a.euler},
              {"min_quality", a.min_quality},
              {"errors", a.errors}};
}

inline Json census_json(const CensusVerdict& c) {
  return Json{{"pass", c.pass},
              {"count_ok", c.count_ok},
              {"euler_ok", c.euler_ok},
              {"positions_ok", c.positions_ok},
              {"interior_ok", c.interior_ok},
              {"found_count", c.found_count},
              {"extra_components", c.extra_components},
              {"matched_positions", c.matched_positions},
              {"detail", c.detail}};
}

inline Json record_json(const SweepRecord& r) {
  Json j;
  j["k"] = r.k;
  j["eps"] = r.eps;
  j["lambda"] = r.lambda;
  j["mu"] = r.mu;
  j["rel_error"] = r.rel_error;
  j["residual"] = r.residual;
  j["span_bound"] = r.span_bound;
  j["bound_ok"] = r.bound_ok;
  j["profile_beta"] = r.profile_beta;
  j["profile_rel"] = r.profile_rel;
  j["profile_ok"] = r.profile_ok;
  if (r.census_run) j["census"] = census_json(r.census);
  j["domain_count"] = r.domain_count;
  j["courant_bound"] = r.courant_bound;
  j["courant_ok"] = r.courant_ok;
  if (!r.morse_counts.empty())
    j["morse"] = {{"counts_by_index", r.morse_counts},
                  {"degenerate", r.morse_degenerate},
                  {"pass", r.morse_ok}};
  j["runtime_sec"] = r.runtime_sec;
  j["config_hash"] = detail::hex64(r.config_hash);
  j["seed"] = r.seed;
  return j;
}

inline Json report_json(const ScenarioReport& rep) {
  Json j;
  j["scenario"] = scenario_json(rep.scenario);
  j["config_hash"] = detail::hex64(rep.hash);
  j["mesh_name"] = rep.mesh_name;
  j["mesh_audit"] = audit_json(rep.mesh);
  Json runs = Json::array();
  for (const auto& run : rep.eps_runs) {
    runs.push_back(
        {{"eps", run.eps},
         {"values", run.values},
         {"skipped_near_kernel", run.skipped},
         {"iterations", run.iterations},
         {"converged", run.converged},
         {"gap_report", run.gap_report},
         {"guard",
          {{"pass", run.guard.pass},
           {"min_gap", run.guard.min_gap},
           {"retried", run.guard.retried},
           {"r_scale", run.guard.r_scale}}},
         {"solve_sec", run.solve_sec}});
  }
  j["eps_runs"] = runs;
  Json recs = Json::array();
  for (const auto& r : rep.records) recs.push_back(record_json(r));
  j["records"] = recs;
  Json fits = Json::array();
  for (const auto& f : rep.fits)
    fits.push_back({{"k", f.k},
                    {"slope", f.slope},
                    {"floor_eps", f.floor_eps},
                    {"prefloor_points", f.prefloor_points},
                    {"floor_dominated", f.floor_dominated}});
  j["fits"] = fits;
  Json verdicts = Json::array();
  for (const auto& v : rep.verdicts)
    verdicts.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
  j["verdicts"] = verdicts;
  j["notes"] = rep.notes;
  j["pass"] = rep.pass();
  j["total_sec"] = rep.total_sec;
  return j;
}

/// Flat per-record table: one row per (mode, eps) with the headline numbers
/// and verdict booleans.
inline std::string report_csv(const ScenarioReport& rep) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "k,eps,lambda,mu,rel_error,span_bound,profile_rel,domain_count,"
        "courant_bound,census_pass,courant_ok,profile_ok,bound_ok,"
        "guard_pass\n";
  for (const auto& r : rep.records) {
    bool guard = true;
    for (const auto& run : rep.eps_runs)
      if (run.eps == r.eps) guard = run.guard.pass;
    os << r.k << ',' << r.eps << ',' << r.lambda << ',' << r.mu << ','
       << r.rel_error << ',' << r.span_bound << ',' << r.profile_rel << ','
       << r.domain_count << ',' << r.courant_bound << ','
       << (r.census_run ? (r.census.pass ? 1 : 0) : 1) << ','
       << (r.courant_ok ? 1 : 0) << ',' << (r.profile_ok ? 1 : 0) << ','
       << (r.bound_ok ? 1 : 0) << ',' << (guard ? 1 : 0) << '\n';
  }
  return os.str();
}

// === geometry exports =======================================================

inline Json mesh_json(const SimplicialMesh& mesh) {
  Json j;
  j["name"] = mesh.name;
  j["dim"] = mesh.dim;
  Json verts = Json::array();
  for (Index v = 0; v < mesh.vertex_count(); ++v) {
    Json row = Json::array();
    for (int d = 0; d < mesh.coords.cols(); ++d) row.push_back(mesh.coords(v, d));
    verts.push_back(row);
  }
  j["vertices"] = verts;
  Json cells = Json::array();
  const int k = mesh.verts_per_cell();
  for (const auto& cell : mesh.cells) {
    Json row = Json::array();
    for (int i = 0; i < k; ++i) row.push_back(cell[static_cast<std::size_t>(i)]);
    cells.push_back(row);
  }
  j["cells"] = cells;
  j["region"] = mesh.region;
  j["collar_x"] = mesh.collar_x;
  j["collar_id"] = mesh.collar_id;
  Json bdry = Json::array();
  for (const auto& f : mesh.boundary_facets) {
    Json row = Json::array();
    for (int i = 0; i < k - 1; ++i) row.push_back(f[static_cast<std::size_t>(i)]);
    bdry.push_back(row);
  }
  j["boundary_facets"] = bdry;
  return j;
}

/// Polyline/polygon soup of an extracted zero set, with per-component
/// census data; loadable by any JSON-aware viewer.
inline Json nodal_complex_json(const NodalComplex& nc) {
  Json j;
  j["dim"] = nc.dim;
  Json pts = Json::array();
  for (std::size_t p = 0; p < nc.points.size(); ++p) {
    Json row;
    Json pos = Json::array();
    for (int d = 0; d < nc.positions.cols(); ++d)
      pos.push_back(nc.positions(static_cast<Index>(p), d));
    row["position"] = pos;
    row["collar_x"] = nc.points[p].collar_x;
    row["collar"] = nc.points[p].collar;
    row["on_boundary"] = nc.points[p].on_boundary;
    pts.push_back(row);
  }
  j["points"] = pts;
  Json pieces = Json::array();
  for (std::size_t i = 0; i < nc.pieces.size(); ++i) {
    pieces.push_back({{"cell", nc.pieces[i].cell},
                      {"points", nc.pieces[i].pts},
                      {"component", nc.component_of_piece[i]}});
  }
  j["pieces"] = pieces;
  Json comps = Json::array();
  for (const auto& c : nc.components) {
    comps.push_back({{"pieces", c.pieces},
                     {"euler_char", c.euler_char},
                     {"orientable", c.orientable},
                     {"area", c.area},
                     {"collar_mean", c.collar_mean},
                     {"collar_std", c.collar_std},
                     {"collar_frac", c.collar_frac},
                     {"collar", c.collar},
                     {"touches_boundary", c.touches_boundary}});
  }
  j["components"] = comps;
  return j;
}

// === file helpers ===========================================================

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open for writing: " + path);
  out << content;
  require(out.good(), "short write: " + path);
}

inline void write_json_file(const std::string& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace nodalforge
