// nodal-forge: run collar-degeneration scenarios and analytic cross-checks.
//
//   nodal-forge run <scenario-name|config.toml> [--eps ...] [--refine N]
//                   [--seed S] [--out DIR] [--emit-mesh] [--emit-nodal]
//   nodal-forge oracle <test-name|all|list>
//
// `run` executes one scenario sweep and writes <out>/<name>.json and
// <out>/<name>.csv; the exit code is 0 iff every verdict passed.  `oracle`
// runs standalone dense/analytic cross-checks of the numerical core.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "nodalforge/config.hpp"
#include "nodalforge/io.hpp"
#include "nodalforge/lab.hpp"

using namespace nodalforge;

namespace {

std::string eps_tag(double eps) {
  std::ostringstream os;
  os << eps;
  std::string s = os.str();
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

int cmd_run(const std::string& target, std::vector<double> eps_override,
            int refine_override, long long seed_override,
            const std::string& out_dir, bool emit_mesh, bool emit_nodal) {
  Scenario sc;
  if (target.size() > 5 && target.substr(target.size() - 5) == ".toml")
    sc = load_scenario_config(target);
  else
    sc = make_scenario(target);
  if (!eps_override.empty()) sc.eps_list = eps_override;
  if (refine_override > 0) sc.refinement = refine_override;
  if (seed_override >= 0) sc.seed = static_cast<std::uint64_t>(seed_override);
  validate_scenario(sc);

  std::filesystem::create_directories(out_dir);
  const std::string base = out_dir + "/" + to_string(sc.name);

  EmitHooks hooks;
  if (emit_mesh)
    hooks.mesh = [&](const SimplicialMesh& mesh) {
      write_json_file(base + "_mesh.json", mesh_json(mesh));
    };
  if (emit_nodal)
    hooks.nodal = [&](int k, double eps, const NodalComplex& nc) {
      write_json_file(base + "_nodal_k" + std::to_string(k) + "_eps" +
                          eps_tag(eps) + ".json",
                      nodal_complex_json(nc));
    };

  std::cout << "running " << to_string(sc.name) << " (refinement "
            << sc.refinement << ", seed " << sc.seed << ")\n";
  ScenarioReport rep = run_scenario(sc, hooks);

  std::cout << "mesh " << rep.mesh_name << ": " << rep.mesh.summary() << "\n";
  for (const auto& r : rep.records) {
    std::printf(
        "  k=%d eps=%-5g lambda=%-10.6g mu=%-10.6g rel_err=%-9.3g domains=%d\n",
        r.k, r.eps, r.lambda, r.mu, r.rel_error, r.domain_count);
  }
  for (const auto& f : rep.fits) {
    std::printf("  mode %d: slope %.3f over %d pre-floor points%s\n", f.k,
                f.slope, f.prefloor_points,
                f.floor_dominated ? " (floor-dominated)" : "");
  }
  for (const auto& v : rep.verdicts) {
    std::printf("[%s] %s%s%s\n", v.pass ? "PASS" : "FAIL", v.name.c_str(),
                v.detail.empty() ? "" : " - ", v.detail.c_str());
  }
  for (const auto& n : rep.notes) std::cout << "note: " << n << "\n";

  write_json_file(base + ".json", report_json(rep));
  write_text_file(base + ".csv", report_csv(rep));
  std::cout << "wrote " << base << ".json and " << base << ".csv in "
            << rep.total_sec << " s\n";
  return rep.pass() ? 0 : 1;
}

// --- analytic cross-checks --------------------------------------------------

bool oracle_line(const std::string& name, bool pass, const std::string& what) {
  std::printf("[%s] %s - %s\n", pass ? "PASS" : "FAIL", name.c_str(),
              what.c_str());
  return pass;
}

/// P1 operators of a Neumann 1-D chain: the only closed-form pencil in the
/// suite, solved here directly against its exact eigenvalues.
bool oracle_chain() {
  const int ne = 64;
  const double h = 1.0 / ne;
  const int n = ne + 1;
  OperatorPair ops;
  ops.bc = BoundaryCondition::neumann;
  std::vector<Eigen::Triplet<double>> tk, tm;
  for (int e = 0; e < ne; ++e) {
    int a = e, b = e + 1;
    tk.emplace_back(a, a, 1 / h);
    tk.emplace_back(b, b, 1 / h);
    tk.emplace_back(a, b, -1 / h);
    tk.emplace_back(b, a, -1 / h);
    tm.emplace_back(a, a, h / 3);
    tm.emplace_back(b, b, h / 3);
    tm.emplace_back(a, b, h / 6);
    tm.emplace_back(b, a, h / 6);
  }
  ops.stiffness.resize(n, n);
  ops.mass.resize(n, n);
  ops.stiffness.setFromTriplets(tk.begin(), tk.end());
  ops.mass.setFromTriplets(tm.begin(), tm.end());
  ops.lumped = Eigen::VectorXd::Constant(n, h);
  ops.lumped[0] = ops.lumped[n - 1] = h / 2;
  ops.vertex_of_dof.resize(n);
  ops.dof_of_vertex.resize(n);
  for (int i = 0; i < n; ++i) ops.vertex_of_dof[i] = ops.dof_of_vertex[i] = i;

  EigenResult dense = dense_solve(ops, 6);
  double worst = 0;
  for (int k = 1; k < 6; ++k) {
    double c = std::cos(k * M_PI / ne);
    double exact = (6.0 / (h * h)) * (1 - c) / (2 + c);
    worst = std::max(worst, std::fabs(dense.values[k] - exact) / exact);
  }
  EigenResult it = solve_lowest(ops, 6, 1e-10);
  double agree = 0;
  for (int k = 0; k < 6; ++k)
    agree = std::max(agree,
                     std::fabs(it.values[k] - dense.values[k]) /
                         std::max(1.0, dense.values[k]));
  std::ostringstream os;
  os << "closed-form max rel err " << worst << ", dense vs iterative " << agree;
  return oracle_line("chain", worst < 1e-10 && agree < 1e-8, os.str());
}

bool oracle_sphere() {
  std::ostringstream os;
  os << "unit-sphere triplet errors:";
  std::vector<double> errs;
  for (int ref = 1; ref <= 3; ++ref) {
    SimplicialMesh mesh = build_sphere_mesh(2, ref);
    OperatorPair ops = assemble(mesh, reference_metric(mesh));
    EigenResult res = solve_lowest(ops, 4, 1e-9);
    double mean = (res.values[1] + res.values[2] + res.values[3]) / 3.0;
    errs.push_back(std::fabs(mean - 2.0) / 2.0);
    os << ' ' << errs.back();
  }
  double order = std::log(errs[0] / errs[2]) / (2.0 * std::log(2.0));
  os << ", order " << order;
  bool ok = errs[2] < errs[1] && errs[1] < errs[0] && order >= 1.8;
  return oracle_line("sphere", ok, os.str());
}

bool oracle_flat() {
  SimplicialMesh mesh = build_torus_mesh(2, 16);
  OperatorPair ops = assemble(mesh, reference_metric(mesh));
  EigenResult res = solve_lowest(ops, 3, 1e-9);
  double exact = 4 * M_PI * M_PI;
  double err = std::fabs(res.values[1] - exact) / exact;
  double h2 = 1.0 / 256.0;
  std::ostringstream os;
  os << "flat-torus lambda_1 rel err " << err << " (h^2 = " << h2 << ")";
  return oracle_line("flat", err <= 4 * h2, os.str());
}

bool oracle_simplex() {
  double area = std::sqrt(cayley_menger_area2(1, 1, 1));
  double vol = std::sqrt(cayley_menger_volume2({1, 1, 1, 1, 1, 1}));
  double ea = std::fabs(area - std::sqrt(3.0) / 4.0);
  double ev = std::fabs(vol - 1.0 / (6.0 * std::sqrt(2.0)));
  std::ostringstream os;
  os << "unit triangle " << area << " (err " << ea << "), unit tet " << vol
     << " (err " << ev << ")";
  return oracle_line("simplex", ea < 1e-15 && ev < 1e-15, os.str());
}

bool oracle_iterative() {
  SimplicialMesh mesh = build_sphere_mesh(2, 2);
  OperatorPair ops = assemble(mesh, reference_metric(mesh));
  EigenResult dense = dense_solve(ops, 5);
  EigenResult it = solve_lowest(ops, 5, 1e-10);
  double worst = 0;
  for (int k = 0; k < 5; ++k)
    worst = std::max(worst, std::fabs(it.values[k] - dense.values[k]) /
                                std::max(1.0, dense.values[k]));
  std::ostringstream os;
  os << "dense vs iterative on " << mesh.vertex_count()
     << " vertices: max rel diff " << worst;
  return oracle_line("iterative", worst < 1e-8, os.str());
}

int cmd_oracle(const std::string& name) {
  struct Entry {
    const char* name;
    bool (*fn)();
  };
  const Entry entries[] = {{"chain", oracle_chain},
                           {"iterative", oracle_iterative},
                           {"sphere", oracle_sphere},
                           {"flat", oracle_flat},
                           {"simplex", oracle_simplex}};
  if (name == "list") {
    for (const auto& e : entries) std::cout << e.name << "\n";
    return 0;
  }
  bool all_pass = true, found = false;
  for (const auto& e : entries) {
    if (name == "all" || name == e.name) {
      found = true;
      all_pass = e.fn() && all_pass;
    }
  }
  if (!found) {
    std::cerr << "unknown oracle '" << name << "' (try: list)\n";
    return 2;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"collar-degeneration spectral laboratory"};
  app.require_subcommand(1);

  std::string run_target, out_dir = "reports";
  std::vector<double> eps_override;
  int refine_override = 0;
  long long seed_override = -1;
  bool emit_mesh = false, emit_nodal = false;
  auto* run = app.add_subcommand("run", "run one scenario sweep");
  run->add_option("target", run_target,
                  "built-in scenario name or a .toml config file")
      ->required();
  run->add_option("--eps", eps_override,
                  "override the eps sweep (strictly decreasing)");
  run->add_option("--refine", refine_override, "override the refinement");
  run->add_option("--seed", seed_override, "override the solver seed");
  run->add_option("--out", out_dir, "output directory (default: reports)");
  run->add_flag("--emit-mesh", emit_mesh, "export the mesh as JSON");
  run->add_flag("--emit-nodal", emit_nodal,
                "export each extracted nodal complex as JSON");

  std::string oracle_name;
  auto* oracle = app.add_subcommand(
      "oracle", "run dense/analytic cross-checks of the numerical core");
  oracle->add_option("name", oracle_name, "check name, 'all', or 'list'")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(run_target, eps_override, refine_override, seed_override,
                     out_dir, emit_mesh, emit_nodal);
    return cmd_oracle(oracle_name);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
