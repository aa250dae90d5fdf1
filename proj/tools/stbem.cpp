// Copyright 2026 The stbem Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// stbem command-line driver: mesh | assemble | solve | study | plan | evaluate.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stbem/assembly.hpp"
#include "stbem/distribution.hpp"
#include "stbem/geometry.hpp"
#include "stbem/io.hpp"
#include "stbem/postprocess.hpp"
#include "stbem/solver.hpp"

namespace {

using namespace stbem;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNotConverged = 3;

struct RunConfig {
  std::string config_file;
  int level = 3;
  std::string levels = "2:6";
  double alpha = 10.0;
  double final_time = 1.0;
  int order = kDefaultOrder;
  double tol = 1e-8;
  int max_iter = 500;
  Index processes = 1;
  std::string transport = "threads";
  bool no_timings = false;
  std::string out;
  bool precond = false;
  std::string mass = "lumped";
  bool precond_only = false;
  bool unprecond_only = false;
  bool reports = false;
  bool csv = false;
  std::string op = "V";
  std::string format = "hex";
  std::vector<std::string> points;

  ProblemConfig problem() const {
    ProblemConfig c;
    c.alpha = alpha;
    c.final_time = final_time;
    c.level = level;
    c.validate();
    return c;
  }

  SolveOptions solve_options() const {
    SolveOptions s;
    s.gmres.rel_tol = tol;
    s.gmres.max_iter = max_iter;
    s.gmres.validate();
    if (processes < 1) throw ValidationError("--processes must be >= 1");
    s.workers = processes;
    s.transport = parse_transport(transport);
    return s;
  }

  StudyOptions study_options() const {
    StudyOptions o;
    o.alpha = alpha;
    o.final_time = final_time;
    o.order = order;
    o.solve = solve_options();
    if (order < 1) throw ValidationError("--order must be >= 1");
    return o;
  }

  MassMode mass_mode() const {
    if (mass == "lumped") return MassMode::lumped;
    if (mass == "exact") return MassMode::exact;
    throw ValidationError("--mass must be lumped or exact");
  }
};

// "2:6", "2,4,5" or "3".
std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> levels;
  try {
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
      const int lo = std::stoi(text.substr(0, colon));
      const int hi = std::stoi(text.substr(colon + 1));
      if (hi < lo) throw ValidationError("empty level range " + text);
      for (int l = lo; l <= hi; ++l) levels.push_back(l);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) levels.push_back(std::stoi(item));
    }
  } catch (const std::logic_error&) {
    throw ValidationError("cannot parse levels '" + text + "'");
  }
  if (levels.empty()) throw ValidationError("no levels given");
  for (int l : levels)
    if (l < 1) throw ValidationError("refinement level must be >= 1");
  return levels;
}

SpaceTimePoint parse_point(const std::string& text) {
  std::stringstream ss(text);
  double v[3];
  char sep = 0;
  if (!(ss >> v[0] >> sep) || sep != ',' || !(ss >> v[1] >> sep) || sep != ',' || !(ss >> v[2]))
    throw ValidationError("point must be x,y,t: '" + text + "'");
  return {Vec2(v[0], v[1]), v[2]};
}

// Writes to --out if given, stdout otherwise.
class Output {
 public:
  Output(const std::string& path, bool binary) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, binary ? std::ios::binary : std::ios::out);
    if (!*file_) throw Error("cannot open " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

// key=value lines become --key=value arguments appended after the
// subcommand unless the same flag was given explicitly.
std::vector<std::string> inject_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string value = trim(line.substr(eq + 1));
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (!given) args.push_back(flag + "=" + value);
  }
  return args;
}

void add_common(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--config", rc.config_file, "key=value file; command-line flags win");
  cmd->add_option("--alpha", rc.alpha, "heat capacity coefficient")->capture_default_str();
  cmd->add_option("--T", rc.final_time, "final time")->capture_default_str();
  cmd->add_option("--order", rc.order, "Gauss order for regular panels")->capture_default_str();
  cmd->add_option("--out", rc.out, "output file (default stdout)");
}

void add_solver(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--tol", rc.tol, "relative GMRES tolerance")->capture_default_str();
  cmd->add_option("--max-iter", rc.max_iter, "GMRES iteration cap")->capture_default_str();
  cmd->add_option("--processes", rc.processes, "workers P")->capture_default_str();
  cmd->add_option("--transport", rc.transport, "threads or processes")->capture_default_str();
  cmd->add_option("--mass", rc.mass, "lumped or exact dual mass inverse")->capture_default_str();
  cmd->add_flag("--no-timings", rc.no_timings, "write 0 in timing columns");
}

int run_mesh(const RunConfig& rc) {
  const UniformMeshes meshes = build_uniform_meshes(rc.problem());
  Output out(rc.out, false);
  write_mesh(out.stream(), meshes.space_time, meshes.domain);
  return kExitOk;
}

int run_assemble(const RunConfig& rc) {
  const ProblemConfig config = rc.problem();
  if (rc.order < 1) throw ValidationError("--order must be >= 1");
  if (rc.processes < 1) throw ValidationError("--processes must be >= 1");
  DumpFormat format;
  if (rc.format == "hex")
    format = DumpFormat::hexfloat;
  else if (rc.format == "binary")
    format = DumpFormat::binary;
  else
    throw ValidationError("--format must be hex or binary");
  const UniformMeshes meshes = build_uniform_meshes(config);
  const SpaceTimeMesh& mesh = meshes.space_time;
  Output out(rc.out, format == DumpFormat::binary);
  if (rc.op == "M0") {
    write_matrix_dump(out.stream(), assemble_M0(mesh, meshes.domain, config.alpha, rc.order), format);
    return kExitOk;
  }
  BlockMatrix a;
  if (rc.op == "V") {
    a = assemble_V(mesh, config.alpha, rc.order);
  } else if (rc.op == "K") {
    a = assemble_K(mesh, config.alpha, rc.order);
  } else if (rc.op == "D") {
    a = assemble_D(mesh, build_dual_mesh(mesh.boundary), config.alpha, rc.order);
  } else if (rc.op == "M") {
    a = assemble_M_primal(mesh);
  } else if (rc.op == "Md") {
    a = assemble_M_dual(mesh, build_dual_mesh(mesh.boundary));
  } else {
    throw ValidationError("--operator must be one of V, K, D, M, Md, M0");
  }
  write_matrix_dump(out.stream(), a.with_slices(rc.processes), format);
  return kExitOk;
}

int run_solve(const RunConfig& rc) {
  const ProblemConfig config = rc.problem();
  StudyOptions options = rc.study_options();
  const MassMode mass = rc.mass_mode();
  const AssembledProblem problem = assemble_problem(config, rc.order, rc.precond);
  const SolveOutcome outcome = solve_analytic(problem, rc.precond, options, mass);
  Output out(rc.out, false);
  out.stream() << csv_header() << '\n' << csv_row(outcome.report, !rc.no_timings) << '\n';
  return outcome.report.converged ? kExitOk : kExitNotConverged;
}

int run_study(const RunConfig& rc) {
  if (rc.precond_only && rc.unprecond_only)
    throw ValidationError("--precond-only and --unprecond-only are exclusive");
  StudyOptions options = rc.study_options();
  options.levels = parse_levels(rc.levels);
  options.preconditioned = !rc.unprecond_only;
  options.unpreconditioned = !rc.precond_only;
  ProblemConfig probe = rc.problem();
  probe.level = options.levels.front();
  probe.validate();
  const std::vector<SolveReport> rows = study(options);
  Output out(rc.out, false);
  if (rc.reports) {
    out.stream() << csv_header() << '\n';
    for (const auto& r : rows) out.stream() << csv_row(r, !rc.no_timings) << '\n';
  } else {
    out.stream() << study_table(rows);
  }
  const bool all = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.converged; });
  return all ? kExitOk : kExitNotConverged;
}

int run_plan(const RunConfig& rc) {
  if (rc.processes < 1) throw ValidationError("--processes must be >= 1");
  const DistributionPlan plan = build_plan(rc.processes);
  const BalanceReport report = plan_metrics(plan);
  Output out(rc.out, false);
  if (rc.csv) {
    write_plan_csv(out.stream(), report);
    return kExitOk;
  }
  std::ostream& os = out.stream();
  os << "P=" << plan.workers << " blocks=" << report.total_blocks()
     << " slice_bound=" << slice_bound(plan.workers) << '\n';
  for (Index w = 0; w < plan.workers; ++w) {
    os << "worker " << w << ":";
    for (const auto& [i, j] : plan.blocks_of(w)) os << " (" << i << ',' << j << ')';
    os << '\n';
  }
  return kExitOk;
}

int run_evaluate(const RunConfig& rc) {
  const ProblemConfig config = rc.problem();
  StudyOptions options = rc.study_options();
  std::vector<SpaceTimePoint> points;
  for (const auto& p : rc.points) points.push_back(parse_point(p));
  if (points.empty()) points.push_back(options.probe);
  const AssembledProblem problem = assemble_problem(config, rc.order, rc.precond);
  const SolveOutcome outcome = solve_analytic(problem, rc.precond, options, rc.mass_mode());
  const auto uh = evaluate_interior(problem.meshes.space_time, problem.meshes.domain, config.alpha,
                                    outcome.w, problem.g, problem.u0, points, rc.order);
  const AnalyticSolution exact{config.alpha};
  Output out(rc.out, false);
  std::ostream& os = out.stream();
  os << "x,y,t,u_h,u,abs_err\n" << std::scientific << std::setprecision(10);
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double u = exact.u(points[k].x, points[k].t);
    os << points[k].x.x() << ',' << points[k].x.y() << ',' << points[k].t << ',' << uh[k] << ','
       << u << ',' << std::abs(uh[k] - u) << '\n';
  }
  return outcome.report.converged ? kExitOk : kExitNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time boundary element solver for the 2D heat equation", "stbem"};
  app.failure_message(CLI::FailureMessage::help);
  app.require_subcommand(1);
  RunConfig rc;

  auto* mesh = app.add_subcommand("mesh", "export level-L meshes");
  mesh->add_option("--level", rc.level, "refinement level L")->capture_default_str();
  add_common(mesh, rc);

  auto* assemble = app.add_subcommand("assemble", "assemble one operator and dump it");
  assemble->add_option("--level", rc.level, "refinement level L")->capture_default_str();
  assemble->add_option("--operator", rc.op, "V, K, D, M, Md or M0")->capture_default_str();
  assemble->add_option("--format", rc.format, "hex or binary")->capture_default_str();
  assemble->add_option("--processes", rc.processes, "number of block slices")->capture_default_str();
  add_common(assemble, rc);

  auto* solve = app.add_subcommand("solve", "solve the analytic test problem at one level");
  solve->add_option("--level", rc.level, "refinement level L")->capture_default_str();
  solve->add_flag("--precond", rc.precond, "opposite-order preconditioning");
  add_common(solve, rc);
  add_solver(solve, rc);

  auto* study_cmd = app.add_subcommand("study", "iteration and error table over levels");
  study_cmd->add_option("--levels", rc.levels, "a:b range or comma list")->capture_default_str();
  study_cmd->add_flag("--precond-only", rc.precond_only, "skip unpreconditioned solves");
  study_cmd->add_flag("--unprecond-only", rc.unprecond_only, "skip preconditioned solves");
  study_cmd->add_flag("--reports", rc.reports, "print one SolveReport row per solve");
  add_common(study_cmd, rc);
  add_solver(study_cmd, rc);

  auto* plan = app.add_subcommand("plan", "block distribution for P workers");
  plan->add_option("--processes", rc.processes, "workers P")->capture_default_str();
  plan->add_flag("--csv", rc.csv, "worker,blocks,distinct_slices,comm_estimate");
  plan->add_option("--config", rc.config_file, "key=value file; command-line flags win");
  plan->add_option("--out", rc.out, "output file (default stdout)");

  auto* evaluate = app.add_subcommand("evaluate", "solve, then evaluate u_h at interior points");
  evaluate->add_option("--level", rc.level, "refinement level L")->capture_default_str();
  evaluate->add_flag("--precond", rc.precond, "opposite-order preconditioning");
  evaluate->add_option("--point", rc.points, "x,y,t (repeatable)");
  add_common(evaluate, rc);
  add_solver(evaluate, rc);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = inject_config(std::move(args));
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (*mesh) return run_mesh(rc);
    if (*assemble) return run_assemble(rc);
    if (*solve) return run_solve(rc);
    if (*study_cmd) return run_study(rc);
    if (*plan) return run_plan(rc);
    if (*evaluate) return run_evaluate(rc);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
