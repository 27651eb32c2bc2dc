#include "phbvm/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "phbvm/casimir.hpp"
#include "phbvm/driver.hpp"

namespace phbvm {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunConfig {
  std::string problem = "lv2";
  std::string method = "phbvm";
  int k = 0;  // 0: derive from s (gauss) or complain
  int s = 0;
  std::vector<long> n_list;
  long h_per_period = 100;
  int periods = 1;
  double h = 0.0;  // step-debug only
  std::string solver = "blended";
  double tol = 1e-14;
  int max_iter = 100;
  std::string output;
  std::string format = "csv";
  std::string preset;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

constexpr long kPresetMaxN = 6400;
constexpr int kPresetMaxPeriods = 20;

int thread_budget() {
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  if (const char* env = std::getenv("PHBVM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) threads = static_cast<int>(v);
  }
  return threads;
}

SolverConfig solver_config(const RunConfig& rc) {
  SolverConfig cfg;
  cfg.solver = parse_solver(rc.solver);
  if (!(rc.tol > 0.0)) throw ConfigError("--tol must be positive");
  if (rc.max_iter < 1) throw ConfigError("--max-iter must be at least 1");
  cfg.tol = rc.tol;
  cfg.max_iter = rc.max_iter;
  return cfg;
}

MethodSpec method_spec(const RunConfig& rc, const PoissonSystem& sys) {
  MethodSpec spec;
  spec.method = parse_method(rc.method);
  if (rc.s < 1) throw ConfigError("--s is required and must be positive");
  spec.s = rc.s;
  if (spec.method == Method::gauss) {
    if (rc.k != 0 && rc.k != rc.s) throw ConfigError("gauss requires k == s");
    spec.k = rc.s;
  } else {
    if (rc.k == 0) throw ConfigError("--k is required for " + rc.method);
    spec.k = rc.k;
  }
  validate(spec, sys);
  return spec;
}

// Short file-name-safe tag: gauss3, phbvm6_3, ephbvm6_3.
std::string file_tag(const MethodSpec& spec) {
  if (spec.method == Method::gauss) return "gauss" + std::to_string(spec.s);
  return to_string(spec.method) + std::to_string(spec.k) + "_" + std::to_string(spec.s);
}

std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sci3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string rate_text(const std::optional<double>& r, bool first) {
  if (first) return "---";
  if (!r) return "**";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f", *r);
  return buf;
}

void write_atomically(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw fs::filesystem_error("cannot open for writing", tmp, std::error_code());
    out << content;
    out.flush();
    if (!out) throw fs::filesystem_error("write failed", tmp, std::error_code());
  }
  fs::rename(tmp, target);
}

std::string opt_cell(const std::optional<double>& v) { return v ? full(*v) : std::string(); }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string table_csv(const std::vector<ExperimentRecord>& rows) {
  std::ostringstream out;
  out << "n,e_y,rate_y,e_H,rate_H,e_C,rate_C,mean_iters,time_sec\n";
  for (const auto& r : rows) {
    out << r.n << ',' << full(r.e_y) << ',' << opt_cell(r.rate_y) << ',' << full(r.e_H) << ','
        << opt_cell(r.rate_H) << ',' << opt_cell(r.e_C) << ',' << opt_cell(r.rate_C) << ','
        << full(r.mean_iterations) << ',' << full(r.time_sec) << '\n';
  }
  return out.str();
}

std::string table_json(const std::string& problem, const MethodSpec& spec, int periods,
                       const std::vector<ExperimentRecord>& rows) {
  json doc;
  doc["problem"] = problem;
  doc["method"] = spec.label();
  doc["periods"] = periods;
  doc["records"] = json::array();
  for (const auto& r : rows) {
    doc["records"].push_back({{"n", r.n},
                              {"e_y", r.e_y},
                              {"rate_y", opt_json(r.rate_y)},
                              {"e_H", r.e_H},
                              {"rate_H", opt_json(r.rate_H)},
                              {"e_C", opt_json(r.e_C)},
                              {"rate_C", opt_json(r.rate_C)},
                              {"mean_iters", r.mean_iterations},
                              {"time_sec", r.time_sec}});
  }
  return doc.dump(2) + "\n";
}

void print_table(const MethodSpec& spec, const std::vector<ExperimentRecord>& rows) {
  std::cout << spec.label() << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const bool first = i == 0;
    std::cout << "  n=" << r.n << "  e_y=" << sci3(r.e_y) << " (" << rate_text(r.rate_y, first)
              << ")  e_H=" << sci3(r.e_H) << " (" << rate_text(r.rate_H, first) << ")";
    if (r.e_C) std::cout << "  e_C=" << sci3(*r.e_C) << " (" << rate_text(r.rate_C, first) << ")";
    char it[16];
    std::snprintf(it, sizeof it, "%.1f", r.mean_iterations);
    char tm[16];
    std::snprintf(tm, sizeof tm, "%.2f", r.time_sec);
    std::cout << "  it=" << it << "  time=" << tm << "s\n";
  }
}

std::string growth_csv(const GrowthSeries& g, double period, bool has_casimir) {
  std::ostringstream out;
  out << "period,t,e_y,e_H,e_C\n";
  for (std::size_t p = 0; p < g.e_y.size(); ++p) {
    out << (p + 1) << ',' << full(static_cast<double>(p + 1) * period) << ',' << full(g.e_y[p])
        << ',' << full(g.e_H[p]) << ',' << (has_casimir ? full(g.e_C[p]) : std::string())
        << '\n';
  }
  return out.str();
}

std::string growth_json(const std::string& problem, const GrowthSeries& g, double period,
                        long h_per_period, bool has_casimir) {
  json doc;
  doc["problem"] = problem;
  doc["method"] = g.spec.label();
  doc["steps_per_period"] = h_per_period;
  doc["slope_y"] = g.slope_y;
  doc["series"] = json::array();
  for (std::size_t p = 0; p < g.e_y.size(); ++p) {
    doc["series"].push_back({{"period", p + 1},
                             {"t", static_cast<double>(p + 1) * period},
                             {"e_y", g.e_y[p]},
                             {"e_H", g.e_H[p]},
                             {"e_C", has_casimir ? json(g.e_C[p]) : json(nullptr)}});
  }
  return doc.dump(2) + "\n";
}

void print_growth(const GrowthSeries& g, bool has_casimir) {
  double max_h = 0.0;
  for (double v : g.e_H) max_h = std::max(max_h, v);
  char slope[16];
  std::snprintf(slope, sizeof slope, "%.2f", g.slope_y);
  std::cout << g.spec.label() << ": periods=" << g.e_y.size() << "  slope_y=" << slope
            << "  e_y(end)=" << sci3(g.e_y.back()) << "  e_H(1)=" << sci3(g.e_H.front())
            << "  e_H(end)=" << sci3(g.e_H.back()) << "  max e_H=" << sci3(max_h);
  if (has_casimir) std::cout << "  e_C(end)=" << sci3(g.e_C.back());
  std::cout << '\n';
}

std::string extension(const RunConfig& rc) { return rc.format == "json" ? ".json" : ".csv"; }

void check_format(const RunConfig& rc) {
  if (rc.format != "csv" && rc.format != "json") throw ConfigError("--format must be csv or json");
}

void run_table(const RunConfig& rc, const MethodSpec& spec, const std::vector<long>& n_list,
               int periods, const std::string& path) {
  const ProblemPreset problem = preset(rc.problem);
  const auto rows =
      convergence_table(problem, spec, n_list, periods, solver_config(rc), thread_budget());
  print_table(spec, rows);
  if (!path.empty()) {
    write_atomically(path, rc.format == "json" ? table_json(rc.problem, spec, periods, rows)
                                               : table_csv(rows));
    std::cout << "  wrote " << path << '\n';
  }
}

void run_growth(const RunConfig& rc, const std::vector<MethodSpec>& specs, long h_per_period,
                int periods, const std::vector<std::string>& paths) {
  const ProblemPreset problem = preset(rc.problem);
  const bool has_casimir = problem.system.num_casimirs() > 0;
  const auto series =
      growth_study(problem, specs, h_per_period, periods, solver_config(rc), thread_budget());
  for (std::size_t i = 0; i < series.size(); ++i) {
    print_growth(series[i], has_casimir);
    if (!paths[i].empty()) {
      write_atomically(paths[i],
                       rc.format == "json"
                           ? growth_json(rc.problem, series[i], problem.period, h_per_period,
                                         has_casimir)
                           : growth_csv(series[i], problem.period, has_casimir));
      std::cout << "  wrote " << paths[i] << '\n';
    }
  }
}

void run_step_debug(const RunConfig& rc) {
  const ProblemPreset problem = preset(rc.problem);
  const auto& sys = problem.system;
  const MethodSpec spec = method_spec(rc, sys);
  const SolverConfig cfg = solver_config(rc);
  double h = rc.h;
  if (h == 0.0) h = problem.period / static_cast<double>(rc.n_list.empty() ? 100 : rc.n_list[0]);
  const MethodTableau tab = build_tableau(spec.k, spec.s);

  const StepResult r = spec.method == Method::ephbvm
                           ? step_with_casimir(sys, tab, problem.y0, h, cfg)
                           : step(sys, tab, problem.y0, h, cfg);
  const StageState st = evaluate_stage_state(sys, tab, problem.y0, h, r.phi);
  const auto rho = structure_coefficients(sys, tab, st.Y);
  double skew_defect = 0.0;
  for (int i = 0; i < spec.s; ++i)
    for (int j = 0; j < spec.s; ++j) {
      skew_defect = std::max(skew_defect, (rho[i][j] - rho[j][i]).cwiseAbs().maxCoeff());
      skew_defect = std::max(skew_defect, (rho[i][j] + rho[i][j].transpose()).cwiseAbs().maxCoeff());
    }
  const double dH = std::abs(sys.H(r.y1) - sys.H(problem.y0));

  json doc;
  doc["problem"] = rc.problem;
  doc["method"] = spec.label();
  doc["h"] = h;
  doc["y0"] = std::vector<double>(problem.y0.data(), problem.y0.data() + problem.y0.size());
  doc["y1"] = std::vector<double>(r.y1.data(), r.y1.data() + r.y1.size());
  doc["iterations"] = r.iterations;
  doc["residual"] = r.residual_norm;
  doc["tolerance"] = r.tolerance;
  doc["stagnated"] = r.stagnated;
  doc["e_H"] = dH;
  doc["rho_skew_defect"] = skew_defect;
  auto columns = [](const Matrix& M) {
    json cols = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      cols.push_back(std::vector<double>(M.col(j).data(), M.col(j).data() + M.rows()));
    return cols;
  };
  doc["phi"] = columns(r.phi);
  doc["stages"] = columns(st.Y);
  doc["gamma_hat"] = columns(st.gamma_hat);
  if (r.alpha.size() > 0)
    doc["alpha"] = std::vector<double>(r.alpha.data(), r.alpha.data() + r.alpha.size());

  std::cout << spec.label() << " on " << rc.problem << ", h=" << sci3(h) << ": it=" << r.iterations
            << "  residual=" << sci3(r.residual_norm) << "  e_H=" << sci3(dH)
            << "  rho skew defect=" << sci3(skew_defect);
  if (r.alpha.size() > 0) std::cout << "  |alpha|=" << sci3(r.alpha.cwiseAbs().maxCoeff());
  std::cout << '\n';

  if (!rc.output.empty()) {
    if (rc.format == "json") {
      write_atomically(rc.output, doc.dump(2) + "\n");
    } else {
      std::ostringstream out;
      out << "quantity,value\n";
      out << "h," << full(h) << "\niterations," << r.iterations << "\nresidual,"
          << full(r.residual_norm) << "\ne_H," << full(dH) << "\nrho_skew_defect,"
          << full(skew_defect) << '\n';
      for (Eigen::Index i = 0; i < r.y1.size(); ++i) out << "y1_" << i << ',' << full(r.y1[i]) << '\n';
      for (Eigen::Index i = 0; i < r.alpha.size(); ++i)
        out << "alpha_" << i << ',' << full(r.alpha[i]) << '\n';
      write_atomically(rc.output, out.str());
    }
    std::cout << "  wrote " << rc.output << '\n';
  }
}

struct PresetTable {
  MethodSpec spec;
  std::vector<long> n_list;
};

std::vector<long> doubling(long from, long to) {
  std::vector<long> out;
  for (long n = from; n <= std::min(to, kPresetMaxN); n *= 2) out.push_back(n);
  return out;
}

std::string preset_path(const RunConfig& rc, const std::string& tag) {
  if (rc.output.empty()) return {};
  return rc.output + "_" + tag + extension(rc);
}

void run_preset(RunConfig rc) {
  const std::string& name = rc.preset;
  if (name == "table1" || name == "table2" || name == "table3") {
    rc.problem = name == "table1" ? "lv2" : "lv3";
    std::vector<PresetTable> jobs;
    if (name == "table3") {
      jobs = {{MethodSpec::ephbvm(4, 1), doubling(50, 6400)},
              {MethodSpec::ephbvm(4, 2), doubling(50, 6400)},
              {MethodSpec::ephbvm(6, 3), doubling(50, 800)}};
    } else {
      jobs = {{MethodSpec::gauss(1), doubling(50, 6400)},
              {MethodSpec::phbvm(4, 1), doubling(50, 6400)},
              {MethodSpec::gauss(2), doubling(50, 6400)},
              {MethodSpec::phbvm(4, 2), doubling(50, 6400)},
              {MethodSpec::gauss(3), doubling(50, 800)},
              {MethodSpec::phbvm(6, 3), doubling(50, 800)}};
    }
    for (const auto& job : jobs)
      run_table(rc, job.spec, job.n_list, 1, preset_path(rc, file_tag(job.spec)));
    return;
  }
  std::vector<MethodSpec> specs;
  if (name == "fig2" || name == "fig4") {
    rc.problem = name == "fig2" ? "lv2" : "lv3";
    specs = {MethodSpec::gauss(3), MethodSpec::phbvm(6, 3)};
  } else if (name == "fig5") {
    rc.problem = "lv3";
    specs = {MethodSpec::ephbvm(6, 3)};
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  std::vector<std::string> paths;
  for (const auto& spec : specs) paths.push_back(preset_path(rc, file_tag(spec)));
  run_growth(rc, specs, 100, kPresetMaxPeriods, paths);
}

void add_run_options(CLI::App* app, RunConfig& rc) {
  app->add_option("--solver", rc.solver, "fixed_point | newton | blended")->capture_default_str();
  app->add_option("--tol", rc.tol, "residual tolerance (scaled by 1 + |y0|)")->capture_default_str();
  app->add_option("--max-iter", rc.max_iter, "iteration cap per step")->capture_default_str();
  app->add_option("--output", rc.output, "output file (prefix for --preset)");
  app->add_option("--format", rc.format, "csv | json")->capture_default_str();
}

void add_method_options(CLI::App* app, RunConfig& rc) {
  app->add_option("--problem", rc.problem, "lv2 | lv3 | harmonic")->capture_default_str();
  app->add_option("--method", rc.method, "gauss | phbvm | ephbvm")->capture_default_str();
  app->add_option("--k", rc.k, "quadrature nodes (defaults to s for gauss)");
  app->add_option("--s", rc.s, "polynomial degree / stages")->required();
}

}  // namespace

int run_cli(int argc, char** argv) {
  RunConfig rc;
  CLI::App app{"Energy- and Casimir-conserving line integral methods for Poisson systems"};
  app.footer(
      "Presets (--preset): table1 (lv2), table2 (lv3), table3 (lv3, ephbvm) run convergence\n"
      "tables with n = 50, 100, ... capped at 6400; fig2 (lv2), fig4 (lv3), fig5 (lv3, ephbvm)\n"
      "run error-growth series with h = T/100 over 20 periods. With --output PREFIX each method\n"
      "writes PREFIX_<method>.csv. PHBVM_THREADS caps the number of worker threads.\n"
      "Exit codes: 0 ok, 1 I/O error, 2 configuration error, 3 solver failure.");
  app.add_option("--preset", rc.preset, "table1|table2|table3|fig2|fig4|fig5");
  add_run_options(&app, rc);

  auto* table = app.add_subcommand("table", "convergence table over a list of n (h = T/n)");
  add_method_options(table, rc);
  add_run_options(table, rc);
  table->add_option("--n", rc.n_list, "comma-separated steps per period")
      ->delimiter(',')
      ->required();
  table->add_option("--periods", rc.periods, "number of periods")->capture_default_str();

  auto* growth = app.add_subcommand("growth", "per-period error series over many periods");
  add_method_options(growth, rc);
  add_run_options(growth, rc);
  growth->add_option("--h-per-period", rc.h_per_period, "steps per period")->capture_default_str();
  growth->add_option("--periods", rc.periods, "number of periods (>= 5)")->capture_default_str();

  auto* debug = app.add_subcommand("step-debug", "one step from y0 with internal quantities");
  debug->set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
  add_method_options(debug, rc);
  add_run_options(debug, rc);
  debug->add_option("--h", rc.h, "step size (default T/n)");
  debug->add_option("--n", rc.n_list, "steps per period")->delimiter(',');

  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    check_format(rc);
    if (!rc.preset.empty()) {
      if (!app.get_subcommands().empty()) throw ConfigError("--preset cannot be combined with a subcommand");
      run_preset(rc);
    } else if (table->parsed()) {
      const ProblemPreset problem = preset(rc.problem);
      run_table(rc, method_spec(rc, problem.system), rc.n_list, rc.periods, rc.output);
    } else if (growth->parsed()) {
      const ProblemPreset problem = preset(rc.problem);
      const MethodSpec spec = method_spec(rc, problem.system);
      run_growth(rc, {spec}, rc.h_per_period, rc.periods, {rc.output});
    } else if (debug->parsed()) {
      run_step_debug(rc);
    } else {
      std::cerr << app.help() << "error: give a subcommand or --preset\n";
      return kExitConfig;
    }
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const IntegrationError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const DegenerateCasimirDirection& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const LinearSolveError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const DomainError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitConfig;
  } catch (const std::out_of_range& e) {
    std::cerr << "configuration error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace phbvm
