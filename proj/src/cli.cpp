#include "derisk/cli.hpp"

#include "derisk/adapters/instance.hpp"
#include "derisk/log.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace derisk {

namespace fs = std::filesystem;

namespace {

void write_atomically(const fs::path& target, const std::string& content) {
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << content;
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

RunConfig load_config(const std::string& path, std::optional<unsigned> seed) {
  RunConfig cfg = path.empty() ? RunConfig{} : read_run_config(load_json_file(path));
  if (seed) cfg.seed = *seed;
  return cfg;
}

void report_error(std::ostream& err, const std::exception& e) {
  if (const auto* s = dynamic_cast<const SchemaError*>(&e)) {
    err << "schema error at " << (s->pointer().empty() ? "/" : s->pointer()) << ": " << e.what() << '\n';
  } else {
    err << "error: " << e.what() << '\n';
  }
}

}  // namespace

json run_summary(const FeatureModel& model, const RunResult& r) {
  const auto& st = r.state;
  json names = json::array();
  for (const auto& v : st.master.variables) names.push_back(v.name);
  return {{"schemaVersion", kSchemaVersion},
          {"instanceKind", model.kind()},
          {"outcome", to_json(r.outcome)},
          {"stopReason", r.stopReason},
          {"iterations", st.history.size()},
          {"cuts", st.master.cuts.size()},
          {"nominalCost", st.nominalCost},
          {"nominalPhi", st.phiU0},
          {"theta", st.theta},
          {"alpha", st.alpha},
          {"delta", st.delta},
          {"finalCost", r.finalCost},
          {"finalPhi", r.finalPhi},
          {"costRatio", st.nominalCost != 0.0 ? json(r.finalCost / st.nominalCost) : json(nullptr)},
          {"riskRatio", st.phiU0 > 0.0 ? json(r.finalPhi / st.phiU0) : json(nullptr)},
          {"variableNames", names}};
}

int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const auto model = load_model(load_json_file(args.instance));
    const RunConfig cfg = load_config(args.config, args.seed);
    const RunResult r = run(*model, cfg, RunOptions{args.timing});
    fs::create_directories(args.out);
    std::ostringstream csv;
    write_iterations_csv(csv, r.state.history, args.timing);
    write_atomically(fs::path(args.out) / "iterations.csv", csv.str());
    write_atomically(fs::path(args.out) / "outcome.json", run_summary(*model, r).dump(2) + "\n");
    json mon = to_json(r.monitors);
    mon["schemaVersion"] = kSchemaVersion;
    write_atomically(fs::path(args.out) / "monitors.json", mon.dump(2) + "\n");
    out << to_string(r.outcome.kind) << " (" << r.stopReason << ") after " << r.state.history.size()
        << " master solves: cost " << format_double(r.state.nominalCost) << " -> " << format_double(r.finalCost)
        << ", Phi " << format_double(r.state.phiU0) << " -> " << format_double(r.finalPhi) << '\n';
    if (!r.monitors.all_ok()) log(LogLevel::Warn, "a monitor check failed; see monitors.json");
    return r.outcome.kind == OutcomeKind::IterationLimit ? kExitIterationLimit : kExitOk;
  } catch (const std::exception& e) {
    report_error(err, e);
    return kExitError;
  }
}

std::vector<double> parse_theta_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw std::invalid_argument("bad theta value '" + item + "'");
    if (!(v > 0.0)) throw std::invalid_argument("theta values must be positive");
    if (!grid.empty() && v <= grid.back()) throw std::invalid_argument("theta grid must be ascending");
    grid.push_back(v);
  }
  if (grid.empty()) throw std::invalid_argument("theta grid is empty");
  return grid;
}

int cmd_frontier(const FrontierArgs& args, std::ostream& out, std::ostream& err) {
  try {
    if (args.thetaGrid.empty()) throw std::invalid_argument("theta grid is empty");
    const auto model = load_model(load_json_file(args.instance));
    const RunConfig base = load_config(args.config, args.seed);
    std::ostringstream csv;
    csv << "theta,finalCost,finalPhi,outcomeKind\n";
    int ok = 0;
    for (double theta : args.thetaGrid) {
      RunConfig cfg = base;
      cfg.thetaPolicy.theta = theta;
      csv << format_double(theta) << ',';
      try {
        const RunResult r = run(*model, cfg);
        csv << format_double(r.finalCost) << ',' << format_double(r.finalPhi) << ',' << to_string(r.outcome.kind)
            << '\n';
        ++ok;
      } catch (const std::exception& e) {
        csv << ",,Error\n";
        err << "theta " << format_double(theta) << ": " << e.what() << '\n';
      }
    }
    fs::create_directories(args.out);
    write_atomically(fs::path(args.out) / "frontier.csv", csv.str());
    out << ok << " of " << args.thetaGrid.size() << " frontier points solved\n";
    return ok > 0 ? kExitOk : kExitError;
  } catch (const std::exception& e) {
    report_error(err, e);
    return kExitError;
  }
}

int cmd_phi_oracle(const OracleArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const auto model = load_model(load_json_file(args.instance));
    const Vector x = read_solution(load_json_file(args.solution), *model);
    const double residual = max_residual(model->nominal(), x);
    if (residual > kSolverTol) {
      err << "infeasible solution: max residual " << format_double(residual) << '\n';
      const auto& p = model->nominal();
      for (std::size_t i = 0; i < p.variables.size(); ++i) {
        const auto& v = p.variables[i];
        const double xi = x[static_cast<Eigen::Index>(i)];
        if (xi < v.lower - kSolverTol || xi > v.upper + kSolverTol) {
          err << "  bound " << v.name << " = " << format_double(xi) << '\n';
        }
      }
      for (const auto& c : p.constraints) {
        const double lhs = c.lhs.evaluate(x);
        const double viol = c.sense == Sense::Le   ? lhs - c.rhs
                            : c.sense == Sense::Ge ? c.rhs - lhs
                                                   : std::abs(lhs - c.rhs);
        if (viol > kSolverTol) err << "  constraint " << c.name << " violated by " << format_double(viol) << '\n';
      }
      return kExitError;
    }
    const PhiValue v = model->exact_phi(x);
    json o = {{"schemaVersion", kSchemaVersion},
              {"phi", v.phi},
              {"feature", v.feature},
              {"featureName", model->feature_name(v.feature)},
              {"z", v.z.entries.empty() ? json(nullptr) : to_json(v.z)},
              {"cost", evaluate_cost(model->nominal(), x)},
              {"residual", residual}};
    out << o.dump(2) << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    report_error(err, e);
    return kExitError;
  }
}

int cmd_validate(const std::string& instance, const std::string& config, std::ostream& out, std::ostream& err) {
  try {
    const auto model = load_model(load_json_file(instance));
    const auto problems = validate_master(with_epigraph(model->nominal(), 1.0));
    if (!problems.empty()) {
      for (const auto& p : problems) err << "invalid: " << p << '\n';
      return kExitError;
    }
    if (!config.empty()) load_config(config, std::nullopt);
    out << model->kind() << ": " << model->nominal().size() << " variables, " << model->nominal().constraints.size()
        << " constraints, " << model->feature_count() << " features: ok\n";
    return kExitOk;
  } catch (const std::exception& e) {
    report_error(err, e);
    return kExitError;
  }
}

int cli_main(int argc, char** argv) {
  CLI::App app{"derisk: softmax-adversarial cutting planes for de-risking optimization solutions"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "run the engine on one instance");
  s->add_option("--instance", solve.instance, "instance JSON")->required()->check(CLI::ExistingFile);
  s->add_option("--config", solve.config, "run config JSON")->check(CLI::ExistingFile);
  s->add_option("--out", solve.out, "output directory");
  s->add_option("--seed", solve.seed, "override the config seed");
  s->add_flag("--timing", solve.timing, "record wall time per iteration");

  FrontierArgs frontier;
  std::string grid;
  auto* f = app.add_subcommand("frontier", "sweep theta and record the final (cost, Phi) points");
  f->add_option("--instance", frontier.instance, "instance JSON")->required()->check(CLI::ExistingFile);
  f->add_option("--config", frontier.config, "run config JSON")->check(CLI::ExistingFile);
  f->add_option("--out", frontier.out, "output directory");
  f->add_option("--theta-grid", grid, "ascending comma-separated theta values")->required();
  f->add_option("--seed", frontier.seed, "override the config seed");

  OracleArgs oracle;
  auto* o = app.add_subcommand("phi-oracle", "print exact Phi(x) for a solution");
  o->add_option("--instance", oracle.instance, "instance JSON")->required()->check(CLI::ExistingFile);
  o->add_option("--solution", oracle.solution, "solution JSON")->required()->check(CLI::ExistingFile);

  std::string vInstance;
  std::string vConfig;
  auto* v = app.add_subcommand("validate", "check an instance (and optionally a config)");
  v->add_option("--instance", vInstance, "instance JSON")->required()->check(CLI::ExistingFile);
  v->add_option("--config", vConfig, "run config JSON")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitError;
  }

  if (*s) return cmd_solve(solve, std::cout, std::cerr);
  if (*f) {
    try {
      frontier.thetaGrid = parse_theta_grid(grid);
    } catch (const std::exception& e) {
      std::cerr << "error: --theta-grid: " << e.what() << '\n';
      return kExitError;
    }
    return cmd_frontier(frontier, std::cout, std::cerr);
  }
  if (*o) return cmd_phi_oracle(oracle, std::cout, std::cerr);
  if (*v) return cmd_validate(vInstance, vConfig, std::cout, std::cerr);
  return kExitError;
}

}  // namespace derisk
