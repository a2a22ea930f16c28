#pragma once

#include "derisk/engine.hpp"
#include "derisk/json_io.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace derisk {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitIterationLimit = 2;

struct SolveArgs {
  std::string instance;
  std::string config;
  std::string out = ".";
  std::optional<unsigned> seed;
  bool timing = false;
};

struct FrontierArgs {
  std::string instance;
  std::string config;
  std::string out = ".";
  std::vector<double> thetaGrid;
  std::optional<unsigned> seed;
};

struct OracleArgs {
  std::string instance;
  std::string solution;
};

/// outcome.json content for a finished run.
json run_summary(const FeatureModel& model, const RunResult& r);

/// Writes iterations.csv, outcome.json and monitors.json to args.out.
int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err);
/// Writes frontier.csv to args.out.
int cmd_frontier(const FrontierArgs& args, std::ostream& out, std::ostream& err);
int cmd_phi_oracle(const OracleArgs& args, std::ostream& out, std::ostream& err);
int cmd_validate(const std::string& instance, const std::string& config, std::ostream& out, std::ostream& err);

/// Parses "a,b,c" (ascending, nonempty).
std::vector<double> parse_theta_grid(const std::string& text);

int cli_main(int argc, char** argv);

}  // namespace derisk
