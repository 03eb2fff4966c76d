// cavmatch command-line tool.
//
//   cavmatch_cli rde      --config rde.json      --out runs/rde
//   cavmatch_cli simulate --config sim.json      --out runs/sim --threads 8
//   cavmatch_cli round    --config round.json    --out runs/round --seed 7
//   cavmatch_cli oracle   --config oracle.json   --out runs/oracle
//   cavmatch_cli generate --config graph.json    --out runs/graph
//
// Exit codes: 0 success, 2 validation error, 3 budget or solver error,
// 4 failed built-in check.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cavmatch/error.hpp"
#include "cavmatch/experiments.hpp"

namespace {

constexpr int kExitValidation = static_cast<int>(cavmatch::ExitCode::kValidation);
constexpr int kExitSolver = static_cast<int>(cavmatch::ExitCode::kBudget);

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximum weight matching on sparse random graphs: cavity method tools"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 0;
  bool quiet = false;

  for (const char* name : {"rde", "simulate", "round", "oracle", "generate"}) {
    const char* help = "";
    if (std::string(name) == "rde") help = "Solve the message-law fixed point and report limit quantities";
    if (std::string(name) == "simulate") help = "Exact optima on random graphs against the limit predictions";
    if (std::string(name) == "round") help = "Score matrix, projection, decomposition and rounding";
    if (std::string(name) == "oracle") help = "Cavity solutions against brute force";
    if (std::string(name) == "generate") help = "Write a random graph in edge-list format";
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--threads", threads, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", quiet, "Do not print the report table");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  const CLI::App* sub = app.get_subcommands().front();
  cavmatch::experiments::RunOptions opt;
  opt.out = out_dir;
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--threads")) opt.threads = threads;

  try {
    const auto config = cavmatch::experiments::load_config(config_path);
    const auto res = cavmatch::experiments::run_command(sub->get_name(), config, opt);
    if (!quiet) cavmatch::experiments::write_report_csv(std::cout, res.rows);
    if (res.exit_code != 0) std::cerr << "cavmatch: " << sub->get_name() << ": check failed, see " << out_dir << '\n';
    return res.exit_code;
  } catch (const cavmatch::ValidationError& e) {
    std::cerr << "cavmatch: validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const cavmatch::ConvergenceError& e) {
    std::cerr << "cavmatch: no convergence: " << e.what() << " (residual " << e.residual() << ")\n";
    return kExitSolver;
  } catch (const cavmatch::BudgetError& e) {
    std::cerr << "cavmatch: budget exceeded: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::runtime_error& e) {
    std::cerr << "cavmatch: solver error: " << e.what() << '\n';
    return kExitSolver;
  }
}
