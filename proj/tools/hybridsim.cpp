#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "hybrid/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"hybridsim: simulator for heralded qubit/coherent-state hybrid entanglement"};
  app.require_subcommand(1);

  std::string scenario;
  std::string output;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  int figure = 0;
  std::string panel;
  bool mutate = false;

  auto* run = app.add_subcommand("run", "run one scenario and print the result");
  run->add_option("--scenario", scenario, "scenario file")->required();
  run->add_option("--output", output, "optional one-row result table");

  auto* sw = app.add_subcommand("sweep", "evaluate the scenario's parameter grid");
  sw->add_option("--scenario", scenario, "scenario file with sweep.<param> entries")->required();
  sw->add_option("--output", output, "result table (stdout if omitted)");
  sw->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* rep = app.add_subcommand("reproduce", "recompute the datasets of a published figure");
  rep->add_option("--figure", figure, "figure number (2, 3, 4 or 5)")->required();
  rep->add_option("--panel", panel, "panel letter (a, b, c or d); all panels if omitted");
  rep->add_option("--output", output, "result table (stdout if omitted)");
  rep->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* chk = app.add_subcommand("selfcheck", "run the acceptance checks and property suites");
  chk->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  chk->add_flag("--mutate-bs-sign", mutate, "drop the sign of the splitter coefficients (tests the checks)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hybrid::cli::invalid_input;
  }

  const auto out_path = output.empty() ? std::nullopt : std::optional<std::string>(output);
  if (*run) return hybrid::cli::cmd_run(scenario, out_path, std::cout, std::cerr);
  if (*sw) return hybrid::cli::cmd_sweep(scenario, out_path, threads, std::cout, std::cerr);
  if (*rep) {
    if (panel.size() > 1) {
      std::cerr << "invalid input: --panel takes one letter\n";
      return hybrid::cli::invalid_input;
    }
    const auto p = panel.empty() ? std::nullopt : std::optional<char>(panel[0]);
    return hybrid::cli::cmd_reproduce(figure, p, out_path, threads, std::cout, std::cerr);
  }
  hybrid::selfcheck::Options opt;
  opt.threads = threads;
  if (mutate) opt.bs_coefficient = hybrid::selfcheck::unsigned_bs_coefficient;
  return hybrid::cli::cmd_selfcheck(opt, std::cout, std::cerr);
}
