// Closed-loop simulator for the minimum-time test problem.
//
// Exit codes: 0 run completed, 2 usage error, 3 cold-start failure.

#include <cstdio>
#include <exception>
#include <iostream>

#include "cnmpc/cli.hpp"
#include "cnmpc/sim.hpp"

namespace {

void print_summary(const cnmpc::sim::SimResult& r, std::ostream& os) {
  std::size_t iterations = 0;
  int rebuilds = 0;
  for (const auto& s : r.records) {
    iterations += static_cast<std::size_t>(s.iterations);
    rebuilds += s.rebuilt ? 1 : 0;
  }
  os << "cold start: ||F|| = " << r.cold_start_norm_F << " after " << r.cold_start_iterations << " Newton steps\n";
  os << "steps: " << r.records.size() << "\n";
  if (r.arrival_time)
    os << "arrival time: " << *r.arrival_time << " s\n";
  else
    os << "arrival time: none (time cap reached)\n";
  os << "krylov iterations: " << iterations << "\n";
  os << "map evaluations: " << r.total_map_evals << " solver + " << r.total_rebuild_evals << " preconditioner ("
     << rebuilds << " rebuilds)\n";
  if (r.degraded_steps > 0) os << "degraded steps: " << r.degraded_steps << "\n";
  for (const auto& w : r.warnings) os << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  cnmpc::cli::CliOptions opts;
  try {
    opts = cnmpc::cli::parse_cli(argc, argv);
  } catch (const cnmpc::cli::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (opts.help) {
    std::cout << cnmpc::cli::usage_text();
    return 0;
  }

  cnmpc::sim::SimResult result;
  try {
    result = cnmpc::sim::run_simulation(opts.config);
  } catch (const cnmpc::sim::ColdStartFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }

  try {
    if (opts.out) {
      cnmpc::sim::write_csv(result, *opts.out);
      print_summary(result, std::cout);
    } else {
      cnmpc::sim::write_csv(result, std::cout);
      print_summary(result, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
