// Compares two simulator CSV logs: iteration and map-evaluation totals and
// ||F|| statistics of the candidate relative to the baseline.

#include <CLI11.hpp>

#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "cnmpc/sim.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Compare two cnmpc_sim CSV logs", "cnmpc_compare"};
  std::string baseline_path, candidate_path, csv_path;
  std::size_t horizon = 10;
  app.add_option("baseline", baseline_path, "Baseline CSV")->required();
  app.add_option("candidate", candidate_path, "Candidate CSV")->required();
  app.add_option("--N", horizon, "Horizon steps of both runs (sets the preconditioner cost m = 3N + 3)")
      ->check(CLI::PositiveNumber);
  app.add_option("--csv", csv_path, "Also write the report as CSV");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const std::size_t m = 3 * horizon + 3;
    const auto baseline = cnmpc::sim::result_from_records(cnmpc::sim::read_csv(baseline_path), m);
    const auto candidate = cnmpc::sim::result_from_records(cnmpc::sim::read_csv(candidate_path), m);
    const auto report = cnmpc::sim::compare_runs(baseline, candidate);
    cnmpc::sim::write_report_text(report, std::cout);
    if (!csv_path.empty()) {
      std::ofstream os(csv_path);
      if (!os) throw std::runtime_error("cannot open '" + csv_path + "' for writing");
      cnmpc::sim::write_report_csv(report, os);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
