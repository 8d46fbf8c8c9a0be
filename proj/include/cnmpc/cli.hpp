/// \file cnmpc/cli.hpp
/// \brief Command-line and config-file front end for the simulator.
///
/// Precedence, lowest to highest: built-in defaults, the selected case
/// preset, the config file, explicit flags.
///
/// Config files hold `key = value` lines; `#` starts a comment. Keys are the
/// SimConfig field names (case, dt, N, h, tol, k_max, precond, t_p, solver,
/// t_end, stop_radius, symmetrize, threads, newton_tol, newton_max, out) and
/// the problem constants (A, B, c_u, r_u, w_d, x0, y0, t0, x_f, y_f).

#pragma once

#include <CLI11.hpp>

#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cnmpc/sim.hpp"

namespace cnmpc::cli {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CliOptions {
  sim::SimConfig config;
  std::optional<std::string> out;
  bool help = false;
};

inline std::string usage_text() {
  return "usage: cnmpc_sim (--case {1|2|3|4} | --config PATH) [options]\n"
         "  --case N           reference experiment 1-4\n"
         "  --config PATH      key = value file (# comments)\n"
         "  --kmax K           maximum Krylov iterations per step\n"
         "  --tp SEC           preconditioner rebuild period\n"
         "  --precond on|off   LU preconditioning\n"
         "  --solver gmres|minres\n"
         "  --dt SEC           system sampling period (default 0.02)\n"
         "  --N STEPS          horizon steps (default 10)\n"
         "  --h STEP           forward-difference step (default 1e-5)\n"
         "  --tol TOL          relative Krylov tolerance (default 1e-5)\n"
         "  --tmax SEC         simulated-time cap (default 2)\n"
         "  --out PATH         CSV output (default: stdout)\n";
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw UsageError("invalid number '" + v + "' for " + key);
  return out;
}

inline long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long out = 0;
  try {
    out = std::stol(v, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw UsageError("invalid integer '" + v + "' for " + key);
  return out;
}

inline bool parse_switch(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw UsageError("invalid value '" + v + "' for " + key + " (expected on|off)");
}

using Setter = std::function<void(sim::SimConfig&, const std::string& key, const std::string& value)>;

inline Setter real_field(double sim::SimConfig::*field) {
  return [field](sim::SimConfig& c, const std::string& k, const std::string& v) { c.*field = parse_real(k, v); };
}

inline Setter constant_field(double tfc::TfcConstants::*field) {
  return [field](sim::SimConfig& c, const std::string& k, const std::string& v) {
    c.constants.*field = parse_real(k, v);
  };
}

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dt", real_field(&sim::SimConfig::dt)},
      {"h", real_field(&sim::SimConfig::h)},
      {"tol", real_field(&sim::SimConfig::tol)},
      {"t_p", real_field(&sim::SimConfig::t_p)},
      {"t_end", real_field(&sim::SimConfig::t_end)},
      {"stop_radius", real_field(&sim::SimConfig::stop_radius)},
      {"newton_tol", real_field(&sim::SimConfig::newton_tol)},
      {"N",
       [](sim::SimConfig& c, const std::string& k, const std::string& v) {
         const long n = parse_int(k, v);
         if (n < 1) throw UsageError("value '" + v + "' for " + k + " out of range (>= 1)");
         c.N = static_cast<std::size_t>(n);
       }},
      {"k_max",
       [](sim::SimConfig& c, const std::string& k, const std::string& v) {
         const long n = parse_int(k, v);
         if (n < 1) throw UsageError("value '" + v + "' for " + k + " out of range (>= 1)");
         c.k_max = static_cast<int>(n);
       }},
      {"newton_max",
       [](sim::SimConfig& c, const std::string& k, const std::string& v) {
         c.newton_max = static_cast<int>(parse_int(k, v));
       }},
      {"threads",
       [](sim::SimConfig& c, const std::string& k, const std::string& v) {
         const long n = parse_int(k, v);
         if (n < 0) throw UsageError("value '" + v + "' for " + k + " out of range (>= 0)");
         c.threads = static_cast<unsigned>(n);
       }},
      {"precond",
       [](sim::SimConfig& c, const std::string& k, const std::string& v) { c.precond_enabled = parse_switch(k, v); }},
      {"symmetrize",
       [](sim::SimConfig& c, const std::string& k, const std::string& v) { c.symmetrize = parse_switch(k, v); }},
      {"solver",
       [](sim::SimConfig& c, const std::string& k, const std::string& v) {
         if (v == "gmres")
           c.solver = KrylovMethod::gmres;
         else if (v == "minres")
           c.solver = KrylovMethod::minres;
         else
           throw UsageError("invalid value '" + v + "' for " + k + " (expected gmres|minres)");
       }},
      {"A", constant_field(&tfc::TfcConstants::A)},
      {"B", constant_field(&tfc::TfcConstants::B)},
      {"c_u", constant_field(&tfc::TfcConstants::c_u)},
      {"r_u", constant_field(&tfc::TfcConstants::r_u)},
      {"w_d", constant_field(&tfc::TfcConstants::w_d)},
      {"x0", constant_field(&tfc::TfcConstants::x0)},
      {"y0", constant_field(&tfc::TfcConstants::y0)},
      {"t0", constant_field(&tfc::TfcConstants::t0)},
      {"x_f", constant_field(&tfc::TfcConstants::x_f)},
      {"y_f", constant_field(&tfc::TfcConstants::y_f)},
  };
  return table;
}

inline int parse_case(const std::string& key, const std::string& v) {
  const long n = parse_int(key, v);
  if (n < 1 || n > 4) throw UsageError("value '" + v + "' for " + key + " out of range (1-4)");
  return static_cast<int>(n);
}

}  // namespace detail

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Reads `key = value` lines; `#` starts a comment, blank lines are skipped.
inline KeyValues parse_config(std::istream& is, const std::string& source) {
  KeyValues out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(is, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(source + ":" + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw UsageError(source + ":" + std::to_string(lineno) + ": empty key or value in '" + line + "'");
    if (key != "case" && key != "out" && detail::setters().count(key) == 0)
      throw UsageError(source + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

inline KeyValues read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config file '" + path + "'");
  return parse_config(is, path);
}

inline CliOptions parse_cli(const std::vector<std::string>& args) {
  if (args.size() <= 1) throw UsageError("no arguments given\n" + usage_text());

  CLI::App app{"Closed-loop continuation NMPC simulator", "cnmpc_sim"};
  app.set_help_flag("--help", "Print this help message and exit");
  // Flag name -> config key, in the order they are applied.
  const std::vector<std::pair<std::string, std::string>> flags = {
      {"--kmax", "k_max"}, {"--tp", "t_p"}, {"--precond", "precond"}, {"--solver", "solver"},
      {"--dt", "dt"},      {"--N", "N"},    {"--h", "h"},             {"--tol", "tol"},
      {"--tmax", "t_end"},
  };
  std::map<std::string, std::string> flag_values;
  std::string case_flag, config_path, out_path;
  app.add_option("--case", case_flag, "Reference experiment 1-4");
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--out", out_path, "CSV output path");
  for (const auto& [flag, key] : flags) app.add_option(flag, flag_values[flag]);

  std::vector<std::string> rev(args.rbegin(), std::prev(args.rend()));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    CliOptions help;
    help.help = true;
    return help;
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string(e.what()) + "\n" + usage_text());
  }
  auto given = [&app](const std::string& flag) { return app.count(flag) > 0; };

  KeyValues file;
  if (given("--config")) file = read_config_file(config_path);

  CliOptions opts;
  std::optional<int> case_number;
  for (const auto& [k, v] : file)
    if (k == "case") case_number = detail::parse_case("case", v);
  if (given("--case")) case_number = detail::parse_case("--case", case_flag);
  opts.config = case_number ? sim::preset(*case_number) : sim::SimConfig{};

  std::set<std::string> explicit_keys;
  for (const auto& [k, v] : file) {
    if (k == "case") continue;
    if (k == "out") {
      opts.out = v;
      continue;
    }
    detail::setters().at(k)(opts.config, k, v);
    explicit_keys.insert(k);
  }
  for (const auto& [flag, key] : flags) {
    if (!given(flag)) continue;
    detail::setters().at(key)(opts.config, flag, flag_values[flag]);
    explicit_keys.insert(key);
  }
  if (given("--out")) opts.out = out_path;

  if (!case_number && !given("--config"))
    throw UsageError("either --case or --config is required\n" + usage_text());
  if (explicit_keys.count("t_p") && !opts.config.precond_enabled)
    throw UsageError("--tp conflicts with preconditioning turned off (case " +
                     std::to_string(opts.config.case_preset) + " or --precond off)");
  if (opts.config.solver == KrylovMethod::minres && opts.config.precond_enabled)
    throw UsageError("--solver minres conflicts with the LU preconditioner, which is not positive definite");
  try {
    opts.config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return opts;
}

inline CliOptions parse_cli(int argc, const char* const* argv) {
  return parse_cli(std::vector<std::string>(argv, argv + argc));
}

}  // namespace cnmpc::cli
