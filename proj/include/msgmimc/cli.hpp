#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace msgmimc::cli {

// Flat "key = value" config file with dotted section keys; '#' starts a
// comment. CLI flags override file values. The grammar is documented in the
// README.
std::map<std::string, std::string> parse_config_file(const std::string& path);

struct Options {
  std::string command;                // solve-bench | rates | estimate | ...
  std::string config_path;            // optional
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;  // overrides config
  std::optional<int> threads;
  std::optional<std::string> qoi;
  std::vector<double> eps;            // overrides estimate eps list
  std::map<std::string, std::string> extra; // direct key=value overrides
};

// Exit codes: 0 success, 2 budget exhaustion, 3 solver failure.
int run_solve_bench(const Options& opt);
int run_rates(const Options& opt);
int run_estimate(const Options& opt);
int run_cost_theorem(const Options& opt);
int run_dump_field(const Options& opt);

int main_entry(int argc, char** argv);

} // namespace msgmimc::cli
