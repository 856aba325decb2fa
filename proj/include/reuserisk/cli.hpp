#pragma once

// Command-line front end: argument/config parsing into a validated RunConfig,
// dispatch into the library, and report emission in either delimited-text or
// structured-object form.
//
// Commands: error-dist, stoploss, capacity, power, subsample, simulate,
// optimize, reuse. Global flags: --seed, --format {csv,obj}, --out, --config.
// Exit codes: 0 success, 1 runtime/domain error, 2 usage error.
//
// Text report grammar (also produced for every command):
//   meta line*:   "<key>: <value>"
//   blank line
//   table*:       "[<name>]" , one comma-separated header row, data rows,
//                 tables separated by blank lines

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "reuserisk/capacity.hpp"
#include "reuserisk/portfolio.hpp"
#include "reuserisk/simulation.hpp"
#include "reuserisk/subsampling.hpp"

namespace reuserisk::cli {

enum class Command {
  error_dist,
  stoploss,
  capacity,
  power,
  subsample,
  simulate,
  optimize,
  reuse,
};

enum class OutputFormat { csv, obj };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown by parse_and_validate when --help is requested; carries the help text.
struct HelpRequested : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ErrorDistParams {
  double p1 = 0.0;
  double p2 = 0.0;
  std::vector<double> p2_given_1;
};

struct StopLossParams {
  double p1 = 0.0;
  double p2 = 0.0;
  std::vector<double> p2_given_1;
  bool compare = false;
};

enum class CapacityMode { max_studies, tail, guaranteed_two, min_k, pigeonhole };

struct CapacityParams {
  CapacityMode mode = CapacityMode::max_studies;
  std::int64_t n = 0;
  std::int64_t k = 0;
  std::vector<std::int64_t> ell_values;
  double p_tol = 0.05;
  TailMethod method = TailMethod::hoeffding;
  double lambda = 0.0;
};

struct PowerParams {
  TestKind kind = TestKind::z_known_variance;
  double alpha = 0.05;
  double delta = 0.0;
  double sigma = 1.0;
  bool one_sided = false;
  std::vector<std::int64_t> n1;
  std::vector<std::int64_t> n2;
  std::optional<double> target_power;
  double ratio = 1.0;
};

struct SubsampleParams {
  std::int64_t n = 0;
  std::vector<std::int64_t> k_list;
  AllocationStrategy strategy = AllocationStrategy::independent_uniform;
  bool audit = false;
  bool empirical = false;
  std::int64_t c = 0;
  std::int64_t ell = 0;
  std::int64_t trials = 0;
};

struct SimulateParams {
  std::string design;  // "shared-control" | "survival"
  SharedControlDesign shared;
  SurvivalReuseDesign survival;
};

struct OptimizeParams {
  std::string portfolio_file;
};

struct ReuseParams {
  std::vector<double> rates;
};

struct RunConfig {
  Command command = Command::capacity;
  OutputFormat format = OutputFormat::csv;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_path;
  std::variant<ErrorDistParams, StopLossParams, CapacityParams, PowerParams,
               SubsampleParams, SimulateParams, OptimizeParams, ReuseParams>
      params;
};

// Flags override config-file values; unknown options and unknown config keys
// are rejected. Throws UsageError (exit 2 at the top level).
RunConfig parse_and_validate(const std::vector<std::string>& args);

struct ReportTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct Report {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<ReportTable> tables;
};

void write_report_csv(std::ostream& out, const Report& report);
void write_report_obj(std::ostream& out, const Report& report);
// Inverse of write_report_csv for the grammar above.
Report parse_report_csv(std::istream& in);

// Runs the command and assembles its report. Domain failures propagate as
// exceptions.
Report build_report(const RunConfig& cfg);

// Dispatches, writes the report to cfg.output_path or `out`; returns 0, or 1
// after printing a runtime/domain error to `err`.
int execute(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// Full pipeline including argument parsing; returns 0, 1 or 2.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

// Portfolio specification file: flat key=value lines with indexed plan.N.*
// keys; see the README for the schema.
struct PortfolioSpecFile {
  PortfolioConfig config;
  std::vector<std::vector<GridCandidate>> grid;
  bool has_grid = false;
};

PortfolioSpecFile parse_portfolio_spec(std::istream& in);
PortfolioSpecFile load_portfolio_spec(const std::string& path);

}  // namespace reuserisk::cli
