#pragma once

// Command orchestration and machine-readable reports.
//
// A report is a config echo, a warning list, and a set of tidy tables.
// The JSON and CSV writers serialize the same tables, so both formats
// carry identical values.

#include "hetfx/dataset.hpp"
#include "hetfx/itt.hpp"
#include "hetfx/rtests.hpp"
#include "hetfx/simlab.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hetfx {

inline constexpr const char* kReportSchemaVersion = "1.0.0";

enum class Command { analyze_itt, analyze_late, decompose, simulate, fisher_cr };

std::string_view to_string(Command command);
std::optional<Command> parse_command(std::string_view name);

enum class ReportFormat { json, csv };

struct AnalysisConfig {
  Command command = Command::analyze_itt;
  std::string input;
  std::string output;  // empty or "-" for stdout
  ReportFormat format = ReportFormat::json;
  /// nullopt selects the command default; an empty list is a no-op.
  std::optional<std::vector<EstimatorMethod>> estimators;
  double alpha = 0.05;
  std::string rho_grid = "0:1:0.1";
  bool nonneg_corr = false;
  CovarianceMode cov_mode = CovarianceMode::conservative;
  std::uint64_t seed = 20160101;
  long long draws = 1000;
  RandomizationStatistic statistic = RandomizationStatistic::diff_means;
  // simulate
  Scenario scenario = Scenario::a;
  std::vector<Eigen::Index> n{1000};
  long long reps = 1000;
  bool noncompliance = false;
  // fisher-cr
  std::vector<Vector> candidates;
  Eigen::Index grid_coord = 1;
  int grid_points = 21;

  void validate() const;
};

/// "a:b:step" parsed into an inclusive grid.
std::vector<double> parse_rho_grid(const std::string& spec);

using Cell = std::variant<std::monostate, bool, long long, double, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

struct Warning {
  std::string code;
  std::string message;
};

struct Report {
  std::string schema_version = kReportSchemaVersion;
  std::string command;
  std::vector<std::pair<std::string, Cell>> config;
  std::vector<Warning> warnings;
  std::vector<Table> tables;

  const Table* table(std::string_view name) const;
};

/// Runs one command. Module errors propagate as hetfx::Error.
Report run(const AnalysisConfig& config);

void write_report(std::ostream& out, const Report& report, ReportFormat format);
void write_report(const Report& report, const std::string& path, ReportFormat format);

}  // namespace hetfx
