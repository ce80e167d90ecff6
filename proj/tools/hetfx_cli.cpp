// hetfx: command-line front end for treatment-effect variation analysis.

#include "hetfx/csv.hpp"
#include "hetfx/report.hpp"
#include "hetfx/simlab.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <sstream>

namespace {

using namespace hetfx;

struct Options {
  std::string input;
  std::string output;
  std::string format = "json";
  std::vector<std::string> estimators;
  double alpha = 0.05;
  std::string rho_grid = "0:1:0.1";
  bool nonneg_corr = false;
  bool no_idiosyncratic = false;
  std::uint64_t seed = 20160101;
  long long draws = 1000;
  std::string statistic = "diff_means";
  std::string scenario = "a";
  std::vector<long long> n{1000};
  long long reps = 1000;
  bool noncompliance = false;
  std::vector<std::string> candidates;
  long long grid_coord = 1;
  int grid_points = 21;
  long long rep = 0;
};

Vector parse_candidate(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw Error(ErrorCode::invalid_input, "candidate entry '" + field + "' is not a number");
    }
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

AnalysisConfig to_config(Command command, const Options& o) {
  AnalysisConfig c;
  c.command = command;
  c.input = o.input;
  c.output = o.output;
  c.format = o.format == "csv" ? ReportFormat::csv : ReportFormat::json;
  if (!o.estimators.empty()) {
    std::vector<EstimatorMethod> methods;
    for (const auto& name : o.estimators) {
      if (name == "none") continue;
      const auto m = parse_estimator(name);
      if (!m) throw Error(ErrorCode::invalid_input, "unknown estimator '" + name + "'");
      methods.push_back(*m);
    }
    c.estimators = methods;
  }
  c.alpha = o.alpha;
  c.rho_grid = o.rho_grid;
  c.nonneg_corr = o.nonneg_corr;
  c.cov_mode = o.no_idiosyncratic ? CovarianceMode::no_idiosyncratic : CovarianceMode::conservative;
  c.seed = o.seed;
  c.draws = o.draws;
  const auto stat = parse_statistic(o.statistic);
  if (!stat) throw Error(ErrorCode::invalid_input, "unknown statistic '" + o.statistic + "'");
  c.statistic = *stat;
  const auto scen = parse_scenario(o.scenario);
  if (!scen) throw Error(ErrorCode::invalid_input, "unknown scenario '" + o.scenario + "'");
  c.scenario = *scen;
  c.n.assign(o.n.begin(), o.n.end());
  c.reps = o.reps;
  c.noncompliance = o.noncompliance;
  for (const auto& text : o.candidates) c.candidates.push_back(parse_candidate(text));
  c.grid_coord = o.grid_coord;
  c.grid_points = o.grid_points;
  return c;
}

void add_common(CLI::App* app, Options& o, bool needs_input) {
  auto* in = app->add_option("--input,-i", o.input, "Dataset CSV (columns y, t, optional d, x_*, w_*)");
  if (needs_input) in->required();
  app->add_option("--output,-o", o.output, "Report path (default: stdout)");
  app->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  app->add_option("--alpha", o.alpha, "Test level")->check(CLI::Range(0.0, 1.0));
  app->add_option("--estimator", o.estimators,
                  "RI, OLS, RI_adjusted, RI_complier, TSLS, or none (repeatable)");
  app->add_option("--seed", o.seed, "Master seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decompose treatment-effect variation in randomized experiments"};
  app.require_subcommand(1);
  Options o;

  auto* itt = app.add_subcommand("analyze-itt", "Fit intention-to-treat estimators and tests");
  add_common(itt, o, true);
  itt->add_flag("--no-idiosyncratic", o.no_idiosyncratic,
                "RI covariance assuming no idiosyncratic variation");

  auto* late = app.add_subcommand("analyze-late", "Complier estimators under noncompliance");
  add_common(late, o, true);

  auto* dec = app.add_subcommand("decompose", "R^2 intervals and the rank-correlation curve");
  add_common(dec, o, true);
  dec->add_option("--rho-grid", o.rho_grid, "Sensitivity grid from:to:step within [0, 1]");
  dec->add_flag("--nonneg-corr", o.nonneg_corr, "Assume nonnegative residual correlation");

  auto* sim = app.add_subcommand("simulate", "Power study over the simulation designs");
  add_common(sim, o, false);
  sim->add_option("--scenario", o.scenario, "a, b, c or d")->check(CLI::IsMember({"a", "b", "c", "d"}));
  sim->add_option("--n", o.n, "Sample size (repeatable for a power curve)");
  sim->add_option("--reps", o.reps, "Replications per sample size");
  sim->add_flag("--noncompliance", o.noncompliance, "Use the noncompliance design");

  auto* cr = app.add_subcommand("fisher-cr", "Randomization-test confidence region");
  add_common(cr, o, true);
  cr->add_option("--draws", o.draws, "Randomization draws per candidate");
  cr->add_option("--statistic", o.statistic, "diff_means, diff_medians or ks");
  cr->add_option("--candidate", o.candidates, "Comma-separated coefficients, intercept first (repeatable)");
  cr->add_option("--grid-coord", o.grid_coord, "Coordinate varied by the default grid");
  cr->add_option("--grid-points", o.grid_points, "Points in each default grid");

  auto* gen = app.add_subcommand("generate", "Write one simulated dataset as CSV");
  gen->add_option("--output,-o", o.output, "Dataset path (default: stdout)");
  gen->add_option("--scenario", o.scenario, "a, b, c or d")->check(CLI::IsMember({"a", "b", "c", "d"}));
  gen->add_option("--n", o.n, "Sample size")->expected(1);
  gen->add_option("--seed", o.seed, "Master seed");
  gen->add_option("--rep", o.rep, "Replication index");
  gen->add_flag("--noncompliance", o.noncompliance, "Use the noncompliance design");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_status(ErrorCode::invalid_input);
  }

  try {
    if (gen->parsed()) {
      SimConfig config;
      config.scenario = *parse_scenario(o.scenario);
      config.n = static_cast<Eigen::Index>(o.n.front());
      config.seed = o.seed;
      config.noncompliance = o.noncompliance;
      config.estimators.clear();
      const SimDraw draw = generate_dataset(config, o.rep);
      if (o.output.empty() || o.output == "-") {
        write_csv(std::cout, draw.data);
      } else {
        write_csv(o.output, draw.data);
      }
      return 0;
    }
    Command command = Command::analyze_itt;
    for (auto* sub : app.get_subcommands()) command = *parse_command(sub->get_name());
    const AnalysisConfig config = to_config(command, o);
    const Report report = run(config);
    write_report(report, config.output, config.format);
    for (const auto& w : report.warnings) std::cerr << "warning [" << w.code << "]: " << w.message << '\n';
    return 0;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return 1;
  }
}
