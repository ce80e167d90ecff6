#include "hetfx/report.hpp"

#include "hetfx/csv.hpp"
#include "hetfx/decomp.hpp"
#include "hetfx/latemod.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace hetfx {

std::string_view to_string(Command command) {
  switch (command) {
    case Command::analyze_itt: return "analyze-itt";
    case Command::analyze_late: return "analyze-late";
    case Command::decompose: return "decompose";
    case Command::simulate: return "simulate";
    case Command::fisher_cr: return "fisher-cr";
  }
  return "unknown";
}

std::optional<Command> parse_command(std::string_view name) {
  for (auto c : {Command::analyze_itt, Command::analyze_late, Command::decompose, Command::simulate,
                 Command::fisher_cr}) {
    if (name == to_string(c)) return c;
  }
  return std::nullopt;
}

std::vector<double> parse_rho_grid(const std::string& spec) {
  double parts[3];
  std::size_t start = 0;
  for (int k = 0; k < 3; ++k) {
    const auto colon = spec.find(':', start);
    if ((k < 2) == (colon == std::string::npos)) {
      throw Error(ErrorCode::invalid_input, "rho grid must look like from:to:step, got '" + spec + "'");
    }
    const std::string field = spec.substr(start, colon - start);
    try {
      std::size_t used = 0;
      parts[k] = std::stod(field, &used);
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw Error(ErrorCode::invalid_input, "rho grid field '" + field + "' is not a number");
    }
    start = colon + 1;
  }
  return make_rho_grid(parts[0], parts[1], parts[2]);
}

void AnalysisConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::domain, "alpha must be in (0, 1)");
  if (command != Command::simulate && input.empty()) {
    throw Error(ErrorCode::invalid_input, std::string(to_string(command)) + " needs --input");
  }
  if (command == Command::simulate && n.empty()) {
    throw Error(ErrorCode::invalid_input, "simulate needs at least one --n");
  }
  if (command == Command::fisher_cr && draws < kMinDraws) {
    throw Error(ErrorCode::domain, "--draws must be at least " + std::to_string(kMinDraws));
  }
  const std::vector<double> grid = parse_rho_grid(rho_grid);
  for (double rho : grid) {
    if (rho < 0.0 || rho > 1.0) throw Error(ErrorCode::domain, "rho grid must lie within [0, 1]");
  }
}

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw Error(ErrorCode::invalid_input, "table '" + name + "' row has the wrong width");
  }
  rows.push_back(std::move(row));
}

const Table* Report::table(std::string_view name) const {
  for (const Table& t : tables) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

namespace {

Cell opt(const std::optional<double>& v) { return v ? Cell(*v) : Cell(); }
Cell str(std::string_view s) { return Cell(std::string(s)); }
Cell num(Eigen::Index v) { return Cell(static_cast<long long>(v)); }

std::vector<EstimatorMethod> pick_estimators(const AnalysisConfig& config,
                                             std::vector<EstimatorMethod> defaults) {
  return config.estimators ? *config.estimators : std::move(defaults);
}

void warn_noop(Report& report, const std::vector<EstimatorMethod>& methods) {
  if (methods.empty()) report.warnings.push_back({"no_op", "no estimators selected; nothing was fitted"});
}

Dataset load_input(const AnalysisConfig& config, Report& report) {
  CsvLoad loaded = load_csv(config.input);
  for (const auto& c : loaded.ignored_columns) {
    report.warnings.push_back({"ignored_column", "column '" + c + "' has no recognised role"});
  }
  return std::move(loaded.data);
}

Table summary_table(const Dataset& data) {
  Table t{"data", {"n", "n1", "n0", "k", "has_receipt", "has_adjustment"}, {}};
  t.add({num(data.n()), num(data.t.n1()), num(data.t.n0()), num(data.k()), data.has_receipt(),
         data.has_adjustment()});
  return t;
}

Table estimates_table() { return {"estimates", {"estimator", "term", "coef", "se"}, {}}; }
Table covariance_table() { return {"covariance", {"estimator", "row", "col", "value"}, {}}; }
Table tests_table() {
  return {"tests",
          {"estimator", "test", "statistic", "reference", "df", "draws", "p_value", "alpha", "reject"},
          {}};
}

void add_coefficients(Table& est, Table& cov, std::string_view method, const Dataset& data,
                      const Vector& beta, const Matrix& covariance) {
  const Vector se = covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const auto& term = data.x_names[static_cast<std::size_t>(j)];
    est.add({str(method), str(term), beta[j], se[j]});
  }
  for (Eigen::Index r = 0; r < covariance.rows(); ++r) {
    for (Eigen::Index c = 0; c < covariance.cols(); ++c) {
      cov.add({str(method), str(data.x_names[static_cast<std::size_t>(r)]),
               str(data.x_names[static_cast<std::size_t>(c)]), covariance(r, c)});
    }
  }
}

void add_test(Table& tests, std::string_view method, const TestResult& r) {
  tests.add({str(method), r.name, r.statistic, r.reference,
             r.df ? Cell(static_cast<long long>(*r.df)) : Cell(),
             r.draws ? Cell(*r.draws) : Cell(), r.p_value, r.alpha, r.reject});
}

void add_omnibus(Report& report, Table& tests, std::string_view method, const Vector& beta,
                 const Matrix& cov, double alpha) {
  try {
    add_test(tests, method, omnibus_test(beta, cov, alpha));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::nothing_to_test) throw;
    report.warnings.push_back({std::string(to_string(e.code())), e.what()});
  }
}

BetaEstimate fit_itt(EstimatorMethod method, const Dataset& data, CovarianceMode mode) {
  switch (method) {
    case EstimatorMethod::ri: return estimate_beta_ri(data, mode);
    case EstimatorMethod::ols: return estimate_beta_ols(data);
    case EstimatorMethod::ri_adjusted: return estimate_beta_ri_adjusted(data);
    default: break;
  }
  throw Error(ErrorCode::invalid_input, std::string(to_string(method)) +
                                            " is a noncompliance estimator; use analyze-late");
}

LateEstimate fit_late(EstimatorMethod method, const Dataset& data) {
  switch (method) {
    case EstimatorMethod::ri_complier: return estimate_beta_c_ri(data);
    case EstimatorMethod::tsls: return estimate_beta_tsls(data);
    default: break;
  }
  throw Error(ErrorCode::invalid_input,
              std::string(to_string(method)) + " is an intention-to-treat estimator");
}

std::vector<EstimatorMethod> default_itt(const Dataset& data) {
  std::vector<EstimatorMethod> out{EstimatorMethod::ri, EstimatorMethod::ols};
  if (data.has_adjustment()) out.push_back(EstimatorMethod::ri_adjusted);
  return out;
}

const std::vector<EstimatorMethod> kDefaultLate{EstimatorMethod::ri_complier, EstimatorMethod::tsls};

Table compliance_table(const ComplianceSummary& cs, Report& report) {
  Table t{"compliance", {"n11", "n10", "n01", "n00", "pi_c", "pi_a", "pi_n", "strong_instrument"}, {}};
  t.add({static_cast<long long>(cs.n_td(1, 1)), static_cast<long long>(cs.n_td(1, 0)),
         static_cast<long long>(cs.n_td(0, 1)), static_cast<long long>(cs.n_td(0, 0)), cs.pi_c, cs.pi_a,
         cs.pi_n, cs.strong_instrument});
  if (!cs.strong_instrument) {
    report.warnings.push_back({"weak_instrument", "estimated complier share " + format_number(cs.pi_c) +
                                                      " is below " + format_number(kWeakInstrumentShare)});
  }
  return t;
}

void run_analyze_itt(const AnalysisConfig& config, Report& report) {
  const Dataset data = load_input(config, report);
  report.tables.push_back(summary_table(data));
  const auto methods = pick_estimators(config, default_itt(data));
  warn_noop(report, methods);
  Table est = estimates_table(), cov = covariance_table(), tests = tests_table();
  for (auto m : methods) {
    const BetaEstimate b = fit_itt(m, data, config.cov_mode);
    add_coefficients(est, cov, to_string(m), data, b.beta, b.cov);
    add_omnibus(report, tests, to_string(m), b.beta, b.cov, config.alpha);
    add_test(tests, to_string(m), variance_ratio_test(data, b, config.alpha));
  }
  report.tables.push_back(std::move(est));
  report.tables.push_back(std::move(cov));
  report.tables.push_back(std::move(tests));
}

void run_analyze_late(const AnalysisConfig& config, Report& report) {
  const Dataset data = load_input(config, report);
  report.tables.push_back(summary_table(data));
  report.tables.push_back(compliance_table(compliance_proportions(data), report));
  const auto methods = pick_estimators(config, kDefaultLate);
  warn_noop(report, methods);
  Table est = estimates_table(), cov = covariance_table(), tests = tests_table();
  for (auto m : methods) {
    const LateEstimate b = fit_late(m, data);
    add_coefficients(est, cov, to_string(m), data, b.beta_c, b.cov);
    add_omnibus(report, tests, to_string(m), b.beta_c, b.cov, config.alpha);
  }
  report.tables.push_back(std::move(est));
  report.tables.push_back(std::move(cov));
  report.tables.push_back(std::move(tests));
}

void run_decompose(const AnalysisConfig& config, Report& report) {
  const Dataset data = load_input(config, report);
  report.tables.push_back(summary_table(data));
  const std::vector<double> grid = parse_rho_grid(config.rho_grid);
  const auto methods = pick_estimators(config, {EstimatorMethod::ols});
  warn_noop(report, methods);

  Table itt{"decomposition",
            {"estimator", "s_dd", "see_lower", "see_upper_frechet", "see_upper_indep", "see_upper", "v1",
             "v0", "nonneg_corr", "r2_lower", "r2_upper", "r2_status", "var_tau_lower", "var_tau_upper",
             "var_tau_neyman", "var_tau_clamped"},
            {}};
  Table curve{"rho_curve", {"estimator", "rho", "see", "r2"}, {}};
  Table late{"late_decomposition",
             {"estimator", "pi_c", "tau_c", "tau_c_wald", "s_tt_u", "s_dd_c", "see_c_lower",
              "see_c_upper_frechet", "see_c_upper_indep", "see_c_upper", "v1c", "v0c", "nonneg_corr",
              "r2_u_lower", "r2_u_upper", "r2_c_lower", "r2_c_upper", "r2_ux_lower", "r2_ux_upper"},
             {}};
  Table late_curve{"late_rho_curve", {"estimator", "rho", "see_c", "r2_u", "r2_c", "r2_ux"}, {}};
  bool any_late = false;

  for (auto m : methods) {
    const std::string name(to_string(m));
    if (is_late_method(m)) {
      if (!any_late) report.tables.push_back(compliance_table(compliance_proportions(data), report));
      any_late = true;
      const LateEstimate b = fit_late(m, data);
      const LateDecomposition dec = decompose_late(data, b, config.nonneg_corr, grid);
      late.add({name, dec.compliance.pi_c, dec.tau_c, dec.tau_c_wald, dec.s_tt_u, dec.s_dd_c,
                dec.see_c_lower, dec.see_c_upper_frechet, dec.see_c_upper_indep, dec.see_c_upper(),
                dec.v1c, dec.v0c, dec.assume_nonneg_corr, opt(dec.r2_u.lower), opt(dec.r2_u.upper),
                opt(dec.r2_c.lower), opt(dec.r2_c.upper), opt(dec.r2_ux.lower), opt(dec.r2_ux.upper)});
      for (const auto& p : dec.rho_curve) {
        late_curve.add({name, p.rho, p.see_c, opt(p.r2_u), opt(p.r2_c), opt(p.r2_ux)});
      }
      if (dec.s_dd_c_clamped) {
        report.warnings.push_back({"clamped", name + ": complier systematic variance was negative and set to 0"});
      }
      if (dec.cdfs_rearranged) {
        report.warnings.push_back({"rearranged_cdf", name + ": complier residual CDFs were clipped or made monotone"});
      }
      if (!dec.r2_c.upper || !dec.r2_c.lower) {
        report.warnings.push_back({"undefined_r2", name + ": complier R^2 has an undefined endpoint (0/0)"});
      }
    } else {
      const BetaEstimate b = fit_itt(m, data, config.cov_mode);
      const VariationDecomposition dec = decompose_itt(data, b, config.nonneg_corr, grid);
      const VarianceBounds vb = var_tau_bounds(data, dec);
      itt.add({name, dec.s_dd, dec.see_lower, dec.see_upper_frechet, dec.see_upper_indep, dec.see_upper(),
               dec.v1, dec.v0, dec.assume_nonneg_corr, opt(dec.r2.lower), opt(dec.r2.upper),
               str(to_string(dec.r2_status)), vb.var_lower, vb.var_upper, vb.neyman_conservative,
               vb.clamped});
      for (const auto& p : dec.rho_curve) curve.add({name, p.rho, p.see, opt(p.r2)});
      if (dec.r2_status != R2Status::ok) {
        report.warnings.push_back({"undefined_r2", name + ": R^2 status " + std::string(to_string(dec.r2_status))});
      }
      if (vb.clamped) {
        report.warnings.push_back({"clamped", name + ": a variance bound was negative and set to 0"});
      }
    }
  }
  report.tables.push_back(std::move(itt));
  report.tables.push_back(std::move(curve));
  if (any_late) {
    report.tables.push_back(std::move(late));
    report.tables.push_back(std::move(late_curve));
  }
}

void run_simulate(const AnalysisConfig& config, Report& report) {
  Table power{"power",
              {"scenario", "noncompliance", "n", "reps", "estimator", "rejections", "failures", "completed",
               "rate", "mc_se"},
              {}};
  const std::vector<EstimatorMethod> defaults =
      config.noncompliance ? kDefaultLate
                           : std::vector<EstimatorMethod>{EstimatorMethod::ri, EstimatorMethod::ols,
                                                          EstimatorMethod::ri_adjusted};
  const auto methods = pick_estimators(config, defaults);
  warn_noop(report, methods);
  if (!methods.empty()) {
    for (Eigen::Index n : config.n) {
      SimConfig sim;
      sim.scenario = config.scenario;
      sim.n = n;
      sim.reps = config.reps;
      sim.seed = config.seed;
      sim.noncompliance = config.noncompliance;
      sim.estimators = methods;
      sim.alpha = config.alpha;
      const SimResult result = power_study(sim);
      for (const auto& e : result.estimators) {
        power.add({str(to_string(sim.scenario)), sim.noncompliance, num(n), sim.reps, str(to_string(e.method)),
                   e.rejections, e.failures, e.completed, e.rate, e.mc_se});
        if (e.failures > 0) {
          report.warnings.push_back({"estimator_failures", std::string(to_string(e.method)) + " failed in " +
                                                               std::to_string(e.failures) + " of " +
                                                               std::to_string(sim.reps) + " replications at n = " +
                                                               std::to_string(n)});
        }
      }
    }
  }
  report.tables.push_back(std::move(power));
}

void run_fisher_cr(const AnalysisConfig& config, Report& report) {
  const Dataset data = load_input(config, report);
  report.tables.push_back(summary_table(data));
  std::vector<Vector> candidates = config.candidates;
  for (const Vector& c : candidates) {
    if (c.size() != data.k()) {
      throw Error(ErrorCode::invalid_input, "candidate has " + std::to_string(c.size()) +
                                                " entries but the design has " + std::to_string(data.k()) +
                                                " terms (intercept first)");
    }
  }
  if (candidates.empty()) {
    // Grid along one coordinate around the OLS fit, plus the slice of
    // constant effects (all non-intercept coordinates zero).
    const BetaEstimate ols = estimate_beta_ols(data);
    if (data.k() > 1) {
      if (config.grid_coord < 0 || config.grid_coord >= data.k()) {
        throw Error(ErrorCode::invalid_input, "--grid-coord is out of range");
      }
      candidates = coordinate_grid(ols.beta, ols.standard_errors(), config.grid_coord, config.grid_points);
    }
    const Vector neyman = estimate_beta_ri(data.with_covariates(Matrix(data.n(), 0))).standard_errors();
    double y1 = 0.0, y0 = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) (data.t.treated(i) ? y1 : y0) += data.y[i];
    Vector center = Vector::Zero(data.k());
    center[0] = y1 / static_cast<double>(data.t.n1()) - y0 / static_cast<double>(data.t.n0());
    Vector se = Vector::Zero(data.k());
    se[0] = neyman[0];
    const auto slice = coordinate_grid(center, se, 0, config.grid_points);
    candidates.insert(candidates.end(), slice.begin(), slice.end());
  }
  RandomizationOptions opts;
  opts.statistic = config.statistic;
  opts.draws = config.draws;
  opts.seed = config.seed;
  opts.alpha = config.alpha;
  const ConfidenceRegion cr = fisher_confidence_region(data, candidates, opts);

  Table region{"fisher_region", {"candidate"}, {}};
  for (const auto& name : data.x_names) region.columns.push_back("beta_" + name);
  for (const char* c : {"p_value", "accepted", "null_slice"}) region.columns.push_back(c);
  for (std::size_t c = 0; c < cr.candidates.size(); ++c) {
    std::vector<Cell> row{static_cast<long long>(c)};
    const Vector& b = cr.candidates[c];
    for (Eigen::Index j = 0; j < b.size(); ++j) row.emplace_back(b[j]);
    row.emplace_back(cr.p_values[c]);
    row.emplace_back(static_cast<bool>(cr.accepted[c]));
    row.emplace_back(b.size() < 2 || b.tail(b.size() - 1).cwiseAbs().maxCoeff() == 0.0);
    region.add(std::move(row));
  }
  Table summary{"fisher_summary",
                {"statistic", "draws", "alpha", "candidates", "accepted", "excludes_no_systematic_variation"},
                {}};
  summary.add({cr.statistic_name, config.draws, cr.alpha, static_cast<long long>(cr.candidates.size()),
               static_cast<long long>(cr.accepted_count()), cr.excludes_no_systematic_variation()});
  report.tables.push_back(std::move(region));
  report.tables.push_back(std::move(summary));
}

std::string join_estimators(const std::optional<std::vector<EstimatorMethod>>& methods) {
  if (!methods) return "default";
  std::string out;
  for (auto m : *methods) {
    if (!out.empty()) out += ';';
    out += to_string(m);
  }
  return out;
}

}  // namespace

Report run(const AnalysisConfig& config) {
  config.validate();
  Report report;
  report.command = std::string(to_string(config.command));
  auto& echo = report.config;
  echo.emplace_back("command", report.command);
  echo.emplace_back("input", config.input);
  echo.emplace_back("format", std::string(config.format == ReportFormat::json ? "json" : "csv"));
  echo.emplace_back("estimators", join_estimators(config.estimators));
  echo.emplace_back("alpha", config.alpha);
  echo.emplace_back("rho_grid", config.rho_grid);
  echo.emplace_back("nonneg_corr", config.nonneg_corr);
  echo.emplace_back("cov_mode", std::string(config.cov_mode == CovarianceMode::conservative
                                                 ? "conservative"
                                                 : "no_idiosyncratic"));
  echo.emplace_back("seed", static_cast<long long>(config.seed));
  echo.emplace_back("draws", config.draws);
  echo.emplace_back("statistic", std::string(to_string(config.statistic)));
  echo.emplace_back("scenario", std::string(to_string(config.scenario)));
  std::string ns;
  for (auto n : config.n) ns += (ns.empty() ? "" : ";") + std::to_string(n);
  echo.emplace_back("n", ns);
  echo.emplace_back("reps", config.reps);
  echo.emplace_back("noncompliance", config.noncompliance);

  switch (config.command) {
    case Command::analyze_itt: run_analyze_itt(config, report); break;
    case Command::analyze_late: run_analyze_late(config, report); break;
    case Command::decompose: run_decompose(config, report); break;
    case Command::simulate: run_simulate(config, report); break;
    case Command::fisher_cr: run_fisher_cr(config, report); break;
  }
  return report;
}

namespace {

nlohmann::ordered_json to_json(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> nlohmann::ordered_json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return nullptr;
          return v;
        } else {
          return v;
        }
      },
      cell);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string to_csv(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, long long>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return std::isfinite(v) ? format_number(v) : "";
        } else {
          return csv_escape(v);
        }
      },
      cell);
}

}  // namespace

void write_report(std::ostream& out, const Report& report, ReportFormat format) {
  if (format == ReportFormat::json) {
    nlohmann::ordered_json j;
    j["schema_version"] = report.schema_version;
    j["command"] = report.command;
    auto& config = j["config"] = nlohmann::ordered_json::object();
    for (const auto& [key, value] : report.config) config[key] = to_json(value);
    auto& warnings = j["warnings"] = nlohmann::ordered_json::array();
    for (const auto& w : report.warnings) warnings.push_back({{"code", w.code}, {"message", w.message}});
    auto& tables = j["tables"] = nlohmann::ordered_json::object();
    for (const Table& t : report.tables) {
      auto rows = nlohmann::ordered_json::array();
      for (const auto& row : t.rows) {
        nlohmann::ordered_json record = nlohmann::ordered_json::object();
        for (std::size_t c = 0; c < t.columns.size(); ++c) record[t.columns[c]] = to_json(row[c]);
        rows.push_back(std::move(record));
      }
      tables[t.name] = std::move(rows);
    }
    out << j.dump(2) << '\n';
    return;
  }
  out << "# schema_version," << report.schema_version << '\n';
  out << "# command," << report.command << "\n\n";
  out << "# config\nkey,value\n";
  for (const auto& [key, value] : report.config) out << key << ',' << to_csv(value) << '\n';
  out << "\n# warnings\ncode,message\n";
  for (const auto& w : report.warnings) out << w.code << ',' << csv_escape(w.message) << '\n';
  for (const Table& t : report.tables) {
    out << "\n# " << t.name << '\n';
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
    out << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << to_csv(row[c]);
      out << '\n';
    }
  }
}

void write_report(const Report& report, const std::string& path, ReportFormat format) {
  if (path.empty() || path == "-") {
    write_report(std::cout, report, format);
    std::cout.flush();
    if (!std::cout) throw Error(ErrorCode::io, "failed writing report to stdout");
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
  write_report(out, report, format);
  if (!out) throw Error(ErrorCode::io, "failed writing '" + path + "'");
}

}  // namespace hetfx
