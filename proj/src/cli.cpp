#include "robustagg/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "robustagg/certificates.hpp"
#include "robustagg/errors.hpp"
#include "robustagg/regret.hpp"

namespace robustagg::cli {

namespace {

using Clock = std::chrono::steady_clock;

struct Options {
  std::string spec;
  std::string env;
  std::string domain = "unknown";
  std::string out;
  std::string format;
  std::string which = "all";
  std::string family = "log_odds";
  std::string config_file;
  double x1 = 0.0;
  double x2 = 0.0;
  double grid = 0.05;
  double alpha_min = 0.0;
  double alpha_max = 1.0;
  double tol = 1e-12;
  // search flags, set only when given on the command line
  std::optional<double> refine_step;
  std::optional<double> refine_radius;
  std::optional<int> starts;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;
  int table = 0;
  int figure = 0;
  bool fast = false;
  bool blackwell = false;
  Clock::time_point started = Clock::now();
};

int default_jobs() {
  if (const char* v = std::getenv("ROBUSTAGG_JOBS")) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end != v && *end == '\0' && n > 0) return static_cast<int>(n);
    throw InvalidArgument("ROBUSTAGG_JOBS must be a positive integer");
  }
  return 1;
}

SearchConfig resolve_config(const Options& o) {
  SearchConfig c;
  if (!o.config_file.empty()) c = io::config_from_json(io::load_argument(o.config_file), c);
  if (o.starts) c.n_starts = *o.starts;
  if (o.refine_step) c.refine_step = *o.refine_step;
  if (o.refine_radius) c.refine_radius = *o.refine_radius;
  if (o.seed) c.rng_seed = *o.seed;
  c.n_workers = o.jobs ? *o.jobs : default_jobs();
  if (c.n_workers < 1) throw InvalidArgument("--jobs must be at least 1");
  if (o.fast) c.n_starts = std::max(1, c.n_starts / 2);
  validate(c);
  return c;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write '" + path + "'");
  f << text;
}

struct Emitter {
  const Options& opts;
  std::string command;
  io::Json config;
  std::uint64_t seed = 0;

  void operator()(const std::string& text, std::ostream& out) const {
    if (opts.out.empty()) {
      out << text;
      return;
    }
    write_file(opts.out, text);
    RunManifest m;
    m.command = command;
    m.config = config;
    m.rng_seed = seed;
    m.artifacts = {opts.out};
    m.duration_seconds = std::chrono::duration<double>(Clock::now() - opts.started).count();
    write_file(manifest_path(opts.out), to_json(m).dump(2) + "\n");
    out << "wrote " << opts.out << "\n";
  }
};

std::string format_or(const Options& o, const char* fallback) { return o.format.empty() ? fallback : o.format; }

std::string sig12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// --- commands -----------------------------------------------------------------

int cmd_aggregate(const Options& o, std::ostream& out) {
  if (!(o.x1 >= 0.0 && o.x1 <= 1.0 && o.x2 >= 0.0 && o.x2 <= 1.0)) {
    throw InvalidArgument("reports must lie in [0, 1]");
  }
  const auto spec = io::spec_from_json(io::load_argument(o.spec));
  out << sig12(aggregate(spec, o.x1, o.x2)) << "\n";
  return kOk;
}

int cmd_regret(const Options& o, std::ostream& out) {
  const auto spec = io::spec_from_json(io::load_argument(o.spec));
  const auto env = io::env_from_json(io::load_argument(o.env));
  const auto report = expected_regret(spec, env);
  const auto fmt = format_or(o, "json");
  Emitter emit{o, "regret", {{"spec", io::to_json(spec)}, {"env", io::to_json(env)}}, 0};
  if (fmt == "csv") {
    emit(io::to_csv(report), out);
  } else if (fmt == "json") {
    emit(io::to_json(report).dump(2) + "\n", out);
  } else {
    std::ostringstream md;
    md << "| profile | prob | x1 | x2 | bayes | output | sq_error |\n|---|---|---|---|---|---|---|\n";
    for (const auto& r : report.rows) {
      md << "| " << to_string(r.profile) << " | " << io::fixed6(r.joint_prob) << " | " << io::fixed6(r.x1) << " | "
         << io::fixed6(r.x2) << " | " << io::fixed6(r.bayes_target) << " | " << io::fixed6(r.aggregator_output) << " | "
         << io::fixed6(r.squared_error) << " |\n";
    }
    md << "\ntotal regret: " << io::fixed6(report.total) << "\n";
    emit(md.str(), out);
  }
  return kOk;
}

int cmd_worst_case(const Options& o, std::ostream& out) {
  const auto spec = io::spec_from_json(io::load_argument(o.spec));
  const auto config = resolve_config(o);
  io::Json doc{{"spec", io::to_json(spec)}};
  if (o.blackwell) {
    doc["structure"] = "blackwell";
    doc["config"] = io::to_json(config);
    doc["result"] = io::to_json(blackwell_worst_case(spec, config));
  } else {
    const auto domain = io::domain_from_string(o.domain);
    doc["domain"] = io::to_string(domain.mode);
    doc["config"] = io::to_json(config);
    doc["result"] = io::to_json(worst_case_regret(spec, domain, config));
  }
  Emitter emit{o, "worst-case", {{"spec", doc["spec"]}, {"config", doc["config"]}}, config.rng_seed};
  if (format_or(o, "json") == "json") {
    emit(doc.dump(2) + "\n", out);
  } else {
    emit("worst_case_regret," + io::fixed6(doc["result"]["value"].get<double>()) + "\n", out);
  }
  return kOk;
}

std::string sweep_output(const std::vector<SweepPoint>& points, const std::string& fmt) {
  if (fmt == "json") {
    io::Json arr = io::Json::array();
    for (const auto& p : points) {
      arr.push_back({{"alpha", p.alpha}, {"worst_case_regret", p.worst_case_value}, {"argmax_env", io::to_json(p.argmax_env)}});
    }
    return arr.dump(2) + "\n";
  }
  if (fmt == "md") {
    std::ostringstream md;
    md << "| alpha | worst_case_regret |\n|---|---|\n";
    for (const auto& p : points) md << "| " << io::fixed6(p.alpha) << " | " << io::fixed6(p.worst_case_value) << " |\n";
    return md.str();
  }
  return io::sweep_csv(points);
}

int cmd_sweep(const Options& o, std::ostream& out) {
  if (o.family != "log_odds") throw InvalidArgument("--family: only log_odds can be swept");
  const auto domain = io::domain_from_string(o.domain);
  const auto config = resolve_config(o);
  const auto alphas = make_grid(o.alpha_min, o.alpha_max, o.grid);
  const auto points = sweep_alpha(domain, alphas, config);
  Emitter emit{o,
               "sweep",
               {{"domain", io::to_string(domain.mode)}, {"grid", o.grid}, {"config", io::to_json(config)}},
               config.rng_seed};
  emit(sweep_output(points, format_or(o, "csv")), out);
  return kOk;
}

int cmd_certify(const Options& o, std::ostream& out) {
  if (!(o.tol > 0.0)) throw InvalidArgument("--tol must be positive");
  std::vector<VerificationReport> reports;
  if (o.which == "unknown" || o.which == "all") reports.push_back(check_certificate(build_unknown_state_certificate(), o.tol));
  if (o.which == "known_marginal" || o.which == "all") {
    reports.push_back(check_certificate(build_known_marginal_certificate(), o.tol));
  }
  if (o.which == "xor" || o.which == "all") reports.push_back(check_xor_certificate(build_xor_certificate(), o.tol));
  const bool ok = std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.passed; });

  Emitter emit{o, "certify", {{"which", o.which}, {"tol", o.tol}}, 0};
  if (format_or(o, "md") == "json") {
    io::Json arr = io::Json::array();
    for (const auto& r : reports) arr.push_back(io::to_json(r));
    emit(io::Json{{"passed", ok}, {"certificates", arr}}.dump(2) + "\n", out);
  } else {
    std::ostringstream text;
    for (const auto& r : reports) {
      char dev[32];
      std::snprintf(dev, sizeof dev, "%.3g", r.max_deviation);
      text << r.certificate << ": " << (r.passed ? "PASS" : "FAIL") << "  value " << io::fixed6(r.computed_value)
           << " = " << r.closed_form.expression << "  max deviation " << dev << "\n";
      for (const auto& f : r.fields) {
        if (!f.passed) text << "  field " << f.field << " failed\n";
      }
    }
    emit(text.str(), out);
  }
  return ok ? kOk : kVerificationFailure;
}

std::string table_output(const std::vector<TableResult>& rows, const std::string& fmt) {
  auto value = [](const TableResult& r) { return r.value ? io::fixed6(*r.value) : "FAILED"; };
  std::ostringstream s;
  if (fmt == "json") {
    io::Json arr = io::Json::array();
    for (const auto& r : rows) {
      io::Json row{{"aggregator", r.row.label},
                   {"parameter", r.row.parameter},
                   {"spec", io::to_json(r.row.spec)},
                   {"domain", io::to_string(r.row.domain.mode)},
                   {"reference", r.row.reference}};
      row["worst_case_regret"] = r.value ? io::Json(*r.value) : io::Json(nullptr);
      if (!r.error.empty()) row["error"] = r.error;
      arr.push_back(row);
    }
    return arr.dump(2) + "\n";
  }
  if (fmt == "csv") {
    s << "aggregator,parameter,domain,worst_case_regret,reference\n";
    for (const auto& r : rows) {
      s << r.row.label << ',' << r.row.parameter << ',' << io::to_string(r.row.domain.mode) << ',' << value(r) << ','
        << io::fixed6(r.row.reference) << '\n';
    }
    return s.str();
  }
  s << "| aggregator | parameter | domain | worst-case regret | reference |\n|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    s << "| " << r.row.label << " | " << r.row.parameter << " | " << io::to_string(r.row.domain.mode) << " | "
      << value(r) << " | " << io::fixed6(r.row.reference) << " |\n";
  }
  return s.str();
}

std::string gap_output(const GapReport& g, const std::string& fmt) {
  if (fmt == "json") return io::to_json(g).dump(2) + "\n";
  std::ostringstream s;
  if (fmt == "csv") {
    s << "setting,structure,lower,lower_expression,lower_source,upper,upper_source\n";
    for (const auto& e : g.entries) {
      s << e.setting << ',' << e.structure << ',' << io::fixed6(e.lower) << ',' << e.lower_expression << ','
        << e.lower_source << ',' << io::fixed6(e.upper) << ',' << e.upper_source << '\n';
    }
    return s.str();
  }
  s << "| setting | structure | lower bound | expression | source | upper bound | source |\n"
       "|---|---|---|---|---|---|---|\n";
  for (const auto& e : g.entries) {
    s << "| " << e.setting << " | " << e.structure << " | " << io::fixed6(e.lower) << " | " << e.lower_expression
      << " | " << e.lower_source << " | " << io::fixed6(e.upper) << " | " << e.upper_source << " |\n";
  }
  s << "\nunknown-state lower bound " << io::fixed6(g.unknown_lower) << " vs known {0,1} upper bound "
    << io::fixed6(g.known_zero_one_upper) << ": margin " << io::fixed6(g.separation_margin)
    << (g.separated ? " (separated)" : " (NOT separated)") << "\n";
  return s.str();
}

int cmd_reproduce(const Options& o, std::ostream& out) {
  if ((o.table == 0) == (o.figure == 0)) throw InvalidArgument("give exactly one of --table or --figure");
  const auto config = resolve_config(o);
  io::Json manifest_config{{"config", io::to_json(config)}, {"fast", o.fast}};

  if (o.figure != 0) {
    auto [domain, alphas] = figure_grid(o.figure, o.grid);
    manifest_config["figure"] = o.figure;
    manifest_config["grid"] = o.grid;
    const auto points = sweep_alpha(domain, alphas, config);
    Emitter{o, "reproduce", manifest_config, config.rng_seed}(sweep_output(points, format_or(o, "csv")), out);
    return kOk;
  }

  manifest_config["table"] = o.table;
  const auto fmt = format_or(o, "md");
  if (o.table == 1) {
    SearchedUpperBounds ub;
    ub.unknown_state = worst_case_regret(rules::LogOdds{0.585}, SearchDomain::unknown_state(), config).value;
    ub.known_zero_one = worst_case_regret(rules::LogOdds{0.5168}, SearchDomain::known_zero_one(), config).value;
    ub.known_marginal = worst_case_regret(rules::GeneralizedLogOdds{0.656089, 0.498268, PriorSource::environment()},
                                          SearchDomain::known_marginal_mean(), config)
                            .value;
    Emitter{o, "reproduce", manifest_config, config.rng_seed}(gap_output(lower_bound_gap_report(ub), fmt), out);
    return kOk;
  }
  const auto rows = run_table(o.table, config);
  Emitter{o, "reproduce", manifest_config, config.rng_seed}(table_output(rows, fmt), out);
  const bool all_ok = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.value.has_value(); });
  return all_ok ? kOk : kVerificationFailure;
}

void add_search_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--starts", o.starts, "Number of random starts")->check(CLI::PositiveNumber);
  cmd->add_option("--refine-step", o.refine_step, "Refinement grid step")->check(CLI::PositiveNumber);
  cmd->add_option("--refine-radius", o.refine_radius, "Refinement radius")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--jobs", o.jobs, "Worker threads (default: $ROBUSTAGG_JOBS or 1)")->check(CLI::PositiveNumber);
  cmd->add_option("--config", o.config_file, "SearchConfig JSON (inline or file)");
  cmd->add_flag("--fast", o.fast, "Halve the number of starts");
}

void add_output_flags(CLI::App* cmd, Options& o, std::vector<std::string> formats) {
  cmd->add_option("--out", o.out, "Write output to this file (a manifest is written next to it)");
  cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember(std::move(formats)));
}

}  // namespace

io::Json to_json(const RunManifest& m) {
  return {{"command", m.command},     {"config", m.config},
          {"rng_seed", m.rng_seed},   {"artifacts", m.artifacts},
          {"duration_seconds", m.duration_seconds}, {"version", m.version}};
}

std::string manifest_path(const std::string& artifact) { return artifact + ".manifest.json"; }

std::vector<TableRow> table_rows(int table) {
  const auto am = PriorSource::arithmetic_mean();
  const auto env = PriorSource::environment();
  switch (table) {
    case 2: {
      const auto d = SearchDomain::unknown_state();
      return {{"simple_average", "-", rules::SimpleAverage{}, d, 0.0625},
              {"average_prior", "mu=(x1+x2)/2", rules::AveragePrior{am}, d, 0.0311},
              {"heuristic_prior", "-", rules::HeuristicPrior{}, d, 0.0303},
              {"kww", "lambda=0.8", rules::KWW{0.8, am}, d, 0.0298},
              {"log_odds", "alpha=0.585", rules::LogOdds{0.585}, d, 0.025512}};
    }
    case 4: {
      const auto d = SearchDomain::known_zero_one();
      return {{"simple_average", "-", rules::SimpleAverage{}, d, 0.0625},
              {"average_prior", "mu=(x1+x2)/2", rules::AveragePrior{am}, d, 0.0260},
              {"heuristic_prior", "-", rules::HeuristicPrior{}, d, 0.0250},
              {"kww", "lambda=1", rules::KWW{1.0, am}, d, 0.0260},
              {"log_odds", "alpha=0.5168", rules::LogOdds{0.5168}, d, 0.022599}};
    }
    case 6: {
      const auto d = SearchDomain::known_marginal_mean();
      return {{"prior_mean", "-", rules::GeneralizedLogOdds{0.0, -1.0, env}, d, 0.25},
              {"standard_bayes", "mu=prior", rules::AveragePrior{env}, d, 0.0403},
              {"kww", "lambda=0.8, mu=prior", rules::KWW{0.8, env}, d, 0.0389},
              {"gen_log_odds", "alpha=0.656089, gamma=0.498268", rules::GeneralizedLogOdds{0.656089, 0.498268, env}, d,
               0.022763}};
    }
    default:
      throw InvalidArgument("--table must be 1, 2, 4 or 6");
  }
}

std::vector<TableResult> run_table(int table, const SearchConfig& config) {
  std::vector<TableResult> out;
  for (const auto& row : table_rows(table)) {
    TableResult r{row, std::nullopt, ""};
    try {
      r.value = worst_case_regret(row.spec, row.domain, config).value;
    } catch (const Error& e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::pair<SearchDomain, std::vector<double>> figure_grid(int figure, double step) {
  if (figure != 1 && figure != 2) throw InvalidArgument("--figure must be 1 or 2");
  auto alphas = make_grid(0.0, 1.0, step);
  alphas.push_back(figure == 1 ? 0.585 : 0.517);
  std::sort(alphas.begin(), alphas.end());
  alphas.erase(std::unique(alphas.begin(), alphas.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               alphas.end());
  return {figure == 1 ? SearchDomain::unknown_state() : SearchDomain::known_zero_one(), alphas};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust aggregation of two experts' forecasts: regret evaluation, worst-case search, certificates"};
  app.set_version_flag("--version", std::string(ROBUSTAGG_VERSION));
  app.require_subcommand(1);
  Options o;

  auto* agg = app.add_subcommand("aggregate", "Apply an aggregation rule to two reports");
  agg->add_option("--spec", o.spec, "Aggregator spec JSON (inline or file)")->required();
  agg->add_option("x1", o.x1, "Report of expert 1")->required();
  agg->add_option("x2", o.x2, "Report of expert 2")->required();

  auto* reg = app.add_subcommand("regret", "Per-profile regret of a rule on one environment");
  reg->add_option("--spec", o.spec, "Aggregator spec JSON (inline or file)")->required();
  reg->add_option("--env", o.env, "Environment JSON (inline or file)")->required();
  add_output_flags(reg, o, {"json", "csv", "md"});

  auto* wc = app.add_subcommand("worst-case", "Search for the worst-case environment of a rule");
  wc->add_option("--spec", o.spec, "Aggregator spec JSON (inline or file)")->required();
  wc->add_option("--domain", o.domain, "unknown, known01 or known_marginal")
      ->check(CLI::IsMember({"unknown", "known01", "known_marginal"}));
  wc->add_flag("--blackwell", o.blackwell, "Search Blackwell-ordered structures instead");
  add_search_flags(wc, o);
  add_output_flags(wc, o, {"json", "csv"});

  auto* sw = app.add_subcommand("sweep", "Worst-case regret of log-odds rules over an alpha grid");
  sw->add_option("--domain", o.domain, "unknown, known01 or known_marginal")
      ->check(CLI::IsMember({"unknown", "known01", "known_marginal"}));
  sw->add_option("--family", o.family, "Rule family (log_odds)");
  sw->add_option("--grid", o.grid, "Alpha grid step");
  sw->add_option("--alpha-min", o.alpha_min, "Smallest alpha");
  sw->add_option("--alpha-max", o.alpha_max, "Largest alpha");
  add_search_flags(sw, o);
  add_output_flags(sw, o, {"csv", "json", "md"});

  auto* cert = app.add_subcommand("certify", "Verify the lower-bound certificates");
  cert->add_option("--which", o.which, "unknown, known_marginal, xor or all")
      ->check(CLI::IsMember({"unknown", "known_marginal", "xor", "all"}));
  cert->add_option("--tol", o.tol, "Verification tolerance");
  add_output_flags(cert, o, {"json", "md"});

  auto* rep = app.add_subcommand("reproduce", "Regenerate a comparison table or sensitivity curve");
  rep->add_option("--table", o.table, "1, 2, 4 or 6")->check(CLI::IsMember({1, 2, 4, 6}));
  rep->add_option("--figure", o.figure, "1 or 2")->check(CLI::IsMember({1, 2}));
  rep->add_option("--grid", o.grid, "Alpha grid step for figures");
  add_search_flags(rep, o);
  add_output_flags(rep, o, {"md", "csv", "json"});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  o.started = Clock::now();
  try {
    if (*agg) return cmd_aggregate(o, out);
    if (*reg) return cmd_regret(o, out);
    if (*wc) return cmd_worst_case(o, out);
    if (*sw) return cmd_sweep(o, out);
    if (*cert) return cmd_certify(o, out);
    if (*rep) return cmd_reproduce(o, out);
  } catch (const InfeasibleDomain& e) {
    err << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const CertificateMismatch& e) {
    err << "verification failed: " << e.what() << "\n";
    return kVerificationFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace robustagg::cli
