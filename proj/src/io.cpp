#include "robustagg/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "robustagg/errors.hpp"

namespace robustagg::io {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw InvalidArgument(field + ": " + what);
}

void require_object(const Json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected a JSON object");
}

void reject_unknown_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) fail(where + "." + key, "unknown key");
  }
}

double number(const Json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) fail(where + "." + key, "missing");
  const Json& v = j.at(key);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  return v.get<double>();
}

double number_or(const Json& j, const std::string& where, const char* key, double fallback) {
  return j.contains(key) ? number(j, where, key) : fallback;
}

// Library validators name the field in their message; prefix the JSON path.
template <class T>
void checked(const T& value, const std::string& where) {
  try {
    validate(value);
  } catch (const InvalidArgument& e) {
    fail(where, e.what());
  }
}

Json prior_to_json(const PriorSource& p, bool as_policy) {
  switch (p.kind) {
    case PriorSource::Kind::ArithmeticMean:
      return "arithmetic_mean";
    case PriorSource::Kind::Known:
      return as_policy ? Json{{"known", p.value}} : Json(p.value);
    case PriorSource::Kind::Environment:
      return as_policy ? "env_prior" : "env";
  }
  return nullptr;
}

PriorSource prior_from_json(const Json& v, const std::string& where) {
  if (v.is_number()) return PriorSource::known(v.get<double>());
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "arithmetic_mean") return PriorSource::arithmetic_mean();
    if (s == "env" || s == "env_prior") return PriorSource::environment();
    fail(where, "expected \"arithmetic_mean\", \"env\", a number or {\"known\": mu}");
  }
  if (v.is_object() && v.size() == 1 && v.contains("known")) {
    if (!v.at("known").is_number()) fail(where + ".known", "expected a number");
    return PriorSource::known(v.at("known").get<double>());
  }
  fail(where, "expected \"arithmetic_mean\", \"env\", a number or {\"known\": mu}");
}

Json reports_or_null(const BinaryCIEnvironment& env) {
  Json out = Json::object();
  for (Expert e : {Expert::First, Expert::Second}) {
    Json pair = Json::array();
    for (Signal s : {Signal::Low, Signal::High}) {
      if (signal_prob(env, e, s) < kZeroProbability) {
        pair.push_back(nullptr);
      } else {
        pair.push_back(report(env, e, s));
      }
    }
    out[e == Expert::First ? "expert1" : "expert2"] = pair;
  }
  return out;
}

template <class Env>
Json candidates(const std::vector<Candidate<Env>>& cs) {
  Json arr = Json::array();
  for (const auto& c : cs) arr.push_back({{"value", c.value}, {"env", to_json(c.env)}});
  return arr;
}

template <class Env>
Json result_common(const BasicSearchResult<Env>& r) {
  Json trace = Json::array();
  for (const auto& t : r.refine_trace) trace.push_back({{"candidate", t.candidate}, {"pass", t.pass}, {"value", t.value}});
  return Json{{"value", r.value},
              {"argmax_env", to_json(r.argmax_env)},
              {"stage1_candidates", candidates(r.stage1_candidates)},
              {"refined_candidates", candidates(r.refined_candidates)},
              {"refine_trace", trace}};
}

Json closed_form_json(const ClosedForm& c) { return {{"expression", c.expression}, {"value", c.value}}; }

}  // namespace

Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("malformed JSON: ") + e.what());
  }
}

Json load_argument(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (arg[first] == '{' || arg[first] == '[')) return parse(arg);
  std::ifstream in(arg);
  if (!in) throw InvalidArgument("cannot open JSON file '" + arg + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

Json to_json(const BinaryCIEnvironment& env) {
  return {{"theta1", env.theta1}, {"theta2", env.theta2}, {"lambda2", env.lambda2}, {"p1_low", env.p1_low},
          {"p2_low", env.p2_low}, {"q1_low", env.q1_low}, {"q2_low", env.q2_low}};
}

BinaryCIEnvironment env_from_json(const Json& j) {
  require_object(j, "env");
  reject_unknown_keys(j, "env", {"theta1", "theta2", "lambda2", "p1_low", "p2_low", "q1_low", "q2_low"});
  BinaryCIEnvironment env{number(j, "env", "theta1"), number(j, "env", "theta2"), number(j, "env", "lambda2"),
                          number(j, "env", "p1_low"), number(j, "env", "p2_low"), number(j, "env", "q1_low"),
                          number(j, "env", "q2_low")};
  checked(env, "env");
  return env;
}

Json to_json(const BlackwellEnvironment& env) {
  return {{"theta1", env.theta1}, {"theta2", env.theta2}, {"lambda2", env.lambda2}, {"r_low", env.r_low},
          {"r_high", env.r_high}, {"g_LL", env.g_LL},     {"g_HL", env.g_HL}};
}

BlackwellEnvironment blackwell_env_from_json(const Json& j) {
  require_object(j, "env");
  reject_unknown_keys(j, "env", {"theta1", "theta2", "lambda2", "r_low", "r_high", "g_LL", "g_HL"});
  BlackwellEnvironment env{number(j, "env", "theta1"), number(j, "env", "theta2"), number(j, "env", "lambda2"),
                           number(j, "env", "r_low"),  number(j, "env", "r_high"), number(j, "env", "g_LL"),
                           number(j, "env", "g_HL")};
  checked(env, "env");
  return env;
}

Json to_json(const MixtureEnvironment& mix) {
  Json comps = Json::array();
  for (const auto& c : mix.components) comps.push_back({{"weight", c.weight}, {"env", to_json(c.env)}});
  return {{"components", comps}};
}

MixtureEnvironment mixture_from_json(const Json& j) {
  require_object(j, "mixture");
  reject_unknown_keys(j, "mixture", {"components"});
  if (!j.contains("components") || !j.at("components").is_array()) fail("mixture.components", "expected an array");
  MixtureEnvironment mix;
  std::size_t i = 0;
  for (const auto& c : j.at("components")) {
    const std::string where = "mixture.components[" + std::to_string(i++) + "]";
    require_object(c, where);
    reject_unknown_keys(c, where, {"weight", "env"});
    if (!c.contains("env")) fail(where + ".env", "missing");
    mix.components.push_back(MixtureComponent{number(c, where, "weight"), env_from_json(c.at("env"))});
  }
  checked(mix, "mixture");
  return mix;
}

Json to_json(const AggregatorSpec& spec) {
  return std::visit(
      overloaded{
          [](const rules::LogOdds& r) { return Json{{"rule", "log_odds"}, {"alpha", r.alpha}}; },
          [](const rules::GeneralizedLogOdds& r) {
            return Json{{"rule", "gen_log_odds"}, {"alpha", r.alpha}, {"gamma", r.gamma}, {"mu", prior_to_json(r.mu, false)}};
          },
          [](const rules::SimpleAverage&) { return Json{{"rule", "simple_average"}}; },
          [](const rules::AveragePrior& r) {
            return Json{{"rule", "average_prior"}, {"mu_policy", prior_to_json(r.mu_policy, true)}};
          },
          [](const rules::HeuristicPrior&) { return Json{{"rule", "heuristic_prior"}}; },
          [](const rules::KWW& r) {
            return Json{{"rule", "kww"}, {"lambda", r.lambda}, {"mu_policy", prior_to_json(r.mu_policy, true)}};
          },
          [](const rules::PrecisionWeighted&) { return Json{{"rule", "precision_weighted"}}; },
          [](const rules::Constant& r) { return Json{{"rule", "constant"}, {"value", r.c}}; },
          [](const rules::FollowExpert& r) { return Json{{"rule", "follow_expert"}, {"expert", r.expert}}; },
      },
      spec);
}

AggregatorSpec spec_from_json(const Json& j) {
  require_object(j, "spec");
  if (!j.contains("rule") || !j.at("rule").is_string()) fail("spec.rule", "missing or not a string");
  const auto rule = j.at("rule").get<std::string>();
  AggregatorSpec spec;
  if (rule == "log_odds") {
    reject_unknown_keys(j, "spec", {"rule", "alpha"});
    spec = rules::LogOdds{number(j, "spec", "alpha")};
  } else if (rule == "gen_log_odds") {
    reject_unknown_keys(j, "spec", {"rule", "alpha", "gamma", "mu"});
    if (!j.contains("mu")) fail("spec.mu", "missing");
    spec = rules::GeneralizedLogOdds{number(j, "spec", "alpha"), number(j, "spec", "gamma"),
                                     prior_from_json(j.at("mu"), "spec.mu")};
  } else if (rule == "simple_average") {
    reject_unknown_keys(j, "spec", {"rule"});
    spec = rules::SimpleAverage{};
  } else if (rule == "average_prior") {
    reject_unknown_keys(j, "spec", {"rule", "mu_policy"});
    spec = rules::AveragePrior{j.contains("mu_policy") ? prior_from_json(j.at("mu_policy"), "spec.mu_policy")
                                                       : PriorSource::arithmetic_mean()};
  } else if (rule == "heuristic_prior") {
    reject_unknown_keys(j, "spec", {"rule"});
    spec = rules::HeuristicPrior{};
  } else if (rule == "kww") {
    reject_unknown_keys(j, "spec", {"rule", "lambda", "mu_policy"});
    spec = rules::KWW{number(j, "spec", "lambda"), j.contains("mu_policy")
                                                       ? prior_from_json(j.at("mu_policy"), "spec.mu_policy")
                                                       : PriorSource::arithmetic_mean()};
  } else if (rule == "precision_weighted") {
    reject_unknown_keys(j, "spec", {"rule"});
    spec = rules::PrecisionWeighted{};
  } else if (rule == "constant") {
    reject_unknown_keys(j, "spec", {"rule", "value"});
    spec = rules::Constant{number_or(j, "spec", "value", 0.5)};
  } else if (rule == "follow_expert") {
    reject_unknown_keys(j, "spec", {"rule", "expert"});
    const double e = number(j, "spec", "expert");
    if (e != 1.0 && e != 2.0) fail("spec.expert", "must be 1 or 2");
    spec = rules::FollowExpert{static_cast<int>(e)};
  } else {
    fail("spec.rule", "unknown rule '" + rule + "'");
  }
  checked(spec, "spec");
  return spec;
}

Json to_json(const SearchConfig& c) {
  return {{"n_starts", c.n_starts},
          {"local_iters", c.local_iters},
          {"refine_step", c.refine_step},
          {"refine_radius", c.refine_radius},
          {"rng_seed", c.rng_seed},
          {"n_workers", c.n_workers},
          {"top_k", c.top_k},
          {"max_refine_passes", c.max_refine_passes},
          {"interior_margin", c.interior_margin}};
}

SearchConfig config_from_json(const Json& j, SearchConfig base) {
  require_object(j, "config");
  reject_unknown_keys(j, "config", {"n_starts", "local_iters", "refine_step", "refine_radius", "rng_seed",
                                    "n_workers", "top_k", "max_refine_passes", "interior_margin"});
  auto integer = [&](const char* key, auto& dst) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number_integer()) fail(std::string("config.") + key, "expected an integer");
    dst = j.at(key).get<std::remove_reference_t<decltype(dst)>>();
  };
  integer("n_starts", base.n_starts);
  integer("local_iters", base.local_iters);
  integer("rng_seed", base.rng_seed);
  integer("n_workers", base.n_workers);
  integer("top_k", base.top_k);
  integer("max_refine_passes", base.max_refine_passes);
  base.refine_step = number_or(j, "config", "refine_step", base.refine_step);
  base.refine_radius = number_or(j, "config", "refine_radius", base.refine_radius);
  base.interior_margin = number_or(j, "config", "interior_margin", base.interior_margin);
  try {
    validate(base);
  } catch (const InvalidArgument& e) {
    fail("config", e.what());
  }
  return base;
}

std::string to_string(DomainMode mode) {
  switch (mode) {
    case DomainMode::UnknownState:
      return "unknown";
    case DomainMode::KnownZeroOne:
      return "known01";
    case DomainMode::KnownMarginalMean:
      return "known_marginal";
  }
  return "unknown";
}

SearchDomain domain_from_string(const std::string& name) {
  if (name == "unknown") return SearchDomain::unknown_state();
  if (name == "known01") return SearchDomain::known_zero_one();
  if (name == "known_marginal") return SearchDomain::known_marginal_mean();
  throw InvalidArgument("domain: expected unknown, known01 or known_marginal, got '" + name + "'");
}

Json to_json(const SearchResult& r) {
  Json out = result_common(r);
  out["argmax_prior_mean"] = prior_mean(r.argmax_env);
  out["argmax_reports"] = reports_or_null(r.argmax_env);
  return out;
}

Json to_json(const BlackwellSearchResult& r) {
  Json out = result_common(r);
  out["argmax_prior_mean"] = prior_mean(r.argmax_env);
  return out;
}

Json to_json(const RegretReport& report) {
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"profile", to_string(r.profile)},
                    {"prob", r.joint_prob},
                    {"x1", r.x1},
                    {"x2", r.x2},
                    {"bayes", r.bayes_target},
                    {"output", r.aggregator_output},
                    {"sq_error", r.squared_error}});
  }
  return {{"total", report.total}, {"rows", rows}};
}

std::string to_csv(const RegretReport& report) {
  std::ostringstream out;
  out << "profile,prob,x1,x2,bayes,output,sq_error\n";
  for (const auto& r : report.rows) {
    out << to_string(r.profile) << ',' << fixed6(r.joint_prob) << ',' << fixed6(r.x1) << ',' << fixed6(r.x2) << ','
        << fixed6(r.bayes_target) << ',' << fixed6(r.aggregator_output) << ',' << fixed6(r.squared_error) << '\n';
  }
  return out.str();
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream out;
  out << "alpha,worst_case_regret,theta1,theta2,lambda2,p1_low,p2_low,q1_low,q2_low\n";
  for (const auto& p : points) {
    const auto& e = p.argmax_env;
    out << fixed6(p.alpha) << ',' << fixed6(p.worst_case_value) << ',' << fixed6(e.theta1) << ',' << fixed6(e.theta2)
        << ',' << fixed6(e.lambda2) << ',' << fixed6(e.p1_low) << ',' << fixed6(e.p2_low) << ',' << fixed6(e.q1_low)
        << ',' << fixed6(e.q2_low) << '\n';
  }
  return out.str();
}

Json to_json(const MixtureCertificate& cert) {
  Json comps = Json::array();
  for (const auto& c : cert.components) {
    Json joint = Json::object(), bayes = Json::object();
    for (std::size_t k = 0; k < kAllProfiles.size(); ++k) {
      joint[to_string(kAllProfiles[k])] = c.joint_probs[k];
      if (c.joint_probs[k] > 0.0) bayes[to_string(kAllProfiles[k])] = c.bayes[k];
    }
    comps.push_back({{"reports", {{"expert1", c.reports[0]}, {"expert2", c.reports[1]}}},
                     {"joint_probs", joint},
                     {"bayes", bayes}});
  }
  Json responder = Json::array();
  for (const auto& e : cert.expected_responder) responder.push_back({{"x1", e.x1}, {"x2", e.x2}, {"forecast", e.forecast}});
  return {{"name", cert.name},
          {"mixture", to_json(cert.mixture)},
          {"expected", comps},
          {"expected_responder", responder},
          {"closed_form", closed_form_json(cert.closed_form)},
          {"identical_marginals", cert.identical_marginals}};
}

Json to_json(const JointStructure& js) {
  Json cond = Json::array();
  for (const auto& row : js.conditional) {
    Json r = Json::object();
    for (std::size_t k = 0; k < kAllProfiles.size(); ++k) r[to_string(kAllProfiles[k])] = row[k];
    cond.push_back(r);
  }
  return {{"theta", js.theta}, {"prior", js.prior}, {"conditional", cond}};
}

Json to_json(const VerificationReport& rep) {
  Json fields = Json::array();
  for (const auto& f : rep.fields) {
    fields.push_back(
        {{"field", f.field}, {"max_deviation", f.max_deviation}, {"tolerance", f.tolerance}, {"passed", f.passed}});
  }
  return {{"certificate", rep.certificate},
          {"closed_form", closed_form_json(rep.closed_form)},
          {"computed_value", rep.computed_value},
          {"passed", rep.passed},
          {"max_deviation", rep.max_deviation},
          {"fields", fields}};
}

Json to_json(const GapReport& rep) {
  Json entries = Json::array();
  for (const auto& e : rep.entries) {
    entries.push_back({{"setting", e.setting},
                       {"structure", e.structure},
                       {"lower", e.lower},
                       {"lower_expression", e.lower_expression},
                       {"lower_source", e.lower_source},
                       {"upper", e.upper},
                       {"upper_expression", e.upper_expression},
                       {"upper_source", e.upper_source}});
  }
  return {{"entries", entries},
          {"unknown_lower", rep.unknown_lower},
          {"known_zero_one_upper", rep.known_zero_one_upper},
          {"separation_margin", rep.separation_margin},
          {"separated", rep.separated}};
}

std::string fixed6(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v == 0.0 ? 0.0 : v);
  return buf;
}

}  // namespace robustagg::io
