#include "robustagg/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace robustagg {

namespace {

const double kSqrt5 = std::sqrt(5.0);

std::size_t profile_index(SignalProfile p) {
  return static_cast<std::size_t>(p.s1 == Signal::High) * 2 + static_cast<std::size_t>(p.s2 == Signal::High);
}

void record(VerificationReport& rep, const std::string& field, double deviation, double tol) {
  const bool ok = deviation <= tol;
  rep.fields.push_back(FieldCheck{field, deviation, tol, ok});
  rep.passed = rep.passed && ok;
  rep.max_deviation = std::max(rep.max_deviation, deviation);
}

// Deviation is +inf when a quantity cannot be computed at all.
template <class F>
double deviation_or_inf(F&& f) {
  try {
    return f();
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

MixtureComponent half(const BinaryCIEnvironment& env) { return MixtureComponent{0.5, env}; }

}  // namespace

void validate(const JointStructure& js) {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(js.prior[0]) || !unit(js.prior[1]) || std::abs(js.prior[0] + js.prior[1] - 1.0) > 1e-12) {
    throw InvalidArgument("joint structure prior must be a distribution");
  }
  for (const auto& row : js.conditional) {
    double total = 0.0;
    for (double v : row) {
      if (!unit(v)) throw InvalidArgument("joint structure conditional entries must lie in [0, 1]");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("joint structure conditional rows must sum to 1");
  }
}

double joint_prob(const JointStructure& js, SignalProfile profile) {
  const std::size_t k = profile_index(profile);
  return js.prior[0] * js.conditional[0][k] + js.prior[1] * js.conditional[1][k];
}

double report(const JointStructure& js, Expert expert, Signal signal) {
  CompensatedSum mass, weighted;
  for (int j = 0; j < 2; ++j) {
    for (SignalProfile p : kAllProfiles) {
      const Signal own = expert == Expert::First ? p.s1 : p.s2;
      if (own != signal) continue;
      const double w = js.prior[j] * js.conditional[j][profile_index(p)];
      mass.add(w);
      weighted.add(w * js.theta[j]);
    }
  }
  if (mass.value() < kZeroProbability) throw ZeroProbabilitySignal("signal never occurs in the joint structure");
  return weighted.value() / mass.value();
}

double bayes_forecast(const JointStructure& js, SignalProfile profile) {
  const std::size_t k = profile_index(profile);
  const double w0 = js.prior[0] * js.conditional[0][k];
  const double w1 = js.prior[1] * js.conditional[1][k];
  if (w0 + w1 < kZeroProbability) throw ZeroProbabilitySignal("profile never occurs in the joint structure");
  return (w0 * js.theta[0] + w1 * js.theta[1]) / (w0 + w1);
}

double joint_structure_regret(const AggregatorFn& f, const JointStructure& js) {
  validate(js);
  CompensatedSum total;
  for (SignalProfile p : kAllProfiles) {
    const double prob = joint_prob(js, p);
    if (prob < kZeroProbability) continue;
    const double gap = f(report(js, Expert::First, p.s1), report(js, Expert::Second, p.s2)) - bayes_forecast(js, p);
    total.add(prob * gap * gap);
  }
  return total.value();
}

double joint_structure_regret(const AggregatorSpec& spec, const JointStructure& js) {
  const AggregationContext ctx{js.prior[0] * js.theta[0] + js.prior[1] * js.theta[1]};
  return joint_structure_regret([&](double x1, double x2) { return aggregate(spec, x1, x2, ctx); }, js);
}

MixtureCertificate build_unknown_state_certificate() {
  // A: state 0 only ever sends Low; B: state 1 only ever sends High.
  const BinaryCIEnvironment a{0.0, 5.0 / 6.0, 0.5, 1.0, 1.0, 0.25, 0.25};
  const BinaryCIEnvironment b{1.0 / 6.0, 1.0, 0.5, 0.75, 0.75, 0.0, 0.0};
  const double lo = 1.0 / 6.0;
  const double hi = 5.0 / 6.0;

  MixtureCertificate cert;
  cert.name = "unknown_state";
  cert.mixture.components = {half(a), half(b)};

  ComponentExpectation ea;
  ea.reports = {{{lo, hi}, {lo, hi}}};
  ea.joint_probs = {17.0 / 32.0, 3.0 / 32.0, 3.0 / 32.0, 9.0 / 32.0};
  ea.bayes = {5.0 / 102.0, hi, hi, hi};
  ComponentExpectation eb;
  eb.reports = ea.reports;
  eb.joint_probs = {9.0 / 32.0, 3.0 / 32.0, 3.0 / 32.0, 17.0 / 32.0};
  eb.bayes = {lo, lo, lo, 97.0 / 102.0};
  cert.components = {ea, eb};

  cert.expected_responder = {
      {lo, lo, 7.0 / 78.0, 0.0},
      {lo, hi, 0.5, 0.0},
      {hi, lo, 0.5, 0.0},
      {hi, hi, 71.0 / 78.0, 0.0},
  };
  cert.closed_form = {31.0 / 1326.0, "31/1326"};
  return cert;
}

MixtureCertificate build_known_marginal_certificate() {
  const double lo = (3.0 - kSqrt5) / 4.0;
  const double hi = (1.0 + kSqrt5) / 4.0;
  // A: the high state always sends High; B: the low state always sends Low.
  const BinaryCIEnvironment a{lo, 1.0, (3.0 - kSqrt5) / 2.0, hi, hi, 0.0, 0.0};
  const BinaryCIEnvironment b{0.0, hi, (kSqrt5 - 1.0) / 2.0, 1.0, 1.0, lo, lo};

  MixtureCertificate cert;
  cert.name = "known_marginal";
  cert.mixture.components = {half(a), half(b)};
  cert.identical_marginals = true;

  const double same = (1.0 + kSqrt5) / 8.0;
  const double mixed = (3.0 - kSqrt5) / 8.0;
  ComponentExpectation ea;
  ea.reports = {{{lo, hi}, {lo, hi}}};
  ea.joint_probs = {same, mixed, mixed, same};
  ea.bayes = {lo, lo, lo, (15.0 - 5.0 * kSqrt5) / 4.0};
  ComponentExpectation eb;
  eb.reports = ea.reports;
  eb.joint_probs = ea.joint_probs;
  eb.bayes = {(5.0 * kSqrt5 - 11.0) / 4.0, hi, hi, hi};
  cert.components = {ea, eb};

  cert.expected_responder = {
      {lo, lo, (kSqrt5 - 2.0) / 2.0, 0.0},
      {lo, hi, 0.5, 0.0},
      {hi, lo, 0.5, 0.0},
      {hi, hi, (4.0 - kSqrt5) / 2.0, 0.0},
  };
  cert.closed_form = {(5.0 * kSqrt5 - 11.0) / 8.0, "(5*sqrt(5)-11)/8"};
  return cert;
}

JointStructure build_xor_certificate() {
  JointStructure js;
  js.theta = {0.0, 1.0};
  js.prior = {0.5, 0.5};
  // state 0: signals agree; state 1: signals differ
  js.conditional[0] = {0.5, 0.0, 0.0, 0.5};
  js.conditional[1] = {0.0, 0.5, 0.5, 0.0};
  return js;
}

std::array<std::array<std::pair<double, double>, 2>, 2> marginal_reports(const BinaryCIEnvironment& env) {
  std::array<std::array<std::pair<double, double>, 2>, 2> out{};
  for (Expert e : {Expert::First, Expert::Second}) {
    auto& row = out[e == Expert::First ? 0 : 1];
    int k = 0;
    for (Signal s : {Signal::Low, Signal::High}) {
      const double mass = signal_prob(env, e, s);
      row[k++] = {mass < kZeroProbability ? prior_mean(env) : report(env, e, s), mass};
    }
    std::sort(row.begin(), row.end());
  }
  return out;
}

VerificationReport check_certificate(const MixtureCertificate& cert, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("verification tolerance must be positive");
  validate(cert.mixture);
  if (cert.components.size() != cert.mixture.components.size()) {
    throw InvalidArgument("certificate lists a different number of expectations than mixture components");
  }
  VerificationReport rep;
  rep.certificate = cert.name;
  rep.closed_form = cert.closed_form;

  double dev_reports = 0.0, dev_joint = 0.0, dev_bayes = 0.0;
  for (std::size_t c = 0; c < cert.components.size(); ++c) {
    const auto& env = cert.mixture.components[c].env;
    const auto& exp = cert.components[c];
    dev_reports = std::max(dev_reports, deviation_or_inf([&] {
      double d = 0.0;
      for (int e = 0; e < 2; ++e) {
        for (int s = 0; s < 2; ++s) {
          const double x = report(env, e == 0 ? Expert::First : Expert::Second, s == 0 ? Signal::Low : Signal::High);
          d = std::max(d, std::abs(x - exp.reports[e][s]));
        }
      }
      return d;
    }));
    for (std::size_t k = 0; k < kAllProfiles.size(); ++k) {
      const double p = joint_signal_prob(env, kAllProfiles[k]);
      dev_joint = std::max(dev_joint, std::abs(p - exp.joint_probs[k]));
      if (exp.joint_probs[k] > 0.0) {
        dev_bayes = std::max(dev_bayes, deviation_or_inf([&] {
          return std::abs(bayes_forecast(env, kAllProfiles[k]) - exp.bayes[k]);
        }));
      }
    }
  }
  record(rep, "reports", dev_reports, tol);
  record(rep, "joint_probs", dev_joint, tol);
  record(rep, "bayes", dev_bayes, tol);

  const ResponseTable responder = optimal_pointwise_response(cert.mixture);
  double dev_resp = responder.entries().size() == cert.expected_responder.size()
                        ? 0.0
                        : std::numeric_limits<double>::infinity();
  for (const auto& e : cert.expected_responder) {
    dev_resp = std::max(dev_resp, deviation_or_inf([&] { return std::abs(responder.lookup(e.x1, e.x2) - e.forecast); }));
  }
  record(rep, "responder", dev_resp, tol);

  rep.computed_value = mixture_regret(responder.as_function(), cert.mixture);
  record(rep, "value", std::abs(rep.computed_value - cert.closed_form.value), tol);

  if (cert.identical_marginals) {
    const auto first = marginal_reports(cert.mixture.components.front().env);
    double d = 0.0;
    for (const auto& comp : cert.mixture.components) {
      const auto m = marginal_reports(comp.env);
      for (int e = 0; e < 2; ++e) {
        for (int s = 0; s < 2; ++s) {
          d = std::max({d, std::abs(m[e][s].first - first[e][s].first), std::abs(m[e][s].second - first[e][s].second)});
        }
      }
    }
    record(rep, "marginals", d, std::min(tol, 1e-14));
  }
  return rep;
}

VerificationReport verify_certificate(const MixtureCertificate& cert, double tol) {
  VerificationReport rep = check_certificate(cert, tol);
  for (const auto& f : rep.fields) {
    if (f.passed) continue;
    std::ostringstream msg;
    msg.precision(3);
    msg << "certificate '" << cert.name << "' field '" << f.field << "' deviates by " << f.max_deviation
        << " (tolerance " << f.tolerance << ")";
    throw CertificateMismatch(f.field, msg.str());
  }
  return rep;
}

VerificationReport check_xor_certificate(const JointStructure& js, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("verification tolerance must be positive");
  validate(js);
  VerificationReport rep;
  rep.certificate = "xor";
  rep.closed_form = {0.25, "1/4"};
  double dev_reports = 0.0;
  for (Expert e : {Expert::First, Expert::Second}) {
    for (Signal s : {Signal::Low, Signal::High}) dev_reports = std::max(dev_reports, std::abs(report(js, e, s) - 0.5));
  }
  record(rep, "reports", dev_reports, tol);
  rep.computed_value = joint_structure_regret(rules::Constant{0.5}, js);
  record(rep, "value", std::abs(rep.computed_value - 0.25), tol);
  return rep;
}

GapReport lower_bound_gap_report(const SearchedUpperBounds& searched) {
  const auto unknown = verify_certificate(build_unknown_state_certificate(), 1e-12);
  const auto marginal = verify_certificate(build_known_marginal_certificate(), 1e-12);
  const auto xor_rep = check_xor_certificate(build_xor_certificate(), 1e-12);
  if (!xor_rep.passed) throw CertificateMismatch("value", "xor certificate failed verification");

  const std::string golden = "(5*sqrt(5)-11)/8";
  const double golden_value = (5.0 * kSqrt5 - 11.0) / 8.0;
  auto upper = [](const std::optional<double>& s, double reported) {
    return s ? std::pair<double, std::string>{*s, "search"} : std::pair<double, std::string>{reported, "reported"};
  };
  const auto [u_known01, s_known01] = upper(searched.known_zero_one, kReportedKnownZeroOneUpper);
  const auto [u_unknown, s_unknown] = upper(searched.unknown_state, kReportedUnknownUpper);
  const auto [u_marginal, s_marginal] = upper(searched.known_marginal, kReportedKnownMarginalUpper);

  GapReport out;
  const BoundEntry general_tight{"", "general", 0.25, "1/4", "xor certificate", 0.25, "1/4", "constant 1/2"};
  auto general = [&](const std::string& setting) {
    BoundEntry e = general_tight;
    e.setting = setting;
    return e;
  };
  out.entries = {
      {"known_zero_one", "conditionally_independent", golden_value, golden, "reference constant", u_known01,
       "log_odds(0.5168)", s_known01},
      {"known_zero_one", "blackwell", golden_value, golden, "reference constant", golden_value, golden,
       "reference constant"},
      general("known_zero_one"),
      {"unknown_state", "conditionally_independent", unknown.closed_form.value, unknown.closed_form.expression,
       "unknown_state certificate", u_unknown, "log_odds(0.585)", s_unknown},
      {"unknown_state", "blackwell", golden_value, golden, "reference constant", golden_value, golden,
       "reference constant"},
      general("unknown_state"),
      {"known_marginal", "conditionally_independent", marginal.closed_form.value, marginal.closed_form.expression,
       "known_marginal certificate", u_marginal, "gen_log_odds(0.656089, 0.498268)", s_marginal},
      {"known_marginal", "blackwell", 0.0, "0", "trivial", 0.0, "0", "follow the informed expert"},
      general("known_marginal"),
  };
  out.unknown_lower = unknown.closed_form.value;
  out.known_zero_one_upper = u_known01;
  out.separation_margin = out.unknown_lower - out.known_zero_one_upper;
  out.separated = out.separation_margin > 0.0;
  return out;
}

}  // namespace robustagg
