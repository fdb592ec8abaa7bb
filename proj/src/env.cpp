#include "robustagg/env.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "robustagg/errors.hpp"

namespace robustagg {

namespace {

void require_probability(double value, const char* field) {
  if (!(value >= 0.0 && value <= 1.0)) {
    std::ostringstream msg;
    msg << "field '" << field << "' must lie in [0, 1], got " << value;
    throw InvalidArgument(msg.str());
  }
}

double likelihood(double low_prob, Signal signal) {
  return signal == Signal::Low ? low_prob : 1.0 - low_prob;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Posterior of the high state from the two unnormalised state weights, mapped
// onto [theta1, theta2]. Written as theta1 + delta * w2 / (w1 + w2) so the
// result can never leave the state interval.
double posterior_mean(double theta1, double theta2, double w1, double w2) {
  return theta1 + (theta2 - theta1) * (w2 / (w1 + w2));
}

}  // namespace

std::string to_string(SignalProfile profile) {
  std::string out;
  out += profile.s1 == Signal::Low ? 'L' : 'H';
  out += profile.s2 == Signal::Low ? 'L' : 'H';
  return out;
}

void validate(const BinaryCIEnvironment& env) {
  require_probability(env.theta1, "theta1");
  require_probability(env.theta2, "theta2");
  require_probability(env.lambda2, "lambda2");
  require_probability(env.p1_low, "p1_low");
  require_probability(env.p2_low, "p2_low");
  require_probability(env.q1_low, "q1_low");
  require_probability(env.q2_low, "q2_low");
  if (env.theta1 > env.theta2) {
    throw InvalidArgument("field 'theta1' must not exceed 'theta2'");
  }
}

BinaryCIEnvironment canonicalize(const BinaryCIEnvironment& env) {
  if (env.theta1 <= env.theta2) return env;
  return BinaryCIEnvironment{
      .theta1 = env.theta2,
      .theta2 = env.theta1,
      .lambda2 = 1.0 - env.lambda2,
      .p1_low = env.q1_low,
      .p2_low = env.q2_low,
      .q1_low = env.p1_low,
      .q2_low = env.p2_low,
  };
}

BinaryCIEnvironment swap_experts(const BinaryCIEnvironment& env) {
  BinaryCIEnvironment out = env;
  std::swap(out.p1_low, out.p2_low);
  std::swap(out.q1_low, out.q2_low);
  return out;
}

double prior_mean(const BinaryCIEnvironment& env) {
  return (1.0 - env.lambda2) * env.theta1 + env.lambda2 * env.theta2;
}

double signal_prob(const BinaryCIEnvironment& env, Expert expert, Signal signal) {
  const double low1 = expert == Expert::First ? env.p1_low : env.p2_low;
  const double low2 = expert == Expert::First ? env.q1_low : env.q2_low;
  return (1.0 - env.lambda2) * likelihood(low1, signal) + env.lambda2 * likelihood(low2, signal);
}

double report(const BinaryCIEnvironment& env, Expert expert, Signal signal) {
  const double low1 = expert == Expert::First ? env.p1_low : env.p2_low;
  const double low2 = expert == Expert::First ? env.q1_low : env.q2_low;
  const double w1 = (1.0 - env.lambda2) * likelihood(low1, signal);
  const double w2 = env.lambda2 * likelihood(low2, signal);
  if (w1 + w2 < kZeroProbability) {
    throw ZeroProbabilitySignal("report requested for a signal that never occurs");
  }
  return posterior_mean(env.theta1, env.theta2, w1, w2);
}

double joint_signal_prob(const BinaryCIEnvironment& env, SignalProfile profile) {
  return (1.0 - env.lambda2) * likelihood(env.p1_low, profile.s1) * likelihood(env.p2_low, profile.s2) +
         env.lambda2 * likelihood(env.q1_low, profile.s1) * likelihood(env.q2_low, profile.s2);
}

double bayes_forecast(const BinaryCIEnvironment& env, SignalProfile profile) {
  const double w1 = (1.0 - env.lambda2) * likelihood(env.p1_low, profile.s1) * likelihood(env.p2_low, profile.s2);
  const double w2 = env.lambda2 * likelihood(env.q1_low, profile.s1) * likelihood(env.q2_low, profile.s2);
  if (w1 + w2 < kZeroProbability) {
    throw ZeroProbabilitySignal("Bayes forecast requested for profile " + to_string(profile) +
                                " which has zero probability");
  }
  return posterior_mean(env.theta1, env.theta2, w1, w2);
}

RescaledEnvironment rescale_to_unit(const BinaryCIEnvironment& env) {
  const double delta = env.theta2 - env.theta1;
  if (!(delta > 0.0)) {
    throw DegenerateStateSpace("cannot rescale an environment with theta1 == theta2");
  }
  BinaryCIEnvironment unit = env;
  unit.theta1 = 0.0;
  unit.theta2 = 1.0;
  return RescaledEnvironment{.unit_env = unit, .delta = delta, .offset = env.theta1};
}

BinaryCIEnvironment env_from_reports(double theta1, double theta2, double mu,
                                     std::array<double, 2> expert1_reports,
                                     std::array<double, 2> expert2_reports) {
  if (!(theta1 < theta2)) {
    throw DegenerateStateSpace("env_from_reports needs theta1 < theta2");
  }
  if (!(mu >= theta1 && mu <= theta2)) {
    throw InvalidArgument("prior mean must lie in [theta1, theta2]");
  }
  const double delta = theta2 - theta1;
  const double lambda2 = (mu - theta1) / delta;

  // Returns {P(Low | theta1), P(Low | theta2)} for one expert.
  auto rows = [&](std::array<double, 2> reports) -> std::array<double, 2> {
    const double x_low = std::min(reports[0], reports[1]);
    const double x_high = std::max(reports[0], reports[1]);
    if (x_low < theta1 || x_high > theta2 || x_low > mu || x_high < mu) {
      throw InvalidArgument("reports must bracket the prior mean inside [theta1, theta2]");
    }
    if (lambda2 <= 0.0 || lambda2 >= 1.0 || x_high - x_low <= 0.0) {
      return {0.5, 0.5};  // signal carries no information
    }
    const double m_low = (x_high - mu) / (x_high - x_low);  // P(Low)
    const double post_low = (x_low - theta1) / delta;        // P(theta2 | Low)
    return {clamp01(m_low * (1.0 - post_low) / (1.0 - lambda2)), clamp01(m_low * post_low / lambda2)};
  };

  const auto e1 = rows(expert1_reports);
  const auto e2 = rows(expert2_reports);
  return BinaryCIEnvironment{
      .theta1 = theta1,
      .theta2 = theta2,
      .lambda2 = lambda2,
      .p1_low = e1[0],
      .p2_low = e2[0],
      .q1_low = e1[1],
      .q2_low = e2[1],
  };
}

// --- Blackwell --------------------------------------------------------------

void validate(const BlackwellEnvironment& env) {
  require_probability(env.theta1, "theta1");
  require_probability(env.theta2, "theta2");
  require_probability(env.lambda2, "lambda2");
  require_probability(env.r_low, "r_low");
  require_probability(env.r_high, "r_high");
  require_probability(env.g_LL, "g_LL");
  require_probability(env.g_HL, "g_HL");
  if (env.theta1 > env.theta2) {
    throw InvalidArgument("field 'theta1' must not exceed 'theta2'");
  }
}

BlackwellEnvironment canonicalize(const BlackwellEnvironment& env) {
  if (env.theta1 <= env.theta2) return env;
  BlackwellEnvironment out = env;
  std::swap(out.theta1, out.theta2);
  out.lambda2 = 1.0 - env.lambda2;
  std::swap(out.r_low, out.r_high);
  return out;
}

double prior_mean(const BlackwellEnvironment& env) {
  return (1.0 - env.lambda2) * env.theta1 + env.lambda2 * env.theta2;
}

namespace {

double garble(const BlackwellEnvironment& env, Signal garbled, Signal informed) {
  const double low = informed == Signal::Low ? env.g_LL : env.g_HL;
  return likelihood(low, garbled);
}

// Unnormalised state weights {w(theta1), w(theta2)} of the informed expert
// seeing `informed`.
std::array<double, 2> informed_weights(const BlackwellEnvironment& env, Signal informed) {
  return {(1.0 - env.lambda2) * likelihood(env.r_low, informed), env.lambda2 * likelihood(env.r_high, informed)};
}

}  // namespace

double blackwell_joint(const BlackwellEnvironment& env, SignalProfile profile) {
  const auto w = informed_weights(env, profile.s2);
  return (w[0] + w[1]) * garble(env, profile.s1, profile.s2);
}

double signal_prob(const BlackwellEnvironment& env, Expert expert, Signal signal) {
  if (expert == Expert::Second) {
    const auto w = informed_weights(env, signal);
    return w[0] + w[1];
  }
  return blackwell_joint(env, {signal, Signal::Low}) + blackwell_joint(env, {signal, Signal::High});
}

double report(const BlackwellEnvironment& env, Expert expert, Signal signal) {
  double w1 = 0.0;
  double w2 = 0.0;
  if (expert == Expert::Second) {
    const auto w = informed_weights(env, signal);
    w1 = w[0];
    w2 = w[1];
  } else {
    for (Signal informed : {Signal::Low, Signal::High}) {
      const auto w = informed_weights(env, informed);
      const double g = garble(env, signal, informed);
      w1 += w[0] * g;
      w2 += w[1] * g;
    }
  }
  if (w1 + w2 < kZeroProbability) {
    throw ZeroProbabilitySignal("report requested for a signal that never occurs");
  }
  return posterior_mean(env.theta1, env.theta2, w1, w2);
}

// --- Mixtures ---------------------------------------------------------------

void validate(const MixtureEnvironment& mix) {
  if (mix.components.empty()) {
    throw InvalidArgument("mixture must have at least one component");
  }
  double total = 0.0;
  for (const auto& c : mix.components) {
    if (!(c.weight >= 0.0)) throw InvalidArgument("mixture weights must be nonnegative");
    validate(c.env);
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("mixture weights must sum to 1");
  }
}

}  // namespace robustagg
