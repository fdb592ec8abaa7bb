#include "robustagg/regret.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "robustagg/errors.hpp"
#include "robustagg/parallel.hpp"

namespace robustagg {

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v)) {
    correction_ += (sum_ - t) + v;
  } else {
    correction_ += (v - t) + sum_;
  }
  sum_ = t;
}

namespace {

// Visits every positive-probability profile with its reports and Bayes target.
template <class Visitor>
void for_each_profile(const BinaryCIEnvironment& env, Visitor&& visit) {
  for (SignalProfile profile : kAllProfiles) {
    const double prob = joint_signal_prob(env, profile);
    if (prob < kZeroProbability) continue;
    const double x1 = report(env, Expert::First, profile.s1);
    const double x2 = report(env, Expert::Second, profile.s2);
    const double target = env.theta1 == env.theta2 ? env.theta1 : bayes_forecast(env, profile);
    visit(profile, prob, x1, x2, target);
  }
}

template <class F>
RegretReport build_report(F&& f, const BinaryCIEnvironment& env) {
  RegretReport out;
  CompensatedSum total;
  for_each_profile(env, [&](SignalProfile profile, double prob, double x1, double x2, double target) {
    const double output = f(x1, x2);
    const double err = (output - target) * (output - target);
    out.rows.push_back(RegretRow{profile, prob, x1, x2, target, output, err});
    total.add(prob * err);
  });
  out.total = total.value();
  return out;
}

template <class F>
double outcome_level(F&& f, const BinaryCIEnvironment& env) {
  // P(theta_j, s) for each state, then integrate the Bernoulli outcome.
  CompensatedSum total;
  const double thetas[2] = {env.theta1, env.theta2};
  const double priors[2] = {1.0 - env.lambda2, env.lambda2};
  const double low1[2] = {env.p1_low, env.q1_low};
  const double low2[2] = {env.p2_low, env.q2_low};
  for_each_profile(env, [&](SignalProfile profile, double, double x1, double x2, double target) {
    const double output = f(x1, x2);
    for (int j = 0; j < 2; ++j) {
      const double l1 = profile.s1 == Signal::Low ? low1[j] : 1.0 - low1[j];
      const double l2 = profile.s2 == Signal::Low ? low2[j] : 1.0 - low2[j];
      const double p_state = priors[j] * l1 * l2;
      for (int w = 0; w <= 1; ++w) {
        const double p_outcome = w == 1 ? thetas[j] : 1.0 - thetas[j];
        const double loss_gap = (output - w) * (output - w) - (target - w) * (target - w);
        total.add(p_state * p_outcome * loss_gap);
      }
    }
  });
  return total.value();
}

template <class F>
double blackwell_value(F&& f, const BlackwellEnvironment& env) {
  CompensatedSum total;
  for (SignalProfile profile : kAllProfiles) {
    const double prob = blackwell_joint(env, profile);
    if (prob < kZeroProbability) continue;
    const double x1 = report(env, Expert::First, profile.s1);
    const double x2 = report(env, Expert::Second, profile.s2);
    const double gap = f(x1, x2) - x2;
    total.add(prob * gap * gap);
  }
  return total.value();
}

}  // namespace

RegretReport expected_regret(const AggregatorSpec& spec, const BinaryCIEnvironment& env) {
  const AggregationContext ctx{prior_mean(env)};
  return build_report([&](double x1, double x2) { return aggregate(spec, x1, x2, ctx); }, env);
}

RegretReport expected_regret(const AggregatorFn& f, const BinaryCIEnvironment& env) { return build_report(f, env); }

double regret_value(const AggregatorSpec& spec, const BinaryCIEnvironment& env) {
  const AggregationContext ctx{prior_mean(env)};
  CompensatedSum total;
  for_each_profile(env, [&](SignalProfile, double prob, double x1, double x2, double target) {
    const double gap = aggregate(spec, x1, x2, ctx) - target;
    total.add(prob * gap * gap);
  });
  return total.value();
}

double expected_regret_via_outcomes(const AggregatorSpec& spec, const BinaryCIEnvironment& env) {
  const AggregationContext ctx{prior_mean(env)};
  return outcome_level([&](double x1, double x2) { return aggregate(spec, x1, x2, ctx); }, env);
}

double expected_regret_via_outcomes(const AggregatorFn& f, const BinaryCIEnvironment& env) {
  return outcome_level(f, env);
}

double mixture_regret(const AggregatorSpec& spec, const MixtureEnvironment& mix) {
  validate(mix);
  CompensatedSum total;
  for (const auto& c : mix.components) total.add(c.weight * regret_value(spec, c.env));
  return total.value();
}

double mixture_regret(const AggregatorFn& f, const MixtureEnvironment& mix) {
  validate(mix);
  CompensatedSum total;
  for (const auto& c : mix.components) total.add(c.weight * expected_regret(f, c.env).total);
  return total.value();
}

double ResponseTable::lookup(double x1, double x2) const {
  for (const auto& e : entries_) {
    if (std::max(std::abs(e.x1 - x1), std::abs(e.x2 - x2)) <= kReportMatchTol) return e.forecast;
  }
  std::ostringstream msg;
  msg << "no response recorded for report pair (" << x1 << ", " << x2 << ")";
  throw InvalidArgument(msg.str());
}

AggregatorFn ResponseTable::as_function() const {
  return [this](double x1, double x2) { return lookup(x1, x2); };
}

ResponseTable optimal_pointwise_response(const MixtureEnvironment& mix) {
  validate(mix);
  struct Group {
    double x1, x2;
    CompensatedSum mass;
    CompensatedSum weighted_target;
  };
  std::vector<Group> groups;
  for (const auto& c : mix.components) {
    if (c.weight == 0.0) continue;
    for_each_profile(c.env, [&](SignalProfile, double prob, double x1, double x2, double target) {
      Group* match = nullptr;
      for (auto& g : groups) {
        const double dist = std::max(std::abs(g.x1 - x1), std::abs(g.x2 - x2));
        if (dist <= kReportMatchTol) {
          match = &g;
          break;
        }
        if (dist < kReportAmbiguityBand) {
          std::ostringstream msg;
          msg << "report pairs (" << g.x1 << ", " << g.x2 << ") and (" << x1 << ", " << x2
              << ") are too close to separate and too far to merge";
          throw AmbiguousReportMatching(msg.str());
        }
      }
      if (!match) {
        groups.push_back(Group{x1, x2, {}, {}});
        match = &groups.back();
      }
      match->mass.add(c.weight * prob);
      match->weighted_target.add(c.weight * prob * target);
    });
  }
  std::vector<ResponseEntry> entries;
  entries.reserve(groups.size());
  for (const auto& g : groups) {
    entries.push_back(ResponseEntry{g.x1, g.x2, g.weighted_target.value() / g.mass.value(), g.mass.value()});
  }
  return ResponseTable(std::move(entries));
}

double blackwell_regret(const AggregatorSpec& spec, const BlackwellEnvironment& env) {
  const AggregationContext ctx{prior_mean(env)};
  return blackwell_value([&](double x1, double x2) { return aggregate(spec, x1, x2, ctx); }, env);
}

double blackwell_regret(const AggregatorFn& f, const BlackwellEnvironment& env) { return blackwell_value(f, env); }

std::vector<double> batch_regret(const AggregatorSpec& spec, std::span<const BinaryCIEnvironment> envs,
                                 int n_workers) {
  std::vector<double> out(envs.size());
  parallel_for(envs.size(), n_workers, [&](std::size_t i) { out[i] = regret_value(spec, envs[i]); });
  return out;
}

}  // namespace robustagg
