#pragma once

// Aggregation rules mapping a pair of expert reports to one forecast.
//
// Every rule is a value of AggregatorSpec; `aggregate` is the single
// dispatch point. Rules that need a prior mean either carry a fixed value or
// ask for the environment's prior mean, which the caller supplies through
// AggregationContext (only meaningful when the prior mean is observable).

#include <optional>
#include <string>
#include <variant>

namespace robustagg {

/// Inputs of ratio-form rules are clamped to [kRatioClamp, 1 - kRatioClamp].
inline constexpr double kRatioClamp = 1e-12;

/// Threshold on |x1 - x2| above which the precision-weighted rule switches to
/// square-root precision weights.
inline constexpr double kPrecisionSwitch = 0.4;

/// Where a rule gets its prior-mean estimate from.
struct PriorSource {
  enum class Kind { ArithmeticMean, Known, Environment };
  Kind kind = Kind::ArithmeticMean;
  double value = 0.5;  // used when kind == Known

  static PriorSource arithmetic_mean() { return {Kind::ArithmeticMean, 0.5}; }
  static PriorSource known(double mu) { return {Kind::Known, mu}; }
  static PriorSource environment() { return {Kind::Environment, 0.5}; }

  friend bool operator==(const PriorSource&, const PriorSource&) = default;
};

namespace rules {

/// logit(out) = alpha * (logit(x1) + logit(x2)).
struct LogOdds {
  double alpha = 0.585;
};

/// logit(out) = alpha * (logit(x1) + logit(x2)) - gamma * logit(mu).
/// `mu` must be Known or Environment.
struct GeneralizedLogOdds {
  double alpha = 0.656089;
  double gamma = 0.498268;
  PriorSource mu = PriorSource::environment();
};

struct SimpleAverage {};

/// Bayes formula for a {0,1} state space evaluated at an estimated prior.
struct AveragePrior {
  PriorSource mu_policy = PriorSource::arithmetic_mean();
};

/// AveragePrior with the prior estimate 0.49 (x1 + x2) + 0.02 [x1 + x2 > 1].
struct HeuristicPrior {};

/// Base-rate-neglect family: the prior odds enter with exponent 2*lambda - 1.
struct KWW {
  double lambda = 0.8;
  PriorSource mu_policy = PriorSource::arithmetic_mean();
};

/// Precision (inverse variance) weighted average; square-root weights when the
/// reports are far apart.
struct PrecisionWeighted {};

struct Constant {
  double c = 0.5;
};

/// Returns one expert's report unchanged. Not symmetric.
struct FollowExpert {
  int expert = 2;
};

}  // namespace rules

using AggregatorSpec = std::variant<rules::LogOdds, rules::GeneralizedLogOdds, rules::SimpleAverage,
                                    rules::AveragePrior, rules::HeuristicPrior, rules::KWW,
                                    rules::PrecisionWeighted, rules::Constant, rules::FollowExpert>;

struct AggregationContext {
  /// The environment's prior mean, when the aggregator is allowed to see it.
  std::optional<double> prior_mean;
};

/// Throws InvalidArgument on out-of-range parameters.
void validate(const AggregatorSpec& spec);

/// True when the rule reads the environment's prior mean.
bool requires_env_prior(const AggregatorSpec& spec);

/// Short human-readable label, e.g. "log_odds(alpha=0.585)".
std::string describe(const AggregatorSpec& spec);

/// Throws InvalidArgument if the rule needs the environment's prior mean and
/// the context does not provide it.
double aggregate(const AggregatorSpec& spec, double x1, double x2, const AggregationContext& ctx = {});

/// Extended-real logit: -inf at 0, +inf at 1.
double logit(double p);

/// Inverse of logit; maps +-inf to 1 and 0.
double logistic(double z);

/// 1 / (x (1 - x)). Throws BoundaryForecast at x in {0, 1}.
double precision(double x);

/// Omniscient Bayes forecast for state space {0, 1} with prior mean mu:
/// x1 x2 (1 - mu) / (x1 x2 (1 - mu) + (1 - x1)(1 - x2) mu).
double bayes_zero_one(double mu, double x1, double x2);

/// Prior estimate used by HeuristicPrior.
double heuristic_prior_estimate(double x1, double x2);

}  // namespace robustagg
