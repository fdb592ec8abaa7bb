#include "robustagg/aggregators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "robustagg/errors.hpp"

namespace robustagg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

double clamp_ratio(double x) { return std::clamp(x, kRatioClamp, 1.0 - kRatioClamp); }

double resolve_prior(const PriorSource& src, double x1, double x2, const AggregationContext& ctx) {
  switch (src.kind) {
    case PriorSource::Kind::ArithmeticMean:
      return 0.5 * (x1 + x2);
    case PriorSource::Kind::Known:
      return src.value;
    case PriorSource::Kind::Environment:
      if (!ctx.prior_mean) {
        throw InvalidArgument("aggregation rule needs the environment's prior mean, which is not observable here");
      }
      return *ctx.prior_mean;
  }
  return 0.5;
}

// Sums weighted logits in the extended reals. A zero weight silences its
// term even when the logit is infinite; opposite infinities cancel to 0.
double extended_sum(std::initializer_list<std::pair<double, double>> weighted_logits) {
  double finite = 0.0;
  bool pos_inf = false;
  bool neg_inf = false;
  for (auto [w, l] : weighted_logits) {
    if (w == 0.0) continue;
    const double term = w * l;
    if (term == kInf) {
      pos_inf = true;
    } else if (term == -kInf) {
      neg_inf = true;
    } else {
      finite += term;
    }
  }
  if (pos_inf && neg_inf) return 0.0;
  if (pos_inf) return kInf;
  if (neg_inf) return -kInf;
  return finite;
}

double kww_rule(double mu, double lambda, double x1, double x2) {
  const double e = 2.0 * lambda - 1.0;
  const double num = std::pow(1.0 - mu, e) * x1 * x2;
  return num / (num + std::pow(mu, e) * (1.0 - x1) * (1.0 - x2));
}

double precision_weighted(double x1, double x2) {
  const bool extreme1 = x1 * (1.0 - x1) == 0.0;
  const bool extreme2 = x2 * (1.0 - x2) == 0.0;
  if (extreme1 && extreme2) return x1 == x2 ? x1 : 0.5;
  if (extreme1) return x1;
  if (extreme2) return x2;

  double w1 = precision(x1);
  double w2 = precision(x2);
  if (std::abs(x1 - x2) > kPrecisionSwitch) {
    w1 = std::sqrt(w1);
    w2 = std::sqrt(w2);
  }
  return std::clamp((w1 * x1 + w2 * x2) / (w1 + w2), 0.0, 1.0);
}

std::string prior_label(const PriorSource& src) {
  std::ostringstream out;
  switch (src.kind) {
    case PriorSource::Kind::ArithmeticMean:
      out << "arithmetic_mean";
      break;
    case PriorSource::Kind::Known:
      out << "known=" << src.value;
      break;
    case PriorSource::Kind::Environment:
      out << "env";
      break;
  }
  return out.str();
}

}  // namespace

double logit(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return std::log(p) - std::log1p(-p);
}

double logistic(double z) {
  if (z == kInf) return 1.0;
  if (z == -kInf) return 0.0;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double precision(double x) {
  const double var = x * (1.0 - x);
  if (!(var > 0.0)) throw BoundaryForecast("precision is undefined for a report at 0 or 1");
  return 1.0 / var;
}

double bayes_zero_one(double mu, double x1, double x2) {
  const double num = x1 * x2 * (1.0 - mu);
  return num / (num + (1.0 - x1) * (1.0 - x2) * mu);
}

double heuristic_prior_estimate(double x1, double x2) {
  const double s = x1 + x2;
  return 0.49 * s + (s > 1.0 ? 0.02 : 0.0);
}

void validate(const AggregatorSpec& spec) {
  auto check_prior = [](const PriorSource& p) {
    if (p.kind == PriorSource::Kind::Known) require(in_unit(p.value), "known prior mean must lie in [0, 1]");
  };
  std::visit(overloaded{
                 [](const rules::LogOdds& r) { require(in_unit(r.alpha), "log_odds alpha must lie in [0, 1]"); },
                 [&](const rules::GeneralizedLogOdds& r) {
                   require(in_unit(r.alpha), "gen_log_odds alpha must lie in [0, 1]");
                   require(r.gamma >= -1.0 && r.gamma <= 1.0, "gen_log_odds gamma must lie in [-1, 1]");
                   require(r.mu.kind != PriorSource::Kind::ArithmeticMean,
                           "gen_log_odds mu must be a known value or the environment's prior mean");
                   check_prior(r.mu);
                 },
                 [](const rules::SimpleAverage&) {},
                 [&](const rules::AveragePrior& r) { check_prior(r.mu_policy); },
                 [](const rules::HeuristicPrior&) {},
                 [&](const rules::KWW& r) {
                   require(in_unit(r.lambda), "kww lambda must lie in [0, 1]");
                   check_prior(r.mu_policy);
                 },
                 [](const rules::PrecisionWeighted&) {},
                 [](const rules::Constant& r) { require(in_unit(r.c), "constant output must lie in [0, 1]"); },
                 [](const rules::FollowExpert& r) { require(r.expert == 1 || r.expert == 2, "expert must be 1 or 2"); },
             },
             spec);
}

bool requires_env_prior(const AggregatorSpec& spec) {
  return std::visit(overloaded{
                        [](const rules::GeneralizedLogOdds& r) { return r.mu.kind == PriorSource::Kind::Environment; },
                        [](const rules::AveragePrior& r) { return r.mu_policy.kind == PriorSource::Kind::Environment; },
                        [](const rules::KWW& r) { return r.mu_policy.kind == PriorSource::Kind::Environment; },
                        [](const auto&) { return false; },
                    },
                    spec);
}

std::string describe(const AggregatorSpec& spec) {
  std::ostringstream out;
  std::visit(overloaded{
                 [&](const rules::LogOdds& r) { out << "log_odds(alpha=" << r.alpha << ")"; },
                 [&](const rules::GeneralizedLogOdds& r) {
                   out << "gen_log_odds(alpha=" << r.alpha << ", gamma=" << r.gamma << ", mu=" << prior_label(r.mu)
                       << ")";
                 },
                 [&](const rules::SimpleAverage&) { out << "simple_average"; },
                 [&](const rules::AveragePrior& r) { out << "average_prior(mu=" << prior_label(r.mu_policy) << ")"; },
                 [&](const rules::HeuristicPrior&) { out << "heuristic_prior"; },
                 [&](const rules::KWW& r) {
                   out << "kww(lambda=" << r.lambda << ", mu=" << prior_label(r.mu_policy) << ")";
                 },
                 [&](const rules::PrecisionWeighted&) { out << "precision_weighted"; },
                 [&](const rules::Constant& r) { out << "constant(" << r.c << ")"; },
                 [&](const rules::FollowExpert& r) { out << "follow_expert(" << r.expert << ")"; },
             },
             spec);
  return out.str();
}

double aggregate(const AggregatorSpec& spec, double x1, double x2, const AggregationContext& ctx) {
  // Symmetric rules read the reports in sorted order so swapping experts is exact in floating point.
  if (!std::holds_alternative<rules::FollowExpert>(spec) && x2 < x1) std::swap(x1, x2);
  return std::visit(
      overloaded{
          [&](const rules::LogOdds& r) {
            return logistic(extended_sum({{r.alpha, logit(x1)}, {r.alpha, logit(x2)}}));
          },
          [&](const rules::GeneralizedLogOdds& r) {
            const double mu = resolve_prior(r.mu, x1, x2, ctx);
            return logistic(extended_sum({{r.alpha, logit(x1)}, {r.alpha, logit(x2)}, {-r.gamma, logit(mu)}}));
          },
          [&](const rules::SimpleAverage&) { return 0.5 * (x1 + x2); },
          [&](const rules::AveragePrior& r) {
            const double c1 = clamp_ratio(x1);
            const double c2 = clamp_ratio(x2);
            return bayes_zero_one(clamp_ratio(resolve_prior(r.mu_policy, c1, c2, ctx)), c1, c2);
          },
          [&](const rules::HeuristicPrior&) {
            const double c1 = clamp_ratio(x1);
            const double c2 = clamp_ratio(x2);
            return bayes_zero_one(clamp_ratio(heuristic_prior_estimate(c1, c2)), c1, c2);
          },
          [&](const rules::KWW& r) {
            const double c1 = clamp_ratio(x1);
            const double c2 = clamp_ratio(x2);
            return kww_rule(clamp_ratio(resolve_prior(r.mu_policy, c1, c2, ctx)), r.lambda, c1, c2);
          },
          [&](const rules::PrecisionWeighted&) { return precision_weighted(x1, x2); },
          [&](const rules::Constant& r) { return r.c; },
          [&](const rules::FollowExpert& r) { return r.expert == 1 ? x1 : x2; },
      },
      spec);
}

}  // namespace robustagg
