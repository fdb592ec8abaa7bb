#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracle.hpp"
#include "robustagg/errors.hpp"
#include "robustagg/regret.hpp"

using namespace robustagg;

namespace {

const double kSqrt5 = std::sqrt(5.0);

BinaryCIEnvironment from(const std::array<double, 7>& p) { return {p[0], p[1], p[2], p[3], p[4], p[5], p[6]}; }

oracle::World world(const BinaryCIEnvironment& e) {
  return oracle::make_world(e.theta1, e.theta2, e.lambda2, e.p1_low, e.p2_low, e.q1_low, e.q2_low);
}

std::vector<AggregatorSpec> all_rules() {
  return {rules::LogOdds{0.585},
          rules::LogOdds{1.0},
          rules::GeneralizedLogOdds{0.656089, 0.498268, PriorSource::environment()},
          rules::GeneralizedLogOdds{0.3, -0.4, PriorSource::known(0.6)},
          rules::SimpleAverage{},
          rules::AveragePrior{},
          rules::AveragePrior{PriorSource::environment()},
          rules::HeuristicPrior{},
          rules::KWW{0.8, PriorSource::arithmetic_mean()},
          rules::KWW{0.8, PriorSource::environment()},
          rules::PrecisionWeighted{},
          rules::Constant{0.5},
          rules::FollowExpert{1}};
}

const BinaryCIEnvironment kRevealLowA{0.0, 5.0 / 6.0, 0.5, 1.0, 1.0, 0.25, 0.25};
const BinaryCIEnvironment kRevealHighB{1.0 / 6.0, 1.0, 0.5, 0.75, 0.75, 0.0, 0.0};

// Bayes rule for {0,1} states, reading the true prior mean.
const AggregatorSpec kBayesAnchor = rules::GeneralizedLogOdds{1.0, 1.0, PriorSource::environment()};

}  // namespace

TEST_CASE("regret report structure") {
  const BinaryCIEnvironment env{0.1, 0.9, 0.4, 0.3, 0.6, 0.8, 0.2};
  const auto rep = expected_regret(rules::LogOdds{0.585}, env);
  REQUIRE(rep.rows.size() == 4);
  double total = 0, prob = 0;
  for (const auto& r : rep.rows) {
    total += r.joint_prob * r.squared_error;
    prob += r.joint_prob;
    CHECK(std::abs(r.squared_error - (r.aggregator_output - r.bayes_target) * (r.aggregator_output - r.bayes_target)) < 1e-15);
  }
  CHECK(std::abs(total - rep.total) < 1e-12);
  CHECK(std::abs(prob - 1.0) < 1e-12);
  CHECK(rep.total == regret_value(rules::LogOdds{0.585}, env));

  const auto revealing = expected_regret(rules::Constant{0.5}, BinaryCIEnvironment{0, 1, 0.5, 1, 1, 0, 0});
  CHECK(revealing.rows.size() == 2);
  CHECK(revealing.total == 0.25);
}

TEST_CASE("Bayes anchor has zero regret on {0,1} environments") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    auto p = oracle::random_params(rng);
    p[0] = 0.0;
    p[1] = 1.0;
    const auto env = from(p);
    CHECK(regret_value(kBayesAnchor, env) < 1e-24);
    CHECK(std::abs(expected_regret_via_outcomes(kBayesAnchor, env)) < 1e-12);
  }
}

TEST_CASE("worst instance of the log-odds rule") {
  const auto env = env_from_reports(0.21097, 1.0, 0.65866, {0.21097, 0.87002}, {0.21097, 0.87002});
  CHECK(std::abs(regret_value(rules::LogOdds{0.585}, env) - 0.025512) < 1e-5);
}

TEST_CASE("constant rule on the low-revealing structure matches hand enumeration") {
  const auto w = world(kRevealLowA);
  const double expected =
      static_cast<double>(oracle::regret(w, [](long double, long double) { return 0.5L; }));
  CHECK(std::abs(regret_value(rules::Constant{0.5}, kRevealLowA) - expected) < 1e-15);
  // closed form over the four profiles
  const double hand = 17.0 / 32 * std::pow(0.5 - 5.0 / 102, 2) + 15.0 / 32 * std::pow(0.5 - 5.0 / 6, 2);
  CHECK(std::abs(expected - hand) < 1e-15);
}

TEST_CASE("degenerate states") {
  const BinaryCIEnvironment flat{0.4, 0.4, 0.3, 0.2, 0.7, 0.9, 0.1};
  CHECK(regret_value(rules::Constant{0.4}, flat) == 0.0);
  CHECK(expected_regret_via_outcomes(rules::Constant{0.4}, flat) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(std::abs(regret_value(rules::Constant{0.5}, flat) - 0.01) < 1e-15);
}

TEST_CASE("outcome-level definition equals the simplified regret") {
  std::mt19937_64 rng(20240601);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto env = from(oracle::random_params(rng));
    for (const auto& spec : all_rules()) {
      const double a = regret_value(spec, env);
      const double b = expected_regret_via_outcomes(spec, env);
      worst = std::max(worst, std::abs(a - b));
      CHECK(a >= -1e-15);
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("regret agrees with the independent oracle") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 500; ++i) {
    const auto env = from(oracle::random_params(rng));
    const auto w = world(env);
    const double got = regret_value(rules::LogOdds{0.585}, env);
    const double want = static_cast<double>(oracle::regret(w, [](long double a, long double b) {
      if (a <= 0 || b <= 0 || a >= 1 || b >= 1) return static_cast<long double>(aggregate(rules::LogOdds{0.585}, a, b));
      return oracle::log_odds(0.585L, a, b);
    }));
    CHECK(std::abs(got - want) < 1e-12);
  }
}

TEST_CASE("rescaling identity") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0, 1);
  const std::vector<AggregatorSpec> specs{rules::LogOdds{0.585}, rules::SimpleAverage{}, rules::PrecisionWeighted{},
                                          rules::HeuristicPrior{}};
  int checked = 0;
  while (checked < 1000) {
    const auto env = from(oracle::random_params(rng));
    if (env.theta2 - env.theta1 < 1e-3) continue;
    ++checked;
    const auto r = rescale_to_unit(env);
    const auto& spec = specs[static_cast<std::size_t>(checked) % specs.size()];
    const AggregatorFn unit_rule = [&](double p1, double p2) {
      return (aggregate(spec, r.offset + r.delta * p1, r.offset + r.delta * p2) - r.offset) / r.delta;
    };
    const double lhs = regret_value(spec, env);
    const double rhs = r.delta * r.delta * expected_regret(unit_rule, r.unit_env).total;
    CHECK(std::abs(lhs - rhs) <= 1e-10);
  }
}

TEST_CASE("mixtures") {
  const BinaryCIEnvironment env{0.1, 0.9, 0.4, 0.3, 0.6, 0.8, 0.2};
  const AggregatorSpec spec = rules::LogOdds{0.585};

  SUBCASE("single component") {
    CHECK(mixture_regret(spec, MixtureEnvironment{{{1.0, env}}}) == regret_value(spec, env));
    const auto table = optimal_pointwise_response(MixtureEnvironment{{{1.0, env}}});
    for (auto p : kAllProfiles) {
      CHECK(std::abs(table.lookup(report(env, Expert::First, p.s1), report(env, Expert::Second, p.s2)) -
                     bayes_forecast(env, p)) < 1e-15);
    }
  }
  SUBCASE("linear in weights") {
    const BinaryCIEnvironment other{0.0, 0.7, 0.6, 0.5, 0.1, 0.2, 0.9};
    const double whole = mixture_regret(spec, MixtureEnvironment{{{0.3, env}, {0.7, other}}});
    const double split = mixture_regret(spec, MixtureEnvironment{{{0.1, env}, {0.2, env}, {0.7, other}}});
    CHECK(std::abs(whole - split) < 1e-15);
    CHECK(std::abs(whole - (0.3 * regret_value(spec, env) + 0.7 * regret_value(spec, other))) < 1e-15);
  }
}

TEST_CASE("pointwise-optimal responder on the unknown-state mixture") {
  const MixtureEnvironment mix{{{0.5, kRevealLowA}, {0.5, kRevealHighB}}};
  const auto table = optimal_pointwise_response(mix);
  const double lo = 1.0 / 6.0, hi = 5.0 / 6.0;
  CHECK(table.entries().size() == 4);
  CHECK(std::abs(table.lookup(lo, lo) - 7.0 / 78.0) < 1e-15);
  CHECK(std::abs(table.lookup(lo, hi) - 0.5) < 1e-15);
  CHECK(std::abs(table.lookup(hi, lo) - 0.5) < 1e-15);
  CHECK(std::abs(table.lookup(hi, hi) - 71.0 / 78.0) < 1e-15);
  const double value = mixture_regret(table.as_function(), mix);
  CHECK(std::abs(value - 31.0 / 1326.0) < 1e-15);
  CHECK_THROWS_AS(table.lookup(0.3, 0.3), InvalidArgument);

  SUBCASE("no perturbed table does better") {
    for (const auto& e : table.entries()) {
      for (double d : {-1e-3, 1e-3}) {
        const AggregatorFn perturbed = [&](double x1, double x2) {
          const double base = table.lookup(x1, x2);
          return (std::abs(x1 - e.x1) < 1e-9 && std::abs(x2 - e.x2) < 1e-9) ? base + d : base;
        };
        CHECK(mixture_regret(perturbed, mix) >= value);
      }
    }
  }
}

TEST_CASE("pointwise-optimal responder on the golden-ratio mixture") {
  const double lo = (3.0 - kSqrt5) / 4.0, hi = (1.0 + kSqrt5) / 4.0;
  const BinaryCIEnvironment a{lo, 1.0, (3.0 - kSqrt5) / 2.0, hi, hi, 0.0, 0.0};
  const BinaryCIEnvironment b{0.0, hi, (kSqrt5 - 1.0) / 2.0, 1.0, 1.0, lo, lo};
  const MixtureEnvironment mix{{{0.5, a}, {0.5, b}}};
  const auto table = optimal_pointwise_response(mix);
  CHECK(std::abs(mixture_regret(table.as_function(), mix) - (5.0 * kSqrt5 - 11.0) / 8.0) < 1e-15);
}

TEST_CASE("ambiguous report pairs are rejected") {
  const BinaryCIEnvironment a{0.0, 1.0, 0.5, 0.7, 0.7, 0.3, 0.3};
  BinaryCIEnvironment b = a;
  b.theta2 = 1.0 - 1e-7;  // shifts the reports by about 1e-7
  CHECK_THROWS_AS(optimal_pointwise_response(MixtureEnvironment{{{0.5, a}, {0.5, b}}}), AmbiguousReportMatching);
}

TEST_CASE("Blackwell regret") {
  SUBCASE("copy channel") {
    const BlackwellEnvironment env{0.1, 0.8, 0.4, 0.7, 0.2, 1.0, 0.0};
    CHECK(blackwell_regret(rules::PrecisionWeighted{}, env) < 1e-30);
  }
  SUBCASE("following the informed expert") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 200; ++i) {
      const auto env = canonicalize(BlackwellEnvironment{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)});
      CHECK(blackwell_regret(rules::FollowExpert{2}, env) == 0.0);
    }
  }
  SUBCASE("uniform garbling with a revealing informed expert") {
    const BlackwellEnvironment env{0.0, 1.0, 0.5, 1.0, 0.0, 0.5, 0.5};
    CHECK(std::abs(blackwell_regret(rules::SimpleAverage{}, env) - 0.0625) < 1e-15);
    CHECK(std::abs(blackwell_regret(rules::Constant{0.5}, env) - 0.25) < 1e-15);
  }
}

TEST_CASE("batch evaluation keeps input order") {
  std::mt19937_64 rng(4);
  std::vector<BinaryCIEnvironment> envs;
  for (int i = 0; i < 64; ++i) envs.push_back(from(oracle::random_params(rng)));
  const auto serial = batch_regret(rules::LogOdds{0.585}, envs, 1);
  const auto parallel = batch_regret(rules::LogOdds{0.585}, envs, 4);
  REQUIRE(serial.size() == envs.size());
  for (std::size_t i = 0; i < envs.size(); ++i) {
    CHECK(serial[i] == regret_value(rules::LogOdds{0.585}, envs[i]));
    CHECK(parallel[i] == serial[i]);
  }
}

TEST_CASE("compensated sum") {
  CompensatedSum s;
  s.add(1.0);
  for (int i = 0; i < 1000; ++i) s.add(1e-17);
  s.add(-1.0);
  CHECK(std::abs(s.value() - 1e-14) < 1e-20);
}
