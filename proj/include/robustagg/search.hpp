#pragma once

// Worst-case regret search.
//
// Stage 1 runs a derivative-free simplex (Nelder-Mead) maximisation from many
// seeded random starts over the free parameter box. Stage 2 takes the best
// distinct candidates and polishes each with coordinate-wise grid refinement:
// every pass scans each free coordinate on a grid of `refine_step` within
// `refine_radius` of the current point and keeps improvements, stopping once
// a full pass changes nothing. The reported value is always the regret of a
// concrete environment, so the search can under-report the supremum but never
// over-report it.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "robustagg/aggregators.hpp"
#include "robustagg/env.hpp"

namespace robustagg {

enum class DomainMode {
  UnknownState,       // all seven parameters free, prior mean hidden
  KnownZeroOne,       // theta1 = 0, theta2 = 1
  KnownMarginalMean,  // all seven free, prior mean visible to the aggregator
};

/// Box over (theta1, theta2, lambda2, p1_low, p2_low, q1_low, q2_low).
/// Coordinates with lower == upper are pinned.
struct SearchDomain {
  DomainMode mode = DomainMode::UnknownState;
  std::array<double, 7> lower{0, 0, 0, 0, 0, 0, 0};
  std::array<double, 7> upper{1, 1, 1, 1, 1, 1, 1};

  static SearchDomain unknown_state();
  static SearchDomain known_zero_one();
  static SearchDomain known_marginal_mean();
  /// Both states pinned at `c`; regret then only measures f(c, c) - c.
  static SearchDomain collapsed_state(double c);

  bool exposes_prior_mean() const { return mode == DomainMode::KnownMarginalMean; }
};

struct SearchConfig {
  int n_starts = 256;
  int local_iters = 2000;
  double refine_step = 1e-5;
  double refine_radius = 1e-3;
  std::uint64_t rng_seed = 20240601;
  int n_workers = 1;
  int top_k = 5;
  int max_refine_passes = 5000;
  double interior_margin = 1e-9;
};

/// Throws InvalidArgument when the config breaks its invariants.
void validate(const SearchConfig& config);

struct RefineStep {
  int candidate = 0;  // index into stage1_candidates
  int pass = 0;
  double value = 0.0;
};

template <class Env>
struct Candidate {
  Env env;
  double value = 0.0;
};

template <class Env>
struct BasicSearchResult {
  double value = 0.0;
  Env argmax_env;
  std::vector<Candidate<Env>> stage1_candidates;  // best first, before refinement
  std::vector<Candidate<Env>> refined_candidates;  // same order, after refinement
  std::vector<RefineStep> refine_trace;
};

using SearchResult = BasicSearchResult<BinaryCIEnvironment>;
using BlackwellSearchResult = BasicSearchResult<BlackwellEnvironment>;

/// Environment for a point of the (possibly unordered) 7-parameter box.
BinaryCIEnvironment env_from_point(const std::array<double, 7>& point);
BlackwellEnvironment blackwell_env_from_point(const std::array<double, 7>& point);

/// Throws InfeasibleDomain when the rule reads the prior mean but the domain
/// hides it.
SearchResult worst_case_regret(const AggregatorSpec& spec, const SearchDomain& domain, const SearchConfig& config);

BlackwellSearchResult blackwell_worst_case(const AggregatorSpec& spec, const SearchConfig& config);

struct SweepPoint {
  double alpha = 0.0;
  double worst_case_value = 0.0;
  BinaryCIEnvironment argmax_env;
};

/// One LogOdds worst-case search per grid value, in grid order. Grid points
/// run on config.n_workers threads; each inner search is serial.
std::vector<SweepPoint> sweep_alpha(const SearchDomain& domain, const std::vector<double>& alphas,
                                    const SearchConfig& config);

enum class AggregatorFamily { LogOdds, GeneralizedLogOdds };

struct ParameterRange {
  double lo = 0.0;
  double hi = 1.0;
};

struct OuterEvaluation {
  double alpha = 0.0;
  double gamma = 0.0;
  double worst_case_value = 0.0;
};

struct OptimizationResult {
  AggregatorSpec best_spec;
  double alpha = 0.0;
  double gamma = 0.0;
  double worst_case_value = 0.0;
  std::vector<OuterEvaluation> evaluations;
};

/// Grid search of the family's parameters minimising worst-case regret. Ties
/// go to the smaller alpha, then the smaller gamma. GeneralizedLogOdds reads
/// the environment's prior mean, so it needs a domain that exposes it.
OptimizationResult optimize_aggregator(AggregatorFamily family, const SearchDomain& domain, double outer_step,
                                       const SearchConfig& config, ParameterRange alpha_range = {0.0, 1.0},
                                       ParameterRange gamma_range = {-1.0, 1.0});

/// Grid lo, lo + step, ..., hi (hi included when it lands within 1e-9 of a step).
std::vector<double> make_grid(double lo, double hi, double step);

}  // namespace robustagg
