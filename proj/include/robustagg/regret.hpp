#pragma once

// Expected relative loss of an aggregator against the omniscient Bayes
// forecast. Under squared loss the regret equals the expected squared gap
// between the two forecasts, which is what expected_regret enumerates over
// the four signal profiles. expected_regret_via_outcomes evaluates the loss
// difference at the outcome level instead and serves as a cross-check.

#include <functional>
#include <span>
#include <vector>

#include "robustagg/aggregators.hpp"
#include "robustagg/env.hpp"

namespace robustagg {

/// Any rule mapping (x1, x2) to a forecast.
using AggregatorFn = std::function<double(double, double)>;

struct RegretRow {
  SignalProfile profile;
  double joint_prob = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;
  double bayes_target = 0.0;
  double aggregator_output = 0.0;
  double squared_error = 0.0;
};

struct RegretReport {
  double total = 0.0;
  std::vector<RegretRow> rows;  // only profiles with positive probability
};

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v);
  double value() const { return sum_ + correction_; }

 private:
  double sum_ = 0.0;
  double correction_ = 0.0;
};

/// The rule sees the environment's prior mean through its context.
RegretReport expected_regret(const AggregatorSpec& spec, const BinaryCIEnvironment& env);
RegretReport expected_regret(const AggregatorFn& f, const BinaryCIEnvironment& env);

/// Same total as expected_regret(...).total without building the rows.
double regret_value(const AggregatorSpec& spec, const BinaryCIEnvironment& env);

/// Sum over states, signal profiles and outcomes of
/// P(theta, s) Bern(theta)(w) [(f - w)^2 - (Bayes - w)^2].
double expected_regret_via_outcomes(const AggregatorSpec& spec, const BinaryCIEnvironment& env);
double expected_regret_via_outcomes(const AggregatorFn& f, const BinaryCIEnvironment& env);

double mixture_regret(const AggregatorSpec& spec, const MixtureEnvironment& mix);
double mixture_regret(const AggregatorFn& f, const MixtureEnvironment& mix);

/// Report pairs closer than this (max-norm) are the same input to the aggregator.
inline constexpr double kReportMatchTol = 1e-9;
/// Pairs that differ by more than kReportMatchTol but less than this are
/// rejected as ambiguous.
inline constexpr double kReportAmbiguityBand = 1e-6;

struct ResponseEntry {
  double x1 = 0.0;
  double x2 = 0.0;
  double forecast = 0.0;
  double probability = 0.0;  // mixture probability of this report pair
};

/// The unconstrained minimiser of mixture regret: for each realised report
/// pair, the probability-weighted mean of the Bayes targets that produce it.
class ResponseTable {
 public:
  explicit ResponseTable(std::vector<ResponseEntry> entries) : entries_(std::move(entries)) {}

  const std::vector<ResponseEntry>& entries() const { return entries_; }

  /// Throws InvalidArgument if no entry matches within kReportMatchTol.
  double lookup(double x1, double x2) const;

  /// Callable view; the table must outlive the returned function.
  AggregatorFn as_function() const;

 private:
  std::vector<ResponseEntry> entries_;
};

/// Throws AmbiguousReportMatching when two report pairs fall in the guard band.
ResponseTable optimal_pointwise_response(const MixtureEnvironment& mix);

/// Regret on a Blackwell-ordered structure: the Bayes forecast is the informed
/// expert's report x2.
double blackwell_regret(const AggregatorSpec& spec, const BlackwellEnvironment& env);
double blackwell_regret(const AggregatorFn& f, const BlackwellEnvironment& env);

/// Evaluates many environments on n_workers threads; output order follows input.
std::vector<double> batch_regret(const AggregatorSpec& spec, std::span<const BinaryCIEnvironment> envs,
                                 int n_workers);

}  // namespace robustagg
