#pragma once

// Exact adversarial instances that lower-bound the worst-case regret of every
// aggregator, with their closed-form values, plus a verifier that recomputes
// each expected quantity from the raw structure.
//
// A mixture certificate works because the adversary can randomise between
// information structures that produce the same report pairs: no function of
// the reports can beat the pointwise responder that averages the Bayes
// targets behind each pair, and its regret is the certified bound.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "robustagg/aggregators.hpp"
#include "robustagg/env.hpp"
#include "robustagg/errors.hpp"
#include "robustagg/regret.hpp"

namespace robustagg {

/// A verification failure; field() names the first quantity that did not match.
class CertificateMismatch : public Error {
 public:
  CertificateMismatch(std::string field, const std::string& what) : Error(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// A numeric constant together with its exact expression.
struct ClosedForm {
  double value = 0.0;
  std::string expression;
};

/// Expected derived quantities of one mixture component.
struct ComponentExpectation {
  std::array<std::array<double, 2>, 2> reports{};  // [expert][signal], signal 0 = Low
  std::array<double, 4> joint_probs{};             // in kAllProfiles order
  std::array<double, 4> bayes{};                   // in kAllProfiles order
};

struct MixtureCertificate {
  std::string name;
  MixtureEnvironment mixture;
  std::vector<ComponentExpectation> components;
  std::vector<ResponseEntry> expected_responder;  // probability field unused
  ClosedForm closed_form;
  /// Also require every component to induce the same per-expert marginal
  /// report distribution.
  bool identical_marginals = false;
};

/// Non-CI structure: a full joint table of signal profiles per state.
struct JointStructure {
  std::array<double, 2> theta{0.0, 1.0};
  std::array<double, 2> prior{0.5, 0.5};
  std::array<std::array<double, 4>, 2> conditional{};  // [state][profile in kAllProfiles order]
};

/// Throws InvalidArgument unless the prior and each conditional row sum to 1.
void validate(const JointStructure& js);

double joint_prob(const JointStructure& js, SignalProfile profile);
double report(const JointStructure& js, Expert expert, Signal signal);
double bayes_forecast(const JointStructure& js, SignalProfile profile);

double joint_structure_regret(const AggregatorFn& f, const JointStructure& js);
double joint_structure_regret(const AggregatorSpec& spec, const JointStructure& js);

MixtureCertificate build_unknown_state_certificate();
MixtureCertificate build_known_marginal_certificate();
JointStructure build_xor_certificate();

struct FieldCheck {
  std::string field;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool passed = true;
};

struct VerificationReport {
  std::string certificate;
  ClosedForm closed_form;
  double computed_value = 0.0;
  std::vector<FieldCheck> fields;
  bool passed = true;
  double max_deviation = 0.0;
};

/// Recomputes every expected field and reports per-field deviations.
/// Marginal identity is checked at min(tol, 1e-14).
VerificationReport check_certificate(const MixtureCertificate& cert, double tol);

/// As check_certificate, but throws CertificateMismatch on the first failing field.
VerificationReport verify_certificate(const MixtureCertificate& cert, double tol);

/// Reports all equal 1/2 and Constant(1/2) scores exactly 1/4.
VerificationReport check_xor_certificate(const JointStructure& js, double tol);

/// Per-expert marginal report distribution of an environment: (report, mass)
/// for the low and high signal, sorted by report.
std::array<std::array<std::pair<double, double>, 2>, 2> marginal_reports(const BinaryCIEnvironment& env);

struct BoundEntry {
  std::string setting;    // known_zero_one, unknown_state, known_marginal
  std::string structure;  // conditionally_independent, blackwell, general
  double lower = 0.0;
  std::string lower_expression;
  std::string lower_source;
  double upper = 0.0;
  std::string upper_expression;
  std::string upper_source;
};

/// Optional search results to use instead of the reported upper bounds.
struct SearchedUpperBounds {
  std::optional<double> unknown_state;
  std::optional<double> known_zero_one;
  std::optional<double> known_marginal;
};

struct GapReport {
  std::vector<BoundEntry> entries;
  double unknown_lower = 0.0;
  double known_zero_one_upper = 0.0;
  double separation_margin = 0.0;  // unknown_lower - known_zero_one_upper
  bool separated = false;
};

/// Best upper bounds as reported for the log-odds rules.
inline constexpr double kReportedUnknownUpper = 0.025512;
inline constexpr double kReportedKnownZeroOneUpper = 0.022599;
inline constexpr double kReportedKnownMarginalUpper = 0.022763;

/// Bound ladder across settings. Lower bounds come from verified
/// certificates; throws CertificateMismatch if one fails at 1e-12.
GapReport lower_bound_gap_report(const SearchedUpperBounds& searched = {});

}  // namespace robustagg
