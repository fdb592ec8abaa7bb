#pragma once

// Binary-state, binary-signal information structures for two experts.
//
// The canonical environment is the 7-parameter conditionally independent
// (CI) world: two state values theta1 <= theta2, the prior mass lambda2 on
// theta2, and each expert's chance of the low signal under each state.
// Everything else (reports, joint profile probabilities, the omniscient
// Bayes forecast) is derived from those seven numbers.

#include <array>
#include <string>
#include <vector>

namespace robustagg {

/// Joint probabilities below this are treated as impossible profiles.
inline constexpr double kZeroProbability = 1e-15;

enum class Signal { Low, High };
enum class Expert { First, Second };

struct SignalProfile {
  Signal s1;
  Signal s2;

  friend constexpr bool operator==(SignalProfile, SignalProfile) = default;
};

inline constexpr std::array<SignalProfile, 4> kAllProfiles = {{
    {Signal::Low, Signal::Low},
    {Signal::Low, Signal::High},
    {Signal::High, Signal::Low},
    {Signal::High, Signal::High},
}};

/// "LL", "LH", "HL", "HH".
std::string to_string(SignalProfile profile);

struct BinaryCIEnvironment {
  double theta1 = 0.0;
  double theta2 = 1.0;
  double lambda2 = 0.5;
  double p1_low = 0.5;  // P(expert 1 sees Low | theta1)
  double p2_low = 0.5;  // P(expert 2 sees Low | theta1)
  double q1_low = 0.5;  // P(expert 1 sees Low | theta2)
  double q2_low = 0.5;  // P(expert 2 sees Low | theta2)

  friend bool operator==(const BinaryCIEnvironment&, const BinaryCIEnvironment&) = default;
};

/// Throws InvalidArgument naming the first offending field.
void validate(const BinaryCIEnvironment& env);

/// Relabels the states so that theta1 <= theta2. The world is unchanged:
/// lambda2 becomes 1 - lambda2 and the per-state signal rows swap.
BinaryCIEnvironment canonicalize(const BinaryCIEnvironment& env);

/// Swaps the roles of the two experts.
BinaryCIEnvironment swap_experts(const BinaryCIEnvironment& env);

double prior_mean(const BinaryCIEnvironment& env);

/// P(signal) for one expert, marginalised over the state.
double signal_prob(const BinaryCIEnvironment& env, Expert expert, Signal signal);

/// Expert's posterior probability of outcome 1 after seeing `signal`.
/// Throws ZeroProbabilitySignal when the signal never occurs.
double report(const BinaryCIEnvironment& env, Expert expert, Signal signal);

double joint_signal_prob(const BinaryCIEnvironment& env, SignalProfile profile);

/// Posterior mean of the state given both signals, i.e. the omniscient
/// forecast. Throws ZeroProbabilitySignal on impossible profiles.
double bayes_forecast(const BinaryCIEnvironment& env, SignalProfile profile);

struct RescaledEnvironment {
  BinaryCIEnvironment unit_env;  // theta1 = 0, theta2 = 1
  double delta = 1.0;            // theta2 - theta1
  double offset = 0.0;           // theta1
};

/// Maps the state space affinely onto {0, 1}. Reports transform as
/// x = offset + delta * p. Throws DegenerateStateSpace when theta1 == theta2.
RescaledEnvironment rescale_to_unit(const BinaryCIEnvironment& env);

/// Reconstructs signal probabilities from a state space, a prior mean and
/// the two reports of each expert. Each expert's low report must lie in
/// [theta1, mu] and the high report in [mu, theta2].
BinaryCIEnvironment env_from_reports(double theta1, double theta2, double mu,
                                     std::array<double, 2> expert1_reports,
                                     std::array<double, 2> expert2_reports);

// --- Blackwell-ordered structures -----------------------------------------
//
// Expert 2 is informed: its signal is drawn from the state. Expert 1 sees a
// garbling of expert 2's signal through a 2x2 channel, so it is independent
// of the state given expert 2's signal.

struct BlackwellEnvironment {
  double theta1 = 0.0;
  double theta2 = 1.0;
  double lambda2 = 0.5;
  double r_low = 0.5;   // P(informed Low | theta1)
  double r_high = 0.5;  // P(informed Low | theta2)
  double g_LL = 0.5;    // P(garbled Low | informed Low)
  double g_HL = 0.5;    // P(garbled Low | informed High)

  friend bool operator==(const BlackwellEnvironment&, const BlackwellEnvironment&) = default;
};

void validate(const BlackwellEnvironment& env);
BlackwellEnvironment canonicalize(const BlackwellEnvironment& env);

double prior_mean(const BlackwellEnvironment& env);

/// profile.s1 is the garbled (less informed) expert, profile.s2 the informed one.
double blackwell_joint(const BlackwellEnvironment& env, SignalProfile profile);
double signal_prob(const BlackwellEnvironment& env, Expert expert, Signal signal);
double report(const BlackwellEnvironment& env, Expert expert, Signal signal);

// --- Mixtures ---------------------------------------------------------------

struct MixtureComponent {
  double weight = 1.0;
  BinaryCIEnvironment env;
};

struct MixtureEnvironment {
  std::vector<MixtureComponent> components;
};

/// Weights must be nonnegative and sum to 1 within 1e-12.
void validate(const MixtureEnvironment& mix);

}  // namespace robustagg
