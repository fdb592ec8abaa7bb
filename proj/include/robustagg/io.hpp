#pragma once

// JSON and CSV encodings of environments, rules, configs and results.
// Parse errors are InvalidArgument with the offending field in the message.

#include <string>
#include <vector>

#include <json.hpp>

#include "robustagg/aggregators.hpp"
#include "robustagg/certificates.hpp"
#include "robustagg/env.hpp"
#include "robustagg/regret.hpp"
#include "robustagg/search.hpp"

namespace robustagg::io {

using Json = nlohmann::ordered_json;

/// Parses JSON text; throws InvalidArgument on syntax errors.
Json parse(const std::string& text);

/// Accepts inline JSON (first non-space character '{' or '[') or a path to a
/// JSON file.
Json load_argument(const std::string& arg);

Json to_json(const BinaryCIEnvironment& env);
BinaryCIEnvironment env_from_json(const Json& j);

Json to_json(const BlackwellEnvironment& env);
BlackwellEnvironment blackwell_env_from_json(const Json& j);

Json to_json(const MixtureEnvironment& mix);
MixtureEnvironment mixture_from_json(const Json& j);

Json to_json(const AggregatorSpec& spec);
AggregatorSpec spec_from_json(const Json& j);

Json to_json(const SearchConfig& config);
/// Keys present in `j` override `base`.
SearchConfig config_from_json(const Json& j, SearchConfig base = {});

std::string to_string(DomainMode mode);
/// "unknown", "known01" or "known_marginal".
SearchDomain domain_from_string(const std::string& name);

Json to_json(const SearchResult& result);
Json to_json(const BlackwellSearchResult& result);

Json to_json(const RegretReport& report);
/// Columns: profile, prob, x1, x2, bayes, output, sq_error.
std::string to_csv(const RegretReport& report);

/// Columns: alpha, worst_case_regret, theta1, theta2, lambda2, p1_low, p2_low, q1_low, q2_low.
std::string sweep_csv(const std::vector<SweepPoint>& points);

Json to_json(const MixtureCertificate& cert);
Json to_json(const JointStructure& js);
Json to_json(const VerificationReport& report);
Json to_json(const GapReport& report);

/// Six decimal places, the reporting precision of tables.
std::string fixed6(double v);

}  // namespace robustagg::io
