#pragma once

// Command-line front end. run() is the whole program minus process exit, so
// tests can drive it with in-memory streams.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "robustagg/io.hpp"
#include "robustagg/search.hpp"

namespace robustagg::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kVerificationFailure = 2,
  kInfeasible = 3,
};

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct RunManifest {
  std::string command;
  io::Json config;
  std::uint64_t rng_seed = 0;
  std::vector<std::string> artifacts;
  double duration_seconds = 0.0;
  std::string version = ROBUSTAGG_VERSION;
};

io::Json to_json(const RunManifest& m);

/// Path of the manifest written next to `artifact`.
std::string manifest_path(const std::string& artifact);

// --- reproduction tables ----------------------------------------------------

struct TableRow {
  std::string label;
  std::string parameter;
  AggregatorSpec spec;
  SearchDomain domain;
  double reference = 0.0;  // published worst-case value
};

struct TableResult {
  TableRow row;
  std::optional<double> value;  // empty when the search failed
  std::string error;
};

/// Comparison rows: 2 (unknown state), 4 (known {0,1} state), 6 (known
/// marginal). Throws InvalidArgument for other numbers.
std::vector<TableRow> table_rows(int table);

std::vector<TableResult> run_table(int table, const SearchConfig& config);

/// Domain and alpha grid of a sensitivity figure (1: unknown, 2: known {0,1}).
/// The grid is lo..1 in `step` plus the figure's optimum alpha.
std::pair<SearchDomain, std::vector<double>> figure_grid(int figure, double step);

}  // namespace robustagg::cli
