#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "robustagg/cli.hpp"
#include "robustagg/errors.hpp"
#include "robustagg/io.hpp"

using namespace robustagg;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "robustagg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / "robustagg_cli_test";
  fs::create_directories(dir);
  return dir;
}

const std::string kWorstInstance = [] {
  return io::to_json(env_from_reports(0.21097, 1.0, 0.65866, {0.21097, 0.87002}, {0.21097, 0.87002})).dump();
}();

}  // namespace

TEST_CASE("environment JSON round trip and field errors") {
  const BinaryCIEnvironment env{0.1, 0.9, 0.4, 0.3, 0.6, 0.8, 0.2};
  CHECK(io::env_from_json(io::to_json(env)) == env);

  auto j = io::to_json(env);
  j.erase("lambda2");
  CHECK_THROWS_WITH_AS(io::env_from_json(j), doctest::Contains("env.lambda2"), InvalidArgument);
  j = io::to_json(env);
  j["p2_low"] = "high";
  CHECK_THROWS_WITH_AS(io::env_from_json(j), doctest::Contains("env.p2_low"), InvalidArgument);
  j = io::to_json(env);
  j["extra"] = 1;
  CHECK_THROWS_WITH_AS(io::env_from_json(j), doctest::Contains("env.extra"), InvalidArgument);
  j = io::to_json(env);
  j["q1_low"] = 2.0;
  CHECK_THROWS_AS(io::env_from_json(j), InvalidArgument);

  const MixtureEnvironment mix{{{0.25, env}, {0.75, BinaryCIEnvironment{}}}};
  const auto back = io::mixture_from_json(io::to_json(mix));
  REQUIRE(back.components.size() == 2);
  CHECK(back.components[0].weight == 0.25);
  CHECK(back.components[0].env == env);

  const BlackwellEnvironment b{0.1, 0.9, 0.4, 0.3, 0.6, 0.8, 0.2};
  CHECK(io::blackwell_env_from_json(io::to_json(b)) == b);
}

TEST_CASE("aggregator spec JSON") {
  const std::vector<AggregatorSpec> specs{
      rules::LogOdds{0.585},
      rules::GeneralizedLogOdds{0.656089, 0.498268, PriorSource::environment()},
      rules::GeneralizedLogOdds{0.5, -0.25, PriorSource::known(0.3)},
      rules::SimpleAverage{},
      rules::AveragePrior{},
      rules::AveragePrior{PriorSource::known(0.2)},
      rules::HeuristicPrior{},
      rules::KWW{0.8, PriorSource::arithmetic_mean()},
      rules::KWW{0.8, PriorSource::environment()},
      rules::PrecisionWeighted{},
      rules::Constant{0.25},
      rules::FollowExpert{2}};
  for (const auto& s : specs) {
    const auto j = io::to_json(s);
    CHECK(io::to_json(io::spec_from_json(j)) == j);
    CHECK(describe(io::spec_from_json(j)) == describe(s));
  }
  CHECK(io::to_json(rules::KWW{0.8, PriorSource::known(0.4)})["mu_policy"]["known"] == 0.4);
  CHECK(io::to_json(rules::GeneralizedLogOdds{})["mu"] == "env");

  CHECK_THROWS_WITH_AS(io::spec_from_json(io::parse(R"({"rule":"median"})")), doctest::Contains("spec.rule"),
                       InvalidArgument);
  CHECK_THROWS_WITH_AS(io::spec_from_json(io::parse(R"({"rule":"log_odds"})")), doctest::Contains("spec.alpha"),
                       InvalidArgument);
  CHECK_THROWS_AS(io::spec_from_json(io::parse(R"({"rule":"log_odds","alpha":3})")), InvalidArgument);
  CHECK_THROWS_AS(io::spec_from_json(io::parse(R"({"rule":"kww","lambda":0.5,"mu_policy":"median"})")), InvalidArgument);
  CHECK_THROWS_AS(io::parse("{not json"), InvalidArgument);
}

TEST_CASE("search config JSON") {
  const auto c = io::config_from_json(io::parse(R"({"n_starts": 12, "rng_seed": 5, "refine_step": 2e-5})"));
  CHECK(c.n_starts == 12);
  CHECK(c.rng_seed == 5);
  CHECK(c.refine_step == 2e-5);
  CHECK(c.local_iters == SearchConfig{}.local_iters);
  CHECK_THROWS_AS(io::config_from_json(io::parse(R"({"n_starts": 0})")), InvalidArgument);
  CHECK_THROWS_AS(io::config_from_json(io::parse(R"({"n_starts": 1.5})")), InvalidArgument);
  CHECK_THROWS_AS(io::config_from_json(io::parse(R"({"bogus": 1})")), InvalidArgument);
  CHECK(io::config_from_json(io::to_json(c)).n_starts == 12);
}

TEST_CASE("CSV layouts") {
  const auto rep = expected_regret(rules::LogOdds{0.585}, BinaryCIEnvironment{0.1, 0.9, 0.4, 0.3, 0.6, 0.8, 0.2});
  const auto csv = io::to_csv(rep);
  CHECK(csv.rfind("profile,prob,x1,x2,bayes,output,sq_error\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  const auto sweep = io::sweep_csv({SweepPoint{0.5, 0.0295, BinaryCIEnvironment{}}});
  CHECK(sweep == "alpha,worst_case_regret,theta1,theta2,lambda2,p1_low,p2_low,q1_low,q2_low\n"
                 "0.500000,0.029500,0.000000,1.000000,0.500000,0.500000,0.500000,0.500000,0.500000\n");
  CHECK(io::fixed6(31.0 / 1326.0) == "0.023379");
}

TEST_CASE("aggregate command") {
  auto r = run({"aggregate", "--spec", R"({"rule":"log_odds","alpha":0.585})", "0.5", "0.5"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out == "0.5\n");
  CHECK(run({"aggregate", "--spec", R"({"rule":"constant","value":0.5})", "0.1", "0.9"}).out == "0.5\n");
  const auto kww = run({"aggregate", "--spec", R"({"rule":"kww","lambda":1,"mu_policy":"arithmetic_mean"})", "0.3", "0.7"});
  const auto avg = run({"aggregate", "--spec", R"({"rule":"average_prior","mu_policy":"arithmetic_mean"})", "0.3", "0.7"});
  CHECK(kww.out == avg.out);
  CHECK(run({"aggregate", "--spec", R"({"rule":"log_odds","alpha":1})", "0.8888888888888888", "0.8888888888888888"}).out ==
        "0.984615384615\n");
  CHECK(run({"aggregate", "--spec", R"({"rule":"log_odds"})", "0.5", "0.5"}).code == cli::kUsage);
  CHECK(run({"aggregate", "--spec", R"({"rule":"log_odds","alpha":0.5})", "1.5", "0.5"}).code == cli::kUsage);
  CHECK(run({"aggregate"}).code == cli::kUsage);
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
}

TEST_CASE("regret command") {
  auto r = run({"regret", "--spec", R"({"rule":"log_odds","alpha":0.585})", "--env", kWorstInstance});
  REQUIRE(r.code == cli::kOk);
  const auto j = io::parse(r.out);
  CHECK(std::abs(j["total"].get<double>() - 0.025512) < 1e-5);
  CHECK(j["rows"].size() == 4);

  const auto anchor = run({"regret", "--spec", R"({"rule":"gen_log_odds","alpha":1,"gamma":1,"mu":"env"})", "--env",
                           R"({"theta1":0,"theta2":1,"lambda2":0.3,"p1_low":0.8,"p2_low":0.6,"q1_low":0.1,"q2_low":0.35})"});
  CHECK(io::parse(anchor.out)["total"].get<double>() < 1e-24);

  const auto csv = run({"regret", "--spec", R"({"rule":"constant"})", "--env", kWorstInstance, "--format", "csv"});
  CHECK(csv.out.rfind("profile,prob,x1,x2,bayes,output,sq_error", 0) == 0);

  const auto bad = run({"regret", "--spec", R"({"rule":"constant"})", "--env", R"({"theta1":0,"theta2":1})"});
  CHECK(bad.code == cli::kUsage);
  CHECK(bad.err.find("env.lambda2") != std::string::npos);
  CHECK(run({"regret", "--spec", R"({"rule":"constant"})", "--env", "/nonexistent/env.json"}).code == cli::kUsage);
}

TEST_CASE("worst-case command") {
  const auto r = run({"worst-case", "--spec", R"({"rule":"log_odds","alpha":0.585})", "--domain", "unknown", "--starts", "48"});
  REQUIRE(r.code == cli::kOk);
  const auto j = io::parse(r.out);
  CHECK(std::abs(j["result"]["value"].get<double>() - 0.025512) <= 1e-4);
  CHECK(j["config"]["n_starts"] == 48);
  CHECK(j["domain"] == "unknown");

  const auto k = run({"worst-case", "--spec", R"({"rule":"log_odds","alpha":0.5168})", "--domain", "known01", "--starts",
                      "48", "--format", "csv"});
  CHECK(k.out.rfind("worst_case_regret,0.02259", 0) == 0);

  const auto c = run({"worst-case", "--spec", R"({"rule":"constant","value":0.5})", "--starts", "32"});
  CHECK(io::parse(c.out)["result"]["value"].get<double>() >= 0.24);

  const auto inf = run({"worst-case", "--spec", R"({"rule":"gen_log_odds","alpha":0.6,"gamma":0.5,"mu":"env"})",
                        "--domain", "unknown", "--starts", "4"});
  CHECK(inf.code == cli::kInfeasible);
  CHECK(run({"worst-case", "--spec", R"({"rule":"constant"})", "--domain", "nowhere"}).code == cli::kUsage);
  CHECK(run({"worst-case", "--spec", R"({"rule":"constant"})", "--starts", "0"}).code == cli::kUsage);

  const auto bw = run({"worst-case", "--spec", R"({"rule":"follow_expert","expert":2})", "--blackwell", "--starts", "8"});
  CHECK(io::parse(bw.out)["result"]["value"].get<double>() == 0.0);
}

TEST_CASE("seeded output is byte-identical, including across job counts") {
  const std::vector<std::string> base{"worst-case", "--spec", R"({"rule":"log_odds","alpha":0.6})", "--starts", "16",
                                      "--seed", "42"};
  auto one = base, three = base;
  one.insert(one.end(), {"--jobs", "1"});
  three.insert(three.end(), {"--jobs", "3"});
  const auto a = run(one), b = run(one), c = run(three);
  CHECK(a.out == b.out);
  CHECK(io::parse(a.out)["result"].dump() == io::parse(c.out)["result"].dump());
}

TEST_CASE("jobs default from the environment") {
  ::setenv("ROBUSTAGG_JOBS", "2", 1);
  const auto r = run({"worst-case", "--spec", R"({"rule":"simple_average"})", "--starts", "4"});
  CHECK(io::parse(r.out)["config"]["n_workers"] == 2);
  ::setenv("ROBUSTAGG_JOBS", "zero", 1);
  CHECK(run({"worst-case", "--spec", R"({"rule":"simple_average"})", "--starts", "4"}).code == cli::kUsage);
  ::unsetenv("ROBUSTAGG_JOBS");
}

TEST_CASE("sweep command") {
  const auto r = run({"sweep", "--domain", "unknown", "--grid", "0.5", "--starts", "32"});
  REQUIRE(r.code == cli::kOk);
  std::istringstream lines(r.out);
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  CHECK(header == "alpha,worst_case_regret,theta1,theta2,lambda2,p1_low,p2_low,q1_low,q2_low");
  CHECK(first.rfind("0.000000,0.250000,", 0) == 0);

  const auto k = run({"sweep", "--domain", "known01", "--alpha-min", "0.45", "--alpha-max", "0.45", "--starts", "48",
                      "--format", "json"});
  const auto j = io::parse(k.out);
  REQUIRE(j.size() == 1);
  CHECK(std::abs(j[0]["worst_case_regret"].get<double>() - 0.02929) <= 5e-4);

  CHECK(run({"sweep", "--grid", "0"}).code == cli::kUsage);
  CHECK(run({"sweep", "--alpha-min", "0.8", "--alpha-max", "0.2"}).code == cli::kUsage);
  CHECK(run({"sweep", "--family", "kww"}).code == cli::kUsage);
}

TEST_CASE("certify command") {
  const auto all = run({"certify", "--which", "all", "--tol", "1e-12"});
  CHECK(all.code == cli::kOk);
  const auto unknown = run({"certify", "--which", "unknown"});
  CHECK(unknown.out.find("31/1326") != std::string::npos);
  CHECK(unknown.out.find("0.023379") != std::string::npos);
  const auto x = run({"certify", "--which", "xor"});
  CHECK(x.out.find("0.250000") != std::string::npos);
  const auto j = io::parse(run({"certify", "--format", "json"}).out);
  CHECK(j["passed"] == true);
  CHECK(j["certificates"].size() == 3);
  CHECK(run({"certify", "--tol", "1e-30"}).code == cli::kVerificationFailure);
  CHECK(run({"certify", "--tol", "-1"}).code == cli::kUsage);
  CHECK(run({"certify", "--which", "everything"}).code == cli::kUsage);
}

TEST_CASE("reproduce command writes artifacts with a manifest") {
  const auto dir = scratch_dir();
  const auto table = dir / "table6.md";
  const auto r = run({"reproduce", "--table", "6", "--starts", "32", "--out", table.string()});
  REQUIRE(r.code == cli::kOk);
  const auto text = slurp(table);
  CHECK(text.find("| prior_mean |") != std::string::npos);
  CHECK(text.find("0.250000") != std::string::npos);
  const auto manifest = io::parse(slurp(cli::manifest_path(table.string())));
  CHECK(manifest["command"] == "reproduce");
  CHECK(manifest["rng_seed"] == SearchConfig{}.rng_seed);
  CHECK(manifest["artifacts"][0] == table.string());
  CHECK(manifest["version"] == ROBUSTAGG_VERSION);
  CHECK(manifest["config"]["config"]["n_starts"] == 32);

  // same flags, same bytes
  const auto again = dir / "table6_again.md";
  run({"reproduce", "--table", "6", "--starts", "32", "--out", again.string()});
  CHECK(slurp(again) == text);

  const auto ladder = run({"reproduce", "--table", "1", "--starts", "32", "--format", "json"});
  const auto g = io::parse(ladder.out);
  CHECK(g["separated"] == true);
  CHECK(g["entries"].size() == 9);

  const auto fig = run({"reproduce", "--figure", "2", "--grid", "0.5", "--starts", "32", "--fast"});
  CHECK(fig.code == cli::kOk);
  CHECK(fig.out.find("0.517000,0.0225") != std::string::npos);

  CHECK(run({"reproduce"}).code == cli::kUsage);
  CHECK(run({"reproduce", "--table", "3"}).code == cli::kUsage);
  CHECK(run({"reproduce", "--table", "2", "--figure", "1"}).code == cli::kUsage);
  fs::remove_all(dir);
}

TEST_CASE("table definitions") {
  CHECK(cli::table_rows(2).size() == 5);
  CHECK(cli::table_rows(4).size() == 5);
  CHECK(cli::table_rows(6).size() == 4);
  CHECK_THROWS_AS(cli::table_rows(5), InvalidArgument);
  const auto [domain, alphas] = cli::figure_grid(1, 0.25);
  CHECK(domain.mode == DomainMode::UnknownState);
  CHECK(alphas == std::vector<double>{0.0, 0.25, 0.5, 0.585, 0.75, 1.0});
}
