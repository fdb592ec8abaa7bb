#include "robustagg/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "robustagg/errors.hpp"
#include "robustagg/parallel.hpp"
#include "robustagg/regret.hpp"

namespace robustagg {

namespace {

using Point = std::array<double, 7>;
using Objective = std::function<double(const Point&)>;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_eval(const Objective& f, const Point& x) {
  const double v = f(x);
  return std::isnan(v) ? kNegInf : v;
}

struct Box {
  Point lo;
  Point hi;
  std::vector<int> free;  // coordinates with lo < hi

  Box(const Point& lower, const Point& upper) : lo(lower), hi(upper) {
    for (int j = 0; j < 7; ++j) {
      if (lo[j] > hi[j]) throw InvalidArgument("search box has lower > upper");
      if (lo[j] < hi[j]) free.push_back(j);
    }
  }
};

// Nelder-Mead over unconstrained angles y; coordinate j of the box point is
// lo + (hi - lo) (1 + sin y) / 2, so every trial point is feasible and the
// simplex cannot collapse onto a face of the box.
class SimplexSearch {
 public:
  SimplexSearch(const Objective& f, const Box& box) : f_(f), box_(box), d_(box.free.size()) {}

  Point to_point(const std::vector<double>& y) const {
    Point x = box_.lo;
    for (std::size_t k = 0; k < d_; ++k) {
      const int j = box_.free[k];
      x[j] = box_.lo[j] + (box_.hi[j] - box_.lo[j]) * 0.5 * (1.0 + std::sin(y[k]));
      x[j] = std::clamp(x[j], box_.lo[j], box_.hi[j]);
    }
    return x;
  }

  std::vector<double> to_angles(const Point& x) const {
    std::vector<double> y(d_);
    for (std::size_t k = 0; k < d_; ++k) {
      const int j = box_.free[k];
      const double u = 2.0 * (x[j] - box_.lo[j]) / (box_.hi[j] - box_.lo[j]) - 1.0;
      y[k] = std::asin(std::clamp(u, -1.0, 1.0));
    }
    return y;
  }

  // Maximises f from `start`; returns the best vertex found.
  std::pair<Point, double> maximize(const Point& start, int iterations) const {
    const std::size_t n = d_;
    std::vector<std::vector<double>> simplex(n + 1, to_angles(start));
    std::vector<double> values(n + 1);
    for (std::size_t k = 0; k < n; ++k) simplex[k + 1][k] += kInitialStep;
    for (std::size_t i = 0; i <= n; ++i) values[i] = value(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    for (int it = 0; it < iterations; ++it) {
      std::iota(order.begin(), order.end(), 0);
      // best (largest) first; index tie-break keeps runs reproducible
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
      const std::size_t best = order.front();
      const std::size_t worst = order.back();
      const std::size_t second_worst = order[n - 1];

      if (converged(simplex, values, best, worst)) break;

      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t i = 0; i <= n; ++i) {
        if (i == worst) continue;
        for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / static_cast<double>(n);
      }
      auto along = [&](double t, std::vector<double>& out) {
        for (std::size_t k = 0; k < n; ++k) out[k] = centroid[k] + t * (simplex[worst][k] - centroid[k]);
      };

      along(-1.0, trial);
      const double reflected = value(trial);
      if (reflected > values[best]) {
        along(-2.0, trial2);
        const double expanded = value(trial2);
        if (expanded > reflected) {
          simplex[worst] = trial2;
          values[worst] = expanded;
        } else {
          simplex[worst] = trial;
          values[worst] = reflected;
        }
        continue;
      }
      if (reflected > values[second_worst]) {
        simplex[worst] = trial;
        values[worst] = reflected;
        continue;
      }
      const bool outside = reflected > values[worst];
      along(outside ? -0.5 : 0.5, trial2);
      const double contracted = value(trial2);
      if (contracted > (outside ? reflected : values[worst])) {
        simplex[worst] = trial2;
        values[worst] = contracted;
        continue;
      }
      for (std::size_t i = 0; i <= n; ++i) {
        if (i == best) continue;
        for (std::size_t k = 0; k < n; ++k) simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
        values[i] = value(simplex[i]);
      }
    }
    const auto best = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
    return {to_point(simplex[best]), values[best]};
  }

 private:
  static constexpr double kInitialStep = 0.4;

  double value(const std::vector<double>& y) const { return safe_eval(f_, to_point(y)); }

  bool converged(const std::vector<std::vector<double>>& simplex, const std::vector<double>& values,
                 std::size_t best, std::size_t worst) const {
    if (values[best] - values[worst] > 1e-15 * (1.0 + std::abs(values[best]))) return false;
    double diameter = 0.0;
    for (const auto& v : simplex) {
      for (std::size_t k = 0; k < d_; ++k) diameter = std::max(diameter, std::abs(v[k] - simplex[best][k]));
    }
    return diameter < 1e-10;
  }

  const Objective& f_;
  const Box& box_;
  std::size_t d_;
};

struct Scored {
  Point x;
  double value;
};

struct EngineResult {
  std::vector<Scored> stage1;
  std::vector<Scored> refined;
  std::vector<RefineStep> trace;
  std::size_t best = 0;
};

Scored refine(const Objective& f, const Box& box, Scored start, const SearchConfig& cfg, int candidate,
              std::vector<RefineStep>& trace) {
  const int reach = static_cast<int>(std::llround(cfg.refine_radius / cfg.refine_step));
  Scored cur = start;
  for (int pass = 1; pass <= cfg.max_refine_passes; ++pass) {
    bool improved = false;
    for (int j : box.free) {
      const double centre = cur.x[j];
      double best_v = centre;
      double best_f = cur.value;
      Point probe = cur.x;
      for (int m = -reach; m <= reach; ++m) {
        if (m == 0) continue;
        const double v = std::clamp(centre + m * cfg.refine_step, box.lo[j], box.hi[j]);
        if (v == centre) continue;
        probe[j] = v;
        const double fv = safe_eval(f, probe);
        if (fv > best_f) {
          best_f = fv;
          best_v = v;
        }
      }
      if (best_f > cur.value) {
        cur.x[j] = best_v;
        cur.value = best_f;
        improved = true;
      }
    }
    trace.push_back(RefineStep{candidate, pass, cur.value});
    if (!improved) break;
  }
  return cur;
}

EngineResult two_stage_maximize(const Objective& f, const Box& box, const SearchConfig& cfg,
                                const std::function<Point(const Point&)>& canonical) {
  validate(cfg);
  EngineResult out;
  if (box.free.empty()) {
    const Scored only{box.lo, safe_eval(f, box.lo)};
    out.stage1 = {only};
    out.refined = {only};
    out.trace.push_back(RefineStep{0, 1, only.value});
    return out;
  }

  // Starting points are drawn serially so they do not depend on scheduling.
  std::mt19937_64 rng(cfg.rng_seed);
  std::vector<Point> starts(static_cast<std::size_t>(cfg.n_starts));
  for (auto& s : starts) {
    s = box.lo;
    for (int j : box.free) {
      const double lo = box.lo[j] + cfg.interior_margin;
      const double hi = box.hi[j] - cfg.interior_margin;
      s[j] = lo < hi ? std::uniform_real_distribution<double>(lo, hi)(rng) : 0.5 * (box.lo[j] + box.hi[j]);
    }
  }

  SimplexSearch simplex(f, box);
  std::vector<Scored> local(starts.size());
  parallel_for(starts.size(), cfg.n_workers, [&](std::size_t i) {
    auto [x, v] = simplex.maximize(starts[i], cfg.local_iters);
    x = canonical(x);
    local[i] = Scored{x, safe_eval(f, x)};
  });

  std::vector<std::size_t> order(local.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return local[a].value > local[b].value; });

  // Top-k candidates, skipping near-duplicates of ones already taken.
  for (std::size_t idx : order) {
    if (static_cast<int>(out.stage1.size()) >= cfg.top_k) break;
    const bool duplicate = std::any_of(out.stage1.begin(), out.stage1.end(), [&](const Scored& s) {
      double dist = 0.0;
      for (int j = 0; j < 7; ++j) dist = std::max(dist, std::abs(s.x[j] - local[idx].x[j]));
      return dist < 1e-4;
    });
    if (!duplicate) out.stage1.push_back(local[idx]);
  }

  std::vector<std::vector<RefineStep>> traces(out.stage1.size());
  out.refined.resize(out.stage1.size());
  parallel_for(out.stage1.size(), cfg.n_workers, [&](std::size_t i) {
    out.refined[i] = refine(f, box, out.stage1[i], cfg, static_cast<int>(i), traces[i]);
  });
  for (auto& t : traces) out.trace.insert(out.trace.end(), t.begin(), t.end());

  for (std::size_t i = 1; i < out.refined.size(); ++i) {
    if (out.refined[i].value > out.refined[out.best].value) out.best = i;
  }
  return out;
}

Point ci_canonical(const Point& x) {
  if (x[0] <= x[1]) return x;
  return Point{x[1], x[0], 1.0 - x[2], x[5], x[6], x[3], x[4]};
}

Point blackwell_canonical(const Point& x) {
  if (x[0] <= x[1]) return x;
  return Point{x[1], x[0], 1.0 - x[2], x[4], x[3], x[5], x[6]};
}

template <class Env, class ToEnv>
BasicSearchResult<Env> package(const EngineResult& r, ToEnv&& to_env) {
  BasicSearchResult<Env> out;
  for (const auto& s : r.stage1) out.stage1_candidates.push_back({to_env(s.x), s.value});
  for (const auto& s : r.refined) out.refined_candidates.push_back({to_env(s.x), s.value});
  out.refine_trace = r.trace;
  out.value = r.refined[r.best].value;
  out.argmax_env = to_env(r.refined[r.best].x);
  return out;
}

}  // namespace

SearchDomain SearchDomain::unknown_state() { return SearchDomain{}; }

SearchDomain SearchDomain::known_zero_one() {
  SearchDomain d;
  d.mode = DomainMode::KnownZeroOne;
  d.lower[0] = d.upper[0] = 0.0;
  d.lower[1] = d.upper[1] = 1.0;
  return d;
}

SearchDomain SearchDomain::known_marginal_mean() {
  SearchDomain d;
  d.mode = DomainMode::KnownMarginalMean;
  return d;
}

SearchDomain SearchDomain::collapsed_state(double c) {
  SearchDomain d;
  d.lower[0] = d.upper[0] = c;
  d.lower[1] = d.upper[1] = c;
  return d;
}

void validate(const SearchConfig& config) {
  if (config.n_starts < 1) throw InvalidArgument("n_starts must be at least 1");
  if (config.local_iters < 0) throw InvalidArgument("local_iters must be nonnegative");
  if (!(config.refine_step > 0.0)) throw InvalidArgument("refine_step must be positive");
  if (config.refine_step > config.refine_radius) throw InvalidArgument("refine_step must not exceed refine_radius");
  if (config.top_k < 1) throw InvalidArgument("top_k must be at least 1");
  if (config.max_refine_passes < 1) throw InvalidArgument("max_refine_passes must be at least 1");
}

BinaryCIEnvironment env_from_point(const std::array<double, 7>& p) {
  return canonicalize(BinaryCIEnvironment{p[0], p[1], p[2], p[3], p[4], p[5], p[6]});
}

BlackwellEnvironment blackwell_env_from_point(const std::array<double, 7>& p) {
  return canonicalize(BlackwellEnvironment{p[0], p[1], p[2], p[3], p[4], p[5], p[6]});
}

SearchResult worst_case_regret(const AggregatorSpec& spec, const SearchDomain& domain, const SearchConfig& config) {
  validate(spec);
  if (requires_env_prior(spec) && !domain.exposes_prior_mean()) {
    throw InfeasibleDomain("aggregator reads the prior mean but the search domain does not expose it");
  }
  const Box box(domain.lower, domain.upper);
  const Objective f = [&spec](const Point& x) { return regret_value(spec, env_from_point(x)); };
  const auto r = two_stage_maximize(f, box, config, ci_canonical);
  return package<BinaryCIEnvironment>(r, env_from_point);
}

BlackwellSearchResult blackwell_worst_case(const AggregatorSpec& spec, const SearchConfig& config) {
  validate(spec);
  if (requires_env_prior(spec)) {
    throw InfeasibleDomain("Blackwell search does not expose the prior mean to the aggregator");
  }
  const Box box(Point{0, 0, 0, 0, 0, 0, 0}, Point{1, 1, 1, 1, 1, 1, 1});
  const Objective f = [&spec](const Point& x) { return blackwell_regret(spec, blackwell_env_from_point(x)); };
  const auto r = two_stage_maximize(f, box, config, blackwell_canonical);
  return package<BlackwellEnvironment>(r, blackwell_env_from_point);
}

std::vector<SweepPoint> sweep_alpha(const SearchDomain& domain, const std::vector<double>& alphas,
                                    const SearchConfig& config) {
  if (alphas.empty()) throw InvalidArgument("alpha grid is empty");
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("alpha grid values must lie in [0, 1]");
  }
  SearchConfig inner = config;
  inner.n_workers = 1;
  std::vector<SweepPoint> out(alphas.size());
  parallel_for(alphas.size(), config.n_workers, [&](std::size_t i) {
    const auto r = worst_case_regret(rules::LogOdds{alphas[i]}, domain, inner);
    out[i] = SweepPoint{alphas[i], r.value, r.argmax_env};
  });
  return out;
}

OptimizationResult optimize_aggregator(AggregatorFamily family, const SearchDomain& domain, double outer_step,
                                       const SearchConfig& config, ParameterRange alpha_range,
                                       ParameterRange gamma_range) {
  if (!(outer_step > 0.0)) throw InvalidArgument("outer grid step must be positive");
  const auto alphas = make_grid(alpha_range.lo, alpha_range.hi, outer_step);
  const auto gammas = family == AggregatorFamily::LogOdds ? std::vector<double>{0.0}
                                                          : make_grid(gamma_range.lo, gamma_range.hi, outer_step);

  std::vector<OuterEvaluation> evals;
  for (double a : alphas) {
    for (double g : gammas) evals.push_back(OuterEvaluation{a, g, 0.0});
  }
  auto spec_for = [&](const OuterEvaluation& e) -> AggregatorSpec {
    if (family == AggregatorFamily::LogOdds) return rules::LogOdds{e.alpha};
    return rules::GeneralizedLogOdds{e.alpha, e.gamma, PriorSource::environment()};
  };
  if (requires_env_prior(spec_for(evals.front())) && !domain.exposes_prior_mean()) {
    throw InfeasibleDomain("generalized log-odds needs a domain that exposes the prior mean");
  }

  SearchConfig inner = config;
  inner.n_workers = 1;
  parallel_for(evals.size(), config.n_workers, [&](std::size_t i) {
    evals[i].worst_case_value = worst_case_regret(spec_for(evals[i]), domain, inner).value;
  });

  // evals are ordered by alpha then gamma, so the first minimum wins ties.
  std::size_t best = 0;
  for (std::size_t i = 1; i < evals.size(); ++i) {
    if (evals[i].worst_case_value < evals[best].worst_case_value) best = i;
  }
  OptimizationResult out;
  out.best_spec = spec_for(evals[best]);
  out.alpha = evals[best].alpha;
  out.gamma = family == AggregatorFamily::LogOdds ? 0.0 : evals[best].gamma;
  out.worst_case_value = evals[best].worst_case_value;
  out.evaluations = std::move(evals);
  return out;
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0.0)) throw InvalidArgument("grid step must be positive");
  if (hi < lo) throw InvalidArgument("grid upper end is below its lower end");
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n + 1));
  for (long i = 0; i <= n; ++i) out.push_back(std::min(hi, lo + static_cast<double>(i) * step));
  return out;
}

}  // namespace robustagg
