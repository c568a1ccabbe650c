#include "ctxem/problems.hpp"

#include "ctxem/errors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ctxem {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

bool is_gaussian_pair(ScenarioId id) {
  return id == ScenarioId::A || id == ScenarioId::B || id == ScenarioId::Mixed || id == ScenarioId::Wrong ||
         id == ScenarioId::Biased;
}

Eigen::MatrixXd random_covariance(Rng& rng, int d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) g(r, c) = normal(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  Eigen::VectorXd lambda(d);
  for (int k = 0; k < d; ++k) lambda(k) = std::max(1e-3, uniform(rng, 0.0, 0.5));
  Eigen::MatrixXd cov = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (cov + cov.transpose());
}

struct Ranges {
  double skl_lo, skl_hi, ikl_lo, ikl_hi;
};

Ranges kl_ranges(int m) { return m > 2 ? Ranges{3.0, 20.0, 0.1, 1.0} : Ranges{0.1, 3.0, 0.1, 3.0}; }

// Draws `draw_rest()` and solves the free parameter against `fixed`, redrawing
// both the target and the other parameters when no root exists. The bound
// applies per solve; `retries` accumulates over the whole problem.
template <class DrawRest>
ComponentParams solve_with_retries(const ComponentParams& fixed, DrawRest draw_rest, double lo, double hi,
                                   FreeAxis axis, Rng& rng, KlDirection dir, int max_retries, int& retries,
                                   double& target) {
  KlSolveOptions opts;
  opts.direction = dir;
  opts.root = RootChoice::Random;
  for (int attempt = 0;; ++attempt) {
    const ComponentParams cand = draw_rest();
    target = uniform(rng, lo, hi);
    try {
      return solve_param_for_kl(fixed, cand, target, axis, rng, opts);
    } catch (const NoRoot&) {
      ++retries;
      if (attempt >= max_retries) throw;
    }
  }
}

}  // namespace

std::string_view scenario_name(ScenarioId id) {
  switch (id) {
    case ScenarioId::A: return "a";
    case ScenarioId::B: return "b";
    case ScenarioId::C: return "c";
    case ScenarioId::D: return "d";
    case ScenarioId::E: return "e";
    case ScenarioId::F: return "f";
    case ScenarioId::Mixed: return "mixed";
    case ScenarioId::Wrong: return "wrong";
    case ScenarioId::Biased: return "biased";
  }
  return "?";
}

ScenarioId parse_scenario(std::string_view name) {
  for (ScenarioId id : {ScenarioId::A, ScenarioId::B, ScenarioId::C, ScenarioId::D, ScenarioId::E, ScenarioId::F,
                        ScenarioId::Mixed, ScenarioId::Wrong, ScenarioId::Biased})
    if (scenario_name(id) == name) return id;
  throw std::invalid_argument("unknown scenario: " + std::string(name));
}

std::vector<double> default_ne_grid() {
  std::vector<double> g;
  for (int k = 0; k < 10; ++k) g.push_back(k / 10.0);
  g.push_back(0.99);
  return g;
}

void validate(const ScenarioSpec& s) {
  if (s.problems < 1) throw std::invalid_argument("problems must be >= 1");
  for (double ne : s.ne_grid)
    if (!(ne >= 0.0 && ne <= 1.0)) throw std::invalid_argument("NE grid values must lie in [0, 1]");
  if (s.id == ScenarioId::Wrong && !(s.wrong_frac >= 0.0 && s.wrong_frac <= 1.0))
    throw std::invalid_argument("wrong fraction must lie in [0, 1]");
  if (s.id == ScenarioId::Biased && !(s.pi1 > 0.0 && s.pi1 < 1.0))
    throw std::invalid_argument("pi1 must lie in (0, 1)");
  if (s.id == ScenarioId::Mixed && !(s.mixed_ne_low <= s.mixed_ne_high))
    throw std::invalid_argument("mixed NE range is empty");
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t w : words) h = splitmix(h ^ splitmix(w));
  return h;
}

int free_param_count(ScenarioId id) {
  switch (id) {
    case ScenarioId::A: return 2;
    case ScenarioId::C: return 8;
    case ScenarioId::D: return 11;
    case ScenarioId::E: return 3;
    case ScenarioId::F: return 7;
    default: return 5;
  }
}

int sample_count(ScenarioId id) {
  const int m = id == ScenarioId::C ? 3 : 2;
  const int n = 100 * free_param_count(id);
  return (n + m - 1) / m * m;
}

ProblemInstance generate_problem(const ScenarioSpec& s, int idx) {
  validate(s);
  if (idx < 0 || idx >= s.problems) throw std::out_of_range("problem index out of range");
  ProblemInstance p;
  p.idx = idx;
  p.seed = derive_seed({s.master_seed, static_cast<std::uint64_t>(s.id), static_cast<std::uint64_t>(idx)});
  Rng rng(p.seed);

  const int m = s.id == ScenarioId::C ? 3 : 2;
  const Ranges kr = kl_ranges(m);
  const int n = sample_count(s.id);
  const int r = s.max_retries;
  double target = 0.0;

  std::vector<ComponentParams> actual, init;
  if (is_gaussian_pair(s.id) || s.id == ScenarioId::C) {
    actual.push_back(UnivariateNormal{uniform(rng, 0.0, 1.0), uniform(rng, 0.1, 0.6)});
    for (int j = 1; j < m; ++j) {
      auto draw = [&]() -> ComponentParams { return UnivariateNormal{0.0, uniform(rng, 0.1, 0.6)}; };
      actual.push_back(solve_with_retries(actual.back(), draw, kr.skl_lo, kr.skl_hi, FreeAxis::Location, rng,
                                          s.kl_direction, r, p.retries, target));
      p.skl.push_back(target);
    }
    for (int j = 0; j < m; ++j) {
      const double known = std::get<UnivariateNormal>(actual[static_cast<std::size_t>(j)]).sigma;
      auto draw = [&]() -> ComponentParams {
        return UnivariateNormal{0.0, s.id == ScenarioId::A ? known : uniform(rng, 0.1, 0.6)};
      };
      init.push_back(solve_with_retries(actual[static_cast<std::size_t>(j)], draw, kr.ikl_lo, kr.ikl_hi,
                                        FreeAxis::Location, rng, s.kl_direction, r, p.retries, target));
      p.ikl.push_back(target);
    }
  } else if (s.id == ScenarioId::D) {
    const int d = 2;
    Eigen::VectorXd mu(d);
    for (int k = 0; k < d; ++k) mu(k) = uniform(rng, 0.0, 1.0);
    actual.push_back(MultivariateNormal{mu, random_covariance(rng, d)});
    auto draw = [&]() -> ComponentParams { return MultivariateNormal{Eigen::VectorXd::Zero(d), random_covariance(rng, d)}; };
    actual.push_back(solve_with_retries(actual.back(), draw, kr.skl_lo, kr.skl_hi, FreeAxis::Location, rng,
                                        s.kl_direction, r, p.retries, target));
    p.skl.push_back(target);
    for (int j = 0; j < m; ++j) {
      init.push_back(solve_with_retries(actual[static_cast<std::size_t>(j)], draw, kr.ikl_lo, kr.ikl_hi,
                                        FreeAxis::Location, rng, s.kl_direction, r, p.retries, target));
      p.ikl.push_back(target);
    }
  } else if (s.id == ScenarioId::E) {
    actual.push_back(MaxwellBoltzmann{uniform(rng, 1.0, 6.0)});
    const ComponentParams first = actual.front();
    auto same = [&]() -> ComponentParams { return first; };
    actual.push_back(solve_with_retries(first, same, kr.skl_lo, kr.skl_hi, FreeAxis::Scale, rng, s.kl_direction, r,
                                        p.retries, target));
    p.skl.push_back(target);
    for (int j = 0; j < m; ++j) {
      const ComponentParams ref = actual[static_cast<std::size_t>(j)];
      auto start = [&]() -> ComponentParams { return ref; };
      init.push_back(solve_with_retries(ref, start, kr.ikl_lo, kr.ikl_hi, FreeAxis::Scale, rng, s.kl_direction, r,
                                        p.retries, target));
      p.ikl.push_back(target);
    }
  } else {
    auto draw = [&]() -> ComponentParams {
      const double b0 = uniform(rng, -1.0, 1.0);
      const double b1 = std::tan(uniform(rng, -std::numbers::pi / 3.0, std::numbers::pi / 3.0));
      return LinearRegressor{b0, b1, uniform(rng, 0.5, 2.0)};
    };
    for (int j = 0; j < m; ++j) actual.push_back(draw());
    for (int j = 0; j < m; ++j) init.push_back(draw());
  }

  p.actual.components = std::move(actual);
  p.actual.weights = uniform_weights(m);
  std::vector<int> counts(static_cast<std::size_t>(m), n / m);
  if (s.id == ScenarioId::Biased) {
    p.actual.weights = {s.pi1, 1.0 - s.pi1};
    counts[0] = static_cast<int>(std::lround(s.pi1 * n));
    counts[1] = n - counts[0];
  }
  p.init.components = std::move(init);
  p.init.weights = uniform_weights(m);

  p.free.assign(static_cast<std::size_t>(num_params(p.actual)), true);
  if (s.id == ScenarioId::A) {
    std::fill(p.free.begin(), p.free.end(), false);
    for (int j = 0; j < m; ++j) p.free[static_cast<std::size_t>(component_offset(p.actual, j))] = true;
  }

  p.train = sample_stratified(p.actual, counts, rng);
  p.test = sample_stratified(p.actual, counts, rng);
  return p;
}

}  // namespace ctxem
