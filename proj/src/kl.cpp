#include "ctxem/errors.hpp"
#include "ctxem/mixture.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace ctxem {

namespace {

double kl_univariate(const UnivariateNormal& a, const UnivariateNormal& b) {
  const double d = a.mu - b.mu;
  return std::log(b.sigma / a.sigma) + (a.sigma * a.sigma + d * d) / (2.0 * b.sigma * b.sigma) - 0.5;
}

double kl_multivariate(const MultivariateNormal& a, const MultivariateNormal& b) {
  if (a.mu.size() != b.mu.size()) throw FamilyMismatch("multivariate components differ in dimension");
  Eigen::LLT<Eigen::MatrixXd> la(a.cov), lb(b.cov);
  if (la.info() != Eigen::Success || lb.info() != Eigen::Success)
    throw SingularCovariance("covariance is not positive definite");
  const auto d = static_cast<double>(a.mu.size());
  const Eigen::VectorXd delta = b.mu - a.mu;
  const double tr = lb.solve(a.cov).trace();
  const double quad = delta.dot(lb.solve(delta));
  const double logdet_a = 2.0 * la.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet_b = 2.0 * lb.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return 0.5 * (tr + quad - d + logdet_b - logdet_a);
}

double kl_maxwell(const MaxwellBoltzmann& a, const MaxwellBoltzmann& b) {
  const double r = a.a / b.a;
  return -3.0 * std::log(r) + 1.5 * (r * r - 1.0);
}

// Golden-section minimum of a unimodal function on [lo, hi].
double golden_min(const std::function<double(double)>& f, double lo, double hi) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - g * (hi - lo);
  double d = lo + g * (hi - lo);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 300 && hi - lo > 1e-15 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - g * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + g * (hi - lo);
      fd = f(d);
    }
  }
  return 0.5 * (lo + hi);
}

// Root of g on the side of t0 given by sign (+1 / -1); g(t0) < 0.
double bracket_and_bisect(const std::function<double(double)>& g, double t0, double sign, int max_expansions) {
  double step = 1e-3;
  double inner = t0;
  double outer = t0 + sign * step;
  int k = 0;
  while (!(g(outer) > 0.0)) {
    if (++k > max_expansions) throw NoRoot("could not bracket the KL target");
    inner = outer;
    step *= 2.0;
    outer = t0 + sign * step;
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (inner + outer);
    if (mid == inner || mid == outer) break;
    if (g(mid) > 0.0)
      outer = mid;
    else
      inner = mid;
  }
  // Return whichever endpoint is closer to the target.
  return std::abs(g(inner)) <= std::abs(g(outer)) ? inner : outer;
}

}  // namespace

double component_kl(const ComponentParams& a, const ComponentParams& b) {
  if (a.index() != b.index()) throw FamilyMismatch("KL between different families");
  double v = 0.0;
  if (auto* pa = std::get_if<UnivariateNormal>(&a)) {
    v = kl_univariate(*pa, std::get<UnivariateNormal>(b));
  } else if (auto* ma = std::get_if<MultivariateNormal>(&a)) {
    v = kl_multivariate(*ma, std::get<MultivariateNormal>(b));
  } else if (auto* xa = std::get_if<MaxwellBoltzmann>(&a)) {
    v = kl_maxwell(*xa, std::get<MaxwellBoltzmann>(b));
  } else {
    throw UnsupportedFamily("KL is not defined for linear regressor components");
  }
  return std::max(0.0, v);
}

ComponentParams solve_param_for_kl(const ComponentParams& fixed, const ComponentParams& candidate, double target_kl,
                                   FreeAxis axis, Rng& rng, const KlSolveOptions& opts) {
  if (!(target_kl > 0.0) || !std::isfinite(target_kl)) throw std::invalid_argument("target KL must be positive");
  if (fixed.index() != candidate.index()) throw FamilyMismatch("fixed and candidate differ in family");
  if (std::holds_alternative<LinearRegressor>(fixed))
    throw UnsupportedFamily("KL solving is not defined for linear regressor components");

  // Build the one-dimensional family t -> component.
  std::function<ComponentParams(double)> make;
  double t_lo = 0.0, t_hi = 0.0;
  if (axis == FreeAxis::Location) {
    if (auto* f = std::get_if<UnivariateNormal>(&fixed)) {
      const double base = f->mu;
      const double s = std::get<UnivariateNormal>(candidate).sigma;
      make = [base, s](double t) -> ComponentParams { return UnivariateNormal{base + t, s}; };
    } else if (auto* f = std::get_if<MultivariateNormal>(&fixed)) {
      const auto& cand = std::get<MultivariateNormal>(candidate);
      Eigen::VectorXd dir;
      if (opts.location_direction) {
        dir = *opts.location_direction;
      } else {
        std::normal_distribution<double> normal(0.0, 1.0);
        dir.resize(f->mu.size());
        for (Eigen::Index k = 0; k < dir.size(); ++k) dir(k) = normal(rng);
      }
      if (dir.size() != f->mu.size() || !(dir.norm() > 0.0))
        throw std::invalid_argument("location direction must be a non-zero vector of the right size");
      dir.normalize();
      const Eigen::VectorXd base = f->mu;
      const Eigen::MatrixXd cov = cand.cov;
      make = [base, dir, cov](double t) -> ComponentParams { return MultivariateNormal{base + t * dir, cov}; };
    } else {
      throw UnsupportedFamily("family has no location parameter");
    }
    // Gaussian KL depends on the offset only through its square, so the
    // minimum sits at zero offset in either direction.
    t_lo = t_hi = 0.0;
  } else {
    if (auto* c = std::get_if<UnivariateNormal>(&candidate)) {
      const double mu = c->mu;
      make = [mu](double u) -> ComponentParams { return UnivariateNormal{mu, std::exp(u)}; };
      t_lo = std::log(c->sigma) - 25.0;
      t_hi = std::log(c->sigma) + 25.0;
    } else if (auto* c = std::get_if<MultivariateNormal>(&candidate)) {
      const Eigen::VectorXd mu = c->mu;
      const Eigen::MatrixXd cov = c->cov;
      make = [mu, cov](double u) -> ComponentParams { return MultivariateNormal{mu, std::exp(u) * cov}; };
      t_lo = -25.0;
      t_hi = 25.0;
    } else {
      make = [](double u) -> ComponentParams { return MaxwellBoltzmann{std::exp(u)}; };
      const double a = std::get<MaxwellBoltzmann>(candidate).a;
      t_lo = std::log(a) - 25.0;
      t_hi = std::log(a) + 25.0;
    }
  }

  auto kl_at = [&](double t) {
    const ComponentParams c = make(t);
    return opts.direction == KlDirection::NewToReference ? component_kl(c, fixed) : component_kl(fixed, c);
  };
  auto g = [&](double t) { return kl_at(t) - target_kl; };

  const double t_min = (t_lo == t_hi) ? t_lo : golden_min(kl_at, t_lo, t_hi);
  const double g_min = g(t_min);
  if (g_min > 0.0) throw NoRoot("target KL is below the attainable minimum");
  if (g_min == 0.0) return make(t_min);

  bool upper = true;
  switch (opts.root) {
    case RootChoice::Lower: upper = false; break;
    case RootChoice::Upper: upper = true; break;
    case RootChoice::Random: upper = std::bernoulli_distribution(0.5)(rng); break;
  }
  const double t = bracket_and_bisect(g, t_min, upper ? 1.0 : -1.0, opts.max_expansions);
  return make(t);
}

}  // namespace ctxem
