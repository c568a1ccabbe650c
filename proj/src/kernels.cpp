#include "ctxem/kernels.hpp"

#include "ctxem/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace ctxem {

namespace {

constexpr Eigen::Index kParallelRows = 2048;
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void column_univariate(const UnivariateNormal& p, const SampleMatrix& x, Eigen::Ref<Eigen::VectorXd> out) {
  if (!(p.sigma > 0.0)) throw std::invalid_argument("sigma must be positive and finite");
  const double c = -0.5 * kLog2Pi - std::log(p.sigma);
  const double inv = 1.0 / p.sigma;
  const Eigen::Index n = x.rows();
#pragma omp parallel for if (n >= kParallelRows) schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = (x(i, 0) - p.mu) * inv;
    out(i) = c - 0.5 * z * z;
  }
}

void column_multivariate(const MultivariateNormal& p, const SampleMatrix& x, Eigen::Ref<Eigen::VectorXd> out) {
  Eigen::LLT<Eigen::MatrixXd> llt(p.cov);
  if (llt.info() != Eigen::Success) throw SingularCovariance("covariance is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  if (!std::isfinite(logdet)) throw SingularCovariance("covariance is not positive definite");
  const auto d = p.mu.size();
  const double c = -0.5 * static_cast<double>(d) * kLog2Pi - 0.5 * logdet;
  const Eigen::Index n = x.rows();
#pragma omp parallel for if (n >= kParallelRows) schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd r = x.row(i).transpose() - p.mu;
    l.triangularView<Eigen::Lower>().solveInPlace(r);
    out(i) = c - 0.5 * r.squaredNorm();
  }
}

void column_maxwell(const MaxwellBoltzmann& p, const SampleMatrix& x, Eigen::Ref<Eigen::VectorXd> out) {
  if (!(p.a > 0.0)) throw std::invalid_argument("a must be positive and finite");
  const Eigen::Index n = x.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(x(i, 0) > 0.0)) throw DomainError("Maxwell-Boltzmann support is x > 0");
  const double c = 0.5 * std::log(2.0 / std::numbers::pi) - 3.0 * std::log(p.a);
  const double k = 1.0 / (2.0 * p.a * p.a);
#pragma omp parallel for if (n >= kParallelRows) schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = x(i, 0);
    out(i) = c + 2.0 * std::log(v) - v * v * k;
  }
}

void column_regressor(const LinearRegressor& p, const SampleMatrix& x, Eigen::Ref<Eigen::VectorXd> out) {
  if (!(p.eps > 0.0)) throw std::invalid_argument("eps must be positive and finite");
  const double c = -0.5 * kLog2Pi - std::log(p.eps);
  const double inv = 1.0 / p.eps;
  const Eigen::Index n = x.rows();
#pragma omp parallel for if (n >= kParallelRows) schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = (x(i, 1) - p.beta0 - p.beta1 * x(i, 0)) * inv;
    out(i) = c - 0.5 * z * z;
  }
}

}  // namespace

Eigen::MatrixXd log_density_matrix(const MixtureSpec& m, const SampleMatrix& x, Exec exec) {
  if (x.cols() != m.observation_size()) throw std::invalid_argument("sample width does not match the mixture");
  Eigen::MatrixXd out(x.rows(), m.size());
  if (exec == Exec::Serial) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Observation obs{x.data() + i * x.cols(), static_cast<std::size_t>(x.cols())};
      for (int j = 0; j < m.size(); ++j) out(i, j) = component_log_density(m.components[j], obs);
    }
    return out;
  }
  for (int j = 0; j < m.size(); ++j) {
    const auto& c = m.components[j];
    auto col = out.col(j);
    if (auto* p = std::get_if<UnivariateNormal>(&c))
      column_univariate(*p, x, col);
    else if (auto* p = std::get_if<MultivariateNormal>(&c))
      column_multivariate(*p, x, col);
    else if (auto* p = std::get_if<MaxwellBoltzmann>(&c))
      column_maxwell(*p, x, col);
    else
      column_regressor(std::get<LinearRegressor>(c), x, col);
  }
  return out;
}

void normalize_log_rows(Eigen::MatrixXd& logits, Eigen::VectorXd* log_norm, Exec exec) {
  const Eigen::Index n = logits.rows();
  const Eigen::Index m = logits.cols();
  if (log_norm) log_norm->resize(n);
  bool bad = false;
#pragma omp parallel for if (exec == Exec::Parallel && n >= kParallelRows) schedule(static) reduction(|| : bad)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mx = logits.row(i).maxCoeff();
    if (!std::isfinite(mx)) {
      bad = true;
      continue;
    }
    double s = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double e = std::exp(logits(i, j) - mx);
      logits(i, j) = e;
      s += e;
    }
    logits.row(i) /= s;
    if (log_norm) (*log_norm)(i) = mx + std::log(s);
  }
  if (bad) throw std::runtime_error("responsibility row has no positive term");
}

double sum_log_sum_exp(const Eigen::MatrixXd& logits, Exec exec) {
  const Eigen::Index n = logits.rows();
  double total = 0.0;
  if (exec == Exec::Serial || n < kParallelRows) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mx = logits.row(i).maxCoeff();
      if (!std::isfinite(mx)) return -std::numeric_limits<double>::infinity();
      total += mx + std::log((logits.row(i).array() - mx).exp().sum());
    }
    return total;
  }
  // Per-row values then a serial sum, so the result does not depend on the thread count.
  Eigen::VectorXd rows(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mx = logits.row(i).maxCoeff();
    rows(i) = std::isfinite(mx) ? mx + std::log((logits.row(i).array() - mx).exp().sum())
                                : -std::numeric_limits<double>::infinity();
  }
  for (Eigen::Index i = 0; i < n; ++i) total += rows(i);
  return total;
}

}  // namespace ctxem
