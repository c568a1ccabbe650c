#include "ctxem/estimators.hpp"

#include "ctxem/errors.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace ctxem {

namespace {

void require_labels(Algorithm alg, const LabeledDataset& data, int m) {
  const auto n = static_cast<std::size_t>(data.size());
  if (alg == Algorithm::S && data.truth.size() != n) throw std::invalid_argument("S needs truth labels");
  if (uses_labels(alg)) {
    if (!data.plabels) throw std::invalid_argument("context-aware estimators need probabilistic labels");
    if (static_cast<std::size_t>(data.plabels->rows()) != n || data.plabels->cols() != m)
      throw std::invalid_argument("plabels must be N x M");
  }
}

bool all_one_hot(const Eigen::MatrixXd& p) {
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    int ones = 0;
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      if (p(i, j) == 1.0)
        ++ones;
      else if (p(i, j) != 0.0)
        return false;
    }
    if (ones != 1) return false;
  }
  return true;
}

bool is_free(const FitConfig& c, int k) { return !c.free || (*c.free)[static_cast<std::size_t>(k)]; }

int argmax_row(const Eigen::Ref<const Eigen::RowVectorXd>& r) {
  int best = 0;
  for (int j = 1; j < r.size(); ++j)
    if (r(j) > r(best)) best = j;
  return best;
}

}  // namespace

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::US: return "US";
    case Algorithm::S: return "S";
    case Algorithm::CA: return "CA";
    case Algorithm::WCA: return "WCA";
    case Algorithm::DCA: return "DCA";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::US, Algorithm::S, Algorithm::CA, Algorithm::WCA, Algorithm::DCA})
    if (algorithm_name(a) == name) return a;
  throw std::invalid_argument("unknown algorithm: " + std::string(name));
}

bool uses_labels(Algorithm a) { return a == Algorithm::CA || a == Algorithm::WCA || a == Algorithm::DCA; }

Eigen::MatrixXd log_prior_matrix(Algorithm alg, const MixtureSpec& m, const LabeledDataset& data) {
  const Eigen::Index n = data.size();
  Eigen::RowVectorXd logpi(m.size());
  for (int j = 0; j < m.size(); ++j) logpi(j) = std::log(m.weights[static_cast<std::size_t>(j)]);
  switch (alg) {
    case Algorithm::CA:
      require_labels(alg, data, m.size());
      return data.plabels->array().log().matrix();
    case Algorithm::WCA: {
      require_labels(alg, data, m.size());
      Eigen::MatrixXd out = data.plabels->array().log().matrix();
      out.rowwise() += logpi;
      return out;
    }
    default: return logpi.replicate(n, 1);
  }
}

Eigen::MatrixXd e_step(Algorithm alg, const MixtureSpec& m, const LabeledDataset& data, Exec exec) {
  require_labels(alg, data, m.size());
  if (alg == Algorithm::S) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(data.size(), m.size());
    for (int i = 0; i < data.size(); ++i) r(i, data.truth[static_cast<std::size_t>(i)]) = 1.0;
    return r;
  }
  if (alg == Algorithm::DCA) return *data.plabels;
  Eigen::MatrixXd logits = log_density_matrix(m, data.samples, exec) + log_prior_matrix(alg, m, data);
  normalize_log_rows(logits, nullptr, exec);
  return logits;
}

double incomplete_loglik(Algorithm alg, const MixtureSpec& m, const LabeledDataset& data, Exec exec) {
  const Eigen::MatrixXd logits = log_density_matrix(m, data.samples, exec) + log_prior_matrix(alg, m, data);
  return sum_log_sum_exp(logits, exec);
}

QH q_and_entropy(Algorithm alg, const MixtureSpec& m_at, const MixtureSpec& m_eval, const LabeledDataset& data) {
  const Eigen::MatrixXd t = e_step(alg, m_at, data);
  const Eigen::MatrixXd l = log_density_matrix(m_eval, data.samples) + log_prior_matrix(alg, m_eval, data);
  QH out;
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
      const double w = t(i, j);
      if (w <= 0.0) continue;
      out.q += w * l(i, j);
      out.h -= w * std::log(w);
    }
  }
  return out;
}

MixtureSpec m_step(const MixtureSpec& shape, const LabeledDataset& data, const Eigen::MatrixXd& resp,
                   const FitConfig& config, bool update_weights) {
  const int mcount = shape.size();
  const Eigen::Index n = data.size();
  if (resp.rows() != n || resp.cols() != mcount) throw std::invalid_argument("responsibilities must be N x M");
  if (config.free && static_cast<int>(config.free->size()) != num_params(shape))
    throw std::invalid_argument("free-parameter mask has wrong length");

  const Eigen::VectorXd nj = resp.colwise().sum().transpose();
  const double floor_mass = 10.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(n);
  for (int j = 0; j < mcount; ++j) {
    if (!(nj(j) >= floor_mass) || nj(j) == 0.0)
      throw DegenerateComponent(j, "component " + std::to_string(j) + " has no responsibility mass");
  }

  MixtureSpec out = shape;
  if (update_weights && is_free(config, 0) && mcount > 1) {
    double total = nj.sum();
    for (int j = 0; j < mcount; ++j) out.weights[static_cast<std::size_t>(j)] = nj(j) / total;
  }

  const auto& x = data.samples;
  const double ridge = config.ridge;
  Eigen::MatrixXd pooled;
  bool tied = config.tied_covariance && shape.family() == Family::MultivariateNormal;

  for (int j = 0; j < mcount; ++j) {
    const int off = component_offset(shape, j);
    const auto w = resp.col(j);
    const double sw = nj(j);
    auto& comp = out.components[static_cast<std::size_t>(j)];

    if (auto* p = std::get_if<UnivariateNormal>(&comp)) {
      if (is_free(config, off)) p->mu = w.dot(x.col(0)) / sw;
      if (is_free(config, off + 1)) {
        const double var = (w.array() * (x.col(0).array() - p->mu).square()).sum() / sw;
        p->sigma = std::sqrt(std::max(var, ridge));
      }
    } else if (auto* p = std::get_if<MultivariateNormal>(&comp)) {
      const auto d = p->mu.size();
      if (is_free(config, off)) p->mu = (x.transpose() * w) / sw;
      if (is_free(config, off + static_cast<int>(d))) {
        const Eigen::MatrixXd r = x.rowwise() - p->mu.transpose();
        const Eigen::MatrixXd scatter = r.transpose() * (r.array().colwise() * w.array()).matrix();
        if (tied) {
          if (pooled.size() == 0) pooled = Eigen::MatrixXd::Zero(d, d);
          pooled += scatter;
        } else {
          p->cov = scatter / sw + ridge * Eigen::MatrixXd::Identity(d, d);
          p->cov = 0.5 * (p->cov + p->cov.transpose()).eval();
        }
      }
    } else if (auto* p = std::get_if<MaxwellBoltzmann>(&comp)) {
      if (is_free(config, off)) {
        const double a2 = w.dot(x.col(0).cwiseAbs2()) / (3.0 * sw);
        p->a = std::sqrt(std::max(a2, ridge));
      }
    } else {
      auto& r = std::get<LinearRegressor>(comp);
      const double sx = w.dot(x.col(0));
      const double sy = w.dot(x.col(1));
      const double sxx = w.dot(x.col(0).cwiseAbs2());
      const double sxy = w.dot(x.col(0).cwiseProduct(x.col(1)));
      const bool f0 = is_free(config, off), f1 = is_free(config, off + 1);
      if (f0 && f1) {
        const double det = sw * sxx - sx * sx;
        if (!(std::abs(det) > ridge * sw * sw))
          throw DegenerateComponent(j, "regressor covariates are degenerate for component " + std::to_string(j));
        r.beta1 = (sw * sxy - sx * sy) / det;
        r.beta0 = (sy - r.beta1 * sx) / sw;
      } else if (f0) {
        r.beta0 = (sy - r.beta1 * sx) / sw;
      } else if (f1) {
        if (!(sxx > 0.0)) throw DegenerateComponent(j, "regressor covariates are degenerate");
        r.beta1 = (sxy - r.beta0 * sx) / sxx;
      }
      if (is_free(config, off + 2)) {
        const Eigen::ArrayXd res = x.col(1).array() - r.beta0 - r.beta1 * x.col(0).array();
        const double e2 = (w.array() * res.square()).sum() / sw;
        r.eps = std::sqrt(std::max(e2, ridge));
      }
    }
  }

  if (tied && pooled.size() > 0) {
    const auto d = pooled.rows();
    Eigen::MatrixXd cov = pooled / nj.sum() + ridge * Eigen::MatrixXd::Identity(d, d);
    cov = 0.5 * (cov + cov.transpose()).eval();
    for (auto& c : out.components) std::get<MultivariateNormal>(c).cov = cov;
  }
  return out;
}

std::vector<double> ca_mixing_estimator(const Eigen::MatrixXd& plabels) {
  if (plabels.rows() < 1) throw std::invalid_argument("need at least one label");
  std::vector<double> w(static_cast<std::size_t>(plabels.cols()), 0.0);
  for (Eigen::Index i = 0; i < plabels.rows(); ++i) w[static_cast<std::size_t>(argmax_row(plabels.row(i)))] += 1.0;
  for (double& v : w) v /= static_cast<double>(plabels.rows());
  return w;
}

std::vector<int> classify_map(const MixtureSpec& m, const SampleMatrix& x, Exec exec) {
  Eigen::MatrixXd l = log_density_matrix(m, x, exec);
  for (int j = 0; j < m.size(); ++j) l.col(j).array() += std::log(m.weights[static_cast<std::size_t>(j)]);
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = argmax_row(l.row(i));
  return out;
}

FitResult fit(Algorithm alg, const LabeledDataset& data, const MixtureSpec& init, const FitConfig& config) {
  validate(init);
  validate(data, init.size());
  require_labels(alg, data, init.size());
  if (!(config.tol > 0.0) || config.max_iter < 1) throw std::invalid_argument("invalid fit configuration");

  const bool weights_free = is_free(config, 0);
  auto finish_ca_weights = [&](MixtureSpec& m) {
    if (alg != Algorithm::CA || !weights_free) return;
    auto w = ca_mixing_estimator(*data.plabels);
    for (double v : w)
      if (v <= 0.0) {
        w = uniform_weights(m.size());
        break;
      }
    m.weights = w;
  };

  FitResult res;
  if (config.keep_trace) res.theta_trace.push_back(to_vector(init));

  const bool one_shot = alg == Algorithm::S || alg == Algorithm::DCA ||
                        ((alg == Algorithm::CA || alg == Algorithm::WCA) && all_one_hot(*data.plabels));
  if (one_shot) {
    Eigen::MatrixXd r = e_step(alg, init, data, config.exec);
    try {
      res.estimate = m_step(init, data, r, config, alg != Algorithm::CA);
    } catch (const std::exception& e) {
      throw FitError(1, e.what());
    }
    finish_ca_weights(res.estimate);
    res.iterations = 1;
    res.converged = true;
    res.responsibilities = std::move(r);
    res.final_loglik = incomplete_loglik(alg, res.estimate, data, config.exec);
    if (config.keep_trace) res.theta_trace.push_back(to_vector(res.estimate));
    return res;
  }

  const auto start = std::chrono::steady_clock::now();
  const int skip = alg == Algorithm::CA ? init.size() - 1 : 0;
  MixtureSpec theta = init;
  Eigen::VectorXd prev = to_vector(theta);
  int it = 0;
  while (it < config.max_iter) {
    ++it;
    try {
      const Eigen::MatrixXd r = e_step(alg, theta, data, config.exec);
      MixtureSpec next = m_step(theta, data, r, config, alg != Algorithm::CA);
      theta = std::move(next);
    } catch (const FitError&) {
      throw;
    } catch (const std::exception& e) {
      throw FitError(it, e.what());
    }
    Eigen::VectorXd cur = to_vector(theta);
    const double step = (cur - prev).tail(cur.size() - skip).norm();
    if (config.keep_trace) res.theta_trace.push_back(cur);
    prev = std::move(cur);
    if (step < config.tol) {
      res.converged = true;
      break;
    }
    if (config.iter_budget_ms) {
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      if (ms >= *config.iter_budget_ms) break;
    }
  }
  res.iterations = it;
  res.final_loglik = incomplete_loglik(alg, theta, data, config.exec);
  res.responsibilities = e_step(alg, theta, data, config.exec);
  finish_ca_weights(theta);
  res.estimate = std::move(theta);
  return res;
}

}  // namespace ctxem
