#include "ctxem/information.hpp"

#include <cmath>
#include <limits>

namespace ctxem {

namespace {

constexpr double kSingular = 1e-12;

Eigen::MatrixXd restrict(const Eigen::MatrixXd& full, const std::vector<int>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) out(a, b) = full(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
  return out;
}

void check_resp(const MixtureSpec& m, const LabeledDataset& data, const Eigen::MatrixXd& resp) {
  if (resp.rows() != data.size() || resp.cols() != m.size())
    throw std::invalid_argument("responsibilities must be N x M");
}

// Inverse via Cholesky when SPD, LU otherwise; nullopt when numerically singular.
std::optional<Eigen::MatrixXd> safe_inverse(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  if (n == 0) return Eigen::MatrixXd(0, 0);
  if (!a.allFinite()) return std::nullopt;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success && llt.rcond() >= kSingular) return llt.solve(Eigen::MatrixXd::Identity(n, n));
  // PartialPivLU::rcond() reports 1 for exactly singular input, so the
  // condition number is taken from the explicit inverse instead.
  const Eigen::MatrixXd inv = Eigen::PartialPivLU<Eigen::MatrixXd>(a).inverse();
  if (!inv.allFinite()) return std::nullopt;
  auto norm1 = [](const Eigen::MatrixXd& x) { return x.cwiseAbs().colwise().sum().maxCoeff(); };
  if (!(1.0 / (norm1(a) * norm1(inv)) >= kSingular)) return std::nullopt;
  return inv;
}

}  // namespace

std::vector<int> info_indices(Algorithm alg, const MixtureSpec& m, const InfoOptions& opts) {
  const int w = num_params(m);
  if (opts.free && static_cast<int>(opts.free->size()) != w) throw std::invalid_argument("free mask has wrong length");
  std::vector<int> idx;
  for (int k = 0; k < w; ++k) {
    if (alg == Algorithm::CA && k < m.size() - 1) continue;
    if (opts.free && !(*opts.free)[static_cast<std::size_t>(k)]) continue;
    idx.push_back(k);
  }
  return idx;
}

Eigen::MatrixXd complete_info(Algorithm alg, const MixtureSpec& m, const LabeledDataset& data,
                              const Eigen::MatrixXd& resp, const InfoOptions& opts) {
  check_resp(m, data, resp);
  const int mc = m.size();
  const int p = m.params_per_component();
  const int w = num_params(m);
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(w, w);

  // Mixing weights: -d2/dpi_j dpi_k of sum_i sum_j zbar_ij log pi_j with pi_M = 1 - sum.
  const Eigen::VectorXd nj = resp.colwise().sum().transpose();
  const double pm = m.weights.back();
  const double last = nj(mc - 1) / (pm * pm);
  for (int j = 0; j + 1 < mc; ++j) {
    const double pj = m.weights[static_cast<std::size_t>(j)];
    for (int k = 0; k + 1 < mc; ++k) full(j, k) = last;
    full(j, j) += nj(j) / (pj * pj);
  }

  for (int i = 0; i < data.size(); ++i) {
    const Observation x = data.obs(i);
    for (int k = 0; k < mc; ++k) {
      const double z = resp(i, k);
      if (z == 0.0) continue;
      const int off = component_offset(m, k);
      full.block(off, off, p, p) -= z * component_log_density_hessian(m.components[static_cast<std::size_t>(k)], x);
    }
  }
  return restrict(full, info_indices(alg, m, opts));
}

Eigen::MatrixXd missing_info(Algorithm alg, const MixtureSpec& m, const LabeledDataset& data,
                             const Eigen::MatrixXd& resp, const InfoOptions& opts) {
  check_resp(m, data, resp);
  const auto idx = info_indices(alg, m, opts);
  const auto k = static_cast<Eigen::Index>(idx.size());
  // DCA responsibilities do not depend on the parameters: nothing is missing.
  if (alg == Algorithm::DCA) return Eigen::MatrixXd::Zero(k, k);

  const int mc = m.size();
  const int p = m.params_per_component();
  const int w = num_params(m);

  // Complete-data score of sample i is A_i z_i; column j of A_i is the score
  // when the sample belongs to component j. Cov(z_i) = diag(zbar) - zbar zbar'.
  Eigen::MatrixXd a0 = Eigen::MatrixXd::Zero(w, mc);
  for (int j = 0; j + 1 < mc; ++j) {
    a0(j, j) = 1.0 / m.weights[static_cast<std::size_t>(j)];
    a0(j, mc - 1) = -1.0 / m.weights.back();
  }

  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(w, w);
  Eigen::MatrixXd a = a0;
  for (int i = 0; i < data.size(); ++i) {
    const Eigen::RowVectorXd z = resp.row(i);
    if ((z.array() == 1.0).any()) continue;  // one-hot row: no variance
    const Observation x = data.obs(i);
    for (int j = 0; j < mc; ++j) {
      const int off = component_offset(m, j);
      a.block(off, j, p, 1) = component_score(m.components[static_cast<std::size_t>(j)], x);
    }
    const Eigen::VectorXd mean = a * z.transpose();
    Eigen::MatrixXd weighted = a;
    for (int j = 0; j < mc; ++j) weighted.col(j) *= std::sqrt(z(j));
    full.noalias() += weighted * weighted.transpose();
    full.noalias() -= mean * mean.transpose();
  }
  full = 0.5 * (full + full.transpose()).eval();
  return restrict(full, idx);
}

InfoMatrices mip_assemble(const Eigen::MatrixXd& i_c, const Eigen::MatrixXd& i_m, std::vector<std::string> names,
                          bool reduced) {
  if (i_c.rows() != i_c.cols() || i_m.rows() != i_m.cols() || i_c.rows() != i_m.rows())
    throw std::invalid_argument("information matrices must be square and conformable");
  const auto w = i_c.rows();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  InfoMatrices out;
  out.i_c = i_c;
  out.i_m = i_m;
  out.i_obs = i_c - i_m;
  out.param_index = std::move(names);
  out.reduced = reduced;

  if (auto inv_c = safe_inverse(i_c)) {
    out.rate = *inv_c * i_m;
    if (w > 0) {
      Eigen::EigenSolver<Eigen::MatrixXd> es(out.rate, false);
      out.spectral_radius = es.info() == Eigen::Success ? es.eigenvalues().cwiseAbs().maxCoeff() : nan;
    }
    out.r_prime = 1.0 - out.spectral_radius;
    if (!std::isfinite(out.spectral_radius)) out.regular = false;
  } else {
    out.rate = Eigen::MatrixXd::Constant(w, w, nan);
    out.spectral_radius = nan;
    out.r_prime = nan;
    out.regular = false;
  }

  out.se = Eigen::VectorXd::Constant(w, nan);
  if (auto inv_obs = safe_inverse(out.i_obs)) {
    for (Eigen::Index k = 0; k < w; ++k) {
      const double v = (*inv_obs)(k, k);
      if (v > 0.0)
        out.se(k) = std::sqrt(v);
      else
        out.regular = false;
    }
  } else {
    out.regular = false;
  }
  return out;
}

InfoMatrices information(Algorithm alg, const MixtureSpec& m, const LabeledDataset& data, const InfoOptions& opts) {
  const Eigen::MatrixXd resp = e_step(alg, m, data);
  const auto idx = info_indices(alg, m, opts);
  const auto all = param_names(m);
  std::vector<std::string> names;
  for (int k : idx) names.push_back(all[static_cast<std::size_t>(k)]);
  return mip_assemble(complete_info(alg, m, data, resp, opts), missing_info(alg, m, data, resp, opts),
                      std::move(names), alg == Algorithm::CA);
}

Eigen::MatrixXd finite_difference_observed_info(Algorithm alg, const MixtureSpec& m, const LabeledDataset& data,
                                                const InfoOptions& opts, double rel_step) {
  const auto idx = info_indices(alg, m, opts);
  const auto k = static_cast<Eigen::Index>(idx.size());
  const Eigen::VectorXd theta = to_vector(m);
  Eigen::VectorXd h(k);
  for (Eigen::Index a = 0; a < k; ++a) h(a) = rel_step * std::max(1.0, std::abs(theta(idx[static_cast<std::size_t>(a)])));

  auto f = [&](const Eigen::VectorXd& t) { return incomplete_loglik(alg, from_vector(m, t), data, Exec::Serial); };
  auto shifted = [&](Eigen::Index a, double da, Eigen::Index b, double db) {
    Eigen::VectorXd t = theta;
    t(idx[static_cast<std::size_t>(a)]) += da;
    t(idx[static_cast<std::size_t>(b)]) += db;
    return f(t);
  };

  const double f0 = f(theta);
  Eigen::MatrixXd hess(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const double fp = shifted(a, h(a), a, 0.0);
    const double fm = shifted(a, -h(a), a, 0.0);
    hess(a, a) = (fp - 2.0 * f0 + fm) / (h(a) * h(a));
    for (Eigen::Index b = a + 1; b < k; ++b) {
      const double v = (shifted(a, h(a), b, h(b)) - shifted(a, h(a), b, -h(b)) - shifted(a, -h(a), b, h(b)) +
                        shifted(a, -h(a), b, -h(b))) /
                       (4.0 * h(a) * h(b));
      hess(a, b) = hess(b, a) = v;
    }
  }
  return -hess;
}

}  // namespace ctxem
