#include "ctxem/context_labels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ctxem {

namespace {

void check_distribution(const Eigen::Ref<const Eigen::VectorXd>& p, const char* what) {
  if (p.size() == 0 || (p.array() < 0.0).any() || !p.allFinite() || std::abs(p.sum() - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(what) + " is not a probability distribution");
}

double peaked_ne(double q, int m) {
  const double rest = (1.0 - q) / (m - 1);
  double s = q > 0.0 ? q * std::log(q) : 0.0;
  if (rest > 0.0) s += (m - 1) * rest * std::log(rest);
  return 1.0 + s / std::log(static_cast<double>(m));
}

}  // namespace

double negentropy(const Eigen::Ref<const Eigen::VectorXd>& p) {
  const auto m = p.size();
  if (m < 2) return 1.0;
  double s = 0.0;
  for (Eigen::Index j = 0; j < m; ++j)
    if (p(j) > 0.0) s += p(j) * std::log(p(j));
  return 1.0 + s / std::log(static_cast<double>(m));
}

ProbLabel make_label(double ne, int m, int top_class) {
  if (m < 2) throw std::invalid_argument("labels need at least two classes");
  if (!(ne >= 0.0 && ne <= 1.0)) throw std::invalid_argument("negentropy must lie in [0, 1]");
  if (top_class < 0 || top_class >= m) throw std::invalid_argument("top class out of range");
  ProbLabel p(m);
  if (ne >= 1.0) {
    p.setZero();
    p(top_class) = 1.0;
    return p;
  }
  double lo = 1.0 / m, hi = 1.0;
  double q = lo;
  if (ne > 0.0) {
    for (int it = 0; it < 200; ++it) {
      q = 0.5 * (lo + hi);
      const double v = peaked_ne(q, m);
      if (std::abs(v - ne) < 1e-12) break;
      (v < ne ? lo : hi) = q;
    }
  }
  p.setConstant((1.0 - q) / (m - 1));
  p(top_class) = q;
  return p;
}

Eigen::MatrixXd make_context_labels(std::span<const int> truth, int m, const ContextSpec& spec, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(truth.size());
  Eigen::MatrixXd out(n, m);
  switch (spec.mode) {
    case ContextMode::Correct:
      for (Eigen::Index i = 0; i < n; ++i) out.row(i) = make_label(spec.ne, m, truth[i]).transpose();
      break;
    case ContextMode::Wrong: {
      if (!(spec.wrong_frac >= 0.0 && spec.wrong_frac <= 1.0))
        throw std::invalid_argument("wrong fraction must lie in [0, 1]");
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
      std::iota(idx.begin(), idx.end(), Eigen::Index{0});
      std::shuffle(idx.begin(), idx.end(), rng);
      const auto k = static_cast<std::size_t>(std::llround(spec.wrong_frac * static_cast<double>(n)));
      std::vector<int> top(truth.begin(), truth.end());
      std::uniform_int_distribution<int> other(0, m - 2);
      for (std::size_t r = 0; r < k; ++r) {
        const auto i = static_cast<std::size_t>(idx[r]);
        int c = other(rng);
        if (c >= truth[i]) ++c;
        top[i] = c;
      }
      // ne = 0 has no argmax to relocate; labels stay uniform.
      for (Eigen::Index i = 0; i < n; ++i) out.row(i) = make_label(spec.ne, m, top[static_cast<std::size_t>(i)]).transpose();
      break;
    }
    case ContextMode::Mixed: {
      if (!(spec.ne_low <= spec.ne_high)) throw std::invalid_argument("ne_low must not exceed ne_high");
      std::uniform_real_distribution<double> draw(spec.ne_low, spec.ne_high);
      for (Eigen::Index i = 0; i < n; ++i) out.row(i) = make_label(draw(rng), m, truth[i]).transpose();
      break;
    }
  }
  return out;
}

double mean_negentropy(const Eigen::MatrixXd& labels) {
  if (labels.rows() == 0) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < labels.rows(); ++i) s += negentropy(labels.row(i).transpose());
  return s / static_cast<double>(labels.rows());
}

void validate(const ContextModel& ctx) {
  check_distribution(ctx.prior, "context prior");
  const auto l = ctx.prior.size();
  if (ctx.z_given_c) {
    if (ctx.z_given_c->rows() != l) throw std::invalid_argument("p(z|c) needs one row per context value");
    for (Eigen::Index c = 0; c < l; ++c) check_distribution(ctx.z_given_c->row(c).transpose(), "p(z|c) row");
  }
  if (ctx.c_given_z) {
    if (ctx.c_given_z->cols() != l) throw std::invalid_argument("p(c|z) needs one column per context value");
    for (Eigen::Index z = 0; z < ctx.c_given_z->rows(); ++z)
      check_distribution(ctx.c_given_z->row(z).transpose(), "p(c|z) row");
    if (!ctx.observed) throw std::invalid_argument("WCA context must be observed");
  }
}

ProbLabel derive_label_ca_latent(const ContextModel& ctx) {
  if (!ctx.z_given_c) throw std::invalid_argument("context model has no p(z|c)");
  validate(ctx);
  ProbLabel p = ctx.z_given_c->transpose() * ctx.prior;
  return p / p.sum();
}

ProbLabel derive_label_ca_observed(const ContextModel& ctx, int c) {
  if (!ctx.z_given_c) throw std::invalid_argument("context model has no p(z|c)");
  if (!ctx.observed) throw std::invalid_argument("context is not observed");
  if (c < 0 || c >= ctx.z_given_c->rows()) throw std::out_of_range("context index out of range");
  return ctx.z_given_c->row(c).transpose();
}

ProbLabel derive_label_wca(const ContextModel& ctx, int c) {
  if (!ctx.c_given_z) throw std::invalid_argument("context model has no p(c|z)");
  if (!ctx.observed) throw std::invalid_argument("WCA context must be observed");
  if (c < 0 || c >= ctx.c_given_z->cols()) throw std::out_of_range("context index out of range");
  if (c >= ctx.prior.size() || !(ctx.prior(c) > 0.0)) throw std::invalid_argument("observed context has zero prior");
  const ProbLabel raw = ctx.c_given_z->col(c) / ctx.prior(c);
  const double s = raw.sum();
  if (!(s > 0.0)) throw std::invalid_argument("observed context is impossible under every class");
  return raw / s;
}

}  // namespace ctxem
