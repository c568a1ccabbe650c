#include "ctxem/mixture.hpp"

#include "ctxem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace ctxem {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

int tri_size(int d) { return d * (d + 1) / 2; }

// Lower-triangular, column-major enumeration of the unique covariance entries.
std::vector<std::pair<int, int>> tri_entries(int d) {
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(tri_size(d)));
  for (int c = 0; c < d; ++c)
    for (int r = c; r < d; ++r) out.emplace_back(r, c);
  return out;
}

Eigen::MatrixXd cov_direction(int d, int r, int c) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(d, d);
  e(r, c) = 1.0;
  e(c, r) = 1.0;
  return e;
}

void check_size(const ComponentParams& c, Observation x) {
  if (static_cast<int>(x.size()) != observation_size(c)) {
    throw std::invalid_argument("observation has wrong length for component family");
  }
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) + " must be positive and finite");
  }
}

Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols() || cov.rows() == 0) {
    throw SingularCovariance("covariance must be a non-empty square matrix");
  }
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw SingularCovariance("covariance is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw SingularCovariance("covariance is not positive definite");
  }
  const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
  if ((diag.array() <= 0.0).any() || !diag.allFinite()) {
    throw SingularCovariance("covariance is not positive definite");
  }
  return llt;
}

}  // namespace

std::string_view family_name(Family f) {
  switch (f) {
    case Family::UnivariateNormal: return "univariate_normal";
    case Family::MultivariateNormal: return "multivariate_normal";
    case Family::MaxwellBoltzmann: return "maxwell_boltzmann";
    case Family::LinearRegressor: return "linear_regressor";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::UnivariateNormal, Family::MultivariateNormal, Family::MaxwellBoltzmann,
                   Family::LinearRegressor}) {
    if (family_name(f) == name) return f;
  }
  throw std::invalid_argument("unknown family: " + std::string(name));
}

Family family_of(const ComponentParams& c) {
  return std::visit(overloaded{
                        [](const UnivariateNormal&) { return Family::UnivariateNormal; },
                        [](const MultivariateNormal&) { return Family::MultivariateNormal; },
                        [](const MaxwellBoltzmann&) { return Family::MaxwellBoltzmann; },
                        [](const LinearRegressor&) { return Family::LinearRegressor; },
                    },
                    c);
}

int observation_size(const ComponentParams& c) {
  return std::visit(overloaded{
                        [](const UnivariateNormal&) { return 1; },
                        [](const MultivariateNormal& p) { return static_cast<int>(p.mu.size()); },
                        [](const MaxwellBoltzmann&) { return 1; },
                        [](const LinearRegressor&) { return 2; },
                    },
                    c);
}

int num_params(const ComponentParams& c) {
  return std::visit(overloaded{
                        [](const UnivariateNormal&) { return 2; },
                        [](const MultivariateNormal& p) {
                          const int d = static_cast<int>(p.mu.size());
                          return d + tri_size(d);
                        },
                        [](const MaxwellBoltzmann&) { return 1; },
                        [](const LinearRegressor&) { return 3; },
                    },
                    c);
}

std::vector<std::string> param_names(const ComponentParams& c) {
  return std::visit(overloaded{
                        [](const UnivariateNormal&) { return std::vector<std::string>{"mu", "sigma"}; },
                        [](const MultivariateNormal& p) {
                          const int d = static_cast<int>(p.mu.size());
                          std::vector<std::string> names;
                          for (int k = 0; k < d; ++k) names.push_back("mu[" + std::to_string(k) + "]");
                          for (auto [r, col] : tri_entries(d))
                            names.push_back("cov[" + std::to_string(r) + "," + std::to_string(col) + "]");
                          return names;
                        },
                        [](const MaxwellBoltzmann&) { return std::vector<std::string>{"a"}; },
                        [](const LinearRegressor&) {
                          return std::vector<std::string>{"beta0", "beta1", "eps"};
                        },
                    },
                    c);
}

Eigen::VectorXd params_to_vector(const ComponentParams& c) {
  return std::visit(overloaded{
                        [](const UnivariateNormal& p) { return Eigen::VectorXd{{p.mu, p.sigma}}; },
                        [](const MultivariateNormal& p) {
                          const int d = static_cast<int>(p.mu.size());
                          Eigen::VectorXd v(d + tri_size(d));
                          v.head(d) = p.mu;
                          int k = d;
                          for (auto [r, col] : tri_entries(d)) v(k++) = p.cov(r, col);
                          return v;
                        },
                        [](const MaxwellBoltzmann& p) { return Eigen::VectorXd{{p.a}}; },
                        [](const LinearRegressor& p) { return Eigen::VectorXd{{p.beta0, p.beta1, p.eps}}; },
                    },
                    c);
}

ComponentParams params_from_vector(const ComponentParams& shape, const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != num_params(shape)) throw std::invalid_argument("parameter vector has wrong length");
  return std::visit(overloaded{
                        [&](const UnivariateNormal&) -> ComponentParams {
                          return UnivariateNormal{v(0), v(1)};
                        },
                        [&](const MultivariateNormal& p) -> ComponentParams {
                          const int d = static_cast<int>(p.mu.size());
                          MultivariateNormal out{v.head(d), Eigen::MatrixXd(d, d)};
                          int k = d;
                          for (auto [r, col] : tri_entries(d)) {
                            out.cov(r, col) = v(k);
                            out.cov(col, r) = v(k);
                            ++k;
                          }
                          return out;
                        },
                        [&](const MaxwellBoltzmann&) -> ComponentParams { return MaxwellBoltzmann{v(0)}; },
                        [&](const LinearRegressor&) -> ComponentParams {
                          return LinearRegressor{v(0), v(1), v(2)};
                        },
                    },
                    shape);
}

void validate(const ComponentParams& c) {
  std::visit(overloaded{
                 [](const UnivariateNormal& p) {
                   if (!std::isfinite(p.mu)) throw std::invalid_argument("mu must be finite");
                   require_positive(p.sigma, "sigma");
                 },
                 [](const MultivariateNormal& p) {
                   if (p.mu.size() == 0 || !p.mu.allFinite()) throw std::invalid_argument("mu must be finite");
                   if (p.cov.rows() != p.mu.size()) throw std::invalid_argument("cov/mu dimension mismatch");
                   checked_llt(p.cov);
                 },
                 [](const MaxwellBoltzmann& p) { require_positive(p.a, "a"); },
                 [](const LinearRegressor& p) {
                   if (!std::isfinite(p.beta0) || !std::isfinite(p.beta1))
                     throw std::invalid_argument("regression coefficients must be finite");
                   require_positive(p.eps, "eps");
                 },
             },
             c);
}

double component_log_density(const ComponentParams& c, Observation x) {
  check_size(c, x);
  return std::visit(
      overloaded{
          [&](const UnivariateNormal& p) {
            require_positive(p.sigma, "sigma");
            const double z = (x[0] - p.mu) / p.sigma;
            return -0.5 * kLog2Pi - std::log(p.sigma) - 0.5 * z * z;
          },
          [&](const MultivariateNormal& p) {
            const auto llt = checked_llt(p.cov);
            const int d = static_cast<int>(p.mu.size());
            const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(x.data(), d) - p.mu;
            const Eigen::VectorXd w = llt.matrixL().solve(r);
            const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
            return -0.5 * d * kLog2Pi - 0.5 * logdet - 0.5 * w.squaredNorm();
          },
          [&](const MaxwellBoltzmann& p) {
            require_positive(p.a, "a");
            if (!(x[0] > 0.0)) throw DomainError("Maxwell-Boltzmann support is x > 0");
            return 0.5 * std::log(2.0 / std::numbers::pi) + 2.0 * std::log(x[0]) -
                   x[0] * x[0] / (2.0 * p.a * p.a) - 3.0 * std::log(p.a);
          },
          [&](const LinearRegressor& p) {
            require_positive(p.eps, "eps");
            const double z = (x[1] - p.beta0 - p.beta1 * x[0]) / p.eps;
            return -0.5 * kLog2Pi - std::log(p.eps) - 0.5 * z * z;
          },
      },
      c);
}

Eigen::VectorXd component_score(const ComponentParams& c, Observation x) {
  check_size(c, x);
  return std::visit(
      overloaded{
          [&](const UnivariateNormal& p) {
            require_positive(p.sigma, "sigma");
            const double r = x[0] - p.mu;
            const double s2 = p.sigma * p.sigma;
            return Eigen::VectorXd{{r / s2, -1.0 / p.sigma + r * r / (s2 * p.sigma)}};
          },
          [&](const MultivariateNormal& p) {
            const auto llt = checked_llt(p.cov);
            const int d = static_cast<int>(p.mu.size());
            const Eigen::MatrixXd prec = llt.solve(Eigen::MatrixXd::Identity(d, d));
            const Eigen::VectorXd u = prec * (Eigen::Map<const Eigen::VectorXd>(x.data(), d) - p.mu);
            Eigen::VectorXd g(d + tri_size(d));
            g.head(d) = u;
            int k = d;
            for (auto [r, col] : tri_entries(d)) {
              g(k++) = (r == col) ? 0.5 * (u(r) * u(r) - prec(r, r)) : (u(r) * u(col) - prec(r, col));
            }
            return g;
          },
          [&](const MaxwellBoltzmann& p) {
            require_positive(p.a, "a");
            if (!(x[0] > 0.0)) throw DomainError("Maxwell-Boltzmann support is x > 0");
            return Eigen::VectorXd{{-3.0 / p.a + x[0] * x[0] / (p.a * p.a * p.a)}};
          },
          [&](const LinearRegressor& p) {
            require_positive(p.eps, "eps");
            const double r = x[1] - p.beta0 - p.beta1 * x[0];
            const double e2 = p.eps * p.eps;
            return Eigen::VectorXd{{r / e2, x[0] * r / e2, -1.0 / p.eps + r * r / (e2 * p.eps)}};
          },
      },
      c);
}

Eigen::MatrixXd component_log_density_hessian(const ComponentParams& c, Observation x) {
  check_size(c, x);
  return std::visit(
      overloaded{
          [&](const UnivariateNormal& p) {
            require_positive(p.sigma, "sigma");
            const double r = x[0] - p.mu;
            const double s2 = p.sigma * p.sigma;
            Eigen::MatrixXd h(2, 2);
            h(0, 0) = -1.0 / s2;
            h(0, 1) = h(1, 0) = -2.0 * r / (s2 * p.sigma);
            h(1, 1) = 1.0 / s2 - 3.0 * r * r / (s2 * s2);
            return h;
          },
          [&](const MultivariateNormal& p) {
            const auto llt = checked_llt(p.cov);
            const int d = static_cast<int>(p.mu.size());
            const Eigen::MatrixXd prec = llt.solve(Eigen::MatrixXd::Identity(d, d));
            const Eigen::VectorXd u = prec * (Eigen::Map<const Eigen::VectorXd>(x.data(), d) - p.mu);
            const auto tri = tri_entries(d);
            const int t = static_cast<int>(tri.size());
            std::vector<Eigen::MatrixXd> dsig;
            dsig.reserve(tri.size());
            for (auto [r, col] : tri) dsig.push_back(cov_direction(d, r, col));

            Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d + t, d + t);
            h.topLeftCorner(d, d) = -prec;
            for (int s = 0; s < t; ++s) {
              const Eigen::VectorXd cross = -prec * dsig[s] * u;
              h.block(0, d + s, d, 1) = cross;
              h.block(d + s, 0, 1, d) = cross.transpose();
            }
            for (int s = 0; s < t; ++s) {
              const Eigen::MatrixXd ps = prec * dsig[s];
              for (int q = s; q < t; ++q) {
                const Eigen::MatrixXd pq = prec * dsig[q];
                const double v = 0.5 * (pq * ps).trace() - u.dot(dsig[s] * prec * dsig[q] * u);
                h(d + s, d + q) = v;
                h(d + q, d + s) = v;
              }
            }
            return h;
          },
          [&](const MaxwellBoltzmann& p) {
            require_positive(p.a, "a");
            if (!(x[0] > 0.0)) throw DomainError("Maxwell-Boltzmann support is x > 0");
            const double a2 = p.a * p.a;
            return Eigen::MatrixXd{{3.0 / a2 - 3.0 * x[0] * x[0] / (a2 * a2)}};
          },
          [&](const LinearRegressor& p) {
            require_positive(p.eps, "eps");
            const double xv = x[0];
            const double r = x[1] - p.beta0 - p.beta1 * xv;
            const double e2 = p.eps * p.eps;
            const double e3 = e2 * p.eps;
            Eigen::MatrixXd h(3, 3);
            h(0, 0) = -1.0 / e2;
            h(0, 1) = h(1, 0) = -xv / e2;
            h(1, 1) = -xv * xv / e2;
            h(0, 2) = h(2, 0) = -2.0 * r / e3;
            h(1, 2) = h(2, 1) = -2.0 * xv * r / e3;
            h(2, 2) = 1.0 / e2 - 3.0 * r * r / (e2 * e2);
            return h;
          },
      },
      c);
}

Family MixtureSpec::family() const {
  if (components.empty()) throw std::invalid_argument("mixture has no components");
  return family_of(components.front());
}

int MixtureSpec::observation_size() const {
  if (components.empty()) throw std::invalid_argument("mixture has no components");
  return ctxem::observation_size(components.front());
}

int MixtureSpec::params_per_component() const {
  if (components.empty()) throw std::invalid_argument("mixture has no components");
  return num_params(components.front());
}

void validate(const MixtureSpec& m) {
  if (m.components.empty()) throw std::invalid_argument("mixture needs at least one component");
  if (m.weights.size() != m.components.size())
    throw std::invalid_argument("weights and components differ in length");
  const Family f = m.family();
  const int dim = m.observation_size();
  for (const auto& c : m.components) {
    if (family_of(c) != f) throw FamilyMismatch("all components must share one family");
    if (observation_size(c) != dim) throw FamilyMismatch("all components must share one dimension");
    validate(c);
  }
  double total = 0.0;
  for (double w : m.weights) {
    if (!(w > 0.0) || w > 1.0) throw std::invalid_argument("weights must lie in (0, 1]");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("weights must sum to 1");
}

double mixture_log_density(const MixtureSpec& m, Observation x) {
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(m.components.size());
  for (std::size_t j = 0; j < m.components.size(); ++j) {
    terms[j] = std::log(m.weights[j]) + component_log_density(m.components[j], x);
    mx = std::max(mx, terms[j]);
  }
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

double mixture_density(const MixtureSpec& m, Observation x) { return std::exp(mixture_log_density(m, x)); }

int num_params(const MixtureSpec& m) { return m.size() - 1 + m.size() * m.params_per_component(); }

int component_offset(const MixtureSpec& m, int j) { return m.size() - 1 + j * m.params_per_component(); }

Eigen::VectorXd to_vector(const MixtureSpec& m) {
  Eigen::VectorXd v(num_params(m));
  for (int j = 0; j + 1 < m.size(); ++j) v(j) = m.weights[static_cast<std::size_t>(j)];
  const int p = m.params_per_component();
  for (int j = 0; j < m.size(); ++j) v.segment(component_offset(m, j), p) = params_to_vector(m.components[j]);
  return v;
}

MixtureSpec from_vector(const MixtureSpec& shape, const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != num_params(shape)) throw std::invalid_argument("parameter vector has wrong length");
  MixtureSpec out;
  const int mcount = shape.size();
  out.weights.resize(static_cast<std::size_t>(mcount));
  double rest = 1.0;
  for (int j = 0; j + 1 < mcount; ++j) {
    out.weights[static_cast<std::size_t>(j)] = v(j);
    rest -= v(j);
  }
  out.weights.back() = rest;
  const int p = shape.params_per_component();
  for (int j = 0; j < mcount; ++j) {
    out.components.push_back(params_from_vector(shape.components[j], v.segment(component_offset(shape, j), p)));
  }
  return out;
}

std::vector<std::string> param_names(const MixtureSpec& m) {
  std::vector<std::string> names;
  for (int j = 0; j + 1 < m.size(); ++j) names.push_back("pi" + std::to_string(j + 1));
  for (int j = 0; j < m.size(); ++j) {
    for (const auto& n : param_names(m.components[j])) names.push_back("c" + std::to_string(j + 1) + "." + n);
  }
  return names;
}

std::vector<double> uniform_weights(int m) {
  return std::vector<double>(static_cast<std::size_t>(m), 1.0 / m);
}

void validate(const LabeledDataset& d, int m) {
  const auto n = static_cast<std::size_t>(d.size());
  if (!d.truth.empty()) {
    if (d.truth.size() != n) throw std::invalid_argument("truth length differs from sample count");
    for (int t : d.truth)
      if (t < 0 || t >= m) throw std::invalid_argument("truth index out of range");
  }
  if (d.plabels) {
    if (static_cast<std::size_t>(d.plabels->rows()) != n || d.plabels->cols() != m)
      throw std::invalid_argument("plabels must be N x M");
    for (Eigen::Index i = 0; i < d.plabels->rows(); ++i) {
      const auto row = d.plabels->row(i);
      if ((row.array() < 0.0).any() || std::abs(row.sum() - 1.0) > 1e-9)
        throw std::invalid_argument("probabilistic label is not a distribution");
    }
  }
}

void draw_observation(const ComponentParams& c, Rng& rng, std::span<double> out, const SamplingOptions& opts) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::visit(overloaded{
                 [&](const UnivariateNormal& p) { out[0] = p.mu + p.sigma * normal(rng); },
                 [&](const MultivariateNormal& p) {
                   const auto llt = checked_llt(p.cov);
                   const int d = static_cast<int>(p.mu.size());
                   Eigen::VectorXd z(d);
                   for (int k = 0; k < d; ++k) z(k) = normal(rng);
                   const Eigen::VectorXd x = p.mu + llt.matrixL() * z;
                   std::copy(x.data(), x.data() + d, out.begin());
                 },
                 [&](const MaxwellBoltzmann& p) {
                   double s = 0.0;
                   for (int k = 0; k < 3; ++k) {
                     const double z = normal(rng);
                     s += z * z;
                   }
                   out[0] = p.a * std::sqrt(s);
                 },
                 [&](const LinearRegressor& p) {
                   std::uniform_real_distribution<double> cov(opts.covariate_low, opts.covariate_high);
                   const double xv = cov(rng);
                   out[0] = xv;
                   out[1] = p.beta0 + p.beta1 * xv + p.eps * normal(rng);
                 },
             },
             c);
}

LabeledDataset sample_mixture(const MixtureSpec& m, int n, Rng& rng, const SamplingOptions& opts) {
  validate(m);
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  LabeledDataset d;
  d.samples.resize(n, m.observation_size());
  d.truth.resize(static_cast<std::size_t>(n));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const double u = unif(rng);
    int j = 0;
    double acc = m.weights[0];
    while (u >= acc && j + 1 < m.size()) acc += m.weights[static_cast<std::size_t>(++j)];
    d.truth[static_cast<std::size_t>(i)] = j;
    draw_observation(m.components[j], rng, {d.samples.row(i).data(), static_cast<std::size_t>(d.samples.cols())},
                     opts);
  }
  return d;
}

LabeledDataset sample_stratified(const MixtureSpec& m, std::span<const int> counts, Rng& rng,
                                 const SamplingOptions& opts) {
  validate(m);
  if (static_cast<int>(counts.size()) != m.size()) throw std::invalid_argument("one count per component");
  std::vector<int> truth;
  for (int j = 0; j < m.size(); ++j) {
    if (counts[j] < 0) throw std::invalid_argument("negative count");
    truth.insert(truth.end(), static_cast<std::size_t>(counts[j]), j);
  }
  if (truth.empty()) throw std::invalid_argument("sample count must be >= 1");
  std::shuffle(truth.begin(), truth.end(), rng);
  LabeledDataset d;
  d.samples.resize(static_cast<Eigen::Index>(truth.size()), m.observation_size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    draw_observation(m.components[truth[i]], rng,
                     {d.samples.row(static_cast<Eigen::Index>(i)).data(), static_cast<std::size_t>(d.samples.cols())},
                     opts);
  }
  d.truth = std::move(truth);
  return d;
}

}  // namespace ctxem
