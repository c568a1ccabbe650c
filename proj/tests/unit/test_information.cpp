#include "ctxem/information.hpp"

#include "../support.hpp"

#include <doctest.h>

#include <cmath>

using namespace ctxem;
using ctxem::testing::with_labels;

namespace {

// log p(x, z | theta) for one sample, up to terms free of theta.
double complete_ll(Algorithm a, const MixtureSpec& m, Observation x, int z) {
  const double f = component_log_density(m.components[static_cast<std::size_t>(z)], x);
  return a == Algorithm::CA ? f : f + std::log(m.weights[static_cast<std::size_t>(z)]);
}

// Global vector with pi_M tied to the free weights.
MixtureSpec perturbed(const MixtureSpec& m, int g, double h) {
  Eigen::VectorXd v = to_vector(m);
  v(g) += h;
  MixtureSpec out = from_vector(m, v);
  double s = 0.0;
  for (int j = 0; j + 1 < out.size(); ++j) s += out.weights[static_cast<std::size_t>(j)];
  out.weights.back() = 1.0 - s;
  return out;
}

Eigen::VectorXd fd_score(Algorithm a, const MixtureSpec& m, Observation x, int z, const std::vector<int>& idx) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double h = 1e-6;
    s(static_cast<Eigen::Index>(k)) =
        (complete_ll(a, perturbed(m, idx[k], h), x, z) - complete_ll(a, perturbed(m, idx[k], -h), x, z)) / (2 * h);
  }
  return s;
}

Eigen::MatrixXd fd_neg_hessian(Algorithm a, const MixtureSpec& m, Observation x, int z, const std::vector<int>& idx) {
  const auto w = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd h(w, w);
  const double e = 1e-4;
  for (Eigen::Index r = 0; r < w; ++r) {
    const Eigen::VectorXd up = fd_score(a, perturbed(m, idx[static_cast<std::size_t>(r)], e), x, z, idx);
    const Eigen::VectorXd dn = fd_score(a, perturbed(m, idx[static_cast<std::size_t>(r)], -e), x, z, idx);
    h.col(r) = -(up - dn) / (2 * e);
  }
  return 0.5 * (h + h.transpose());
}

// Covariance of the total complete-data score over every joint labelling.
Eigen::MatrixXd enumerate_missing(Algorithm a, const MixtureSpec& m, const LabeledDataset& d,
                                  const Eigen::MatrixXd& resp, const std::vector<int>& idx) {
  const int n = d.size(), k = m.size();
  const auto w = static_cast<Eigen::Index>(idx.size());
  std::vector<std::vector<Eigen::VectorXd>> s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int z = 0; z < k; ++z) s[static_cast<std::size_t>(i)].push_back(fd_score(a, m, d.obs(i), z, idx));
  int total = 1;
  for (int i = 0; i < n; ++i) total *= k;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(w);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(w, w);
  for (int code = 0; code < total; ++code) {
    int c = code;
    double prob = 1.0;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(w);
    for (int i = 0; i < n; ++i) {
      const int z = c % k;
      c /= k;
      prob *= resp(i, z);
      sum += s[static_cast<std::size_t>(i)][static_cast<std::size_t>(z)];
    }
    mean += prob * sum;
    second += prob * sum * sum.transpose();
  }
  return second - mean * mean.transpose();
}

Eigen::MatrixXd expected_complete(Algorithm a, const MixtureSpec& m, const LabeledDataset& d,
                                  const Eigen::MatrixXd& resp, const std::vector<int>& idx) {
  const auto w = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(w, w);
  for (int i = 0; i < d.size(); ++i)
    for (int z = 0; z < m.size(); ++z) out += resp(i, z) * fd_neg_hessian(a, m, d.obs(i), z, idx);
  return out;
}

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

LabeledDataset small(const MixtureSpec& m, int n, std::uint64_t seed, double ne) {
  Rng rng(seed);
  return with_labels(sample_mixture(m, n, rng), m.size(), ne, seed + 7);
}

}  // namespace

TEST_SUITE("information") {
  TEST_CASE("missing and complete information match enumeration over labellings") {
    const MixtureSpec two{{0.4, 0.6}, {UnivariateNormal{0.0, 0.8}, UnivariateNormal{1.0, 1.3}}};
    const MixtureSpec three{{0.2, 0.3, 0.5},
                            {UnivariateNormal{-1.0, 0.7}, UnivariateNormal{0.5, 1.0}, UnivariateNormal{1.5, 0.6}}};
    for (const MixtureSpec& m : {two, three}) {
      const LabeledDataset d = small(m, m.size() == 2 ? 7 : 5, 17, 0.35);
      for (Algorithm a : {Algorithm::US, Algorithm::CA, Algorithm::WCA}) {
        const Eigen::MatrixXd resp = e_step(a, m, d, Exec::Serial);
        const std::vector<int> idx = info_indices(a, m);
        const Eigen::MatrixXd im = missing_info(a, m, d, resp);
        const Eigen::MatrixXd ic = complete_info(a, m, d, resp);
        CHECK(rel(im, enumerate_missing(a, m, d, resp, idx)) < 1e-6);
        CHECK(rel(ic, expected_complete(a, m, d, resp, idx)) < 1e-5);
      }
    }
  }

  TEST_CASE("multivariate and regressor blocks match enumeration") {
    Eigen::MatrixXd c1(2, 2), c2(2, 2);
    c1 << 0.9, 0.2, 0.2, 0.5;
    c2 << 0.6, -0.1, -0.1, 0.7;
    const MixtureSpec mv{{0.5, 0.5}, {MultivariateNormal{Eigen::Vector2d(0, 0), c1}, MultivariateNormal{Eigen::Vector2d(1, 0.5), c2}}};
    const MixtureSpec reg{{0.45, 0.55}, {LinearRegressor{0.2, 1.0, 0.5}, LinearRegressor{-0.3, -0.4, 0.8}}};
    const MixtureSpec mb{{0.3, 0.7}, {MaxwellBoltzmann{1.0}, MaxwellBoltzmann{2.0}}};
    for (const MixtureSpec& m : {mv, reg, mb}) {
      const LabeledDataset d = small(m, 6, 23, 0.2);
      for (Algorithm a : {Algorithm::US, Algorithm::WCA}) {
        const Eigen::MatrixXd resp = e_step(a, m, d, Exec::Serial);
        const std::vector<int> idx = info_indices(a, m);
        CHECK(rel(missing_info(a, m, d, resp), enumerate_missing(a, m, d, resp, idx)) < 1e-6);
        CHECK(rel(complete_info(a, m, d, resp), expected_complete(a, m, d, resp, idx)) < 1e-5);
      }
    }
  }

  TEST_CASE("observed information equals complete minus missing") {
    const MixtureSpec m{{0.4, 0.6}, {UnivariateNormal{0.0, 0.8}, UnivariateNormal{1.0, 1.3}}};
    const LabeledDataset d = small(m, 200, 31, 0.3);
    for (Algorithm a : {Algorithm::US, Algorithm::CA, Algorithm::WCA}) {
      const InfoMatrices info = information(a, m, d);
      const Eigen::MatrixXd fd = finite_difference_observed_info(a, m, d);
      CHECK(rel(info.i_obs, fd) < 1e-5);
    }
  }

  TEST_CASE("index sets") {
    const MixtureSpec m{{0.4, 0.6}, {UnivariateNormal{0.0, 0.8}, UnivariateNormal{1.0, 1.3}}};
    CHECK(info_indices(Algorithm::US, m) == std::vector<int>{0, 1, 2, 3, 4});
    CHECK(info_indices(Algorithm::CA, m) == std::vector<int>{1, 2, 3, 4});
    InfoOptions o;
    o.free = std::vector<bool>{true, true, false, true, false};
    CHECK(info_indices(Algorithm::WCA, m, o) == std::vector<int>{0, 1, 3});
    CHECK(info_indices(Algorithm::CA, m, o) == std::vector<int>{1, 3});
    const LabeledDataset d = small(m, 50, 3, 0.5);
    CHECK(information(Algorithm::CA, m, d).reduced);
    CHECK(!information(Algorithm::US, m, d).reduced);
  }

  TEST_CASE("one-hot labels and DCA carry no missing information") {
    const MixtureSpec m{{0.4, 0.6}, {UnivariateNormal{0.0, 0.8}, UnivariateNormal{1.0, 1.3}}};
    const LabeledDataset hot = small(m, 60, 5, 1.0);
    for (Algorithm a : {Algorithm::CA, Algorithm::WCA, Algorithm::S}) {
      const InfoMatrices info = information(a, m, hot);
      CHECK(info.i_m.norm() == 0.0);
      CHECK(info.r_prime == 1.0);
    }
    const LabeledDataset soft = small(m, 60, 5, 0.3);
    CHECK(information(Algorithm::DCA, m, soft).i_m.norm() == 0.0);
  }

  TEST_CASE("assembly from known matrices") {
    Eigen::MatrixXd ic = Eigen::Vector2d(2.0, 4.0).asDiagonal();
    Eigen::MatrixXd im = Eigen::Vector2d(1.0, 1.0).asDiagonal();
    const InfoMatrices r = mip_assemble(ic, im, {"a", "b"});
    CHECK(r.regular);
    CHECK(r.i_obs(0, 0) == doctest::Approx(1.0));
    CHECK(r.i_obs(1, 1) == doctest::Approx(3.0));
    CHECK(r.rate(0, 0) == doctest::Approx(0.5));
    CHECK(r.rate(1, 1) == doctest::Approx(0.25));
    CHECK(r.spectral_radius == doctest::Approx(0.5));
    CHECK(r.r_prime == doctest::Approx(0.5));
    CHECK(r.se(0) == doctest::Approx(1.0));
    CHECK(r.se(1) == doctest::Approx(1.0 / std::sqrt(3.0)));
    CHECK(r.param_index == std::vector<std::string>{"a", "b"});

    // Non-symmetric rate with a known spectrum.
    Eigen::MatrixXd ic2(2, 2), im2(2, 2);
    ic2 << 2.0, 1.0, 1.0, 2.0;
    im2 << 1.0, 0.0, 0.0, 0.5;
    const InfoMatrices r2 = mip_assemble(ic2, im2);
    const Eigen::MatrixXd j = ic2.inverse() * im2;
    CHECK((r2.rate - j).norm() < 1e-12);
    const double tr = j.trace(), det = j.determinant();
    const double lmax = 0.5 * (tr + std::sqrt(tr * tr - 4 * det));
    CHECK(r2.spectral_radius == doctest::Approx(lmax).epsilon(1e-12));
  }

  TEST_CASE("singular information is flagged, not thrown") {
    Eigen::MatrixXd ic = Eigen::MatrixXd::Zero(2, 2);
    ic(0, 0) = 1.0;
    const InfoMatrices r = mip_assemble(ic, Eigen::MatrixXd::Zero(2, 2));
    CHECK(!r.regular);
    CHECK(std::isnan(r.spectral_radius));
    CHECK(std::isnan(r.se(1)));

    Eigen::MatrixXd ic2 = Eigen::MatrixXd::Identity(2, 2);
    const InfoMatrices r2 = mip_assemble(ic2, ic2);  // I_obs = 0
    CHECK(!r2.regular);
  }
}
