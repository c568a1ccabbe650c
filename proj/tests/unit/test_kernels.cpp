#include "ctxem/errors.hpp"
#include "ctxem/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace ctxem;

namespace {

// Well above the threshold at which the parallel path actually forks.
constexpr int kRows = 5000;

void agree(const MixtureSpec& m, int seed) {
  Rng rng(static_cast<std::uint64_t>(seed));
  const LabeledDataset d = sample_mixture(m, kRows, rng);
  const Eigen::MatrixXd s = log_density_matrix(m, d.samples, Exec::Serial);
  const Eigen::MatrixXd p = log_density_matrix(m, d.samples, Exec::Parallel);
  REQUIRE(s.rows() == kRows);
  REQUIRE(s.cols() == m.size());
  CHECK(((s - p).array().abs() / (1.0 + s.array().abs())).maxCoeff() < 1e-12);
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("serial and parallel log densities agree for every family") {
    agree({{0.4, 0.6}, {UnivariateNormal{0.0, 0.5}, UnivariateNormal{1.0, 2.0}}}, 1);
    Eigen::MatrixXd c1(3, 3), c2 = Eigen::MatrixXd::Identity(3, 3);
    c1 << 1.0, 0.2, 0.1, 0.2, 0.5, 0.0, 0.1, 0.0, 0.8;
    agree({{0.5, 0.5}, {MultivariateNormal{Eigen::Vector3d(0, 1, 2), c1}, MultivariateNormal{Eigen::Vector3d::Zero(), c2}}},
          2);
    agree({{0.3, 0.7}, {MaxwellBoltzmann{1.0}, MaxwellBoltzmann{3.0}}}, 3);
    agree({{0.5, 0.5}, {LinearRegressor{0.0, 1.0, 0.5}, LinearRegressor{1.0, -2.0, 1.5}}}, 4);
  }

  TEST_CASE("parallel path rejects out-of-support observations") {
    SampleMatrix x(kRows, 1);
    x.setConstant(1.0);
    x(kRows / 2, 0) = -1.0;
    const MixtureSpec m{{1.0}, {MaxwellBoltzmann{1.0}}};
    CHECK_THROWS_AS(log_density_matrix(m, x, Exec::Parallel), DomainError);
    CHECK_THROWS_AS(log_density_matrix(m, x, Exec::Serial), DomainError);
  }

  TEST_CASE("row normalization matches a direct softmax") {
    Eigen::MatrixXd l(3, 3);
    l << 0.0, 1.0, 2.0, -1000.0, -1001.0, -1000.5, 5.0, -std::numeric_limits<double>::infinity(), 5.0;
    for (Exec e : {Exec::Serial, Exec::Parallel}) {
      Eigen::MatrixXd r = l;
      Eigen::VectorXd norm;
      normalize_log_rows(r, &norm, e);
      const double z0 = std::exp(0.0) + std::exp(1.0) + std::exp(2.0);
      CHECK(r(0, 2) == doctest::Approx(std::exp(2.0) / z0).epsilon(1e-14));
      CHECK(norm(0) == doctest::Approx(std::log(z0)).epsilon(1e-14));
      CHECK(r(1, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0) + std::exp(-0.5))).epsilon(1e-12));
      CHECK(r(2, 1) == 0.0);
      CHECK(r(2, 0) == doctest::Approx(0.5));
      CHECK(sum_log_sum_exp(l, e) == doctest::Approx(norm.sum()).epsilon(1e-14));
    }
  }

  TEST_CASE("a row with no finite entry is an error") {
    Eigen::MatrixXd l = Eigen::MatrixXd::Constant(2, 2, -std::numeric_limits<double>::infinity());
    l(0, 0) = 0.0;
    CHECK_THROWS(normalize_log_rows(l, nullptr, Exec::Serial));
  }
}
