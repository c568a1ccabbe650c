#include "ctxem/errors.hpp"
#include "ctxem/mixture.hpp"
#include "ctxem/mixture_json.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>

using namespace ctxem;

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

MultivariateNormal mv2() {
  Eigen::MatrixXd cov(2, 2);
  cov << 0.8, 0.3, 0.3, 0.5;
  return {Eigen::Vector2d(0.2, -0.4), cov};
}

std::vector<std::pair<ComponentParams, std::vector<double>>> cases() {
  return {
      {UnivariateNormal{0.3, 0.7}, {1.1}},
      {mv2(), {0.5, 0.1}},
      {MaxwellBoltzmann{1.7}, {2.3}},
      {LinearRegressor{0.4, -1.2, 0.9}, {0.7, -0.3}},
  };
}

double ld(const ComponentParams& shape, const Eigen::VectorXd& v, const std::vector<double>& x) {
  return component_log_density(params_from_vector(shape, v), x);
}

}  // namespace

TEST_SUITE("mixture") {
  TEST_CASE("score matches central differences of the log density") {
    for (const auto& [c, x] : cases()) {
      const Eigen::VectorXd v = params_to_vector(c);
      const Eigen::VectorXd score = component_score(c, x);
      REQUIRE(score.size() == v.size());
      for (Eigen::Index k = 0; k < v.size(); ++k) {
        const double h = 1e-6;
        Eigen::VectorXd up = v, dn = v;
        up(k) += h;
        dn(k) -= h;
        const double fd = (ld(c, up, x) - ld(c, dn, x)) / (2 * h);
        CHECK(score(k) == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("hessian matches central differences of the score") {
    for (const auto& [c, x] : cases()) {
      const Eigen::VectorXd v = params_to_vector(c);
      const Eigen::MatrixXd hess = component_log_density_hessian(c, x);
      for (Eigen::Index k = 0; k < v.size(); ++k) {
        const double h = 1e-6;
        Eigen::VectorXd up = v, dn = v;
        up(k) += h;
        dn(k) -= h;
        const Eigen::VectorXd fd = (component_score(params_from_vector(c, up), x) -
                                    component_score(params_from_vector(c, dn), x)) /
                                   (2 * h);
        for (Eigen::Index r = 0; r < v.size(); ++r) CHECK(hess(r, k) == doctest::Approx(fd(r)).epsilon(1e-5));
      }
      CHECK((hess - hess.transpose()).norm() < 1e-12);
    }
  }

  TEST_CASE("densities integrate to one") {
    const UnivariateNormal g{0.5, 0.4};
    CHECK(simpson([&](double x) { return std::exp(component_log_density(g, std::vector<double>{x})); }, -8, 9) ==
          doctest::Approx(1.0).epsilon(1e-9));
    const MaxwellBoltzmann mb{1.3};
    CHECK(simpson([&](double x) { return std::exp(component_log_density(mb, std::vector<double>{x})); }, 1e-12,
                  20) == doctest::Approx(1.0).epsilon(1e-9));
    const LinearRegressor reg{0.2, 1.5, 0.6};
    CHECK(simpson([&](double y) { return std::exp(component_log_density(reg, std::vector<double>{0.8, y})); }, -10,
                  10) == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("closed-form KL matches quadrature") {
    const UnivariateNormal a{0.2, 0.5}, b{1.0, 0.9};
    const double q = simpson(
        [&](double x) {
          const std::vector<double> o{x};
          const double la = component_log_density(a, o);
          return std::exp(la) * (la - component_log_density(b, o));
        },
        -10, 10);
    CHECK(component_kl(a, b) == doctest::Approx(q).epsilon(1e-8));

    const MaxwellBoltzmann m1{1.2}, m2{2.5};
    const double qm = simpson(
        [&](double x) {
          const std::vector<double> o{x};
          const double la = component_log_density(m1, o);
          return std::exp(la) * (la - component_log_density(m2, o));
        },
        1e-12, 25);
    CHECK(component_kl(m1, m2) == doctest::Approx(qm).epsilon(1e-8));
  }

  TEST_CASE("multivariate KL with diagonal covariances is a sum of univariate KLs") {
    Eigen::MatrixXd ca = Eigen::Vector2d(0.4, 1.5).asDiagonal(), cb = Eigen::Vector2d(0.9, 0.3).asDiagonal();
    const MultivariateNormal a{Eigen::Vector2d(0.0, 1.0), ca}, b{Eigen::Vector2d(0.5, -1.0), cb};
    const double expected = component_kl(UnivariateNormal{0.0, std::sqrt(0.4)}, UnivariateNormal{0.5, std::sqrt(0.9)}) +
                            component_kl(UnivariateNormal{1.0, std::sqrt(1.5)}, UnivariateNormal{-1.0, std::sqrt(0.3)});
    CHECK(component_kl(a, b) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(component_kl(a, a) == doctest::Approx(0.0));
  }

  TEST_CASE("KL rejects regressors and mixed families") {
    CHECK_THROWS_AS(component_kl(LinearRegressor{}, LinearRegressor{}), UnsupportedFamily);
    CHECK_THROWS_AS(component_kl(UnivariateNormal{}, MaxwellBoltzmann{}), FamilyMismatch);
  }

  TEST_CASE("solving for a KL target round-trips") {
    Rng rng(3);
    for (KlDirection dir : {KlDirection::NewToReference, KlDirection::ReferenceToNew}) {
      for (RootChoice root : {RootChoice::Lower, RootChoice::Upper}) {
        KlSolveOptions opts;
        opts.direction = dir;
        opts.root = root;
        auto kl = [&](const ComponentParams& fixed, const ComponentParams& got) {
          return dir == KlDirection::NewToReference ? component_kl(got, fixed) : component_kl(fixed, got);
        };
        const UnivariateNormal fixed{0.3, 0.4};
        const auto loc = solve_param_for_kl(fixed, UnivariateNormal{0.0, 0.5}, 1.7, FreeAxis::Location, rng, opts);
        CHECK(kl(fixed, loc) == doctest::Approx(1.7).epsilon(1e-9));
        const double mu = std::get<UnivariateNormal>(loc).mu;
        CHECK((root == RootChoice::Upper ? mu > 0.3 : mu < 0.3));

        const auto sc = solve_param_for_kl(fixed, UnivariateNormal{0.3, 0.4}, 0.8, FreeAxis::Scale, rng, opts);
        CHECK(kl(fixed, sc) == doctest::Approx(0.8).epsilon(1e-9));

        const MaxwellBoltzmann mb{2.0};
        const auto ms = solve_param_for_kl(mb, mb, 0.5, FreeAxis::Scale, rng, opts);
        CHECK(kl(mb, ms) == doctest::Approx(0.5).epsilon(1e-9));
        CHECK((root == RootChoice::Upper ? std::get<MaxwellBoltzmann>(ms).a > 2.0
                                         : std::get<MaxwellBoltzmann>(ms).a < 2.0));

        const MultivariateNormal f = mv2();
        const auto mv = solve_param_for_kl(f, f, 2.2, FreeAxis::Location, rng, opts);
        CHECK(kl(f, mv) == doctest::Approx(2.2).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("Maxwell-Boltzmann KL example") {
    const double expected = 3.0 * std::log(2.0) - 9.0 / 8.0;
    CHECK(component_kl(MaxwellBoltzmann{1.0}, MaxwellBoltzmann{2.0}) == doctest::Approx(expected).epsilon(1e-12));
    Rng rng(1);
    KlSolveOptions opts;
    opts.direction = KlDirection::ReferenceToNew;
    opts.root = RootChoice::Upper;
    const auto got = solve_param_for_kl(MaxwellBoltzmann{1.0}, MaxwellBoltzmann{1.0}, expected, FreeAxis::Scale, rng, opts);
    CHECK(std::get<MaxwellBoltzmann>(got).a == doctest::Approx(2.0).epsilon(1e-9));
  }

  TEST_CASE("unattainable KL target throws NoRoot") {
    Rng rng(1);
    // Different scales put a floor under the location-only KL.
    const UnivariateNormal fixed{0.0, 0.1};
    CHECK_THROWS_AS(solve_param_for_kl(fixed, UnivariateNormal{0.0, 0.6}, 0.5, FreeAxis::Location, rng), NoRoot);
    CHECK_THROWS(solve_param_for_kl(fixed, UnivariateNormal{0.0, 0.6}, -1.0, FreeAxis::Location, rng));
  }

  TEST_CASE("parameter vector round trip and layout") {
    MixtureSpec m{{0.3, 0.7}, {mv2(), mv2()}};
    CHECK(num_params(m) == 1 + 2 * 5);
    CHECK(component_offset(m, 1) == 6);
    const Eigen::VectorXd v = to_vector(m);
    CHECK(v(0) == 0.3);
    CHECK(v(4) == doctest::Approx(0.3));  // cov(1,0)
    const MixtureSpec back = from_vector(m, v);
    CHECK((to_vector(back) - v).norm() == 0.0);
    const auto names = param_names(m);
    CHECK(names.size() == 11);
  }

  TEST_CASE("validation rejects bad parameters") {
    CHECK_THROWS(validate(UnivariateNormal{0.0, -1.0}));
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(validate(MultivariateNormal{Eigen::Vector2d::Zero(), bad}), SingularCovariance);
    CHECK_THROWS(validate(MixtureSpec{{0.6, 0.6}, {UnivariateNormal{}, UnivariateNormal{}}}));
    CHECK_THROWS(validate(MixtureSpec{{0.5, 0.5}, {UnivariateNormal{}, MaxwellBoltzmann{}}}));
    CHECK_THROWS_AS(component_log_density(MaxwellBoltzmann{1.0}, std::vector<double>{-0.5}), DomainError);
  }

  TEST_CASE("mixture density is the weighted sum") {
    const MixtureSpec m{{0.25, 0.75}, {UnivariateNormal{0.0, 1.0}, UnivariateNormal{2.0, 0.5}}};
    const std::vector<double> x{0.9};
    const double expected = 0.25 * std::exp(component_log_density(m.components[0], x)) +
                            0.75 * std::exp(component_log_density(m.components[1], x));
    CHECK(mixture_density(m, x) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(mixture_log_density(m, x) == doctest::Approx(std::log(expected)).epsilon(1e-14));
  }

  TEST_CASE("sampling moments") {
    Rng rng(11);
    const MixtureSpec m{{0.3, 0.7}, {UnivariateNormal{-1.0, 0.5}, UnivariateNormal{2.0, 1.0}}};
    const LabeledDataset d = sample_mixture(m, 200000, rng);
    double frac0 = 0.0, s1 = 0.0, ss1 = 0.0;
    int n1 = 0;
    for (int i = 0; i < d.size(); ++i) {
      if (d.truth[static_cast<std::size_t>(i)] == 0) {
        frac0 += 1.0;
      } else {
        s1 += d.samples(i, 0);
        ss1 += d.samples(i, 0) * d.samples(i, 0);
        ++n1;
      }
    }
    CHECK(frac0 / d.size() == doctest::Approx(0.3).epsilon(0.01));
    const double mean1 = s1 / n1;
    CHECK(mean1 == doctest::Approx(2.0).epsilon(0.01));
    CHECK(ss1 / n1 - mean1 * mean1 == doctest::Approx(1.0).epsilon(0.02));

    const MixtureSpec mb{{1.0}, {MaxwellBoltzmann{1.5}}};
    const LabeledDataset dm = sample_mixture(mb, 200000, rng);
    CHECK(dm.samples.col(0).mean() == doctest::Approx(2.0 * 1.5 * std::sqrt(2.0 / std::numbers::pi)).epsilon(0.01));
  }

  TEST_CASE("stratified sampling honours counts") {
    Rng rng(2);
    const MixtureSpec m{{0.5, 0.5}, {UnivariateNormal{}, UnivariateNormal{3.0, 1.0}}};
    const std::vector<int> counts{7, 13};
    const LabeledDataset d = sample_stratified(m, counts, rng);
    CHECK(d.size() == 20);
    CHECK(std::count(d.truth.begin(), d.truth.end(), 0) == 7);
  }

  TEST_CASE("json round trip") {
    const MixtureSpec m{{0.4, 0.6}, {mv2(), mv2()}};
    const MixtureSpec back = mixture_from_json(mixture_to_json(m));
    CHECK((to_vector(back) - to_vector(m)).norm() == 0.0);
    const MixtureSpec r{{0.5, 0.5}, {LinearRegressor{1, 2, 3}, LinearRegressor{-1, 0.5, 0.2}}};
    CHECK((to_vector(mixture_from_json(mixture_to_json(r))) - to_vector(r)).norm() == 0.0);
  }
}
