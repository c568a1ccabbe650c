// Serial reference vs OpenMP kernels: batched log densities, the E-step and a
// small scenario sweep. Prints median wall time over repetitions.

#include "ctxem/estimators.hpp"
#include "ctxem/harness.hpp"
#include "ctxem/kernels.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

using namespace ctxem;

namespace {

double median_ms(int reps, const std::function<void()>& f) {
  std::vector<double> t;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    t.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-28s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx\n", name, serial, parallel,
              serial / parallel);
}

MixtureSpec mv_spec(int d) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(d, d);
  for (int k = 0; k + 1 < d; ++k) a(k, k + 1) = a(k + 1, k) = 0.3;
  return {{0.4, 0.6}, {MultivariateNormal{Eigen::VectorXd::Zero(d), a}, MultivariateNormal{Eigen::VectorXd::Ones(d), a}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel benchmark"};
  int n = 200000, reps = 5, problems = 40;
  app.add_option("--n", n, "rows per kernel call");
  app.add_option("--reps", reps, "repetitions per timing");
  app.add_option("--problems", problems, "problems in the scenario sweep");
  CLI11_PARSE(app, argc, argv);

  std::printf("threads: %d\n", omp_get_max_threads());
  Rng rng(1);

  const MixtureSpec uv{{0.3, 0.7}, {UnivariateNormal{0.0, 1.0}, UnivariateNormal{2.0, 0.5}}};
  const MixtureSpec mv = mv_spec(6);
  const MixtureSpec reg{{0.5, 0.5}, {LinearRegressor{0.0, 1.0, 0.5}, LinearRegressor{1.0, -1.0, 1.0}}};
  for (const auto& [name, spec] : {std::pair{"log density (normal)", uv}, std::pair{"log density (6-d normal)", mv},
                                   std::pair{"log density (regressor)", reg}}) {
    const LabeledDataset d = sample_mixture(spec, n, rng);
    report(name, median_ms(reps, [&] { (void)log_density_matrix(spec, d.samples, Exec::Serial); }),
           median_ms(reps, [&] { (void)log_density_matrix(spec, d.samples, Exec::Parallel); }));
  }

  const LabeledDataset d = sample_mixture(mv, n, rng);
  report("E-step US (6-d normal)", median_ms(reps, [&] { (void)e_step(Algorithm::US, mv, d, Exec::Serial); }),
         median_ms(reps, [&] { (void)e_step(Algorithm::US, mv, d, Exec::Parallel); }));

  ScenarioSpec s;
  s.id = ScenarioId::B;
  s.problems = problems;
  s.ne_grid = {0.0, 0.3, 0.7};
  HarnessConfig ser, par;
  ser.exec = Exec::Serial;
  report("scenario b sweep", median_ms(1, [&] { (void)run_scenario(s, ser); }),
         median_ms(1, [&] { (void)run_scenario(s, par); }));
  return 0;
}
