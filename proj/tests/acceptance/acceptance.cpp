// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. argv[1] is the path of the CLI binary.

#include "ctxem/context_labels.hpp"
#include "ctxem/errors.hpp"
#include "ctxem/estimators.hpp"
#include "ctxem/experiments.hpp"
#include "ctxem/harness.hpp"
#include "ctxem/information.hpp"
#include "ctxem/problems.hpp"
#include "ctxem/speller.hpp"
#include "ctxem/stats.hpp"

#include "../support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace ctxem;
using ctxem::testing::with_labels;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ScenarioSpec spec_for(ScenarioId id, int problems, std::uint64_t seed) {
  ScenarioSpec s;
  s.id = id;
  s.problems = problems;
  s.master_seed = seed;
  return s;
}

// ---------------------------------------------------------------- 1
Outcome negentropy_example() {
  Eigen::Vector2d p(0.757, 0.243);
  const double ne = negentropy(p);
  const ProbLabel l = make_label(0.2, 2, 0);
  const bool ok = std::abs(ne - 0.2) < 1e-3 && std::abs(l(0) - 0.757) < 1e-3 && std::abs(l(1) - 0.243) < 1e-3;
  return {ok, fmt("NE=%.6f label=[%.6f, %.6f]", ne, l(0), l(1))};
}

// ---------------------------------------------------------------- 2
Outcome limit_identities() {
  const ScenarioSpec s = spec_for(ScenarioId::B, 20, 202);
  double worst_onehot = 0.0, worst_rp = 0.0, worst_traj = 0.0;
  bool lengths_match = true;
  for (int idx = 0; idx < s.problems; ++idx) {
    const ProblemInstance p = generate_problem(s, idx);
    FitConfig fc;
    fc.free = p.free;
    InfoOptions io;
    io.free = p.free;

    const LabeledDataset one_hot = with_labels(p.train, 2, 1.0, 1000 + idx);
    const Eigen::VectorXd ref = to_vector(fit(Algorithm::S, one_hot, p.init, fc).estimate);
    for (Algorithm a : {Algorithm::CA, Algorithm::WCA, Algorithm::DCA}) {
      const FitResult fr = fit(a, one_hot, p.init, fc);
      worst_onehot = std::max(worst_onehot, (to_vector(fr.estimate) - ref).norm());
      worst_rp = std::max(worst_rp, std::abs(information(a, fr.estimate, one_hot, io).r_prime - 1.0));
    }

    const LabeledDataset ignorant = with_labels(p.train, 2, 0.0, 2000 + idx);
    const FitResult us = fit(Algorithm::US, ignorant, p.init, fc);
    const FitResult wca = fit(Algorithm::WCA, ignorant, p.init, fc);
    if (us.theta_trace.size() != wca.theta_trace.size()) lengths_match = false;
    const std::size_t k = std::min(us.theta_trace.size(), wca.theta_trace.size());
    for (std::size_t t = 0; t < k; ++t)
      worst_traj = std::max(worst_traj, (us.theta_trace[t] - wca.theta_trace[t]).norm());
  }
  const bool ok = worst_onehot < 1e-9 && worst_rp < 1e-12 && worst_traj < 1e-12 && lengths_match;
  return {ok, fmt("max |theta-theta_S|=%.3g max |r'-1|=%.3g max per-iteration |WCA-US|=%.3g same length=%d",
                  worst_onehot, worst_rp, worst_traj, lengths_match ? 1 : 0)};
}

// ---------------------------------------------------------------- 3
Outcome monotone_ascent() {
  const ScenarioId families[] = {ScenarioId::B, ScenarioId::D, ScenarioId::E, ScenarioId::F};
  double worst = 0.0;
  int fits = 0;
  for (ScenarioId id : families) {
    const ScenarioSpec s = spec_for(id, 50, 303);
    for (int idx = 0; idx < s.problems; ++idx) {
      const ProblemInstance p = generate_problem(s, idx);
      const int m = p.actual.size();
      const LabeledDataset d = with_labels(p.train, m, 0.3, derive_seed({303, static_cast<std::uint64_t>(idx)}));
      FitConfig fc;
      fc.free = p.free;
      for (Algorithm a : {Algorithm::US, Algorithm::CA, Algorithm::WCA}) {
        FitResult fr;
        try {
          fr = fit(a, d, p.init, fc);
        } catch (const FitError&) {
          continue;
        }
        ++fits;
        double prev = -INFINITY;
        for (const auto& th : fr.theta_trace) {
          const double ll = incomplete_loglik(a, from_vector(p.init, th), d, Exec::Serial);
          if (std::isfinite(prev)) worst = std::max(worst, prev - ll);
          prev = ll;
        }
      }
    }
  }
  return {worst <= 1e-9 && fits > 500, fmt("%d fits, largest decrease %.3g", fits, worst)};
}

// ---------------------------------------------------------------- 4
Outcome mip_identity() {
  const ScenarioId families[] = {ScenarioId::B, ScenarioId::D, ScenarioId::E, ScenarioId::F};
  double worst = 0.0;
  std::map<std::string, int> checked;
  for (int idx = 0; idx < 50; ++idx) {
    const ScenarioSpec s = spec_for(families[idx % 4], 50, 404);
    const ProblemInstance p = generate_problem(s, idx);
    const int m = p.actual.size();
    const LabeledDataset d = with_labels(p.train, m, 0.5, derive_seed({404, static_cast<std::uint64_t>(idx)}));
    FitConfig fc;
    fc.free = p.free;
    fc.tol = 1e-10;
    fc.max_iter = 5000;
    fc.keep_trace = false;
    InfoOptions io;
    io.free = p.free;
    for (Algorithm a : {Algorithm::US, Algorithm::CA, Algorithm::WCA}) {
      FitResult fr;
      try {
        fr = fit(a, d, p.init, fc);
      } catch (const FitError&) {
        continue;
      }
      if (!fr.converged) continue;
      const Eigen::MatrixXd direct = complete_info(a, fr.estimate, d, fr.responsibilities, io) -
                                     missing_info(a, fr.estimate, d, fr.responsibilities, io);
      const Eigen::MatrixXd fd = finite_difference_observed_info(a, fr.estimate, d, io);
      worst = std::max(worst, (direct - fd).norm() / fd.norm());
      ++checked[std::string(algorithm_name(a))];
    }
  }
  const bool ok = worst < 1e-3 && checked["US"] > 0 && checked["CA"] > 0 && checked["WCA"] > 0;
  return {ok, fmt("checked US=%d CA=%d WCA=%d, max relative Frobenius error %.3g", checked["US"], checked["CA"],
                  checked["WCA"], worst)};
}

// ---------------------------------------------------------------- 5
Outcome missing_info_monotone() {
  MipSetup setup;
  Rng rng(setup.seed);
  const LabeledDataset base = mip_data(setup, rng);
  const MixtureSpec theta = mip_spec(setup.pi1, setup.mu1, setup.mu2, setup.s1, setup.s2);
  InfoOptions io;
  io.free = mip_mask(theta);
  const std::vector<double> grid{0.0, 0.2, 0.4, 0.6, 0.8, 0.99};
  bool ok = true;
  std::string detail;
  for (Algorithm a : {Algorithm::CA, Algorithm::WCA}) {
    double prev = INFINITY;
    detail += std::string(algorithm_name(a)) + " tr(I_m):";
    for (double ne : grid) {
      const InfoMatrices info = information(a, theta, with_labels(base, 2, ne, 55), io);
      const double tr = info.i_m.trace();
      if (!(tr < prev)) ok = false;
      prev = tr;
      detail += fmt(" %.4g", tr);
    }
    const InfoMatrices hot = information(a, theta, with_labels(base, 2, 1.0, 55), io);
    const double ratio = hot.i_m.trace() / hot.i_c.trace();
    if (!(ratio < 1e-6)) ok = false;
    detail += fmt(" one-hot ratio %.3g; ", ratio);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------- 6
Outcome convergence_rate() {
  const ScenarioSpec s = spec_for(ScenarioId::B, 400, 606);
  int used = 0, tried = 0;
  double worst = 0.0;
  for (int idx = 0; idx < s.problems && used < 20; ++idx) {
    ++tried;
    const ProblemInstance p = generate_problem(s, idx);
    FitConfig fc;
    fc.free = p.free;
    fc.tol = 1e-12;
    fc.max_iter = 20000;
    FitResult fr;
    try {
      fr = fit(Algorithm::US, p.train, p.init, fc);
    } catch (const FitError&) {
      continue;
    }
    if (!fr.converged) continue;
    InfoOptions io;
    io.free = p.free;
    const InfoMatrices info = information(Algorithm::US, fr.estimate, p.train, io);
    if (!info.regular || !(info.spectral_radius < 1.0)) continue;
    // First step below 1e-6: late enough for the leading eigenvalue to
    // dominate, early enough to be clear of rounding.
    const auto& tr = fr.theta_trace;
    double measured = NAN;
    for (std::size_t k = 2; k < tr.size(); ++k) {
      const double cur = (tr[k] - tr[k - 1]).norm();
      const double prev = (tr[k - 1] - tr[k - 2]).norm();
      if (cur < 1e-6 && prev > 0.0) {
        measured = cur / prev;
        break;
      }
    }
    if (!std::isfinite(measured)) continue;
    worst = std::max(worst, std::abs(measured - info.spectral_radius));
    ++used;
  }
  return {used == 20 && worst < 0.05,
          fmt("%d regular problems (of %d generated), max |ratio - rho(J)| = %.4f", used, tried, worst)};
}

// ---------------------------------------------------------------- 7
Outcome scenario_b() {
  const ScenarioSpec s = spec_for(ScenarioId::B, 100, 7);
  const ScenarioReport rep = run_scenario(s);
  const auto& agg = rep.aggregates;
  auto d_of = [&](const char* a, std::optional<double> ne) { return find_aggregate(agg, a, ne)->d_mean.value(); };
  const double ds = d_of("S", std::nullopt), dca = d_of("CA", 0.3), dus = d_of("US", std::nullopt);
  bool ok = ds < dca && dca < dus;
  std::string detail = fmt("D: S %.4f < CA(0.3) %.4f < US %.4f; ", ds, dca, dus);

  for (const char* a : {"CA", "WCA"}) {
    int inversions = 0;
    for (std::size_t k = 1; k < s.ne_grid.size(); ++k)
      if (d_of(a, s.ne_grid[k]) > d_of(a, s.ne_grid[k - 1])) ++inversions;
    if (inversions > 1) ok = false;
    detail += fmt("%s inversions %d; ", a, inversions);
  }
  int rate_violations = 0;
  for (double ne : s.ne_grid) {
    if (!(ne < 0.9)) continue;
    const auto ca = find_aggregate(agg, "CA", ne)->r_prime_mean;
    const auto wca = find_aggregate(agg, "WCA", ne)->r_prime_mean;
    if (!ca || !wca || !(*ca > *wca)) ++rate_violations;
  }
  if (rate_violations > 0) ok = false;
  detail += fmt("r' CA<=WCA at %d levels; ", rate_violations);

  const std::vector<double> ca = metric_values(rep.rows, "CA", 0.3, "D");
  const std::vector<double> us = metric_values(rep.rows, "US", std::nullopt, "D");
  const double pv = wilcoxon_ranksum(ca, us);
  if (!(pv < 0.01)) ok = false;
  detail += fmt("p(CA0.3 vs US)=%.3g", pv);
  return {ok, detail};
}

// ---------------------------------------------------------------- 8
Outcome wrong_context() {
  ScenarioSpec hi = spec_for(ScenarioId::Wrong, 100, 8);
  hi.wrong_frac = 0.9;
  hi.ne_grid = {0.9};
  const ScenarioReport r_hi = run_scenario(hi);
  const double acc = find_aggregate(r_hi.aggregates, "CA", 0.9)->acc_mean.value();

  ScenarioSpec lo = spec_for(ScenarioId::Wrong, 100, 8);
  lo.wrong_frac = 0.2;
  lo.ne_grid = {0.3};
  const ScenarioReport r_lo = run_scenario(lo);
  const double dca = find_aggregate(r_lo.aggregates, "CA", 0.3)->d_mean.value();
  const double dus = find_aggregate(r_lo.aggregates, "US", std::nullopt)->d_mean.value();
  const double pv =
      wilcoxon_ranksum(metric_values(r_lo.rows, "CA", 0.3, "D"), metric_values(r_lo.rows, "US", std::nullopt, "D"));
  const bool ok = acc < 0.5 && dca < dus && pv < 0.01;
  return {ok, fmt("wrong 0.9 / NE 0.9: acc(CA) %.4f; wrong 0.2 / NE 0.3: D(CA) %.4f vs D(US) %.4f, p=%.3g", acc, dca,
                  dus, pv)};
}

// ---------------------------------------------------------------- 9
Outcome bias_alleviation() {
  ScenarioSpec s = spec_for(ScenarioId::Biased, 100, 9);
  s.pi1 = 0.2;
  s.ne_grid = {0.3};
  const ScenarioReport rep = run_scenario(s);
  const double bca = find_aggregate(rep.aggregates, "CA", 0.3)->bias_b_mean.value();
  const double bus = find_aggregate(rep.aggregates, "US", std::nullopt)->bias_b_mean.value();
  return {std::abs(bca) < 0.5 * std::abs(bus), fmt("|B(CA,0.3)| %.4f vs |B(US)| %.4f", std::abs(bca), std::abs(bus))};
}

// ---------------------------------------------------------------- 10
Outcome landscape_check() {
  const LandscapeSetup setup;
  const Landscape L = landscape(setup);

  std::vector<double> us, wca0;
  double worst_bound = -INFINITY;
  for (const auto& p : L.points) {
    if (p.algorithm == "US") us.push_back(p.loglik);
    if (p.algorithm == "WCA" && p.ne && *p.ne == 0.0) wca0.push_back(p.loglik);
    if (p.q_plus_h) worst_bound = std::max(worst_bound, *p.q_plus_h - p.loglik);
  }
  double mean_diff = 0.0;
  for (std::size_t k = 0; k < us.size(); ++k) mean_diff += (wca0[k] - us[k]) / static_cast<double>(us.size());
  double dev = 0.0;
  for (std::size_t k = 0; k < us.size(); ++k) dev = std::max(dev, std::abs(wca0[k] - us[k] - mean_diff));

  // Tangency at the initial guess: equal value and equal slope in mu_1.
  double worst_value = 0.0, worst_slope = 0.0;
  const double h = 1e-5;
  auto spec_at = [&](double mu) { return landscape_spec(setup, mu, setup.pi1); };
  auto check = [&](Algorithm a, const LabeledDataset& d) {
    auto qh = [&](double mu) {
      const QH v = q_and_entropy(a, L.init, spec_at(mu), d);
      return v.q + v.h;
    };
    auto ll = [&](double mu) { return incomplete_loglik(a, spec_at(mu), d, Exec::Serial); };
    const double x = setup.init_mu1;
    worst_value = std::max(worst_value, std::abs(qh(x) - ll(x)));
    const double s_qh = (qh(x + h) - qh(x - h)) / (2 * h);
    const double s_ll = (ll(x + h) - ll(x - h)) / (2 * h);
    worst_slope = std::max(worst_slope, std::abs(s_qh - s_ll));
  };
  check(Algorithm::US, L.data);
  for (double ne : setup.ne_set) {
    const LabeledDataset d = with_labels(L.data, 2, ne, 77);
    check(Algorithm::CA, d);
    check(Algorithm::WCA, d);
  }
  const bool ok = us.size() == static_cast<std::size_t>(setup.grid_points) && wca0.size() == us.size() &&
                  dev < 1e-9 && worst_bound <= 1e-9 && worst_value < 1e-9 && worst_slope < 1e-4;
  return {ok, fmt("centered WCA0-US deviation %.3g; max (Q+H - logL) on grid %.3g; tangency value %.3g slope %.3g",
                  dev, worst_bound, worst_value, worst_slope)};
}

// ---------------------------------------------------------------- 11
Outcome speller_direction() {
  SpellerRun run;
  run.seed = 1;
  const SpellerResult res = run_speller(run);
  std::map<std::string, std::map<int, std::vector<double>>> per;
  for (const auto& r : res.rows) per[r.algorithm][r.subject].push_back(r.running_ba);
  std::map<std::string, double> avg;
  for (const auto& [alg, subjects] : per) {
    double total = 0.0;
    for (const auto& [subj, v] : subjects) total += mean(v);
    avg[alg] = total / static_cast<double>(subjects.size());
  }
  const double s = avg["S"], ca = avg["CA"], cae = avg["CAE"];
  const bool ok = per["S"].size() == 12 && s >= ca && ca > cae && (ca - cae) * 100.0 >= 5.0;
  return {ok, fmt("mean running BA: S %.4f, CA %.4f, CAE %.4f (CA-CAE %.1f points)", s, ca, cae, (ca - cae) * 100)};
}

// ---------------------------------------------------------------- 12
std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const std::string& cli) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / fmt("ctxem_accept_%d", static_cast<int>(std::time(nullptr)));
  fs::create_directories(dir);
  const std::vector<std::pair<std::string, std::string>> cmds{
      {"scenario", "scenario --id b --problems 10 --seed 5 --format csv --out "},
      {"wrong", "scenario --id wrong --problems 5 --wrong-frac 0.3 --seed 5 --format csv --out "},
      {"landscape", "landscape --out "},
      {"mip", "mip --reps 3 --n 2000 --seed 5 --out "},
      {"speller", "speller --words nothing --algorithms S,CA,CAE --drift default --seed 5 --subjects 2 --out "},
  };
  bool ok = true;
  std::string detail;
  for (const auto& [name, args] : cmds) {
    std::string out[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path file = dir / fmt("%s_%d.csv", name.c_str(), run);
      const std::string cmd = "\"" + cli + "\" " + args + "\"" + file.string() + "\" > /dev/null";
      if (std::system(cmd.c_str()) != 0) {
        ok = false;
        detail += name + " failed to run; ";
        break;
      }
      out[run] = slurp(file);
      for (const char* tag : {"agg", "sig"}) {
        fs::path sib = file;
        sib.replace_extension(std::string(".") + tag + ".csv");
        if (fs::exists(sib)) out[run] += slurp(sib);
      }
    }
    const bool same = !out[0].empty() && out[0] == out[1];
    if (!same) ok = false;
    detail += name + (same ? " identical; " : " DIFFERS; ");
  }
  fs::remove_all(dir);
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "ctxem";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"negentropy example", negentropy_example},
      {"limit identities", limit_identities},
      {"monotone ascent", monotone_ascent},
      {"missing-information identity", mip_identity},
      {"missing-information monotonicity", missing_info_monotone},
      {"convergence-rate prediction", convergence_rate},
      {"scenario b replication", scenario_b},
      {"wrong-context inversion", wrong_context},
      {"bias alleviation", bias_alleviation},
      {"likelihood landscape", landscape_check},
      {"speller direction", speller_direction},
      {"CLI determinism", [&] { return determinism(cli); }},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (k + 1) << " " << criteria[k].first << " (" << fmt("%.1f", secs)
              << " s): " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
