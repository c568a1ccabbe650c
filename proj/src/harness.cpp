#include "ctxem/harness.hpp"

#include "ctxem/information.hpp"
#include "ctxem/stats.hpp"

#include <bit>
#include <cmath>
#include <map>

namespace ctxem {

namespace {

bool same_ne(std::optional<double> a, std::optional<double> b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || std::abs(*a - *b) < 1e-9;
}

// Mixed-context rows carry the realised mean NE, which varies per problem;
// they are grouped by algorithm only.
std::optional<double> group_ne(const MetricRow& r) {
  if (r.scenario == "mixed") return std::nullopt;
  return r.ne;
}

ContextSpec context_for(const ScenarioSpec& s, double ne) {
  ContextSpec c;
  c.ne = ne;
  switch (s.id) {
    case ScenarioId::Wrong:
      c.mode = ContextMode::Wrong;
      c.wrong_frac = s.wrong_frac;
      break;
    case ScenarioId::Mixed:
      c.mode = ContextMode::Mixed;
      c.ne_low = s.mixed_ne_low;
      c.ne_high = s.mixed_ne_high;
      break;
    default: c.mode = ContextMode::Correct;
  }
  return c;
}

double masked_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const std::vector<bool>& free) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k)
    if (free[static_cast<std::size_t>(k)]) s += (a(k) - b(k)) * (a(k) - b(k));
  return std::sqrt(s);
}

struct Series {
  std::vector<double> d, ase, rp, acc, ba, mse, b;
};

void put(std::optional<double>& mean_out, std::optional<double>& std_out, const std::vector<double>& v) {
  if (v.empty()) return;
  mean_out = mean(v);
  std_out = stddev(v);
}

}  // namespace

std::vector<MetricRow> run_problem(const ScenarioSpec& s, const ProblemInstance& p, const HarnessConfig& config) {
  const int m = p.actual.size();
  FitConfig fc = config.fit;
  const bool masked = std::find(p.free.begin(), p.free.end(), false) != p.free.end();
  if (masked) fc.free = p.free;
  InfoOptions io;
  io.free = fc.free;
  const Eigen::VectorXd truth_vec = to_vector(p.actual);

  auto evaluate = [&](Algorithm alg, std::optional<double> ne, const LabeledDataset& data) {
    MetricRow row;
    row.scenario = std::string(scenario_name(s.id));
    row.problem_id = p.idx;
    row.algorithm = std::string(algorithm_name(alg));
    row.ne = ne;
    row.seed = p.seed;
    try {
      const FitResult fr = fit(alg, data, p.init, fc);
      row.converged = fr.converged;
      row.iterations = fr.iterations;
      const MixtureSpec& est = fr.estimate;
      const Eigen::VectorXd est_vec = to_vector(est);
      row.d = masked_distance(est_vec, truth_vec, p.free);

      const InfoMatrices info = information(alg, est, data, io);
      row.regular = info.regular;
      std::vector<double> se(info.se.data(), info.se.data() + info.se.size());
      if (alg == Algorithm::CA && p.free[0]) {
        const double nn = data.size();
        for (int j = 0; j + 1 < m; ++j) {
          const double w = est.weights[static_cast<std::size_t>(j)];
          se.push_back(std::sqrt(w * (1.0 - w) / nn));
        }
      }
      bool finite = !se.empty();
      for (double v : se) finite = finite && std::isfinite(v);
      if (finite) row.ase = mean(se);
      if (std::isfinite(info.r_prime)) row.r_prime = info.r_prime;

      const auto pred = classify_map(est, p.test.samples);
      row.acc = accuracy(pred, p.test.truth);
      row.ba = balanced_accuracy(pred, p.test.truth, m);

      if (s.id == ScenarioId::F) {
        double se2 = 0.0;
        for (int i = 0; i < p.test.size(); ++i) {
          const auto& r = std::get<LinearRegressor>(est.components[static_cast<std::size_t>(pred[static_cast<std::size_t>(i)])]);
          const double e = p.test.samples(i, 1) - (r.beta0 + r.beta1 * p.test.samples(i, 0));
          se2 += e * e;
        }
        row.mse = se2 / p.test.size();
      }
      if (s.id == ScenarioId::Biased) {
        const int pc = est.params_per_component();
        double dj[2];
        for (int j = 0; j < 2; ++j) {
          const int off = component_offset(est, j);
          dj[j] = (est_vec.segment(off, pc) - truth_vec.segment(off, pc)).norm();
        }
        row.bias_b = dj[0] - dj[1];
      }
    } catch (const std::exception&) {
      row.failed = true;
      row.converged = false;
      row.regular = false;
    }
    return row;
  };

  std::vector<MetricRow> rows;
  auto wants = [&](Algorithm a) {
    return std::find(config.algorithms.begin(), config.algorithms.end(), a) != config.algorithms.end();
  };
  if (wants(Algorithm::US)) rows.push_back(evaluate(Algorithm::US, std::nullopt, p.train));
  if (wants(Algorithm::S)) rows.push_back(evaluate(Algorithm::S, std::nullopt, p.train));

  // Labels are drawn once per NE level and shared by every context-aware algorithm.
  std::vector<std::pair<double, LabeledDataset>> labelled;
  if (s.id == ScenarioId::Mixed) {
    Rng rng(derive_seed({p.seed, 0x6d69786564ULL}));
    LabeledDataset d = p.train;
    d.plabels = make_context_labels(d.truth, m, context_for(s, 0.0), rng);
    const double ne = mean_negentropy(*d.plabels);
    labelled.emplace_back(ne, std::move(d));
  } else {
    for (double ne : s.ne_grid) {
      Rng rng(derive_seed({p.seed, std::bit_cast<std::uint64_t>(ne)}));
      LabeledDataset d = p.train;
      d.plabels = make_context_labels(d.truth, m, context_for(s, ne), rng);
      labelled.emplace_back(ne, std::move(d));
    }
  }
  for (Algorithm a : {Algorithm::CA, Algorithm::WCA, Algorithm::DCA}) {
    if (!wants(a)) continue;
    for (const auto& [ne, d] : labelled) rows.push_back(evaluate(a, ne, d));
  }
  return rows;
}

ScenarioReport run_scenario(const ScenarioSpec& s, const HarnessConfig& config) {
  validate(s);
  std::vector<std::vector<MetricRow>> per(static_cast<std::size_t>(s.problems));
  std::vector<char> gen_failed(static_cast<std::size_t>(s.problems), 0);

  auto one = [&](int idx) {
    try {
      const ProblemInstance p = generate_problem(s, idx);
      per[static_cast<std::size_t>(idx)] = run_problem(s, p, config);
    } catch (const std::exception&) {
      gen_failed[static_cast<std::size_t>(idx)] = 1;
    }
  };
  if (config.exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int idx = 0; idx < s.problems; ++idx) one(idx);
  } else {
    for (int idx = 0; idx < s.problems; ++idx) one(idx);
  }

  ScenarioReport rep;
  for (int idx = 0; idx < s.problems; ++idx) {
    if (gen_failed[static_cast<std::size_t>(idx)]) {
      MetricRow r;
      r.scenario = std::string(scenario_name(s.id));
      r.problem_id = idx;
      r.algorithm = "generation";
      r.failed = true;
      r.regular = false;
      r.seed = derive_seed({s.master_seed, static_cast<std::uint64_t>(s.id), static_cast<std::uint64_t>(idx)});
      rep.rows.push_back(r);
      continue;
    }
    auto& v = per[static_cast<std::size_t>(idx)];
    rep.rows.insert(rep.rows.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  }
  rep.aggregates = aggregate(rep.rows);
  rep.significance = significance(rep.rows, config.alpha);
  return rep;
}

std::vector<AggregateRow> aggregate(const std::vector<MetricRow>& rows) {
  std::vector<AggregateRow> out;
  std::vector<Series> series;
  for (const auto& r : rows) {
    if (r.algorithm == "generation") continue;
    const auto ne = group_ne(r);
    std::size_t k = 0;
    while (k < out.size() && !(out[k].algorithm == r.algorithm && same_ne(out[k].ne, ne))) ++k;
    if (k == out.size()) {
      AggregateRow a;
      a.algorithm = r.algorithm;
      a.ne = ne;
      out.push_back(a);
      series.emplace_back();
    }
    auto& a = out[k];
    auto& sr = series[k];
    ++a.rows;
    if (r.failed) {
      ++a.failed;
      continue;
    }
    if (!r.converged) ++a.not_converged;
    if (!r.regular) ++a.nonregular;
    const bool ridge = r.r_prime && *r.r_prime <= 0.0;
    if (ridge) ++a.ridge;
    if (r.d) sr.d.push_back(*r.d);
    if (r.converged && r.regular && !ridge) {
      if (r.ase) sr.ase.push_back(*r.ase);
      if (r.r_prime) sr.rp.push_back(*r.r_prime);
    }
    if (r.acc) sr.acc.push_back(*r.acc);
    if (r.ba) sr.ba.push_back(*r.ba);
    if (r.mse) sr.mse.push_back(*r.mse);
    if (r.bias_b) sr.b.push_back(*r.bias_b);
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto& a = out[k];
    const auto& sr = series[k];
    put(a.d_mean, a.d_std, sr.d);
    put(a.ase_mean, a.ase_std, sr.ase);
    put(a.r_prime_mean, a.r_prime_std, sr.rp);
    put(a.acc_mean, a.acc_std, sr.acc);
    put(a.ba_mean, a.ba_std, sr.ba);
    put(a.mse_mean, a.mse_std, sr.mse);
    put(a.bias_b_mean, a.bias_b_std, sr.b);
  }
  return out;
}

std::vector<double> metric_values(const std::vector<MetricRow>& rows, std::string_view alg, std::optional<double> ne,
                                  std::string_view metric) {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.failed || r.algorithm != alg || !same_ne(group_ne(r), ne)) continue;
    std::optional<double> x;
    if (metric == "D") x = r.d;
    else if (metric == "ASE") x = r.ase;
    else if (metric == "r_prime") x = r.r_prime;
    else if (metric == "acc") x = r.acc;
    else if (metric == "ba") x = r.ba;
    else if (metric == "mse") x = r.mse;
    else if (metric == "bias_b") x = r.bias_b;
    else throw std::invalid_argument("unknown metric: " + std::string(metric));
    if (x) v.push_back(*x);
  }
  return v;
}

const AggregateRow* find_aggregate(const std::vector<AggregateRow>& agg, std::string_view alg,
                                   std::optional<double> ne) {
  for (const auto& a : agg)
    if (a.algorithm == alg && same_ne(a.ne, ne)) return &a;
  return nullptr;
}

std::vector<SignificanceRow> significance(const std::vector<MetricRow>& rows, double alpha) {
  const auto agg = aggregate(rows);
  std::vector<SignificanceRow> out;
  const bool has_mse = std::any_of(rows.begin(), rows.end(), [](const MetricRow& r) { return r.mse.has_value(); });
  const bool has_b = std::any_of(rows.begin(), rows.end(), [](const MetricRow& r) { return r.bias_b.has_value(); });
  std::vector<std::string> metrics{"D", "ASE", "r_prime", "acc"};
  if (has_mse) metrics.push_back("mse");
  if (has_b) metrics.push_back("bias_b");

  auto compare = [&](const std::string& metric, const std::string& a, std::optional<double> na, const std::string& b,
                     std::optional<double> nb) {
    if (!find_aggregate(agg, a, na) || !find_aggregate(agg, b, nb)) return;
    const auto va = metric_values(rows, a, na, metric);
    const auto vb = metric_values(rows, b, nb, metric);
    if (va.empty() || vb.empty()) return;
    SignificanceRow s;
    s.metric = metric;
    s.alg_a = a;
    s.ne_a = na;
    s.alg_b = b;
    s.ne_b = nb;
    s.n_a = static_cast<int>(va.size());
    s.n_b = static_cast<int>(vb.size());
    s.p_value = wilcoxon_ranksum(va, vb);
    s.significant = s.p_value < alpha;
    out.push_back(s);
  };

  std::vector<std::optional<double>> levels;
  for (const auto& a : agg)
    if (a.algorithm == "CA" || a.algorithm == "WCA" || a.algorithm == "DCA") {
      bool seen = false;
      for (const auto& l : levels) seen = seen || same_ne(l, a.ne);
      if (!seen) levels.push_back(a.ne);
    }

  for (const auto& metric : metrics) {
    for (const auto& ne : levels) {
      for (const std::string alg : {"CA", "WCA", "DCA"}) {
        compare(metric, alg, ne, "US", std::nullopt);
        compare(metric, alg, ne, "S", std::nullopt);
      }
      compare(metric, "CA", ne, "WCA", ne);
      compare(metric, "CA", ne, "DCA", ne);
      compare(metric, "WCA", ne, "DCA", ne);
    }
  }
  return out;
}

}  // namespace ctxem
