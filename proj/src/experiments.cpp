#include "ctxem/experiments.hpp"

#include "ctxem/problems.hpp"
#include "ctxem/report_io.hpp"
#include "ctxem/stats.hpp"

#include <bit>
#include <cmath>

namespace ctxem {

namespace {

LabeledDataset with_labels(const LabeledDataset& d, double ne, int m, std::uint64_t seed) {
  Rng rng(seed);
  LabeledDataset out = d;
  ContextSpec c;
  c.ne = ne;
  out.plabels = make_context_labels(out.truth, m, c, rng);
  return out;
}

std::uint64_t ne_bits(double ne) { return std::bit_cast<std::uint64_t>(ne); }

}  // namespace

MixtureSpec landscape_spec(const LandscapeSetup& s, double mu1, double pi1) {
  return MixtureSpec{{pi1, 1.0 - pi1}, {UnivariateNormal{mu1, s.s1}, UnivariateNormal{s.mu2, s.s2}}};
}

std::vector<bool> landscape_mask(const MixtureSpec& m) {
  std::vector<bool> free(static_cast<std::size_t>(num_params(m)), false);
  free[static_cast<std::size_t>(component_offset(m, 0))] = true;
  return free;
}

LabeledDataset landscape_data(const LandscapeSetup& s) {
  Rng rng(s.seed);
  const int n1 = static_cast<int>(std::lround(s.pi1 * s.n));
  const std::vector<int> counts{n1, s.n - n1};
  return sample_stratified(landscape_spec(s, s.mu1, s.pi1), counts, rng);
}

Landscape landscape(const LandscapeSetup& s) {
  if (s.grid_points < 2) throw std::invalid_argument("landscape grid needs at least two points");
  Landscape out;
  out.data = landscape_data(s);
  out.truth = landscape_spec(s, s.mu1, s.pi1);
  out.init = landscape_spec(s, s.init_mu1, s.pi1);
  for (int k = 0; k < s.grid_points; ++k)
    out.grid.push_back(s.grid_lo + (s.grid_hi - s.grid_lo) * k / (s.grid_points - 1));

  FitConfig fc;
  fc.free = landscape_mask(out.init);
  const int mu_index = component_offset(out.init, 0);

  auto trace_curve = [&](Algorithm alg, std::optional<double> ne, const LabeledDataset& d) {
    const FitResult fr = fit(alg, d, out.init, fc);
    const double fitted = fr.theta_trace.back()(mu_index);
    const double first = fr.theta_trace.size() > 1 ? fr.theta_trace[1](mu_index) : fitted;
    const bool bound = alg == Algorithm::US || alg == Algorithm::CA || alg == Algorithm::WCA;
    for (double mu : out.grid) {
      const MixtureSpec at = landscape_spec(s, mu, s.pi1);
      LandscapePoint p;
      p.algorithm = std::string(algorithm_name(alg));
      p.ne = ne;
      p.mu1 = mu;
      p.loglik = incomplete_loglik(alg, at, d);
      if (bound) {
        const QH qh = q_and_entropy(alg, out.init, at, d);
        p.q_plus_h = qh.q + qh.h;
      }
      p.fitted_mu1 = fitted;
      p.first_iter_mu1 = first;
      out.points.push_back(p);
    }
  };

  trace_curve(Algorithm::US, std::nullopt, out.data);
  trace_curve(Algorithm::S, std::nullopt, out.data);
  for (Algorithm alg : {Algorithm::CA, Algorithm::WCA, Algorithm::DCA}) {
    for (double ne : s.ne_set) {
      trace_curve(alg, ne, with_labels(out.data, ne, 2, derive_seed({s.seed, ne_bits(ne)})));
    }
  }
  return out;
}

void write_landscape_csv(std::ostream& os, const std::vector<LandscapePoint>& pts) {
  CsvWriter w(os);
  w.row({"algorithm", "ne", "mu1", "logL", "q_plus_h", "fitted_mu1", "first_iter_mu1"});
  for (const auto& p : pts) {
    w.row({p.algorithm, format_optional(p.ne), format_number(p.mu1), format_number(p.loglik),
           format_optional(p.q_plus_h), format_number(p.fitted_mu1), format_number(p.first_iter_mu1)});
  }
}

MixtureSpec mip_spec(double pi1, double mu1, double mu2, double s1, double s2) {
  return MixtureSpec{{pi1, 1.0 - pi1}, {UnivariateNormal{mu1, s1}, UnivariateNormal{mu2, s2}}};
}

std::vector<bool> mip_mask(const MixtureSpec& m) {
  std::vector<bool> free(static_cast<std::size_t>(num_params(m)), false);
  free[0] = true;
  free[static_cast<std::size_t>(component_offset(m, 0))] = true;
  free[static_cast<std::size_t>(component_offset(m, 1))] = true;
  return free;
}

LabeledDataset mip_data(const MipSetup& s, Rng& rng) {
  const int n1 = static_cast<int>(std::lround(s.pi1 * s.n));
  const std::vector<int> counts{n1, s.n - n1};
  return sample_stratified(mip_spec(s.pi1, s.mu1, s.mu2, s.s1, s.s2), counts, rng);
}

MipResult mip_experiment(const MipSetup& s) {
  if (s.reps < 1 || s.n < 2) throw std::invalid_argument("mip experiment needs reps >= 1 and n >= 2");
  const std::vector<double> grid = s.ne_grid.empty() ? default_ne_grid() : s.ne_grid;
  const MixtureSpec init = mip_spec(s.init_pi1, s.init_mu1, s.init_mu2, s.s1, s.s2);
  FitConfig fc;
  fc.free = mip_mask(init);
  fc.keep_trace = false;
  InfoOptions io;
  io.free = fc.free;

  struct Acc {
    std::vector<double> pi, m1, m2, sum, rp;
    int nonregular = 0;
  };
  // key: algorithm + grid index (US and S use index -1)
  std::map<std::pair<std::string, int>, Acc> acc;
  MipResult res;

  auto run = [&](Algorithm alg, int gi, const LabeledDataset& d, bool keep_matrices) {
    Acc& a = acc[{std::string(algorithm_name(alg)), gi}];
    try {
      const FitResult fr = fit(alg, d, init, fc);
      const InfoMatrices info = information(alg, fr.estimate, d, io);
      if (keep_matrices) {
        std::string key(algorithm_name(alg));
        if (gi >= 0) key += "@" + format_number(grid[static_cast<std::size_t>(gi)]);
        res.matrices.emplace_back(key, info);
      }
      if (!fr.converged || !info.regular || !(info.spectral_radius < 1.0)) {
        ++a.nonregular;
        return;
      }
      double se_pi, se_m1, se_m2;
      if (alg == Algorithm::CA) {
        const double w = fr.estimate.weights[0];
        se_pi = std::sqrt(w * (1.0 - w) / d.size());
        se_m1 = info.se(0);
        se_m2 = info.se(1);
      } else {
        se_pi = info.se(0);
        se_m1 = info.se(1);
        se_m2 = info.se(2);
      }
      a.pi.push_back(se_pi);
      a.m1.push_back(se_m1);
      a.m2.push_back(se_m2);
      a.sum.push_back(se_pi + se_m1 + se_m2);
      a.rp.push_back(info.r_prime);
    } catch (const std::exception&) {
      ++a.nonregular;
    }
  };

  for (int r = 0; r < s.reps; ++r) {
    Rng rng(derive_seed({s.seed, static_cast<std::uint64_t>(r)}));
    const LabeledDataset data = mip_data(s, rng);
    run(Algorithm::US, -1, data, r == 0);
    run(Algorithm::S, -1, data, r == 0);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const LabeledDataset d =
          with_labels(data, grid[g], 2, derive_seed({s.seed, static_cast<std::uint64_t>(r), ne_bits(grid[g])}));
      run(Algorithm::CA, static_cast<int>(g), d, r == 0);
      run(Algorithm::WCA, static_cast<int>(g), d, r == 0);
    }
  }

  auto summarize = [&](const std::string& alg, int gi, double ne) {
    const Acc& a = acc[{alg, gi}];
    MipRow row;
    row.algorithm = alg;
    row.ne = ne;
    row.reps_used = static_cast<int>(a.sum.size());
    row.nonregular = a.nonregular;
    if (!a.sum.empty()) {
      row.se_pi1 = mean(a.pi);
      row.se_mu1 = mean(a.m1);
      row.se_mu2 = mean(a.m2);
      row.se_sum = mean(a.sum);
      row.r_prime = mean(a.rp);
      row.r_prime_std = stddev(a.rp);
    }
    return row;
  };
  for (std::size_t g = 0; g < grid.size(); ++g) {
    res.rows.push_back(summarize("US", -1, grid[g]));
    res.rows.push_back(summarize("S", -1, grid[g]));
    res.rows.push_back(summarize("CA", static_cast<int>(g), grid[g]));
    res.rows.push_back(summarize("WCA", static_cast<int>(g), grid[g]));
  }
  return res;
}

void write_mip_csv(std::ostream& os, const std::vector<MipRow>& rows) {
  CsvWriter w(os);
  w.row({"algorithm", "ne", "reps_used", "nonregular", "se_pi1", "se_mu1", "se_mu2", "se_sum", "r_prime",
         "r_prime_std"});
  for (const auto& r : rows) {
    w.row({r.algorithm, format_number(r.ne), std::to_string(r.reps_used), std::to_string(r.nonregular),
           format_optional(r.se_pi1), format_optional(r.se_mu1), format_optional(r.se_mu2),
           format_optional(r.se_sum), format_optional(r.r_prime), format_optional(r.r_prime_std)});
  }
}

}  // namespace ctxem
