#include "ctxem/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ctxem {

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (std::isfinite(m(r, c)))
        row.push_back(m(r, c));
      else
        row.push_back(nullptr);
    }
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json opt_json(const std::optional<double>& v) {
  if (v && std::isfinite(*v)) return *v;
  return nullptr;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  return f;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) os_ << ',';
    const auto& c = cells[k];
    if (c.find_first_of(",\"\n") == std::string::npos) {
      os_ << c;
    } else {
      os_ << '"';
      for (char ch : c) {
        if (ch == '"') os_ << '"';
        os_ << ch;
      }
      os_ << '"';
    }
  }
  os_ << '\n';
}

void write_rows_csv(std::ostream& os, const std::vector<MetricRow>& rows) {
  CsvWriter w(os);
  w.row({"scenario", "problem_id", "algorithm", "ne", "converged", "iterations", "D", "ASE", "r_prime", "acc", "ba",
         "mse", "bias_b", "seed"});
  for (const auto& r : rows) {
    w.row({r.scenario, std::to_string(r.problem_id), r.algorithm, format_optional(r.ne), r.converged ? "1" : "0",
           std::to_string(r.iterations), format_optional(r.d), format_optional(r.ase), format_optional(r.r_prime),
           format_optional(r.acc), format_optional(r.ba), format_optional(r.mse), format_optional(r.bias_b),
           std::to_string(r.seed)});
  }
}

void write_aggregates_csv(std::ostream& os, const std::vector<AggregateRow>& agg) {
  CsvWriter w(os);
  w.row({"algorithm", "ne", "rows", "failed", "not_converged", "ridge", "nonregular", "D_mean", "D_std", "ASE_mean",
         "ASE_std", "r_prime_mean", "r_prime_std", "acc_mean", "acc_std", "ba_mean", "ba_std", "mse_mean", "mse_std",
         "bias_b_mean", "bias_b_std"});
  for (const auto& a : agg) {
    w.row({a.algorithm, format_optional(a.ne), std::to_string(a.rows), std::to_string(a.failed),
           std::to_string(a.not_converged), std::to_string(a.ridge), std::to_string(a.nonregular),
           format_optional(a.d_mean), format_optional(a.d_std), format_optional(a.ase_mean),
           format_optional(a.ase_std), format_optional(a.r_prime_mean), format_optional(a.r_prime_std),
           format_optional(a.acc_mean), format_optional(a.acc_std), format_optional(a.ba_mean),
           format_optional(a.ba_std), format_optional(a.mse_mean), format_optional(a.mse_std),
           format_optional(a.bias_b_mean), format_optional(a.bias_b_std)});
  }
}

void write_significance_csv(std::ostream& os, const std::vector<SignificanceRow>& sig) {
  CsvWriter w(os);
  w.row({"metric", "alg_a", "ne_a", "alg_b", "ne_b", "n_a", "n_b", "p_value", "significant"});
  for (const auto& s : sig) {
    w.row({s.metric, s.alg_a, format_optional(s.ne_a), s.alg_b, format_optional(s.ne_b), std::to_string(s.n_a),
           std::to_string(s.n_b), format_number(s.p_value), s.significant ? "1" : "0"});
  }
}

nlohmann::json report_to_json(const ScenarioReport& rep) {
  nlohmann::json j;
  auto rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"scenario", r.scenario}, {"problem_id", r.problem_id}, {"algorithm", r.algorithm},
                    {"ne", opt_json(r.ne)}, {"converged", r.converged}, {"iterations", r.iterations},
                    {"D", opt_json(r.d)}, {"ASE", opt_json(r.ase)}, {"r_prime", opt_json(r.r_prime)},
                    {"acc", opt_json(r.acc)}, {"ba", opt_json(r.ba)}, {"mse", opt_json(r.mse)},
                    {"bias_b", opt_json(r.bias_b)}, {"seed", r.seed}});
  }
  j["rows"] = rows;
  auto agg = nlohmann::json::array();
  for (const auto& a : rep.aggregates) {
    agg.push_back({{"algorithm", a.algorithm}, {"ne", opt_json(a.ne)}, {"rows", a.rows}, {"failed", a.failed},
                   {"not_converged", a.not_converged}, {"ridge", a.ridge}, {"nonregular", a.nonregular},
                   {"D_mean", opt_json(a.d_mean)}, {"D_std", opt_json(a.d_std)},
                   {"ASE_mean", opt_json(a.ase_mean)}, {"ASE_std", opt_json(a.ase_std)},
                   {"r_prime_mean", opt_json(a.r_prime_mean)}, {"r_prime_std", opt_json(a.r_prime_std)},
                   {"acc_mean", opt_json(a.acc_mean)}, {"acc_std", opt_json(a.acc_std)},
                   {"ba_mean", opt_json(a.ba_mean)}, {"ba_std", opt_json(a.ba_std)},
                   {"mse_mean", opt_json(a.mse_mean)}, {"mse_std", opt_json(a.mse_std)},
                   {"bias_b_mean", opt_json(a.bias_b_mean)}, {"bias_b_std", opt_json(a.bias_b_std)}});
  }
  j["aggregates"] = agg;
  auto sig = nlohmann::json::array();
  for (const auto& s : rep.significance) {
    sig.push_back({{"metric", s.metric}, {"alg_a", s.alg_a}, {"ne_a", opt_json(s.ne_a)}, {"alg_b", s.alg_b},
                   {"ne_b", opt_json(s.ne_b)}, {"n_a", s.n_a}, {"n_b", s.n_b}, {"p_value", s.p_value},
                   {"significant", s.significant}});
  }
  j["significance"] = sig;
  return j;
}

nlohmann::json info_to_json(const InfoMatrices& info) {
  nlohmann::json j;
  j["param_index"] = info.param_index;
  j["reduced"] = info.reduced;
  j["regular"] = info.regular;
  j["i_c"] = matrix_json(info.i_c);
  j["i_m"] = matrix_json(info.i_m);
  j["i_obs"] = matrix_json(info.i_obs);
  j["rate"] = matrix_json(info.rate);
  j["spectral_radius"] = opt_json(info.spectral_radius);
  j["r_prime"] = opt_json(info.r_prime);
  auto se = nlohmann::json::array();
  for (Eigen::Index k = 0; k < info.se.size(); ++k) se.push_back(opt_json(info.se(k)));
  j["se"] = se;
  return j;
}

std::string sibling_path(const std::string& path, const std::string& tag) {
  const std::string ext = ".csv";
  if (path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0)
    return path.substr(0, path.size() - ext.size()) + "." + tag + ext;
  return path + "." + tag + ext;
}

void write_scenario_report(const ScenarioReport& rep, const std::string& path, OutputFormat fmt) {
  if (fmt == OutputFormat::Json) {
    auto f = open_out(path);
    f << report_to_json(rep).dump(1) << '\n';
    return;
  }
  {
    auto f = open_out(path);
    write_rows_csv(f, rep.rows);
  }
  {
    auto f = open_out(sibling_path(path, "agg"));
    write_aggregates_csv(f, rep.aggregates);
  }
  auto f = open_out(sibling_path(path, "sig"));
  write_significance_csv(f, rep.significance);
}

}  // namespace ctxem
