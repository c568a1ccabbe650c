#include "ctxem/experiments.hpp"
#include "ctxem/harness.hpp"
#include "ctxem/report_io.hpp"
#include "ctxem/speller.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::vector<double> parse_csv_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("not a number: " + item);
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> parse_csv_strings(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  return f;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context-aware EM for finite mixture models"};
  app.require_subcommand(1);

  // scenario
  auto* sc = app.add_subcommand("scenario", "Monte Carlo comparison over generated problems");
  std::string sc_id = "b", sc_grid, sc_out, sc_format = "csv";
  int sc_problems = 1000;
  double sc_wrong = 0.5, sc_pi1 = 0.2;
  std::uint64_t sc_seed = 1;
  sc->add_option("--id", sc_id, "a|b|c|d|e|f|mixed|wrong|biased")->required();
  sc->add_option("--problems", sc_problems, "number of problems");
  sc->add_option("--ne-grid", sc_grid, "comma-separated NE levels");
  sc->add_option("--wrong-frac", sc_wrong, "fraction of wrong labels (wrong)");
  sc->add_option("--pi1", sc_pi1, "actual first mixing weight (biased)");
  sc->add_option("--seed", sc_seed, "master seed");
  sc->add_option("--out", sc_out, "output path")->required();
  sc->add_option("--format", sc_format, "csv|json")->check(CLI::IsMember({"csv", "json"}));

  // landscape
  auto* ls = app.add_subcommand("landscape", "Log-likelihood and lower-bound curves for one free mean");
  ctxem::LandscapeSetup lsetup;
  std::string ls_out, ls_ne;
  ls->add_option("--out", ls_out, "output CSV")->required();
  ls->add_option("--pi1", lsetup.pi1);
  ls->add_option("--mu1", lsetup.mu1, "true mean of component 1");
  ls->add_option("--mu2", lsetup.mu2);
  ls->add_option("--s1", lsetup.s1);
  ls->add_option("--s2", lsetup.s2);
  ls->add_option("--n", lsetup.n);
  ls->add_option("--init-mu1", lsetup.init_mu1);
  ls->add_option("--grid-lo", lsetup.grid_lo);
  ls->add_option("--grid-hi", lsetup.grid_hi);
  ls->add_option("--grid-points", lsetup.grid_points);
  ls->add_option("--ne", ls_ne, "comma-separated NE levels");
  ls->add_option("--seed", lsetup.seed);

  // mip
  auto* mp = app.add_subcommand("mip", "Standard errors and convergence rates over NE");
  ctxem::MipSetup msetup;
  std::string mp_out, mp_grid;
  mp->add_option("--reps", msetup.reps);
  mp->add_option("--n", msetup.n, "samples per repetition");
  mp->add_option("--seed", msetup.seed);
  mp->add_option("--ne-grid", mp_grid);
  mp->add_option("--out", mp_out, "output CSV")->required();

  // speller
  auto* sp = app.add_subcommand("speller", "Closed-loop speller simulation");
  ctxem::SpellerRun srun;
  std::string sp_words = "nothing,portion", sp_algs = "S,CA,CAE", sp_out;
  sp->add_option("--words", sp_words);
  sp->add_option("--algorithms", sp_algs);
  sp->add_option("--drift", srun.drift, "none|default|separable");
  sp->add_option("--subjects", srun.subjects);
  sp->add_option("--seed", srun.seed);
  sp->add_option("--out", sp_out, "output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sc) {
      ctxem::ScenarioSpec spec;
      spec.id = ctxem::parse_scenario(sc_id);
      spec.problems = sc_problems;
      if (!sc_grid.empty()) spec.ne_grid = parse_csv_doubles(sc_grid);
      spec.wrong_frac = sc_wrong;
      spec.pi1 = sc_pi1;
      spec.master_seed = sc_seed;
      const auto rep = ctxem::run_scenario(spec);
      ctxem::write_scenario_report(rep, sc_out,
                                   sc_format == "json" ? ctxem::OutputFormat::Json : ctxem::OutputFormat::Csv);
    } else if (*ls) {
      if (!ls_ne.empty()) lsetup.ne_set = parse_csv_doubles(ls_ne);
      const auto res = ctxem::landscape(lsetup);
      auto f = open_out(ls_out);
      ctxem::write_landscape_csv(f, res.points);
    } else if (*mp) {
      if (!mp_grid.empty()) msetup.ne_grid = parse_csv_doubles(mp_grid);
      const auto res = ctxem::mip_experiment(msetup);
      {
        auto f = open_out(mp_out);
        ctxem::write_mip_csv(f, res.rows);
      }
      nlohmann::json j = nlohmann::json::object();
      for (const auto& [key, info] : res.matrices) j[key] = ctxem::info_to_json(info);
      auto f = open_out(std::filesystem::path(mp_out).replace_extension(".matrices.json").string());
      f << j.dump(1) << '\n';
    } else if (*sp) {
      srun.words = parse_csv_strings(sp_words);
      srun.algorithms.clear();
      for (const auto& a : parse_csv_strings(sp_algs)) srun.algorithms.push_back(ctxem::parse_speller_algorithm(a));
      const auto res = ctxem::run_speller(srun);
      auto f = open_out(sp_out);
      ctxem::write_speller_csv(f, res.rows);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
