#include "ctxem/mixture_json.hpp"

#include "ctxem/errors.hpp"

namespace ctxem {

namespace {

nlohmann::json component_to_json(const ComponentParams& c) {
  nlohmann::json j;
  if (auto* p = std::get_if<UnivariateNormal>(&c)) {
    j = {{"mu", p->mu}, {"sigma", p->sigma}};
  } else if (auto* p = std::get_if<MultivariateNormal>(&c)) {
    j["mu"] = std::vector<double>(p->mu.data(), p->mu.data() + p->mu.size());
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < p->cov.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(p->cov.cols()));
      for (Eigen::Index k = 0; k < p->cov.cols(); ++k) row[static_cast<std::size_t>(k)] = p->cov(r, k);
      rows.push_back(row);
    }
    j["cov"] = rows;
  } else if (auto* p = std::get_if<MaxwellBoltzmann>(&c)) {
    j = {{"a", p->a}};
  } else {
    const auto& r = std::get<LinearRegressor>(c);
    j = {{"beta0", r.beta0}, {"beta1", r.beta1}, {"eps", r.eps}};
  }
  return j;
}

ComponentParams component_from_json(Family f, const nlohmann::json& j) {
  switch (f) {
    case Family::UnivariateNormal: return UnivariateNormal{j.at("mu").get<double>(), j.at("sigma").get<double>()};
    case Family::MaxwellBoltzmann: return MaxwellBoltzmann{j.at("a").get<double>()};
    case Family::LinearRegressor:
      return LinearRegressor{j.at("beta0").get<double>(), j.at("beta1").get<double>(), j.at("eps").get<double>()};
    case Family::MultivariateNormal: {
      const auto mu = j.at("mu").get<std::vector<double>>();
      const auto cov = j.at("cov").get<std::vector<std::vector<double>>>();
      const auto d = static_cast<Eigen::Index>(mu.size());
      MultivariateNormal out{Eigen::Map<const Eigen::VectorXd>(mu.data(), d), Eigen::MatrixXd(d, d)};
      if (static_cast<Eigen::Index>(cov.size()) != d) throw std::invalid_argument("cov/mu dimension mismatch");
      for (Eigen::Index r = 0; r < d; ++r) {
        if (static_cast<Eigen::Index>(cov[static_cast<std::size_t>(r)].size()) != d)
          throw std::invalid_argument("cov must be square");
        for (Eigen::Index k = 0; k < d; ++k) out.cov(r, k) = cov[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
      }
      return out;
    }
  }
  throw UnsupportedFamily("unknown family");
}

}  // namespace

nlohmann::json mixture_to_json(const MixtureSpec& m) {
  nlohmann::json j;
  j["family"] = std::string(family_name(m.family()));
  j["weights"] = m.weights;
  auto comps = nlohmann::json::array();
  for (const auto& c : m.components) comps.push_back(component_to_json(c));
  j["components"] = comps;
  return j;
}

MixtureSpec mixture_from_json(const nlohmann::json& j) {
  const Family f = parse_family(j.at("family").get<std::string>());
  MixtureSpec m;
  m.weights = j.at("weights").get<std::vector<double>>();
  for (const auto& c : j.at("components")) m.components.push_back(component_from_json(f, c));
  validate(m);
  return m;
}

}  // namespace ctxem
