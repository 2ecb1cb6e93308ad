#pragma once

#include <json.hpp>

#include "rpetel/experiment.hpp"

namespace rpetel {

// JSON run configuration for the `sample` command.  Sections: manifold, loss,
// posterior, sampler, chain, data.

struct SampleRunConfig {
  LogTarget target;
  SamplerConfig sampler;
  int K = 1500;
  int burnin = 300;
  Vector init;  // empty means start from a perturbed ERM
  PrecondMethod precond = PrecondMethod::Identity;
  int pilot_K = 500;
  int pilot_burnin = 100;
};

namespace detail {

using nlohmann::json;

inline ManifoldSpec parse_manifold(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "sphere") return ManifoldSpec::sphere(j.at("dim").get<int>());
  if (kind == "special-orthogonal")
    return ManifoldSpec::special_orthogonal(j.at("p").get<int>());
  if (kind == "symmetric") return ManifoldSpec::symmetric(j.at("p").get<int>());
  if (kind == "grassmann")
    return ManifoldSpec::grassmann(j.at("p").get<int>(), j.at("r").get<int>());
  if (kind == "fixed-rank")
    return ManifoldSpec::fixed_rank(j.at("p").get<int>(), j.at("k").get<int>(),
                                    j.at("r").get<int>());
  if (kind == "ambient") return ManifoldSpec::ambient(j.at("dim").get<int>());
  if (kind == "solution") {
    std::string cname = j.at("constraint").get<std::string>();
    int dim_param = j.at("dim").get<int>();
    return ManifoldSpec::solution(make_constraint(cname, dim_param));
  }
  throw std::invalid_argument("config: unknown manifold kind " + kind);
}

inline LossModel parse_loss(const json& j, ManifoldSpec m) {
  LossModel L;
  L.manifold = std::move(m);
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "extrinsic-mean") L.kind = LossKind::ExtrinsicMean;
  else if (kind == "frechet-sphere") L.kind = LossKind::FrechetSphere;
  else if (kind == "frechet-so2") L.kind = LossKind::FrechetSo2;
  else if (kind == "bw-barycenter") L.kind = LossKind::BwBarycenter;
  else if (kind == "spectral-projector") L.kind = LossKind::SpectralProjector;
  else if (kind == "multi-quantile") {
    L.kind = LossKind::MultiQuantile;
    L.tau = j.at("levels").get<std::vector<double>>();
    L.covariate_dim = j.at("covariate_dim").get<int>();
  } else {
    throw std::invalid_argument("config: unknown loss kind " + kind);
  }
  L.validate();
  return L;
}

inline std::vector<Observation> parse_data(const json& j, int payload_dim) {
  if (j.contains("scenario")) {
    return generate_observations(j.at("scenario").get<std::string>(),
                                 j.at("n").get<int>(),
                                 j.value("seed", std::uint64_t{1}));
  }
  if (j.contains("file")) {
    std::ifstream in(j.at("file").get<std::string>());
    if (!in) throw std::runtime_error("config: cannot open data file");
    std::vector<Observation> out;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      std::vector<double> row;
      while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
      Vector v(row.size());
      for (std::size_t i = 0; i < row.size(); ++i) v(i) = row[i];
      out.push_back({v});
    }
    (void)payload_dim;
    return out;
  }
  throw std::invalid_argument("config: data section needs `scenario` or `file`");
}

inline void parse_prior(const json& j, LogTarget& t) {
  std::string kind = j.value("kind", std::string("uniform"));
  if (kind == "uniform") return;  // flat log-density 0
  if (kind == "gaussian") {
    double sd = j.at("sd").get<double>();
    Vector mean;
    if (j.contains("mean")) {
      auto mv = j.at("mean").get<std::vector<double>>();
      mean = Eigen::Map<const Vector>(mv.data(), mv.size());
    }
    t.log_prior = [sd, mean](const Vector& th) {
      Vector c = mean.size() == th.size() ? (th - mean).eval() : th;
      return -0.5 * c.squaredNorm() / (sd * sd);
    };
    t.log_prior_grad = [sd, mean](const Vector& th) {
      Vector c = mean.size() == th.size() ? (th - mean).eval() : th;
      return (-c / (sd * sd)).eval();
    };
    return;
  }
  throw std::invalid_argument("config: unknown prior kind " + kind);
}

}  // namespace detail

inline SampleRunConfig load_sample_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  nlohmann::json j = nlohmann::json::parse(in);

  SampleRunConfig cfg;
  ManifoldSpec m = detail::parse_manifold(j.at("manifold"));
  LossModel loss = detail::parse_loss(j.at("loss"), m);
  std::vector<Observation> data = detail::parse_data(j.at("data"), m.ambient_dim());

  const auto& post = j.at("posterior");
  std::string pkind = post.value("kind", std::string("rpetel"));
  if (pkind == "rpetel") {
    double mult = post.value("alpha_rule", 2.0);  // alpha_n = mult * log n
    cfg.target = make_rpetel_target(loss, std::move(data), mult);
    if (post.contains("alpha_n")) cfg.target.alpha_n = post.at("alpha_n").get<double>();
  } else if (pkind == "gibbs") {
    cfg.target = make_gibbs_target(loss, std::move(data), post.at("beta").get<double>());
  } else {
    throw std::invalid_argument("config: unknown posterior kind " + pkind);
  }
  if (post.contains("prior")) detail::parse_prior(post.at("prior"), cfg.target);

  if (j.contains("sampler")) {
    const auto& s = j.at("sampler");
    std::string alg = s.value("algorithm", std::string("rrwm"));
    if (alg == "rrwm") cfg.sampler.algorithm = Algorithm::Rrwm;
    else if (alg == "rmala") cfg.sampler.algorithm = Algorithm::Rmala;
    else if (alg == "ambient-rwm") cfg.sampler.algorithm = Algorithm::AmbientRwm;
    else throw std::invalid_argument("config: unknown algorithm " + alg);
    cfg.sampler.h_tilde = s.value("h", 0.0);
    cfg.sampler.zeta = s.value("zeta", 0.0);
    cfg.sampler.trust_radius = s.value("trust_radius", 0.5);
    std::string pc = s.value("precond", std::string("identity"));
    if (pc == "identity") cfg.precond = PrecondMethod::Identity;
    else if (pc == "pilot-covariance") cfg.precond = PrecondMethod::PilotCovariance;
    else if (pc == "plugin-sandwich") cfg.precond = PrecondMethod::PluginSandwich;
    else throw std::invalid_argument("config: unknown precond " + pc);
  }
  if (cfg.sampler.h_tilde <= 0.0)
    cfg.sampler.h_tilde = default_step(m.intrinsic_dim(), cfg.target.n());

  if (j.contains("chain")) {
    cfg.K = j.at("chain").value("K", 1500);
    cfg.burnin = j.at("chain").value("burnin", 300);
    if (j.at("chain").contains("init")) {
      auto iv = j.at("chain").at("init").get<std::vector<double>>();
      cfg.init = Eigen::Map<const Vector>(iv.data(), iv.size());
    }
  }
  return cfg;
}

// Run the configured chain: initializes at a perturbed ERM when no explicit
// start is given, estimates the preconditioner, and samples.
inline Chain run_sample_config(SampleRunConfig cfg, std::uint64_t seed) {
  const ManifoldSpec& m = cfg.target.loss.manifold;
  Vector init = cfg.init;
  if (init.size() == 0) {
    Vector erm = erm_oracle(cfg.target.loss, cfg.target.data, derive_seed(seed, 2));
    Rng rng(derive_seed(seed, 3));
    TangentBasis basis = tangent_basis(m, erm);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector z(m.intrinsic_dim());
    for (int i = 0; i < z.size(); ++i) z(i) = gauss(rng);
    init = retract(m, erm, (0.01 * (basis.frame * z)).eval());
  }
  if (cfg.precond == PrecondMethod::PilotCovariance) {
    Chain pilot = run_chain(init, cfg.target, cfg.sampler,
                            cfg.pilot_burnin + cfg.pilot_K, cfg.pilot_burnin,
                            derive_seed(seed, 4));
    cfg.sampler.precond = estimate_preconditioner(PrecondMethod::PilotCovariance,
                                                  cfg.target, init, &pilot);
  } else if (cfg.precond == PrecondMethod::PluginSandwich) {
    cfg.sampler.precond =
        estimate_preconditioner(PrecondMethod::PluginSandwich, cfg.target, init);
  }
  return run_chain(init, cfg.target, cfg.sampler, cfg.burnin + cfg.K, cfg.burnin,
                   derive_seed(seed, 5));
}

}  // namespace rpetel
