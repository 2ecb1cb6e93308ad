#pragma once

#include <cstring>
#include <numbers>

#include "rpetel/etel.hpp"
#include "rpetel/rng.hpp"

namespace rpetel {

// Synthetic data generators mirroring the simulation scenarios, plus an
// empirical-risk-minimization oracle used for ground truth.

struct ScenarioDataset {
  std::string name;
  LossModel loss;
  std::vector<Observation> observations;
  Vector truth;  // population risk minimizer (closed form or large-n ERM)
  std::uint64_t seed = 0;
};

namespace detail {

inline Matrix rotation2(double a) {
  Matrix r(2, 2);
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r;
}

inline Vector mvn_draw(const Vector& mu, const Matrix& chol_l, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector z(mu.size());
  for (int i = 0; i < z.size(); ++i) z(i) = gauss(rng);
  return mu + chol_l * z;
}

// Covariance of the pre-projection Gaussian for the sphere scenarios.  The
// source lists an asymmetric matrix; its symmetric part is used.
inline Matrix sphere_sigma() {
  Matrix s(3, 3);
  s << 1.0, 0.45, 0.55, 0.45, 2.0, 0.85, 0.55, 0.85, 3.0;
  return s;
}

inline Matrix spectral_sigma0() {
  Matrix s(3, 3);
  s << 1.0, 0.15, 0.1, 0.15, 1.2, 0.1, 0.1, 0.1, 0.3;
  return s;
}

inline double normal_quantile(double tau) {
  // Acklam-style inverse via Newton on the error function is overkill here;
  // the scenarios only need a few fixed levels.
  if (tau == 0.5) return 0.0;
  if (tau == 0.2) return -0.8416212335729143;
  if (tau == 0.25) return -0.6744897501960817;
  if (tau == 0.75) return 0.6744897501960817;
  throw std::invalid_argument("normal_quantile: unsupported level");
}

}  // namespace detail

inline bool scenario_known(const std::string& name) {
  static const char* names[] = {"sphere-extrinsic", "sphere-frechet",
                                "so2-extrinsic",    "so2-frechet",
                                "bw-barycenter",    "spectral-projector",
                                "quantile",         "synthetic-parking"};
  for (const char* n : names)
    if (name == n) return true;
  return false;
}

inline LossModel scenario_loss(const std::string& name, bool ambient_baseline = false) {
  LossModel L;
  if (name == "sphere-extrinsic") {
    L.kind = LossKind::ExtrinsicMean;
    L.manifold = ManifoldSpec::sphere(3);
  } else if (name == "sphere-frechet") {
    L.kind = LossKind::FrechetSphere;
    L.manifold = ManifoldSpec::sphere(3);
  } else if (name == "so2-extrinsic") {
    L.kind = LossKind::ExtrinsicMean;
    L.manifold = ManifoldSpec::special_orthogonal(2);
  } else if (name == "so2-frechet") {
    L.kind = LossKind::FrechetSo2;
    L.manifold = ManifoldSpec::special_orthogonal(2);
  } else if (name == "bw-barycenter") {
    L.kind = LossKind::BwBarycenter;
    L.manifold = ManifoldSpec::symmetric(2);
  } else if (name == "spectral-projector") {
    L.kind = LossKind::SpectralProjector;
    L.manifold = ManifoldSpec::grassmann(3, 2);
  } else if (name == "quantile") {
    L.kind = LossKind::MultiQuantile;
    L.tau = {0.2, 0.5};
    L.covariate_dim = 3;
    L.manifold = ambient_baseline ? ManifoldSpec::ambient(6)
                                  : ManifoldSpec::fixed_rank(3, 2, 1);
  } else if (name == "synthetic-parking") {
    L.kind = LossKind::MultiQuantile;
    L.tau = {0.25, 0.5, 0.75};
    L.covariate_dim = 3;
    L.manifold = ambient_baseline ? ManifoldSpec::ambient(9)
                                  : ManifoldSpec::fixed_rank(3, 3, 2);
  } else {
    throw std::invalid_argument("unknown scenario: " + name);
  }
  L.validate();
  return L;
}

inline std::vector<Observation> generate_observations(const std::string& name, int n,
                                                      std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Observation> out;
  out.reserve(n);

  if (name == "sphere-extrinsic" || name == "sphere-frechet") {
    Vector mu(3);
    mu << 1.0, 2.0, 3.0;
    Matrix chol = Eigen::LLT<Matrix>(detail::sphere_sigma()).matrixL();
    ManifoldSpec m = ManifoldSpec::sphere(3);
    for (int i = 0; i < n; ++i)
      out.push_back({project_to_manifold(m, detail::mvn_draw(mu, chol, rng))});
  } else if (name == "so2-extrinsic" || name == "so2-frechet") {
    const double quarter_pi = std::numbers::pi / 4.0;
    for (int i = 0; i < n; ++i) {
      double a = quarter_pi + 0.5 * gauss(rng);
      out.push_back({vec(detail::rotation2(a))});
    }
  } else if (name == "bw-barycenter") {
    for (int i = 0; i < n; ++i) {
      double a = 0.3 * gauss(rng);
      double e = 0.3 * gauss(rng);
      Matrix r = detail::rotation2(a);
      Matrix d = Matrix::Zero(2, 2);
      d(0, 0) = std::abs(1.0 + e);
      d(1, 1) = std::abs(2.0 + e);
      out.push_back({vec((r * d * r.transpose()).eval())});
    }
  } else if (name == "spectral-projector") {
    Matrix chol = Eigen::LLT<Matrix>(detail::spectral_sigma0()).matrixL();
    for (int i = 0; i < n; ++i) {
      if (unif(rng) < 0.5) {
        out.push_back({detail::mvn_draw(Vector::Zero(3), chol, rng)});
      } else {
        Vector u(3);
        for (int j = 0; j < 3; ++j) u(j) = 2.0 * unif(rng) - 1.0;
        out.push_back({u});
      }
    }
  } else if (name == "quantile") {
    Vector beta(3);
    beta << 1.0, 2.0, 3.0;
    for (int i = 0; i < n; ++i) {
      Vector x(4);
      for (int j = 0; j < 3; ++j) x(j) = unif(rng);
      x(3) = x.head(3).dot(beta) * (1.0 + gauss(rng));
      out.push_back({x});
    }
  } else if (name == "synthetic-parking") {
    // synthetic stand-in for the occupancy-rate regression: quadratic basis
    // of a scalar time covariate, location-scale noise so the truth has rank 2
    Vector beta(3), gamma(3);
    beta << 1.0, 2.0, 3.0;
    gamma << 1.0, 0.5, 0.25;
    for (int i = 0; i < n; ++i) {
      double tvar = unif(rng);
      Vector x(4);
      x(0) = 1.0;
      x(1) = tvar;
      x(2) = tvar * tvar;
      x(3) = x.head(3).dot(beta) + x.head(3).dot(gamma) * gauss(rng);
      out.push_back({x});
    }
  } else {
    throw std::invalid_argument("unknown scenario: " + name);
  }
  return out;
}

// Riemannian gradient descent with Armijo backtracking on the empirical risk.
inline Vector riemannian_descent(const LossModel& L, const std::vector<Observation>& data,
                                 const Vector& init, double grad_tol, int max_iter,
                                 double* grad_norm_out = nullptr) {
  const ManifoldSpec& m = L.manifold;
  Vector theta = init;
  double risk = empirical_risk(L, data, theta);
  double step = 1.0;
  double gnorm = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    Vector g = empirical_risk_rgrad(L, data, theta);
    gnorm = g.norm();
    if (gnorm <= grad_tol) break;
    double alpha = std::min(step * 2.0, 1.0);
    bool moved = false;
    for (int bt = 0; bt < 50; ++bt) {
      try {
        Vector cand = retract(m, theta, -alpha * g);
        double r = empirical_risk(L, data, cand);
        if (r <= risk - 1e-4 * alpha * gnorm * gnorm) {
          theta = cand;
          risk = r;
          step = alpha;
          moved = true;
          break;
        }
      } catch (const std::exception&) {
      }
      alpha *= 0.5;
    }
    if (!moved) break;
  }
  if (grad_norm_out) *grad_norm_out = gnorm;
  return theta;
}

struct ErmError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Multi-start ERM.  Quantile losses run smoothed continuation and are then
// checked against the exact subgradient residual.
inline Vector erm_oracle(const LossModel& L, const std::vector<Observation>& data,
                         std::uint64_t seed = 7u, int restarts = 8) {
  const ManifoldSpec& m = L.manifold;
  const bool quantile = L.kind == LossKind::MultiQuantile;
  // check-loss subgradients are piecewise constant with jumps of order 1/n,
  // so the attainable residual floor scales with the sample size
  const double tol =
      quantile ? 1e-4 + 8.0 / static_cast<double>(std::max<std::size_t>(1, data.size()))
               : 1e-6;

  std::vector<Vector> starts;
  {  // data-driven start when the payload lives in the ambient space
    if (!data.empty() && data[0].payload.size() == m.ambient_dim()) {
      Vector mean = Vector::Zero(m.ambient_dim());
      for (const auto& x : data) mean += x.payload;
      mean /= static_cast<double>(data.size());
      try {
        starts.push_back(project_to_manifold(m, mean));
      } catch (const std::exception&) {
      }
    }
    Rng rng(derive_seed(seed, 0xe12u));
    while (static_cast<int>(starts.size()) < restarts)
      starts.push_back(random_point(m, rng));
  }

  Vector best;
  double best_risk = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (const Vector& s0 : starts) {
    Vector theta = s0;
    double gnorm = 0.0;
    if (quantile) {
      LossModel smooth = L;
      for (double delta : {0.1, 0.01, 1e-3, 1e-4}) {
        smooth.quantile_smoothing = delta;
        theta = riemannian_descent(smooth, data, theta, tol, 2000, &gnorm);
      }
      gnorm = empirical_risk_rgrad(L, data, theta).norm();  // exact subgradient
    } else {
      theta = riemannian_descent(L, data, theta, tol, 5000, &gnorm);
    }
    if (gnorm <= tol) {
      double r = empirical_risk(L, data, theta);
      if (r < best_risk) {
        best_risk = r;
        best = theta;
      }
      converged = true;
    }
  }
  if (!converged) throw ErmError("erm_oracle: no restart reached the gradient tolerance");
  return best;
}

// Population risk minimizer: closed form where exact, otherwise ERM on a
// large oracle sample.
inline Vector scenario_truth(const std::string& name, int n_oracle = 500000) {
  LossModel L = scenario_loss(name);
  const std::uint64_t oracle_seed = 0x0facade5u;
  if (name == "quantile") {
    Vector beta(3);
    beta << 1.0, 2.0, 3.0;
    Matrix b(3, 2);
    b.col(0) = (1.0 + detail::normal_quantile(0.2)) * beta;
    b.col(1) = beta;  // the median of the noise is zero
    return vec(b);
  }
  if (name == "synthetic-parking") {
    Vector beta(3), gamma(3);
    beta << 1.0, 2.0, 3.0;
    gamma << 1.0, 0.5, 0.25;
    Matrix b(3, 3);
    b.col(0) = beta + detail::normal_quantile(0.25) * gamma;
    b.col(1) = beta;
    b.col(2) = beta + detail::normal_quantile(0.75) * gamma;
    return vec(b);
  }
  std::vector<Observation> data = generate_observations(name, n_oracle, oracle_seed);
  if (L.kind == LossKind::ExtrinsicMean) {
    Vector mean = Vector::Zero(L.manifold.ambient_dim());
    for (const auto& x : data) mean += x.payload;
    return project_to_manifold(L.manifold, (mean / n_oracle).eval());
  }
  if (L.kind == LossKind::SpectralProjector) {
    Matrix second = Matrix::Zero(3, 3);
    for (const auto& x : data) second += x.payload * x.payload.transpose();
    return project_to_manifold(L.manifold, vec((second / n_oracle).eval()));
  }
  return erm_oracle(L, data, derive_seed(oracle_seed, 1));
}

inline ScenarioDataset generate_scenario(const std::string& name, int n,
                                         std::uint64_t seed,
                                         const Vector* cached_truth = nullptr) {
  ScenarioDataset ds;
  ds.name = name;
  ds.loss = scenario_loss(name);
  ds.observations = generate_observations(name, n, seed);
  ds.truth = cached_truth ? *cached_truth : scenario_truth(name);
  ds.seed = seed;
  return ds;
}

}  // namespace rpetel
