#pragma once

#include "rpetel/etel.hpp"
#include "rpetel/rng.hpp"

namespace rpetel {

enum class Algorithm { Rrwm, Rmala, AmbientRwm };

struct SamplerConfig {
  Algorithm algorithm = Algorithm::Rrwm;
  double h_tilde = 1e-3;     // step size
  double zeta = 0.0;         // lazy probability
  Matrix precond;            // D x D SPD; empty means identity
  double trust_radius = 1.0; // reject proposals with ||v|| beyond this
  PhiOptions phi_opts;

  Matrix precond_or_identity(int D) const {
    return precond.size() == 0 ? Matrix::Identity(D, D) : precond;
  }
};

// Default step size h/n with h = 1/(d + log n).
inline double default_step(int intrinsic_dim, int n) {
  return 1.0 / ((intrinsic_dim + std::log(static_cast<double>(n))) * n);
}

struct Chain {
  std::vector<Vector> states;   // post burn-in
  std::vector<char> accepted;   // per emitted state
  std::uint64_t seed = 0;
  SamplerConfig config;
  int proposal_failures = 0;    // phi or reverse-map non-convergence
  int gradient_failures = 0;    // rmala gradient errors
  double acceptance_rate = 0.0;

  Matrix states_matrix() const {
    Matrix out(states.size(), states.empty() ? 0 : states[0].size());
    for (std::size_t i = 0; i < states.size(); ++i) out.row(i) = states[i];
    return out;
  }
};

namespace detail {

// v' (P_theta Itilde P_theta)^dagger v, evaluated in the tangent frame as
// c' (V' Itilde V)^{-1} c with c = V' v.
inline double precond_quadform(const TangentBasis& basis, const Matrix& itilde,
                               const Vector& v) {
  Vector c = basis.frame.transpose() * v;
  Matrix a = basis.frame.transpose() * itilde * basis.frame;
  return c.dot(robust_solve(a, c));
}

inline Vector gaussian_vector(int D, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector z(D);
  for (int i = 0; i < D; ++i) z(i) = gauss(rng);
  return z;
}

}  // namespace detail

// Log of the raw RRWM acceptance ratio alpha(x, y) (before min with 1), using
// v = psi_x(y), v' = psi_y(x).  The Jacobian factor cancels for the
// tangent-projection parametrization.
inline double rrwm_log_ratio(const LogTarget& t, const SamplerConfig& cfg,
                             const Vector& x, double lp_x, const Vector& y,
                             double lp_y) {
  const ManifoldSpec& m = t.loss.manifold;
  Matrix itilde = cfg.precond_or_identity(static_cast<int>(x.size()));
  Vector v = psi(m, x, y);
  Vector vp = psi(m, y, x);
  double qf_x = detail::precond_quadform(tangent_basis(m, x), itilde, v);
  double qf_y = detail::precond_quadform(tangent_basis(m, y), itilde, vp);
  return lp_y - lp_x - qf_y / (4.0 * cfg.h_tilde) + qf_x / (4.0 * cfg.h_tilde);
}

// Same for RMALA with the drift-corrected kernels; gradients supplied by the
// caller so shared evaluations can be reused.
inline double rmala_log_ratio(const LogTarget& t, const SamplerConfig& cfg,
                              const Vector& x, double lp_x, const Vector& grad_x,
                              const Vector& y, double lp_y, const Vector& grad_y) {
  const ManifoldSpec& m = t.loss.manifold;
  Matrix itilde = cfg.precond_or_identity(static_cast<int>(x.size()));
  Vector v = psi(m, x, y);
  Vector vp = psi(m, y, x);
  Vector fwd = v + cfg.h_tilde * itilde * grad_x;
  Vector rev = vp + cfg.h_tilde * itilde * grad_y;
  double qf_x = detail::precond_quadform(tangent_basis(m, x), itilde, fwd);
  double qf_y = detail::precond_quadform(tangent_basis(m, y), itilde, rev);
  return lp_y - lp_x - qf_y / (4.0 * cfg.h_tilde) + qf_x / (4.0 * cfg.h_tilde);
}

struct StepResult {
  Vector state;
  double log_post;     // log_posterior at state
  Vector grad;         // potential gradient at state (rmala, when available)
  bool accepted = false;
  bool lazy = false;
  bool proposal_failed = false;
  bool gradient_failed = false;
};

// One Metropolis step.  cur_lp (and cur_grad for RMALA) may carry cached
// values for the current state; pass NaN / empty to recompute.
inline StepResult mh_step(const Vector& state, const LogTarget& t,
                          const SamplerConfig& cfg, Rng& rng,
                          double cur_lp = std::numeric_limits<double>::quiet_NaN(),
                          const Vector* cur_grad = nullptr) {
  const ManifoldSpec& m = t.loss.manifold;
  const int D = static_cast<int>(state.size());
  StepResult out;
  out.state = state;
  if (std::isnan(cur_lp)) cur_lp = log_posterior(t, state);
  out.log_post = cur_lp;

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (cfg.zeta > 0.0 && unif(rng) < cfg.zeta) {  // lazy coin drawn first
    out.lazy = true;
    return out;
  }

  Matrix itilde = cfg.precond_or_identity(D);
  Eigen::LLT<Matrix> llt(itilde);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("mh_step: preconditioner is not positive definite");

  const bool langevin = cfg.algorithm == Algorithm::Rmala;
  Vector grad_x;
  if (langevin) {
    if (cur_grad && cur_grad->size() == D) {
      grad_x = *cur_grad;
    } else {
      try {
        grad_x = potential_rgrad(t, state);
      } catch (const std::exception&) {
        out.gradient_failed = true;
        return out;
      }
    }
    out.grad = grad_x;
  }

  Vector vt = llt.matrixL() * detail::gaussian_vector(D, rng);
  vt *= std::sqrt(2.0 * cfg.h_tilde);
  if (langevin) vt -= cfg.h_tilde * itilde * grad_x;
  Vector v = project_tangent(m, state, vt);
  if (v.norm() > cfg.trust_radius) {
    out.proposal_failed = true;
    return out;
  }

  PhiResult fwd = phi(m, state, v, cfg.phi_opts);
  if (!fwd.ok) {
    out.proposal_failed = true;
    return out;
  }
  const Vector& y = fwd.point;

  // reverse-map check: the current state must be reachable from y
  Vector vp = psi(m, y, state);
  if (vp.norm() > cfg.trust_radius) {
    out.proposal_failed = true;
    return out;
  }
  PhiResult rev = phi(m, y, vp, cfg.phi_opts);
  if (!rev.ok || (rev.point - state).norm() > 1e-6 * (1.0 + state.norm())) {
    out.proposal_failed = true;
    return out;
  }

  double lp_y;
  try {
    lp_y = log_posterior(t, y);
  } catch (const LossError&) {  // proposal outside the loss domain (e.g. PSD cone)
    out.proposal_failed = true;
    return out;
  }
  if (lp_y == kNegInf) return out;

  double log_alpha;
  Vector grad_y;
  if (langevin) {
    try {
      grad_y = potential_rgrad(t, y);
    } catch (const std::exception&) {
      out.gradient_failed = true;
      return out;
    }
    log_alpha = rmala_log_ratio(t, cfg, state, cur_lp, grad_x, y, lp_y, grad_y);
  } else {
    log_alpha = rrwm_log_ratio(t, cfg, state, cur_lp, y, lp_y);
  }

  if (std::log(unif(rng)) < log_alpha) {
    out.state = y;
    out.log_post = lp_y;
    out.accepted = true;
    if (langevin) out.grad = grad_y;
  }
  return out;
}

inline Chain run_chain(const Vector& init, const LogTarget& target,
                       const SamplerConfig& cfg, int K, int burnin,
                       std::uint64_t seed) {
  if (K <= burnin || burnin < 0)
    throw std::invalid_argument("run_chain: need K > burnin >= 0");
  require_membership(target.loss.manifold, init, "run_chain init");

  LogTarget t = target;  // own the lambda warm-start cache
  t.lambda_warm.resize(0);
  Rng rng(seed);
  Chain chain;
  chain.seed = seed;
  chain.config = cfg;
  chain.states.reserve(K - burnin);
  chain.accepted.reserve(K - burnin);

  Vector state = init;
  double lp = log_posterior(t, state);
  if (lp == kNegInf)
    throw std::invalid_argument("run_chain: initial state has zero posterior density");
  int accepted_total = 0;
  Vector grad_cache;
  for (int k = 0; k < K; ++k) {
    StepResult r = mh_step(state, t, cfg, rng, lp,
                           grad_cache.size() ? &grad_cache : nullptr);
    state = r.state;
    lp = r.log_post;
    if (r.grad.size()) grad_cache = r.grad;
    chain.proposal_failures += r.proposal_failed ? 1 : 0;
    chain.gradient_failures += r.gradient_failed ? 1 : 0;
    accepted_total += r.accepted ? 1 : 0;
    if (k >= burnin) {
      chain.states.push_back(state);
      chain.accepted.push_back(r.accepted ? 1 : 0);
    }
  }
  chain.acceptance_rate = static_cast<double>(accepted_total) / K;
  return chain;
}

enum class PrecondMethod { PluginSandwich, PilotCovariance, Identity };

namespace detail {

// Complete a tangent-block covariance M into a full-rank preconditioner:
// V M V' + c (I - V V') with c = trace(M) / d.
inline Matrix complete_preconditioner(const TangentBasis& basis, Matrix m_block) {
  const int D = static_cast<int>(basis.frame.rows());
  const int d = static_cast<int>(basis.frame.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m_block));
  double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
  if (top <= 0.0)
    throw std::runtime_error("preconditioner: tangent covariance vanished; use identity");
  double floor = 1e-8 * top;
  Matrix fixed = es.eigenvectors() * es.eigenvalues().cwiseMax(floor).asDiagonal() *
                 es.eigenvectors().transpose();
  double c = fixed.trace() / d;
  Matrix vvt = basis.frame * basis.frame.transpose();
  return symmetrize(basis.frame * fixed * basis.frame.transpose() +
                    c * (Matrix::Identity(D, D) - vvt));
}

// The proposal scale lives in h_tilde; an estimated preconditioner carries only
// the shape. Rescale the tangent block to unit geometric-mean eigenvalue so
// Itilde = I and an estimated Itilde imply the same overall step size.
inline Matrix unit_scale_block(Matrix m_block) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m_block));
  double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
  if (top <= 0.0) return m_block;
  double floor = 1e-8 * top;
  double log_sum = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    log_sum += std::log(std::max(es.eigenvalues()(i), floor));
  return m_block / std::exp(log_sum / es.eigenvalues().size());
}

}  // namespace detail

// Tangent-block sandwich covariance H^dagger Delta H^dagger at theta_hat, in
// the returned basis.  H is the finite-difference Riemannian Hessian of the
// empirical risk; Delta the second moment of the gradients.
inline Matrix sandwich_tangent_block(const LogTarget& t, const Vector& theta_hat,
                                     const TangentBasis& basis) {
  const ManifoldSpec& m = t.loss.manifold;
  const int d = static_cast<int>(basis.frame.cols());
  const int n = t.n();
  const double h = 1e-5;
  Matrix hess(d, d);
  for (int j = 0; j < d; ++j) {
    Vector dir = basis.frame.col(j);
    Vector gp = empirical_risk_rgrad(t.loss, t.data, retract(m, theta_hat, h * dir));
    Vector gm = empirical_risk_rgrad(t.loss, t.data, retract(m, theta_hat, -h * dir));
    hess.col(j) = basis.frame.transpose() * ((gp - gm) / (2.0 * h));
  }
  hess = symmetrize(hess);
  if (numerical_rank(hess, 1e-8) < d)
    throw std::runtime_error("sandwich: singular risk Hessian; use the identity preconditioner");
  Matrix g = gradient_matrix(t, theta_hat);
  Matrix gb = basis.frame.transpose() * g;
  Matrix delta = (gb * gb.transpose()) / n;
  Matrix hinv = pseudo_inverse(hess);
  return symmetrize(hinv * delta * hinv);
}

inline Matrix estimate_preconditioner(PrecondMethod method, const LogTarget& t,
                                      const Vector& theta_hat,
                                      const Chain* pilot = nullptr) {
  const ManifoldSpec& m = t.loss.manifold;
  const int D = m.ambient_dim();
  switch (method) {
    case PrecondMethod::Identity:
      return Matrix::Identity(D, D);
    case PrecondMethod::PluginSandwich: {
      TangentBasis basis = tangent_basis(m, theta_hat);
      return detail::complete_preconditioner(
          basis, detail::unit_scale_block(sandwich_tangent_block(t, theta_hat, basis)));
    }
    case PrecondMethod::PilotCovariance: {
      if (!pilot || pilot->states.empty())
        throw std::invalid_argument("estimate_preconditioner: pilot chain required");
      Vector mean = Vector::Zero(D);
      for (const auto& s : pilot->states) mean += s;
      mean /= static_cast<double>(pilot->states.size());
      Vector center = project_to_manifold(m, mean);
      TangentBasis basis = tangent_basis(m, center);
      Matrix coords(basis.frame.cols(), pilot->states.size());
      for (std::size_t i = 0; i < pilot->states.size(); ++i)
        coords.col(i) = basis.frame.transpose() * (pilot->states[i] - center);
      Vector cmean = coords.rowwise().mean();
      coords.colwise() -= cmean;
      Matrix cov = (coords * coords.transpose()) /
                   std::max<double>(1.0, coords.cols() - 1.0);
      return detail::complete_preconditioner(basis,
                                             detail::unit_scale_block(t.n() * cov));
    }
  }
  return Matrix::Identity(D, D);
}

}  // namespace rpetel
