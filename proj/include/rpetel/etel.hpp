#pragma once

#include <functional>

#include "rpetel/losses.hpp"

namespace rpetel {

struct EtelSolution {
  Vector lambda;   // multiplier in ambient coordinates, lies in T_theta
  Vector weights;  // tilted weights, nonnegative, sum to 1
  bool converged = false;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  double log_retel = kNegInf;  // sum_i log p_i
};

// Damped Newton for lambda(theta) = argmin over the tangent space of
// sum_i exp(lambda' g_i).  grads holds the tangent gradients column-wise
// (D x n); the solve runs in the d-dimensional frame coordinates.
// Infeasibility (zero outside the convex hull of gradients) surfaces as
// converged=false, never as an exception.
inline EtelSolution solve_lambda(const Matrix& grads, const Matrix& frame,
                                 const Vector* warm_start_ambient = nullptr,
                                 double step_tol = 1e-9, int max_iter = 50,
                                 double residual_tol = 1e-8) {
  const int n = static_cast<int>(grads.cols());
  const int d = static_cast<int>(frame.cols());
  Matrix g = frame.transpose() * grads;  // d x n
  Vector lam = Vector::Zero(d);
  if (warm_start_ambient && warm_start_ambient->size() == frame.rows()) {
    Vector w = frame.transpose() * (*warm_start_ambient);
    if (w.allFinite()) lam = w;
  }

  auto dual_log = [&](const Vector& l) {
    return log_sum_exp((g.transpose() * l).eval());  // log sum exp(s_i)
  };

  EtelSolution sol;
  double f_cur = dual_log(lam);
  if (!std::isfinite(f_cur)) {
    lam.setZero();
    f_cur = dual_log(lam);
  }
  int it = 0;
  for (; it < max_iter; ++it) {
    Vector s = g.transpose() * lam;
    double m = s.maxCoeff();
    Vector w = (s.array() - m).exp();
    Vector grad = g * w;                          // scaled gradient, shift cancels
    Matrix hess = g * w.asDiagonal() * g.transpose();
    bool used_pinv = false;
    Vector delta = robust_solve(hess, -grad, &used_pinv);
    if (!delta.allFinite()) break;
    double gamma = 1.0;
    bool stepped = false;
    while (gamma >= std::ldexp(1.0, -30)) {
      double f_try = dual_log((lam + gamma * delta).eval());
      if (f_try <= f_cur) {
        lam += gamma * delta;
        f_cur = f_try;
        stepped = true;
        break;
      }
      gamma *= 0.5;
    }
    if (!stepped) break;
    if ((gamma * delta).norm() <= step_tol) {
      ++it;
      break;
    }
  }

  Vector s = g.transpose() * lam;
  double lse = log_sum_exp(s);
  sol.weights = (s.array() - lse).exp();
  double wsum = sol.weights.sum();
  if (wsum > 0.0) sol.weights /= wsum;
  sol.residual = (g * sol.weights).norm();
  sol.iterations = it;
  sol.lambda = frame * lam;
  sol.converged = sol.residual <= residual_tol && sol.weights.allFinite();
  if (sol.converged) sol.log_retel = s.sum() - n * lse;
  return sol;
}

enum class PosteriorKind { Rpetel, Gibbs, Custom };

struct LogTarget {
  LossModel loss;
  std::vector<Observation> data;
  PosteriorKind kind = PosteriorKind::Rpetel;
  double alpha_n = 0.0;  // rpetel risk penalty
  double beta = 1.0;     // gibbs learning rate
  std::function<double(const Vector&)> log_prior;       // null means flat
  std::function<Vector(const Vector&)> log_prior_grad;  // null means zero
  std::function<double(const Vector&)> custom_log_density;
  std::function<Vector(const Vector&)> custom_potential_grad;  // grad of -log density

  // chain-local Newton warm start; each chain owns its LogTarget copy
  mutable Vector lambda_warm;

  int n() const { return static_cast<int>(data.size()); }
};

inline LogTarget make_rpetel_target(LossModel loss, std::vector<Observation> data,
                                    double alpha_multiplier = 2.0) {
  LogTarget t;
  t.loss = std::move(loss);
  t.data = std::move(data);
  t.kind = PosteriorKind::Rpetel;
  t.alpha_n = alpha_multiplier * std::log(static_cast<double>(t.data.size()));
  return t;
}

inline LogTarget make_gibbs_target(LossModel loss, std::vector<Observation> data,
                                   double beta) {
  LogTarget t;
  t.loss = std::move(loss);
  t.data = std::move(data);
  t.kind = PosteriorKind::Gibbs;
  t.beta = beta;
  return t;
}

// Tangent gradients of every observation at theta, column-wise D x n.
inline Matrix gradient_matrix(const LogTarget& t, const Vector& theta) {
  const int D = static_cast<int>(theta.size());
  Matrix g(D, t.n());
  for (int i = 0; i < t.n(); ++i) g.col(i) = loss_rgrad(t.loss, t.data[i], theta);
  return g;
}

inline EtelSolution solve_retel(const LogTarget& t, const Vector& theta) {
  Matrix g = gradient_matrix(t, theta);
  TangentBasis basis = tangent_basis(t.loss.manifold, theta);
  const Vector* warm =
      t.lambda_warm.size() == theta.size() ? &t.lambda_warm : nullptr;
  EtelSolution sol = solve_lambda(g, basis.frame, warm);
  if (sol.converged) t.lambda_warm = sol.lambda;
  return sol;
}

inline double log_retel(const LogTarget& t, const Vector& theta) {
  EtelSolution sol = solve_retel(t, theta);
  return sol.converged ? sol.log_retel : kNegInf;
}

inline double log_posterior(const LogTarget& t, const Vector& theta) {
  if (t.kind == PosteriorKind::Custom) return t.custom_log_density(theta);
  double lp = t.log_prior ? t.log_prior(theta) : 0.0;
  if (!std::isfinite(lp)) return kNegInf;
  double risk = empirical_risk(t.loss, t.data, theta);
  if (t.kind == PosteriorKind::Gibbs) return lp - t.beta * t.n() * risk;
  double lr = log_retel(t, theta);
  if (lr == kNegInf) return kNegInf;
  return lp - t.alpha_n * risk + lr;
}

namespace detail {

// Central-difference Jacobian of observation i's tangent gradient along the
// retracted frame directions; D x d.
inline Matrix grad_jacobian(const LogTarget& t, const Vector& theta,
                            const TangentBasis& basis, int i, double h = 1e-5) {
  const int D = static_cast<int>(theta.size());
  const int d = static_cast<int>(basis.frame.cols());
  Matrix jac(D, d);
  for (int j = 0; j < d; ++j) {
    Vector dir = basis.frame.col(j);
    Vector gp = loss_rgrad(t.loss, t.data[i], retract(t.loss.manifold, theta, h * dir));
    Vector gm = loss_rgrad(t.loss, t.data[i], retract(t.loss.manifold, theta, -h * dir));
    jac.col(j) = (gp - gm) / (2.0 * h);
  }
  return jac;
}

}  // namespace detail

struct PotentialGradError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Riemannian gradient of the potential f = -log_posterior, for RMALA.
inline Vector potential_rgrad(const LogTarget& t, const Vector& theta) {
  const ManifoldSpec& m = t.loss.manifold;
  const int D = static_cast<int>(theta.size());
  if (t.kind == PosteriorKind::Custom) {
    if (!t.custom_potential_grad)
      throw PotentialGradError("potential_rgrad: custom target has no gradient");
    return project_tangent(m, theta, t.custom_potential_grad(theta));
  }
  Vector prior_term = Vector::Zero(D);
  if (t.log_prior_grad) prior_term = -t.log_prior_grad(theta);

  Matrix g = gradient_matrix(t, theta);
  const int n = t.n();

  if (t.kind == PosteriorKind::Gibbs) {
    Vector out = t.beta * g.rowwise().sum() + prior_term;
    return project_tangent(m, theta, out);
  }

  TangentBasis basis = tangent_basis(m, theta);
  EtelSolution sol = solve_lambda(g, basis.frame,
                                  t.lambda_warm.size() == D ? &t.lambda_warm : nullptr);
  if (!sol.converged)
    throw PotentialGradError("potential_rgrad: moment constraint infeasible at theta");
  t.lambda_warm = sol.lambda;
  const Vector& lam = sol.lambda;
  const Vector& p = sol.weights;
  Vector s = g.transpose() * lam;
  double ms = s.maxCoeff();
  Vector w = (s.array() - ms).exp();  // unnormalized weights, shift cancels below

  // Implicit differentiation of the stationarity condition sum e^{s_i} g_i = 0
  Matrix hess = g * w.asDiagonal() * g.transpose();  // D x D, rank <= d
  Matrix bmat = Matrix::Zero(D, D);
  std::vector<Matrix> jacs(n);
  for (int i = 0; i < n; ++i) jacs[i] = detail::grad_jacobian(t, theta, basis, i);
  for (int i = 0; i < n; ++i) {
    Matrix dg = jacs[i] * basis.frame.transpose();  // D x D action on tangent vectors
    bmat += w(i) * (dg + g.col(i) * (lam.transpose() * dg));
  }
  Matrix jlam = -pseudo_inverse(hess) * bmat;  // dlambda/dtheta

  Vector grad = (t.alpha_n / n) * g.rowwise().sum();
  Vector weighted_gl = Vector::Zero(D);
  for (int i = 0; i < n; ++i) {
    Vector gl = basis.frame * (jacs[i].transpose() * lam);  // grad of lam'g_i in theta
    grad -= jlam.transpose() * g.col(i);
    grad -= gl;
    weighted_gl += p(i) * gl;
  }
  grad += n * weighted_gl;
  grad += prior_term;
  return project_tangent(m, theta, grad);
}

}  // namespace rpetel
