#pragma once

#include <vector>

#include "rpetel/manifold.hpp"

namespace rpetel {

enum class LossKind {
  ExtrinsicMean,
  FrechetSphere,
  FrechetSo2,
  BwBarycenter,
  SpectralProjector,
  MultiQuantile
};

struct LossError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Observation payloads are plain ambient vectors.  For multi-quantile the
// payload is the covariate stacked with the response: [x_1..x_p, y].
struct Observation {
  Vector payload;
};

struct LossModel {
  LossKind kind;
  ManifoldSpec manifold;
  std::vector<double> tau;        // multi-quantile levels, strictly increasing
  int covariate_dim = 0;          // multi-quantile p
  double quantile_smoothing = 0;  // softplus width; 0 means the exact check loss

  bool smooth() const { return kind != LossKind::MultiQuantile; }

  void validate() const {
    if (kind == LossKind::MultiQuantile) {
      if (tau.empty()) throw LossError("multi-quantile: no levels");
      double prev = 0.0;
      for (double t : tau) {
        if (t <= prev || t >= 1.0)
          throw LossError("multi-quantile: levels must be strictly increasing in (0,1)");
        prev = t;
      }
      if (manifold.kind() != ManifoldKind::FixedRank &&
          manifold.kind() != ManifoldKind::Ambient)
        throw LossError("multi-quantile requires a fixed-rank or ambient manifold");
    }
    if (kind == LossKind::FrechetSphere && manifold.kind() != ManifoldKind::Sphere)
      throw LossError("frechet-sphere requires a sphere manifold");
  }
};

namespace detail {

inline void require_psd(const Matrix& a, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  if (es.eigenvalues()(0) < -1e-10 * std::max(1.0, std::abs(es.eigenvalues().maxCoeff())))
    throw LossError(std::string(what) + ": matrix is not positive semidefinite");
}

inline Matrix spd_inv_sqrt(const Matrix& a, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  const Vector& ev = es.eigenvalues();
  if (ev(0) <= 1e-12 * std::max(1.0, ev(ev.size() - 1)))
    throw LossError(std::string(what) + ": matrix is numerically singular");
  return es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

inline double check_loss(double t, double tau, double delta) {
  if (delta <= 0.0) return t * (tau - (t <= 0.0 ? 1.0 : 0.0));
  // tau*t + delta*softplus(-t/delta)
  double z = -t / delta;
  double sp = z > 30.0 ? z : std::log1p(std::exp(z));
  return tau * t + delta * sp;
}

inline double check_loss_slope(double t, double tau, double delta) {
  if (delta <= 0.0) return tau - (t <= 0.0 ? 1.0 : 0.0);
  return tau - 1.0 / (1.0 + std::exp(t / delta));
}

}  // namespace detail

inline double loss_eval(const LossModel& L, const Observation& x, const Vector& theta) {
  switch (L.kind) {
    case LossKind::ExtrinsicMean:
      if (x.payload.size() != theta.size())
        throw LossError("extrinsic-mean: dimension mismatch");
      return (theta - x.payload).squaredNorm();
    case LossKind::FrechetSphere: {
      if (x.payload.size() != theta.size())
        throw LossError("frechet-sphere: dimension mismatch");
      double c = clamp_unit(x.payload.dot(theta));
      double a = std::acos(c);
      return a * a;
    }
    case LossKind::FrechetSo2: {
      if (x.payload.size() != 4 || theta.size() != 4)
        throw LossError("frechet-so2: expects vectorized 2x2 rotations");
      double c = clamp_unit(x.payload(0) * theta(0) + x.payload(1) * theta(1));
      double a = std::acos(c);
      return a * a;
    }
    case LossKind::BwBarycenter: {
      const int p = L.manifold.rows();
      Matrix q = symmetrize(unvec(theta, p, p));
      Matrix s = symmetrize(unvec(x.payload, p, p));
      detail::require_psd(q, "bw-barycenter theta");
      detail::require_psd(s, "bw-barycenter observation");
      Matrix qh = spd_sqrt(q);
      Matrix cross = spd_sqrt(qh * s * qh);
      return q.trace() + s.trace() - 2.0 * cross.trace();
    }
    case LossKind::SpectralProjector: {
      const int p = L.manifold.rows();
      if (x.payload.size() != p)
        throw LossError("spectral-projector: observation must be a length-p vector");
      Matrix proj = unvec(theta, p, p);
      return -x.payload.dot(proj * x.payload);
    }
    case LossKind::MultiQuantile: {
      const int p = L.covariate_dim;
      const int K = static_cast<int>(L.tau.size());
      if (x.payload.size() != p + 1)
        throw LossError("multi-quantile: payload must be [covariate, response]");
      Vector xt = x.payload.head(p);
      double y = x.payload(p);
      Matrix b = unvec(theta, p, K);
      double total = 0.0;
      for (int k = 0; k < K; ++k)
        total += detail::check_loss(y - xt.dot(b.col(k)), L.tau[k], L.quantile_smoothing);
      return total;
    }
  }
  throw LossError("loss_eval: unknown kind");
}

// Euclidean (sub)gradient in ambient coordinates, before tangent projection.
inline Vector loss_egrad(const LossModel& L, const Observation& x, const Vector& theta) {
  switch (L.kind) {
    case LossKind::ExtrinsicMean:
      return 2.0 * (theta - x.payload);
    case LossKind::FrechetSphere: {
      double c = x.payload.dot(theta);
      if (c < -1.0 + 1e-9)
        throw LossError("frechet-sphere: gradient undefined near the antipode");
      if (c > 1.0 - 1e-9) return -2.0 * x.payload;  // limit of acos(c)/sqrt(1-c^2)
      double cc = clamp_unit(c);
      return (-2.0 * std::acos(cc) / std::sqrt(1.0 - cc * cc)) * x.payload;
    }
    case LossKind::FrechetSo2: {
      double c = x.payload(0) * theta(0) + x.payload(1) * theta(1);
      if (c < -1.0 + 1e-9)
        throw LossError("frechet-so2: gradient undefined near the antipode");
      Vector dir = Vector::Zero(4);
      dir(0) = x.payload(0);
      dir(1) = x.payload(1);
      if (c > 1.0 - 1e-9) return -2.0 * dir;
      double cc = clamp_unit(c);
      return (-2.0 * std::acos(cc) / std::sqrt(1.0 - cc * cc)) * dir;
    }
    case LossKind::BwBarycenter: {
      const int p = L.manifold.rows();
      Matrix q = symmetrize(unvec(theta, p, p));
      Matrix s = symmetrize(unvec(x.payload, p, p));
      Matrix qh = spd_sqrt(q);
      Matrix qih = detail::spd_inv_sqrt(q, "bw-barycenter gradient");
      Matrix cross = spd_sqrt(qh * s * qh);
      Matrix g = Matrix::Identity(p, p) - qih * cross * qih;
      return vec(symmetrize(g));
    }
    case LossKind::SpectralProjector: {
      const int p = L.manifold.rows();
      Matrix g = -x.payload * x.payload.transpose();
      (void)p;
      return vec(g);
    }
    case LossKind::MultiQuantile: {
      const int p = L.covariate_dim;
      const int K = static_cast<int>(L.tau.size());
      Vector xt = x.payload.head(p);
      double y = x.payload(p);
      Matrix b = unvec(theta, p, K);
      Matrix g(p, K);
      for (int k = 0; k < K; ++k) {
        double slope = detail::check_loss_slope(y - xt.dot(b.col(k)), L.tau[k],
                                                L.quantile_smoothing);
        g.col(k) = -slope * xt;
      }
      return vec(g);
    }
  }
  throw LossError("loss_egrad: unknown kind");
}

inline Vector loss_rgrad(const LossModel& L, const Observation& x, const Vector& theta) {
  return project_tangent(L.manifold, theta, loss_egrad(L, x, theta));
}

inline double empirical_risk(const LossModel& L, const std::vector<Observation>& data,
                             const Vector& theta) {
  if (data.empty()) throw LossError("empirical_risk: empty data");
  double total = 0.0;
  for (const auto& x : data) total += loss_eval(L, x, theta);
  return total / static_cast<double>(data.size());
}

inline Vector empirical_risk_rgrad(const LossModel& L,
                                   const std::vector<Observation>& data,
                                   const Vector& theta) {
  if (data.empty()) throw LossError("empirical_risk_rgrad: empty data");
  Vector total = Vector::Zero(theta.size());
  for (const auto& x : data) total += loss_egrad(L, x, theta);
  return project_tangent(L.manifold, theta, (total / static_cast<double>(data.size())).eval());
}

}  // namespace rpetel
