#pragma once

#include <algorithm>
#include <string>

#include "rpetel/samplers.hpp"

namespace rpetel {

// Linear-interpolation ("type 7") sample quantile.
inline double sample_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("sample_quantile: empty sample");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("sample_quantile: p outside [0,1]");
  std::sort(values.begin(), values.end());
  const double h = (values.size() - 1) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - lo;
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

inline Vector project_posterior_mean(const Chain& c, const ManifoldSpec& m) {
  if (c.states.empty()) throw std::invalid_argument("project_posterior_mean: empty chain");
  Vector mean = Vector::Zero(c.states[0].size());
  for (const auto& s : c.states) mean += s;
  mean /= static_cast<double>(c.states.size());
  return project_to_manifold(m, mean);
}

struct PosteriorSummary {
  Vector theta_hat_p;       // projected posterior mean
  TangentBasis basis;       // frame at theta_hat_p used for sigma_p
  Matrix sigma_p;           // d x d tangent pushforward covariance
  double q_alpha = 0.0;     // region threshold
  double alpha = 0.05;
  double locality_radius = 1.0;
  int sigma_rank = 0;
  bool degenerate = false;  // zero-variance chain; region is {theta_hat_p}
};

enum class RegionStatus { Member, NotMember, OutsideLocality };

inline PosteriorSummary credible_region(const Chain& c, const ManifoldSpec& m,
                                        double alpha) {
  const int d = m.intrinsic_dim();
  if (static_cast<int>(c.states.size()) < d + 2)
    throw std::invalid_argument("credible_region: chain shorter than d + 2");
  PosteriorSummary out;
  out.alpha = alpha;
  out.locality_radius = c.config.trust_radius;
  out.theta_hat_p = project_posterior_mean(c, m);
  out.basis = tangent_basis(m, out.theta_hat_p);

  const int N = static_cast<int>(c.states.size());
  Matrix coords(d, N);
  for (int i = 0; i < N; ++i)
    coords.col(i) = out.basis.frame.transpose() * (c.states[i] - out.theta_hat_p);
  Vector cmean = coords.rowwise().mean();
  Matrix centered = coords.colwise() - cmean;
  out.sigma_p = symmetrize((centered * centered.transpose()) / (N - 1.0));
  out.sigma_rank = numerical_rank(out.sigma_p);
  if (out.sigma_rank == 0) {
    out.degenerate = true;
    out.q_alpha = 0.0;
    return out;
  }
  Matrix sp_pinv = pseudo_inverse(out.sigma_p);
  std::vector<double> qf(N);
  for (int i = 0; i < N; ++i) qf[i] = coords.col(i).dot(sp_pinv * coords.col(i));
  out.q_alpha = sample_quantile(qf, 1.0 - alpha);
  return out;
}

inline RegionStatus region_contains(const PosteriorSummary& s, const ManifoldSpec& m,
                                    const Vector& candidate) {
  require_membership(m, candidate, "region_contains");
  Vector diff = candidate - s.theta_hat_p;
  if (diff.norm() > s.locality_radius) return RegionStatus::OutsideLocality;
  if (s.degenerate)
    return diff.norm() <= 1e-10 ? RegionStatus::Member : RegionStatus::NotMember;
  Vector u = s.basis.frame.transpose() * diff;
  double q = u.dot(pseudo_inverse(s.sigma_p) * u);
  return q <= s.q_alpha ? RegionStatus::Member : RegionStatus::NotMember;
}

struct FunctionalInterval {
  std::string name;
  double lower = 0.0, upper = 0.0;
  double alpha = 0.05;

  bool covers(double value) const { return lower <= value && value <= upper; }
};

template <typename F>
FunctionalInterval credible_interval(const Chain& c, const std::string& name, F&& f,
                                     double alpha) {
  if (c.states.empty()) throw std::invalid_argument("credible_interval: empty chain");
  std::vector<double> vals;
  vals.reserve(c.states.size());
  for (std::size_t i = 0; i < c.states.size(); ++i) {
    double v = f(c.states[i]);
    if (!std::isfinite(v))
      throw std::runtime_error("credible_interval: non-finite functional at state " +
                               std::to_string(i));
    vals.push_back(v);
  }
  FunctionalInterval out;
  out.name = name;
  out.alpha = alpha;
  out.lower = sample_quantile(vals, alpha / 2.0);
  out.upper = sample_quantile(vals, 1.0 - alpha / 2.0);
  return out;
}

struct BvmReport {
  double pushforward_mean_norm = 0.0;
  double relative_gap = 1.0;      // || n Sigma_p - sandwich ||_F / ||sandwich||_F
  double mardia_skewness = 0.0;   // reported only, never gated
  double mardia_kurtosis = 0.0;
  int draws_used = 0;
  double sigma_p_trace = 0.0;
  int draws_total = 0;
};

// Empirical check of the asymptotic normal approximation: compares the scaled
// pushforward covariance against the plug-in sandwich, both lifted to ambient
// bilinear forms so the comparison is basis independent.
inline BvmReport bvm_check(const Chain& c, const ManifoldSpec& m, int n,
                           const Matrix& sandwich_block,
                           const TangentBasis& sandwich_basis) {
  PosteriorSummary s = credible_region(c, m, 0.05);
  const int N = static_cast<int>(c.states.size());
  const int d = m.intrinsic_dim();
  Matrix coords(d, N);
  for (int i = 0; i < N; ++i)
    coords.col(i) = s.basis.frame.transpose() * (c.states[i] - s.theta_hat_p);

  BvmReport rep;
  rep.draws_total = N;
  rep.pushforward_mean_norm = coords.rowwise().mean().norm();
  rep.sigma_p_trace = s.sigma_p.trace();

  Matrix lhs = s.basis.frame * (n * s.sigma_p) * s.basis.frame.transpose();
  Matrix rhs = sandwich_basis.frame * sandwich_block * sandwich_basis.frame.transpose();
  double denom = rhs.norm();
  rep.relative_gap = denom > 0.0 ? (lhs - rhs).norm() / denom : 1.0;

  // Mardia statistics on a deterministic subsample
  const int cap = 2000;
  int step = std::max(1, N / cap);
  std::vector<int> idx;
  for (int i = 0; i < N; i += step) idx.push_back(i);
  const int M = static_cast<int>(idx.size());
  rep.draws_used = M;
  Matrix sub(d, M);
  for (int j = 0; j < M; ++j) sub.col(j) = coords.col(idx[j]);
  Vector mu = sub.rowwise().mean();
  Matrix cen = sub.colwise() - mu;
  Matrix cov = symmetrize((cen * cen.transpose()) / M);
  Matrix cinv = pseudo_inverse(cov);
  Matrix q = cen.transpose() * cinv * cen;  // M x M of cross forms
  double b1 = 0.0;
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) b1 += std::pow(q(i, j), 3);
  rep.mardia_skewness = b1 / (static_cast<double>(M) * M);
  double b2 = 0.0;
  for (int i = 0; i < M; ++i) b2 += q(i, i) * q(i, i);
  rep.mardia_kurtosis = b2 / M;
  return rep;
}

}  // namespace rpetel
