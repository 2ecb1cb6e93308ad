#pragma once

#include <boost/math/distributions/fisher_f.hpp>
#include <vector>

#include "rpetel/linalg.hpp"

namespace rpetel {

// Effective sample size with the Geyer initial-positive-sequence truncation.
// A constant series reports ESS = K by convention (flag via constant_out).
inline double ess(const Vector& series, bool* constant_out = nullptr) {
  const int K = static_cast<int>(series.size());
  if (K < 4) throw std::invalid_argument("ess: need at least 4 samples");
  if (constant_out) *constant_out = false;
  double mean = series.mean();
  Vector c = series.array() - mean;
  double c0 = c.squaredNorm() / K;
  if (c0 <= 0.0) {
    if (constant_out) *constant_out = true;
    return static_cast<double>(K);
  }
  auto rho = [&](int t) {
    double acc = 0.0;
    for (int i = 0; i + t < K; ++i) acc += c(i) * c(i + t);
    return acc / (K * c0);
  };
  double sum_rho = 0.0;
  for (int m = 0; 2 * m + 1 < K; ++m) {
    double gamma = rho(2 * m) + rho(2 * m + 1);
    if (m > 0 && gamma <= 0.0) break;
    sum_rho += gamma;
  }
  // sum_rho includes rho(0)=1, so 1 + 2*sum_{t>=1} rho_t = 2*sum_rho - 1
  double denom = std::max(2.0 * sum_rho - 1.0, 1e-12);
  double e = K / denom;
  return std::min(std::max(e, 1e-12), static_cast<double>(K));
}

struct PsrfResult {
  double point = 1.0;
  double upper = 1.0;
};

// Classic Gelman-Rubin potential scale reduction factor.  A single chain is
// split in half.  The upper estimate scales the between-chain term by the
// 97.5% quantile of the corresponding F distribution.
inline PsrfResult psrf(const std::vector<Vector>& chains_in) {
  std::vector<Vector> chains = chains_in;
  if (chains.size() == 1) {
    Vector full = chains[0];
    int half = static_cast<int>(full.size()) / 2;
    chains = {full.head(half), full.tail(half)};
  }
  const int J = static_cast<int>(chains.size());
  if (J < 2) throw std::invalid_argument("psrf: need at least one splittable chain");
  const int K = static_cast<int>(chains[0].size());
  for (const auto& ch : chains)
    if (ch.size() != K) throw std::invalid_argument("psrf: unequal chain lengths");
  if (K < 4) throw std::invalid_argument("psrf: chains too short");

  Vector means(J);
  double w = 0.0;
  for (int j = 0; j < J; ++j) {
    means(j) = chains[j].mean();
    w += (chains[j].array() - means(j)).square().sum() / (K - 1);
  }
  w /= J;
  double grand = means.mean();
  double b = K * (means.array() - grand).square().sum() / (J - 1);

  PsrfResult out;
  if (w <= 0.0) {
    if (b <= 0.0) {
      out.point = out.upper = std::sqrt((K - 1.0) / K);
      return out;
    }
    out.point = out.upper = std::numeric_limits<double>::infinity();
    return out;
  }
  double vhat = (K - 1.0) / K * w + b / K;
  out.point = std::sqrt(vhat / w);
  boost::math::fisher_f fdist(J - 1, static_cast<double>(J) * (K - 1));
  double fq = boost::math::quantile(fdist, 0.975);
  out.upper = std::sqrt(((K - 1.0) / K * w + fq * b / K) / w);
  return out;
}

// Smallest prefix length (checked at a 1%-of-K stride) where the PSRF point
// estimate drops below the threshold; -1 if never.
inline int iterations_to_threshold(const std::vector<Vector>& chains,
                                   double threshold = 1.01) {
  const int K = static_cast<int>(chains[0].size());
  int stride = std::max(1, K / 100);
  for (int len = stride; len <= K; len += stride) {
    if (len < 4) continue;
    std::vector<Vector> prefix;
    prefix.reserve(chains.size());
    for (const auto& ch : chains) prefix.push_back(ch.head(len));
    try {
      if (psrf(prefix).point < threshold) return len;
    } catch (const std::invalid_argument&) {
      continue;
    }
  }
  return -1;
}

struct DiagnosticsReport {
  std::vector<double> ess;          // per coordinate, summed over chains
  std::vector<double> psrf_point;   // per coordinate
  std::vector<double> psrf_upper;
  std::vector<int> iters_to_threshold;
};

// chains: one matrix per chain, rows = iterations, cols = coordinates.
inline DiagnosticsReport diagnose(const std::vector<Matrix>& chains,
                                  double threshold = 1.01) {
  if (chains.empty()) throw std::invalid_argument("diagnose: no chains");
  const int C = static_cast<int>(chains[0].cols());
  DiagnosticsReport rep;
  for (int c = 0; c < C; ++c) {
    double e = 0.0;
    std::vector<Vector> series;
    for (const auto& ch : chains) {
      Vector s = ch.col(c);
      e += ess(s);
      series.push_back(std::move(s));
    }
    rep.ess.push_back(e);
    PsrfResult p = psrf(series);
    rep.psrf_point.push_back(p.point);
    rep.psrf_upper.push_back(p.upper);
    rep.iters_to_threshold.push_back(iterations_to_threshold(series, threshold));
  }
  return rep;
}

}  // namespace rpetel
