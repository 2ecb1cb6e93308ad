#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "rpetel/diagnostics.hpp"
#include "rpetel/inference.hpp"

namespace rpetel {

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_chain_csv(const Chain& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  const int D = c.states.empty() ? 0 : static_cast<int>(c.states[0].size());
  out << "iter,accepted";
  for (int j = 1; j <= D; ++j) out << ",x" << j;
  out << "\n";
  for (std::size_t i = 0; i < c.states.size(); ++i) {
    out << i << ',' << static_cast<int>(c.accepted[i]);
    for (int j = 0; j < D; ++j) out << ',' << format_g17(c.states[i](j));
    out << "\n";
  }
}

// Chain CSV reader for the diagnostics command; returns iterations x coords.
inline Matrix read_chain_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty chain file " + path);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col >= 2) row.push_back(std::stod(cell));  // skip iter and accepted
      ++col;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("no states in " + path);
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

inline void write_diagnostics_csv(const DiagnosticsReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "coordinate,ess,psrf_median,psrf_q975,iters_to_1.01\n";
  for (std::size_t c = 0; c < rep.ess.size(); ++c) {
    out << (c + 1) << ',' << format_g17(rep.ess[c]) << ','
        << format_g17(rep.psrf_point[c]) << ',' << format_g17(rep.psrf_upper[c])
        << ',' << rep.iters_to_threshold[c] << "\n";
  }
}

inline void write_summary_csv(const PosteriorSummary& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "alpha,q_alpha";
  const int D = static_cast<int>(s.theta_hat_p.size());
  const int d = static_cast<int>(s.sigma_p.rows());
  for (int j = 1; j <= D; ++j) out << ",theta_hat_p_" << j;
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j) out << ",sigma_p_" << i << '_' << j;
  out << "\n" << format_g17(s.alpha) << ',' << format_g17(s.q_alpha);
  for (int j = 0; j < D; ++j) out << ',' << format_g17(s.theta_hat_p(j));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out << ',' << format_g17(s.sigma_p(i, j));
  out << "\n";
}

inline void write_intervals_csv(const std::vector<FunctionalInterval>& xs,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "functional,alpha,lower,upper\n";
  for (const auto& x : xs)
    out << x.name << ',' << format_g17(x.alpha) << ',' << format_g17(x.lower) << ','
        << format_g17(x.upper) << "\n";
}

}  // namespace rpetel
