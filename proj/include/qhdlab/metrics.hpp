#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace qhdlab {

/// (alpha, beta, gamma, t0, h, K) of the gradient-augmented dynamics.
struct HamiltonianParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double t0 = 0.0;
  double h = 0.01;
  int K = 1;

  double omega() const { return gamma - 3.0 * alpha; }
  double time_at(int k) const { return t0 + k * h; }
  /// Throws std::invalid_argument unless h > 0, K >= 1, t0 >= 0.
  void validate() const;
};

struct MetricRecord {
  int k = 0;
  double t = 0.0;
  double exp_f = 0.0;
  double exp_gradnorm_sq = 0.0;
  double success_prob = 0.0;
  double norm_drift = 0.0;
  std::optional<double> lyapunov;
};

struct MetricsSeries {
  std::vector<MetricRecord> records;
  double delta = 1.0;
  double f_min = 0.0;
};

}  // namespace qhdlab
