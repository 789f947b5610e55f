#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace aemr {

// Upper tail of the chi-square distribution.
double chi_square_survival(double x, double degrees_of_freedom);

// Kolmogorov-Smirnov distance between the empirical law of `samples` and a
// continuous cdf.
double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf);
double ks_statistic_uniform(std::vector<double> samples);
// Critical value of the one-sample KS distance at level alpha (Stephens'
// finite-sample correction of the asymptotic Kolmogorov quantile).
double ks_critical_value(std::size_t n, double alpha);

// Response centred once and shared across many regressions.
struct CenteredResponse {
  Eigen::VectorXd values;
  double total_ss = 0.0;

  explicit CenteredResponse(std::span<const double> response);
  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

// Least-squares fit with an intercept, factorised once for a given design so
// that the overall regression F statistic can be evaluated for several
// responses. Columns with no variation and linearly dependent columns are
// dropped (the numerator degrees of freedom is the effective rank).
class LeastSquaresF {
 public:
  explicit LeastSquaresF(const Eigen::MatrixXd& regressors);

  std::size_t rank() const { return rank_; }
  std::size_t num_observations() const { return n_; }

  // F = (SSR / rank) / (SSE / (n - rank - 1)); 0 when rank is 0.
  double statistic(const CenteredResponse& response) const;

 private:
  std::size_t n_ = 0;
  std::size_t rank_ = 0;
  Eigen::MatrixXd regressors_;   // centred, scaled, non-constant columns only
  Eigen::MatrixXd projector_;    // eigenvectors kept, each divided by sqrt(eigenvalue)
};

}  // namespace aemr
