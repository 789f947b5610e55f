#include "aemr/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

#include "aemr/error.hpp"

namespace aemr {

double chi_square_survival(double x, double degrees_of_freedom) {
  if (!(degrees_of_freedom > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "degrees of freedom must be positive");
  }
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(degrees_of_freedom / 2.0, x / 2.0);
}

double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf) {
  if (samples.empty()) {
    throw Error(ErrorCode::InvalidArgument, "KS statistic of an empty sample");
  }
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_statistic_uniform(std::vector<double> samples) {
  return ks_statistic(std::move(samples),
                      [](double x) { return std::clamp(x, 0.0, 1.0); });
}

double ks_critical_value(std::size_t n, double alpha) {
  if (n == 0 || !(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "KS critical value needs n > 0 and alpha in (0,1)");
  }
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double rn = std::sqrt(static_cast<double>(n));
  return c / (rn + 0.12 + 0.11 / rn);
}

// ---------------------------------------------------------------------------

CenteredResponse::CenteredResponse(std::span<const double> response)
    : values(Eigen::Map<const Eigen::VectorXd>(response.data(),
                                               static_cast<Eigen::Index>(response.size()))) {
  if (response.empty()) {
    throw Error(ErrorCode::InvalidArgument, "empty response");
  }
  values.array() -= values.mean();
  total_ss = values.squaredNorm();
}

namespace {

constexpr double kConstantColumnTol = 1e-14;
constexpr double kRankTol = 1e-10;

}  // namespace

LeastSquaresF::LeastSquaresF(const Eigen::MatrixXd& regressors)
    : n_(static_cast<std::size_t>(regressors.rows())) {
  const Eigen::Index n = regressors.rows();
  std::vector<Eigen::Index> keep;
  Eigen::MatrixXd centred = regressors.rowwise() - regressors.colwise().mean();
  std::vector<double> norms;
  for (Eigen::Index c = 0; c < regressors.cols(); ++c) {
    const double raw = regressors.col(c).squaredNorm();
    const double ss = centred.col(c).squaredNorm();
    if (ss > kConstantColumnTol * raw && ss > 0.0) {
      keep.push_back(c);
      norms.push_back(std::sqrt(ss));
    }
  }
  if (keep.empty()) return;

  regressors_.resize(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    regressors_.col(static_cast<Eigen::Index>(k)) = centred.col(keep[k]) / norms[k];
  }
  Eigen::MatrixXd gram(regressors_.cols(), regressors_.cols());
  gram.setZero();
  gram.selfadjointView<Eigen::Lower>().rankUpdate(regressors_.transpose());
  gram = gram.selfadjointView<Eigen::Lower>();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const auto& lambda = eig.eigenvalues();
  const double top = lambda.maxCoeff();
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] > kRankTol * top) kept.push_back(i);
  }
  rank_ = kept.size();
  projector_.resize(gram.rows(), static_cast<Eigen::Index>(rank_));
  for (std::size_t i = 0; i < rank_; ++i) {
    projector_.col(static_cast<Eigen::Index>(i)) =
        eig.eigenvectors().col(kept[i]) / std::sqrt(lambda[kept[i]]);
  }
}

double LeastSquaresF::statistic(const CenteredResponse& response) const {
  if (response.size() != n_) {
    throw Error(ErrorCode::InvalidArgument, "response length mismatch");
  }
  if (rank_ == 0) return 0.0;
  if (n_ <= rank_ + 1) {
    throw Error(ErrorCode::InvalidArgument,
                "F statistic needs more observations than regressors + 1");
  }
  const Eigen::VectorXd cross = regressors_.transpose() * response.values;
  const double ssr = (projector_.transpose() * cross).squaredNorm();
  const double sse = response.total_ss - ssr;
  if (!(sse > 1e-14 * response.total_ss)) {
    return std::numeric_limits<double>::infinity();
  }
  const double df1 = static_cast<double>(rank_);
  const double df2 = static_cast<double>(n_ - rank_ - 1);
  return (ssr / df1) / (sse / df2);
}

}  // namespace aemr
