#pragma once

// Monte Carlo randomization test of H0: beta = beta0. Offspring instruments are
// redrawn from their conditional law given the adjustment set, the statistic
// is recomputed against the fixed adjusted outcome, and the p-value is the
// fraction of draws at least as extreme as the observed statistic.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aemr/adjustment.hpp"
#include "aemr/genetics_data.hpp"
#include "aemr/meiosis_hmm.hpp"

namespace aemr {

enum class StatisticKind { PlainF, CleverF, WeightedDiff };
enum class Tail { Upper, Lower };

std::string to_string(StatisticKind kind);
StatisticKind parse_statistic(std::string_view text);
std::string to_string(Tail tail);
Tail parse_tail(std::string_view text);

struct NullSpec {
  double beta0 = 0.0;

  explicit NullSpec(double b);
};

// Q = Y - beta0 * D.
double adjusted_outcome(double y, double d, double beta0);

struct CovariateValue {
  double value = 0.0;
  bool informative = true;
};

// z / pi - (1 - z) / (1 - pi), i.e. (z - pi) / (pi (1 - pi)). Zero and not
// informative when pi is 0 or 1.
CovariateValue clever_covariate(Allele z, double pi);
// Genotype analogue: (z - pi_m - pi_f) / (pi_m (1 - pi_m) + pi_f (1 - pi_f)).
CovariateValue genotype_clever_covariate(int z, double pi_maternal,
                                         double pi_paternal);

struct StatisticValue {
  double value = 0.0;
  bool informative = true;
};

// Z and X hold one column per instrument (X may be empty for plain_F).
//   plain_F:       regression F of Q on Z
//   clever_F:      regression F of Q on [Z, X]
//   weighted_diff: Euclidean norm of X^T Q (|sum_i Q_i X_i| for one instrument)
StatisticValue compute_statistic(StatisticKind kind, std::span<const double> q,
                                 const Eigen::MatrixXd& z, const Eigen::MatrixXd& x);

struct RandomizationResult {
  std::string label;
  StatisticKind kind = StatisticKind::CleverF;
  double beta0 = 0.0;
  double observed_stat = 0.0;
  std::size_t draws = 0;
  std::size_t num_geq = 0;  // draws at least as extreme as observed
  double p_value = 1.0;
  double p_value_corrected = 1.0;
  std::uint64_t seed = 0;
  bool informative = true;
};

// Counterfactual instruments for every trio. Instruments of the same parent
// that share a conditioning window are drawn jointly from their posterior
// Markov chain; windows that differ are drawn independently, which is exact
// once the ancestry is pinned (or unlinked) between them. A target lying
// inside another instrument's differing window is rejected.
class RandomizationDesign {
 public:
  RandomizationDesign(const Cohort& cohort, const MeiosisModel& model,
                      std::vector<AdjustmentSpec> specs);

  std::size_t num_trios() const { return num_trios_; }
  std::size_t num_instruments() const { return specs_.size(); }
  const std::vector<AdjustmentSpec>& specs() const { return specs_; }
  std::string label() const;

  const Eigen::MatrixXd& observed_instruments() const { return z_; }
  const Eigen::MatrixXd& observed_covariates() const { return x_; }
  const std::vector<double>& exposure() const { return d_; }
  const std::vector<double>& outcome() const { return y_; }
  // P(transmitted allele = 1 | adjustment set) for trio i, instrument r and
  // parent o; 0 for a parent the instrument does not involve.
  double propensity(std::size_t i, std::size_t r, Origin o) const;
  // False when the instrument cannot vary for this trio.
  bool informative(std::size_t i, std::size_t r) const;
  // Number of trios with a flank rule that fell back to a chromosome end.
  std::size_t fallback_count() const { return fallbacks_; }

  std::vector<double> adjusted(double beta0) const;

  // Draw k of stream `key`: fills `z` and `x` (resized to N x r). Trio i uses
  // its own generator keyed on (seed, key, k, i).
  void draw(std::uint64_t seed, std::uint64_t key, std::uint64_t k,
            Eigen::MatrixXd& z, Eigen::MatrixXd& x) const;
  // Clever covariates for an instrument matrix.
  void covariates(const Eigen::MatrixXd& z, Eigen::MatrixXd& x) const;

 private:
  struct Component {
    Origin origin;
    JointPropensity joint;
    std::vector<std::size_t> columns;  // instrument index of each target
  };

  const Cohort* cohort_;
  double epsilon_;
  std::vector<AdjustmentSpec> specs_;
  std::size_t num_trios_ = 0;
  std::vector<std::vector<Component>> components_;  // per trio
  std::vector<double> pi_;                          // (i * r + col) * 2 + origin
  Eigen::MatrixXd z_;
  Eigen::MatrixXd x_;
  std::vector<double> d_;
  std::vector<double> y_;
  std::size_t fallbacks_ = 0;
};

struct TestOptions {
  std::size_t threads = 1;
  Tail tail = Tail::Upper;
  // Separates the random streams of tests run on the same seed (for example
  // one per instrument before a Fisher combination).
  std::uint64_t stream_key = 0;
};

// Runs every (kind, beta0) pair on one shared set of K draws. Results are
// ordered kind-major: result[a * beta0s.size() + b].
std::vector<RandomizationResult> run_randomization(
    const RandomizationDesign& design, std::span<const StatisticKind> kinds,
    std::span<const double> beta0s, std::size_t draws, std::uint64_t seed,
    const TestOptions& options = {});

RandomizationResult almost_exact_test(const RandomizationDesign& design,
                                      const NullSpec& null, StatisticKind kind,
                                      std::size_t draws, std::uint64_t seed,
                                      const TestOptions& options = {});
RandomizationResult almost_exact_test(const Cohort& cohort, const MeiosisModel& model,
                                      const AdjustmentSpec& spec,
                                      const NullSpec& null, StatisticKind kind,
                                      std::size_t draws, std::uint64_t seed,
                                      const TestOptions& options = {});

struct ConfidenceSet {
  std::vector<double> retained;                     // grid points kept
  std::vector<std::pair<double, double>> intervals;  // runs of consecutive kept points
  std::vector<RandomizationResult> tests;            // one per grid point
};

// Grid points whose corrected p-value exceeds alpha. Every grid point reuses
// the same draws.
ConfidenceSet invert_test(const RandomizationDesign& design, StatisticKind kind,
                          std::span<const double> grid, std::size_t draws,
                          std::uint64_t seed, double alpha,
                          const TestOptions& options = {});

struct FisherResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t clamped = 0;  // inputs equal to zero that were raised to the floor
};

// -2 sum log p against chi-square with 2k degrees of freedom. Zeros are
// replaced by 1 / (draws + 1) when `draws` is given (and rejected otherwise).
FisherResult fisher_combine(std::span<const double> pvalues,
                            std::optional<std::size_t> draws = std::nullopt);

}  // namespace aemr
