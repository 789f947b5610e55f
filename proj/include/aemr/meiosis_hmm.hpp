#pragma once

// Haldane's hidden Markov model of meiosis. The hidden state at locus k is the
// ancestry indicator U_k in {maternal, paternal}: which of the parent's two
// haplotypes the transmitted allele at k was copied from. Crossovers follow a
// Poisson process along the map, and an allele is flipped by de novo mutation
// with probability epsilon.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "aemr/genetics_data.hpp"
#include "aemr/rng.hpp"

namespace aemr {

// Indexed by Origin: [0] = maternal, [1] = paternal.
using StatePair = std::array<double, 2>;
// T[u][v] = P(U_b = v | U_a = u).
using TransitionMatrix = std::array<StatePair, 2>;

// Probability of an even number of crossovers over `morgans`:
// (1 + exp(-2d)) / 2. Accepts +infinity (returns exactly 1/2).
double transition_stay_prob(double morgans);

// P(Z = z | parental allele a) = 1 - epsilon if z == a, epsilon otherwise.
double emission_prob(Allele z, Allele parent_allele, double epsilon);

class MeiosisModel {
 public:
  // Map distances are read in centimorgans and converted to Morgans here, once.
  MeiosisModel(GeneticMap map, double epsilon);

  const GeneticMap& map() const { return map_; }
  double epsilon() const { return epsilon_; }
  std::size_t num_loci() const { return map_.size(); }

  double morgans_from_prev(Locus j) const;
  // Total map length of the intervals a+1..b (a <= b); +infinity when any of
  // them is unlinked.
  double morgans_between(Locus a, Locus b) const;
  // P(U_b = U_a).
  double stay_prob(Locus a, Locus b) const;
  TransitionMatrix transition(Locus a, Locus b) const;

  double emission(Allele z, Allele parent_allele) const {
    return emission_prob(z, parent_allele, epsilon_);
  }

 private:
  GeneticMap map_;
  double epsilon_;
  // finite_prefix_[j] = sum of finite Morgan distances of intervals 2..j;
  // unlinked_prefix_[j] counts the infinite ones.
  std::vector<double> finite_prefix_;
  std::vector<std::size_t> unlinked_prefix_;
};

// Inclusive range of loci.
struct LocusRange {
  Locus first = 1;
  Locus last = 1;
  std::size_t size() const { return last + 1 - first; }
};

// e[k-1][u] = P(Z_k = z_k | U_k = u) for every locus of the chromosome.
std::vector<StatePair> emission_table(const MeiosisModel& model,
                                      const HaplotypePair& parent,
                                      const Haplotype& child);

// One direction of a rescaled forward-backward sweep. Each stored column is
// normalised to sum to one; `log_scale` holds the log of the normaliser that
// was divided out at each locus.
struct ScaledWeights {
  LocusRange range;
  std::vector<StatePair> weights;
  std::vector<double> log_scale;

  const StatePair& at(Locus k) const { return weights[k - range.first]; }
};

struct FBWeights {
  ScaledWeights alpha;
  ScaledWeights beta;

  // Logs of the unnormalised recursions, recovered from the scale factors.
  double log_alpha(Locus k, Origin u) const;
  double log_beta(Locus k, Origin u) const;
  // log P(Z over the range), from the forward normalisers.
  double log_likelihood() const;
  // P(U_k = u | all emissions in the range).
  StatePair posterior(Locus k) const;
};

// alpha_first(u) = initial(u) * e_first(u); alpha_k follows the usual
// recursion. Throws ImpossibleHaplotype if a column vanishes.
ScaledWeights forward_weights(const MeiosisModel& model,
                              std::span<const StatePair> emissions,
                              LocusRange range,
                              StatePair initial = {0.5, 0.5});
// beta_last = terminal; beta_k(u) = sum_v T(k->k+1)[u][v] e_{k+1}(v) beta_{k+1}(v).
ScaledWeights backward_weights(const MeiosisModel& model,
                               std::span<const StatePair> emissions,
                               LocusRange range,
                               StatePair terminal = {1.0, 1.0});

FBWeights forward_backward(const MeiosisModel& model,
                           std::span<const StatePair> emissions,
                           LocusRange range);
// Forward-backward of `child` against `parent` restricted to `window`, with a
// uniform prior on the ancestry of the first locus of the window.
FBWeights forward_backward(const MeiosisModel& model, const HaplotypePair& parent,
                           const Haplotype& child, LocusRange window);

// Conditioning set B = {1..lower} U {upper..p}: loci strictly between
// `lower` and `upper` are unobserved. lower may be 0 and upper may be p + 1
// (no flank on that side).
struct ConditioningWindow {
  Locus lower = 0;
  Locus upper = 0;

  bool contains(Locus j) const { return j > lower && j < upper; }
  bool operator==(const ConditioningWindow&) const = default;
};

// Two heterozygous loci of the parent bracketing the instrument.
struct Flanks {
  Locus left = 0;
  Locus right = 0;
};

struct Propensity {
  double pi = 0.5;  // P(transmitted allele = 1 | Z_B)
  Locus locus = 0;
  Origin side = Origin::Maternal;
  StatePair ancestry{0.5, 0.5};  // P(U_j = u | Z_B)

  bool informative() const { return pi > 0.0 && pi < 1.0; }
};

// Posterior law of the ancestry indicators at a set of targets inside one
// window, stored as a Markov chain: first[u] = P(U_{t1} = u | Z_B) and
// steps[k][u][v] = P(U_{t(k+2)} = v | U_{t(k+1)} = u, Z_B).
class JointPropensity {
 public:
  JointPropensity() = default;
  JointPropensity(std::vector<Locus> targets, StatePair first,
                  std::vector<TransitionMatrix> steps);

  const std::vector<Locus>& targets() const { return targets_; }
  std::size_t size() const { return targets_.size(); }
  const StatePair& first() const { return first_; }
  const std::vector<TransitionMatrix>& steps() const { return steps_; }

  double probability(std::span<const Origin> ancestry) const;
  // Mass function over {m,f}^r; bit k of the index is set when target k is
  // paternal. Only for r <= 24.
  std::vector<double> table() const;
  std::vector<StatePair> marginals() const;

  // Appends one ancestry draw per target to `out`.
  void sample(RngStream& rng, std::vector<Origin>& out) const;

 private:
  std::vector<Locus> targets_;
  StatePair first_{0.5, 0.5};
  std::vector<TransitionMatrix> steps_;
};

Propensity propensity_score(const MeiosisModel& model, const HaplotypePair& parent,
                            const Haplotype& child, Locus target,
                            ConditioningWindow window,
                            Origin side = Origin::Maternal);

// epsilon = 0 shortcut: the heterozygous flanks pin the ancestry, so only loci
// in [flanks.left, flanks.right] are visited. `window` defaults to the flanks
// themselves and must satisfy left <= lower < target < upper <= right.
Propensity propensity_score_flanked(const MeiosisModel& model,
                                    const HaplotypePair& parent,
                                    const Haplotype& child, Locus target,
                                    Flanks flanks,
                                    std::optional<ConditioningWindow> window = {},
                                    Origin side = Origin::Maternal);

JointPropensity joint_propensity(const MeiosisModel& model,
                                 const HaplotypePair& parent,
                                 const Haplotype& child,
                                 std::span<const Locus> targets,
                                 ConditioningWindow window);

// P(transmitted allele = 1) at each target of `joint`.
std::vector<double> allele_propensities(const JointPropensity& joint,
                                        const HaplotypePair& parent,
                                        double epsilon);

// Draws ancestry from the joint propensity and then alleles through the
// emission model.
std::vector<Allele> sample_alleles(const JointPropensity& joint,
                                   const HaplotypePair& parent, double epsilon,
                                   RngStream& rng);
// Same draw, written into `out` (one slot per target) without allocating.
void sample_alleles(const JointPropensity& joint, const HaplotypePair& parent,
                    double epsilon, RngStream& rng, std::span<Allele> out);

std::vector<Allele> sample_conditional_haplotype(
    const MeiosisModel& model, const HaplotypePair& parent,
    const Haplotype& child, std::span<const Locus> targets,
    ConditioningWindow window, RngStream& rng);

Haplotype sample_unconditional_haplotype(const MeiosisModel& model,
                                         const HaplotypePair& parent,
                                         RngStream& rng);

// Law of the offspring genotype Z = Z^m + Z^f: {P(0), P(1), P(2)}.
std::array<double, 3> genotype_propensity(const Propensity& maternal,
                                          const Propensity& paternal);

}  // namespace aemr
