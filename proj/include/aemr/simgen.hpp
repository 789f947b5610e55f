#pragma once

// Synthetic trio cohorts: parental haplotypes with linkage disequilibrium from
// thresholded AR(1) Gaussians, family-level confounders, offspring drawn from
// the meiosis model, and linear structural equations for exposure and outcome.

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "aemr/adjustment.hpp"
#include "aemr/genetics_data.hpp"
#include "aemr/meiosis_hmm.hpp"
#include "aemr/rng.hpp"

namespace aemr {

struct SimParams {
  std::size_t num_trios = 15000;
  std::size_t num_loci = 150;
  double rho = 0.75;             // lag-one correlation of the latent Gaussians
  double threshold_low = 0.0;    // thresholds V ~ Unif(threshold_low, threshold_high)
  double threshold_high = 0.0;
  double epsilon = 1e-8;
  double min_cm = 0.0;           // inter-locus distances ~ Unif(min_cm, max_cm)
  double max_cm = 0.75;
  std::set<Locus> unlinked_at;   // loci whose distance from the previous is infinite
  std::vector<Locus> instruments;
  std::map<Locus, double> exposure_effects;     // gamma
  std::map<Locus, double> pleiotropic_effects;  // delta
  double theta_maternal = 0.0;
  double theta_paternal = 0.0;
  double theta_child = 0.0;
  double phi_maternal = 0.0;
  double phi_paternal = 0.0;
  double phi_child = 0.0;
  double beta = 0.0;
  double exposure_noise_var = 0.7;
  double outcome_noise_var = 0.7;
  // Rescale the genetic, confounder and noise terms of D and Y so that both
  // have unit variance (Y at beta = 0), using moments computed on the map.
  bool standardize = true;
  // Loci left unobserved on each side of an instrument in the adjustment set.
  std::size_t window_radius = 1;
  InstrumentSide instrument_side = InstrumentSide::Genotype;
  std::size_t threads = 1;

  void validate() const;
};

SimParams default_params();

// Per-haplotype probability of allele 1: 1 - (1/(b-a)) * integral_a^b Phi.
double allele_frequency(const SimParams& params);
// Covariance of two alleles of one parental haplotype `lag` loci apart.
double haplotype_covariance(const SimParams& params, std::size_t lag);

GeneticMap simulate_map(const SimParams& params, std::uint64_t seed);

struct ParentalHaplotypes {
  HaplotypePair mother;
  HaplotypePair father;
};

// Latent AR(1) path with unit marginal variance and lag-one correlation rho.
std::vector<double> gen_latent(const SimParams& params, RngStream& rng);
// Allele k is 1 when the latent value exceeds a fresh Unif(a, b) threshold.
Haplotype gen_haplotype(const SimParams& params, RngStream& rng);
ParentalHaplotypes gen_parental_haplotypes(const SimParams& params, RngStream& rng);

struct Confounders {
  double maternal = 0.0;
  double paternal = 0.0;
  double child = 0.0;
};

Confounders gen_confounders(const ParentalHaplotypes& parents, const SimParams& params,
                            RngStream& rng);

HaplotypePair gen_offspring(const MeiosisModel& model, const ParentalHaplotypes& parents,
                            RngStream& rng);

// Multipliers applied to the non-causal parts of D and Y.
struct PhenotypeScales {
  double exposure = 1.0;
  double outcome = 1.0;
  double raw_exposure_var = 1.0;  // before scaling
  double raw_outcome_var = 1.0;
};

PhenotypeScales phenotype_scales(const SimParams& params, const MeiosisModel& model);

struct Phenotypes {
  double exposure = 0.0;
  double outcome = 0.0;
};

Phenotypes gen_phenotypes(const HaplotypePair& offspring, const Confounders& confounders,
                          const SimParams& params, const PhenotypeScales& scales,
                          RngStream& rng);

struct SimCohort {
  Cohort cohort;
  VariantRoles roles;
  std::vector<AdjustmentSpec> specs;
  PhenotypeScales scales;
};

// Map from stream (seed, map); family i from stream (seed, family, i).
SimCohort make_cohort(const SimParams& params, std::uint64_t seed);

}  // namespace aemr
