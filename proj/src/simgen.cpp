#include "aemr/simgen.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "aemr/error.hpp"
#include "aemr/parallel.hpp"

namespace aemr {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

constexpr double kQuadratureTol = 1e-12;

template <class F>
double integrate(F f, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 20,
                                                                       kQuadratureTol);
}

// E[(mu + s W - t)^+] for W standard normal.
double positive_part_mean(double mu, double s, double t) {
  const double z = (mu - t) / s;
  return (mu - t) * normal_cdf(z) + s * normal_pdf(z);
}

void check_locus(const SimParams& p, Locus j, const char* what) {
  if (j < 1 || j > p.num_loci) {
    throw Error(ErrorCode::Config, std::string(what) + " locus " + std::to_string(j) +
                                       " outside 1.." + std::to_string(p.num_loci));
  }
}

double standard_normal(RngStream& rng) {
  std::normal_distribution<double> dist;
  return dist(rng);
}

}  // namespace

void SimParams::validate() const {
  if (num_trios == 0 || num_loci == 0) {
    throw Error(ErrorCode::Config, "need at least one trio and one locus");
  }
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::Config, "rho must lie in (0, 1)");
  if (!(threshold_low < threshold_high)) {
    throw Error(ErrorCode::Config, "threshold bounds need a < b");
  }
  if (!(epsilon >= 0.0 && epsilon < 0.5)) {
    throw Error(ErrorCode::Config, "epsilon must lie in [0, 0.5)");
  }
  if (!(min_cm >= 0.0 && max_cm >= min_cm && std::isfinite(max_cm))) {
    throw Error(ErrorCode::Config, "distance bounds need 0 <= c <= d < inf");
  }
  if (!(exposure_noise_var >= 0.0 && outcome_noise_var >= 0.0)) {
    throw Error(ErrorCode::Config, "noise variances must be nonnegative");
  }
  for (Locus j : unlinked_at) check_locus(*this, j, "unlinked");
  for (Locus j : instruments) check_locus(*this, j, "instrument");
  for (const auto& [j, v] : exposure_effects) check_locus(*this, j, "exposure-effect");
  for (const auto& [j, v] : pleiotropic_effects) check_locus(*this, j, "pleiotropic-effect");
}

SimParams default_params() {
  SimParams p;
  p.threshold_low = normal_quantile(0.6);
  p.threshold_high = normal_quantile(0.95);
  p.unlinked_at = {37, 62, 86, 112};
  p.instruments = {25, 50, 75, 100, 125};
  for (Locus j : {24, 49, 74, 99, 124}) p.exposure_effects[j] = std::sqrt(0.1);
  for (Locus j : {23, 27, 48, 52, 73, 77, 98, 102, 123, 127}) {
    p.pleiotropic_effects[j] = std::sqrt(0.05);
  }
  p.theta_maternal = p.theta_paternal = std::sqrt(0.3);
  p.theta_child = std::sqrt(0.75);
  p.phi_maternal = p.phi_paternal = std::sqrt(0.3);
  p.phi_child = std::sqrt(0.75);
  return p;
}

double allele_frequency(const SimParams& params) {
  const double a = params.threshold_low;
  const double b = params.threshold_high;
  return 1.0 - integrate([](double x) { return normal_cdf(x); }, a, b) / (b - a);
}

double haplotype_covariance(const SimParams& params, std::size_t lag) {
  const double q = allele_frequency(params);
  if (lag == 0) return q * (1.0 - q);
  const double a = params.threshold_low;
  const double b = params.threshold_high;
  const double r = std::pow(params.rho, static_cast<double>(lag));
  const double s = std::sqrt(1.0 - r * r);
  // E[G(X_k) | X_j = x] with G(x) = P(x > V) = clamp((x - a) / (b - a), 0, 1).
  auto cond = [&](double x) {
    const double mu = r * x;
    return (positive_part_mean(mu, s, a) - positive_part_mean(mu, s, b)) / (b - a);
  };
  const double ramp = integrate(
      [&](double x) { return (x - a) / (b - a) * cond(x) * normal_pdf(x); }, a, b);
  const double tail = integrate([&](double x) { return cond(x) * normal_pdf(x); }, b,
                                std::numeric_limits<double>::infinity());
  return ramp + tail - q * q;
}

GeneticMap simulate_map(const SimParams& params, std::uint64_t seed) {
  params.validate();
  RngStream rng(seed, {stream_tag::kMap});
  std::vector<MapLocus> loci(params.num_loci);
  for (Locus j = 1; j <= params.num_loci; ++j) {
    auto& l = loci[j - 1];
    l.id = "snp" + std::to_string(j);
    const double u = rng.uniform();
    if (j == 1) {
      l.cm_from_prev = 0.0;
    } else if (params.unlinked_at.contains(j)) {
      l.cm_from_prev = std::numeric_limits<double>::infinity();
    } else {
      l.cm_from_prev = params.min_cm + (params.max_cm - params.min_cm) * u;
    }
  }
  return GeneticMap("sim", std::move(loci));
}

std::vector<double> gen_latent(const SimParams& params, RngStream& rng) {
  const double innovation = std::sqrt(1.0 - params.rho * params.rho);
  std::vector<double> x(params.num_loci);
  x[0] = standard_normal(rng);
  for (std::size_t k = 1; k < x.size(); ++k) {
    x[k] = params.rho * x[k - 1] + innovation * standard_normal(rng);
  }
  return x;
}

Haplotype gen_haplotype(const SimParams& params, RngStream& rng) {
  const auto x = gen_latent(params, rng);
  const double width = params.threshold_high - params.threshold_low;
  Haplotype h(params.num_loci);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double v = params.threshold_low + width * rng.uniform();
    h[k] = x[k] > v ? 1 : 0;
  }
  return h;
}

ParentalHaplotypes gen_parental_haplotypes(const SimParams& params, RngStream& rng) {
  ParentalHaplotypes out;
  out.mother.maternal = gen_haplotype(params, rng);
  out.mother.paternal = gen_haplotype(params, rng);
  out.father.maternal = gen_haplotype(params, rng);
  out.father.paternal = gen_haplotype(params, rng);
  return out;
}

Confounders gen_confounders(const ParentalHaplotypes& parents, const SimParams& params,
                            RngStream& rng) {
  const double mu = 2.0 * allele_frequency(params);
  auto centre = [&](const HaplotypePair& h) {
    double sum = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) sum += h.maternal[k] + h.paternal[k];
    return sum / static_cast<double>(h.size()) - mu;
  };
  Confounders c;
  c.maternal = centre(parents.mother) + standard_normal(rng);
  c.paternal = centre(parents.father) + standard_normal(rng);
  c.child = standard_normal(rng);
  return c;
}

HaplotypePair gen_offspring(const MeiosisModel& model, const ParentalHaplotypes& parents,
                            RngStream& rng) {
  HaplotypePair child;
  child.maternal = sample_unconditional_haplotype(model, parents.mother, rng);
  child.paternal = sample_unconditional_haplotype(model, parents.father, rng);
  return child;
}

PhenotypeScales phenotype_scales(const SimParams& params, const MeiosisModel& model) {
  const std::size_t p = params.num_loci;
  const double q = allele_frequency(params);
  std::vector<double> cov(p);
  cov[0] = q * (1.0 - q);
  for (std::size_t lag = 1; lag < p; ++lag) cov[lag] = haplotype_covariance(params, lag);

  auto lag = [](Locus j, Locus k) { return j > k ? j - k : k - j; };
  // Var of the centred mean allele count of one parent.
  double pair_sum = 0.0;
  for (Locus j = 1; j <= p; ++j) {
    for (Locus k = 1; k <= p; ++k) pair_sum += cov[lag(j, k)];
  }
  const double pd = static_cast<double>(p);
  const double var_parent = 1.0 + 2.0 * pair_sum / (pd * pd);
  auto cov_genotype_parent = [&](Locus j) {
    double s = 0.0;
    for (Locus k = 1; k <= p; ++k) s += cov[lag(j, k)];
    return s / pd;
  };
  auto cov_genotypes = [&](Locus j, Locus k) {
    const Locus lo = std::min(j, k);
    const Locus hi = std::max(j, k);
    return 2.0 * model.stay_prob(lo, hi) * cov[hi - lo];
  };
  auto raw_variance = [&](const std::map<Locus, double>& effects, double cm, double cf,
                          double cc, double noise) {
    double v = (cm * cm + cf * cf) * var_parent + cc * cc + noise;
    for (const auto& [j, gj] : effects) {
      for (const auto& [k, gk] : effects) v += gj * gk * cov_genotypes(j, k);
      v += 2.0 * gj * (cm + cf) * cov_genotype_parent(j);
    }
    return v;
  };
  PhenotypeScales out;
  out.raw_exposure_var =
      raw_variance(params.exposure_effects, params.theta_maternal, params.theta_paternal,
                   params.theta_child, params.exposure_noise_var);
  out.raw_outcome_var =
      raw_variance(params.pleiotropic_effects, params.phi_maternal, params.phi_paternal,
                   params.phi_child, params.outcome_noise_var);
  if (params.standardize) {
    if (out.raw_exposure_var > 0.0) out.exposure = 1.0 / std::sqrt(out.raw_exposure_var);
    if (out.raw_outcome_var > 0.0) out.outcome = 1.0 / std::sqrt(out.raw_outcome_var);
  }
  return out;
}

Phenotypes gen_phenotypes(const HaplotypePair& offspring, const Confounders& confounders,
                          const SimParams& params, const PhenotypeScales& scales,
                          RngStream& rng) {
  double genetic_d = 0.0;
  for (const auto& [j, g] : params.exposure_effects) genetic_d += g * offspring.genotype(j);
  double genetic_y = 0.0;
  for (const auto& [j, g] : params.pleiotropic_effects) genetic_y += g * offspring.genotype(j);
  const double nu = std::sqrt(params.exposure_noise_var) * standard_normal(rng);
  const double upsilon = std::sqrt(params.outcome_noise_var) * standard_normal(rng);
  Phenotypes out;
  out.exposure = scales.exposure *
                 (genetic_d + params.theta_maternal * confounders.maternal +
                  params.theta_paternal * confounders.paternal +
                  params.theta_child * confounders.child + nu);
  out.outcome = params.beta * out.exposure +
                scales.outcome * (genetic_y + params.phi_maternal * confounders.maternal +
                                  params.phi_paternal * confounders.paternal +
                                  params.phi_child * confounders.child + upsilon);
  return out;
}

SimCohort make_cohort(const SimParams& params, std::uint64_t seed) {
  params.validate();
  GeneticMap map = simulate_map(params, seed);
  const MeiosisModel model(map, params.epsilon);
  SimCohort out;
  out.scales = phenotype_scales(params, model);

  std::vector<Trio> trios(params.num_trios);
  parallel_for(params.num_trios, params.threads, [&](std::size_t i) {
    RngStream rng(seed, {stream_tag::kFamily, i});
    const auto parents = gen_parental_haplotypes(params, rng);
    const auto conf = gen_confounders(parents, params, rng);
    auto child = gen_offspring(model, parents, rng);
    const auto ph = gen_phenotypes(child, conf, params, out.scales, rng);
    Trio& t = trios[i];
    t.family_id = "fam" + std::to_string(i + 1);
    t.mother = parents.mother;
    t.father = parents.father;
    t.offspring = std::move(child);
    t.exposure = ph.exposure;
    t.outcome = ph.outcome;
  });
  out.cohort = Cohort(std::move(map), std::move(trios));

  std::set<Locus> jd, jy, j0;
  for (const auto& [j, g] : params.exposure_effects) {
    if (g != 0.0) jd.insert(j);
  }
  for (const auto& [j, g] : params.pleiotropic_effects) {
    if (g != 0.0) jy.insert(j);
  }
  for (Locus j = 1; j <= params.num_loci; ++j) {
    if (!jd.contains(j) && !jy.contains(j)) j0.insert(j);
  }
  out.roles = VariantRoles(std::move(jd), std::move(jy), std::move(j0));
  for (Locus j : params.instruments) {
    out.specs.push_back({j, params.instrument_side, LocusRadius{params.window_radius}});
  }
  return out;
}

}  // namespace aemr
