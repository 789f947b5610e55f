#include <doctest.h>

#include <cmath>
#include <numbers>

#include "aemr/error.hpp"
#include "aemr/simgen.hpp"

using namespace aemr;

namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); }
double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct Moments {
  double mean = 0, var = 0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  for (double x : v) m.mean += x;
  m.mean /= v.size();
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= v.size() - 1;
  return m;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ma = moments(a), mb = moments(b);
  double c = 0;
  for (std::size_t i = 0; i < a.size(); ++i) c += (a[i] - ma.mean) * (b[i] - mb.mean);
  return c / (a.size() - 1) / std::sqrt(ma.var * mb.var);
}

const SimCohort& big() {
  static const SimCohort sim = [] {
    auto params = default_params();
    params.num_trios = 10000;
    params.threads = 4;
    return make_cohort(params, 77);
  }();
  return sim;
}

}  // namespace

TEST_CASE("default parameters") {
  const auto p = default_params();
  CHECK(p.num_loci == 150);
  CHECK(p.rho == 0.75);
  CHECK(p.threshold_low == doctest::Approx(0.253347).epsilon(1e-5));
  CHECK(p.threshold_high == doctest::Approx(1.644854).epsilon(1e-5));
  CHECK(p.unlinked_at == std::set<Locus>{37, 62, 86, 112});
  CHECK(p.instruments == std::vector<Locus>{25, 50, 75, 100, 125});
  CHECK(p.exposure_effects.size() == 5);
  CHECK(p.pleiotropic_effects.size() == 10);
  CHECK(p.exposure_effects.at(24) == doctest::Approx(std::sqrt(0.1)));
  CHECK(p.pleiotropic_effects.at(127) == doctest::Approx(std::sqrt(0.05)));
  CHECK_NOTHROW(p.validate());

  auto bad = p;
  bad.rho = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = p;
  bad.instruments.push_back(151);
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("allele frequency") {
  const auto p = default_params();
  const double a = p.threshold_low, b = p.threshold_high;
  const double closed = 1.0 - (b * cdf(b) + phi(b) - a * cdf(a) - phi(a)) / (b - a);
  CHECK(allele_frequency(p) == doctest::Approx(closed).epsilon(1e-10));

  RngStream rng(1);
  const int n = 20000;
  int ones = 0;
  for (int k = 0; k < n; ++k) ones += gen_haplotype(p, rng)[74];
  const double se = std::sqrt(closed * (1 - closed) / n);
  CHECK(std::abs(ones / double(n) - closed) < 3 * se);
}

TEST_CASE("latent process") {
  const auto p = default_params();
  RngStream rng(2);
  const int n = 20000;
  std::vector<double> x10(n), x11(n);
  for (int k = 0; k < n; ++k) {
    const auto x = gen_latent(p, rng);
    x10[k] = x[9];
    x11[k] = x[10];
  }
  CHECK(std::abs(moments(x10).var - 1.0) < 0.05);
  const double se = (1 - 0.75 * 0.75) / std::sqrt(double(n));
  CHECK(std::abs(correlation(x10, x11) - 0.75) < 3 * se);
}

TEST_CASE("haplotype covariance") {
  const auto p = default_params();
  RngStream rng(3);
  const int n = 40000;
  std::vector<std::vector<double>> cols(4, std::vector<double>(n));
  for (int k = 0; k < n; ++k) {
    const auto h = gen_haplotype(p, rng);
    cols[0][k] = h[20];
    cols[1][k] = h[21];
    cols[2][k] = h[23];
    cols[3][k] = h[30];
  }
  for (auto [c, lag] : {std::pair{1, 1}, std::pair{2, 3}, std::pair{3, 10}}) {
    std::vector<double> prod(n);
    const double m0 = moments(cols[0]).mean, m1 = moments(cols[c]).mean;
    for (int k = 0; k < n; ++k) prod[k] = (cols[0][k] - m0) * (cols[c][k] - m1);
    const auto pm = moments(prod);
    CHECK(std::abs(pm.mean - haplotype_covariance(p, lag)) < 3 * std::sqrt(pm.var / n));
  }
  CHECK(haplotype_covariance(p, 0) ==
        doctest::Approx(allele_frequency(p) * (1 - allele_frequency(p))));
  CHECK(haplotype_covariance(p, 1) > haplotype_covariance(p, 2));
  CHECK(std::abs(haplotype_covariance(p, 60)) < 1e-6);
}

TEST_CASE("nearly independent latent values") {
  auto p = default_params();
  p.rho = 1e-6;
  RngStream rng(4);
  const int n = 20000;
  std::vector<double> a(n), b(n);
  for (int k = 0; k < n; ++k) {
    const auto h = gen_haplotype(p, rng);
    a[k] = h[40];
    b[k] = h[41];
  }
  CHECK(std::abs(correlation(a, b)) < 3 / std::sqrt(double(n)));
  CHECK(std::abs(haplotype_covariance(p, 1)) < 1e-6);
}

TEST_CASE("map") {
  const auto p = default_params();
  const auto map = simulate_map(p, 5);
  REQUIRE(map.size() == 150);
  CHECK(map.at(1).id == "snp1");
  for (Locus j = 2; j <= 150; ++j) {
    if (p.unlinked_at.contains(j)) {
      CHECK(std::isinf(map.cm_from_prev(j)));
    } else {
      CHECK(map.cm_from_prev(j) >= 0.0);
      CHECK(map.cm_from_prev(j) <= 0.75);
    }
  }
  CHECK(simulate_map(p, 5) == map);
  CHECK_FALSE(simulate_map(p, 6) == map);
}

TEST_CASE("confounders") {
  const auto p = default_params();
  RngStream rng(6);
  const int n = 5000;
  std::vector<double> cm(n), cc(n), count(n);
  for (int k = 0; k < n; ++k) {
    const auto parents = gen_parental_haplotypes(p, rng);
    const auto c = gen_confounders(parents, p, rng);
    cm[k] = c.maternal;
    cc[k] = c.child;
    double s = 0;
    for (Locus j = 1; j <= p.num_loci; ++j) s += parents.mother.genotype(j);
    count[k] = s;
  }
  const auto m = moments(cm);
  CHECK(std::abs(m.mean) < 3 * std::sqrt(m.var / n));
  CHECK(std::abs(m.var - 1.0) < 0.1);
  CHECK(correlation(cm, count) > 0.0);
  const auto c = moments(cc);
  CHECK(std::abs(c.mean) < 3 / std::sqrt(double(n)));
  CHECK(std::abs(c.var - 1.0) < 0.06);
}

TEST_CASE("offspring without recombination copy a parental haplotype") {
  auto p = default_params();
  p.max_cm = 0.0;
  p.unlinked_at.clear();
  const MeiosisModel model(simulate_map(p, 1), 0.0);
  RngStream rng(7);
  for (int k = 0; k < 20; ++k) {
    const auto parents = gen_parental_haplotypes(p, rng);
    const auto child = gen_offspring(model, parents, rng);
    CHECK((child.maternal == parents.mother.maternal ||
           child.maternal == parents.mother.paternal));
    CHECK((child.paternal == parents.father.maternal ||
           child.paternal == parents.father.paternal));
  }
}

TEST_CASE("phenotype equations") {
  auto p = default_params();
  p.exposure_effects.clear();
  p.pleiotropic_effects.clear();
  p.theta_maternal = p.theta_paternal = p.theta_child = 0;
  p.phi_maternal = p.phi_paternal = p.phi_child = 0;
  p.exposure_noise_var = 1.0;
  p.outcome_noise_var = 1.0;
  p.num_trios = 4000;
  auto sim = make_cohort(p, 8);
  std::vector<double> d, y;
  for (const auto& t : sim.cohort.trios()) {
    d.push_back(t.exposure);
    y.push_back(t.outcome);
  }
  const double n = d.size();
  CHECK(std::abs(moments(d).mean) < 3 / std::sqrt(n));
  CHECK(std::abs(moments(d).var - 1) < 0.1);
  CHECK(std::abs(moments(y).var - 1) < 0.1);
  CHECK(std::abs(correlation(d, y)) < 3 / std::sqrt(n));

  p.outcome_noise_var = 0.0;
  p.beta = 1.0;
  sim = make_cohort(p, 8);
  for (const auto& t : sim.cohort.trios()) CHECK(t.outcome == t.exposure);
}

TEST_CASE("phenotype scales") {
  const auto p = default_params();
  const MeiosisModel model(simulate_map(p, 1), p.epsilon);
  const auto s = phenotype_scales(p, model);
  CHECK(s.exposure == doctest::Approx(1 / std::sqrt(s.raw_exposure_var)));
  CHECK(s.outcome == doctest::Approx(1 / std::sqrt(s.raw_outcome_var)));
  CHECK(s.raw_exposure_var > 1.0);
  auto raw = p;
  raw.standardize = false;
  const auto r = phenotype_scales(raw, model);
  CHECK(r.exposure == 1.0);
  CHECK(r.outcome == 1.0);
}

TEST_CASE("simulated cohort moments") {
  const auto& sim = big();
  std::vector<double> d, y;
  std::vector<double> g[6];
  const Locus loci[] = {24, 25, 50, 75, 100, 125};
  for (const auto& t : sim.cohort.trios()) {
    d.push_back(t.exposure);
    y.push_back(t.outcome);
    for (int k = 0; k < 6; ++k) g[k].push_back(t.offspring.genotype(loci[k]));
  }
  CHECK(std::abs(moments(d).var - 1) < 0.1);
  CHECK(std::abs(moments(y).var - 1) < 0.1);
  const double se = 1 / std::sqrt(double(d.size()));
  for (int k = 1; k < 5; ++k) CHECK(std::abs(correlation(g[k], g[k + 1])) < 3 * se);
  CHECK(correlation(g[0], g[1]) > 0.2);
  CHECK(correlation(g[0], d) > 0.0);
}

TEST_CASE("make_cohort is reproducible") {
  auto p = default_params();
  p.num_trios = 50;
  const auto a = make_cohort(p, 9);
  p.threads = 4;
  const auto b = make_cohort(p, 9);
  CHECK(a.cohort == b.cohort);
  const auto c = make_cohort(p, 10);
  CHECK_FALSE(a.cohort == c.cohort);
  CHECK(a.cohort.trios()[0].family_id == "fam1");

  CHECK(a.roles.exposure_causal() == std::set<Locus>{24, 49, 74, 99, 124});
  CHECK(a.roles.pleiotropic().size() == 10);
  CHECK(a.roles.null().size() == 135);
  REQUIRE(a.specs.size() == 5);
  CHECK(a.specs[2].instrument == 75);
  CHECK(a.specs[2].side == InstrumentSide::Genotype);
}
