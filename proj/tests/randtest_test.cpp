#include <doctest.h>

#include <cmath>
#include <limits>

#include "aemr/error.hpp"
#include "aemr/randtest.hpp"
#include "aemr/simgen.hpp"
#include "oracles.hpp"

using namespace aemr;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an aemr::Error");
  return ErrorCode::Parse;
}

SimCohort small_sim(std::size_t n, std::uint64_t seed, double beta = 0.0) {
  auto params = default_params();
  params.num_trios = n;
  params.beta = beta;
  return make_cohort(params, seed);
}

Eigen::MatrixXd column(std::initializer_list<double> v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

}  // namespace

TEST_CASE("adjusted outcome") {
  CHECK(adjusted_outcome(0.73, 1.11, -0.3) == doctest::Approx(1.063));
  CHECK(adjusted_outcome(3.30, 1.43, -0.3) == doctest::Approx(3.729));
  CHECK(adjusted_outcome(2.5, 7.0, 0.0) == 2.5);
  CHECK_THROWS_AS(NullSpec(std::numeric_limits<double>::quiet_NaN()), Error);
  CHECK_THROWS_AS(NullSpec(std::numeric_limits<double>::infinity()), Error);
}

TEST_CASE("clever covariate") {
  CHECK(clever_covariate(1, 0.5).value == 2.0);
  CHECK(clever_covariate(0, 0.5).value == -2.0);
  CHECK(clever_covariate(1, 0.9).value == doctest::Approx(1.0 / 0.9));
  for (double pi : {0.0, 1.0}) {
    for (Allele z : {Allele{0}, Allele{1}}) {
      const auto c = clever_covariate(z, pi);
      CHECK(c.value == 0.0);
      CHECK_FALSE(c.informative);
    }
  }
  CHECK(genotype_clever_covariate(1, 0.5, 0.5).value == 0.0);
  CHECK(genotype_clever_covariate(2, 0.5, 0.5).value == doctest::Approx(2.0));
  CHECK(genotype_clever_covariate(0, 0.2, 1.0).value == doctest::Approx(-1.2 / 0.16));
  CHECK_FALSE(genotype_clever_covariate(1, 1.0, 0.0).informative);
}

TEST_CASE("statistic parsing") {
  CHECK(parse_statistic("plain_F") == StatisticKind::PlainF);
  CHECK(parse_statistic("clever_F") == StatisticKind::CleverF);
  CHECK(parse_statistic("weighted_diff") == StatisticKind::WeightedDiff);
  CHECK(to_string(StatisticKind::CleverF) == "clever_F");
  CHECK_THROWS_AS(parse_statistic("t"), Error);
  CHECK(parse_tail("lower") == Tail::Lower);
}

TEST_CASE("statistic examples") {
  const std::vector<double> q{1.0, -1.0};
  const auto w = compute_statistic(StatisticKind::WeightedDiff, q, column({1, 0}),
                                   column({2, -2}));
  CHECK(w.value == doctest::Approx(4.0));

  const std::vector<double> q4{0.3, -1.0, 2.0, 0.1};
  const auto flat = compute_statistic(StatisticKind::PlainF, q4, column({1, 1, 1, 1}),
                                      Eigen::MatrixXd(4, 0));
  CHECK(flat.value == 0.0);
  CHECK_FALSE(flat.informative);
}

TEST_CASE("F statistics match an independent least-squares fit") {
  const auto sim = small_sim(200, 3);
  const MeiosisModel model(sim.cohort.map(), default_params().epsilon);
  const RandomizationDesign design(sim.cohort, model, sim.specs);
  const auto& z = design.observed_instruments();
  const auto& x = design.observed_covariates();
  for (double b : {0.0, 0.5}) {
    const auto q = design.adjusted(b);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(q.data(), q.size());

    Eigen::MatrixXd zx(z.rows(), z.cols() + x.cols());
    zx << z, x;
    CHECK(compute_statistic(StatisticKind::CleverF, q, z, x).value ==
          doctest::Approx(oracle::regression_f(zx, y)).epsilon(1e-8));
    CHECK(compute_statistic(StatisticKind::PlainF, q, z, x).value ==
          doctest::Approx(oracle::regression_f(z, y)).epsilon(1e-8));
    CHECK(compute_statistic(StatisticKind::WeightedDiff, q, z, x).value ==
          doctest::Approx((x.transpose() * y).norm()).epsilon(1e-10));
  }
}

TEST_CASE("design propensities and covariates") {
  const auto sim = small_sim(60, 4);
  const MeiosisModel model(sim.cohort.map(), default_params().epsilon);
  const RandomizationDesign design(sim.cohort, model, sim.specs);
  const auto& trios = sim.cohort.trios();
  for (std::size_t i = 0; i < trios.size(); ++i) {
    for (std::size_t r = 0; r < sim.specs.size(); ++r) {
      const Locus j = sim.specs[r].instrument;
      double pi[2];
      for (Origin o : {Origin::Maternal, Origin::Paternal}) {
        const auto w = resolve_window(sim.specs[r], sim.cohort.map(), trios[i].parent(o));
        pi[index_of(o)] = propensity_score(model, trios[i].parent(o), trios[i].transmitted(o),
                                           j, w.window, o)
                              .pi;
        CHECK(design.propensity(i, r, o) == doctest::Approx(pi[index_of(o)]).epsilon(1e-12));
      }
      const int g = trios[i].offspring.genotype(j);
      CHECK(design.observed_instruments()(i, r) == g);
      CHECK(design.observed_covariates()(i, r) ==
            doctest::Approx(genotype_clever_covariate(g, pi[0], pi[1]).value));
    }
  }
  CHECK(design.label() == "25:genotype+50:genotype+75:genotype+100:genotype+125:genotype");
}

TEST_CASE("homozygous parents give p = 1") {
  std::vector<Trio> trios;
  const auto map = GeneticMap("h", {{"a", 0}, {"b", 1}, {"c", 1}});
  RngStream rng(5);
  for (int i = 0; i < 12; ++i) {
    Trio t;
    t.family_id = std::to_string(i);
    const Allele a = rng.uniform() < 0.5;
    t.mother = {{0, a, 1}, {1, a, 0}};
    t.father = {{1, a, 1}, {0, a, 1}};
    t.offspring = {{0, a, 0}, {1, a, 1}};
    t.exposure = rng.uniform();
    t.outcome = rng.uniform() + a;
    trios.push_back(t);
  }
  const Cohort cohort(map, trios);
  const MeiosisModel model(map, 0.0);
  for (auto kind : {StatisticKind::PlainF, StatisticKind::CleverF, StatisticKind::WeightedDiff}) {
    const auto res = almost_exact_test(cohort, model,
                                       {2, InstrumentSide::Maternal, LocusRadius{1}},
                                       NullSpec(0.0), kind, 50, 1);
    CHECK(res.p_value == 1.0);
    CHECK(res.num_geq == 50);
    CHECK(res.p_value_corrected == 1.0);
  }
}

TEST_CASE("Monte Carlo p-values approach the enumerated p-value") {
  RngStream rng(6);
  const oracle::Stat stats[] = {oracle::Stat::Plain, oracle::Stat::Clever,
                                oracle::Stat::Weighted};
  const StatisticKind kinds[] = {StatisticKind::PlainF, StatisticKind::CleverF,
                                 StatisticKind::WeightedDiff};
  for (int rep = 0; rep < 6; ++rep) {
    const auto inst = oracle::small_instance(rng, 8, 7, 4, rep % 2 ? 1e-3 : 0.0);
    const Cohort cohort(inst.map, inst.trios);
    const MeiosisModel model(inst.map, inst.eps);
    const RandomizationDesign design(cohort, model, {inst.spec});
    for (std::size_t i = 0; i < inst.pi.size(); ++i) {
      CHECK(design.propensity(i, 0, Origin::Maternal) ==
            doctest::Approx(inst.pi[i]).epsilon(1e-10));
    }
    const int s = rep % 3;
    const double exact = oracle::exact_pvalue(inst.pi, inst.z, [&](const std::vector<int>& z) {
      return oracle::statistic(stats[s], inst.q, z, inst.pi);
    });
    const auto res = almost_exact_test(design, NullSpec(0.0), kinds[s], 20000, 100 + rep);
    const double se = std::sqrt(std::max(exact * (1 - exact), 1e-4) / 20000);
    CHECK(std::abs(res.p_value - exact) < 5 * se);
  }
}

TEST_CASE("results do not depend on the thread count") {
  const auto sim = small_sim(300, 7);
  const MeiosisModel model(sim.cohort.map(), default_params().epsilon);
  const RandomizationDesign design(sim.cohort, model, sim.specs);
  const StatisticKind kinds[] = {StatisticKind::PlainF, StatisticKind::CleverF};
  const double betas[] = {0.0, 0.5};
  TestOptions one, many;
  many.threads = 4;
  const auto a = run_randomization(design, kinds, betas, 64, 9, one);
  const auto b = run_randomization(design, kinds, betas, 64, 9, many);
  REQUIRE(a.size() == 4);
  for (std::size_t s = 0; s < a.size(); ++s) {
    CHECK(a[s].num_geq == b[s].num_geq);
    CHECK(a[s].observed_stat == b[s].observed_stat);
    CHECK(a[s].p_value == b[s].p_value);
  }
  CHECK(a[1].kind == StatisticKind::PlainF);
  CHECK(a[1].beta0 == 0.5);
  CHECK(a[2].kind == StatisticKind::CleverF);
  const auto c = run_randomization(design, kinds, betas, 64, 10, one);
  bool differs = false;
  for (std::size_t s = 0; s < a.size(); ++s) differs |= a[s].num_geq != c[s].num_geq;
  CHECK(differs);
}

TEST_CASE("p-value bookkeeping and tails") {
  const auto sim = small_sim(150, 8);
  const MeiosisModel model(sim.cohort.map(), default_params().epsilon);
  const RandomizationDesign design(sim.cohort, model, {sim.specs[0]});
  const auto up = almost_exact_test(design, NullSpec(0.0), StatisticKind::CleverF, 99, 3);
  CHECK(up.p_value == doctest::Approx(up.num_geq / 99.0));
  CHECK(up.p_value_corrected == doctest::Approx((up.num_geq + 1) / 100.0));
  CHECK(up.draws == 99);
  CHECK(up.seed == 3);
  TestOptions lower;
  lower.tail = Tail::Lower;
  const auto down = almost_exact_test(design, NullSpec(0.0), StatisticKind::CleverF, 99, 3,
                                      lower);
  CHECK(up.num_geq + down.num_geq >= 99);
  CHECK(code_of([&] {
          almost_exact_test(design, NullSpec(0.0), StatisticKind::CleverF, 0, 3);
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("design rejects overlapping and duplicate instruments") {
  const auto sim = small_sim(20, 9);
  const MeiosisModel model(sim.cohort.map(), default_params().epsilon);
  CHECK(code_of([&] {
          RandomizationDesign(sim.cohort, model,
                              {{25, InstrumentSide::Maternal, ConditioningWindow{22, 28}},
                               {26, InstrumentSide::Maternal, ConditioningWindow{24, 30}}});
        }) == ErrorCode::InvalidConditioning);
  CHECK(code_of([&] {
          RandomizationDesign(sim.cohort, model,
                              {{25, InstrumentSide::Maternal, LocusRadius{1}},
                               {25, InstrumentSide::Genotype, LocusRadius{2}}});
        }) == ErrorCode::Config);
  // Same window: drawn jointly, accepted.
  CHECK_NOTHROW(RandomizationDesign(
      sim.cohort, model,
      {{25, InstrumentSide::Maternal, ConditioningWindow{22, 28}},
       {26, InstrumentSide::Maternal, ConditioningWindow{22, 28}}}));

  const auto tiny = small_sim(5, 9);
  const RandomizationDesign design(tiny.cohort, model, {tiny.specs[0], tiny.specs[1]});
  CHECK(code_of([&] {
          almost_exact_test(design, NullSpec(0.0), StatisticKind::CleverF, 10, 1);
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("jointly drawn instruments keep the linkage between them") {
  const auto sim = small_sim(40, 10);
  const MeiosisModel model(sim.cohort.map(), default_params().epsilon);
  const RandomizationDesign design(
      sim.cohort, model,
      {{25, InstrumentSide::Maternal, ConditioningWindow{22, 28}},
       {26, InstrumentSide::Maternal, ConditioningWindow{22, 28}}});
  // Empirical joint law for one trio against the library's joint table.
  std::size_t i = 0;
  const auto& t = sim.cohort.trios()[i];
  const std::vector<Locus> targets{25, 26};
  const auto joint = joint_propensity(model, t.mother, t.offspring.maternal, targets, {22, 28});
  std::vector<double> law(4, 0.0);
  const auto anc = joint.table();
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t z = 0; z < 4; ++z) {
      double w = anc[a];
      for (std::size_t k = 0; k < 2; ++k) {
        const auto& h = (a >> k) & 1 ? t.mother.paternal : t.mother.maternal;
        w *= emission_prob((z >> k) & 1, h[targets[k] - 1], model.epsilon());
      }
      law[z] += w;
    }
  }
  const int n = 20000;
  std::vector<double> counts(4, 0.0);
  Eigen::MatrixXd z, x;
  for (int k = 1; k <= n; ++k) {
    design.draw(11, 0, k, z, x);
    counts[static_cast<int>(z(i, 0)) | (static_cast<int>(z(i, 1)) << 1)] += 1;
  }
  for (std::size_t c = 0; c < 4; ++c) {
    const double se = std::sqrt(law[c] * (1 - law[c]) / n) + 1e-6;
    CHECK(std::abs(counts[c] / n - law[c]) < 5 * se);
  }
}

TEST_CASE("test inversion") {
  const auto sim = small_sim(150, 12);
  const MeiosisModel model(sim.cohort.map(), default_params().epsilon);
  const RandomizationDesign design(sim.cohort, model, sim.specs);
  const double grid[] = {-1.0, -0.5, 0.0, 0.5, 1.0};

  const auto single = invert_test(design, StatisticKind::CleverF, grid, 1, 2, 0.05);
  for (const auto& t : single.tests) {
    CHECK((t.p_value == 0.0 || t.p_value == 1.0));
    CHECK((t.p_value_corrected == 0.5 || t.p_value_corrected == 1.0));
  }
  const auto all = invert_test(design, StatisticKind::CleverF, grid, 20, 2, 0.0);
  CHECK(all.retained.size() == 5);
  REQUIRE(all.intervals.size() == 1);
  CHECK(all.intervals[0] == std::pair<double, double>{-1.0, 1.0});

  const double unsorted[] = {0.5, 0.0};
  CHECK_THROWS_AS(invert_test(design, StatisticKind::CleverF, unsorted, 10, 2, 0.05), Error);
  CHECK_THROWS_AS(invert_test(design, StatisticKind::CleverF, grid, 10, 2, 1.5), Error);
}

TEST_CASE("confidence sets cover the true effect") {
  const double truth = 0.3;
  const double grid[] = {-0.7, truth, 1.3};
  int covered = 0;
  const int reps = 100;
  for (int rep = 0; rep < reps; ++rep) {
    const auto sim = small_sim(300, 1000 + rep, truth);
    const MeiosisModel model(sim.cohort.map(), default_params().epsilon);
    const RandomizationDesign design(sim.cohort, model, sim.specs);
    const auto set = invert_test(design, StatisticKind::CleverF, grid, 100, rep, 0.05);
    for (double b : set.retained) covered += b == truth;
  }
  CHECK(covered >= 90);
}

TEST_CASE("Fisher combination") {
  const double half[] = {0.5};
  auto f = fisher_combine(half);
  CHECK(f.statistic == doctest::Approx(1.3863).epsilon(1e-4));
  CHECK(f.p_value == doctest::Approx(0.5).epsilon(1e-14));

  const double ones[] = {1.0, 1.0, 1.0};
  f = fisher_combine(ones);
  CHECK(f.statistic == 0.0);
  CHECK(f.p_value == 1.0);

  const double two[] = {0.05, 0.05};
  f = fisher_combine(two);
  CHECK(f.statistic == doctest::Approx(11.983).epsilon(1e-4));
  CHECK(f.p_value == doctest::Approx(0.0175).epsilon(1e-2));

  std::vector<double> ps{0.3, 0.7, 0.2, 0.9};
  double prev = fisher_combine(ps).p_value;
  for (int k = 0; k < 10; ++k) {
    ps[k % 4] *= 0.8;
    const double now = fisher_combine(ps).p_value;
    CHECK(now <= prev);
    prev = now;
  }

  CHECK_THROWS_AS(fisher_combine(std::vector<double>{}), Error);
  const double zero[] = {0.0, 0.5};
  CHECK_THROWS_AS(fisher_combine(zero), Error);
  f = fisher_combine(zero, 99);
  CHECK(f.clamped == 1);
  CHECK(f.statistic == doctest::Approx(-2.0 * (std::log(0.01) + std::log(0.5))));
  const double bad[] = {1.2};
  CHECK_THROWS_AS(fisher_combine(bad), Error);
}
