#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>

#include "aemr/adjustment.hpp"
#include "aemr/error.hpp"
#include "aemr/meiosis_hmm.hpp"
#include "aemr/simgen.hpp"
#include "oracles.hpp"

using namespace aemr;

namespace {

GeneticMap make_map(const std::vector<double>& cm) {
  std::vector<MapLocus> loci;
  for (std::size_t k = 0; k < cm.size(); ++k) {
    loci.push_back({"l" + std::to_string(k + 1), k == 0 ? 0.0 : cm[k]});
  }
  return GeneticMap("t", std::move(loci));
}

const SimCohort& simulated() {
  static const SimCohort sim = [] {
    auto params = default_params();
    params.num_trios = 200;
    return make_cohort(params, 21);
  }();
  return sim;
}

}  // namespace

TEST_CASE("heterozygous flanks") {
  const HaplotypePair parent{{0, 1, 1, 0, 1}, {0, 0, 1, 1, 0}};
  const auto f = find_heterozygous_flanks(parent, 3);
  CHECK(f.left == 2);
  CHECK(f.right == 4);

  const HaplotypePair left_homozygous{{1, 1, 0, 1, 0}, {1, 1, 0, 0, 1}};
  try {
    find_heterozygous_flanks(left_homozygous, 3);
    FAIL("expected NoHeterozygousFlank");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoHeterozygousFlank);
    CHECK(std::string(e.what()).find("left") != std::string::npos);
  }
  const HaplotypePair far{{1, 0, 0, 0, 0}, {0, 0, 0, 0, 1}};
  CHECK_NOTHROW(find_heterozygous_flanks(far, 3));
  CHECK_THROWS_AS(find_heterozygous_flanks(far, 3, 1), Error);
}

TEST_CASE("flanks on simulated mothers stay near the instrument") {
  int found = 0;
  for (const auto& t : simulated().cohort.trios()) {
    try {
      const auto f = find_heterozygous_flanks(t.mother, 25, 23);
      CHECK(f.left >= 2);
      CHECK(f.left < 25);
      CHECK(f.right > 25);
      CHECK(f.right <= 48);
      CHECK(t.mother.heterozygous(f.left));
      CHECK(t.mother.heterozygous(f.right));
      for (Locus k = f.left + 1; k < f.right; ++k) {
        if (k != 25) CHECK_FALSE(t.mother.heterozygous(k));
      }
      ++found;
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoHeterozygousFlank);
    }
  }
  CHECK(found > 0);
}

TEST_CASE("partition") {
  const auto part = build_partition({37, 62, 86, 112}, 150);
  REQUIRE(part.regions.size() == 5);
  CHECK(part.regions[0].first == 1);
  CHECK(part.regions[0].last == 36);
  CHECK(part.regions[1].first == 38);
  CHECK(part.regions[1].last == 61);
  CHECK(part.regions[4].first == 113);
  CHECK(part.regions[4].last == 150);
  CHECK(part.region_of(25) == 0u);
  CHECK(part.region_of(50) == 1u);
  CHECK_FALSE(part.region_of(37).has_value());

  const auto adjacent = build_partition({3, 4}, 6);
  REQUIRE(adjacent.regions.size() == 3);
  CHECK(adjacent.regions[1].empty());

  const auto none = build_partition({}, 10);
  REQUIRE(none.regions.size() == 1);
  CHECK(none.regions[0].last == 10);
  CHECK_THROWS_AS(build_partition({11}, 10), Error);
}

TEST_CASE("window rules") {
  const auto map = make_map({0, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2});
  const HaplotypePair parent{{0, 1, 0, 0, 0, 1, 0}, {0, 0, 0, 0, 0, 0, 0}};

  CHECK(resolve_window({4, InstrumentSide::Maternal, LocusRadius{1}}, map, parent).window ==
        ConditioningWindow{2, 6});
  CHECK(resolve_window({1, InstrumentSide::Maternal, LocusRadius{2}}, map, parent).window ==
        ConditioningWindow{0, 4});
  CHECK(resolve_window({4, InstrumentSide::Maternal, HeterozygousFlankRule{}}, map, parent)
            .window == ConditioningWindow{2, 6});
  CHECK(resolve_window({4, InstrumentSide::Maternal, MapRadius{0.3}}, map, parent).window ==
        ConditioningWindow{2, 6});
  CHECK(resolve_window({4, InstrumentSide::Maternal, MapRadius{0.5}}, map, parent).window ==
        ConditioningWindow{1, 7});

  const auto fallback =
      resolve_window({7, InstrumentSide::Maternal, HeterozygousFlankRule{}}, map, parent);
  CHECK(fallback.fell_back);
  CHECK(fallback.window == ConditioningWindow{6, 8});

  CHECK_THROWS_AS(
      resolve_window({4, InstrumentSide::Maternal, ConditioningWindow{4, 6}}, map, parent),
      Error);
  CHECK_THROWS_AS(resolve_window({9, InstrumentSide::Maternal, LocusRadius{1}}, map, parent),
                  Error);
}

TEST_CASE("validity of the simulated adjustment sets") {
  const auto& sim = simulated();
  const auto& map = sim.cohort.map();
  REQUIRE(sim.specs.size() == 5);
  for (const auto& spec : sim.specs) {
    const auto report = check_validity(spec, sim.roles, map);
    CHECK(report.valid());
    CHECK(report.region.size() == 3);
  }
  const auto r25 = check_validity(sim.specs[0], sim.roles, map);
  CHECK(r25.region == std::vector<Locus>{24, 25, 26});
  CHECK(r25.exposure_causal_in_region == std::vector<Locus>{24});

  // Leaving 23 unobserved breaks the exclusion restriction.
  const auto wide = check_validity(ConditioningWindow{22, 27}, sim.roles);
  CHECK(wide.relevance);
  CHECK_FALSE(wide.exclusion);
  CHECK(wide.pleiotropic_in_region == std::vector<Locus>{23});

  // No exposure-causal variant near 30.
  const auto weak = check_validity(ConditioningWindow{28, 32}, sim.roles);
  CHECK_FALSE(weak.relevance);
  CHECK(weak.exclusion);

  CHECK_THROWS_AS(
      check_validity({25, InstrumentSide::Maternal, HeterozygousFlankRule{}}, sim.roles, map),
      Error);
}

TEST_CASE("roles must be disjoint") {
  CHECK_THROWS_AS(VariantRoles({1, 2}, {2}, {}), Error);
  CHECK_NOTHROW(VariantRoles({1}, {2}, {3}));
}

TEST_CASE("independence across a heterozygous separator") {
  const auto part = build_partition({10}, 20);
  const AdjustmentSpec a{5, InstrumentSide::Maternal, LocusRadius{1}};
  const AdjustmentSpec b{15, InstrumentSide::Maternal, LocusRadius{1}};
  HaplotypePair het{Haplotype(20, 0), Haplotype(20, 0)};
  het.maternal[9] = 1;
  CHECK(instruments_independent(a, b, part, het));
  const HaplotypePair hom{Haplotype(20, 0), Haplotype(20, 0)};
  CHECK_FALSE(instruments_independent(a, b, part, hom));
  const AdjustmentSpec c{7, InstrumentSide::Maternal, LocusRadius{1}};
  CHECK_FALSE(instruments_independent(a, c, part, het));
}

TEST_CASE("pinned separator factorises the joint law") {
  // Two windows observed everywhere except {4,5,6} and {14,15,16}, with the
  // parent heterozygous at 10 and no mutation: the ancestry at 5 and 15 is
  // independent given the observed loci, so the exact joint law equals the
  // product of the per-window propensities.
  RngStream rng(31);
  const std::size_t p = 20;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> cm(p);
    for (auto& c : cm) c = 20.0 * rng.uniform();
    const auto map = make_map(cm);
    const MeiosisModel model(map, 0.0);
    HaplotypePair parent{oracle::random_haplotype(rng, p), oracle::random_haplotype(rng, p)};
    parent.paternal[9] = 1 - parent.maternal[9];
    const auto child = oracle::transmit(rng, map, parent, 0.0);

    auto observed = [](Locus k) { return !(k >= 4 && k <= 6) && !(k >= 14 && k <= 16); };
    const auto joint = oracle::ancestry_table(map, parent, child, observed, {5, 15}, 0.0);
    const auto left = propensity_score(model, parent, child, 5, {3, 7});
    const auto right = propensity_score(model, parent, child, 15, {13, 17});
    for (int u = 0; u < 2; ++u) {
      for (int v = 0; v < 2; ++v) {
        CHECK(joint[u | (v << 1)] ==
              doctest::Approx(left.ancestry[u] * right.ancestry[v]).epsilon(1e-12));
      }
    }
  }
}
