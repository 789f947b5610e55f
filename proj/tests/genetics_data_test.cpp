#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "aemr/error.hpp"
#include "aemr/genetics_data.hpp"
#include "aemr/simgen.hpp"

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

std::string message_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

GeneticMap map3() {
  std::istringstream in("index\tid\tcM\n1\trs1\t-\n2\trs2\t0.5\n3\trs3\t1.2\n");
  return parse_genetic_map(in, "1");
}

const char* kHaps =
    "family\tmember\torigin\talleles\n"
    "f1\tM\tm\t101\n"
    "f1\tM\tf\t010\n"
    "f1\tF\tm\t111\n"
    "f1\tF\tf\t000\n"
    "f1\tO\tm\t101\n"
    "f1\tO\tf\t100\n";

}  // namespace

TEST_CASE("map with three loci") {
  const auto map = map3();
  REQUIRE(map.size() == 3);
  CHECK(map.at(1).id == "rs1");
  CHECK(map.cm_from_prev(2) == 0.5);
  CHECK(map.cm_from_prev(3) == 1.2);
  CHECK(map.chromosome() == "1");
}

TEST_CASE("infinite distance marks an unlinked locus") {
  std::ostringstream text;
  text << "index\tid\tcM\n";
  for (int j = 1; j <= 40; ++j) {
    text << j << "\ts" << j << '\t' << (j == 1 ? "-" : j == 37 ? "inf" : "0.3") << '\n';
  }
  std::istringstream in(text.str());
  const auto map = parse_genetic_map(in);
  CHECK(std::isinf(map.cm_from_prev(37)));
  CHECK(map.cm_from_prev(36) == 0.3);
}

TEST_CASE("map errors") {
  auto parse = [](std::string s) {
    std::istringstream in(s);
    return parse_genetic_map(in);
  };
  CHECK(code_of([&] { parse("index\tid\tcM\n1\ta\t-\n2\tb\t-0.1\n"); }) ==
        ErrorCode::NegativeDistance);
  CHECK(code_of([&] { parse("index\tid\tcM\n1\ta\t-\n3\tb\t0.1\n"); }) ==
        ErrorCode::NonMonotoneIndex);
  CHECK(code_of([&] { parse("index\tid\tcM\n1\ta\t-\n1\tb\t0.1\n"); }) ==
        ErrorCode::NonMonotoneIndex);
  CHECK(code_of([&] { parse("index\tid\tcM\n1\ta\t-\n2\tb\tfoo\n"); }) == ErrorCode::Parse);
  CHECK(code_of([&] { parse("idx\tid\tcM\n"); }) == ErrorCode::Parse);
  CHECK(code_of([&] { parse("index\tid\tcM\n"); }) == ErrorCode::Parse);
  CHECK(message_of([&] { parse("index\tid\tcM\n1\ta\t-\n2\tb\t-1\n"); }).find("line 3") !=
        std::string::npos);
}

TEST_CASE("one complete family") {
  std::istringstream haps(kHaps);
  std::istringstream phen("family\tD\tY\nf1\t0.5\t-1.25\n");
  const auto cohort = parse_cohort(map3(), haps, phen);
  REQUIRE(cohort.size() == 1);
  const auto& t = cohort.trios()[0];
  CHECK(t.family_id == "f1");
  CHECK(t.mother.maternal == Haplotype{1, 0, 1});
  CHECK(t.father.paternal == Haplotype{0, 0, 0});
  CHECK(t.offspring.paternal == Haplotype{1, 0, 0});
  CHECK(t.exposure == 0.5);
  CHECK(t.outcome == -1.25);
  CHECK(t.mother.genotype(1) == 1);
  CHECK(t.mother.heterozygous(2));
  CHECK(t.father.heterozygous(3));
}

TEST_CASE("cohort errors") {
  auto load = [](std::string haps, std::string phen) {
    std::istringstream h(haps), p(phen);
    return parse_cohort(map3(), h, p);
  };
  const std::string phen = "family\tD\tY\nf1\t0.5\t1\n";

  std::string shortrow = kHaps;
  shortrow.replace(shortrow.rfind("100"), 3, "10");
  CHECK(code_of([&] { load(shortrow, phen); }) == ErrorCode::LengthMismatch);

  std::string nonbinary = kHaps;
  nonbinary.replace(nonbinary.rfind("100"), 3, "120");
  CHECK(code_of([&] { load(nonbinary, phen); }) == ErrorCode::NonBinaryAllele);

  std::string missing = kHaps;
  missing.erase(missing.find("f1\tF\tf"), std::string("f1\tF\tf\t000\n").size());
  CHECK(code_of([&] { load(missing, phen); }) == ErrorCode::MissingMember);

  CHECK(code_of([&] { load(std::string(kHaps) + "f1\tO\tf\t100\n", phen); }) ==
        ErrorCode::DuplicateMember);

  CHECK(code_of([&] { load(kHaps, "family\tD\tY\nf2\t0.5\t1\n"); }) ==
        ErrorCode::UnmatchedFamily);
  CHECK(code_of([&] { load(kHaps, "family\tD\tY\n"); }) == ErrorCode::UnmatchedFamily);

  CHECK(code_of([&] { load(kHaps, "family\tD\tY\nf1\t0.5\t1\nf1\t0\t0\n"); }) ==
        ErrorCode::DuplicateFamily);
}

TEST_CASE("missing phenotype drops the trio") {
  std::string haps = kHaps;
  for (const char* row : {"f2\tM\tm\t000\n", "f2\tM\tf\t000\n", "f2\tF\tm\t000\n",
                          "f2\tF\tf\t000\n", "f2\tO\tm\t000\n", "f2\tO\tf\t000\n"}) {
    haps += row;
  }
  std::istringstream h(haps);
  std::istringstream p("family\tD\tY\nf1\t0.5\tNA\nf2\t1\t2\n");
  const auto cohort = parse_cohort(map3(), h, p);
  REQUIRE(cohort.size() == 1);
  CHECK(cohort.trios()[0].family_id == "f2");
}

TEST_CASE("mendelian violations") {
  Trio t;
  t.mother = {{0, 0, 0}, {0, 0, 0}};
  t.father = {{0, 0, 0}, {0, 0, 0}};
  t.offspring = {{1, 0, 0}, {0, 0, 0}};

  auto v = validate_mendelian(t, 0.0);
  REQUIRE(v.size() == 1);
  CHECK(v[0].locus == 1);
  CHECK(v[0].side == Origin::Maternal);
  CHECK(v[0].severity == Severity::Error);

  v = validate_mendelian(t, 1e-8);
  REQUIRE(v.size() == 1);
  CHECK(v[0].severity == Severity::Warning);

  t.mother.maternal[0] = 1;
  CHECK(validate_mendelian(t, 0.0).empty());

  t.offspring.paternal[2] = 1;
  v = validate_mendelian(t, 0.0);
  REQUIRE(v.size() == 1);
  CHECK(v[0].locus == 3);
  CHECK(v[0].side == Origin::Paternal);
}

TEST_CASE("simulated cohort without mutation has no violations") {
  auto params = default_params();
  params.num_trios = 100;
  params.epsilon = 0.0;
  const auto sim = make_cohort(params, 11);
  std::size_t errors = 0;
  for (const auto& t : sim.cohort.trios()) {
    for (const auto& v : validate_mendelian(t, 0.0)) errors += v.severity == Severity::Error;
  }
  CHECK(errors == 0);
}

TEST_CASE("write then load reproduces the cohort exactly") {
  auto params = default_params();
  params.num_trios = 30;
  const auto sim = make_cohort(params, 5);
  const auto dir = std::filesystem::temp_directory_path() / "aemr_roundtrip_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto files = cohort_files_in(dir);
  write_cohort(sim.cohort, files);

  const auto map = load_genetic_map(files.map);
  CHECK(map.loci() == sim.cohort.map().loci());
  const auto back = load_cohort(map, files.haplotypes, files.phenotypes);
  CHECK(back.trios() == sim.cohort.trios());
  std::filesystem::remove_all(dir);
}

TEST_CASE("format_exact round trips") {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 123456.789, 0.0}) {
    CHECK(std::stod(format_exact(v)) == v);
  }
  CHECK(std::isinf(std::stod(format_exact(std::numeric_limits<double>::infinity()))));
}

TEST_CASE("cohort constructor checks lengths and ids") {
  Trio t;
  t.family_id = "a";
  t.mother = t.father = t.offspring = {{0, 1, 0}, {1, 0, 1}};
  CHECK_NOTHROW(Cohort(map3(), {t}));
  CHECK(code_of([&] { Cohort(map3(), {t, t}); }) == ErrorCode::DuplicateFamily);
  t.offspring.maternal.pop_back();
  CHECK(code_of([&] { Cohort(map3(), {t}); }) == ErrorCode::LengthMismatch);
}
