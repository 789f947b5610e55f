#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace aemr {

// Loci are numbered 1..p throughout the public API, matching the map files.
using Locus = std::size_t;
using Allele = std::uint8_t;
using Haplotype = std::vector<Allele>;

// Which grandparental copy a parent transmits (the ancestry indicator), and
// equally which parent an offspring haplotype came from.
enum class Origin : std::uint8_t { Maternal = 0, Paternal = 1 };

inline Origin other(Origin o) {
  return o == Origin::Maternal ? Origin::Paternal : Origin::Maternal;
}
inline std::size_t index_of(Origin o) { return static_cast<std::size_t>(o); }

struct MapLocus {
  std::string id;
  // Distance from the previous locus in centimorgans; may be +infinity.
  // Ignored for the first locus.
  double cm_from_prev = 0.0;

  bool operator==(const MapLocus&) const = default;
};

class GeneticMap {
 public:
  GeneticMap() = default;
  GeneticMap(std::string chromosome, std::vector<MapLocus> loci);

  std::size_t size() const { return loci_.size(); }
  const std::string& chromosome() const { return chromosome_; }
  const MapLocus& at(Locus j) const;
  double cm_from_prev(Locus j) const { return at(j).cm_from_prev; }
  const std::vector<MapLocus>& loci() const { return loci_; }
  bool contains(Locus j) const { return j >= 1 && j <= loci_.size(); }

  bool operator==(const GeneticMap&) const = default;

 private:
  std::string chromosome_;
  std::vector<MapLocus> loci_;
};

struct HaplotypePair {
  Haplotype maternal;
  Haplotype paternal;

  std::size_t size() const { return maternal.size(); }
  const Haplotype& of(Origin o) const {
    return o == Origin::Maternal ? maternal : paternal;
  }
  Haplotype& of(Origin o) { return o == Origin::Maternal ? maternal : paternal; }
  Allele allele(Origin o, Locus j) const { return of(o)[j - 1]; }
  bool heterozygous(Locus j) const { return maternal[j - 1] != paternal[j - 1]; }
  int genotype(Locus j) const { return maternal[j - 1] + paternal[j - 1]; }

  bool operator==(const HaplotypePair&) const = default;
};

struct Trio {
  std::string family_id;
  HaplotypePair mother;
  HaplotypePair father;
  // offspring.maternal is inherited from the mother, offspring.paternal from
  // the father.
  HaplotypePair offspring;
  double exposure = 0.0;
  double outcome = 0.0;

  const HaplotypePair& parent(Origin o) const {
    return o == Origin::Maternal ? mother : father;
  }
  const Haplotype& transmitted(Origin o) const { return offspring.of(o); }

  bool operator==(const Trio&) const = default;
};

class Cohort {
 public:
  Cohort() = default;
  // Validates that every trio conforms to the map and that family ids are
  // unique.
  Cohort(GeneticMap map, std::vector<Trio> trios);

  const GeneticMap& map() const { return map_; }
  const std::vector<Trio>& trios() const { return trios_; }
  std::size_t size() const { return trios_.size(); }
  std::size_t num_loci() const { return map_.size(); }

  bool operator==(const Cohort&) const = default;

 private:
  GeneticMap map_;
  std::vector<Trio> trios_;
};

enum class Severity { Warning, Error };

struct MendelianViolation {
  Locus locus = 0;
  Origin side = Origin::Maternal;
  Severity severity = Severity::Error;
};

// Offspring alleles that match neither haplotype of the transmitting parent.
// With epsilon > 0 these are reported as putative de novo mutations.
std::vector<MendelianViolation> validate_mendelian(const Trio& trio,
                                                   double epsilon);

GeneticMap load_genetic_map(const std::filesystem::path& path);
GeneticMap parse_genetic_map(std::istream& in, std::string chromosome = {});

// Trios whose phenotype row is missing a value are dropped with a warning.
Cohort load_cohort(GeneticMap map, const std::filesystem::path& haplotype_path,
                   const std::filesystem::path& phenotype_path);
Cohort parse_cohort(GeneticMap map, std::istream& haplotypes,
                    std::istream& phenotypes);

void write_genetic_map(const GeneticMap& map, std::ostream& out);
void write_haplotypes(const Cohort& cohort, std::ostream& out);
void write_phenotypes(const Cohort& cohort, std::ostream& out);

struct CohortFiles {
  std::filesystem::path map;
  std::filesystem::path haplotypes;
  std::filesystem::path phenotypes;
};

CohortFiles cohort_files_in(const std::filesystem::path& directory);
void write_cohort(const Cohort& cohort, const CohortFiles& files);

// Formats a real so that parsing it back yields the identical double.
std::string format_exact(double value);

}  // namespace aemr
