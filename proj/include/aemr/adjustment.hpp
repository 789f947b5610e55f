#pragma once

#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "aemr/genetics_data.hpp"
#include "aemr/meiosis_hmm.hpp"

namespace aemr {

enum class InstrumentSide { Maternal, Paternal, Genotype };

std::string to_string(InstrumentSide side);
InstrumentSide parse_instrument_side(std::string_view text);

// Sides of the offspring genome a test on `side` draws counterfactuals for.
std::vector<Origin> origins_of(InstrumentSide side);

// Window rules. A fixed ConditioningWindow applies to every trio; the others
// are resolved per trio (and per parent).
struct HeterozygousFlankRule {
  std::size_t max_span = 0;  // loci searched on each side; 0 = unlimited
};
struct MapRadius {
  double centimorgans = 0.0;  // loci within this distance stay unobserved
};
struct LocusRadius {
  std::size_t loci = 0;
};
using WindowRule =
    std::variant<ConditioningWindow, HeterozygousFlankRule, MapRadius, LocusRadius>;

struct AdjustmentSpec {
  Locus instrument = 0;
  InstrumentSide side = InstrumentSide::Maternal;
  WindowRule rule = LocusRadius{1};
};

// Declared roles of causal variants: J_d affects the exposure, J_y the outcome
// directly, J_0 neither.
class VariantRoles {
 public:
  VariantRoles() = default;
  VariantRoles(std::set<Locus> exposure_causal, std::set<Locus> pleiotropic,
               std::set<Locus> null);

  const std::set<Locus>& exposure_causal() const { return exposure_causal_; }
  const std::set<Locus>& pleiotropic() const { return pleiotropic_; }
  const std::set<Locus>& null() const { return null_; }
  bool empty() const {
    return exposure_causal_.empty() && pleiotropic_.empty() && null_.empty();
  }

 private:
  std::set<Locus> exposure_causal_;
  std::set<Locus> pleiotropic_;
  std::set<Locus> null_;
};

// Region A_k: loci first..last, empty when last < first.
struct Region {
  Locus first = 1;
  Locus last = 0;

  bool empty() const { return last < first; }
  bool contains(Locus j) const { return j >= first && j <= last; }
};

struct Partition {
  std::vector<Region> regions;  // separators.size() + 1 of them
  std::vector<Locus> separators;
  std::size_t num_loci = 0;

  // Index of the region holding j, or nothing when j is a separator.
  std::optional<std::size_t> region_of(Locus j) const;
};

// Nearest heterozygous loci strictly left and right of j, at most `max_span`
// loci away (0 = unlimited). Throws NoHeterozygousFlank naming the side.
Flanks find_heterozygous_flanks(const HaplotypePair& parent, Locus j,
                                std::size_t max_span = 0);

Partition build_partition(std::set<Locus> separators, std::size_t num_loci);

struct ResolvedWindow {
  ConditioningWindow window;
  // Set when a flank rule fell back to a chromosome end.
  bool fell_back = false;
};

ResolvedWindow resolve_window(const AdjustmentSpec& spec, const GeneticMap& map,
                              const HaplotypePair& parent);

struct ValidityReport {
  std::vector<Locus> region;  // the unobserved loci A around the instrument
  std::vector<Locus> exposure_causal_in_region;
  std::vector<Locus> pleiotropic_in_region;
  bool relevance = false;  // A intersects J_d
  bool exclusion = false;  // A avoids J_y
  bool roles_declared = true;

  bool valid() const { return relevance && exclusion; }
};

ValidityReport check_validity(ConditioningWindow window, const VariantRoles& roles);
// Resolves the spec's window (for every side of a genotype instrument, taking
// the union) and checks it. Flank rules need the trio whose parents define
// the flanks.
ValidityReport check_validity(const AdjustmentSpec& spec, const VariantRoles& roles,
                              const GeneticMap& map, const Trio* trio = nullptr);

// True when the two instruments sit in different regions of the partition and
// at least one separator between them is heterozygous in `parent`, which pins
// the ancestry there when epsilon = 0.
bool instruments_independent(const AdjustmentSpec& a, const AdjustmentSpec& b,
                             const Partition& partition,
                             const HaplotypePair& parent);

}  // namespace aemr
