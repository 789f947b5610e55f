#include "aemr/adjustment.hpp"

#include <algorithm>
#include <cmath>

#include "aemr/error.hpp"

namespace aemr {

std::string to_string(InstrumentSide side) {
  switch (side) {
    case InstrumentSide::Maternal: return "maternal";
    case InstrumentSide::Paternal: return "paternal";
    case InstrumentSide::Genotype: return "genotype";
  }
  return "?";
}

InstrumentSide parse_instrument_side(std::string_view text) {
  if (text == "maternal" || text == "m") return InstrumentSide::Maternal;
  if (text == "paternal" || text == "f") return InstrumentSide::Paternal;
  if (text == "genotype" || text == "g") return InstrumentSide::Genotype;
  throw Error(ErrorCode::Config, "unknown instrument side '" + std::string(text) + "'");
}

std::vector<Origin> origins_of(InstrumentSide side) {
  switch (side) {
    case InstrumentSide::Maternal: return {Origin::Maternal};
    case InstrumentSide::Paternal: return {Origin::Paternal};
    case InstrumentSide::Genotype: return {Origin::Maternal, Origin::Paternal};
  }
  return {};
}

VariantRoles::VariantRoles(std::set<Locus> exposure_causal,
                           std::set<Locus> pleiotropic, std::set<Locus> null)
    : exposure_causal_(std::move(exposure_causal)),
      pleiotropic_(std::move(pleiotropic)),
      null_(std::move(null)) {
  auto check = [](const std::set<Locus>& a, const std::set<Locus>& b,
                  const char* what) {
    for (Locus j : a) {
      if (b.contains(j)) {
        throw Error(ErrorCode::Config, std::string("locus ") + std::to_string(j) +
                                           " declared in two role sets (" + what + ")");
      }
    }
  };
  check(exposure_causal_, pleiotropic_, "exposure-causal and pleiotropic");
  check(exposure_causal_, null_, "exposure-causal and null");
  check(pleiotropic_, null_, "pleiotropic and null");
}

std::optional<std::size_t> Partition::region_of(Locus j) const {
  for (std::size_t k = 0; k < regions.size(); ++k) {
    if (regions[k].contains(j)) return k;
  }
  return std::nullopt;
}

Flanks find_heterozygous_flanks(const HaplotypePair& parent, Locus j,
                                std::size_t max_span) {
  const std::size_t p = parent.size();
  if (j < 1 || j > p) {
    throw Error(ErrorCode::InvalidArgument, "locus " + std::to_string(j) + " outside the map");
  }
  const std::size_t span = max_span == 0 ? p : max_span;
  Flanks flanks;
  for (Locus b = j - 1; b >= 1 && j - b <= span; --b) {
    if (parent.heterozygous(b)) {
      flanks.left = b;
      break;
    }
  }
  for (Locus b = j + 1; b <= p && b - j <= span; ++b) {
    if (parent.heterozygous(b)) {
      flanks.right = b;
      break;
    }
  }
  if (flanks.left == 0) {
    throw Error(ErrorCode::NoHeterozygousFlank,
                "no heterozygous locus left of " + std::to_string(j));
  }
  if (flanks.right == 0) {
    throw Error(ErrorCode::NoHeterozygousFlank,
                "no heterozygous locus right of " + std::to_string(j));
  }
  return flanks;
}

Partition build_partition(std::set<Locus> separators, std::size_t num_loci) {
  Partition out;
  out.num_loci = num_loci;
  Locus prev = 0;
  for (Locus b : separators) {
    if (b < 1 || b > num_loci) {
      throw Error(ErrorCode::InvalidArgument,
                  "separator " + std::to_string(b) + " outside 1.." + std::to_string(num_loci));
    }
    out.regions.push_back(Region{prev + 1, b - 1});
    out.separators.push_back(b);
    prev = b;
  }
  out.regions.push_back(Region{prev + 1, num_loci});
  return out;
}

namespace {

double cm_between(const GeneticMap& map, Locus a, Locus b) {
  double total = 0.0;
  for (Locus k = a + 1; k <= b; ++k) total += map.cm_from_prev(k);
  return total;
}

}  // namespace

ResolvedWindow resolve_window(const AdjustmentSpec& spec, const GeneticMap& map,
                              const HaplotypePair& parent) {
  const std::size_t p = map.size();
  const Locus j = spec.instrument;
  if (!map.contains(j)) {
    throw Error(ErrorCode::Config, "instrument locus " + std::to_string(j) +
                                       " outside 1.." + std::to_string(p));
  }
  ResolvedWindow out;
  std::visit(
      [&](const auto& rule) {
        using Rule = std::decay_t<decltype(rule)>;
        if constexpr (std::is_same_v<Rule, ConditioningWindow>) {
          if (!rule.contains(j) || rule.upper > p + 1) {
            throw Error(ErrorCode::Config,
                        "window (" + std::to_string(rule.lower) + ", " +
                            std::to_string(rule.upper) + ") does not contain locus " +
                            std::to_string(j));
          }
          out.window = rule;
        } else if constexpr (std::is_same_v<Rule, HeterozygousFlankRule>) {
          const std::size_t span = rule.max_span == 0 ? p : rule.max_span;
          out.window = {0, p + 1};
          for (Locus b = j - 1; b >= 1 && j - b <= span; --b) {
            if (parent.heterozygous(b)) {
              out.window.lower = b;
              break;
            }
          }
          for (Locus b = j + 1; b <= p && b - j <= span; ++b) {
            if (parent.heterozygous(b)) {
              out.window.upper = b;
              break;
            }
          }
          out.fell_back = out.window.lower == 0 || out.window.upper == p + 1;
        } else if constexpr (std::is_same_v<Rule, MapRadius>) {
          out.window = {0, p + 1};
          for (Locus l = j - 1; l >= 1; --l) {
            if (cm_between(map, l, j) > rule.centimorgans) {
              out.window.lower = l;
              break;
            }
          }
          for (Locus h = j + 1; h <= p; ++h) {
            if (cm_between(map, j, h) > rule.centimorgans) {
              out.window.upper = h;
              break;
            }
          }
        } else {
          out.window.lower = j > rule.loci + 1 ? j - rule.loci - 1 : 0;
          out.window.upper = std::min<Locus>(j + rule.loci + 1, p + 1);
        }
      },
      spec.rule);
  return out;
}

ValidityReport check_validity(ConditioningWindow window, const VariantRoles& roles) {
  ValidityReport report;
  report.roles_declared = !roles.empty();
  for (Locus k = window.lower + 1; k < window.upper; ++k) {
    report.region.push_back(k);
    if (roles.exposure_causal().contains(k)) report.exposure_causal_in_region.push_back(k);
    if (roles.pleiotropic().contains(k)) report.pleiotropic_in_region.push_back(k);
  }
  report.relevance = !report.exposure_causal_in_region.empty();
  report.exclusion = report.pleiotropic_in_region.empty();
  return report;
}

ValidityReport check_validity(const AdjustmentSpec& spec, const VariantRoles& roles,
                              const GeneticMap& map, const Trio* trio) {
  const bool per_trio = std::holds_alternative<HeterozygousFlankRule>(spec.rule);
  if (per_trio && trio == nullptr) {
    throw Error(ErrorCode::InvalidArgument,
                "heterozygous-flank windows depend on the trio; pass one");
  }
  // Placeholder parent for rules that do not look at genotypes.
  const HaplotypePair none{Haplotype(map.size(), 0), Haplotype(map.size(), 0)};
  ConditioningWindow merged{map.size() + 1, 0};
  for (Origin o : origins_of(spec.side)) {
    const auto& parent = trio ? trio->parent(o) : none;
    const auto w = resolve_window(spec, map, parent).window;
    merged.lower = std::min(merged.lower, w.lower);
    merged.upper = std::max(merged.upper, w.upper);
  }
  return check_validity(merged, roles);
}

bool instruments_independent(const AdjustmentSpec& a, const AdjustmentSpec& b,
                             const Partition& partition,
                             const HaplotypePair& parent) {
  const auto ra = partition.region_of(a.instrument);
  const auto rb = partition.region_of(b.instrument);
  if (!ra || !rb || *ra == *rb) return false;
  const Locus lo = std::min(a.instrument, b.instrument);
  const Locus hi = std::max(a.instrument, b.instrument);
  for (Locus s : partition.separators) {
    if (s > lo && s < hi && parent.heterozygous(s)) return true;
  }
  return false;
}

}  // namespace aemr
