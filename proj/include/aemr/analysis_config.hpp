#pragma once

// JSON analysis configuration for the `test` and `propensity` commands.
//
//   {
//     "map": "map.tsv", "haplotypes": "haplotypes.tsv", "phenotypes": "phenotypes.tsv",
//     "epsilon": 1e-8,
//     "instruments": [
//       {"locus": 25, "side": "genotype", "radius_loci": 1},
//       {"locus": 50, "side": "maternal", "window": [47, 53]},
//       {"locus": 75, "side": "paternal", "flanks": {"max_span": 20}},
//       {"locus": 100, "side": "genotype", "radius_cm": 0.5}
//     ],
//     "roles": {"exposure_causal": [24], "pleiotropic": [23, 27], "null": []},
//     "beta0": [0.0], "draws": 1000, "seed": 1,
//     "statistics": ["clever_F"], "joint": false, "fisher": true,
//     "alpha": 0.05, "tail": "upper"
//   }
//
// Relative data paths are resolved against the config file's directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aemr/adjustment.hpp"
#include "aemr/randtest.hpp"

namespace aemr {

// Default window when an instrument gives none.
inline constexpr double kDefaultRadiusCm = 0.5;

struct AnalysisConfig {
  std::filesystem::path map;
  std::filesystem::path haplotypes;
  std::filesystem::path phenotypes;
  double epsilon = 1e-8;
  std::vector<AdjustmentSpec> instruments;
  std::optional<VariantRoles> roles;
  std::vector<double> beta0s{0.0};
  std::size_t draws = 1000;
  std::uint64_t seed = 1;
  std::vector<StatisticKind> statistics{StatisticKind::CleverF};
  bool joint = false;
  bool fisher = false;
  double alpha = 0.05;
  Tail tail = Tail::Upper;
};

// Throws Error(Config) on malformed input, unknown keys or wrong types.
AnalysisConfig parse_analysis_config(std::string_view json_text,
                                     const std::filesystem::path& base_dir = {});
AnalysisConfig load_analysis_config(const std::filesystem::path& path);

// Paths are written as stored (callers make them relative when needed).
std::string serialize_analysis_config(const AnalysisConfig& config);

}  // namespace aemr
