#include "aemr/analysis_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aemr/error.hpp"

namespace aemr {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& message) {
  throw Error(ErrorCode::Config, "config: " + message);
}

void only_keys(const json& obj, std::initializer_list<std::string_view> allowed,
               const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) fail("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get_as(const json& v, const std::string& what) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    fail(what + " has the wrong type");
  }
}

std::size_t get_count(const json& v, const std::string& what) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    fail(what + " must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

double get_real(const json& v, const std::string& what) {
  if (!v.is_number()) fail(what + " must be a number");
  return v.get<double>();
}

std::set<Locus> get_loci(const json& v, const std::string& what) {
  if (!v.is_array()) fail(what + " must be a list of loci");
  std::set<Locus> out;
  for (const auto& e : v) out.insert(get_count(e, what));
  return out;
}

AdjustmentSpec parse_instrument(const json& obj, std::size_t index) {
  const std::string where = "instruments[" + std::to_string(index) + "]";
  if (!obj.is_object()) fail(where + " must be an object");
  only_keys(obj, {"locus", "side", "window", "flanks", "radius_cm", "radius_loci"}, where);
  AdjustmentSpec spec;
  if (!obj.contains("locus")) fail(where + " lacks 'locus'");
  spec.instrument = get_count(obj["locus"], where + ".locus");
  spec.side = obj.contains("side")
                  ? parse_instrument_side(get_as<std::string>(obj["side"], where + ".side"))
                  : InstrumentSide::Genotype;
  int rules = 0;
  spec.rule = MapRadius{kDefaultRadiusCm};
  if (obj.contains("window")) {
    ++rules;
    const auto& w = obj["window"];
    if (!w.is_array() || w.size() != 2) fail(where + ".window must be [lower, upper]");
    spec.rule = ConditioningWindow{get_count(w[0], where + ".window"),
                                   get_count(w[1], where + ".window")};
  }
  if (obj.contains("flanks")) {
    ++rules;
    const auto& f = obj["flanks"];
    HeterozygousFlankRule rule;
    if (f.is_object()) {
      only_keys(f, {"max_span"}, where + ".flanks");
      if (f.contains("max_span")) rule.max_span = get_count(f["max_span"], where + ".flanks.max_span");
    } else if (!(f.is_boolean() && f.get<bool>())) {
      fail(where + ".flanks must be true or an object");
    }
    spec.rule = rule;
  }
  if (obj.contains("radius_cm")) {
    ++rules;
    const double r = get_real(obj["radius_cm"], where + ".radius_cm");
    if (!(r >= 0.0)) fail(where + ".radius_cm must be nonnegative");
    spec.rule = MapRadius{r};
  }
  if (obj.contains("radius_loci")) {
    ++rules;
    spec.rule = LocusRadius{get_count(obj["radius_loci"], where + ".radius_loci")};
  }
  if (rules > 1) fail(where + " gives more than one window rule");
  return spec;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

}  // namespace

AnalysisConfig parse_analysis_config(std::string_view json_text,
                                     const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("not valid JSON (") + e.what() + ")");
  }
  if (!doc.is_object()) fail("top level must be an object");
  only_keys(doc,
            {"map", "haplotypes", "phenotypes", "epsilon", "instruments", "roles", "beta0",
             "draws", "seed", "statistic", "statistics", "joint", "fisher", "alpha", "tail"},
            "config");

  AnalysisConfig cfg;
  for (const char* key : {"map", "haplotypes", "phenotypes"}) {
    if (!doc.contains(key)) fail(std::string("missing '") + key + "'");
  }
  cfg.map = resolve(base_dir, get_as<std::string>(doc["map"], "map"));
  cfg.haplotypes = resolve(base_dir, get_as<std::string>(doc["haplotypes"], "haplotypes"));
  cfg.phenotypes = resolve(base_dir, get_as<std::string>(doc["phenotypes"], "phenotypes"));

  if (doc.contains("epsilon")) {
    cfg.epsilon = get_real(doc["epsilon"], "epsilon");
    if (!(cfg.epsilon >= 0.0 && cfg.epsilon < 0.5)) fail("epsilon must lie in [0, 0.5)");
  }
  if (!doc.contains("instruments") || !doc["instruments"].is_array() ||
      doc["instruments"].empty()) {
    fail("'instruments' must be a nonempty list");
  }
  for (std::size_t k = 0; k < doc["instruments"].size(); ++k) {
    cfg.instruments.push_back(parse_instrument(doc["instruments"][k], k));
  }
  if (doc.contains("roles")) {
    const auto& r = doc["roles"];
    if (!r.is_object()) fail("roles must be an object");
    only_keys(r, {"exposure_causal", "pleiotropic", "null"}, "roles");
    auto loci = [&](const char* key) {
      return r.contains(key) ? get_loci(r[key], std::string("roles.") + key) : std::set<Locus>{};
    };
    cfg.roles = VariantRoles(loci("exposure_causal"), loci("pleiotropic"), loci("null"));
  }
  if (doc.contains("beta0")) {
    const auto& b = doc["beta0"];
    cfg.beta0s.clear();
    if (b.is_number()) {
      cfg.beta0s.push_back(b.get<double>());
    } else if (b.is_array() && !b.empty()) {
      for (const auto& e : b) cfg.beta0s.push_back(get_real(e, "beta0"));
    } else {
      fail("beta0 must be a number or a nonempty list");
    }
  }
  if (doc.contains("draws")) {
    cfg.draws = get_count(doc["draws"], "draws");
    if (cfg.draws == 0) fail("draws must be positive");
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) fail("seed must be a nonnegative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("statistic") && doc.contains("statistics")) {
    fail("give either 'statistic' or 'statistics'");
  }
  if (doc.contains("statistic")) {
    cfg.statistics = {parse_statistic(get_as<std::string>(doc["statistic"], "statistic"))};
  }
  if (doc.contains("statistics")) {
    const auto& s = doc["statistics"];
    if (!s.is_array() || s.empty()) fail("statistics must be a nonempty list");
    cfg.statistics.clear();
    for (const auto& e : s) cfg.statistics.push_back(parse_statistic(get_as<std::string>(e, "statistics")));
  }
  if (doc.contains("joint")) cfg.joint = get_as<bool>(doc["joint"], "joint");
  if (doc.contains("fisher")) cfg.fisher = get_as<bool>(doc["fisher"], "fisher");
  if (doc.contains("alpha")) {
    cfg.alpha = get_real(doc["alpha"], "alpha");
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) fail("alpha must lie in [0, 1]");
  }
  if (doc.contains("tail")) cfg.tail = parse_tail(get_as<std::string>(doc["tail"], "tail"));
  return cfg;
}

AnalysisConfig load_analysis_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_analysis_config(text.str(), path.parent_path());
}

std::string serialize_analysis_config(const AnalysisConfig& config) {
  json doc;
  doc["map"] = config.map.string();
  doc["haplotypes"] = config.haplotypes.string();
  doc["phenotypes"] = config.phenotypes.string();
  doc["epsilon"] = config.epsilon;
  doc["instruments"] = json::array();
  for (const auto& spec : config.instruments) {
    json inst;
    inst["locus"] = spec.instrument;
    inst["side"] = to_string(spec.side);
    std::visit(
        [&](const auto& rule) {
          using Rule = std::decay_t<decltype(rule)>;
          if constexpr (std::is_same_v<Rule, ConditioningWindow>) {
            inst["window"] = {rule.lower, rule.upper};
          } else if constexpr (std::is_same_v<Rule, HeterozygousFlankRule>) {
            inst["flanks"] = {{"max_span", rule.max_span}};
          } else if constexpr (std::is_same_v<Rule, MapRadius>) {
            inst["radius_cm"] = rule.centimorgans;
          } else {
            inst["radius_loci"] = rule.loci;
          }
        },
        spec.rule);
    doc["instruments"].push_back(inst);
  }
  if (config.roles) {
    doc["roles"] = {{"exposure_causal", config.roles->exposure_causal()},
                    {"pleiotropic", config.roles->pleiotropic()},
                    {"null", config.roles->null()}};
  }
  doc["beta0"] = config.beta0s;
  doc["draws"] = config.draws;
  doc["seed"] = config.seed;
  doc["statistics"] = json::array();
  for (auto k : config.statistics) doc["statistics"].push_back(to_string(k));
  doc["joint"] = config.joint;
  doc["fisher"] = config.fisher;
  doc["alpha"] = config.alpha;
  doc["tail"] = to_string(config.tail);
  return doc.dump(2) + "\n";
}

}  // namespace aemr
