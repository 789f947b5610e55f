#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "aemr/analysis_config.hpp"
#include "aemr/error.hpp"
#include "aemr/log.hpp"
#include "aemr/parallel.hpp"
#include "aemr/power.hpp"
#include "aemr/randtest.hpp"
#include "aemr/simgen.hpp"
#include "aemr/version.hpp"

namespace aemr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Where results go: a file when --out was given, the command's stream otherwise.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : path_(path) {
    if (!path.empty()) {
      if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
      file_.open(path, std::ios::binary);
      if (!file_) throw Error(ErrorCode::Config, "cannot write '" + path + "'");
    }
    stream_ = path.empty() ? &fallback : &file_;
  }
  std::ostream& operator*() { return *stream_; }
  std::ostream* operator->() { return stream_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream file_;
  std::ostream* stream_;
};

struct Manifest {
  json doc;

  Manifest(std::string command, const std::vector<std::string>& args) {
    doc["command"] = std::move(command);
    doc["version"] = std::string(kVersion);
    doc["arguments"] = std::vector<std::string>(args.begin() + 1, args.end());
    doc["started"] = utc_now();
    doc["outputs"] = json::array();
  }

  // --manifest wins, then "<out>.manifest.json", else one JSON line on stderr.
  void write(const std::string& explicit_path, const std::string& out_path,
             std::ostream& err) {
    doc["finished"] = utc_now();
    std::string target = explicit_path;
    if (target.empty() && !out_path.empty()) target = out_path + ".manifest.json";
    if (target.empty()) {
      err << doc.dump() << '\n';
      return;
    }
    std::ofstream f(target, std::ios::binary);
    if (!f) throw Error(ErrorCode::Config, "cannot write manifest '" + target + "'");
    f << doc.dump(2) << '\n';
  }
};

std::size_t threads_from(const std::optional<std::size_t>& requested) {
  return resolve_threads(requested);
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string out;
  std::size_t n = 15000;
  std::uint64_t seed = 1;
  double beta = 0.0;
  std::optional<double> epsilon;
  bool raw_scale = false;
  std::optional<std::size_t> threads;
  std::string manifest;
};

int cmd_simulate(const SimulateArgs& a, const std::vector<std::string>& argv,
                 std::ostream& out, std::ostream& err) {
  Manifest manifest("simulate", argv);
  SimParams params = default_params();
  params.num_trios = a.n;
  params.beta = a.beta;
  if (a.epsilon) params.epsilon = *a.epsilon;
  params.standardize = !a.raw_scale;
  params.threads = threads_from(a.threads);
  const auto sim = make_cohort(params, a.seed);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  const auto files = cohort_files_in(dir);
  write_cohort(sim.cohort, files);

  AnalysisConfig cfg;
  cfg.map = files.map.filename();
  cfg.haplotypes = files.haplotypes.filename();
  cfg.phenotypes = files.phenotypes.filename();
  cfg.epsilon = params.epsilon;
  cfg.instruments = sim.specs;
  cfg.roles = sim.roles;
  cfg.seed = a.seed;
  cfg.statistics = {StatisticKind::CleverF};
  cfg.joint = true;
  const fs::path sidecar = dir / "analysis.json";
  {
    std::ofstream f(sidecar, std::ios::binary);
    if (!f) throw Error(ErrorCode::Config, "cannot write '" + sidecar.string() + "'");
    f << serialize_analysis_config(cfg);
  }

  manifest.doc["seed"] = a.seed;
  manifest.doc["parameters"] = {{"n", params.num_trios},
                                {"beta", params.beta},
                                {"epsilon", params.epsilon},
                                {"standardize", params.standardize},
                                {"exposure_scale", sim.scales.exposure},
                                {"outcome_scale", sim.scales.outcome}};
  for (const auto& p : {files.map, files.haplotypes, files.phenotypes, sidecar}) {
    manifest.doc["outputs"].push_back(p.string());
    out << p.string() << '\n';
  }
  manifest.write(a.manifest.empty() ? (dir / "manifest.json").string() : a.manifest, {}, err);
  return kOk;
}

// ---------------------------------------------------------------------------

struct TestArgs {
  std::string config;
  std::vector<std::string> statistics;
  std::vector<double> beta0s;
  std::optional<std::size_t> draws;
  std::optional<std::uint64_t> seed;
  std::string tail;
  bool joint = false;
  bool separate = false;
  bool fisher = false;
  std::optional<std::size_t> threads;
  std::string out;
  bool as_json = false;
  std::string manifest;
};

struct LoadedData {
  AnalysisConfig cfg;
  Cohort cohort;
};

LoadedData load_data(const std::string& config_path) {
  LoadedData d{load_analysis_config(config_path), {}};
  d.cohort = load_cohort(load_genetic_map(d.cfg.map), d.cfg.haplotypes, d.cfg.phenotypes);
  return d;
}

void report_validity(const AnalysisConfig& cfg, const GeneticMap& map) {
  if (!cfg.roles) {
    log::info("variant roles not declared; instrument validity not checked");
    return;
  }
  for (const auto& spec : cfg.instruments) {
    if (std::holds_alternative<HeterozygousFlankRule>(spec.rule)) {
      log::info("instrument " + std::to_string(spec.instrument) +
                ": flank windows vary by trio; validity not checked");
      continue;
    }
    const auto report = check_validity(spec, *cfg.roles, map);
    if (!report.relevance) {
      log::warn("instrument " + std::to_string(spec.instrument) +
                ": no exposure-causal locus in the unobserved window (relevance fails)");
    }
    if (!report.exclusion) {
      log::warn("instrument " + std::to_string(spec.instrument) +
                ": pleiotropic locus in the unobserved window (exclusion fails)");
    }
  }
}

json result_json(const RandomizationResult& r) {
  return {{"instrument", r.label},   {"statistic", to_string(r.kind)},
          {"beta0", r.beta0},        {"stat", r.observed_stat},
          {"draws", r.draws},        {"num_geq", r.num_geq},
          {"p", r.p_value},          {"p_corrected", r.p_value_corrected},
          {"seed", r.seed},          {"informative", r.informative}};
}

constexpr const char* kTestHeader = "instrument\tbeta0\tstat\tp\tp_corrected\tK\tseed\tstatistic";

int cmd_test(const TestArgs& a, const std::vector<std::string>& argv, std::ostream& out,
             std::ostream& err) {
  Manifest manifest("test", argv);
  auto [cfg, cohort] = load_data(a.config);
  if (!a.statistics.empty()) {
    cfg.statistics.clear();
    for (const auto& s : a.statistics) cfg.statistics.push_back(parse_statistic(s));
  }
  if (!a.beta0s.empty()) cfg.beta0s = a.beta0s;
  if (a.draws) {
    if (*a.draws == 0) throw Error(ErrorCode::Config, "--draws must be positive");
    cfg.draws = *a.draws;
  }
  if (a.seed) cfg.seed = *a.seed;
  if (!a.tail.empty()) cfg.tail = parse_tail(a.tail);
  if (a.joint) cfg.joint = true;
  if (a.separate) cfg.joint = false;
  if (a.fisher) cfg.fisher = true;
  for (double b : cfg.beta0s) {
    if (!std::isfinite(b)) throw Error(ErrorCode::Config, "beta0 values must be finite");
  }
  for (const auto& spec : cfg.instruments) {
    if (!cohort.map().contains(spec.instrument)) {
      throw Error(ErrorCode::Config, "instrument locus " + std::to_string(spec.instrument) +
                                         " is not on the map (1.." +
                                         std::to_string(cohort.num_loci()) + ")");
    }
  }
  report_validity(cfg, cohort.map());

  const MeiosisModel model(cohort.map(), cfg.epsilon);
  TestOptions opts;
  opts.threads = threads_from(a.threads);
  opts.tail = cfg.tail;

  std::vector<RandomizationResult> rows;
  json sets = json::array();
  auto run_one = [&](const RandomizationDesign& design, std::uint64_t key) {
    opts.stream_key = key;
    auto res = run_randomization(design, cfg.statistics, cfg.beta0s, cfg.draws, cfg.seed, opts);
    for (std::size_t k = 0; k < cfg.statistics.size(); ++k) {
      json intervals = json::array();
      bool open = false;
      for (std::size_t b = 0; b < cfg.beta0s.size(); ++b) {
        const auto& r = res[k * cfg.beta0s.size() + b];
        const bool keep = r.p_value_corrected > cfg.alpha;
        if (keep && open) intervals.back()[1] = r.beta0;
        if (keep && !open) intervals.push_back({r.beta0, r.beta0});
        open = keep;
      }
      sets.push_back({{"instrument", design.label()},
                      {"statistic", to_string(cfg.statistics[k])},
                      {"alpha", cfg.alpha},
                      {"intervals", intervals}});
    }
    rows.insert(rows.end(), res.begin(), res.end());
  };
  if (cfg.joint) {
    run_one(RandomizationDesign(cohort, model, cfg.instruments), 0);
  } else {
    for (std::size_t k = 0; k < cfg.instruments.size(); ++k) {
      run_one(RandomizationDesign(cohort, model, {cfg.instruments[k]}), k + 1);
    }
  }

  struct FisherRow {
    StatisticKind kind;
    double beta0;
    FisherResult raw;
    FisherResult corrected;
  };
  std::vector<FisherRow> fisher;
  if (cfg.fisher && !cfg.joint) {
    for (std::size_t k = 0; k < cfg.statistics.size(); ++k) {
      for (std::size_t b = 0; b < cfg.beta0s.size(); ++b) {
        std::vector<double> p, pc;
        for (const auto& r : rows) {
          if (r.kind == cfg.statistics[k] && r.beta0 == cfg.beta0s[b]) {
            p.push_back(r.p_value);
            pc.push_back(r.p_value_corrected);
          }
        }
        fisher.push_back({cfg.statistics[k], cfg.beta0s[b], fisher_combine(p, cfg.draws),
                          fisher_combine(pc, cfg.draws)});
      }
    }
  } else if (cfg.fisher) {
    log::warn("fisher combination skipped: the instruments were tested jointly");
  }

  // Group rows by statistic, then instrument, then beta0.
  std::vector<const RandomizationResult*> ordered;
  for (const auto& r : rows) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(), [](auto* x, auto* y) {
    return static_cast<int>(x->kind) < static_cast<int>(y->kind);
  });

  Sink sink(a.out, out);
  if (a.as_json) {
    json doc;
    doc["results"] = json::array();
    for (auto* r : ordered) doc["results"].push_back(result_json(*r));
    doc["fisher"] = json::array();
    for (const auto& f : fisher) {
      doc["fisher"].push_back({{"statistic", to_string(f.kind)},
                               {"beta0", f.beta0},
                               {"fisher_stat", f.raw.statistic},
                               {"p", f.raw.p_value},
                               {"p_corrected", f.corrected.p_value},
                               {"draws", cfg.draws},
                               {"seed", cfg.seed}});
    }
    doc["confidence_sets"] = sets;
    *sink << doc.dump(2) << '\n';
  } else {
    *sink << kTestHeader << '\n';
    for (auto* r : ordered) {
      *sink << r->label << '\t' << num(r->beta0) << '\t' << num(r->observed_stat) << '\t'
            << num(r->p_value) << '\t' << num(r->p_value_corrected) << '\t' << r->draws
            << '\t' << r->seed << '\t' << to_string(r->kind) << '\n';
    }
    for (const auto& f : fisher) {
      *sink << "fisher\t" << num(f.beta0) << '\t' << num(f.raw.statistic) << '\t'
            << num(f.raw.p_value) << '\t' << num(f.corrected.p_value) << '\t' << cfg.draws
            << '\t' << cfg.seed << '\t' << to_string(f.kind) << '\n';
    }
  }
  sink->flush();

  manifest.doc["config"] = a.config;
  manifest.doc["seed"] = cfg.seed;
  manifest.doc["draws"] = cfg.draws;
  if (!a.out.empty()) manifest.doc["outputs"].push_back(a.out);
  manifest.write(a.manifest, a.out, err);
  return kOk;
}

// ---------------------------------------------------------------------------

struct PowerArgs {
  std::size_t n = 2000;
  std::size_t reps = 100;
  std::size_t draws = 500;
  double alpha = 0.05;
  double beta = 0.0;
  std::vector<double> beta0s;
  std::vector<std::string> statistics;
  std::uint64_t seed = 1;
  std::optional<double> epsilon;
  std::string tail;
  std::optional<std::size_t> threads;
  std::string out;
  bool as_json = false;
  std::string manifest;
};

int cmd_power(const PowerArgs& a, const std::vector<std::string>& argv, std::ostream& out,
              std::ostream& err) {
  Manifest manifest("power", argv);
  PowerRequest req;
  req.params.num_trios = a.n;
  req.params.beta = a.beta;
  if (a.epsilon) req.params.epsilon = *a.epsilon;
  if (!a.statistics.empty()) {
    req.kinds.clear();
    for (const auto& s : a.statistics) req.kinds.push_back(parse_statistic(s));
  }
  if (!a.beta0s.empty()) req.beta0s = a.beta0s;
  for (double b : req.beta0s) {
    if (!std::isfinite(b)) throw Error(ErrorCode::Config, "beta0 values must be finite");
  }
  if (a.reps == 0 || a.draws == 0) {
    throw Error(ErrorCode::Config, "--reps and --draws must be positive");
  }
  if (!(a.alpha >= 0.0 && a.alpha <= 1.0)) throw Error(ErrorCode::Config, "--alpha must lie in [0, 1]");
  req.replications = a.reps;
  req.draws = a.draws;
  req.alpha = a.alpha;
  req.seed = a.seed;
  req.threads = threads_from(a.threads);
  if (!a.tail.empty()) req.tail = parse_tail(a.tail);

  const auto study = run_power(req);

  Sink sink(a.out, out);
  if (a.as_json) {
    json doc;
    doc["rows"] = json::array();
    for (std::size_t c = 0; c < study.rows.size(); ++c) {
      const auto& r = study.rows[c];
      doc["rows"].push_back({{"statistic", to_string(r.kind)},
                             {"beta0", r.beta0},
                             {"rejection_rate", r.rate()},
                             {"rejections", r.rejections},
                             {"replications", r.replications},
                             {"p_corrected", study.pvalues(c)}});
    }
    doc["n"] = a.n;
    doc["draws"] = a.draws;
    doc["alpha"] = a.alpha;
    doc["beta"] = a.beta;
    doc["seed"] = a.seed;
    *sink << doc.dump(2) << '\n';
  } else {
    *sink << "statistic\tbeta0\trejection_rate\trejections\treplications\n";
    for (const auto& r : study.rows) {
      *sink << to_string(r.kind) << '\t' << num(r.beta0) << '\t' << num(r.rate()) << '\t'
            << r.rejections << '\t' << r.replications << '\n';
    }
  }
  sink->flush();

  manifest.doc["seed"] = a.seed;
  if (!a.out.empty()) manifest.doc["outputs"].push_back(a.out);
  manifest.write(a.manifest, a.out, err);
  return kOk;
}

// ---------------------------------------------------------------------------

struct PropensityArgs {
  std::string config;
  std::optional<double> epsilon;
  std::string out;
  bool as_json = false;
  std::string manifest;
};

int cmd_propensity(const PropensityArgs& a, const std::vector<std::string>& argv,
                   std::ostream& out, std::ostream& err) {
  Manifest manifest("propensity", argv);
  auto [cfg, cohort] = load_data(a.config);
  if (a.epsilon) cfg.epsilon = *a.epsilon;
  const MeiosisModel model(cohort.map(), cfg.epsilon);

  struct Row {
    const std::string* family;
    Locus locus;
    Origin side;
    double pi;
  };
  std::vector<Row> rows;
  std::size_t fallbacks = 0;
  for (const auto& trio : cohort.trios()) {
    for (const auto& spec : cfg.instruments) {
      for (Origin o : origins_of(spec.side)) {
        const auto resolved = resolve_window(spec, cohort.map(), trio.parent(o));
        fallbacks += resolved.fell_back;
        const auto p = propensity_score(model, trio.parent(o), trio.transmitted(o),
                                        spec.instrument, resolved.window, o);
        rows.push_back({&trio.family_id, spec.instrument, o, p.pi});
      }
    }
  }
  if (fallbacks > 0) {
    log::warn(std::to_string(fallbacks) +
              " flank searches fell back to a chromosome end");
  }
  auto side_name = [](Origin o) { return o == Origin::Maternal ? "maternal" : "paternal"; };
  auto informative = [](double pi) { return pi > 0.0 && pi < 1.0; };

  Sink sink(a.out, out);
  if (a.as_json) {
    json doc = json::array();
    for (const auto& r : rows) {
      doc.push_back({{"family", *r.family},
                     {"locus", r.locus},
                     {"side", side_name(r.side)},
                     {"pi", r.pi},
                     {"informative", informative(r.pi)}});
    }
    *sink << doc.dump(2) << '\n';
  } else {
    *sink << "family\tlocus\tside\tpi\tinformative\n";
    for (const auto& r : rows) {
      *sink << *r.family << '\t' << r.locus << '\t' << side_name(r.side) << '\t' << num(r.pi)
            << '\t' << (informative(r.pi) ? "yes" : "no") << '\n';
    }
  }
  sink->flush();
  manifest.doc["config"] = a.config;
  if (!a.out.empty()) manifest.doc["outputs"].push_back(a.out);
  manifest.write(a.manifest, a.out, err);
  return kOk;
}

// ---------------------------------------------------------------------------

struct CombineArgs {
  std::string in;
  std::string out;
  std::string manifest;
};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, '\t')) out.push_back(cur);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

double parse_number(const std::string& text, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, "combine input line " + std::to_string(line) +
                                      ": '" + text + "' is not a number");
  }
}

int cmd_combine(const CombineArgs& a, const std::vector<std::string>& argv, std::ostream& out,
                std::istream& in_default, std::ostream& err) {
  Manifest manifest("combine", argv);
  std::ifstream file;
  std::istream* in = &in_default;
  if (a.in != "-") {
    file.open(a.in);
    if (!file) throw Error(ErrorCode::Parse, "cannot open '" + a.in + "'");
    in = &file;
  }
  std::string header;
  if (!std::getline(*in, header)) throw Error(ErrorCode::Parse, "combine input is empty");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const auto cols = split_tabs(header);
  auto col = [&](const char* name) -> std::optional<std::size_t> {
    const auto it = std::find(cols.begin(), cols.end(), name);
    if (it == cols.end()) return std::nullopt;
    return static_cast<std::size_t>(it - cols.begin());
  };
  const auto c_inst = col("instrument"), c_beta = col("beta0"), c_p = col("p"),
             c_pc = col("p_corrected"), c_k = col("K"), c_seed = col("seed");
  const auto c_stat = col("statistic");
  if (!c_inst || !c_beta || !c_p || !c_pc || !c_k || !c_seed) {
    throw Error(ErrorCode::Parse, "combine input lacks the test columns");
  }

  struct Group {
    std::string statistic;
    std::string beta0;
    std::vector<double> p, pc;
    std::size_t draws = 0;
    std::string seed;
  };
  std::vector<Group> groups;
  std::vector<std::string> kept;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(*in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != cols.size()) {
      throw Error(ErrorCode::Parse, "combine input line " + std::to_string(lineno) +
                                        ": expected " + std::to_string(cols.size()) +
                                        " fields");
    }
    if (f[*c_inst] == "fisher") continue;
    kept.push_back(line);
    const std::string stat = c_stat ? f[*c_stat] : std::string();
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.statistic == stat && g.beta0 == f[*c_beta];
    });
    if (it == groups.end()) {
      groups.push_back({stat, f[*c_beta], {}, {}, 0, f[*c_seed]});
      it = std::prev(groups.end());
    }
    it->p.push_back(parse_number(f[*c_p], lineno));
    it->pc.push_back(parse_number(f[*c_pc], lineno));
    const double k = parse_number(f[*c_k], lineno);
    if (!(k >= 1.0) || k != std::floor(k)) {
      throw Error(ErrorCode::Parse, "combine input line " + std::to_string(lineno) +
                                        ": K must be a positive integer");
    }
    it->draws = std::max(it->draws, static_cast<std::size_t>(k));
  }
  if (groups.empty()) throw Error(ErrorCode::Parse, "combine input has no test rows");

  Sink sink(a.out, out);
  *sink << header << '\n';
  for (const auto& l : kept) *sink << l << '\n';
  for (const auto& g : groups) {
    const auto raw = fisher_combine(g.p, g.draws);
    const auto corr = fisher_combine(g.pc, g.draws);
    std::vector<std::string> f(cols.size());
    f[*c_inst] = "fisher";
    f[*c_beta] = g.beta0;
    if (const auto c = col("stat")) f[*c] = num(raw.statistic);
    f[*c_p] = num(raw.p_value);
    f[*c_pc] = num(corr.p_value);
    f[*c_k] = std::to_string(g.draws);
    f[*c_seed] = g.seed;
    if (c_stat) f[*c_stat] = g.statistic;
    for (std::size_t k = 0; k < f.size(); ++k) *sink << (k ? "\t" : "") << f[k];
    *sink << '\n';
  }
  sink->flush();
  if (!a.out.empty()) manifest.doc["outputs"].push_back(a.out);
  manifest.doc["input"] = a.in;
  manifest.write(a.manifest, a.out, err);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Almost exact randomization tests for within-family Mendelian randomization",
               args.empty() ? "aemr" : args[0]};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  bool quiet = false, verbose = false;
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");
  app.add_flag("-v,--verbose", verbose, "Print progress notes");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Generate a synthetic trio cohort");
  s->add_option("--out", sim.out, "Output directory")->required();
  s->add_option("--n", sim.n, "Number of trios")->check(CLI::PositiveNumber);
  s->add_option("--seed", sim.seed, "Master seed");
  s->add_option("--beta", sim.beta, "True causal effect");
  s->add_option("--epsilon", sim.epsilon, "De novo mutation rate");
  s->add_flag("--raw-scale", sim.raw_scale, "Do not rescale D and Y to unit variance");
  s->add_option("--threads", sim.threads, "Worker threads (default AEMR_THREADS or 1)");
  s->add_option("--manifest", sim.manifest, "Manifest path (default <out>/manifest.json)");

  TestArgs test;
  auto* t = app.add_subcommand("test", "Run the randomization test described by a config");
  t->add_option("--config", test.config, "Analysis config (JSON)")->required();
  t->add_option("--statistic", test.statistics, "plain_F, clever_F or weighted_diff");
  t->add_option("--beta0", test.beta0s, "Hypothesised effect(s)");
  t->add_option("--draws,-K", test.draws, "Monte Carlo draws");
  t->add_option("--seed", test.seed, "Master seed");
  t->add_option("--tail", test.tail, "upper (default) or lower");
  auto* joint = t->add_flag("--joint", test.joint, "Test all instruments in one regression");
  t->add_flag("--separate", test.separate, "Test instruments one at a time")->excludes(joint);
  t->add_flag("--fisher", test.fisher, "Append Fisher combination rows");
  t->add_option("--threads", test.threads, "Worker threads (default AEMR_THREADS or 1)");
  t->add_option("--out", test.out, "Output file (default stdout)");
  t->add_flag("--json", test.as_json, "Full-precision JSON output");
  t->add_option("--manifest", test.manifest, "Manifest path");

  PowerArgs pow;
  auto* p = app.add_subcommand("power", "Rejection frequencies on simulated cohorts");
  p->add_option("--n", pow.n, "Trios per replicate")->check(CLI::PositiveNumber);
  p->add_option("--reps", pow.reps, "Replications");
  p->add_option("--draws,-K", pow.draws, "Monte Carlo draws per test");
  p->add_option("--alpha", pow.alpha, "Rejection level");
  p->add_option("--beta", pow.beta, "True causal effect");
  p->add_option("--beta0", pow.beta0s, "Hypothesised effect(s)");
  p->add_option("--statistic", pow.statistics, "Statistics (default plain_F clever_F)");
  p->add_option("--seed", pow.seed, "Master seed");
  p->add_option("--epsilon", pow.epsilon, "De novo mutation rate");
  p->add_option("--tail", pow.tail, "upper (default) or lower");
  p->add_option("--threads", pow.threads, "Worker threads (default AEMR_THREADS or 1)");
  p->add_option("--out", pow.out, "Output file (default stdout)");
  p->add_flag("--json", pow.as_json, "Full-precision JSON output");
  p->add_option("--manifest", pow.manifest, "Manifest path");

  PropensityArgs prop;
  auto* q = app.add_subcommand("propensity", "Print propensity scores per trio");
  q->add_option("--config", prop.config, "Analysis config (JSON)")->required();
  q->add_option("--epsilon", prop.epsilon, "Override the mutation rate");
  q->add_option("--out", prop.out, "Output file (default stdout)");
  q->add_flag("--json", prop.as_json, "Full-precision JSON output");
  q->add_option("--manifest", prop.manifest, "Manifest path");

  CombineArgs comb;
  auto* c = app.add_subcommand("combine", "Append Fisher rows to a test TSV");
  c->add_option("--in", comb.in, "Test TSV ('-' for stdin)")->required();
  c->add_option("--out", comb.out, "Output file (default stdout)");
  c->add_option("--manifest", comb.manifest, "Manifest path");

  try {
    std::vector<std::string> rest(args.rbegin(), args.rend());
    if (!rest.empty()) rest.pop_back();
    app.parse(std::move(rest));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  const auto previous = log::level();
  log::set_level(quiet ? log::Level::Quiet : verbose ? log::Level::Info : log::Level::Warning);
  int code = kOk;
  try {
    if (s->parsed()) code = cmd_simulate(sim, args, out, err);
    if (t->parsed()) code = cmd_test(test, args, out, err);
    if (p->parsed()) code = cmd_power(pow, args, out, err);
    if (q->parsed()) code = cmd_propensity(prop, args, out, err);
    if (c->parsed()) code = cmd_combine(comb, args, out, std::cin, err);
  } catch (const Error& e) {
    err << "aemr: " << e.what() << '\n';
    code = e.is_data_error() ? kData : kUsage;
  } catch (const fs::filesystem_error& e) {
    err << "aemr: " << e.what() << '\n';
    code = kUsage;
  }
  log::set_level(previous);
  return code;
}

}  // namespace aemr::cli
