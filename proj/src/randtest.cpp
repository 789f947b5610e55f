#include "aemr/randtest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "aemr/error.hpp"
#include "aemr/log.hpp"
#include "aemr/parallel.hpp"
#include "aemr/rng.hpp"
#include "aemr/statistics.hpp"

namespace aemr {

std::string to_string(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::PlainF: return "plain_F";
    case StatisticKind::CleverF: return "clever_F";
    case StatisticKind::WeightedDiff: return "weighted_diff";
  }
  return "?";
}

StatisticKind parse_statistic(std::string_view text) {
  if (text == "plain_F" || text == "plain_f" || text == "plain") return StatisticKind::PlainF;
  if (text == "clever_F" || text == "clever_f" || text == "clever") return StatisticKind::CleverF;
  if (text == "weighted_diff" || text == "weighted") return StatisticKind::WeightedDiff;
  throw Error(ErrorCode::Config, "unknown statistic '" + std::string(text) + "'");
}

std::string to_string(Tail tail) { return tail == Tail::Upper ? "upper" : "lower"; }

Tail parse_tail(std::string_view text) {
  if (text == "upper") return Tail::Upper;
  if (text == "lower") return Tail::Lower;
  throw Error(ErrorCode::Config, "unknown tail '" + std::string(text) + "'");
}

NullSpec::NullSpec(double b) : beta0(b) {
  if (!std::isfinite(b)) throw Error(ErrorCode::InvalidArgument, "beta0 must be finite");
}

double adjusted_outcome(double y, double d, double beta0) { return y - beta0 * d; }

CovariateValue clever_covariate(Allele z, double pi) {
  if (!(pi > 0.0 && pi < 1.0)) return {0.0, false};
  return {z ? 1.0 / pi : -1.0 / (1.0 - pi), true};
}

CovariateValue genotype_clever_covariate(int z, double pi_maternal, double pi_paternal) {
  const double var =
      pi_maternal * (1.0 - pi_maternal) + pi_paternal * (1.0 - pi_paternal);
  if (!(var > 0.0)) return {0.0, false};
  return {(z - pi_maternal - pi_paternal) / var, true};
}

namespace {

StatisticValue regression_f(const Eigen::MatrixXd& regressors,
                            const CenteredResponse& response) {
  const LeastSquaresF fit(regressors);
  return {fit.statistic(response), fit.rank() > 0};
}

Eigen::MatrixXd hstack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

void check_shapes(std::size_t n, const Eigen::MatrixXd& z, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(z.rows()) != n ||
      (x.size() > 0 && static_cast<std::size_t>(x.rows()) != n)) {
    throw Error(ErrorCode::InvalidArgument, "statistic inputs differ in length");
  }
}

}  // namespace

StatisticValue compute_statistic(StatisticKind kind, std::span<const double> q,
                                 const Eigen::MatrixXd& z, const Eigen::MatrixXd& x) {
  check_shapes(q.size(), z, x);
  switch (kind) {
    case StatisticKind::PlainF:
      return regression_f(z, CenteredResponse(q));
    case StatisticKind::CleverF:
      return regression_f(hstack(z, x), CenteredResponse(q));
    case StatisticKind::WeightedDiff: {
      if (x.cols() == 0) {
        throw Error(ErrorCode::InvalidArgument, "weighted_diff needs clever covariates");
      }
      const Eigen::Map<const Eigen::VectorXd> qv(q.data(), static_cast<Eigen::Index>(q.size()));
      const Eigen::VectorXd s = x.transpose() * qv;
      return {s.norm(), (x.array() != 0.0).any()};
    }
  }
  return {};
}

// ---------------------------------------------------------------------------

RandomizationDesign::RandomizationDesign(const Cohort& cohort, const MeiosisModel& model,
                                         std::vector<AdjustmentSpec> specs)
    : cohort_(&cohort), epsilon_(model.epsilon()), specs_(std::move(specs)) {
  if (specs_.empty()) throw Error(ErrorCode::InvalidArgument, "no instruments given");
  if (!(cohort.map() == model.map())) {
    throw Error(ErrorCode::InvalidArgument, "cohort and model use different maps");
  }
  const std::size_t r = specs_.size();
  std::set<std::pair<Locus, Origin>> seen;
  for (const auto& s : specs_) {
    if (!model.map().contains(s.instrument)) {
      throw Error(ErrorCode::Config, "instrument locus " + std::to_string(s.instrument) +
                                         " outside 1.." + std::to_string(model.num_loci()));
    }
    for (Origin o : origins_of(s.side)) {
      if (!seen.emplace(s.instrument, o).second) {
        throw Error(ErrorCode::Config, "locus " + std::to_string(s.instrument) +
                                           " used twice for the same parent");
      }
    }
  }

  const auto& trios = cohort.trios();
  num_trios_ = trios.size();
  components_.resize(num_trios_);
  pi_.assign(num_trios_ * r * 2, 0.0);
  d_.resize(num_trios_);
  y_.resize(num_trios_);
  z_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(num_trios_), static_cast<Eigen::Index>(r));

  for (std::size_t i = 0; i < num_trios_; ++i) {
    const Trio& trio = trios[i];
    d_[i] = trio.exposure;
    y_[i] = trio.outcome;
    for (Origin o : {Origin::Maternal, Origin::Paternal}) {
      const HaplotypePair& parent = trio.parent(o);
      const Haplotype& child = trio.transmitted(o);
      struct Group {
        ConditioningWindow window;
        std::vector<std::pair<Locus, std::size_t>> members;
      };
      std::vector<Group> groups;
      for (std::size_t col = 0; col < r; ++col) {
        const auto sides = origins_of(specs_[col].side);
        if (std::find(sides.begin(), sides.end(), o) == sides.end()) continue;
        const auto resolved = resolve_window(specs_[col], model.map(), parent);
        if (resolved.fell_back) ++fallbacks_;
        auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
          return g.window == resolved.window;
        });
        if (it == groups.end()) {
          groups.push_back({resolved.window, {}});
          it = std::prev(groups.end());
        }
        it->members.emplace_back(specs_[col].instrument, col);
      }
      for (const auto& g : groups) {
        for (const auto& h : groups) {
          if (&g == &h) continue;
          for (const auto& [locus, col] : h.members) {
            if (g.window.contains(locus)) {
              throw Error(ErrorCode::InvalidConditioning,
                          "instrument " + std::to_string(locus) +
                              " lies inside the unobserved window of another instrument "
                              "(family " + trio.family_id + ")");
            }
          }
        }
      }
      for (auto& g : groups) {
        std::sort(g.members.begin(), g.members.end());
        std::vector<Locus> targets;
        Component comp{o, {}, {}};
        for (const auto& [locus, col] : g.members) {
          targets.push_back(locus);
          comp.columns.push_back(col);
        }
        comp.joint = joint_propensity(model, parent, child, targets, g.window);
        const auto pis = allele_propensities(comp.joint, parent, epsilon_);
        for (std::size_t k = 0; k < targets.size(); ++k) {
          pi_[(i * r + comp.columns[k]) * 2 + index_of(o)] = pis[k];
          z_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(comp.columns[k])) +=
              child[targets[k] - 1];
        }
        components_[i].push_back(std::move(comp));
      }
    }
  }
  if (fallbacks_ > 0) {
    log::warn(std::to_string(fallbacks_) +
              " flank searches found no heterozygous locus on one side; the window "
              "was extended to the chromosome end");
  }
  covariates(z_, x_);
}

std::string RandomizationDesign::label() const {
  std::string out;
  for (const auto& s : specs_) {
    if (!out.empty()) out += '+';
    out += std::to_string(s.instrument) + ':' + to_string(s.side);
  }
  return out;
}

double RandomizationDesign::propensity(std::size_t i, std::size_t r, Origin o) const {
  return pi_.at((i * specs_.size() + r) * 2 + index_of(o));
}

bool RandomizationDesign::informative(std::size_t i, std::size_t r) const {
  const double pm = propensity(i, r, Origin::Maternal);
  const double pf = propensity(i, r, Origin::Paternal);
  switch (specs_[r].side) {
    case InstrumentSide::Maternal: return pm > 0.0 && pm < 1.0;
    case InstrumentSide::Paternal: return pf > 0.0 && pf < 1.0;
    case InstrumentSide::Genotype:
      return pm * (1.0 - pm) + pf * (1.0 - pf) > 0.0;
  }
  return false;
}

std::vector<double> RandomizationDesign::adjusted(double beta0) const {
  std::vector<double> q(num_trios_);
  for (std::size_t i = 0; i < num_trios_; ++i) q[i] = adjusted_outcome(y_[i], d_[i], beta0);
  return q;
}

void RandomizationDesign::covariates(const Eigen::MatrixXd& z, Eigen::MatrixXd& x) const {
  const std::size_t r = specs_.size();
  x.resize(z.rows(), z.cols());
  for (std::size_t i = 0; i < num_trios_; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t c = 0; c < r; ++c) {
      const auto col = static_cast<Eigen::Index>(c);
      const double pm = pi_[(i * r + c) * 2];
      const double pf = pi_[(i * r + c) * 2 + 1];
      switch (specs_[c].side) {
        case InstrumentSide::Maternal:
          x(row, col) = clever_covariate(static_cast<Allele>(z(row, col)), pm).value;
          break;
        case InstrumentSide::Paternal:
          x(row, col) = clever_covariate(static_cast<Allele>(z(row, col)), pf).value;
          break;
        case InstrumentSide::Genotype:
          x(row, col) =
              genotype_clever_covariate(static_cast<int>(z(row, col)), pm, pf).value;
          break;
      }
    }
  }
}

void RandomizationDesign::draw(std::uint64_t seed, std::uint64_t key, std::uint64_t k,
                               Eigen::MatrixXd& z, Eigen::MatrixXd& x) const {
  z.setZero(static_cast<Eigen::Index>(num_trios_), static_cast<Eigen::Index>(specs_.size()));
  std::vector<Allele> buffer;
  const auto& trios = cohort_->trios();
  for (std::size_t i = 0; i < num_trios_; ++i) {
    RngStream rng(seed, {stream_tag::kDraw, key, k, i});
    for (const auto& comp : components_[i]) {
      buffer.resize(comp.joint.size());
      sample_alleles(comp.joint, trios[i].parent(comp.origin), epsilon_, rng, buffer);
      for (std::size_t t = 0; t < buffer.size(); ++t) {
        z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(comp.columns[t])) += buffer[t];
      }
    }
  }
  covariates(z, x);
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kTieTolerance = 1e-10;

bool at_least_as_extreme(double tilde, double observed, Tail tail) {
  if (std::isinf(observed)) return tail == Tail::Upper ? tilde >= observed : tilde <= observed;
  const double slack = kTieTolerance * std::abs(observed);
  return tail == Tail::Upper ? tilde >= observed - slack : tilde <= observed + slack;
}

struct Responses {
  std::vector<std::vector<double>> raw;
  std::vector<CenteredResponse> centred;
};

// Statistics of every (kind, beta0) pair for one instrument matrix, written
// kind-major into `out`; `flags` receives the informative bits.
void evaluate_all(std::span<const StatisticKind> kinds, const Responses& resp,
                  const Eigen::MatrixXd& z, const Eigen::MatrixXd& x,
                  std::span<double> out, std::vector<bool>* flags) {
  const std::size_t nb = resp.raw.size();
  for (std::size_t a = 0; a < kinds.size(); ++a) {
    switch (kinds[a]) {
      case StatisticKind::PlainF:
      case StatisticKind::CleverF: {
        const LeastSquaresF fit(kinds[a] == StatisticKind::PlainF ? z : hstack(z, x));
        for (std::size_t b = 0; b < nb; ++b) {
          out[a * nb + b] = fit.statistic(resp.centred[b]);
          if (flags) (*flags)[a * nb + b] = fit.rank() > 0;
        }
        break;
      }
      case StatisticKind::WeightedDiff:
        for (std::size_t b = 0; b < nb; ++b) {
          const auto v = compute_statistic(kinds[a], resp.raw[b], z, x);
          out[a * nb + b] = v.value;
          if (flags) (*flags)[a * nb + b] = v.informative;
        }
        break;
    }
  }
}

}  // namespace

std::vector<RandomizationResult> run_randomization(
    const RandomizationDesign& design, std::span<const StatisticKind> kinds,
    std::span<const double> beta0s, std::size_t draws, std::uint64_t seed,
    const TestOptions& options) {
  if (draws == 0) throw Error(ErrorCode::InvalidArgument, "number of draws must be positive");
  if (kinds.empty() || beta0s.empty()) {
    throw Error(ErrorCode::InvalidArgument, "need at least one statistic and one beta0");
  }
  const std::size_t n = design.num_trios();
  const std::size_t r = design.num_instruments();
  const std::size_t width = 1 + 2 * r;
  if (n <= width) {
    throw Error(ErrorCode::InvalidArgument,
                "too few trios (" + std::to_string(n) + ") for " + std::to_string(r) +
                    " instrument(s)");
  }

  Responses resp;
  for (double b : beta0s) {
    const NullSpec null(b);
    resp.raw.push_back(design.adjusted(null.beta0));
    resp.centred.emplace_back(resp.raw.back());
  }
  const std::size_t m = kinds.size() * beta0s.size();
  std::vector<double> observed(m);
  std::vector<bool> informative(m);
  evaluate_all(kinds, resp, design.observed_instruments(), design.observed_covariates(),
               observed, &informative);

  // One flag byte per (draw, statistic): counting afterwards keeps the result
  // independent of scheduling.
  std::vector<unsigned char> extreme(draws * m);
  parallel_for(draws, options.threads, [&](std::size_t idx) {
    Eigen::MatrixXd z;
    Eigen::MatrixXd x;
    design.draw(seed, options.stream_key, idx + 1, z, x);
    std::vector<double> tilde(m);
    evaluate_all(kinds, resp, z, x, tilde, nullptr);
    for (std::size_t s = 0; s < m; ++s) {
      extreme[idx * m + s] = at_least_as_extreme(tilde[s], observed[s], options.tail);
    }
  });

  std::vector<RandomizationResult> out(m);
  for (std::size_t a = 0; a < kinds.size(); ++a) {
    for (std::size_t b = 0; b < beta0s.size(); ++b) {
      const std::size_t s = a * beta0s.size() + b;
      std::size_t count = 0;
      for (std::size_t k = 0; k < draws; ++k) count += extreme[k * m + s];
      auto& res = out[s];
      res.label = design.label();
      res.kind = kinds[a];
      res.beta0 = beta0s[b];
      res.observed_stat = observed[s];
      res.draws = draws;
      res.num_geq = count;
      res.p_value = static_cast<double>(count) / static_cast<double>(draws);
      res.p_value_corrected =
          static_cast<double>(count + 1) / static_cast<double>(draws + 1);
      res.seed = seed;
      res.informative = informative[s];
    }
  }
  return out;
}

RandomizationResult almost_exact_test(const RandomizationDesign& design,
                                      const NullSpec& null, StatisticKind kind,
                                      std::size_t draws, std::uint64_t seed,
                                      const TestOptions& options) {
  const StatisticKind kinds[] = {kind};
  const double betas[] = {null.beta0};
  return run_randomization(design, kinds, betas, draws, seed, options).front();
}

RandomizationResult almost_exact_test(const Cohort& cohort, const MeiosisModel& model,
                                      const AdjustmentSpec& spec, const NullSpec& null,
                                      StatisticKind kind, std::size_t draws,
                                      std::uint64_t seed, const TestOptions& options) {
  const RandomizationDesign design(cohort, model, {spec});
  return almost_exact_test(design, null, kind, draws, seed, options);
}

ConfidenceSet invert_test(const RandomizationDesign& design, StatisticKind kind,
                          std::span<const double> grid, std::size_t draws,
                          std::uint64_t seed, double alpha, const TestOptions& options) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty beta0 grid");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw Error(ErrorCode::InvalidArgument, "beta0 grid must be sorted");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
  }
  const StatisticKind kinds[] = {kind};
  ConfidenceSet out;
  out.tests = run_randomization(design, kinds, grid, draws, seed, options);
  bool open = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const bool keep = out.tests[g].p_value_corrected > alpha;
    if (keep) {
      out.retained.push_back(grid[g]);
      if (open) {
        out.intervals.back().second = grid[g];
      } else {
        out.intervals.emplace_back(grid[g], grid[g]);
      }
    }
    open = keep;
  }
  return out;
}

FisherResult fisher_combine(std::span<const double> pvalues,
                            std::optional<std::size_t> draws) {
  if (pvalues.empty()) throw Error(ErrorCode::InvalidArgument, "no p-values to combine");
  FisherResult out;
  double sum = 0.0;
  for (double p : pvalues) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "p-value outside [0, 1]");
    }
    if (p == 0.0) {
      if (!draws) throw Error(ErrorCode::InvalidArgument, "p-value of zero");
      p = 1.0 / static_cast<double>(*draws + 1);
      ++out.clamped;
    }
    sum += std::log(p);
  }
  if (out.clamped > 0) {
    log::warn(std::to_string(out.clamped) + " zero p-value(s) raised to 1/(K+1) before combining");
  }
  out.statistic = sum == 0.0 ? 0.0 : -2.0 * sum;
  out.p_value = chi_square_survival(out.statistic, 2.0 * static_cast<double>(pvalues.size()));
  return out;
}

}  // namespace aemr
