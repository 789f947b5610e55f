#include "aemr/meiosis_hmm.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "aemr/error.hpp"

namespace aemr {

double transition_stay_prob(double morgans) {
  if (std::isnan(morgans) || morgans < 0.0) {
    throw Error(ErrorCode::NegativeDistance,
                "transition distance must be nonnegative");
  }
  if (std::isinf(morgans)) return 0.5;
  return 0.5 * (1.0 + std::exp(-2.0 * morgans));
}

double emission_prob(Allele z, Allele parent_allele, double epsilon) {
  return z == parent_allele ? 1.0 - epsilon : epsilon;
}

// ---------------------------------------------------------------------------

MeiosisModel::MeiosisModel(GeneticMap map, double epsilon)
    : map_(std::move(map)), epsilon_(epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) {
    throw Error(ErrorCode::InvalidArgument,
                "mutation rate must lie in [0, 0.5)");
  }
  const std::size_t p = map_.size();
  finite_prefix_.assign(p + 1, 0.0);
  unlinked_prefix_.assign(p + 1, 0);
  for (Locus j = 2; j <= p; ++j) {
    const double morgans = map_.cm_from_prev(j) / 100.0;
    finite_prefix_[j] = finite_prefix_[j - 1] + (std::isinf(morgans) ? 0.0 : morgans);
    unlinked_prefix_[j] = unlinked_prefix_[j - 1] + (std::isinf(morgans) ? 1 : 0);
  }
}

double MeiosisModel::morgans_from_prev(Locus j) const {
  if (j <= 1) return 0.0;
  return map_.cm_from_prev(j) / 100.0;
}

double MeiosisModel::morgans_between(Locus a, Locus b) const {
  if (a > b) std::swap(a, b);
  if (a < 1 || b > num_loci()) {
    throw Error(ErrorCode::InvalidArgument, "locus outside the map");
  }
  if (unlinked_prefix_[b] != unlinked_prefix_[a]) {
    return std::numeric_limits<double>::infinity();
  }
  return finite_prefix_[b] - finite_prefix_[a];
}

double MeiosisModel::stay_prob(Locus a, Locus b) const {
  if (a == b) return 1.0;
  return transition_stay_prob(morgans_between(a, b));
}

TransitionMatrix MeiosisModel::transition(Locus a, Locus b) const {
  const double s = stay_prob(a, b);
  return {StatePair{s, 1.0 - s}, StatePair{1.0 - s, s}};
}

// ---------------------------------------------------------------------------

std::vector<StatePair> emission_table(const MeiosisModel& model,
                                      const HaplotypePair& parent,
                                      const Haplotype& child) {
  const std::size_t p = model.num_loci();
  if (parent.size() != p || child.size() != p) {
    throw Error(ErrorCode::LengthMismatch,
                "haplotype length does not match the map");
  }
  std::vector<StatePair> e(p);
  for (std::size_t k = 0; k < p; ++k) {
    e[k] = {model.emission(child[k], parent.maternal[k]),
            model.emission(child[k], parent.paternal[k])};
  }
  return e;
}

namespace {

void check_range(const MeiosisModel& model, std::span<const StatePair> emissions,
                 LocusRange range) {
  if (range.first < 1 || range.last < range.first ||
      range.last > model.num_loci() || emissions.size() < range.last) {
    throw Error(ErrorCode::InvalidArgument,
                "locus range [" + std::to_string(range.first) + ", " +
                    std::to_string(range.last) + "] invalid");
  }
}

[[noreturn]] void impossible(Locus k) {
  throw Error(ErrorCode::ImpossibleHaplotype,
              "transmitted haplotype has probability zero at locus " +
                  std::to_string(k) + " (mutation rate 0)");
}

double normalise(StatePair& col, Locus k) {
  const double s = col[0] + col[1];
  if (!(s > 0.0)) impossible(k);
  col[0] /= s;
  col[1] /= s;
  return std::log(s);
}

}  // namespace

ScaledWeights forward_weights(const MeiosisModel& model,
                              std::span<const StatePair> emissions,
                              LocusRange range, StatePair initial) {
  check_range(model, emissions, range);
  ScaledWeights out{range, std::vector<StatePair>(range.size()),
                    std::vector<double>(range.size())};
  StatePair col{initial[0] * emissions[range.first - 1][0],
                initial[1] * emissions[range.first - 1][1]};
  out.log_scale[0] = normalise(col, range.first);
  out.weights[0] = col;
  for (Locus k = range.first + 1; k <= range.last; ++k) {
    const double s = model.stay_prob(k - 1, k);
    const StatePair& prev = out.weights[k - 1 - range.first];
    const StatePair& e = emissions[k - 1];
    StatePair next{e[0] * (s * prev[0] + (1.0 - s) * prev[1]),
                   e[1] * ((1.0 - s) * prev[0] + s * prev[1])};
    out.log_scale[k - range.first] = normalise(next, k);
    out.weights[k - range.first] = next;
  }
  return out;
}

ScaledWeights backward_weights(const MeiosisModel& model,
                               std::span<const StatePair> emissions,
                               LocusRange range, StatePair terminal) {
  check_range(model, emissions, range);
  ScaledWeights out{range, std::vector<StatePair>(range.size()),
                    std::vector<double>(range.size())};
  StatePair col = terminal;
  out.log_scale.back() = normalise(col, range.last);
  out.weights.back() = col;
  for (Locus k = range.last; k-- > range.first;) {
    const double s = model.stay_prob(k, k + 1);
    const StatePair& next = out.weights[k + 1 - range.first];
    const StatePair& e = emissions[k];  // locus k + 1
    const double w0 = e[0] * next[0];
    const double w1 = e[1] * next[1];
    StatePair cur{s * w0 + (1.0 - s) * w1, (1.0 - s) * w0 + s * w1};
    out.log_scale[k - range.first] = normalise(cur, k);
    out.weights[k - range.first] = cur;
  }
  return out;
}

double FBWeights::log_alpha(Locus k, Origin u) const {
  const std::size_t idx = k - alpha.range.first;
  const double scale = std::accumulate(alpha.log_scale.begin(),
                                       alpha.log_scale.begin() + idx + 1, 0.0);
  return std::log(alpha.weights[idx][index_of(u)]) + scale;
}

double FBWeights::log_beta(Locus k, Origin u) const {
  const std::size_t idx = k - beta.range.first;
  const double scale =
      std::accumulate(beta.log_scale.begin() + idx, beta.log_scale.end(), 0.0);
  return std::log(beta.weights[idx][index_of(u)]) + scale;
}

double FBWeights::log_likelihood() const {
  return std::accumulate(alpha.log_scale.begin(), alpha.log_scale.end(), 0.0);
}

StatePair FBWeights::posterior(Locus k) const {
  const auto& a = alpha.at(k);
  const auto& b = beta.at(k);
  StatePair post{a[0] * b[0], a[1] * b[1]};
  normalise(post, k);
  return post;
}

FBWeights forward_backward(const MeiosisModel& model,
                           std::span<const StatePair> emissions,
                           LocusRange range) {
  return FBWeights{forward_weights(model, emissions, range),
                   backward_weights(model, emissions, range)};
}

FBWeights forward_backward(const MeiosisModel& model, const HaplotypePair& parent,
                           const Haplotype& child, LocusRange window) {
  const auto e = emission_table(model, parent, child);
  return forward_backward(model, e, window);
}

// ---------------------------------------------------------------------------

namespace {

// Evidence from the conditioning set on either side of a window, collapsed to
// a single column at the window edges: `left` is the normalised forward
// weight at `window.lower`, `right` the normalised backward weight at
// `window.upper - 1`. Missing flanks stay empty.
struct EdgeEvidence {
  ConditioningWindow window;
  std::optional<StatePair> left;
  std::optional<StatePair> right;
};

void check_window(const MeiosisModel& model, ConditioningWindow window,
                  std::span<const Locus> targets) {
  const std::size_t p = model.num_loci();
  if (window.lower > p || window.upper < 1 || window.upper > p + 1 ||
      window.upper <= window.lower + 1) {
    throw Error(ErrorCode::InvalidConditioning,
                "conditioning window (" + std::to_string(window.lower) + ", " +
                    std::to_string(window.upper) + ") is empty or off the map");
  }
  if (targets.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no target loci");
  }
  Locus prev = window.lower;
  for (Locus t : targets) {
    if (t <= prev || !window.contains(t)) {
      throw Error(ErrorCode::InvalidConditioning,
                  "targets must be strictly increasing inside (" +
                      std::to_string(window.lower) + ", " +
                      std::to_string(window.upper) + ")");
    }
    prev = t;
  }
}

EdgeEvidence full_evidence(const MeiosisModel& model, const HaplotypePair& parent,
                           const Haplotype& child, ConditioningWindow window) {
  const auto e = emission_table(model, parent, child);
  EdgeEvidence ev{window, {}, {}};
  if (window.lower >= 1) {
    ev.left = forward_weights(model, e, {1, window.lower}).weights.back();
  }
  if (window.upper <= model.num_loci()) {
    ev.right =
        backward_weights(model, e, {window.upper - 1, model.num_loci()}).weights.front();
  }
  return ev;
}

// L(v) = sum_u alpha_l(u) P(U_j = v | U_l = u).
StatePair left_factor(const MeiosisModel& model, const EdgeEvidence& ev, Locus j) {
  if (!ev.left) return {0.5, 0.5};
  const auto T = model.transition(ev.window.lower, j);
  const auto& a = *ev.left;
  return {a[0] * T[0][0] + a[1] * T[1][0], a[0] * T[0][1] + a[1] * T[1][1]};
}

// R(v) = sum_w P(U_{h-1} = w | U_j = v) beta_{h-1}(w).
StatePair right_factor(const MeiosisModel& model, const EdgeEvidence& ev, Locus j) {
  if (!ev.right) return {1.0, 1.0};
  const auto T = model.transition(j, ev.window.upper - 1);
  const auto& b = *ev.right;
  return {T[0][0] * b[0] + T[0][1] * b[1], T[1][0] * b[0] + T[1][1] * b[1]};
}

StatePair ancestry_posterior(const MeiosisModel& model, const EdgeEvidence& ev,
                             Locus j) {
  const auto L = left_factor(model, ev, j);
  const auto R = right_factor(model, ev, j);
  StatePair post{L[0] * R[0], L[1] * R[1]};
  normalise(post, j);
  return post;
}

double allele_one_prob(const StatePair& ancestry, const HaplotypePair& parent,
                       Locus j, double epsilon) {
  // Homozygous: the ancestry is irrelevant, and summing the posterior would
  // leave 1 - 1e-16 where the answer is exactly 0 or 1.
  if (!parent.heterozygous(j)) return emission_prob(1, parent.maternal[j - 1], epsilon);
  return ancestry[0] * emission_prob(1, parent.maternal[j - 1], epsilon) +
         ancestry[1] * emission_prob(1, parent.paternal[j - 1], epsilon);
}

JointPropensity chain_from_evidence(const MeiosisModel& model,
                                    const EdgeEvidence& ev,
                                    std::span<const Locus> targets) {
  const StatePair first = ancestry_posterior(model, ev, targets.front());
  std::vector<TransitionMatrix> steps;
  steps.reserve(targets.size() - 1);
  for (std::size_t k = 1; k < targets.size(); ++k) {
    const auto T = model.transition(targets[k - 1], targets[k]);
    const auto R = right_factor(model, ev, targets[k]);
    TransitionMatrix step{};
    for (std::size_t u = 0; u < 2; ++u) {
      StatePair row{T[u][0] * R[0], T[u][1] * R[1]};
      const double s = row[0] + row[1];
      // A predecessor state with zero posterior mass never gets used; keep the
      // prior row so the matrix stays stochastic.
      step[u] = s > 0.0 ? StatePair{row[0] / s, row[1] / s} : T[u];
    }
    steps.push_back(step);
  }
  return JointPropensity({targets.begin(), targets.end()}, first, std::move(steps));
}

}  // namespace

Propensity propensity_score(const MeiosisModel& model, const HaplotypePair& parent,
                            const Haplotype& child, Locus target,
                            ConditioningWindow window, Origin side) {
  const Locus targets[] = {target};
  check_window(model, window, targets);
  const auto ev = full_evidence(model, parent, child, window);
  const auto post = ancestry_posterior(model, ev, target);
  return Propensity{allele_one_prob(post, parent, target, model.epsilon()), target,
                    side, post};
}

Propensity propensity_score_flanked(const MeiosisModel& model,
                                    const HaplotypePair& parent,
                                    const Haplotype& child, Locus target,
                                    Flanks flanks,
                                    std::optional<ConditioningWindow> window,
                                    Origin side) {
  if (model.epsilon() != 0.0) {
    throw Error(ErrorCode::InvalidArgument,
                "flanked propensity requires mutation rate 0");
  }
  const ConditioningWindow w =
      window.value_or(ConditioningWindow{flanks.left, flanks.right});
  const Locus targets[] = {target};
  check_window(model, w, targets);
  if (flanks.left < 1 || flanks.right > model.num_loci() ||
      w.lower < flanks.left || w.upper > flanks.right) {
    throw Error(ErrorCode::InvalidConditioning,
                "window must lie within the flanks");
  }
  for (Locus b : {flanks.left, flanks.right}) {
    if (!parent.heterozygous(b)) {
      throw Error(ErrorCode::FlankNotHeterozygous,
                  "parent is homozygous at flank locus " + std::to_string(b));
    }
  }
  if (child.size() != model.num_loci() || parent.size() != model.num_loci()) {
    throw Error(ErrorCode::LengthMismatch, "haplotype length does not match the map");
  }

  // Only emissions inside the flanks are ever consulted.
  std::vector<StatePair> e(model.num_loci(), StatePair{1.0, 1.0});
  for (Locus k = flanks.left; k <= flanks.right; ++k) {
    e[k - 1] = {model.emission(child[k - 1], parent.maternal[k - 1]),
                model.emission(child[k - 1], parent.paternal[k - 1])};
  }
  const Origin pinned_left =
      parent.maternal[flanks.left - 1] == child[flanks.left - 1] ? Origin::Maternal
                                                                 : Origin::Paternal;
  const Origin pinned_right =
      parent.maternal[flanks.right - 1] == child[flanks.right - 1] ? Origin::Maternal
                                                                   : Origin::Paternal;

  EdgeEvidence ev{w, {}, {}};
  if (w.lower == flanks.left) {
    StatePair pinned{0.0, 0.0};
    pinned[index_of(pinned_left)] = 1.0;
    ev.left = pinned;
  } else {
    const auto T = model.transition(flanks.left, flanks.left + 1);
    ev.left = forward_weights(model, e, {flanks.left + 1, w.lower},
                              T[index_of(pinned_left)])
                  .weights.back();
  }
  {
    const auto T = model.transition(flanks.right - 1, flanks.right);
    const std::size_t r = index_of(pinned_right);
    const double e_right = e[flanks.right - 1][r];
    const StatePair terminal{T[0][r] * e_right, T[1][r] * e_right};
    ev.right = backward_weights(model, e, {w.upper - 1, flanks.right - 1}, terminal)
                   .weights.front();
  }
  const auto post = ancestry_posterior(model, ev, target);
  return Propensity{allele_one_prob(post, parent, target, 0.0), target, side, post};
}

JointPropensity joint_propensity(const MeiosisModel& model,
                                 const HaplotypePair& parent,
                                 const Haplotype& child,
                                 std::span<const Locus> targets,
                                 ConditioningWindow window) {
  check_window(model, window, targets);
  const auto ev = full_evidence(model, parent, child, window);
  return chain_from_evidence(model, ev, targets);
}

// ---------------------------------------------------------------------------

JointPropensity::JointPropensity(std::vector<Locus> targets, StatePair first,
                                 std::vector<TransitionMatrix> steps)
    : targets_(std::move(targets)), first_(first), steps_(std::move(steps)) {
  if (targets_.empty() || steps_.size() + 1 != targets_.size()) {
    throw Error(ErrorCode::InvalidArgument, "malformed joint propensity");
  }
}

double JointPropensity::probability(std::span<const Origin> ancestry) const {
  if (ancestry.size() != targets_.size()) {
    throw Error(ErrorCode::InvalidArgument, "ancestry length mismatch");
  }
  double p = first_[index_of(ancestry[0])];
  for (std::size_t k = 1; k < ancestry.size(); ++k) {
    p *= steps_[k - 1][index_of(ancestry[k - 1])][index_of(ancestry[k])];
  }
  return p;
}

std::vector<double> JointPropensity::table() const {
  const std::size_t r = targets_.size();
  if (r > 24) throw Error(ErrorCode::InvalidArgument, "too many targets to tabulate");
  std::vector<double> out(std::size_t{1} << r);
  std::vector<Origin> u(r);
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    for (std::size_t k = 0; k < r; ++k) {
      u[k] = (idx >> k) & 1 ? Origin::Paternal : Origin::Maternal;
    }
    out[idx] = probability(u);
  }
  return out;
}

std::vector<StatePair> JointPropensity::marginals() const {
  std::vector<StatePair> out;
  out.reserve(targets_.size());
  StatePair cur = first_;
  out.push_back(cur);
  for (const auto& step : steps_) {
    cur = {cur[0] * step[0][0] + cur[1] * step[1][0],
           cur[0] * step[0][1] + cur[1] * step[1][1]};
    out.push_back(cur);
  }
  return out;
}

void JointPropensity::sample(RngStream& rng, std::vector<Origin>& out) const {
  Origin u = rng.uniform() < first_[0] ? Origin::Maternal : Origin::Paternal;
  out.push_back(u);
  for (const auto& step : steps_) {
    u = rng.uniform() < step[index_of(u)][0] ? Origin::Maternal : Origin::Paternal;
    out.push_back(u);
  }
}

std::vector<double> allele_propensities(const JointPropensity& joint,
                                        const HaplotypePair& parent,
                                        double epsilon) {
  const auto marg = joint.marginals();
  std::vector<double> pi(joint.size());
  for (std::size_t k = 0; k < joint.size(); ++k) {
    pi[k] = allele_one_prob(marg[k], parent, joint.targets()[k], epsilon);
  }
  return pi;
}

void sample_alleles(const JointPropensity& joint, const HaplotypePair& parent,
                    double epsilon, RngStream& rng, std::span<Allele> out) {
  if (out.size() != joint.size()) {
    throw Error(ErrorCode::InvalidArgument, "output span does not match the targets");
  }
  const auto& targets = joint.targets();
  Origin u = rng.uniform() < joint.first()[0] ? Origin::Maternal : Origin::Paternal;
  out[0] = parent.allele(u, targets[0]);
  for (std::size_t k = 1; k < out.size(); ++k) {
    const auto& step = joint.steps()[k - 1];
    u = rng.uniform() < step[index_of(u)][0] ? Origin::Maternal : Origin::Paternal;
    out[k] = parent.allele(u, targets[k]);
  }
  if (epsilon > 0.0) {
    for (auto& a : out) {
      if (rng.uniform() < epsilon) a ^= 1;
    }
  }
}

std::vector<Allele> sample_alleles(const JointPropensity& joint,
                                   const HaplotypePair& parent, double epsilon,
                                   RngStream& rng) {
  std::vector<Allele> alleles(joint.size());
  sample_alleles(joint, parent, epsilon, rng, alleles);
  return alleles;
}

std::vector<Allele> sample_conditional_haplotype(
    const MeiosisModel& model, const HaplotypePair& parent,
    const Haplotype& child, std::span<const Locus> targets,
    ConditioningWindow window, RngStream& rng) {
  const auto joint = joint_propensity(model, parent, child, targets, window);
  return sample_alleles(joint, parent, model.epsilon(), rng);
}

Haplotype sample_unconditional_haplotype(const MeiosisModel& model,
                                         const HaplotypePair& parent,
                                         RngStream& rng) {
  const std::size_t p = model.num_loci();
  if (parent.size() != p) {
    throw Error(ErrorCode::LengthMismatch, "haplotype length does not match the map");
  }
  const double eps = model.epsilon();
  Haplotype out(p);
  Origin u = rng.uniform() < 0.5 ? Origin::Maternal : Origin::Paternal;
  for (Locus k = 1; k <= p; ++k) {
    if (k > 1 && !(rng.uniform() < model.stay_prob(k - 1, k))) u = other(u);
    Allele a = parent.allele(u, k);
    if (eps > 0.0 && rng.uniform() < eps) a ^= 1;
    out[k - 1] = a;
  }
  return out;
}

std::array<double, 3> genotype_propensity(const Propensity& maternal,
                                          const Propensity& paternal) {
  const double pm = maternal.pi;
  const double pf = paternal.pi;
  const double two = pm * pf;
  const double zero = (1.0 - pm) * (1.0 - pf);
  return {zero, 1.0 - two - zero, two};
}

}  // namespace aemr
