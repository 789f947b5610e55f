#include "aemr/power.hpp"

#include "aemr/error.hpp"
#include "aemr/parallel.hpp"
#include "aemr/rng.hpp"

namespace aemr {

std::vector<double> PowerStudy::pvalues(std::size_t cell) const {
  std::vector<double> out;
  out.reserve(results.size());
  for (const auto& rep : results) out.push_back(rep.at(cell).p_value_corrected);
  return out;
}

PowerStudy run_power(const PowerRequest& request) {
  if (request.replications == 0) {
    throw Error(ErrorCode::InvalidArgument, "need at least one replication");
  }
  if (!(request.alpha >= 0.0 && request.alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
  }
  if (request.params.instruments.empty()) {
    throw Error(ErrorCode::Config, "simulation declares no instruments");
  }
  request.params.validate();
  SimParams params = request.params;
  params.threads = 1;
  TestOptions opts;
  opts.tail = request.tail;

  PowerStudy study;
  study.results.resize(request.replications);
  parallel_for(request.replications, request.threads, [&](std::size_t r) {
    const auto sim = make_cohort(params, derive_seed(request.seed, {stream_tag::kReplicate, r}));
    const MeiosisModel model(sim.cohort.map(), params.epsilon);
    const RandomizationDesign design(sim.cohort, model, sim.specs);
    study.results[r] =
        run_randomization(design, request.kinds, request.beta0s, request.draws,
                          derive_seed(request.seed, {stream_tag::kTest, r}), opts);
  });

  for (std::size_t a = 0; a < request.kinds.size(); ++a) {
    for (std::size_t b = 0; b < request.beta0s.size(); ++b) {
      PowerRow row{request.kinds[a], request.beta0s[b], 0, request.replications};
      for (const auto& rep : study.results) {
        if (rep[a * request.beta0s.size() + b].p_value_corrected <= request.alpha) {
          ++row.rejections;
        }
      }
      study.rows.push_back(row);
    }
  }
  return study;
}

}  // namespace aemr
