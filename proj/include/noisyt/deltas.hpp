// Error decomposition on the synthetic task, where the analytic posteriors
// are available as ground truth.
//
//   delta1  |P(noisy=j|x) - P-hat(noisy=j|x)|              noisy-posterior fit
//   delta2  |P(noisy=j|Y'=l) - counted(l, j)|               counting error
//   delta3  |T(i, j) - P(noisy=j|x)| for a row of clean class i
//                                                           label-fit error
//
// delta3 uses P(noisy=j | Y'=l, Y=i, x) = T(i, j), which holds because the
// noise is class-dependent and Y' is a deterministic function of x.
// All deltas are reported as means over rows (and classes / entries).
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "noisyt/core.hpp"
#include "noisyt/io.hpp"
#include "noisyt/synth.hpp"

namespace noisyt::deltas {

struct DeltaReport {
  double delta1_mean = 0.0;
  double delta2_mean = 0.0;
  double delta3_mean = 0.0;
  double eps_T = 0.0;
  double eps_DT = 0.0;
  double assumption1_fraction = 0.0;  // rows with delta1 >= delta2 + delta3
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
  std::size_t mc_samples = 0;
  double bound = 0.0;  // C^2 (delta2 + delta3)
  double bound_slack = 0.05;
  bool bound_holds = false;  // eps_DT <= bound + bound_slack
  bool dual_t_better = false;  // eps_DT < eps_T
  std::optional<double> delta1_heldout;
  EstimationReport t_report;
  EstimationReport dual_t_report;
};

/// Per-row mean over classes of |oracle noisy posterior - model posterior|.
std::vector<double> pointwise_delta1(const PosteriorModel& model, const synth::GaussianSpec& spec,
                                     const TransitionMatrix& t, const Dataset& eval_set);
double measure_delta1(const PosteriorModel& model, const synth::GaussianSpec& spec, const TransitionMatrix& t,
                      const Dataset& eval_set);

/// Counted intermediate -> noisy matrix on a fresh draw of `mc_samples`
/// rows: features from `seed`, noisy labels sampled from T, intermediate
/// labels from the argmax of `policy`.
TransitionMatrix spade_reference(const PosteriorModel& policy, const synth::GaussianSpec& spec,
                                 const TransitionMatrix& t, std::size_t mc_samples, std::uint64_t seed);

/// Mean entrywise |counted - spade_reference(...)|.
double measure_delta2(const TransitionMatrix& counted, const PosteriorModel& policy,
                      const synth::GaussianSpec& spec, const TransitionMatrix& t, std::size_t mc_samples,
                      std::uint64_t seed);

/// Per-row mean over classes of |T(clean_i, j) - oracle noisy posterior_j|.
std::vector<double> pointwise_delta3(const synth::GaussianSpec& spec, const TransitionMatrix& t,
                                     const Dataset& eval_set);
double measure_delta3(const synth::GaussianSpec& spec, const TransitionMatrix& t, const Dataset& eval_set);

/// Runs both estimators on `data` (noisy and clean labels required), scores
/// them against T, measures the three deltas on the same rows (delta2 with
/// `mc_samples` fresh draws) and evaluates the bound
/// eps_DT <= C^2 (delta2 + delta3) + slack.
DeltaReport audit_error_bound(const PosteriorModel& model, const synth::GaussianSpec& spec, const TransitionMatrix& t,
                           const Dataset& data, std::size_t mc_samples, std::uint64_t seed,
                           double bound_slack = 0.05);

Json to_json(const DeltaReport& report);

}  // namespace noisyt::deltas
