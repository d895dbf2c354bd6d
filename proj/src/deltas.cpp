#include "noisyt/deltas.hpp"

#include <cmath>

#include "noisyt/estimators.hpp"
#include "noisyt/noise.hpp"
#include "noisyt/rng.hpp"

namespace noisyt::deltas {

namespace {

void require_oracle(const synth::GaussianSpec& spec, const TransitionMatrix& t, const Dataset& data) {
  if (t.num_classes() != 2 || data.num_classes != 2) {
    throw Error(ErrorKind::OracleUnavailable, "analytic posteriors exist only for the binary synthetic task");
  }
  if (data.dim() != spec.dim) {
    throw Error(ErrorKind::OracleUnavailable, "dataset dimension does not match the Gaussian spec");
  }
  if (data.size() == 0) throw Error(ErrorKind::EmptyDataset, "empty evaluation set");
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

std::vector<double> pointwise_delta1(const PosteriorModel& model, const synth::GaussianSpec& spec,
                                     const TransitionMatrix& t, const Dataset& eval_set) {
  require_oracle(spec, t, eval_set);
  std::vector<double> out(eval_set.size());
  for (std::size_t r = 0; r < eval_set.size(); ++r) {
    const auto truth = synth::oracle_noisy_posterior(eval_set.row(r), spec, t);
    const auto est = model.posterior(eval_set.row(r));
    double s = 0.0;
    for (std::size_t j = 0; j < truth.size(); ++j) s += std::abs(truth[j] - est[j]);
    out[r] = s / static_cast<double>(truth.size());
  }
  return out;
}

double measure_delta1(const PosteriorModel& model, const synth::GaussianSpec& spec, const TransitionMatrix& t,
                      const Dataset& eval_set) {
  return mean(pointwise_delta1(model, spec, t, eval_set));
}

TransitionMatrix spade_reference(const PosteriorModel& policy, const synth::GaussianSpec& spec,
                                 const TransitionMatrix& t, std::size_t mc_samples, std::uint64_t seed) {
  const Dataset draw = noise::corrupt(synth::generate(spec, mc_samples, derive_seed(seed, 1)), t,
                                      derive_seed(seed, 2));
  require_oracle(spec, t, draw);
  const auto inter = estimators::intermediate_labels(policy, draw);
  return estimators::count_spade(inter, *draw.noisy_labels, t.num_classes()).matrix;
}

double measure_delta2(const TransitionMatrix& counted, const PosteriorModel& policy,
                      const synth::GaussianSpec& spec, const TransitionMatrix& t, std::size_t mc_samples,
                      std::uint64_t seed) {
  const TransitionMatrix reference = spade_reference(policy, spec, t, mc_samples, seed);
  const auto c = static_cast<double>(t.num_classes());
  return l1_matrix_distance(counted, reference) / (c * c);
}

std::vector<double> pointwise_delta3(const synth::GaussianSpec& spec, const TransitionMatrix& t,
                                     const Dataset& eval_set) {
  require_oracle(spec, t, eval_set);
  const auto& clean = eval_set.require_clean();
  std::vector<double> out(eval_set.size());
  for (std::size_t r = 0; r < eval_set.size(); ++r) {
    const auto noisy_post = synth::oracle_noisy_posterior(eval_set.row(r), spec, t);
    const auto row = t.row(clean[r]);
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) s += std::abs(row[j] - noisy_post[j]);
    out[r] = s / static_cast<double>(row.size());
  }
  return out;
}

double measure_delta3(const synth::GaussianSpec& spec, const TransitionMatrix& t, const Dataset& eval_set) {
  return mean(pointwise_delta3(spec, t, eval_set));
}

DeltaReport audit_error_bound(const PosteriorModel& model, const synth::GaussianSpec& spec, const TransitionMatrix& t,
                           const Dataset& data, std::size_t mc_samples, std::uint64_t seed, double bound_slack) {
  require_oracle(spec, t, data);
  const auto& noisy = data.require_noisy();
  data.require_clean();

  const Matrix table = posterior_table(model, data);
  DeltaReport report;
  report.t_report = estimators::t_estimate(table);
  report.dual_t_report = estimators::dual_t_estimate(table, noisy);
  report.t_report.score_against(t);
  report.dual_t_report.score_against(t);
  report.t_report.seed = seed;
  report.dual_t_report.seed = seed;
  report.eps_T = *report.t_report.l1_error;
  report.eps_DT = *report.dual_t_report.l1_error;

  const auto d1 = pointwise_delta1(model, spec, t, data);
  const auto d3 = pointwise_delta3(spec, t, data);
  report.delta1_mean = mean(d1);
  report.delta3_mean = mean(d3);
  report.delta2_mean = measure_delta2(*report.dual_t_report.intermediate_to_noisy, model, spec, t, mc_samples, seed);

  std::size_t holds = 0;
  for (std::size_t r = 0; r < d1.size(); ++r) {
    if (d1[r] >= report.delta2_mean + d3[r]) ++holds;
  }
  report.assumption1_fraction = static_cast<double>(holds) / static_cast<double>(d1.size());

  const auto c = static_cast<double>(t.num_classes());
  report.sample_size = data.size();
  report.seed = seed;
  report.mc_samples = mc_samples;
  report.bound = c * c * (report.delta2_mean + report.delta3_mean);
  report.bound_slack = bound_slack;
  report.bound_holds = report.eps_DT <= report.bound + bound_slack;
  report.dual_t_better = report.eps_DT < report.eps_T;
  return report;
}

Json to_json(const DeltaReport& r) {
  Json j;
  j["delta1_mean"] = r.delta1_mean;
  j["delta2_mean"] = r.delta2_mean;
  j["delta3_mean"] = r.delta3_mean;
  j["eps_T"] = r.eps_T;
  j["eps_DT"] = r.eps_DT;
  j["assumption1_fraction"] = r.assumption1_fraction;
  j["sample_size"] = r.sample_size;
  j["seed"] = r.seed;
  j["mc_samples"] = r.mc_samples;
  j["bound"] = r.bound;
  j["bound_slack"] = r.bound_slack;
  j["bound_holds"] = r.bound_holds;
  j["dual_t_better"] = r.dual_t_better;
  j["delta1_heldout"] = r.delta1_heldout ? Json(*r.delta1_heldout) : Json(nullptr);
  j["t_report"] = to_json(r.t_report);
  j["dual_t_report"] = to_json(r.dual_t_report);
  return j;
}

}  // namespace noisyt::deltas
