#include <doctest.h>

#include "noisyt/deltas.hpp"
#include "noisyt/estimators.hpp"
#include "noisyt/harness.hpp"
#include "noisyt/noise.hpp"
#include "noisyt/synth.hpp"
#include "support.hpp"

using namespace noisyt;

namespace {

const synth::GaussianSpec kSpec;

Dataset points(const std::vector<double>& levels, const std::vector<Label>& clean) {
  Dataset d;
  d.features = Matrix(levels.size(), 10);
  for (std::size_t r = 0; r < levels.size(); ++r) {
    for (std::size_t k = 0; k < 10; ++k) d.features(r, k) = levels[r];
  }
  d.clean_labels = clean;
  return d;
}

// Counted T-spade from a fresh labelled draw of size n, using the policy's argmax.
TransitionMatrix counted_from_draw(const PosteriorModel& policy, const TransitionMatrix& t, std::size_t n,
                                   std::uint64_t seed) {
  const auto d = noise::corrupt(synth::generate(kSpec, n, seed), t, seed + 1);
  return estimators::count_spade(estimators::intermediate_labels(policy, d), *d.noisy_labels, 2).matrix;
}

}  // namespace

TEST_CASE("delta1") {
  const auto t = noise::symmetric_matrix(2, 0.2);
  const auto d = synth::generate(kSpec, 200, 3);
  synth::NoisyOracle exact(kSpec, t);
  CHECK(deltas::measure_delta1(exact, kSpec, t, d) == 0.0);

  testing::UniformModel uniform(2, 10);
  const auto near = points({2.0}, {1});
  CHECK(deltas::measure_delta1(uniform, kSpec, t, near) == doctest::Approx(0.3).epsilon(1e-8));

  Dataset three = d;
  three.num_classes = 3;
  try {
    deltas::measure_delta1(exact, kSpec, t, three);
    FAIL("expected OracleUnavailable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OracleUnavailable);
  }
  CHECK_THROWS_AS(deltas::measure_delta1(exact, kSpec, noise::symmetric_matrix(3, 0.2), d), Error);
  synth::GaussianSpec small = kSpec;
  small.dim = 4;
  CHECK_THROWS_AS(deltas::measure_delta1(exact, small, t, d), Error);
}

TEST_CASE("delta3 closed forms") {
  const auto t = noise::symmetric_matrix(2, 0.2);
  const auto anchors = points({2.0, 0.0, 3.0}, {1, 0, 1});
  CHECK(deltas::measure_delta3(kSpec, t, anchors) == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(deltas::measure_delta3(kSpec, t, anchors) < 1e-8);
  const auto mid = points({1.0, 1.0}, {0, 1});
  const auto pw = deltas::pointwise_delta3(kSpec, t, mid);
  CHECK(pw[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(pw[1] == doctest::Approx(0.3).epsilon(1e-12));
  // Clean world, points far from the boundary.
  CHECK(deltas::measure_delta3(kSpec, TransitionMatrix::identity(2), anchors) < 1e-8);

  Dataset unlabeled = anchors;
  unlabeled.clean_labels.reset();
  try {
    deltas::measure_delta3(kSpec, t, unlabeled);
    FAIL("expected MissingCleanLabels");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingCleanLabels);
  }
}

TEST_CASE("delta2 self comparison and concentration trend") {
  const auto t = noise::symmetric_matrix(2, 0.2);
  synth::NoisyOracle policy(kSpec, t);
  const auto reference = deltas::spade_reference(policy, kSpec, t, 20000, 5);
  CHECK(deltas::measure_delta2(reference, policy, kSpec, t, 20000, 5) == 0.0);

  double small = 0.0, large = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    small += deltas::measure_delta2(counted_from_draw(policy, t, 100, 100 + s), policy, kSpec, t, 1000000, s);
    large += deltas::measure_delta2(counted_from_draw(policy, t, 100000, 100 + s), policy, kSpec, t, 1000000, s);
  }
  CHECK(large < small);
  CHECK(large / 5 < 0.01);
}

TEST_CASE("delta1 shrinks with more training data") {
  harness::TrialSettings settings;
  settings.noise = noise::NoiseKind::symmetric;
  settings.eps = 0.2;
  double small = 0.0, large = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    for (std::size_t n : {std::size_t{1000}, std::size_t{40000}}) {
      const auto trial = harness::run_trial(settings, n, harness::cell_seed(7, n, rep));
      const double d1 = deltas::measure_delta1(*trial.model, kSpec, trial.truth, trial.test);
      (n == 1000 ? small : large) += d1;
    }
  }
  CHECK(large < small);
}

TEST_CASE("audit is internally consistent") {
  const auto t = noise::symmetric_matrix(2, 0.2);
  auto d = noise::corrupt(synth::generate(kSpec, 3000, 8), t, 9);
  synth::NoisyOracle oracle(kSpec, t);
  const auto r = deltas::audit_error_bound(oracle, kSpec, t, d, 30000, 4);
  CHECK(r.eps_T == *r.t_report.l1_error);
  CHECK(r.eps_DT == *r.dual_t_report.l1_error);
  CHECK(r.delta1_mean == 0.0);
  CHECK(r.delta2_mean >= 0.0);
  CHECK(r.delta3_mean >= 0.0);
  CHECK(r.assumption1_fraction >= 0.0);
  CHECK(r.assumption1_fraction <= 1.0);
  CHECK(r.bound == doctest::Approx(4 * (r.delta2_mean + r.delta3_mean)));
  CHECK(r.bound_slack == 0.05);
  CHECK(r.bound_holds == (r.eps_DT <= r.bound + 0.05));
  CHECK(r.sample_size == 3000);
  CHECK(r.mc_samples == 30000);
  const auto again = deltas::audit_error_bound(oracle, kSpec, t, d, 30000, 4);
  CHECK(deltas::to_json(again).dump() == deltas::to_json(r).dump());

  const auto j = deltas::to_json(r);
  for (const char* key : {"delta1_mean", "delta2_mean", "delta3_mean", "eps_T", "eps_DT", "assumption1_fraction",
                          "sample_size", "seed"}) {
    CHECK(j.contains(key));
  }
}

TEST_CASE("perfect-model chain with intermediate labels forced to the noisy labels") {
  const auto t = noise::symmetric_matrix(2, 0.2);
  const auto d = noise::corrupt(synth::generate(kSpec, 20000, 2), t, 3);
  synth::NoisyOracle oracle(kSpec, t);
  const auto table = posterior_table(oracle, d);
  auto dt = estimators::dual_t_estimate(table, *d.noisy_labels, *d.noisy_labels);
  auto te = estimators::t_estimate(table);
  dt.score_against(t);
  te.score_against(t);
  CHECK(*dt.l1_error == doctest::Approx(*te.l1_error).epsilon(1e-12));
  CHECK(*te.l1_error < 0.05);
}
