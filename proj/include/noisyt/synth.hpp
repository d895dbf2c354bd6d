// Synthetic binary task: two isotropic Gaussians in `dim` dimensions whose
// means sit at mean0 and mean1 on every coordinate. Because both classes
// share the covariance, the Bayes posterior is exactly logistic in the
// coordinate sum, which gives closed-form ground truth for every posterior
// the estimators try to learn.
#pragma once

#include <cstdint>
#include <span>

#include "noisyt/core.hpp"

namespace noisyt::synth {

struct GaussianSpec {
  std::size_t dim = 10;
  double mean0 = 0.0;
  double mean1 = 2.0;
  double variance = 1.0;
  double prior1 = 0.5;

  void validate() const;
};

/// Draws n labelled rows. Row i depends only on (seed, i): the label uses
/// counter i of one sub-stream, feature k counter i*dim+k of another
/// (Box-Muller). noisy_labels is left empty.
Dataset generate(const GaussianSpec& spec, std::size_t n, std::uint64_t seed);

/// Log-odds log P(Y=1|x) - log P(Y=0|x) under the generative model.
double clean_log_odds(std::span<const double> x, const GaussianSpec& spec);

PosteriorVector oracle_clean_posterior(std::span<const double> x, const GaussianSpec& spec);
PosteriorVector oracle_noisy_posterior(std::span<const double> x, const GaussianSpec& spec,
                                       const TransitionMatrix& t);

/// Misclassification rate of the Bayes rule; equals Phi(-d/2) with d the
/// Mahalanobis distance between the means when priors are balanced.
double bayes_risk(const GaussianSpec& spec);

/// The analytic clean posterior as a model.
class CleanOracle final : public PosteriorModel {
 public:
  explicit CleanOracle(GaussianSpec spec);
  std::size_t num_classes() const override { return 2; }
  std::size_t input_dim() const override { return spec_.dim; }
  PosteriorVector posterior(std::span<const double> x) const override;

 private:
  GaussianSpec spec_;
};

/// The analytic noisy posterior P(noisy | x) as a model.
class NoisyOracle final : public PosteriorModel {
 public:
  NoisyOracle(GaussianSpec spec, TransitionMatrix t);
  std::size_t num_classes() const override { return 2; }
  std::size_t input_dim() const override { return spec_.dim; }
  PosteriorVector posterior(std::span<const double> x) const override;

  const GaussianSpec& spec() const noexcept { return spec_; }
  const TransitionMatrix& transition() const noexcept { return t_; }

 private:
  GaussianSpec spec_;
  TransitionMatrix t_;
};

}  // namespace noisyt::synth
