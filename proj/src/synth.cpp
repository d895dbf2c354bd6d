#include "noisyt/synth.hpp"

#include <algorithm>
#include <cmath>

#include "noisyt/rng.hpp"

namespace noisyt::synth {

namespace {
constexpr std::uint64_t kLabelStream = 1;
constexpr std::uint64_t kFeatureStream = 2;
}  // namespace

void GaussianSpec::validate() const {
  if (dim == 0) throw Error(ErrorKind::InvalidArgument, "dim must be positive");
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw Error(ErrorKind::InvalidArgument, "variance must be positive");
  }
  if (!(prior1 > 0.0 && prior1 < 1.0)) throw Error(ErrorKind::InvalidArgument, "prior1 must lie in (0,1)");
  if (!std::isfinite(mean0) || !std::isfinite(mean1)) throw Error(ErrorKind::InvalidArgument, "means must be finite");
}

Dataset generate(const GaussianSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "n must be positive");
  const CounterRng label_rng(derive_seed(seed, kLabelStream));
  const CounterRng feature_rng(derive_seed(seed, kFeatureStream));
  const double sd = std::sqrt(spec.variance);

  Dataset data;
  data.num_classes = 2;
  data.features = Matrix(n, spec.dim);
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Label y = label_rng.uniform(i) < spec.prior1 ? 1 : 0;
    labels[i] = y;
    const double mean = y == 1 ? spec.mean1 : spec.mean0;
    auto row = data.features.row(i);
    for (std::size_t k = 0; k < spec.dim; ++k) {
      row[k] = mean + sd * feature_rng.normal(i * spec.dim + k);
    }
  }
  data.clean_labels = std::move(labels);
  return data;
}

double clean_log_odds(std::span<const double> x, const GaussianSpec& spec) {
  if (x.size() != spec.dim) throw Error(ErrorKind::DimensionMismatch, "feature length vs spec.dim");
  double sum = 0.0;
  for (double v : x) sum += v;
  const double d = static_cast<double>(spec.dim);
  return (spec.mean1 - spec.mean0) / spec.variance * sum -
         d * (spec.mean1 * spec.mean1 - spec.mean0 * spec.mean0) / (2.0 * spec.variance) +
         std::log(spec.prior1 / (1.0 - spec.prior1));
}

PosteriorVector oracle_clean_posterior(std::span<const double> x, const GaussianSpec& spec) {
  const double z = clean_log_odds(x, spec);
  // The smaller probability comes straight from exp; the larger is its complement.
  if (z >= 0.0) {
    const double p0 = std::exp(-z) / (1.0 + std::exp(-z));
    return PosteriorVector::validate({p0, 1.0 - p0});
  }
  const double p1 = std::exp(z) / (1.0 + std::exp(z));
  return PosteriorVector::validate({1.0 - p1, p1});
}

PosteriorVector oracle_noisy_posterior(std::span<const double> x, const GaussianSpec& spec,
                                       const TransitionMatrix& t) {
  if (t.num_classes() != 2) throw Error(ErrorKind::DimensionMismatch, "synthetic task is binary");
  return apply_transition(oracle_clean_posterior(x, spec), t);
}

double bayes_risk(const GaussianSpec& spec) {
  spec.validate();
  // Projecting onto the mean difference gives two 1-d Gaussians with
  // separation delta and unit variance.
  const double delta = std::abs(spec.mean1 - spec.mean0) * std::sqrt(static_cast<double>(spec.dim)) /
                       std::sqrt(spec.variance);
  if (delta == 0.0) return std::min(spec.prior1, 1.0 - spec.prior1);
  const double shift = std::log(spec.prior1 / (1.0 - spec.prior1)) / delta;
  auto phi = [](double v) { return 0.5 * std::erfc(-v / std::sqrt(2.0)); };
  // Decide class 1 when projection t > delta/2 - shift (t ~ N(0,1) or N(delta,1)).
  const double threshold = delta / 2.0 - shift;
  return (1.0 - spec.prior1) * (1.0 - phi(threshold)) + spec.prior1 * phi(threshold - delta);
}

CleanOracle::CleanOracle(GaussianSpec spec) : spec_(spec) { spec_.validate(); }

PosteriorVector CleanOracle::posterior(std::span<const double> x) const {
  return oracle_clean_posterior(x, spec_);
}

NoisyOracle::NoisyOracle(GaussianSpec spec, TransitionMatrix t) : spec_(spec), t_(std::move(t)) {
  spec_.validate();
  if (t_.num_classes() != 2) throw Error(ErrorKind::DimensionMismatch, "synthetic task is binary");
}

PosteriorVector NoisyOracle::posterior(std::span<const double> x) const {
  return oracle_noisy_posterior(x, spec_, t_);
}

}  // namespace noisyt::synth
