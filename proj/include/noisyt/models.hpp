// Feed-forward ReLU classifiers trained by plain mini-batch SGD on noisy
// labels, with best-validation checkpoint selection.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "noisyt/core.hpp"
#include "noisyt/io.hpp"

namespace noisyt::models {

enum class Activation { relu };
enum class LossKind { plain_ce, forward, reweight };

std::string_view to_string(LossKind kind) noexcept;
LossKind parse_loss_kind(std::string_view name);

struct LossAdapter {
  LossKind kind = LossKind::plain_ce;
  std::optional<TransitionMatrix> matrix;  // required for forward and reweight
};

struct NetworkSpec {
  std::size_t input_dim = 10;
  std::vector<std::size_t> hidden_sizes{25, 25};
  std::size_t num_classes = 2;
  Activation activation = Activation::relu;
  LossAdapter loss;

  void validate() const;
  /// Layer widths from input to logits.
  std::vector<std::size_t> widths() const;
  std::size_t parameter_count() const;
};

struct TrainConfig {
  int epochs = 100;
  double lr_initial = 0.01;
  double lr_decay_factor = 10.0;
  int lr_decay_epoch = 50;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  double val_fraction = 0.2;

  void validate() const;
  /// Learning rate used during 1-based epoch `epoch`.
  double learning_rate(int epoch) const noexcept;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

/// Parameters are stored flat: for each layer, the out x in weight matrix
/// (row-major) followed by the bias vector.
class TrainedModel final : public PosteriorModel {
 public:
  TrainedModel(NetworkSpec spec, std::vector<double> params);

  std::size_t num_classes() const override { return spec_.num_classes; }
  std::size_t input_dim() const override { return spec_.input_dim; }
  PosteriorVector posterior(std::span<const double> x) const override;

  std::vector<double> logits(std::span<const double> x) const;

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::span<const double> params() const noexcept { return params_; }

  double best_val_accuracy = 0.0;
  int best_epoch = 0;
  std::vector<EpochStats> history;
  std::optional<TrainConfig> config;

 private:
  NetworkSpec spec_;
  std::vector<double> params_;
};

/// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
std::vector<double> init_parameters(const NetworkSpec& spec, std::uint64_t seed);

/// Per-example loss on logits; writes dLoss/dlogits and returns the loss.
using ExampleLoss = std::function<double(std::span<const double> logits, Label label, std::span<double> grad)>;

/// The loss selected by spec.loss. Throws InvalidArgument when a corrected
/// loss lacks its matrix, SingularMatrix for an uninvertible reweight matrix.
ExampleLoss make_example_loss(const NetworkSpec& spec);

/// Logits of the network with the given flat parameters.
std::vector<double> network_logits(const NetworkSpec& spec, std::span<const double> params,
                                   std::span<const double> x);

/// Mean loss over `rows`; `grad` (sized like params) receives the mean gradient.
double loss_and_gradient(const NetworkSpec& spec, std::span<const double> params, const Matrix& features,
                         std::span<const Label> labels, std::span<const std::size_t> rows,
                         const ExampleLoss& loss, std::span<double> grad);

struct Split {
  Dataset train;
  Dataset val;
  std::vector<std::size_t> train_rows;  // ascending indices into the input
  std::vector<std::size_t> val_rows;
};

/// Uniform random, unstratified. round(n * val_fraction) rows go to validation.
Split split_train_val(const Dataset& data, double val_fraction, std::uint64_t seed);

/// Runs cfg.epochs of SGD and returns the snapshot with the highest noisy-label
/// validation accuracy (earliest epoch on ties).
TrainedModel train(const Dataset& train_set, const Dataset& val_set, const NetworkSpec& spec,
                   const TrainConfig& cfg);

PosteriorVector predict_posterior(const TrainedModel& model, std::span<const double> x);
std::size_t predict_label(const TrainedModel& model, std::span<const double> x);

/// Fraction of rows whose predicted label equals `labels`.
double accuracy(const PosteriorModel& model, const Dataset& data, std::span<const Label> labels);

Json to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const Json& j);
Json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const Json& j);
Json to_json(const TrainedModel& model);
TrainedModel trained_model_from_json(const Json& j);

}  // namespace noisyt::models
