#include "noisyt/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "noisyt/losses.hpp"
#include "noisyt/rng.hpp"

namespace noisyt::models {

std::string_view to_string(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::plain_ce: return "plain_ce";
    case LossKind::forward: return "forward";
    case LossKind::reweight: return "reweight";
  }
  return "plain_ce";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "plain_ce" || name == "none") return LossKind::plain_ce;
  if (name == "forward") return LossKind::forward;
  if (name == "reweight") return LossKind::reweight;
  throw Error(ErrorKind::InvalidArgument, "unknown loss adapter '" + std::string(name) + "'");
}

void NetworkSpec::validate() const {
  if (input_dim == 0) throw Error(ErrorKind::InvalidArgument, "input_dim must be positive");
  if (num_classes < 2) throw Error(ErrorKind::InvalidArgument, "num_classes must be >= 2");
  for (auto h : hidden_sizes) {
    if (h == 0) throw Error(ErrorKind::InvalidArgument, "hidden sizes must be positive");
  }
  if (loss.kind != LossKind::plain_ce) {
    if (!loss.matrix) throw Error(ErrorKind::InvalidArgument, "corrected loss needs a transition matrix");
    if (loss.matrix->num_classes() != num_classes) {
      throw Error(ErrorKind::DimensionMismatch, "loss matrix size vs num_classes");
    }
  }
}

std::vector<std::size_t> NetworkSpec::widths() const {
  std::vector<std::size_t> w{input_dim};
  w.insert(w.end(), hidden_sizes.begin(), hidden_sizes.end());
  w.push_back(num_classes);
  return w;
}

std::size_t NetworkSpec::parameter_count() const {
  const auto w = widths();
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) count += w[l + 1] * w[l] + w[l + 1];
  return count;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorKind::InvalidArgument, "epochs must be >= 1");
  if (lr_decay_epoch > epochs || lr_decay_epoch < 0) {
    throw Error(ErrorKind::InvalidArgument, "lr_decay_epoch must lie in [0, epochs]");
  }
  if (!(lr_initial > 0.0) || !(lr_decay_factor > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "learning rate and decay factor must be positive");
  }
  if (batch_size == 0) throw Error(ErrorKind::InvalidArgument, "batch_size must be positive");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "val_fraction must lie in (0,1)");
  }
}

double TrainConfig::learning_rate(int epoch) const noexcept {
  return epoch <= lr_decay_epoch ? lr_initial : lr_initial / lr_decay_factor;
}

// ---------------------------------------------------------------------------
// Network evaluation

namespace {

// Activations of every layer for one example; reused across examples.
struct Workspace {
  explicit Workspace(const NetworkSpec& spec) : widths(spec.widths()) {
    for (auto w : widths) act.emplace_back(w, 0.0);
    for (auto w : widths) delta.emplace_back(w, 0.0);
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      offsets.push_back(offset);
      offset += widths[l + 1] * widths[l] + widths[l + 1];
    }
  }
  std::vector<std::size_t> widths;
  std::vector<std::size_t> offsets;  // start of each layer's block in the flat parameters
  std::vector<std::vector<double>> act;    // act[0] = input, act.back() = logits
  std::vector<std::vector<double>> delta;  // dLoss / d(pre-activation)
};

void forward_pass(std::span<const double> params, std::span<const double> x, Workspace& ws) {
  const auto& w = ws.widths;
  if (x.size() != w.front()) throw Error(ErrorKind::DimensionMismatch, "input length vs network input_dim");
  std::copy(x.begin(), x.end(), ws.act[0].begin());
  std::size_t offset = 0;
  const std::size_t layers = w.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = w[l];
    const std::size_t out = w[l + 1];
    const double* weights = params.data() + offset;
    const double* bias = weights + out * in;
    const double* a = ws.act[l].data();
    double* z = ws.act[l + 1].data();
    const bool hidden = l + 1 < layers;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wrow = weights + o * in;
      double acc = bias[o];
      for (std::size_t i = 0; i < in; ++i) acc += wrow[i] * a[i];
      z[o] = hidden ? std::max(acc, 0.0) : acc;
    }
    offset += out * in + out;
  }
}

// Accumulates the gradient of one example given ws.delta.back() = dLoss/dlogits.
void backward_pass(std::span<const double> params, Workspace& ws, std::span<double> grad) {
  const auto& w = ws.widths;
  const std::size_t layers = w.size() - 1;
  const auto& offsets = ws.offsets;
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = w[l];
    const std::size_t out = w[l + 1];
    const double* weights = params.data() + offsets[l];
    double* gw = grad.data() + offsets[l];
    double* gb = gw + out * in;
    const double* a = ws.act[l].data();
    const double* d = ws.delta[l + 1].data();
    for (std::size_t o = 0; o < out; ++o) {
      const double dv = d[o];
      if (dv == 0.0) continue;
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += dv * a[i];
      gb[o] += dv;
    }
    if (l == 0) break;
    double* dprev = ws.delta[l].data();
    for (std::size_t i = 0; i < in; ++i) {
      if (a[i] <= 0.0) {  // ReLU gate; act holds post-activation values
        dprev[i] = 0.0;
        continue;
      }
      double acc = 0.0;
      for (std::size_t o = 0; o < out; ++o) acc += weights[o * in + i] * d[o];
      dprev[i] = acc;
    }
  }
}

}  // namespace

std::vector<double> network_logits(const NetworkSpec& spec, std::span<const double> params,
                                   std::span<const double> x) {
  if (params.size() != spec.parameter_count()) {
    throw Error(ErrorKind::DimensionMismatch, "parameter count vs network spec");
  }
  Workspace ws(spec);
  forward_pass(params, x, ws);
  return ws.act.back();
}

double loss_and_gradient(const NetworkSpec& spec, std::span<const double> params, const Matrix& features,
                         std::span<const Label> labels, std::span<const std::size_t> rows,
                         const ExampleLoss& loss, std::span<double> grad) {
  if (params.size() != spec.parameter_count() || grad.size() != params.size()) {
    throw Error(ErrorKind::DimensionMismatch, "parameter or gradient size vs network spec");
  }
  if (rows.empty()) throw Error(ErrorKind::EmptyDataset, "empty batch");
  std::fill(grad.begin(), grad.end(), 0.0);
  Workspace ws(spec);
  double total = 0.0;
  for (std::size_t r : rows) {
    forward_pass(params, features.row(r), ws);
    total += loss(ws.act.back(), labels[r], ws.delta.back());
    backward_pass(params, ws, grad);
  }
  const double scale = 1.0 / static_cast<double>(rows.size());
  for (double& g : grad) g *= scale;
  return total * scale;
}

// ---------------------------------------------------------------------------
// TrainedModel

TrainedModel::TrainedModel(NetworkSpec spec, std::vector<double> params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
  if (params_.size() != spec_.parameter_count()) {
    throw Error(ErrorKind::DimensionMismatch, "parameter count vs network spec");
  }
}

std::vector<double> TrainedModel::logits(std::span<const double> x) const {
  return network_logits(spec_, params_, x);
}

PosteriorVector TrainedModel::posterior(std::span<const double> x) const {
  return PosteriorVector::normalized(softmax(logits(x)));
}

PosteriorVector predict_posterior(const TrainedModel& model, std::span<const double> x) {
  return model.posterior(x);
}

std::size_t predict_label(const TrainedModel& model, std::span<const double> x) {
  return model.posterior(x).argmax();
}

double accuracy(const PosteriorModel& model, const Dataset& data, std::span<const Label> labels) {
  if (labels.size() != data.size()) throw Error(ErrorKind::DimensionMismatch, "labels vs rows");
  if (data.size() == 0) throw Error(ErrorKind::EmptyDataset, "accuracy of empty dataset");
  std::size_t hits = 0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (model.posterior(data.row(r)).argmax() == labels[r]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

std::vector<double> init_parameters(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  SplitMix64 rng(derive_seed(seed, 0x1417));
  const auto w = spec.widths();
  std::vector<double> params;
  params.reserve(spec.parameter_count());
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w[l] + w[l + 1]));
    for (std::size_t k = 0; k < w[l] * w[l + 1]; ++k) params.push_back(limit * (2.0 * rng.uniform() - 1.0));
    params.insert(params.end(), w[l + 1], 0.0);
  }
  return params;
}

ExampleLoss make_example_loss(const NetworkSpec& spec) {
  spec.validate();
  switch (spec.loss.kind) {
    case LossKind::plain_ce:
      return [](std::span<const double> z, Label y, std::span<double> g) { return cross_entropy_loss(z, y, g); };
    case LossKind::forward:
      return [t = *spec.loss.matrix](std::span<const double> z, Label y, std::span<double> g) {
        return forward_loss(z, y, t, g);
      };
    case LossKind::reweight:
      return [rw = ReweightCorrection(*spec.loss.matrix)](std::span<const double> z, Label y, std::span<double> g) {
        return rw(z, y, g).loss;
      };
  }
  throw Error(ErrorKind::InvalidArgument, "unknown loss adapter");
}

// ---------------------------------------------------------------------------
// Training

Split split_train_val(const Dataset& data, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "val_fraction must lie in (0,1)");
  }
  const std::size_t n = data.size();
  if (n < 2) throw Error(ErrorKind::TooFewSamples, "need at least two rows to split");
  auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * val_fraction));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(derive_seed(seed, 0x5E1));
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  Split split;
  split.val_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  split.train_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(split.val_rows.begin(), split.val_rows.end());
  std::sort(split.train_rows.begin(), split.train_rows.end());
  split.train = data.subset(split.train_rows);
  split.val = data.subset(split.val_rows);
  return split;
}

TrainedModel train(const Dataset& train_set, const Dataset& val_set, const NetworkSpec& spec,
                   const TrainConfig& cfg) {
  spec.validate();
  cfg.validate();
  const auto& train_labels = train_set.require_noisy();
  const auto& val_labels = val_set.require_noisy();
  if (train_set.size() == 0 || val_set.size() == 0) throw Error(ErrorKind::EmptyDataset, "empty split");
  if (train_set.dim() != spec.input_dim || val_set.dim() != spec.input_dim) {
    throw Error(ErrorKind::DimensionMismatch, "feature dimension vs network input_dim");
  }
  if (train_set.num_classes != spec.num_classes) {
    throw Error(ErrorKind::DimensionMismatch, "dataset classes vs network outputs");
  }

  const ExampleLoss loss = make_example_loss(spec);
  std::vector<double> params = init_parameters(spec, cfg.seed);
  std::vector<double> grad(params.size());
  std::vector<double> best = params;
  double best_acc = -1.0;
  int best_epoch = 0;
  std::vector<EpochStats> history;
  history.reserve(static_cast<std::size_t>(cfg.epochs));

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Workspace ws(spec);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    SplitMix64 shuffle_rng(derive_seed(cfg.seed, 0x10000 + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng.below(i + 1)]);

    const double lr = cfg.learning_rate(epoch);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, stop - start);
      const double batch_loss =
          loss_and_gradient(spec, params, train_set.features, train_labels, batch, loss, grad);
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorKind::NonFiniteLoss, "training diverged in epoch " + std::to_string(epoch));
      }
      epoch_loss += batch_loss * static_cast<double>(batch.size());
      for (std::size_t k = 0; k < params.size(); ++k) params[k] -= lr * grad[k];
    }

    std::size_t hits = 0;
    for (std::size_t r = 0; r < val_set.size(); ++r) {
      forward_pass(params, val_set.row(r), ws);
      const auto& z = ws.act.back();
      const auto pred = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
      if (pred == val_labels[r]) ++hits;
    }
    const double val_acc = static_cast<double>(hits) / static_cast<double>(val_set.size());
    history.push_back({epoch, epoch_loss / static_cast<double>(order.size()), val_acc});
    if (val_acc > best_acc) {
      best_acc = val_acc;
      best_epoch = epoch;
      best = params;
    }
  }

  TrainedModel model(spec, std::move(best));
  model.best_val_accuracy = best_acc;
  model.best_epoch = best_epoch;
  model.history = std::move(history);
  model.config = cfg;
  return model;
}

// ---------------------------------------------------------------------------
// JSON

Json to_json(const NetworkSpec& spec) {
  Json j;
  j["input_dim"] = spec.input_dim;
  j["hidden_sizes"] = spec.hidden_sizes;
  j["num_classes"] = spec.num_classes;
  j["activation"] = "relu";
  j["loss_adapter"] = to_string(spec.loss.kind);
  j["loss_matrix"] = spec.loss.matrix ? to_json(*spec.loss.matrix) : Json(nullptr);
  return j;
}

NetworkSpec network_spec_from_json(const Json& j) {
  try {
    NetworkSpec spec;
    spec.input_dim = j.at("input_dim").get<std::size_t>();
    spec.hidden_sizes = j.at("hidden_sizes").get<std::vector<std::size_t>>();
    spec.num_classes = j.at("num_classes").get<std::size_t>();
    if (j.value("activation", std::string("relu")) != "relu") {
      throw Error(ErrorKind::ParseError, "only relu activation is supported");
    }
    spec.loss.kind = parse_loss_kind(j.value("loss_adapter", std::string("plain_ce")));
    if (j.contains("loss_matrix") && !j["loss_matrix"].is_null()) {
      spec.loss.matrix = transition_matrix_from_json(j["loss_matrix"]);
    }
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
}

Json to_json(const TrainConfig& cfg) {
  Json j;
  j["epochs"] = cfg.epochs;
  j["lr_initial"] = cfg.lr_initial;
  j["lr_decay_factor"] = cfg.lr_decay_factor;
  j["lr_decay_epoch"] = cfg.lr_decay_epoch;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  j["val_fraction"] = cfg.val_fraction;
  return j;
}

TrainConfig train_config_from_json(const Json& j) {
  try {
    TrainConfig cfg;
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.lr_initial = j.value("lr_initial", cfg.lr_initial);
    cfg.lr_decay_factor = j.value("lr_decay_factor", cfg.lr_decay_factor);
    cfg.lr_decay_epoch = j.value("lr_decay_epoch", cfg.lr_decay_epoch);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.val_fraction = j.value("val_fraction", cfg.val_fraction);
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
}

Json to_json(const TrainedModel& model) {
  const auto& spec = model.spec();
  const auto w = spec.widths();
  Json layers = Json::array();
  std::size_t offset = 0;
  const auto params = model.params();
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const std::size_t nw = w[l] * w[l + 1];
    Json layer;
    layer["in"] = w[l];
    layer["out"] = w[l + 1];
    layer["weights"] = std::vector<double>(params.begin() + static_cast<std::ptrdiff_t>(offset),
                                           params.begin() + static_cast<std::ptrdiff_t>(offset + nw));
    layer["bias"] = std::vector<double>(params.begin() + static_cast<std::ptrdiff_t>(offset + nw),
                                        params.begin() + static_cast<std::ptrdiff_t>(offset + nw + w[l + 1]));
    layers.push_back(std::move(layer));
    offset += nw + w[l + 1];
  }
  Json j;
  j["spec"] = to_json(spec);
  j["layers"] = std::move(layers);
  j["best_val_accuracy"] = model.best_val_accuracy;
  j["best_epoch"] = model.best_epoch;
  j["train_config"] = model.config ? to_json(*model.config) : Json(nullptr);
  Json hist = Json::array();
  for (const auto& h : model.history) {
    hist.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"val_accuracy", h.val_accuracy}});
  }
  j["history"] = std::move(hist);
  return j;
}

TrainedModel trained_model_from_json(const Json& j) {
  try {
    NetworkSpec spec = network_spec_from_json(j.at("spec"));
    std::vector<double> params;
    for (const auto& layer : j.at("layers")) {
      const auto wts = layer.at("weights").get<std::vector<double>>();
      const auto bias = layer.at("bias").get<std::vector<double>>();
      params.insert(params.end(), wts.begin(), wts.end());
      params.insert(params.end(), bias.begin(), bias.end());
    }
    TrainedModel model(std::move(spec), std::move(params));
    model.best_val_accuracy = j.value("best_val_accuracy", 0.0);
    model.best_epoch = j.value("best_epoch", 0);
    if (j.contains("train_config") && !j["train_config"].is_null()) {
      model.config = train_config_from_json(j["train_config"]);
    }
    if (j.contains("history")) {
      for (const auto& h : j["history"]) {
        model.history.push_back({h.at("epoch").get<int>(), h.at("train_loss").get<double>(),
                                 h.at("val_accuracy").get<double>()});
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
}

}  // namespace noisyt::models
