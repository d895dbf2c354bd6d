// Training with an estimated transition matrix plugged into the loss.
#pragma once

#include <string_view>

#include "noisyt/losses.hpp"
#include "noisyt/models.hpp"

namespace noisyt::corrections {

enum class Method { forward, reweight };

Method parse_method(std::string_view name);
std::string_view to_string(Method method) noexcept;

/// models::train with `spec.loss` replaced by `method` carrying
/// `t_hat`. Reweighting rejects a singular matrix before any training.
models::TrainedModel train_corrected(const Dataset& noisy_train, const Dataset& noisy_val,
                                     const TransitionMatrix& t_hat, Method method,
                                     models::NetworkSpec spec, const models::TrainConfig& cfg);

}  // namespace noisyt::corrections
