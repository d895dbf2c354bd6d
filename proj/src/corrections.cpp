#include "noisyt/corrections.hpp"

#include <string>

namespace noisyt::corrections {

Method parse_method(std::string_view name) {
  if (name == "forward") return Method::forward;
  if (name == "reweight") return Method::reweight;
  throw Error(ErrorKind::InvalidArgument, "unknown correction '" + std::string(name) + "'");
}

std::string_view to_string(Method method) noexcept {
  return method == Method::forward ? "forward" : "reweight";
}

models::TrainedModel train_corrected(const Dataset& noisy_train, const Dataset& noisy_val,
                                     const TransitionMatrix& t_hat, Method method,
                                     models::NetworkSpec spec, const models::TrainConfig& cfg) {
  if (method == Method::reweight) (void)ReweightCorrection{t_hat};  // throws SingularMatrix early
  spec.loss.kind = method == Method::forward ? models::LossKind::forward : models::LossKind::reweight;
  spec.loss.matrix = t_hat;
  return models::train(noisy_train, noisy_val, spec, cfg);
}

}  // namespace noisyt::corrections
