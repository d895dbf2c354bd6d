// Per-example losses on raw logits, each returning the loss and writing
// dLoss/dlogits into `grad`.
#pragma once

#include <span>
#include <vector>

#include "noisyt/core.hpp"

namespace noisyt {

inline constexpr double kProbabilityFloor = 1e-12;

/// Softmax with max-subtraction.
void softmax(std::span<const double> logits, std::span<double> out);
std::vector<double> softmax(std::span<const double> logits);

/// -log max(softmax(z)[label], 1e-12).
double cross_entropy_loss(std::span<const double> logits, Label label, std::span<double> grad);

/// Forward correction: p = softmax(z), pbar = T^T p, loss -log max(pbar[label], 1e-12).
/// With T = I the loss and gradient are bit-identical to cross_entropy_loss.
double forward_loss(std::span<const double> logits, Label label, const TransitionMatrix& t,
                    std::span<double> grad);

struct ReweightEval {
  double loss = 0.0;
  double weight = 0.0;
};

/// Importance reweighting with the model read as a noisy posterior p.
///
///   q      = clip_[0,1](T^{-T} p), renormalised       (inferred clean posterior)
///   weight = q[label] / max((T^T q)[label], 1e-12)
///   loss   = weight * -log max(p[label], 1e-12)
///
/// The weight is a constant for differentiation, so grad = weight * (p - e_label).
class ReweightCorrection {
 public:
  /// Throws SingularMatrix when T has no usable inverse.
  explicit ReweightCorrection(TransitionMatrix t);

  ReweightEval operator()(std::span<const double> logits, Label label, std::span<double> grad) const;

  /// The clipped, renormalised clean posterior for noisy posterior p.
  std::vector<double> infer_clean(std::span<const double> p) const;
  double weight(std::span<const double> p, Label label) const;

  const TransitionMatrix& transition() const noexcept { return t_; }

 private:
  TransitionMatrix t_;
  Matrix inverse_transpose_;
};

ReweightEval reweight_loss(std::span<const double> logits, Label label, const TransitionMatrix& t,
                           std::span<double> grad);

}  // namespace noisyt
