#include "noisyt/losses.hpp"

#include <algorithm>
#include <cmath>

namespace noisyt {

void softmax(std::span<const double> logits, std::span<double> out) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - m);
    z += out[k];
  }
  for (double& v : out) v /= z;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  softmax(logits, p);
  return p;
}

namespace {

void check_label(std::span<const double> logits, Label label, std::span<double> grad) {
  if (label >= logits.size() || grad.size() != logits.size()) {
    throw Error(ErrorKind::DimensionMismatch, "label or gradient size does not match logits");
  }
}

}  // namespace

double cross_entropy_loss(std::span<const double> logits, Label label, std::span<double> grad) {
  check_label(logits, label, grad);
  softmax(logits, grad);
  const double py = grad[label];
  if (py <= kProbabilityFloor) {
    std::fill(grad.begin(), grad.end(), 0.0);
    return -std::log(kProbabilityFloor);
  }
  grad[label] -= 1.0;
  return -std::log(py);
}

double forward_loss(std::span<const double> logits, Label label, const TransitionMatrix& t,
                    std::span<double> grad) {
  check_label(logits, label, grad);
  if (t.num_classes() != logits.size()) throw Error(ErrorKind::DimensionMismatch, "logits vs matrix size");
  softmax(logits, grad);
  const std::span<const double> p = grad;
  double pbar = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) pbar += t(i, label) * p[i];
  if (pbar <= kProbabilityFloor) {
    std::fill(grad.begin(), grad.end(), 0.0);
    return -std::log(kProbabilityFloor);
  }
  // dL/dz_k = p_k (1 - T(k, label) / pbar), using sum_i p_i T(i, label) = pbar.
  for (std::size_t k = 0; k < grad.size(); ++k) grad[k] = grad[k] - grad[k] * t(k, label) / pbar;
  return -std::log(pbar);
}

ReweightCorrection::ReweightCorrection(TransitionMatrix t)
    : t_(std::move(t)), inverse_transpose_(transpose(invert(t_.entries()))) {}

std::vector<double> ReweightCorrection::infer_clean(std::span<const double> p) const {
  const std::size_t c = t_.num_classes();
  std::vector<double> q(c, 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    double v = 0.0;
    for (std::size_t j = 0; j < c; ++j) v += inverse_transpose_(i, j) * p[j];
    q[i] = std::clamp(v, 0.0, 1.0);
    sum += q[i];
  }
  if (sum > 0.0) {
    for (double& v : q) v /= sum;
  } else {
    std::fill(q.begin(), q.end(), 1.0 / static_cast<double>(c));
  }
  return q;
}

double ReweightCorrection::weight(std::span<const double> p, Label label) const {
  const auto q = infer_clean(p);
  double pbar = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) pbar += t_(i, label) * q[i];
  return q[label] / std::max(pbar, kProbabilityFloor);
}

ReweightEval ReweightCorrection::operator()(std::span<const double> logits, Label label,
                                            std::span<double> grad) const {
  check_label(logits, label, grad);
  if (t_.num_classes() != logits.size()) throw Error(ErrorKind::DimensionMismatch, "logits vs matrix size");
  softmax(logits, grad);
  ReweightEval out;
  out.weight = weight(grad, label);
  const double py = grad[label];
  if (py <= kProbabilityFloor) {
    std::fill(grad.begin(), grad.end(), 0.0);
    out.loss = out.weight * -std::log(kProbabilityFloor);
    return out;
  }
  grad[label] -= 1.0;
  for (double& g : grad) g *= out.weight;
  out.loss = out.weight * -std::log(py);
  return out;
}

ReweightEval reweight_loss(std::span<const double> logits, Label label, const TransitionMatrix& t,
                           std::span<double> grad) {
  return ReweightCorrection(t)(logits, label, grad);
}

}  // namespace noisyt
