#include "noisyt/noise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "noisyt/rng.hpp"

namespace noisyt::noise {

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "sym") return NoiseKind::symmetric;
  if (name == "pair") return NoiseKind::pair;
  throw Error(ErrorKind::InvalidArgument, "unknown noise kind '" + std::string(name) + "'");
}

std::string_view to_string(NoiseKind kind) noexcept {
  return kind == NoiseKind::symmetric ? "sym" : "pair";
}

namespace {

void check_args(std::size_t num_classes, double eps) {
  if (num_classes < 2) throw Error(ErrorKind::BadShape, "need at least two classes");
  if (!(eps >= 0.0 && eps < 1.0)) throw Error(ErrorKind::BadEps, "eps must lie in [0,1)");
}

// The last entry of each row absorbs rounding so rows sum to 1.
void close_rows(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    double head = 0.0;
    for (std::size_t j = 0; j + 1 < row.size(); ++j) head += row[j];
    row.back() = std::max(0.0, 1.0 - head);
  }
}

}  // namespace

TransitionMatrix symmetric_matrix(std::size_t num_classes, double eps) {
  check_args(num_classes, eps);
  const double off = eps / static_cast<double>(num_classes - 1);
  Matrix m(num_classes, num_classes, off);
  for (std::size_t i = 0; i < num_classes; ++i) m(i, i) = 1.0 - eps;
  close_rows(m);
  return TransitionMatrix::validate(std::move(m));
}

TransitionMatrix pair_matrix(std::size_t num_classes, double eps) {
  check_args(num_classes, eps);
  Matrix m(num_classes, num_classes, 0.0);
  for (std::size_t i = 0; i < num_classes; ++i) {
    m(i, i) = 1.0 - eps;
    m(i, (i + 1) % num_classes) = eps;
  }
  close_rows(m);
  return TransitionMatrix::validate(std::move(m));
}

TransitionMatrix make_matrix(NoiseKind kind, std::size_t num_classes, double eps) {
  return kind == NoiseKind::symmetric ? symmetric_matrix(num_classes, eps) : pair_matrix(num_classes, eps);
}

Dataset corrupt(const Dataset& data, const TransitionMatrix& t, std::uint64_t seed) {
  const auto& clean = data.require_clean();
  if (data.num_classes != t.num_classes()) {
    throw Error(ErrorKind::DimensionMismatch, "dataset classes vs transition matrix size");
  }
  const CounterRng rng(seed);
  const std::size_t c = t.num_classes();
  std::vector<Label> noisy(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const auto row = t.row(clean[i]);
    const double u = rng.uniform(i);
    double cumulative = 0.0;
    // Fall back to the last class with positive mass if rounding leaves u above the total.
    std::size_t pick = c - 1;
    while (pick > 0 && row[pick] == 0.0) --pick;
    for (std::size_t j = 0; j < c; ++j) {
      cumulative += row[j];
      if (u < cumulative) {
        pick = j;
        break;
      }
    }
    noisy[i] = static_cast<Label>(pick);
  }
  Dataset out = data;
  out.noisy_labels = std::move(noisy);
  return out;
}

}  // namespace noisyt::noise
