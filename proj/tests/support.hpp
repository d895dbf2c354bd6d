// Helpers shared by the unit tests.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "noisyt/core.hpp"

namespace testing {

using noisyt::Label;
using noisyt::Matrix;
using noisyt::PosteriorVector;

// Model whose posterior is looked up by row: features are {row index}.
class TableModel final : public noisyt::PosteriorModel {
 public:
  explicit TableModel(Matrix table) : table_(std::move(table)) {}
  std::size_t num_classes() const override { return table_.cols(); }
  std::size_t input_dim() const override { return 1; }
  PosteriorVector posterior(std::span<const double> x) const override {
    const auto r = table_.row(static_cast<std::size_t>(x[0]));
    return PosteriorVector::normalized({r.begin(), r.end()});
  }
  noisyt::Dataset dataset(std::vector<Label> noisy = {}) const {
    noisyt::Dataset d;
    d.features = Matrix(table_.rows(), 1);
    for (std::size_t r = 0; r < table_.rows(); ++r) d.features(r, 0) = static_cast<double>(r);
    d.num_classes = table_.cols();
    if (!noisy.empty()) d.noisy_labels = std::move(noisy);
    return d;
  }

 private:
  Matrix table_;
};

class UniformModel final : public noisyt::PosteriorModel {
 public:
  UniformModel(std::size_t c, std::size_t d) : c_(c), d_(d) {}
  std::size_t num_classes() const override { return c_; }
  std::size_t input_dim() const override { return d_; }
  PosteriorVector posterior(std::span<const double>) const override { return PosteriorVector::uniform(c_); }

 private:
  std::size_t c_, d_;
};

// Random point on the simplex (uniform via normalised exponentials).
inline std::vector<double> random_simplex(std::mt19937_64& g, std::size_t c) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(c);
  double s = 0.0;
  for (auto& v : p) s += (v = e(g));
  for (auto& v : p) v /= s;
  return p;
}

inline Matrix random_stochastic(std::mt19937_64& g, std::size_t c) {
  Matrix m(c, c);
  for (std::size_t i = 0; i < c; ++i) {
    const auto p = random_simplex(g, c);
    for (std::size_t j = 0; j < c; ++j) m(i, j) = p[j];
  }
  return m;
}

// Diagonally dominant row-stochastic matrix.
inline Matrix random_dominant(std::mt19937_64& g, std::size_t c) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(c, c);
  for (std::size_t i = 0; i < c; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (j != i) off += (m(i, j) = u(g));
    }
    const double keep = 0.55 + 0.4 * u(g);
    for (std::size_t j = 0; j < c; ++j) {
      if (j != i) m(i, j) *= (1.0 - keep) / off;
    }
    m(i, i) = keep;
  }
  return m;
}

// ||a - b|| / max(||a|| + ||b||, 1e-12), the usual gradient-check metric.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nb), 1e-12);
}

// Central differences of f around x.
template <class F>
std::vector<double> numeric_gradient(F&& f, std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

}  // namespace testing
