#include "noisyt/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace noisyt {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::BadShape: return "BadShape";
    case ErrorKind::NonStochasticRow: return "NonStochasticRow";
    case ErrorKind::NegativeEntry: return "NegativeEntry";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::BadEps: return "BadEps";
    case ErrorKind::MissingCleanLabels: return "MissingCleanLabels";
    case ErrorKind::MissingNoisyLabels: return "MissingNoisyLabels";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::OracleUnavailable: return "OracleUnavailable";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

// ---------------------------------------------------------------------------
// Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) {
      throw Error(ErrorKind::BadShape, "ragged rows");
    }
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    out[r].assign(row(r).begin(), row(r).end());
  }
  return out;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "matrix product shapes");
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < a.cols(); ++l) acc += a(i, l) * b(l, j);
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  }
  return out;
}

Matrix invert(const Matrix& m, double pivot_threshold) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::BadShape, "inverse of non-square matrix");
  const std::size_t n = m.rows();
  Matrix a = m;
  Matrix inv = Matrix::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    if (!(std::abs(a(pivot, col)) >= pivot_threshold)) {
      throw Error(ErrorKind::SingularMatrix, "pivot below threshold in column " + std::to_string(col));
    }
    if (pivot != col) {
      std::swap_ranges(a.row(col).begin(), a.row(col).end(), a.row(pivot).begin());
      std::swap_ranges(inv.row(col).begin(), inv.row(col).end(), inv.row(pivot).begin());
    }
    const double d = a(col, col);
    for (std::size_t c = 0; c < n; ++c) {
      a(col, c) /= d;
      inv(col, c) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a(r, col);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        a(r, c) -= f * a(col, c);
        inv(r, c) -= f * inv(col, c);
      }
    }
  }
  return inv;
}

// ---------------------------------------------------------------------------
// PosteriorVector

PosteriorVector PosteriorVector::validate(std::vector<double> probs) {
  if (probs.empty()) throw Error(ErrorKind::BadShape, "empty posterior");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::NegativeEntry, "posterior entry outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw Error(ErrorKind::NonStochasticRow, "posterior sums to " + std::to_string(sum));
  }
  return PosteriorVector(std::move(probs));
}

PosteriorVector PosteriorVector::normalized(std::vector<double> probs) {
  double sum = 0.0;
  for (double p : probs) sum += p;
  if (sum > 0.0 && sum != 1.0) {
    for (double& p : probs) p /= sum;
  }
  return validate(std::move(probs));
}

PosteriorVector PosteriorVector::uniform(std::size_t num_classes) {
  return PosteriorVector(std::vector<double>(num_classes, 1.0 / static_cast<double>(num_classes)));
}

PosteriorVector PosteriorVector::one_hot(std::size_t num_classes, std::size_t index) {
  std::vector<double> p(num_classes, 0.0);
  p.at(index) = 1.0;
  return PosteriorVector(std::move(p));
}

std::size_t PosteriorVector::argmax() const noexcept {
  return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

// ---------------------------------------------------------------------------
// TransitionMatrix

TransitionMatrix TransitionMatrix::validate(Matrix entries) {
  if (entries.rows() != entries.cols() || entries.rows() < 2) {
    throw Error(ErrorKind::BadShape, "transition matrix must be square with C >= 2");
  }
  for (std::size_t i = 0; i < entries.rows(); ++i) {
    double sum = 0.0;
    for (double v : entries.row(i)) {
      if (!(v >= 0.0 && v <= 1.0)) {
        std::ostringstream msg;
        msg << "row " << i << " has entry " << v;
        throw Error(ErrorKind::NegativeEntry, msg.str());
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "row " << i << " sums to " << sum;
      throw Error(ErrorKind::NonStochasticRow, msg.str());
    }
  }
  return TransitionMatrix(std::move(entries));
}

TransitionMatrix TransitionMatrix::normalized(Matrix entries) {
  for (std::size_t i = 0; i < entries.rows(); ++i) {
    double sum = 0.0;
    for (double v : entries.row(i)) sum += v;
    if (sum > 0.0 && sum != 1.0) {
      for (double& v : entries.row(i)) v /= sum;
    }
  }
  return validate(std::move(entries));
}

TransitionMatrix TransitionMatrix::identity(std::size_t num_classes) {
  return validate(Matrix::identity(num_classes));
}

bool TransitionMatrix::is_identity() const noexcept {
  return entries_ == Matrix::identity(entries_.rows());
}

PosteriorVector apply_transition(const PosteriorVector& p, const TransitionMatrix& t) {
  const std::size_t c = t.num_classes();
  if (p.size() != c) throw Error(ErrorKind::DimensionMismatch, "posterior length vs matrix size");
  std::vector<double> out(c, 0.0);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j] += t(i, j) * p[i];
  }
  // Already on the simplex up to rounding; dividing by the sum would perturb
  // exact results such as the identity map.
  double sum = 0.0;
  for (double v : out) sum += v;
  if (std::abs(sum - 1.0) <= 1e-12) return PosteriorVector::validate(std::move(out));
  return PosteriorVector::normalized(std::move(out));
}

double l1_matrix_distance(const TransitionMatrix& a, const TransitionMatrix& b) {
  if (a.num_classes() != b.num_classes()) {
    throw Error(ErrorKind::DimensionMismatch, "matrices of different size");
  }
  double total = 0.0;
  const auto da = a.entries().data();
  const auto db = b.entries().data();
  for (std::size_t k = 0; k < da.size(); ++k) total += std::abs(da[k] - db[k]);
  return total;
}

// ---------------------------------------------------------------------------
// Dataset

void Dataset::validate() const {
  if (size() == 0 || dim() == 0) throw Error(ErrorKind::BadShape, "dataset needs n >= 1 and d >= 1");
  if (num_classes < 2) throw Error(ErrorKind::InvalidArgument, "num_classes must be >= 2");
  auto check = [&](const std::optional<std::vector<Label>>& labels, const char* what) {
    if (!labels) return;
    if (labels->size() != size()) {
      throw Error(ErrorKind::DimensionMismatch, std::string(what) + " length differs from row count");
    }
    for (Label y : *labels) {
      if (y >= num_classes) throw Error(ErrorKind::InvalidArgument, std::string(what) + " out of range");
    }
  };
  check(clean_labels, "clean label");
  check(noisy_labels, "noisy label");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.num_classes = num_classes;
  out.features = Matrix(rows.size(), dim());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto src = row(rows[k]);
    std::copy(src.begin(), src.end(), out.features.row(k).begin());
  }
  auto pick = [&](const std::optional<std::vector<Label>>& labels) -> std::optional<std::vector<Label>> {
    if (!labels) return std::nullopt;
    std::vector<Label> picked(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) picked[k] = (*labels)[rows[k]];
    return picked;
  };
  out.clean_labels = pick(clean_labels);
  out.noisy_labels = pick(noisy_labels);
  return out;
}

const std::vector<Label>& Dataset::require_clean() const {
  if (!clean_labels) throw Error(ErrorKind::MissingCleanLabels, "dataset has no clean labels");
  return *clean_labels;
}

const std::vector<Label>& Dataset::require_noisy() const {
  if (!noisy_labels) throw Error(ErrorKind::MissingNoisyLabels, "dataset has no noisy labels");
  return *noisy_labels;
}

Matrix posterior_table(const PosteriorModel& model, const Dataset& data) {
  if (data.dim() != model.input_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "feature dimension differs from model input");
  }
  Matrix table(data.size(), model.num_classes());
  for (std::size_t r = 0; r < data.size(); ++r) {
    const PosteriorVector p = model.posterior(data.row(r));
    std::copy(p.probs().begin(), p.probs().end(), table.row(r).begin());
  }
  return table;
}

void EstimationReport::score_against(const TransitionMatrix& truth) {
  if (truth.num_classes() != estimated.num_classes()) {
    throw Error(ErrorKind::DimensionMismatch, "ground truth size differs from estimate");
  }
  const std::size_t c = truth.num_classes();
  Matrix err(c, c);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < c; ++j) err(i, j) = std::abs(estimated(i, j) - truth(i, j));
  }
  ground_truth = truth;
  l1_error = l1_matrix_distance(estimated, truth);
  per_entry_abs_error = std::move(err);
}

}  // namespace noisyt
