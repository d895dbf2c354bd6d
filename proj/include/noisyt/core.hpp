// Core numeric types for transition-matrix estimation: dense matrices,
// row-stochastic transition matrices, simplex vectors and labelled datasets.
//
// Label convention: classes are 0-based. T(i, j) is the probability that a
// sample whose clean label is i is observed with noisy label j.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace noisyt {

enum class ErrorKind {
  BadShape,
  NonStochasticRow,
  NegativeEntry,
  DimensionMismatch,
  BadEps,
  MissingCleanLabels,
  MissingNoisyLabels,
  EmptyDataset,
  TooFewSamples,
  NonFiniteLoss,
  SingularMatrix,
  OracleUnavailable,
  InvalidArgument,
  IoError,
  ParseError,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

  // Failures that stem from the numbers rather than from the caller's input.
  bool is_numerical() const noexcept {
    return kind_ == ErrorKind::NonFiniteLoss || kind_ == ErrorKind::SingularMatrix;
  }

 private:
  ErrorKind kind_;
};

using Label = std::uint32_t;

inline constexpr double kSimplexTolerance = 1e-9;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  /// Throws BadShape for ragged input.
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::vector<std::vector<double>> to_rows() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix multiply(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

/// Gauss-Jordan inversion with partial pivoting. Throws SingularMatrix when
/// the largest available pivot falls below `pivot_threshold`.
Matrix invert(const Matrix& m, double pivot_threshold = 1e-10);

/// A point on the probability simplex.
class PosteriorVector {
 public:
  /// Checks entries in [0,1] and sum within kSimplexTolerance of 1.
  static PosteriorVector validate(std::vector<double> probs);
  /// Divides by the sum first; for internally produced posteriors.
  static PosteriorVector normalized(std::vector<double> probs);
  static PosteriorVector uniform(std::size_t num_classes);
  static PosteriorVector one_hot(std::size_t num_classes, std::size_t index);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }

  /// Lowest index among the maxima.
  std::size_t argmax() const noexcept;

  friend bool operator==(const PosteriorVector&, const PosteriorVector&) = default;

 private:
  explicit PosteriorVector(std::vector<double> probs) : probs_(std::move(probs)) {}
  std::vector<double> probs_;
};

/// Row-stochastic C x C matrix, rows indexed by the clean ("from") class and
/// columns by the noisy ("to") class.
class TransitionMatrix {
 public:
  /// Errors: BadShape (not square or C < 2), NegativeEntry, NonStochasticRow.
  static TransitionMatrix validate(Matrix entries);
  /// Rescales every row by its sum before validating.
  static TransitionMatrix normalized(Matrix entries);
  static TransitionMatrix identity(std::size_t num_classes);

  std::size_t num_classes() const noexcept { return entries_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
  std::span<const double> row(std::size_t i) const { return entries_.row(i); }
  const Matrix& entries() const noexcept { return entries_; }

  bool is_identity() const noexcept;

  friend bool operator==(const TransitionMatrix&, const TransitionMatrix&) = default;

 private:
  explicit TransitionMatrix(Matrix entries) : entries_(std::move(entries)) {}
  Matrix entries_;
};

inline TransitionMatrix validate_transition_matrix(Matrix m) {
  return TransitionMatrix::validate(std::move(m));
}

/// Noisy posterior from a clean posterior: out_j = sum_i T(i, j) p_i.
PosteriorVector apply_transition(const PosteriorVector& p, const TransitionMatrix& t);

/// Sum of absolute entrywise differences.
double l1_matrix_distance(const TransitionMatrix& a, const TransitionMatrix& b);

/// Features with optional clean and noisy labels.
struct Dataset {
  Matrix features;
  std::optional<std::vector<Label>> clean_labels;
  std::optional<std::vector<Label>> noisy_labels;
  std::size_t num_classes = 2;

  std::size_t size() const noexcept { return features.rows(); }
  std::size_t dim() const noexcept { return features.cols(); }
  std::span<const double> row(std::size_t i) const { return features.row(i); }

  /// Throws BadShape / DimensionMismatch / InvalidArgument on violations.
  void validate() const;

  /// Rows in the given order; labels follow their rows.
  Dataset subset(std::span<const std::size_t> rows) const;

  const std::vector<Label>& require_clean() const;
  const std::vector<Label>& require_noisy() const;
};

/// Anything that maps a feature vector to a class posterior.
class PosteriorModel {
 public:
  virtual ~PosteriorModel() = default;
  virtual std::size_t num_classes() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual PosteriorVector posterior(std::span<const double> x) const = 0;
};

/// n x C matrix whose row r is model.posterior(data.row(r)).
Matrix posterior_table(const PosteriorModel& model, const Dataset& data);

struct EstimationReport {
  TransitionMatrix estimated = TransitionMatrix::identity(2);
  std::optional<TransitionMatrix> ground_truth;
  std::optional<double> l1_error;
  std::optional<Matrix> per_entry_abs_error;
  std::vector<std::size_t> anchor_indices;
  std::uint64_t seed = 0;
  // Dual-T factors; absent for the plain T estimator.
  std::optional<TransitionMatrix> clean_to_intermediate;
  std::optional<TransitionMatrix> intermediate_to_noisy;
  std::vector<std::string> warnings;

  /// Sets ground_truth and fills the error fields from it.
  void score_against(const TransitionMatrix& truth);
};

}  // namespace noisyt
