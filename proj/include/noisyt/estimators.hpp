// Transition-matrix estimators.
//
// T estimator: for every class i pick the anchor row maximising the
// estimated noisy posterior of class i and read T-hat row i off the posterior
// at that row.
//
// Dual-T estimator: treat the estimated noisy posterior as the exact
// posterior of an intermediate class Y'. The clean -> intermediate matrix
// comes from the T estimator applied to that posterior; the intermediate ->
// noisy matrix is counted from (argmax label, noisy label) pairs. The result
// composes the two as T-hat(i, j) = sum_l clean_to_intermediate(i, l) *
// intermediate_to_noisy(l, j).
//
// Every function has an overload working on a precomputed n x C posterior
// table so callers can substitute any posterior source.
#pragma once

#include <string>
#include <vector>

#include "noisyt/core.hpp"

namespace noisyt::estimators {

struct AnchorSet {
  std::vector<std::size_t> indices;       // indices[i] = anchor row for class i
  std::vector<PosteriorVector> posteriors;  // posterior at each anchor
};

/// For each class, the row maximising that column; lowest row on ties.
AnchorSet find_anchors(const Matrix& posteriors);
AnchorSet find_anchors(const PosteriorModel& model, const Dataset& data);

/// Row i of the estimate is the posterior at the class-i anchor.
EstimationReport t_estimate(const Matrix& posteriors);
EstimationReport t_estimate(const PosteriorModel& model, const Dataset& data);

/// Argmax of each posterior row, lowest class on ties.
std::vector<Label> intermediate_labels(const Matrix& posteriors);
std::vector<Label> intermediate_labels(const PosteriorModel& model, const Dataset& data);

struct CountResult {
  TransitionMatrix matrix = TransitionMatrix::identity(2);
  std::vector<std::size_t> row_counts;  // rows per intermediate class
  std::vector<std::size_t> empty_rows;  // intermediate classes that never occur
  std::vector<std::string> warnings;
};

/// Row l, column j: share of rows with intermediate label l that carry noisy
/// label j. An intermediate class with no rows gets the one-hot row e_l.
CountResult count_spade(std::span<const Label> intermediate, std::span<const Label> noisy,
                        std::size_t num_classes);

/// Dual-T on a posterior table with intermediate labels taken as its argmax.
EstimationReport dual_t_estimate(const Matrix& posteriors, std::span<const Label> noisy);
/// Dual-T with caller-supplied intermediate labels.
EstimationReport dual_t_estimate(const Matrix& posteriors, std::span<const Label> intermediate,
                                 std::span<const Label> noisy);
EstimationReport dual_t_estimate(const PosteriorModel& model, const Dataset& data);

/// sum_l clean_to_intermediate(i, l) * intermediate_to_noisy(l, j), rows renormalised.
TransitionMatrix compose(const TransitionMatrix& clean_to_intermediate,
                         const TransitionMatrix& intermediate_to_noisy);

}  // namespace noisyt::estimators
