#include "noisyt/estimators.hpp"

#include <algorithm>

namespace noisyt::estimators {

namespace {

void require_rows(const Matrix& posteriors) {
  if (posteriors.rows() == 0) throw Error(ErrorKind::EmptyDataset, "no rows to estimate from");
  if (posteriors.cols() < 2) throw Error(ErrorKind::BadShape, "posterior table needs C >= 2 columns");
}

Matrix table_for(const PosteriorModel& model, const Dataset& data) {
  if (data.size() == 0) throw Error(ErrorKind::EmptyDataset, "empty dataset");
  return posterior_table(model, data);
}

}  // namespace

AnchorSet find_anchors(const Matrix& posteriors) {
  require_rows(posteriors);
  const std::size_t c = posteriors.cols();
  AnchorSet anchors;
  anchors.indices.assign(c, 0);
  for (std::size_t r = 1; r < posteriors.rows(); ++r) {
    for (std::size_t i = 0; i < c; ++i) {
      if (posteriors(r, i) > posteriors(anchors.indices[i], i)) anchors.indices[i] = r;
    }
  }
  for (std::size_t i = 0; i < c; ++i) {
    const auto row = posteriors.row(anchors.indices[i]);
    anchors.posteriors.push_back(PosteriorVector::normalized({row.begin(), row.end()}));
  }
  return anchors;
}

AnchorSet find_anchors(const PosteriorModel& model, const Dataset& data) {
  return find_anchors(table_for(model, data));
}

EstimationReport t_estimate(const Matrix& posteriors) {
  const AnchorSet anchors = find_anchors(posteriors);
  const std::size_t c = posteriors.cols();
  Matrix rows(c, c);
  for (std::size_t i = 0; i < c; ++i) {
    const auto p = anchors.posteriors[i].probs();
    std::copy(p.begin(), p.end(), rows.row(i).begin());
  }
  EstimationReport report;
  report.estimated = TransitionMatrix::normalized(std::move(rows));
  report.anchor_indices = anchors.indices;
  return report;
}

EstimationReport t_estimate(const PosteriorModel& model, const Dataset& data) {
  return t_estimate(table_for(model, data));
}

std::vector<Label> intermediate_labels(const Matrix& posteriors) {
  require_rows(posteriors);
  std::vector<Label> labels(posteriors.rows());
  for (std::size_t r = 0; r < posteriors.rows(); ++r) {
    const auto row = posteriors.row(r);
    labels[r] = static_cast<Label>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return labels;
}

std::vector<Label> intermediate_labels(const PosteriorModel& model, const Dataset& data) {
  return intermediate_labels(table_for(model, data));
}

CountResult count_spade(std::span<const Label> intermediate, std::span<const Label> noisy,
                        std::size_t num_classes) {
  if (intermediate.size() != noisy.size()) {
    throw Error(ErrorKind::DimensionMismatch, "intermediate and noisy label counts differ");
  }
  if (num_classes < 2) throw Error(ErrorKind::BadShape, "need at least two classes");
  Matrix counts(num_classes, num_classes);
  CountResult out;
  out.row_counts.assign(num_classes, 0);
  for (std::size_t r = 0; r < noisy.size(); ++r) {
    if (intermediate[r] >= num_classes || noisy[r] >= num_classes) {
      throw Error(ErrorKind::DimensionMismatch, "label out of range at row " + std::to_string(r));
    }
    counts(intermediate[r], noisy[r]) += 1.0;
    ++out.row_counts[intermediate[r]];
  }
  for (std::size_t l = 0; l < num_classes; ++l) {
    const auto total = static_cast<double>(out.row_counts[l]);
    if (out.row_counts[l] == 0) {
      counts(l, l) = 1.0;
      out.empty_rows.push_back(l);
      out.warnings.push_back("intermediate class " + std::to_string(l) + " has no rows; using one-hot row");
      continue;
    }
    for (double& v : counts.row(l)) v /= total;
  }
  out.matrix = TransitionMatrix::normalized(std::move(counts));
  return out;
}

TransitionMatrix compose(const TransitionMatrix& clean_to_intermediate,
                         const TransitionMatrix& intermediate_to_noisy) {
  if (clean_to_intermediate.num_classes() != intermediate_to_noisy.num_classes()) {
    throw Error(ErrorKind::DimensionMismatch, "factor sizes differ");
  }
  return TransitionMatrix::normalized(multiply(clean_to_intermediate.entries(), intermediate_to_noisy.entries()));
}

EstimationReport dual_t_estimate(const Matrix& posteriors, std::span<const Label> intermediate,
                                 std::span<const Label> noisy) {
  if (noisy.size() != posteriors.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "noisy labels vs posterior rows");
  }
  EstimationReport clubs = t_estimate(posteriors);
  CountResult spade = count_spade(intermediate, noisy, posteriors.cols());

  EstimationReport report;
  report.estimated = compose(clubs.estimated, spade.matrix);
  report.anchor_indices = std::move(clubs.anchor_indices);
  report.clean_to_intermediate = std::move(clubs.estimated);
  report.intermediate_to_noisy = std::move(spade.matrix);
  report.warnings = std::move(spade.warnings);
  return report;
}

EstimationReport dual_t_estimate(const Matrix& posteriors, std::span<const Label> noisy) {
  const auto inter = intermediate_labels(posteriors);
  return dual_t_estimate(posteriors, inter, noisy);
}

EstimationReport dual_t_estimate(const PosteriorModel& model, const Dataset& data) {
  const auto& noisy = data.require_noisy();
  return dual_t_estimate(table_for(model, data), noisy);
}

}  // namespace noisyt::estimators
