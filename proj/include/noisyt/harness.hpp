// Experiment orchestration: seeded trials on the synthetic task, sample-size
// sweeps with repeats, CSV emission and SVG error curves.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "noisyt/models.hpp"
#include "noisyt/noise.hpp"
#include "noisyt/synth.hpp"

namespace noisyt::harness {

enum class Estimator { t, dualt };

std::string_view to_string(Estimator e) noexcept;
Estimator parse_estimator(std::string_view name);

/// Everything a single seeded trial needs besides (n, seed).
struct TrialSettings {
  synth::GaussianSpec gaussian;
  noise::NoiseKind noise = noise::NoiseKind::symmetric;
  double eps = 0.2;
  models::NetworkSpec network;  // input_dim and num_classes are overwritten
  models::TrainConfig train;    // seed is overwritten per trial
  std::size_t test_size = 1000;

  TransitionMatrix truth() const;
};

struct Trial {
  std::uint64_t seed = 0;
  TransitionMatrix truth = TransitionMatrix::identity(2);
  Dataset data;  // clean and noisy labels
  models::Split split;
  Dataset test;  // fresh clean rows, no noisy labels
  std::optional<models::TrainedModel> model;  // empty after prepare_trial
};

/// Sub-seeds of a trial, derived from its seed.
struct TrialSeeds {
  std::uint64_t generate, corrupt, split, train, test;
  static TrialSeeds from(std::uint64_t seed) noexcept;
};

/// generate -> corrupt -> split -> train(plain CE), all seeded from `seed`.
Trial run_trial(const TrialSettings& settings, std::size_t n, std::uint64_t seed);

/// Same as run_trial up to the split, without training.
Trial prepare_trial(const TrialSettings& settings, std::size_t n, std::uint64_t seed);

/// base_seed XOR a 64-bit hash of (n, repeat).
std::uint64_t cell_seed(std::uint64_t base_seed, std::size_t n, int repeat) noexcept;

struct SweepConfig {
  TrialSettings trial;
  std::vector<std::size_t> sample_sizes{2000, 5000, 10000, 20000, 40000};
  int repeats = 5;
  std::uint64_t base_seed = 0;
  std::vector<Estimator> estimators{Estimator::t, Estimator::dualt};
  unsigned jobs = 1;

  void validate() const;
};

struct CellRecord {
  std::string noise;
  double eps = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  Estimator estimator = Estimator::t;
  std::optional<double> l1_error;  // empty when the cell failed
  double wall_time_s = 0.0;
  std::string error;

  friend bool operator==(const CellRecord&, const CellRecord&) = default;
};

struct Aggregate {
  std::string noise;
  double eps = 0.0;
  std::size_t n = 0;
  Estimator estimator = Estimator::t;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t count = 0;
};

struct SweepResult {
  std::vector<CellRecord> records;  // ordered by (n, repeat, estimator)
  std::vector<Aggregate> aggregates;  // ordered by (n, estimator)
};

/// Cells run on up to cfg.jobs threads; a failing cell yields records with
/// an error marker instead of aborting the sweep.
SweepResult run_sweep(const SweepConfig& cfg);

/// Groups successful records by (noise, eps, n, estimator) in first-seen order.
std::vector<Aggregate> aggregate(const std::vector<CellRecord>& records);

inline constexpr std::string_view kRecordsHeader = "noise,eps,n,seed,estimator,l1_error,wall_time_s";
inline constexpr std::string_view kAggregatesHeader = "noise,eps,n,estimator,mean_l1,std_l1,count";

std::string records_csv(const std::vector<CellRecord>& records);
std::string aggregates_csv(const std::vector<Aggregate>& aggregates);
std::vector<CellRecord> parse_records_csv(const std::string& text);

/// "dir/name.csv" -> "dir/name_agg.csv".
std::filesystem::path aggregate_path(const std::filesystem::path& records_path);

/// Writes the per-cell CSV to `path` and the aggregates next to it.
void emit_csv(const SweepResult& result, const std::filesystem::path& path);

/// Pixel mapping of the error-curve plot: x is log10(n), y is linear.
struct PlotLayout {
  double width = 640.0;
  double height = 400.0;
  double left = 70.0;
  double right = 20.0;
  double top = 30.0;
  double bottom = 50.0;
  double log_x_min = 0.0;
  double log_x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  double x_px(double n) const;
  double y_px(double value) const;
};

PlotLayout plot_layout(const std::vector<Aggregate>& aggregates);

/// One polyline per estimator over mean error, a +-1 std band, and a
/// circle marker per point carrying data-estimator / data-n attributes.
std::string render_svg(const std::vector<Aggregate>& aggregates, std::string_view title = {});
void emit_plot(const SweepResult& result, const std::filesystem::path& path);

}  // namespace noisyt::harness
