// noisyt: command-line front end for transition-matrix estimation.
//
//   noisyt gen             sample the synthetic Gaussian dataset
//   noisyt corrupt         add noisy labels drawn from a transition matrix
//   noisyt train           fit the posterior network (plain cross-entropy)
//   noisyt estimate        T / dual-T estimate from a trained model
//   noisyt sweep           sample-size sweep with repeats -> CSV (+ SVG)
//   noisyt deltas          error-decomposition audit per (n, seed) cell
//   noisyt train-corrected forward / reweight training with an estimated T
//   noisyt plot            SVG error curves from a sweep CSV
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "noisyt/corrections.hpp"
#include "noisyt/deltas.hpp"
#include "noisyt/estimators.hpp"
#include "noisyt/harness.hpp"
#include "noisyt/io.hpp"
#include "noisyt/models.hpp"
#include "noisyt/noise.hpp"
#include "noisyt/rng.hpp"
#include "noisyt/synth.hpp"

namespace {

using namespace noisyt;

struct GaussianOpts {
  synth::GaussianSpec spec;
  void add(CLI::App* app) {
    app->add_option("--dim", spec.dim, "Feature dimension")->capture_default_str();
    app->add_option("--mean0", spec.mean0, "Per-coordinate mean of class 0")->capture_default_str();
    app->add_option("--mean1", spec.mean1, "Per-coordinate mean of class 1")->capture_default_str();
    app->add_option("--variance", spec.variance, "Per-coordinate variance")->capture_default_str();
    app->add_option("--prior1", spec.prior1, "P(Y=1)")->capture_default_str();
  }
};

struct TrainOpts {
  models::TrainConfig cfg;
  std::vector<std::size_t> hidden{25, 25};
  CLI::Option* decay_opt = nullptr;
  void add(CLI::App* app) {
    app->add_option("--epochs", cfg.epochs, "SGD epochs")->capture_default_str();
    app->add_option("--lr", cfg.lr_initial, "Initial learning rate")->capture_default_str();
    app->add_option("--lr-decay-factor", cfg.lr_decay_factor, "Learning-rate divisor after the decay epoch")
        ->capture_default_str();
    decay_opt = app->add_option("--lr-decay-epoch", cfg.lr_decay_epoch, "Last epoch at the initial rate")
                    ->capture_default_str();
    app->add_option("--batch-size", cfg.batch_size, "Mini-batch size")->capture_default_str();
    app->add_option("--val-fraction", cfg.val_fraction, "Share of rows held out for validation")
        ->capture_default_str();
    app->add_option("--hidden", hidden, "Hidden layer widths")->delimiter(',')->capture_default_str();
  }
  // A short --epochs without an explicit decay epoch just never decays.
  models::TrainConfig config() const {
    auto c = cfg;
    if (decay_opt->count() == 0) c.lr_decay_epoch = std::min(c.lr_decay_epoch, c.epochs);
    return c;
  }
  models::NetworkSpec network(std::size_t input_dim, std::size_t num_classes) const {
    models::NetworkSpec spec;
    spec.input_dim = input_dim;
    spec.num_classes = num_classes;
    spec.hidden_sizes = hidden;
    return spec;
  }
};

struct NoiseOpts {
  std::string kind = "sym";
  double eps = 0.2;
  void add(CLI::App* app) {
    app->add_option("--noise", kind, "Noise model")->check(CLI::IsMember({"sym", "pair"}))->capture_default_str();
    app->add_option("--eps", eps, "Noise rate in [0,1)")->capture_default_str();
  }
  TransitionMatrix matrix(std::size_t num_classes) const {
    return noise::make_matrix(noise::parse_noise_kind(kind), num_classes, eps);
  }
};

unsigned resolve_jobs(unsigned flag) {
  if (const char* env = std::getenv("NOISYT_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::InvalidArgument, "NOISYT_JOBS must be a positive integer");
  }
  return flag == 0 ? std::max(1u, std::thread::hardware_concurrency()) : flag;
}

// "sym:0.2", "pair:0.45" or a JSON file.
TransitionMatrix parse_truth(const std::string& text, std::size_t num_classes) {
  const auto colon = text.find(':');
  if (colon != std::string::npos && (text.starts_with("sym:") || text.starts_with("pair:"))) {
    return noise::make_matrix(noise::parse_noise_kind(text.substr(0, colon)), num_classes,
                              std::stod(text.substr(colon + 1)));
  }
  return transition_matrix_from_json(read_json_file(text));
}

// Rows the model was trained on, recorded by `train` as split metadata.
Dataset training_rows(const Json& model_json, const Dataset& data) {
  if (!model_json.contains("split")) return data;
  const auto& split = model_json["split"];
  if (split.at("n").get<std::size_t>() != data.size()) {
    throw Error(ErrorKind::DimensionMismatch, "dataset row count differs from the one the model was trained on");
  }
  return models::split_train_val(data, split.at("val_fraction").get<double>(), split.at("seed").get<std::uint64_t>())
      .train;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-noise transition matrix estimation (T and dual-T estimators)"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file whose keys mirror the flag names");

  // gen ----------------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "Sample the synthetic two-Gaussian dataset");
  GaussianOpts gen_gauss;
  gen_gauss.add(gen);
  std::size_t gen_n = 1000;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--n", gen_n, "Number of rows")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output CSV")->required();

  // corrupt ------------------------------------------------------------------
  auto* corrupt = app.add_subcommand("corrupt", "Draw noisy labels from a transition matrix");
  NoiseOpts corrupt_noise;
  corrupt_noise.add(corrupt);
  std::string corrupt_in, corrupt_out, corrupt_matrix_out, corrupt_matrix_in;
  std::uint64_t corrupt_seed = 0;
  std::optional<std::size_t> corrupt_classes;
  corrupt->add_option("--in", corrupt_in, "Input CSV with clean labels")->required();
  corrupt->add_option("--out", corrupt_out, "Output CSV")->required();
  corrupt->add_option("--seed", corrupt_seed, "Random seed")->capture_default_str();
  corrupt->add_option("--classes", corrupt_classes, "Number of classes (default: inferred)");
  corrupt->add_option("--matrix", corrupt_matrix_in, "Use this transition-matrix JSON instead of --noise/--eps");
  corrupt->add_option("--matrix-out", corrupt_matrix_out, "Also write the transition matrix as JSON");

  // train --------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Fit the noisy-posterior network with plain cross-entropy");
  TrainOpts train_opts;
  train_opts.add(train);
  std::string train_data, train_out;
  std::uint64_t train_seed = 0;
  train->add_option("--data", train_data, "CSV with noisy labels")->required();
  train->add_option("--out", train_out, "Output model JSON")->required();
  train->add_option("--seed", train_seed, "Seed for split, initialisation and shuffling")->capture_default_str();

  // estimate -----------------------------------------------------------------
  auto* estimate = app.add_subcommand("estimate", "Estimate T from a trained model");
  std::string est_model, est_data, est_out, est_truth, est_kind = "dualt";
  estimate->add_option("--model", est_model, "Model JSON from `train`")->required();
  estimate->add_option("--data", est_data, "The CSV the model was trained on")->required();
  estimate->add_option("--estimator", est_kind, "t or dualt")
      ->check(CLI::IsMember({"t", "dualt"}))
      ->capture_default_str();
  estimate->add_option("--truth", est_truth, "Ground truth: sym:EPS, pair:EPS or a matrix JSON");
  estimate->add_option("--out", est_out, "Output report JSON")->required();

  // sweep --------------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "Sample-size sweep on the synthetic task");
  GaussianOpts sweep_gauss;
  sweep_gauss.add(sweep);
  NoiseOpts sweep_noise;
  sweep_noise.add(sweep);
  TrainOpts sweep_train;
  sweep_train.add(sweep);
  std::vector<std::size_t> sweep_sizes{2000, 5000, 10000, 20000, 40000};
  std::vector<std::string> sweep_estimators{"t", "dualt"};
  int sweep_repeats = 5;
  std::uint64_t sweep_seed = 0;
  unsigned sweep_jobs = 1;
  std::size_t sweep_test = 1000;
  std::string sweep_out, sweep_plot;
  sweep->add_option("--sizes", sweep_sizes, "Ascending sample sizes")->delimiter(',')->capture_default_str();
  sweep->add_option("--repeats", sweep_repeats, "Trials per sample size")->capture_default_str();
  sweep->add_option("--base-seed", sweep_seed, "Base seed")->capture_default_str();
  sweep->add_option("--estimators", sweep_estimators, "Subset of t,dualt")->delimiter(',')->capture_default_str();
  sweep->add_option("--jobs", sweep_jobs, "Worker threads (0 = all cores; NOISYT_JOBS overrides)")
      ->capture_default_str();
  sweep->add_option("--test-size", sweep_test, "Held-out clean rows per trial")->capture_default_str();
  sweep->add_option("--out", sweep_out, "Per-cell CSV (aggregates go to *_agg.csv)")->required();
  sweep->add_option("--plot", sweep_plot, "Also write an SVG plot");

  // deltas -------------------------------------------------------------------
  auto* deltas_cmd = app.add_subcommand("deltas", "Audit the delta error decomposition per cell");
  GaussianOpts d_gauss;
  d_gauss.add(deltas_cmd);
  NoiseOpts d_noise;
  d_noise.add(deltas_cmd);
  TrainOpts d_train;
  d_train.add(deltas_cmd);
  std::vector<std::size_t> d_sizes{40000};
  int d_repeats = 5;
  std::uint64_t d_seed = 0;
  std::size_t d_mc_factor = 10;
  double d_slack = 0.05;
  std::size_t d_test = 1000;
  std::string d_out;
  deltas_cmd->add_option("--sizes", d_sizes, "Sample sizes")->delimiter(',')->capture_default_str();
  deltas_cmd->add_option("--repeats", d_repeats, "Trials per sample size")->capture_default_str();
  deltas_cmd->add_option("--base-seed", d_seed, "Base seed")->capture_default_str();
  deltas_cmd->add_option("--mc-factor", d_mc_factor, "Monte Carlo draw size as a multiple of the training rows")
      ->capture_default_str();
  deltas_cmd->add_option("--slack", d_slack, "Additive slack on the bound")->capture_default_str();
  deltas_cmd->add_option("--test-size", d_test, "Held-out rows for delta1")->capture_default_str();
  deltas_cmd->add_option("--out", d_out, "Output prefix: writes PREFIX.json and PREFIX.csv")->required();

  // train-corrected ----------------------------------------------------------
  auto* corrected = app.add_subcommand("train-corrected", "Train with a loss corrected by an estimated T");
  TrainOpts c_train;
  c_train.add(corrected);
  std::string c_data, c_test, c_out, c_summary, c_correction = "forward", c_matrix = "dualt", c_truth;
  std::uint64_t c_seed = 0;
  corrected->add_option("--data", c_data, "CSV with noisy labels")->required();
  corrected->add_option("--test", c_test, "Clean-labelled CSV for test accuracy");
  corrected->add_option("--correction", c_correction, "none, forward or reweight")
      ->check(CLI::IsMember({"none", "forward", "reweight"}))
      ->capture_default_str();
  corrected->add_option("--matrix", c_matrix, "true, t, dualt or a matrix JSON file")->capture_default_str();
  corrected->add_option("--truth", c_truth, "Ground truth for --matrix true: sym:EPS, pair:EPS or JSON");
  corrected->add_option("--seed", c_seed, "Seed")->capture_default_str();
  corrected->add_option("--out", c_out, "Output model JSON")->required();
  corrected->add_option("--summary", c_summary, "Write accuracies and the matrix used as JSON");

  // plot ---------------------------------------------------------------------
  auto* plot = app.add_subcommand("plot", "Render a sweep CSV as an SVG error plot");
  std::string plot_csv, plot_out;
  plot->add_option("--csv", plot_csv, "Per-cell CSV from `sweep`")->required();
  plot->add_option("--out", plot_out, "Output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gen) {
      write_dataset_csv(gen_out, synth::generate(gen_gauss.spec, gen_n, gen_seed));
    } else if (*corrupt) {
      const Dataset data = read_dataset_csv(corrupt_in, corrupt_classes);
      const TransitionMatrix t = corrupt_matrix_in.empty() ? corrupt_noise.matrix(data.num_classes)
                                                           : transition_matrix_from_json(read_json_file(corrupt_matrix_in));
      write_dataset_csv(corrupt_out, noise::corrupt(data, t, corrupt_seed));
      if (!corrupt_matrix_out.empty()) write_json_file(corrupt_matrix_out, to_json(t));
    } else if (*train) {
      const Dataset data = read_dataset_csv(train_data);
      const auto seeds = harness::TrialSeeds::from(train_seed);
      auto cfg = train_opts.config();
      cfg.seed = seeds.train;
      const auto split = models::split_train_val(data, cfg.val_fraction, seeds.split);
      const auto model = models::train(split.train, split.val, train_opts.network(data.dim(), data.num_classes), cfg);
      Json j = models::to_json(model);
      j["split"] = {{"seed", seeds.split}, {"val_fraction", cfg.val_fraction}, {"n", data.size()}};
      write_json_file(train_out, j);
      std::cout << "best epoch " << model.best_epoch << ", validation accuracy " << model.best_val_accuracy << '\n';
    } else if (*estimate) {
      const Json mj = read_json_file(est_model);
      const auto model = models::trained_model_from_json(mj);
      const Dataset rows = training_rows(mj, read_dataset_csv(est_data, model.num_classes()));
      EstimationReport report =
          est_kind == "t" ? estimators::t_estimate(model, rows) : estimators::dual_t_estimate(model, rows);
      if (!est_truth.empty()) report.score_against(parse_truth(est_truth, model.num_classes()));
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
      write_json_file(est_out, to_json(report));
      if (report.l1_error) std::cout << "l1 error " << *report.l1_error << '\n';
    } else if (*sweep) {
      harness::SweepConfig cfg;
      cfg.trial.gaussian = sweep_gauss.spec;
      cfg.trial.noise = noise::parse_noise_kind(sweep_noise.kind);
      cfg.trial.eps = sweep_noise.eps;
      cfg.trial.network = sweep_train.network(sweep_gauss.spec.dim, 2);
      cfg.trial.train = sweep_train.config();
      cfg.trial.test_size = sweep_test;
      cfg.sample_sizes = sweep_sizes;
      cfg.repeats = sweep_repeats;
      cfg.base_seed = sweep_seed;
      cfg.estimators.clear();
      for (const auto& e : sweep_estimators) cfg.estimators.push_back(harness::parse_estimator(e));
      cfg.jobs = resolve_jobs(sweep_jobs);
      const auto result = harness::run_sweep(cfg);
      harness::emit_csv(result, sweep_out);
      if (!sweep_plot.empty()) harness::emit_plot(result, sweep_plot);
      for (const auto& rec : result.records) {
        if (!rec.error.empty()) std::cerr << "cell n=" << rec.n << " seed=" << rec.seed << " failed: " << rec.error << '\n';
      }
    } else if (*deltas_cmd) {
      harness::TrialSettings settings;
      settings.gaussian = d_gauss.spec;
      settings.noise = noise::parse_noise_kind(d_noise.kind);
      settings.eps = d_noise.eps;
      settings.network = d_train.network(d_gauss.spec.dim, 2);
      settings.train = d_train.config();
      settings.test_size = d_test;
      Json reports = Json::array();
      std::string csv =
          "noise,eps,n,seed,delta1_mean,delta2_mean,delta3_mean,eps_T,eps_DT,bound,assumption1_fraction,"
          "bound_holds,dual_t_better\n";
      for (std::size_t n : d_sizes) {
        for (int r = 0; r < d_repeats; ++r) {
          const auto seed = harness::cell_seed(d_seed, n, r);
          const auto trial = harness::run_trial(settings, n, seed);
          const auto& rows = trial.split.train;
          auto report = deltas::audit_error_bound(*trial.model, settings.gaussian, trial.truth, rows,
                                               d_mc_factor * rows.size(), seed, d_slack);
          if (trial.test.size() > 0) {
            report.delta1_heldout = deltas::measure_delta1(*trial.model, settings.gaussian, trial.truth, trial.test);
          }
          Json j = deltas::to_json(report);
          j["noise"] = d_noise.kind;
          j["eps"] = d_noise.eps;
          j["n"] = n;
          reports.push_back(std::move(j));
          csv += d_noise.kind + ',' + format_shortest(d_noise.eps) + ',' + std::to_string(n) + ',' +
                 std::to_string(seed) + ',' + format_shortest(report.delta1_mean) + ',' +
                 format_shortest(report.delta2_mean) + ',' + format_shortest(report.delta3_mean) + ',' +
                 format_shortest(report.eps_T) + ',' + format_shortest(report.eps_DT) + ',' +
                 format_shortest(report.bound) + ',' + format_shortest(report.assumption1_fraction) + ',' +
                 (report.bound_holds ? "true" : "false") + ',' + (report.dual_t_better ? "true" : "false") + '\n';
        }
      }
      write_json_file(d_out + ".json", reports);
      write_text_file(d_out + ".csv", csv);
    } else if (*corrected) {
      const Dataset data = read_dataset_csv(c_data);
      const auto seeds = harness::TrialSeeds::from(c_seed);
      auto cfg = c_train.config();
      cfg.seed = seeds.train;
      const auto split = models::split_train_val(data, cfg.val_fraction, seeds.split);
      const auto spec = c_train.network(data.dim(), data.num_classes);

      std::optional<TransitionMatrix> t_hat;
      Json summary;
      if (c_correction != "none") {
        if (c_matrix == "true") {
          if (c_truth.empty()) throw Error(ErrorKind::InvalidArgument, "--matrix true needs --truth");
          t_hat = parse_truth(c_truth, data.num_classes);
        } else if (c_matrix == "t" || c_matrix == "dualt") {
          const auto base = models::train(split.train, split.val, spec, cfg);
          const auto report = c_matrix == "t" ? estimators::t_estimate(base, split.train)
                                              : estimators::dual_t_estimate(base, split.train);
          t_hat = report.estimated;
          summary["estimation"] = to_json(report);
        } else {
          t_hat = transition_matrix_from_json(read_json_file(c_matrix));
        }
      }
      const auto model = t_hat ? corrections::train_corrected(split.train, split.val, *t_hat,
                                                              corrections::parse_method(c_correction), spec, cfg)
                               : models::train(split.train, split.val, spec, cfg);
      write_json_file(c_out, models::to_json(model));
      summary["correction"] = c_correction;
      summary["matrix"] = t_hat ? to_json(*t_hat) : Json(nullptr);
      summary["best_val_accuracy"] = model.best_val_accuracy;
      summary["best_epoch"] = model.best_epoch;
      if (!c_test.empty()) {
        const Dataset test = read_dataset_csv(c_test, data.num_classes);
        summary["clean_test_accuracy"] = models::accuracy(model, test, test.require_clean());
        std::cout << "clean test accuracy " << summary["clean_test_accuracy"].get<double>() << '\n';
      }
      if (!c_summary.empty()) write_json_file(c_summary, summary);
    } else if (*plot) {
      harness::SweepResult result;
      result.records = harness::parse_records_csv(read_text_file(plot_csv));
      result.aggregates = harness::aggregate(result.records);
      harness::emit_plot(result, plot_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_numerical() ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
