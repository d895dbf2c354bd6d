#include "noisyt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>

#include "noisyt/estimators.hpp"
#include "noisyt/io.hpp"
#include "noisyt/rng.hpp"

namespace noisyt::harness {

std::string_view to_string(Estimator e) noexcept { return e == Estimator::t ? "t" : "dualt"; }

Estimator parse_estimator(std::string_view name) {
  if (name == "t") return Estimator::t;
  if (name == "dualt") return Estimator::dualt;
  throw Error(ErrorKind::InvalidArgument, "unknown estimator '" + std::string(name) + "'");
}

TransitionMatrix TrialSettings::truth() const { return noise::make_matrix(noise, 2, eps); }

TrialSeeds TrialSeeds::from(std::uint64_t seed) noexcept {
  return {derive_seed(seed, 11), derive_seed(seed, 12), derive_seed(seed, 13), derive_seed(seed, 14),
          derive_seed(seed, 15)};
}

Trial prepare_trial(const TrialSettings& settings, std::size_t n, std::uint64_t seed) {
  const auto seeds = TrialSeeds::from(seed);
  Trial trial;
  trial.seed = seed;
  trial.truth = settings.truth();
  trial.data = noise::corrupt(synth::generate(settings.gaussian, n, seeds.generate), trial.truth, seeds.corrupt);
  trial.split = models::split_train_val(trial.data, settings.train.val_fraction, seeds.split);
  if (settings.test_size > 0) trial.test = synth::generate(settings.gaussian, settings.test_size, seeds.test);
  return trial;
}

Trial run_trial(const TrialSettings& settings, std::size_t n, std::uint64_t seed) {
  Trial trial = prepare_trial(settings, n, seed);
  models::NetworkSpec spec = settings.network;
  spec.input_dim = settings.gaussian.dim;
  spec.num_classes = 2;
  models::TrainConfig cfg = settings.train;
  cfg.seed = TrialSeeds::from(seed).train;
  trial.model = models::train(trial.split.train, trial.split.val, spec, cfg);
  return trial;
}

std::uint64_t cell_seed(std::uint64_t base_seed, std::size_t n, int repeat) noexcept {
  return base_seed ^ mix64(mix64(static_cast<std::uint64_t>(n)) ^ static_cast<std::uint64_t>(repeat));
}

void SweepConfig::validate() const {
  if (repeats < 1) throw Error(ErrorKind::InvalidArgument, "repeats must be >= 1");
  if (sample_sizes.empty()) throw Error(ErrorKind::InvalidArgument, "no sample sizes");
  for (std::size_t k = 0; k < sample_sizes.size(); ++k) {
    if (sample_sizes[k] < 2) throw Error(ErrorKind::InvalidArgument, "sample sizes must be >= 2");
    if (k > 0 && sample_sizes[k] <= sample_sizes[k - 1]) {
      throw Error(ErrorKind::InvalidArgument, "sample sizes must be strictly ascending");
    }
  }
  if (estimators.empty()) throw Error(ErrorKind::InvalidArgument, "no estimators requested");
  trial.gaussian.validate();
  trial.train.validate();
  if (!(trial.eps >= 0.0 && trial.eps < 1.0)) throw Error(ErrorKind::BadEps, "eps must lie in [0,1)");
}

namespace {

std::vector<CellRecord> run_cell(const SweepConfig& cfg, std::size_t n, int repeat) {
  const std::uint64_t seed = cell_seed(cfg.base_seed, n, repeat);
  std::vector<CellRecord> out;
  for (Estimator e : cfg.estimators) {
    CellRecord rec;
    rec.noise = std::string(noise::to_string(cfg.trial.noise));
    rec.eps = cfg.trial.eps;
    rec.n = n;
    rec.seed = seed;
    rec.estimator = e;
    out.push_back(std::move(rec));
  }
  const auto start = std::chrono::steady_clock::now();
  try {
    const Trial trial = run_trial(cfg.trial, n, seed);
    const Matrix table = posterior_table(*trial.model, trial.split.train);
    const double train_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (auto& rec : out) {
      const auto t0 = std::chrono::steady_clock::now();
      EstimationReport report = rec.estimator == Estimator::t
                                    ? estimators::t_estimate(table)
                                    : estimators::dual_t_estimate(table, *trial.split.train.noisy_labels);
      report.score_against(trial.truth);
      rec.l1_error = report.l1_error;
      rec.wall_time_s = train_time + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  } catch (const std::exception& e) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (auto& rec : out) {
      if (rec.l1_error) continue;
      rec.error = e.what();
      rec.wall_time_s = elapsed;
    }
  }
  return out;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  struct Cell {
    std::size_t n;
    int repeat;
  };
  std::vector<Cell> cells;
  for (std::size_t n : cfg.sample_sizes) {
    for (int r = 0; r < cfg.repeats; ++r) cells.push_back({n, r});
  }
  std::vector<std::vector<CellRecord>> slots(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) slots[k] = run_cell(cfg, cells[k].n, cells[k].repeat);
  };
  const unsigned jobs = std::clamp<unsigned>(cfg.jobs, 1, static_cast<unsigned>(cells.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  SweepResult result;
  for (auto& slot : slots) {
    for (auto& rec : slot) result.records.push_back(std::move(rec));
  }
  result.aggregates = aggregate(result.records);
  return result;
}

std::vector<Aggregate> aggregate(const std::vector<CellRecord>& records) {
  std::vector<Aggregate> out;
  std::vector<std::vector<double>> values;
  for (const auto& rec : records) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Aggregate& a) {
      return a.noise == rec.noise && a.eps == rec.eps && a.n == rec.n && a.estimator == rec.estimator;
    });
    if (it == out.end()) {
      Aggregate a;
      a.noise = rec.noise;
      a.eps = rec.eps;
      a.n = rec.n;
      a.estimator = rec.estimator;
      out.push_back(a);
      values.emplace_back();
      it = out.end() - 1;
    }
    if (rec.l1_error) values[static_cast<std::size_t>(it - out.begin())].push_back(*rec.l1_error);
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto& v = values[k];
    out[k].count = v.size();
    if (v.empty()) {
      out[k].mean = std::nan("");
      out[k].std = std::nan("");
      continue;
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    out[k].mean = mean;
    out[k].std = std::sqrt(ss / static_cast<double>(v.size()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

std::string records_csv(const std::vector<CellRecord>& records) {
  std::string out(kRecordsHeader);
  out += '\n';
  for (const auto& r : records) {
    out += r.noise + ',' + format_shortest(r.eps) + ',' + std::to_string(r.n) + ',' + std::to_string(r.seed) + ',' +
           std::string(to_string(r.estimator)) + ',' + (r.l1_error ? format_shortest(*r.l1_error) : "error") + ',' +
           format_shortest(r.wall_time_s) + '\n';
  }
  return out;
}

std::string aggregates_csv(const std::vector<Aggregate>& aggregates) {
  std::string out(kAggregatesHeader);
  out += '\n';
  for (const auto& a : aggregates) {
    out += a.noise + ',' + format_shortest(a.eps) + ',' + std::to_string(a.n) + ',' +
           std::string(to_string(a.estimator)) + ',' + format_shortest(a.mean) + ',' + format_shortest(a.std) + ',' +
           std::to_string(a.count) + '\n';
  }
  return out;
}

std::vector<CellRecord> parse_records_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kRecordsHeader) {
    throw Error(ErrorKind::ParseError, "missing sweep CSV header");
  }
  std::vector<CellRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw Error(ErrorKind::ParseError, "sweep CSV row needs 7 columns: " + line);
    try {
      CellRecord r;
      r.noise = cells[0];
      r.eps = std::stod(cells[1]);
      r.n = std::stoull(cells[2]);
      r.seed = std::stoull(cells[3]);
      r.estimator = parse_estimator(cells[4]);
      if (cells[5] != "error") r.l1_error = std::stod(cells[5]);
      r.wall_time_s = std::stod(cells[6]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::ParseError, "bad sweep CSV row: " + line);
    }
  }
  return out;
}

std::filesystem::path aggregate_path(const std::filesystem::path& records_path) {
  auto p = records_path;
  p.replace_filename(records_path.stem().string() + "_agg" + records_path.extension().string());
  return p;
}

void emit_csv(const SweepResult& result, const std::filesystem::path& path) {
  write_text_file(path, records_csv(result.records));
  write_text_file(aggregate_path(path), aggregates_csv(result.aggregates));
}

// ---------------------------------------------------------------------------
// SVG

double PlotLayout::x_px(double n) const {
  const double plot_w = width - left - right;
  if (log_x_max == log_x_min) return left + plot_w / 2.0;
  return left + (std::log10(n) - log_x_min) / (log_x_max - log_x_min) * plot_w;
}

double PlotLayout::y_px(double value) const {
  const double plot_h = height - top - bottom;
  return top + (y_max - value) / (y_max - y_min) * plot_h;
}

PlotLayout plot_layout(const std::vector<Aggregate>& aggregates) {
  PlotLayout layout;
  bool first = true;
  double hi = 0.0;
  for (const auto& a : aggregates) {
    if (a.count == 0) continue;
    const double lx = std::log10(static_cast<double>(a.n));
    if (first) {
      layout.log_x_min = layout.log_x_max = lx;
      first = false;
    }
    layout.log_x_min = std::min(layout.log_x_min, lx);
    layout.log_x_max = std::max(layout.log_x_max, lx);
    hi = std::max(hi, a.mean + a.std);
  }
  layout.y_min = 0.0;
  layout.y_max = hi > 0.0 ? hi * 1.1 : 1.0;
  return layout;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* colour(Estimator e) { return e == Estimator::t ? "#d62728" : "#1f77b4"; }
const char* label(Estimator e) { return e == Estimator::t ? "T estimator" : "dual-T estimator"; }

}  // namespace

std::string render_svg(const std::vector<Aggregate>& aggregates, std::string_view title) {
  const PlotLayout L = plot_layout(aggregates);
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << L.width << "\" height=\"" << L.height
      << "\" viewBox=\"0 0 " << L.width << ' ' << L.height << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << L.width << "\" height=\"" << L.height << "\" fill=\"white\"/>\n";
  if (!title.empty()) {
    svg << "<text x=\"" << fmt(L.width / 2) << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"14\">" << xml_escape(title) << "</text>\n";
  }

  const double x0 = L.left;
  const double x1 = L.width - L.right;
  const double y0 = L.height - L.bottom;
  const double y1 = L.top;
  svg << "<g id=\"axes\" stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x1) << "\" y2=\"" << fmt(y0)
      << "\"/>\n"
      << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x0) << "\" y2=\"" << fmt(y1)
      << "\"/>\n</g>\n";

  svg << "<g id=\"ticks\" font-family=\"sans-serif\" font-size=\"11\">\n";
  std::vector<std::size_t> xs;
  for (const auto& a : aggregates) {
    if (a.count > 0 && std::find(xs.begin(), xs.end(), a.n) == xs.end()) xs.push_back(a.n);
  }
  for (std::size_t n : xs) {
    const double px = L.x_px(static_cast<double>(n));
    svg << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(px) << "\" y2=\"" << fmt(y0 + 5)
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(y0 + 18) << "\" text-anchor=\"middle\">" << n << "</text>\n";
  }
  for (int k = 0; k <= 5; ++k) {
    const double v = L.y_min + (L.y_max - L.y_min) * k / 5.0;
    const double py = L.y_px(v);
    svg << "<line x1=\"" << fmt(x0 - 5) << "\" y1=\"" << fmt(py) << "\" x2=\"" << fmt(x0) << "\" y2=\"" << fmt(py)
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fmt(x0 - 8) << "\" y=\"" << fmt(py + 4) << "\" text-anchor=\"end\">" << tick_label(v)
        << "</text>\n";
  }
  svg << "<text x=\"" << fmt((x0 + x1) / 2) << "\" y=\"" << fmt(L.height - 10)
      << "\" text-anchor=\"middle\">training sample size (log scale)</text>\n"
      << "<text x=\"16\" y=\"" << fmt((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fmt((y0 + y1) / 2) << ")\">l1 estimation error</text>\n</g>\n";

  int legend_row = 0;
  for (Estimator e : {Estimator::t, Estimator::dualt}) {
    std::vector<const Aggregate*> pts;
    for (const auto& a : aggregates) {
      if (a.estimator == e && a.count > 0) pts.push_back(&a);
    }
    if (pts.empty()) continue;
    std::sort(pts.begin(), pts.end(), [](const Aggregate* a, const Aggregate* b) { return a->n < b->n; });
    const std::string name(to_string(e));
    svg << "<g id=\"series-" << name << "\">\n";

    svg << "<polygon class=\"band\" fill=\"" << colour(e) << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (const auto* a : pts) {
      svg << fmt(L.x_px(static_cast<double>(a->n))) << ',' << fmt(L.y_px(a->mean + a->std)) << ' ';
    }
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
      svg << fmt(L.x_px(static_cast<double>((*it)->n))) << ',' << fmt(L.y_px(std::max(0.0, (*it)->mean - (*it)->std)))
          << ' ';
    }
    svg << "\"/>\n";

    svg << "<polyline class=\"mean\" fill=\"none\" stroke=\"" << colour(e) << "\" stroke-width=\"2\" points=\"";
    for (const auto* a : pts) {
      svg << fmt(L.x_px(static_cast<double>(a->n))) << ',' << fmt(L.y_px(a->mean)) << ' ';
    }
    svg << "\"/>\n";
    for (const auto* a : pts) {
      svg << "<circle class=\"marker\" data-estimator=\"" << name << "\" data-n=\"" << a->n << "\" cx=\""
          << fmt(L.x_px(static_cast<double>(a->n))) << "\" cy=\"" << fmt(L.y_px(a->mean)) << "\" r=\"3.5\" fill=\""
          << colour(e) << "\"/>\n";
    }
    svg << "</g>\n";

    const double ly = L.top + 10 + 18.0 * legend_row++;
    svg << "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<line x1=\"" << fmt(x1 - 150) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(x1 - 125) << "\" y2=\""
        << fmt(ly) << "\" stroke=\"" << colour(e) << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << fmt(x1 - 120) << "\" y=\"" << fmt(ly + 4) << "\">" << label(e) << "</text>\n</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_plot(const SweepResult& result, const std::filesystem::path& path) {
  std::string title;
  if (!result.aggregates.empty()) {
    title = result.aggregates.front().noise + "-" + format_shortest(result.aggregates.front().eps * 100.0) + "%";
  }
  write_text_file(path, render_svg(result.aggregates, title));
}

}  // namespace noisyt::harness
