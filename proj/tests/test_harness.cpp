#include <doctest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include "noisyt/harness.hpp"
#include "noisyt/io.hpp"

using namespace noisyt;
using namespace noisyt::harness;
namespace pt = boost::property_tree;

namespace {

SweepConfig small_config() {
  SweepConfig cfg;
  cfg.trial.noise = noise::NoiseKind::pair;
  cfg.trial.eps = 0.45;
  cfg.trial.train.epochs = 3;
  cfg.trial.train.lr_decay_epoch = 2;
  cfg.trial.test_size = 50;
  cfg.sample_sizes = {200, 400, 800};
  cfg.repeats = 2;
  cfg.base_seed = 42;
  return cfg;
}

std::vector<CellRecord> strip_times(std::vector<CellRecord> r) {
  for (auto& x : r) x.wall_time_s = 0.0;
  return r;
}

pt::ptree parse_svg(const std::string& svg) {
  std::istringstream in(svg);
  pt::ptree tree;
  pt::read_xml(in, tree);
  return tree;
}

// Visits every element below `node`, passing its tag and subtree.
template <class F>
void walk(const pt::ptree& node, F&& f) {
  for (const auto& [tag, child] : node) {
    if (tag == "<xmlattr>") continue;
    f(tag, child);
    walk(child, f);
  }
}

}  // namespace

TEST_CASE("cell seeds are a pure function of (base, n, repeat)") {
  CHECK(cell_seed(1, 2000, 0) == cell_seed(1, 2000, 0));
  CHECK(cell_seed(1, 2000, 0) != cell_seed(1, 2000, 1));
  CHECK(cell_seed(1, 2000, 0) != cell_seed(1, 5000, 0));
  CHECK((cell_seed(1, 2000, 3) ^ cell_seed(2, 2000, 3)) == (1ULL ^ 2ULL));
  const auto s = TrialSeeds::from(5);
  CHECK(s.generate != s.corrupt);
  CHECK(s.split != s.train);
}

TEST_CASE("sweep config validation") {
  auto cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.repeats = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.sample_sizes = {400, 200};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.sample_sizes = {200, 200};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.estimators.clear();
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK(parse_estimator("dualt") == Estimator::dualt);
  CHECK_THROWS_AS(parse_estimator("dual"), Error);
}

TEST_CASE("trial preparation") {
  TrialSettings s;
  s.eps = 0.3;
  const auto trial = prepare_trial(s, 500, 9);
  CHECK(trial.data.size() == 500);
  CHECK(trial.split.train.size() == 400);
  CHECK(trial.split.val.size() == 100);
  CHECK(trial.test.size() == 1000);
  CHECK_FALSE(trial.model.has_value());
  CHECK(trial.truth == noise::symmetric_matrix(2, 0.3));
  const auto again = prepare_trial(s, 500, 9);
  CHECK(trial.data.noisy_labels == again.data.noisy_labels);
}

TEST_CASE("sweep arity, determinism and job independence") {
  auto one = small_config();
  one.sample_sizes = {300};
  one.repeats = 1;
  const auto r1 = run_sweep(one);
  CHECK(r1.records.size() == 2);
  CHECK(r1.aggregates.size() == 2);

  const auto cfg = small_config();
  const auto a = run_sweep(cfg);
  const auto b = run_sweep(cfg);
  auto par = cfg;
  par.jobs = 3;
  const auto c = run_sweep(par);
  CHECK(a.records.size() == 12);
  CHECK(strip_times(a.records) == strip_times(b.records));
  CHECK(strip_times(a.records) == strip_times(c.records));
  // Canonical ordering: n, then repeat, then estimator.
  CHECK(a.records[0].n == 200);
  CHECK(a.records[0].estimator == Estimator::t);
  CHECK(a.records[1].estimator == Estimator::dualt);
  CHECK(a.records[0].seed == cell_seed(42, 200, 0));
  CHECK(a.records[2].seed == cell_seed(42, 200, 1));
  CHECK(a.records.back().n == 800);
}

TEST_CASE("aggregates are recomputable from records") {
  const auto res = run_sweep(small_config());
  CHECK(res.aggregates.size() == 3 * 2);
  std::map<std::pair<std::size_t, Estimator>, std::vector<double>> groups;
  for (const auto& r : res.records) groups[{r.n, r.estimator}].push_back(*r.l1_error);
  for (const auto& a : res.aggregates) {
    const auto& v = groups.at({a.n, a.estimator});
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    const double sd = std::sqrt(var / static_cast<double>(v.size()));
    CHECK(std::abs(a.mean - m) <= 1e-12);
    CHECK(std::abs(a.std - sd) <= 1e-12);
    CHECK(a.count == v.size());
  }
}

TEST_CASE("failed cells are recorded, not fatal") {
  auto cfg = small_config();
  cfg.sample_sizes = {200};
  cfg.trial.train.lr_initial = 1e200;
  const auto res = run_sweep(cfg);
  REQUIRE(res.records.size() == 4);
  for (const auto& r : res.records) {
    CHECK_FALSE(r.l1_error.has_value());
    CHECK_FALSE(r.error.empty());
  }
  const auto csv = records_csv(res.records);
  CHECK(csv.find(",error,") != std::string::npos);
  const auto back = parse_records_csv(csv);
  CHECK_FALSE(back[0].l1_error.has_value());
  for (const auto& a : res.aggregates) CHECK(a.count == 0);
}

TEST_CASE("CSV emission and round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "noisyt_harness_test";
  std::filesystem::create_directories(dir);
  SUBCASE("empty result is header only") {
    emit_csv({}, dir / "empty.csv");
    CHECK(read_text_file(dir / "empty.csv") == std::string(kRecordsHeader) + "\n");
    CHECK(read_text_file(dir / "empty_agg.csv") == std::string(kAggregatesHeader) + "\n");
  }
  SUBCASE("records round trip exactly") {
    const auto res = run_sweep(small_config());
    emit_csv(res, dir / "sweep.csv");
    const auto text = read_text_file(dir / "sweep.csv");
    CHECK(text.rfind("noise,eps,n,seed,estimator,l1_error,wall_time_s\n", 0) == 0);
    CHECK(parse_records_csv(text) == res.records);
    const auto agg = read_text_file(dir / "sweep_agg.csv");
    CHECK(std::count(agg.begin(), agg.end(), '\n') == 1 + 3 * 2);
    CHECK(aggregate_path("a/b/run.csv") == std::filesystem::path("a/b/run_agg.csv"));
  }
  SUBCASE("bad CSV") {
    CHECK_THROWS_AS(parse_records_csv("wrong,header\n"), Error);
    CHECK_THROWS_AS(parse_records_csv(std::string(kRecordsHeader) + "\nsym,0.2,x,1,t,0.5,0.1\n"), Error);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("SVG is well formed and markers sit on the aggregate means") {
  const auto res = run_sweep(small_config());
  const auto svg = render_svg(res.aggregates, "Pair <45%>");
  const auto tree = parse_svg(svg);
  REQUIRE(tree.count("svg") == 1);

  // Recover the y axis from the tick marks on the left edge and their labels.
  std::vector<std::pair<double, double>> ticks;  // (pixel, value)
  std::map<std::pair<std::string, std::size_t>, double> cy;
  std::size_t polylines = 0, bands = 0;
  const double axis_x = std::stod(tree.get<std::string>("svg.g.line.<xmlattr>.x1"));
  walk(tree.get_child("svg"), [&](const std::string& tag, const pt::ptree& el) {
    const auto attrs = el.get_child_optional("<xmlattr>");
    if (!attrs) return;
    if (tag == "text" && attrs->get<std::string>("text-anchor", "") == "end") {
      ticks.emplace_back(attrs->get<double>("y") - 4.0, std::stod(el.data()));
    }
    if (tag == "polyline") ++polylines;
    if (tag == "polygon") ++bands;
    if (tag == "circle") {
      cy[{attrs->get<std::string>("data-estimator"), attrs->get<std::size_t>("data-n")}] = attrs->get<double>("cy");
    }
  });
  CHECK(axis_x > 0.0);
  CHECK(polylines == 2);
  CHECK(bands == 2);
  REQUIRE(ticks.size() >= 2);
  const auto [p0, v0] = ticks.front();
  const auto [p1, v1] = ticks.back();
  const double scale = (p1 - p0) / (v1 - v0);

  REQUIRE(cy.size() == res.aggregates.size());
  for (const auto& a : res.aggregates) {
    const double want = p0 + (a.mean - v0) * scale;
    CHECK(std::abs(cy.at({std::string(to_string(a.estimator)), a.n}) - want) <= 0.5);
  }
  CHECK(svg.find("Pair &lt;45%&gt;") != std::string::npos);
}

TEST_CASE("single-point sweep plots one marker per estimator") {
  auto cfg = small_config();
  cfg.sample_sizes = {300};
  cfg.repeats = 1;
  const auto res = run_sweep(cfg);
  const auto svg = render_svg(res.aggregates);
  CHECK_NOTHROW(parse_svg(svg));
  std::size_t markers = 0;
  for (auto pos = svg.find("<circle"); pos != std::string::npos; pos = svg.find("<circle", pos + 1)) ++markers;
  CHECK(markers == 2);
  CHECK_NOTHROW(parse_svg(render_svg({})));
  const auto layout = plot_layout(res.aggregates);
  CHECK(std::isfinite(layout.x_px(300.0)));
}
