#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "skinseg/experiment.hpp"
#include "skinseg/synth.hpp"
#include "test_util.hpp"

using namespace skinseg;
using testutil::TempDir;

namespace {

UNetConfig tiny_unet_cfg() {
  UNetConfig cfg;
  cfg.levels = 2;
  cfg.base_channels = 2;
  cfg.frame_h = 16;
  cfg.frame_w = 16;
  return cfg;
}

ModelSpec tiny_spec() {
  ModelSpec spec;
  spec.kind = ModelKind::unet;
  spec.unet = tiny_unet_cfg();
  return spec;
}

TrainConfig tiny_train() {
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch = 4;
  cfg.augment_enabled = false;
  cfg.phase1_steps = 1;
  cfg.seed = 3;
  return cfg;
}

Dataset tiny_domain(const std::string& name, int n, uint64_t seed, int n_test) {
  DomainSpec spec;
  spec.name = name;
  spec.noise = 0.01;
  Dataset ds = make_synthetic_domain(spec, n, 16, 16, seed);
  for (int i = 0; i < n_test && i < n; ++i) {
    ds.samples[static_cast<std::size_t>(n - 1 - i)].split = Split::test;
  }
  return ds;
}

ExperimentPlan plan_of(const std::string& source, const std::string& target, Approach a,
                       double budget) {
  ExperimentPlan p;
  p.source = source;
  p.target = target;
  p.approach = a;
  p.budget = budget;
  p.model = tiny_spec();
  p.train = tiny_train();
  return p;
}

/// Hand-crafted result with a fixed F1, bypassing any training.
ExperimentResult fake_result(const std::string& source, const std::string& target,
                             Approach a, double budget, double f1,
                             const std::string& note = "") {
  ExperimentResult r;
  r.plan = plan_of(source, target, a, budget);
  r.metrics.f1 = f1;
  r.metrics.acc = 0.5;
  r.metrics.iou = 0.25;
  r.metrics.prec = 0.125;
  r.metrics.rec = 0.0625;
  r.note = note;
  return r;
}

}  // namespace

TEST_CASE("approach slugs round trip") {
  for (const Approach a : {Approach::target_only, Approach::source_only,
                           Approach::fine_tune, Approach::pseudo_label,
                           Approach::combined}) {
    CHECK(approach_from_slug(approach_slug(a)) == a);
  }
  CHECK_THROWS_AS(approach_from_slug("finetune"), DataError);
  CHECK_THROWS_AS(approach_from_slug(""), DataError);
}

TEST_CASE("model evaluation scores the requested split") {
  Dataset ds = tiny_domain("d", 4, 51, 2);
  ModelState m = build_unet(tiny_unet_cfg(), 5);

  const EvalOutcome test_ev = evaluate_model(m, ds, Split::test);
  CHECK(test_ev.ids.size() == 2);
  CHECK(test_ev.per_image.size() == 2);
  const EvalOutcome train_ev = evaluate_model(m, ds, Split::train);
  CHECK(train_ev.ids.size() == 2);

  SUBCASE("a zero threshold predicts everything as foreground") {
    const EvalOutcome ev = evaluate_model(m, ds, Split::test,
                                          AggregateMode::per_image_mean, 0.0);
    for (const auto& r : ev.per_image) CHECK(r.rec == 1.0);
  }
  SUBCASE("a missing ground-truth mask is an error") {
    ds.samples[3].mask.reset();
    CHECK_THROWS_AS(evaluate_model(m, ds, Split::test), DataError);
  }
  SUBCASE("an empty split is an error") {
    for (auto& s : ds.samples) s.split = Split::train;
    CHECK_THROWS_AS(evaluate_model(m, ds, Split::test), DataError);
  }
}

TEST_CASE("the experiment matrix runs every approach and keeps plan order") {
  std::map<std::string, Dataset> datasets;
  datasets["src"] = tiny_domain("src", 3, 52, 1);
  datasets["tgt"] = tiny_domain("tgt", 4, 53, 1);

  const std::vector<ExperimentPlan> plans = {
      plan_of("", "tgt", Approach::target_only, 0.5),
      plan_of("src", "tgt", Approach::source_only, 0.0),
      plan_of("src", "tgt", Approach::fine_tune, 0.5),
      plan_of("src", "tgt", Approach::pseudo_label, 0.0),
      plan_of("src", "tgt", Approach::combined, 0.0),
  };
  const ResultTable results = run_experiment_matrix(plans, datasets);
  REQUIRE(results.size() == plans.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    CHECK(results[i].plan.approach == plans[i].approach);
    CHECK(results[i].plan.budget == plans[i].budget);
    CHECK(results[i].metrics.f1 >= 0.0);
    CHECK(results[i].metrics.f1 <= 1.0);
    CHECK(results[i].metrics.acc >= 0.0);
    CHECK(results[i].metrics.acc <= 1.0);
  }
  CHECK(results[4].note == "fine-tune skipped");
  CHECK(results[0].note.empty());

  SUBCASE("a rerun reproduces the rendered report byte for byte") {
    const ResultTable again = run_experiment_matrix(plans, datasets);
    CHECK(render_report_table(results, ReportFormat::csv) ==
          render_report_table(again, ReportFormat::csv));
    CHECK(render_report_table(results, ReportFormat::markdown) ==
          render_report_table(again, ReportFormat::markdown));
  }
}

TEST_CASE("a lone target-only plan equals running its pieces directly") {
  std::map<std::string, Dataset> datasets;
  datasets["tgt"] = tiny_domain("tgt", 4, 54, 1);
  const ExperimentPlan p = plan_of("", "tgt", Approach::target_only, 0.5);

  const ResultTable results = run_experiment_matrix({p}, datasets);
  REQUIRE(results.size() == 1);

  const Dataset tsub = subsample_labels(datasets["tgt"], p.budget, p.train.seed);
  ModelState m = p.model.build(p.train.seed);
  train_supervised(m, tsub, p.train);
  const EvalOutcome ev = evaluate_model(m, datasets["tgt"], Split::test);
  CHECK(results[0].metrics.f1 == ev.aggregate.f1);
  CHECK(results[0].metrics.acc == ev.aggregate.acc);
  CHECK(results[0].metrics.iou == ev.aggregate.iou);
}

TEST_CASE("matrix validation rejects bad plans before running anything") {
  std::map<std::string, Dataset> datasets;
  datasets["tgt"] = tiny_domain("tgt", 2, 55, 1);

  CHECK_THROWS_AS(
      run_experiment_matrix({plan_of("nope", "tgt", Approach::fine_tune, 0.5)}, datasets),
      DataError);
  CHECK_THROWS_AS(
      run_experiment_matrix({plan_of("", "nope", Approach::target_only, 0.5)}, datasets),
      DataError);
  CHECK_THROWS_AS(
      run_experiment_matrix({plan_of("tgt", "tgt", Approach::fine_tune, 0.0)}, datasets),
      DataError);
  CHECK_THROWS_AS(
      run_experiment_matrix({plan_of("", "tgt", Approach::target_only, 1.5)}, datasets),
      DataError);
  auto bad_train = plan_of("", "tgt", Approach::target_only, 0.5);
  bad_train.train.lr = -1.0;
  CHECK_THROWS_AS(run_experiment_matrix({bad_train}, datasets), DataError);
}

TEST_CASE("the default study grid covers the adaptation table") {
  const auto plans = default_matrix_plans("a", "b", tiny_spec(), tiny_train());
  REQUIRE(plans.size() == 17);
  int target_only = 0, with_source = 0, zero_budget = 0;
  for (const auto& p : plans) {
    CHECK(p.target == "b");
    if (p.approach == Approach::target_only) {
      ++target_only;
      CHECK(p.source.empty());
      CHECK(p.budget > 0.0);
    } else {
      ++with_source;
      CHECK(p.source == "a");
    }
    if (p.budget == 0.0) ++zero_budget;
    if (p.approach == Approach::fine_tune) CHECK(p.budget > 0.0);
  }
  CHECK(target_only == 4);
  CHECK(with_source == 13);
  CHECK(zero_budget == 3);  // source_only, pseudo_label, combined
}

TEST_CASE("the report renders full-precision rows and a budget-pivot table") {
  ResultTable results;
  const double f1 = 0.96273456789012341;
  for (const double b : {0.05, 0.10, 0.50, 1.0}) {
    results.push_back(fake_result("", "t", Approach::target_only, b, f1));
  }
  results.push_back(fake_result("s", "t", Approach::source_only, 0.0, 0.5));
  for (const double b : {0.05, 0.10, 0.50, 1.0}) {
    results.push_back(fake_result("s", "t", Approach::fine_tune, b, 0.25));
  }
  for (const double b : {0.0, 0.05, 0.10, 0.50}) {
    results.push_back(fake_result("s", "t", Approach::pseudo_label, b, 0.75));
  }
  for (const double b : {0.0, 0.05, 0.10, 0.50}) {
    results.push_back(fake_result("s", "t", Approach::combined, b, 0.5,
                                  b == 0.0 ? "fine-tune skipped" : ""));
  }

  SUBCASE("csv keeps every bit of the metrics") {
    const std::string csv = render_report_table(results, ReportFormat::csv);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "source,target,approach,budget,seed,mean_f1,acc,iou,prec,rec");
    std::getline(in, line);
    // ,target,approach,budget,seed, then the metrics
    const auto f1_pos = line.find(",0.05,3,") + 8;
    const std::string f1_text = line.substr(f1_pos, line.find(',', f1_pos) - f1_pos);
    CHECK(std::stod(f1_text) == f1);
    int rows = 1;  // the row inspected above
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 17);
  }

  SUBCASE("the pivot table dashes exactly the cells without plans") {
    const std::string md = render_report_table(results, ReportFormat::markdown);
    std::istringstream in(md);
    std::string header, sep;
    std::getline(in, header);
    std::getline(in, sep);
    CHECK(header == "| Source | Target | Approach | 0% | 5% | 10% | 50% | 100% |");

    std::vector<std::string> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.front() == '|') rows.push_back(line);
    }
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == "| - | t | Target only | - | 96.27 | 96.27 | 96.27 | 96.27 |");
    CHECK(rows[1] == "| s | t | Source only | 50.00 | - | - | - | - |");
    CHECK(rows[2] == "| s | t | Fine-tuning only | - | 25.00 | 25.00 | 25.00 | 25.00 |");
    CHECK(rows[3] ==
          "| s | t | Cross-domain pseudo-label only | 75.00 | 75.00 | 75.00 | 75.00 | - |");
    CHECK(rows[4] ==
          "| s | t | Combined approach | 50.00* | 50.00 | 50.00 | 50.00 | - |");
    CHECK(md.find("\\* fine-tune skipped") != std::string::npos);
  }

  SUBCASE("an off-grid budget gets its own column") {
    results.push_back(fake_result("s", "t", Approach::fine_tune, 0.25, 0.25));
    const std::string md = render_report_table(results, ReportFormat::markdown);
    CHECK(md.find("| 25% |") != std::string::npos);
  }

  SUBCASE("empty results are an error") {
    CHECK_THROWS_AS(render_report_table({}, ReportFormat::csv), DataError);
    CHECK_THROWS_AS(render_report_table({}, ReportFormat::markdown), DataError);
  }

  SUBCASE("emitting writes the rendered text") {
    TempDir dir("report");
    const auto path = dir.path() / "report.csv";
    emit_report_table(results, ReportFormat::csv, path);
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() == render_report_table(results, ReportFormat::csv));
  }
}
