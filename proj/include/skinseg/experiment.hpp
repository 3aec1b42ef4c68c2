#pragma once

#include <map>

#include "skinseg/metrics.hpp"
#include "skinseg/train.hpp"

namespace skinseg {

enum class Approach { target_only, source_only, fine_tune, pseudo_label, combined };

std::string approach_slug(Approach a);
Approach approach_from_slug(const std::string& slug);

/// One cell of the adaptation study: a strategy applied to a source/target
/// pair at a given label budget, scored on the target test split.
struct ExperimentPlan {
  std::string source;  // empty for target_only
  std::string target;
  Approach approach = Approach::target_only;
  double budget = 0.0;
  ModelSpec model;
  TrainConfig train;
};

struct ExperimentResult {
  ExperimentPlan plan;
  MetricReport metrics;  // per-image-mean aggregate on the target test split
  std::string note;      // "fine-tune skipped" for combined at budget 0
};

using ResultTable = std::vector<ExperimentResult>;

struct EvalOutcome {
  std::vector<std::string> ids;
  std::vector<MetricReport> per_image;
  MetricReport aggregate;
};

/// Thresholds the model's full-image predictions and scores them against the
/// ground-truth masks of the chosen split (a sample without one is an error).
EvalOutcome evaluate_model(const ModelState& m, const Dataset& ds, Split split,
                           AggregateMode mode = AggregateMode::per_image_mean,
                           double threshold = 0.5);

/// Runs every plan and returns one result per plan, in plan order. All plans
/// are validated before anything runs. Within one call, the source model for
/// a given (source, model, train) combination is trained once and shared by
/// source_only, fine_tune, pseudo_label and combined.
///
/// Reproducibility contract per plan (root = plan.train.seed): the label
/// subsample uses root directly; target_only builds its model from root and
/// trains with root; the shared source model uses derive_seed(root, "source")
/// for its parameters and "source-train" for its training; fine-tuning
/// derives "ft"; the pseudo-label model derives "pseudo" / "pseudo-train";
/// the combined pipeline derives its phases from root as documented in
/// train.hpp. Re-running a matrix with equal plans reproduces it bit-exactly.
ResultTable run_experiment_matrix(const std::vector<ExperimentPlan>& plans,
                                  const std::map<std::string, Dataset>& datasets);

/// The default study grid for one source/target pair: target_only and
/// fine_tune at budgets {5, 10, 50, 100}%, source_only at 0%, pseudo_label
/// and combined at {0, 5, 10, 50}%.
std::vector<ExperimentPlan> default_matrix_plans(const std::string& source,
                                                 const std::string& target,
                                                 const ModelSpec& spec,
                                                 const TrainConfig& train);

enum class ReportFormat { csv, markdown };

/// CSV: header source,target,approach,budget,seed,mean_f1,acc,iou,prec,rec
/// and one row per result, full precision. Markdown: one row per
/// (source, target, approach) with budget columns as percentages, two-decimal
/// F1 percent points in the cells, and "-" where no plan produced a value;
/// noted cells are marked with '*' and explained under the table.
std::string render_report_table(const ResultTable& results, ReportFormat fmt);

void emit_report_table(const ResultTable& results, ReportFormat fmt,
                       const std::filesystem::path& path);

}  // namespace skinseg
