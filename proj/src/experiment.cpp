#include "skinseg/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace skinseg {

std::string approach_slug(Approach a) {
  switch (a) {
    case Approach::target_only: return "target_only";
    case Approach::source_only: return "source_only";
    case Approach::fine_tune: return "fine_tune";
    case Approach::pseudo_label: return "pseudo_label";
    case Approach::combined: return "combined";
  }
  throw DataError("approach_slug: invalid approach value");
}

Approach approach_from_slug(const std::string& slug) {
  for (const Approach a : {Approach::target_only, Approach::source_only,
                           Approach::fine_tune, Approach::pseudo_label,
                           Approach::combined}) {
    if (approach_slug(a) == slug) return a;
  }
  throw DataError("unknown approach '" + slug +
                  "' (known: target_only, source_only, fine_tune, pseudo_label, combined)");
}

namespace {

/// Display names mirroring the study-table row labels.
std::string approach_display(Approach a) {
  switch (a) {
    case Approach::target_only: return "Target only";
    case Approach::source_only: return "Source only";
    case Approach::fine_tune: return "Fine-tuning only";
    case Approach::pseudo_label: return "Cross-domain pseudo-label only";
    case Approach::combined: return "Combined approach";
  }
  return "?";
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

/// Everything that influences a trained source model, so the cache never
/// conflates two different configurations.
std::string source_model_key(const ExperimentPlan& p) {
  std::ostringstream os;
  os << p.source << '|' << (p.model.kind == ModelKind::unet ? "unet" : "patch") << '|';
  if (p.model.kind == ModelKind::unet) {
    const auto& u = p.model.unet;
    os << u.levels << ',' << u.base_channels << ',' << u.frame_h << ',' << u.frame_w
       << ',' << u.batch_norm << ',' << static_cast<int>(u.upsample);
  } else {
    const auto& c = p.model.patch;
    os << c.size << ',' << c.conv[0] << ',' << c.conv[1] << ',' << c.conv[2] << ','
       << c.fc;
  }
  const auto& t = p.train;
  os << '|' << t.seed << ',' << t.lr << ',' << t.batch << ',' << t.epochs << ','
     << t.augment_enabled << ',' << t.augment.delta_h << ',' << t.augment.delta_s << ','
     << t.augment.delta_v << ',' << t.augment.max_shift << ',' << t.augment.flip_prob
     << ',' << t.augment.jitter_enabled << ',' << t.augment.shift_enabled << ','
     << t.augment.flip_enabled << ',' << t.loss.smoothness << ',' << t.tau << ','
     << t.t1 << ',' << t.t2 << ',' << t.alpha_f << ',' << t.patches_per_image << ','
     << t.patch_balanced << ',' << t.stop_at_f1 << ',' << t.max_steps;
  return os.str();
}

}  // namespace

EvalOutcome evaluate_model(const ModelState& m, const Dataset& ds, Split split,
                           AggregateMode mode, double threshold) {
  EvalOutcome out;
  for (const auto& s : ds.samples) {
    if (s.split != split) continue;
    if (!s.mask.has_value()) {
      throw DataError("evaluate_model: sample '" + s.id + "' has no ground-truth mask");
    }
    const Plane prob = predict_full_image(m, s);
    const auto q = (prob >= static_cast<float>(threshold)).cast<float>();
    out.ids.push_back(s.id);
    out.per_image.push_back(compute_metrics(q, *s.mask));
  }
  if (out.per_image.empty()) {
    throw DataError("evaluate_model: no samples in the requested split");
  }
  out.aggregate = aggregate_report(out.per_image, mode);
  return out;
}

ResultTable run_experiment_matrix(const std::vector<ExperimentPlan>& plans,
                                  const std::map<std::string, Dataset>& datasets) {
  for (const auto& p : plans) {
    if (p.approach != Approach::target_only && datasets.find(p.source) == datasets.end()) {
      throw DataError("run_experiment_matrix: unknown source domain '" + p.source + "'");
    }
    if (datasets.find(p.target) == datasets.end()) {
      throw DataError("run_experiment_matrix: unknown target domain '" + p.target + "'");
    }
    if (p.budget < 0.0 || p.budget > 1.0) {
      throw DataError("run_experiment_matrix: budget must be inside [0,1]");
    }
    if (p.approach == Approach::fine_tune && !(p.budget > 0.0)) {
      throw DataError("run_experiment_matrix: fine_tune requires budget > 0");
    }
    validate(p.train);
  }

  std::map<std::string, ModelState> source_cache;
  const auto source_model = [&](const ExperimentPlan& p) -> const ModelState& {
    const std::string key = source_model_key(p);
    auto it = source_cache.find(key);
    if (it == source_cache.end()) {
      ModelState a = p.model.build(derive_seed(p.train.seed, "source"));
      TrainConfig ca = p.train;
      ca.seed = derive_seed(p.train.seed, "source-train");
      train_supervised(a, datasets.at(p.source), ca);
      it = source_cache.emplace(key, std::move(a)).first;
    }
    return it->second;
  };

  ResultTable results;
  results.reserve(plans.size());
  for (const auto& p : plans) {
    const Dataset& target = datasets.at(p.target);
    ModelState model;
    std::string note;
    switch (p.approach) {
      case Approach::target_only: {
        const Dataset tsub = subsample_labels(target, p.budget, p.train.seed);
        model = p.model.build(p.train.seed);
        train_supervised(model, tsub, p.train);
        break;
      }
      case Approach::source_only: {
        model = source_model(p);
        break;
      }
      case Approach::fine_tune: {
        model = source_model(p);
        const Dataset tsub = subsample_labels(target, p.budget, p.train.seed);
        TrainConfig cf = p.train;
        cf.seed = derive_seed(p.train.seed, "ft");
        fine_tune(model, tsub, cf);
        break;
      }
      case Approach::pseudo_label: {
        const ModelState& a = source_model(p);
        const Dataset tsub = subsample_labels(target, p.budget, p.train.seed);
        std::vector<ImageSample> unlabeled, true_labeled;
        for (const int i : tsub.train_indices()) {
          const auto& s = tsub.samples[static_cast<std::size_t>(i)];
          (visible_mask(s) ? true_labeled : unlabeled).push_back(s);
        }
        PseudoLabeledSet set = generate_pseudo_labels(a, unlabeled, p.train.tau);
        set = merge_true_labels(std::move(set), true_labeled);
        model = p.train.init_from_source
                    ? a
                    : p.model.build(derive_seed(p.train.seed, "pseudo"));
        TrainConfig cp = p.train;
        cp.seed = derive_seed(p.train.seed, "pseudo-train");
        train_with_pseudo_labels(model, set, cp);
        break;
      }
      case Approach::combined: {
        const ModelState& a = source_model(p);
        CombinedResult cr = combined_pipeline(p.model, datasets.at(p.source), target,
                                              p.budget, p.train, &a);
        model = std::move(cr.model);
        if (cr.fine_tune_skipped) note = "fine-tune skipped";
        break;
      }
    }
    const EvalOutcome ev = evaluate_model(model, target, Split::test);
    results.push_back({p, ev.aggregate, note});
  }
  return results;
}

std::vector<ExperimentPlan> default_matrix_plans(const std::string& source,
                                                 const std::string& target,
                                                 const ModelSpec& spec,
                                                 const TrainConfig& train) {
  std::vector<ExperimentPlan> plans;
  const auto add = [&](Approach a, double budget, bool with_source) {
    ExperimentPlan p;
    p.source = with_source ? source : "";
    p.target = target;
    p.approach = a;
    p.budget = budget;
    p.model = spec;
    p.train = train;
    plans.push_back(std::move(p));
  };
  for (const double b : {0.05, 0.10, 0.50, 1.0}) add(Approach::target_only, b, false);
  add(Approach::source_only, 0.0, true);
  for (const double b : {0.05, 0.10, 0.50, 1.0}) add(Approach::fine_tune, b, true);
  for (const double b : {0.0, 0.05, 0.10, 0.50}) add(Approach::pseudo_label, b, true);
  for (const double b : {0.0, 0.05, 0.10, 0.50}) add(Approach::combined, b, true);
  return plans;
}

std::string render_report_table(const ResultTable& results, ReportFormat format) {
  if (results.empty()) throw DataError("render_report_table: empty results");
  std::ostringstream os;
  if (format == ReportFormat::csv) {
    os << "source,target,approach,budget,seed,mean_f1,acc,iou,prec,rec\n";
    for (const auto& r : results) {
      os << r.plan.source << ',' << r.plan.target << ','
         << approach_slug(r.plan.approach) << ',' << fmt("%g", r.plan.budget) << ','
         << r.plan.train.seed << ',' << fmt("%.17g", r.metrics.f1) << ','
         << fmt("%.17g", r.metrics.acc) << ',' << fmt("%.17g", r.metrics.iou) << ','
         << fmt("%.17g", r.metrics.prec) << ',' << fmt("%.17g", r.metrics.rec) << '\n';
    }
    return os.str();
  }

  // Budget columns: the canonical study grid plus anything else that occurs.
  std::vector<double> budgets = {0.0, 0.05, 0.10, 0.50, 1.0};
  for (const auto& r : results) {
    if (std::none_of(budgets.begin(), budgets.end(),
                     [&](double b) { return b == r.plan.budget; })) {
      budgets.push_back(r.plan.budget);
    }
  }
  std::sort(budgets.begin(), budgets.end());

  struct RowKey {
    std::string source, target;
    Approach approach;
    bool operator==(const RowKey& o) const {
      return source == o.source && target == o.target && approach == o.approach;
    }
  };
  std::vector<RowKey> rows;
  const auto row_of = [&](const ExperimentPlan& p) {
    const RowKey key{p.source, p.target, p.approach};
    const auto it = std::find(rows.begin(), rows.end(), key);
    if (it != rows.end()) return static_cast<std::size_t>(it - rows.begin());
    rows.push_back(key);
    return rows.size() - 1;
  };
  std::map<std::pair<std::size_t, double>, const ExperimentResult*> cells;
  for (const auto& r : results) cells[{row_of(r.plan), r.plan.budget}] = &r;

  os << "| Source | Target | Approach |";
  for (const double b : budgets) os << ' ' << fmt("%g", b * 100.0) << "% |";
  os << '\n' << "|---|---|---|";
  for (std::size_t i = 0; i < budgets.size(); ++i) os << "---|";
  os << '\n';
  std::vector<std::string> notes;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& key = rows[i];
    os << "| " << (key.source.empty() ? "-" : key.source) << " | " << key.target
       << " | " << approach_display(key.approach) << " |";
    for (const double b : budgets) {
      const auto it = cells.find({i, b});
      if (it == cells.end()) {
        os << " - |";
        continue;
      }
      os << ' ' << fmt("%.2f", it->second->metrics.f1 * 100.0);
      if (!it->second->note.empty()) {
        os << '*';
        if (std::find(notes.begin(), notes.end(), it->second->note) == notes.end()) {
          notes.push_back(it->second->note);
        }
      }
      os << " |";
    }
    os << '\n';
  }
  for (const auto& n : notes) os << "\n\\* " << n << '\n';
  return os.str();
}

void emit_report_table(const ResultTable& results, ReportFormat format,
                       const std::filesystem::path& path) {
  const std::string text = render_report_table(results, format);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open report file for writing: " + path.string());
  out << text;
  if (!out) throw DataError("short write to report file: " + path.string());
}

}  // namespace skinseg
