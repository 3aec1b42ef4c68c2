// Command-line surface for the segmentation toolkit. Subcommands cover the
// whole pipeline: synthetic dataset generation, supervised training,
// prediction, evaluation, the three adaptation strategies, and the full
// source->target x label-budget study. Every run writes a config echo
// (config.json in the output directory) sufficient to reproduce it
// byte-for-byte, and standalone adaptation runs use the same seed
// derivations as the experiment runner, so their results match the matrix
// cell with the same settings bit-for-bit.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "skinseg/experiment.hpp"
#include "skinseg/overlay.hpp"
#include "skinseg/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace skinseg;

namespace {

/// Command-line misuse that CLI11 cannot express (domain counts, cross-flag
/// requirements). Mapped to exit code 2 like any other usage error.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// --- flag containers --------------------------------------------------------

/// Options shared across subcommands; each subcommand owns one instance and
/// registers only the groups that apply to it.
struct SharedOpts {
  std::uint64_t seed = 1;
  std::string out = "skinseg-out";
  std::vector<std::string> domains;  // NAME=PATH entries, insertion order kept

  std::string model = "unet";
  std::string frame;      // HxW; empty keeps the scale default
  int levels = 0;         // 0 keeps the scale default
  int base_channels = 0;
  int patch_size = 0;
  bool paper_scale = false;

  double lr = 1e-3;
  int batch = 4;
  int epochs = 40;
  bool no_augment = false;
  double tau = 0.5;
  double t1 = 0.10;
  double t2 = 0.40;
  double alpha_f = 1.0;
  int phase1_steps = 20;
  int patches_per_image = 512;
  bool patch_balanced = false;
  double stop_at_f1 = -1.0;
  int max_steps = -1;
  bool init_from_source = false;
};

struct GenArgs {
  std::string preset = "diverse-source";
  std::string name;  // domain name override; empty keeps the preset name
  int count = 32;
  std::string size = "64x64";
  double test_fraction = 0.0;
  std::uint64_t split_seed = 0;  // effective only when its option was given
  CLI::Option* split_seed_opt = nullptr;
};

struct PredictArgs {
  std::string params;
  std::string split = "all";
  double threshold = 0.5;
  bool overlays = false;
};

struct EvalArgs {
  std::string params;
  std::string split = "test";
  double threshold = 0.5;
  bool pooled = false;
};

struct AdaptArgs {
  std::string params;  // pre-trained source model; empty trains one internally
  std::string source = "source";
  std::string target = "target";
  double budget = 0.0;
  CLI::Option* source_opt = nullptr;
};

struct ExperimentArgs {
  std::string source = "source";
  std::string target = "target";
  std::vector<std::string> approaches;  // empty = full grid
  std::vector<double> budgets;          // empty = full grid
};

// --- validators and registration --------------------------------------------

const CLI::Validator HwFormat(
    [](std::string& s) -> std::string {
      int h = 0, w = 0, end = -1;
      char sep = 0;
      if (std::sscanf(s.c_str(), "%d%c%d%n", &h, &sep, &w, &end) == 3 &&
          end == static_cast<int>(s.size()) && (sep == 'x' || sep == 'X') && h >= 1 &&
          w >= 1) {
        return {};
      }
      return "expected HxW with positive integers (e.g. 64x64), got '" + s + "'";
    },
    "HxW");

const CLI::Validator NamePathFormat(
    [](std::string& s) -> std::string {
      const auto eq = s.find('=');
      if (eq != std::string::npos && eq > 0 && eq + 1 < s.size()) return {};
      return "expected NAME=PATH, got '" + s + "'";
    },
    "NAME=PATH");

void add_run_flags(CLI::App* cmd, SharedOpts& o) {
  cmd->add_option("--seed", o.seed, "root seed; every random stream derives from it")
      ->capture_default_str();
  cmd->add_option("--out", o.out, "output directory, created if missing")
      ->capture_default_str();
}

void add_domain_flag(CLI::App* cmd, SharedOpts& o) {
  cmd->add_option("--domain", o.domains,
                  "dataset root as NAME=PATH (images/, masks/, optional "
                  "manifest.csv); repeatable")
      ->check(NamePathFormat);
}

void add_model_flags(CLI::App* cmd, SharedOpts& o) {
  cmd->add_option("--model", o.model, "architecture kind")
      ->check(CLI::IsMember({"unet", "patch"}))
      ->capture_default_str();
  cmd->add_option("--frame", o.frame, "network frame as HxW (default 64x64)")
      ->check(HwFormat);
  cmd->add_option("--levels", o.levels, "encoder levels including the bottom (default 3)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--base-channels", o.base_channels,
                  "channels of the finest level, doubling per level (default 8)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--patch-size", o.patch_size, "odd patch side (default 17)")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--paper-scale", o.paper_scale,
                "switch defaults to the full-scale setup: 768x768 frame, 7 levels, "
                "35-pixel patches");
}

void add_train_flags(CLI::App* cmd, SharedOpts& o) {
  cmd->add_option("--lr", o.lr, "learning rate")->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--batch", o.batch, "images per step (patches per step for patch models)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--epochs", o.epochs, "training epochs")->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_flag("--no-augment", o.no_augment, "disable training-time augmentation");
  cmd->add_option("--tau", o.tau, "pseudo-label probability threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--t1", o.t1, "pseudo-loss ramp start, fraction of planned steps")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--t2", o.t2, "pseudo-loss ramp end, fraction of planned steps")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--alpha-f", o.alpha_f, "final pseudo-loss weight")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--phase1-steps", o.phase1_steps,
                  "head-only steps at the start of fine-tuning")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--patches-per-image", o.patches_per_image,
                  "patch draws per image per epoch (patch models)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_flag("--balanced-patches", o.patch_balanced,
                "sample patch classes in equal proportion");
  cmd->add_option("--stop-at-f1", o.stop_at_f1,
                  "stop once train F1 reaches this value (off when <= 0)")
      ->capture_default_str();
  cmd->add_option("--max-steps", o.max_steps, "optimizer-step cap (off when <= 0)")
      ->capture_default_str();
  cmd->add_flag("--init-from-source", o.init_from_source,
                "continue pseudo-label training from the source model instead of a "
                "fresh one");
}

void add_adapt_flags(CLI::App* cmd, AdaptArgs& a, bool budget_required) {
  cmd->add_option("--params", a.params,
                  "pre-trained source model; when given, the architecture is read "
                  "from the file and no source training happens");
  a.source_opt = cmd->add_option("--source", a.source, "name of the source domain")
                     ->capture_default_str();
  cmd->add_option("--target", a.target, "name of the target domain")
      ->capture_default_str();
  auto* b = cmd->add_option("--budget", a.budget,
                            "fraction of target train images whose true masks are "
                            "visible")
                 ->check(CLI::Range(0.0, 1.0))
                 ->capture_default_str();
  if (budget_required) b->required();
}

// --- resolution of flag values ----------------------------------------------

std::pair<int, int> parse_hw(const std::string& s) {
  int h = 0, w = 0;
  char sep = 0;
  if (std::sscanf(s.c_str(), "%d%c%d", &h, &sep, &w) != 3 || h < 1 || w < 1) {
    throw UsageError("expected HxW (e.g. 64x64), got '" + s + "'");
  }
  return {h, w};
}

ModelSpec resolve_model(const SharedOpts& o) {
  ModelSpec spec;
  spec.kind = (o.model == "patch") ? ModelKind::patch : ModelKind::unet;
  if (o.paper_scale) {
    spec.unet.frame_h = spec.unet.frame_w = 768;
    spec.unet.levels = 7;
    spec.patch.size = 35;
  }
  if (!o.frame.empty()) {
    const auto [h, w] = parse_hw(o.frame);
    spec.unet.frame_h = h;
    spec.unet.frame_w = w;
  }
  if (o.levels > 0) spec.unet.levels = o.levels;
  if (o.base_channels > 0) spec.unet.base_channels = o.base_channels;
  if (o.patch_size > 0) spec.patch.size = o.patch_size;
  return spec;
}

ModelSpec spec_of(const ModelState& m) {
  ModelSpec spec;
  spec.kind = m.kind;
  spec.unet = m.unet;
  spec.patch = m.patch;
  return spec;
}

TrainConfig resolve_train(const SharedOpts& o) {
  TrainConfig cfg;
  cfg.lr = o.lr;
  cfg.batch = o.batch;
  cfg.epochs = o.epochs;
  cfg.seed = o.seed;
  cfg.augment_enabled = !o.no_augment;
  cfg.tau = o.tau;
  cfg.t1 = o.t1;
  cfg.t2 = o.t2;
  cfg.alpha_f = o.alpha_f;
  cfg.phase1_steps = o.phase1_steps;
  cfg.patches_per_image = o.patches_per_image;
  cfg.patch_balanced = o.patch_balanced;
  cfg.stop_at_f1 = o.stop_at_f1;
  cfg.max_steps = o.max_steps;
  cfg.init_from_source = o.init_from_source;
  validate(cfg);
  return cfg;
}

std::map<std::string, Dataset> load_domains(const std::vector<std::string>& kv) {
  std::map<std::string, Dataset> out;
  for (const auto& entry : kv) {
    const auto eq = entry.find('=');
    const std::string name = entry.substr(0, eq);
    const std::string path = entry.substr(eq + 1);
    if (out.count(name)) throw UsageError("duplicate --domain name '" + name + "'");
    out.emplace(name, load_dataset(path, std::nullopt, name));
  }
  return out;
}

const Dataset& single_domain(const std::map<std::string, Dataset>& domains) {
  if (domains.size() != 1) {
    throw UsageError("this subcommand expects exactly one --domain");
  }
  return domains.begin()->second;
}

const Dataset& pick_domain(const std::map<std::string, Dataset>& domains,
                           const std::string& name, const char* role) {
  const auto it = domains.find(name);
  if (it == domains.end()) {
    throw UsageError(std::string(role) + " domain '" + name +
                     "' was not provided via --domain");
  }
  return it->second;
}

// --- artifact writers -------------------------------------------------------

ordered_json domains_echo(const std::vector<std::string>& kv) {
  ordered_json j = ordered_json::object();
  for (const auto& entry : kv) {
    const auto eq = entry.find('=');
    j[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  return j;
}

ordered_json model_echo(const ModelSpec& spec) {
  ordered_json j;
  j["kind"] = spec.kind == ModelKind::unet ? "unet" : "patch";
  j["levels"] = spec.unet.levels;
  j["base_channels"] = spec.unet.base_channels;
  j["frame"] = {spec.unet.frame_h, spec.unet.frame_w};
  j["batch_norm"] = spec.unet.batch_norm;
  j["upsample"] =
      spec.unet.upsample == Upsample::transposed ? "transposed" : "nearest_conv";
  j["patch_size"] = spec.patch.size;
  j["patch_conv"] = {spec.patch.conv[0], spec.patch.conv[1], spec.patch.conv[2]};
  j["patch_fc"] = spec.patch.fc;
  return j;
}

ordered_json train_echo(const TrainConfig& c) {
  ordered_json j;
  j["optimizer"] = c.optimizer;
  j["lr"] = c.lr;
  j["batch"] = c.batch;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["augment_enabled"] = c.augment_enabled;
  j["augment"] = {{"delta_h", c.augment.delta_h},
                  {"delta_s", c.augment.delta_s},
                  {"delta_v", c.augment.delta_v},
                  {"max_shift", c.augment.max_shift},
                  {"flip_prob", c.augment.flip_prob},
                  {"jitter_enabled", c.augment.jitter_enabled},
                  {"shift_enabled", c.augment.shift_enabled},
                  {"flip_enabled", c.augment.flip_enabled}};
  j["loss_smoothness"] = c.loss.smoothness;
  j["tau"] = c.tau;
  j["t1"] = c.t1;
  j["t2"] = c.t2;
  j["alpha_f"] = c.alpha_f;
  j["phase1_steps"] = c.phase1_steps;
  j["patches_per_image"] = c.patches_per_image;
  j["patch_balanced"] = c.patch_balanced;
  j["stop_at_f1"] = c.stop_at_f1;
  j["max_steps"] = c.max_steps;
  j["init_from_source"] = c.init_from_source;
  return j;
}

/// Written before any heavy work, so even an aborted run leaves its recipe.
void write_config_echo(const fs::path& out_dir, const ordered_json& j) {
  const fs::path path = out_dir / "config.json";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError("short write to " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("short write to " + path.string());
}

void write_history_csv(const fs::path& path, const TrainHistory& h) {
  std::string text = "epoch,loss,f1\n";
  char row[96];
  for (std::size_t i = 0; i < h.loss.size(); ++i) {
    std::snprintf(row, sizeof(row), "%zu,%.17g,%.17g\n", i, h.loss[i], h.f1[i]);
    text += row;
  }
  write_text(path, text);
}

/// True when the split exists and every one of its samples can be scored.
bool scoreable(const Dataset& ds, Split split) {
  bool any = false;
  for (const auto& s : ds.samples) {
    if (s.split != split) continue;
    if (!s.mask.has_value()) return false;
    any = true;
  }
  return any;
}

/// Scores the model on the target test split and wraps the outcome in the
/// report-table row format the experiment runner uses.
ExperimentResult score_as_row(const ModelState& m, const Dataset& target,
                              std::string source_label, Approach approach,
                              double budget, const ModelSpec& spec,
                              const TrainConfig& cfg, std::string note = "") {
  ExperimentPlan plan;
  plan.source = std::move(source_label);
  plan.target = target.domain;
  plan.approach = approach;
  plan.budget = budget;
  plan.model = spec;
  plan.train = cfg;
  const EvalOutcome ev = evaluate_model(m, target, Split::test);
  return {std::move(plan), ev.aggregate, std::move(note)};
}

/// Writes result.csv and prints the headline number; quietly skips when the
/// target has no fully masked test split.
void report_target_score(const fs::path& out_dir, const ModelState& m,
                         const Dataset& target, const std::string& source_label,
                         Approach approach, double budget, const ModelSpec& spec,
                         const TrainConfig& cfg, const std::string& note = "") {
  if (!scoreable(target, Split::test)) {
    std::printf("no fully masked test split in '%s'; skipping result.csv\n",
                target.domain.c_str());
    return;
  }
  const ResultTable results = {
      score_as_row(m, target, source_label, approach, budget, spec, cfg, note)};
  emit_report_table(results, ReportFormat::csv, out_dir / "result.csv");
  std::printf("target test mean F1 %.4f (acc %.4f, iou %.4f) -> %s\n",
              results[0].metrics.f1, results[0].metrics.acc, results[0].metrics.iou,
              (out_dir / "result.csv").c_str());
}

// --- source-model acquisition -----------------------------------------------

/// Loads the pre-trained source model, or trains one exactly the way the
/// experiment runner does: parameters from derive_seed(root, "source"),
/// training stream from derive_seed(root, "source-train").
ModelState acquire_source_model(const AdaptArgs& a, const ModelSpec& spec,
                                const TrainConfig& cfg,
                                const std::map<std::string, Dataset>& domains) {
  if (!a.params.empty()) {
    std::printf("loaded source model from %s\n", a.params.c_str());
    return load_params(a.params);
  }
  const Dataset& src = pick_domain(domains, a.source, "source");
  std::printf("training source model on '%s' (%zu train images)...\n",
              src.domain.c_str(), src.train_indices().size());
  std::fflush(stdout);
  ModelState m = spec.build(derive_seed(cfg.seed, "source"));
  TrainConfig ca = cfg;
  ca.seed = derive_seed(cfg.seed, "source-train");
  train_supervised(m, src, ca);
  return m;
}

/// Row label for the source column: the domain name normally, the params
/// file stem when a pre-trained model was given without an explicit --source.
std::string source_label(const AdaptArgs& a) {
  if (!a.params.empty() && a.source_opt != nullptr && a.source_opt->count() == 0) {
    return fs::path(a.params).stem().string();
  }
  return a.source;
}

// --- subcommand bodies ------------------------------------------------------

int run_gen(const SharedOpts& o, const GenArgs& g) {
  DomainSpec spec = preset_domain_spec(g.preset);
  if (!g.name.empty()) spec.name = g.name;
  const auto [h, w] = parse_hw(g.size);
  const std::uint64_t split_seed = g.split_seed_opt->count() > 0
                                       ? g.split_seed
                                       : derive_seed(o.seed, "split");

  fs::create_directories(o.out);
  ordered_json echo;
  echo["command"] = "gen-synth";
  echo["preset"] = g.preset;
  echo["name"] = spec.name;
  echo["count"] = g.count;
  echo["size"] = g.size;
  echo["test_fraction"] = g.test_fraction;
  echo["seed"] = o.seed;
  if (g.test_fraction > 0.0) echo["split_seed"] = split_seed;
  echo["out"] = o.out;
  write_config_echo(o.out, echo);

  Dataset ds = make_synthetic_domain(spec, g.count, h, w, o.seed);
  if (g.test_fraction > 0.0) {
    ds = split_dataset(ds, g.test_fraction, split_seed);
  }
  save_dataset(ds, o.out);
  std::printf("wrote %zu samples (%zu test) to %s\n", ds.samples.size(),
              ds.test_indices().size(), o.out.c_str());
  return 0;
}

int run_train(const SharedOpts& o, const CLI::Option* budget_opt, double budget) {
  const auto domains = load_domains(o.domains);
  Dataset ds = single_domain(domains);
  const ModelSpec spec = resolve_model(o);
  const TrainConfig cfg = resolve_train(o);
  const bool subsampled = budget_opt->count() > 0;

  fs::create_directories(o.out);
  ordered_json echo;
  echo["command"] = "train";
  echo["domains"] = domains_echo(o.domains);
  if (subsampled) echo["budget"] = budget;
  echo["model"] = model_echo(spec);
  echo["train"] = train_echo(cfg);
  echo["out"] = o.out;
  write_config_echo(o.out, echo);

  if (subsampled) ds = subsample_labels(ds, budget, cfg.seed);
  std::printf("training %s on '%s' (%zu labeled train images)...\n", o.model.c_str(),
              ds.domain.c_str(), ds.labeled_train_indices().size());
  std::fflush(stdout);

  ModelState m = spec.build(cfg.seed);
  const TrainHistory h = train_supervised(m, ds, cfg);
  save_params(m, fs::path(o.out) / "model.bin");
  write_history_csv(fs::path(o.out) / "history.csv", h);
  std::printf("finished after %d steps: loss %.6f, train F1 %.4f -> %s\n", h.steps,
              h.loss.back(), h.f1.back(), (fs::path(o.out) / "model.bin").c_str());
  report_target_score(o.out, m, ds, "", Approach::target_only,
                      subsampled ? budget : 1.0, spec, cfg);
  return 0;
}

int run_predict(const SharedOpts& o, const PredictArgs& p) {
  const auto domains = load_domains(o.domains);
  const Dataset& ds = single_domain(domains);
  ModelState m = load_params(p.params);

  fs::create_directories(o.out);
  ordered_json echo;
  echo["command"] = "predict";
  echo["params"] = p.params;
  echo["domains"] = domains_echo(o.domains);
  echo["split"] = p.split;
  echo["threshold"] = p.threshold;
  echo["overlays"] = p.overlays;
  echo["seed"] = o.seed;
  echo["out"] = o.out;
  write_config_echo(o.out, echo);

  const fs::path maps_dir = fs::path(o.out) / "maps";
  const fs::path masks_dir = fs::path(o.out) / "pred-masks";
  const fs::path overlays_dir = fs::path(o.out) / "overlays";
  fs::create_directories(maps_dir);
  fs::create_directories(masks_dir);
  if (p.overlays) fs::create_directories(overlays_dir);

  int written = 0;
  for (const auto& s : ds.samples) {
    if (p.split == "train" && s.split != Split::train) continue;
    if (p.split == "test" && s.split != Split::test) continue;
    const Plane prob = predict_full_image(m, s);
    write_pnm(maps_dir / (s.id + ".pgm"), pnm_from_gray(prob * 255.0f));
    const Plane hard =
        (prob >= static_cast<float>(p.threshold)).cast<float>() * 255.0f;
    write_pnm(masks_dir / (s.id + ".pgm"), pnm_from_gray(hard));
    if (p.overlays) {
      emit_overlay(s, {prob}, overlays_dir / (s.id + ".ppm"), p.threshold);
    }
    ++written;
  }
  if (written == 0) throw DataError("no samples in split '" + p.split + "'");
  std::printf("wrote %d probability maps to %s (thresholded masks in %s)\n", written,
              maps_dir.c_str(), masks_dir.c_str());
  return 0;
}

int run_eval(const SharedOpts& o, const EvalArgs& e) {
  const auto domains = load_domains(o.domains);
  const Dataset& ds = single_domain(domains);
  ModelState m = load_params(e.params);
  const Split split = e.split == "train" ? Split::train : Split::test;
  const AggregateMode mode =
      e.pooled ? AggregateMode::pixel_pooled : AggregateMode::per_image_mean;

  fs::create_directories(o.out);
  ordered_json echo;
  echo["command"] = "eval";
  echo["params"] = e.params;
  echo["domains"] = domains_echo(o.domains);
  echo["split"] = e.split;
  echo["threshold"] = e.threshold;
  echo["aggregate"] = e.pooled ? "pixel_pooled" : "per_image_mean";
  echo["seed"] = o.seed;
  echo["out"] = o.out;
  write_config_echo(o.out, echo);

  const EvalOutcome ev = evaluate_model(m, ds, split, mode, e.threshold);
  std::string per_image = "id,f1,acc,iou,prec,rec,tp,fp,fn,tn\n";
  char row[512];
  for (std::size_t i = 0; i < ev.ids.size(); ++i) {
    const MetricReport& r = ev.per_image[i];
    std::snprintf(row, sizeof(row),
                  "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%lld,%lld,%lld,%lld\n",
                  ev.ids[i].c_str(), r.f1, r.acc, r.iou, r.prec, r.rec,
                  static_cast<long long>(r.tp), static_cast<long long>(r.fp),
                  static_cast<long long>(r.fn), static_cast<long long>(r.tn));
    per_image += row;
  }
  write_text(fs::path(o.out) / "per-image.csv", per_image);

  const MetricReport& a = ev.aggregate;
  std::snprintf(row, sizeof(row), "f1,acc,iou,prec,rec,pixels\n%.17g,%.17g,%.17g,%.17g,%.17g,%lld\n",
                a.f1, a.acc, a.iou, a.prec, a.rec,
                static_cast<long long>(a.pixel_count));
  write_text(fs::path(o.out) / "summary.csv", row);
  std::printf("%s split of '%s': mean F1 %.4f, acc %.4f, iou %.4f over %zu images\n",
              e.split.c_str(), ds.domain.c_str(), a.f1, a.acc, a.iou, ev.ids.size());
  return 0;
}

int run_pseudo(const SharedOpts& o, const AdaptArgs& a) {
  const auto domains = load_domains(o.domains);
  const Dataset& target = pick_domain(domains, a.target, "target");
  const TrainConfig cfg = resolve_train(o);
  ModelState source = acquire_source_model(a, resolve_model(o), cfg, domains);
  const ModelSpec spec = a.params.empty() ? resolve_model(o) : spec_of(source);

  fs::create_directories(o.out);
  ordered_json echo;
  echo["command"] = "pseudo-label";
  if (!a.params.empty()) echo["params"] = a.params;
  echo["domains"] = domains_echo(o.domains);
  echo["source"] = a.source;
  echo["target"] = a.target;
  echo["budget"] = a.budget;
  echo["model"] = model_echo(spec);
  echo["train"] = train_echo(cfg);
  echo["out"] = o.out;
  write_config_echo(o.out, echo);

  const Dataset tsub = subsample_labels(target, a.budget, cfg.seed);
  std::vector<ImageSample> unlabeled, true_labeled;
  for (const int i : tsub.train_indices()) {
    const auto& s = tsub.samples[static_cast<std::size_t>(i)];
    (visible_mask(s) ? true_labeled : unlabeled).push_back(s);
  }
  std::printf("pseudo-labeling %zu target images (tau %g), %zu with true masks...\n",
              unlabeled.size(), cfg.tau, true_labeled.size());
  std::fflush(stdout);

  PseudoLabeledSet set = generate_pseudo_labels(source, unlabeled, cfg.tau);
  const fs::path pseudo_dir = fs::path(o.out) / "pseudo-masks";
  fs::create_directories(pseudo_dir);
  for (const auto& ps : set.samples) {
    write_pnm(pseudo_dir / (ps.sample.id + ".pgm"),
              pnm_from_gray(*ps.sample.mask * 255.0f));
  }
  set = merge_true_labels(std::move(set), true_labeled);

  ModelState m =
      cfg.init_from_source ? source : spec.build(derive_seed(cfg.seed, "pseudo"));
  TrainConfig cp = cfg;
  cp.seed = derive_seed(cfg.seed, "pseudo-train");
  const TrainHistory h = train_with_pseudo_labels(m, set, cp);
  save_params(m, fs::path(o.out) / "model.bin");
  write_history_csv(fs::path(o.out) / "history.csv", h);
  std::printf("finished after %d steps: loss %.6f, train F1 %.4f -> %s\n", h.steps,
              h.loss.back(), h.f1.back(), (fs::path(o.out) / "model.bin").c_str());
  report_target_score(o.out, m, target, source_label(a), Approach::pseudo_label,
                      a.budget, spec, cfg);
  return 0;
}

int run_fine_tune(const SharedOpts& o, const AdaptArgs& a) {
  if (!(a.budget > 0.0)) {
    throw UsageError("fine-tune needs --budget > 0 (it trains on true target masks)");
  }
  const auto domains = load_domains(o.domains);
  const Dataset& target = pick_domain(domains, a.target, "target");
  const TrainConfig cfg = resolve_train(o);
  ModelState m = acquire_source_model(a, resolve_model(o), cfg, domains);
  const ModelSpec spec = a.params.empty() ? resolve_model(o) : spec_of(m);

  fs::create_directories(o.out);
  ordered_json echo;
  echo["command"] = "fine-tune";
  if (!a.params.empty()) echo["params"] = a.params;
  echo["domains"] = domains_echo(o.domains);
  echo["source"] = a.source;
  echo["target"] = a.target;
  echo["budget"] = a.budget;
  echo["model"] = model_echo(spec);
  echo["train"] = train_echo(cfg);
  echo["out"] = o.out;
  write_config_echo(o.out, echo);

  const Dataset tsub = subsample_labels(target, a.budget, cfg.seed);
  std::printf("fine-tuning on '%s' (%zu labeled of %zu train images)...\n",
              target.domain.c_str(), tsub.labeled_train_indices().size(),
              tsub.train_indices().size());
  std::fflush(stdout);
  TrainConfig cf = cfg;
  cf.seed = derive_seed(cfg.seed, "ft");
  const TrainHistory h = fine_tune(m, tsub, cf);
  save_params(m, fs::path(o.out) / "model.bin");
  write_history_csv(fs::path(o.out) / "history.csv", h);
  std::printf("finished after %d steps: loss %.6f, train F1 %.4f -> %s\n", h.steps,
              h.loss.back(), h.f1.back(), (fs::path(o.out) / "model.bin").c_str());
  report_target_score(o.out, m, target, source_label(a), Approach::fine_tune, a.budget,
                      spec, cfg);
  return 0;
}

int run_combined(const SharedOpts& o, const AdaptArgs& a) {
  const auto domains = load_domains(o.domains);
  const Dataset& src = pick_domain(domains, a.source, "source");
  const Dataset& target = pick_domain(domains, a.target, "target");
  const TrainConfig cfg = resolve_train(o);
  std::optional<ModelState> pre;
  if (!a.params.empty()) {
    std::printf("loaded source model from %s\n", a.params.c_str());
    pre = load_params(a.params);
  }
  const ModelSpec spec = pre ? spec_of(*pre) : resolve_model(o);

  fs::create_directories(o.out);
  ordered_json echo;
  echo["command"] = "combined";
  if (!a.params.empty()) echo["params"] = a.params;
  echo["domains"] = domains_echo(o.domains);
  echo["source"] = a.source;
  echo["target"] = a.target;
  echo["budget"] = a.budget;
  echo["model"] = model_echo(spec);
  echo["train"] = train_echo(cfg);
  echo["out"] = o.out;
  write_config_echo(o.out, echo);

  std::printf("running the combined pipeline '%s' -> '%s' at budget %g...\n",
              src.domain.c_str(), target.domain.c_str(), a.budget);
  std::fflush(stdout);
  const CombinedResult cr =
      combined_pipeline(spec, src, target, a.budget, cfg, pre ? &*pre : nullptr);
  save_params(cr.model, fs::path(o.out) / "model.bin");
  const std::string note = cr.fine_tune_skipped ? "fine-tune skipped" : "";
  if (cr.fine_tune_skipped) std::printf("budget 0: the fine-tuning phase was skipped\n");
  std::printf("wrote final model -> %s\n", (fs::path(o.out) / "model.bin").c_str());
  report_target_score(o.out, cr.model, target, a.source, Approach::combined, a.budget,
                      spec, cfg, note);
  return 0;
}

int run_experiment(const SharedOpts& o, const ExperimentArgs& e) {
  const auto domains = load_domains(o.domains);
  pick_domain(domains, e.source, "source");
  pick_domain(domains, e.target, "target");
  const ModelSpec spec = resolve_model(o);
  const TrainConfig cfg = resolve_train(o);

  std::vector<ExperimentPlan> plans =
      default_matrix_plans(e.source, e.target, spec, cfg);
  if (!e.approaches.empty()) {
    std::erase_if(plans, [&](const ExperimentPlan& p) {
      return std::find(e.approaches.begin(), e.approaches.end(),
                       approach_slug(p.approach)) == e.approaches.end();
    });
  }
  if (!e.budgets.empty()) {
    std::erase_if(plans, [&](const ExperimentPlan& p) {
      return std::find(e.budgets.begin(), e.budgets.end(), p.budget) ==
             e.budgets.end();
    });
  }
  if (plans.empty()) throw UsageError("no plan cells match the requested filters");

  fs::create_directories(o.out);
  ordered_json echo;
  echo["command"] = "experiment";
  echo["domains"] = domains_echo(o.domains);
  echo["source"] = e.source;
  echo["target"] = e.target;
  echo["model"] = model_echo(spec);
  echo["train"] = train_echo(cfg);
  echo["out"] = o.out;
  ordered_json cells = ordered_json::array();
  for (const auto& p : plans) {
    cells.push_back({{"approach", approach_slug(p.approach)}, {"budget", p.budget}});
  }
  echo["plans"] = cells;
  write_config_echo(o.out, echo);

  std::printf("running %zu plan cells '%s' -> '%s'...\n", plans.size(),
              e.source.c_str(), e.target.c_str());
  std::fflush(stdout);
  const ResultTable results = run_experiment_matrix(plans, domains);
  emit_report_table(results, ReportFormat::csv, fs::path(o.out) / "results.csv");
  emit_report_table(results, ReportFormat::markdown, fs::path(o.out) / "results.md");
  std::printf("\n%s\nwrote %s and %s\n",
              render_report_table(results, ReportFormat::markdown).c_str(),
              (fs::path(o.out) / "results.csv").c_str(),
              (fs::path(o.out) / "results.md").c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Binary segmentation toolkit: whole-image and sliding-patch detectors, "
      "soft-Dice training, and cross-domain adaptation by fine-tuning, "
      "pseudo-labeling, or both combined."};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.");

  SharedOpts o_gen, o_train, o_pred, o_eval, o_pl, o_ft, o_cb, o_ex;
  GenArgs gen;
  double train_budget = 1.0;
  PredictArgs pred;
  EvalArgs eval;
  AdaptArgs pl, ft, cb;
  ExperimentArgs ex;

  auto* c_gen = app.add_subcommand(
      "gen-synth", "Generate a synthetic labeled dataset from a built-in preset");
  c_gen->add_option("--preset", gen.preset, "domain preset")
      ->check(CLI::IsMember({"diverse-source", "specific-target"}))
      ->capture_default_str();
  c_gen->add_option("--name", gen.name, "domain name override (default: the preset)");
  c_gen->add_option("--count", gen.count, "number of images")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_gen->add_option("--size", gen.size, "image size as HxW")
      ->check(HwFormat)
      ->capture_default_str();
  c_gen->add_option("--test-fraction", gen.test_fraction,
                    "fraction of images tagged as the test split")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  gen.split_seed_opt =
      c_gen->add_option("--split-seed", gen.split_seed,
                        "seed for the train/test split (default: derived from --seed)");
  add_run_flags(c_gen, o_gen);

  auto* c_train = app.add_subcommand("train", "Train a model from scratch on one domain");
  add_domain_flag(c_train, o_train);
  add_model_flags(c_train, o_train);
  add_train_flags(c_train, o_train);
  auto* train_budget_opt =
      c_train->add_option("--budget", train_budget,
                          "subsample the labeled train fraction before training")
          ->check(CLI::Range(0.0, 1.0));
  add_run_flags(c_train, o_train);

  auto* c_pred = app.add_subcommand(
      "predict", "Write probability maps (and optional overlays) for a dataset");
  c_pred->add_option("--params", pred.params, "trained model file")->required();
  add_domain_flag(c_pred, o_pred);
  c_pred->add_option("--split", pred.split, "which samples to predict")
      ->check(CLI::IsMember({"train", "test", "all"}))
      ->capture_default_str();
  c_pred->add_option("--threshold", pred.threshold, "binarization threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  c_pred->add_flag("--overlays", pred.overlays,
                   "also write image/mask/prediction comparison strips");
  add_run_flags(c_pred, o_pred);

  auto* c_eval =
      app.add_subcommand("eval", "Score a trained model against ground-truth masks");
  c_eval->add_option("--params", eval.params, "trained model file")->required();
  add_domain_flag(c_eval, o_eval);
  c_eval->add_option("--split", eval.split, "split to score")
      ->check(CLI::IsMember({"train", "test"}))
      ->capture_default_str();
  c_eval->add_option("--threshold", eval.threshold, "binarization threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  c_eval->add_flag("--pooled", eval.pooled,
                   "pool pixels across images instead of averaging per-image scores");
  add_run_flags(c_eval, o_eval);

  auto* c_pl = app.add_subcommand(
      "pseudo-label",
      "Train a target model on pseudo-labels generated by a source model");
  add_domain_flag(c_pl, o_pl);
  add_adapt_flags(c_pl, pl, /*budget_required=*/false);
  add_model_flags(c_pl, o_pl);
  add_train_flags(c_pl, o_pl);
  add_run_flags(c_pl, o_pl);

  auto* c_ft = app.add_subcommand(
      "fine-tune", "Adapt a source model to a labeled target subset (head first, "
                   "then all layers)");
  add_domain_flag(c_ft, o_ft);
  add_adapt_flags(c_ft, ft, /*budget_required=*/true);
  add_model_flags(c_ft, o_ft);
  add_train_flags(c_ft, o_ft);
  add_run_flags(c_ft, o_ft);

  auto* c_cb = app.add_subcommand(
      "combined", "Pseudo-labels, optional fine-tuning, then one in-domain "
                  "pseudo-label round");
  add_domain_flag(c_cb, o_cb);
  add_adapt_flags(c_cb, cb, /*budget_required=*/false);
  add_model_flags(c_cb, o_cb);
  add_train_flags(c_cb, o_cb);
  add_run_flags(c_cb, o_cb);

  auto* c_ex = app.add_subcommand(
      "experiment", "Run the source->target x label-budget study grid");
  add_domain_flag(c_ex, o_ex);
  c_ex->add_option("--source", ex.source, "name of the source domain")
      ->capture_default_str();
  c_ex->add_option("--target", ex.target, "name of the target domain")
      ->capture_default_str();
  c_ex->add_option("--approach,--approaches", ex.approaches,
                   "keep only these approaches (default: all)")
      ->delimiter(',')
      ->check(CLI::IsMember({"target_only", "source_only", "fine_tune",
                             "pseudo_label", "combined"}));
  c_ex->add_option("--budget,--budgets", ex.budgets,
                   "keep only these budgets (default: the full grid)")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));
  add_model_flags(c_ex, o_ex);
  add_train_flags(c_ex, o_ex);
  add_run_flags(c_ex, o_ex);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_gen) return run_gen(o_gen, gen);
    if (*c_train) return run_train(o_train, train_budget_opt, train_budget);
    if (*c_pred) return run_predict(o_pred, pred);
    if (*c_eval) return run_eval(o_eval, eval);
    if (*c_pl) return run_pseudo(o_pl, pl);
    if (*c_ft) return run_fine_tune(o_ft, ft);
    if (*c_cb) return run_combined(o_cb, cb);
    if (*c_ex) return run_experiment(o_ex, ex);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
