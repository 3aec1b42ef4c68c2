// Acceptance gate: nine scripted end-to-end checks, printed one line each as
//
//   criterion N: PASS (12.3 s) [key numbers]
//
// and an exit status of 0 iff every executed check passed.  Tolerances,
// budgets and seeds are pinned below; changing any of them changes the gate.
//
//   1  metric reports match a brute-force confusion-count oracle exactly,
//      and F1 == 2*IoU/(1+IoU) to 1e-12 on random masks
//   2  dice-loss gradients and end-to-end network parameter gradients match
//      central finite differences
//   3  the default 64x64 network overfits four images to train F1 >= 0.99
//      within 500 optimizer steps
//   4  a sliding-window probability map has an exactly-zero border and
//      interior values equal to classifying each patch on its own
//   5  at budget 0, cross-domain pseudo-labeling beats training on the
//      source alone by >= 2 F1 points on the target test split, and the
//      combined pipeline stays within 1 point of (or above) it
//   6  at budget 0.05, fine-tuning the source model matches or beats
//      training on the target labels alone
//   7  re-running criteria 3, 5 and 6 reproduces their result CSVs byte
//      for byte
//   8  a trained model survives a save/load round trip bit-exactly and
//      predicts identically afterwards
//   9  pseudo-label training fed only true labels reproduces supervised
//      training bit-exactly
//
// Usage: skinseg-acceptance [--criterion N ...] [--out DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "skinseg/experiment.hpp"
#include "skinseg/loss.hpp"
#include "skinseg/metrics.hpp"
#include "skinseg/model.hpp"
#include "skinseg/net.hpp"
#include "skinseg/patches.hpp"
#include "skinseg/rng.hpp"
#include "skinseg/synth.hpp"
#include "skinseg/train.hpp"

namespace fs = std::filesystem;
using namespace skinseg;

namespace {

// ---------------------------------------------------------------------------
// Pinned tolerances, budgets and seeds.

constexpr double kIdentityTol = 1e-12;  // F1/IoU identity (criterion 1)
constexpr double kDiceFdTol = 1e-4;     // loss-gradient rel. err (criterion 2)
constexpr double kNetFdTol = 1e-3;      // parameter-gradient rel. err (criterion 2)
constexpr double kOverfitF1 = 0.99;     // criterion 3
constexpr int kOverfitStepCap = 500;    // criterion 3
constexpr double kPseudoGain = 0.02;    // criterion 5: >= 2 F1 points
constexpr double kCombinedSlack = 0.01; // criterion 5: within 1 F1 point
constexpr double kFineTuneBudget = 0.05;  // criterion 6

constexpr double kBudget1 = 10.0;    // seconds
constexpr double kBudget2 = 120.0;
constexpr double kBudget3 = 300.0;
constexpr double kBudget5 = 900.0;
constexpr double kBudget6 = 900.0;

constexpr std::uint64_t kIdentitySeed = 301;   // criterion 1 random masks
constexpr std::uint64_t kDiceFdSeed = 401;     // criterion 2 loss inputs
constexpr std::uint64_t kOverfitSeed = 501;    // criterion 3 data + training
constexpr std::uint64_t kWindowSeed = 601;     // criterion 4 model + image
constexpr std::uint64_t kWindowPickSeed = 602; // criterion 4 pixel sample
constexpr std::uint64_t kSourceSeed = 7001;    // criterion 5/6 source images
constexpr std::uint64_t kTargetSeed = 7202;    // criterion 5/6 target images
constexpr std::uint64_t kSplitSeed = 7003;     // criterion 5/6 target split
constexpr std::uint64_t kStudySeed = 21;       // criterion 5/6 training root
constexpr std::uint64_t kPersistSeed = 801;    // criterion 8
constexpr std::uint64_t kTwinSeed = 901;       // criterion 9

// ---------------------------------------------------------------------------
// Small helpers.

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string note;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return std::string(buf);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// |a - b| <= tol * max(1, |a|, |b|): relative for large values, absolute
// near zero.
bool rel_close(double a, double b, double tol) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= tol * scale;
}

bool tensors_equal(const std::vector<ModelState::NamedTensor>& a,
                   const std::vector<ModelState::NamedTensor>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].rows != b[i].rows || a[i].cols != b[i].cols ||
        a[i].data != b[i].data) {
      return false;
    }
  }
  return true;
}

bool planes_equal(const Plane& a, const Plane& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

// ---------------------------------------------------------------------------
// Criterion 1: metric oracle equivalence and the F1/IoU identity.

// Independent re-derivation of a report from raw bit vectors, following the
// documented degenerate-denominator convention.
MetricReport oracle_report(const VecF& q, const VecF& g) {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const bool qi = q[i] != 0.0f;
    const bool gi = g[i] != 0.0f;
    tp += (qi && gi);
    fp += (qi && !gi);
    fn += (!qi && gi);
    tn += (!qi && !gi);
  }
  MetricReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.tn = tn;
  r.pixel_count = tp + fp + fn + tn;
  r.acc = r.pixel_count > 0
              ? static_cast<double>(tp + tn) / static_cast<double>(r.pixel_count)
              : 1.0;
  if (tp + fp == 0 && tp + fn == 0) {
    r.prec = r.rec = r.f1 = r.iou = 1.0;
  } else {
    r.prec = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.rec = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    r.iou = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    r.f1 = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
  }
  return r;
}

bool reports_identical(const MetricReport& a, const MetricReport& b) {
  return a.tp == b.tp && a.fp == b.fp && a.fn == b.fn && a.tn == b.tn &&
         a.pixel_count == b.pixel_count && a.acc == b.acc && a.iou == b.iou &&
         a.prec == b.prec && a.rec == b.rec && a.f1 == b.f1;
}

Outcome criterion1() {
  // Every binary prediction/truth pair of length 8.
  VecF q(8), g(8);
  for (int a = 0; a < 256; ++a) {
    for (int b = 0; b < 256; ++b) {
      for (int i = 0; i < 8; ++i) {
        q[i] = static_cast<float>((a >> i) & 1);
        g[i] = static_cast<float>((b >> i) & 1);
      }
      const MetricReport got = compute_metrics(q, g);
      const MetricReport want = oracle_report(q, g);
      if (!reports_identical(got, want)) {
        return fail(fmt("report mismatch at pair (%d, %d)", a, b));
      }
    }
  }

  // F1 == 2*IoU/(1+IoU) on random masks of length 64, including empty and
  // full ones (the bit probability itself is drawn per pair).
  RngStream rng(kIdentitySeed);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double pq = rng.uniform();
    const double pg = rng.uniform();
    VecF qq(64), gg(64);
    for (int i = 0; i < 64; ++i) {
      qq[i] = rng.bernoulli(pq) ? 1.0f : 0.0f;
      gg[i] = rng.bernoulli(pg) ? 1.0f : 0.0f;
    }
    const MetricReport r = compute_metrics(qq, gg);
    const double err = std::abs(r.f1 - 2.0 * r.iou / (1.0 + r.iou));
    worst = std::max(worst, err);
    if (err > kIdentityTol) {
      return fail(fmt("identity violated on pair %d: err %.3g", k, err));
    }
  }
  return {true, fmt("[65536 exact reports, identity err <= %.2g]", worst)};
}

// ---------------------------------------------------------------------------
// Criterion 2: gradients against central finite differences.

Outcome criterion2() {
  // Part one: the analytic dice-loss gradient on 100 random length-64 inputs.
  RngStream rng(kDiceFdSeed);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    VecD p(64), g(64);
    for (int i = 0; i < 64; ++i) {
      p[i] = rng.uniform();
      g[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    }
    const VecD an = dice_loss_grad(p, g);
    const double h = 1e-6;
    for (int i = 0; i < 64; ++i) {
      VecD pp = p, pm = p;
      pp[i] += h;
      pm[i] -= h;
      const double fd = (dice_loss(pp, g) - dice_loss(pm, g)) / (2 * h);
      const double scale = std::max({1.0, std::abs(an[i]), std::abs(fd)});
      worst = std::max(worst, std::abs(an[i] - fd) / scale);
      if (!rel_close(an[i], fd, kDiceFdTol)) {
        return fail(fmt("dice grad input %d coord %d: analytic %.8g fd %.8g", k, i,
                        an[i], fd));
      }
    }
  }

  // Part two: end-to-end parameter gradients of a 16x16 network, every slot
  // of every trainable tensor.  The loss is the mean per-image dice of a
  // fixed two-image batch.  A finite-difference step can cross a max-pool
  // argmax or ReLU kink where the quotient is meaningless, so each slot may
  // retry on a ladder of step sizes; a genuinely wrong gradient fails all of
  // them.
  UNetConfig cfg;
  cfg.levels = 3;
  cfg.base_channels = 2;
  cfg.frame_h = 16;
  cfg.frame_w = 16;
  nn::UNetNet<double> net(cfg);

  RngStream init(kDiceFdSeed + 1);
  for (auto& e : net.params.entries) {
    if (e.group == "stats") continue;
    for (Eigen::Index i = 0; i < e.value.size(); ++i) {
      e.value.data()[i] = init.uniform() - 0.5;
    }
  }
  const int n = 2;
  const Eigen::Index hw = 16 * 16;
  MatD x(n * hw, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = init.uniform();
  VecD mask(n * hw);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask[i] = init.bernoulli(0.5) ? 1.0 : 0.0;
  }

  const auto loss = [&] {
    const MatD probs = net.forward(x, n, true);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      total += dice_loss(probs.col(0).segment(i * hw, hw).eval(),
                         mask.segment(i * hw, hw).eval());
    }
    return total / n;
  };

  net.params.zero_grad();
  {
    const MatD probs = net.forward(x, n, true);
    MatD dprob(n * hw, 1);
    for (int i = 0; i < n; ++i) {
      dprob.col(0).segment(i * hw, hw) =
          dice_loss_grad(probs.col(0).segment(i * hw, hw).eval(),
                         mask.segment(i * hw, hw).eval()) /
          n;
    }
    net.backward(dprob);
  }

  const double ladder[] = {1e-4, 1e-3, 1e-5};
  int slots = 0;
  for (auto& e : net.params.entries) {
    if (e.group == "stats") continue;
    for (Eigen::Index i = 0; i < e.value.size(); ++i, ++slots) {
      double* slot = &e.value.data()[i];
      const double saved = *slot;
      const double an = e.grad.data()[i];
      bool ok = false;
      double fd_last = 0.0;
      for (const double h : ladder) {
        *slot = saved + h;
        const double up = loss();
        *slot = saved - h;
        const double dn = loss();
        *slot = saved;
        fd_last = (up - dn) / (2 * h);
        if (rel_close(an, fd_last, kNetFdTol)) {
          ok = true;
          break;
        }
      }
      if (!ok) {
        return fail(fmt("network grad %s[%lld]: analytic %.8g fd %.8g", e.name.c_str(),
                        static_cast<long long>(i), an, fd_last));
      }
    }
  }
  return {true, fmt("[100 loss inputs, %d network slots]", slots)};
}

// ---------------------------------------------------------------------------
// Criterion 3: overfit four synthetic images (CSV kept for criterion 7).

std::string overfit_csv(TrainHistory* hist_out) {
  const Dataset ds = make_synthetic_domain(DomainSpec{}, 4, 64, 64, kOverfitSeed);

  ModelSpec spec;
  spec.kind = ModelKind::unet;
  spec.unet.levels = 3;
  spec.unet.base_channels = 8;
  spec.unet.frame_h = 64;
  spec.unet.frame_w = 64;

  TrainConfig cfg;
  cfg.lr = 3e-3;
  cfg.batch = 4;
  cfg.epochs = kOverfitStepCap;  // one step per epoch with four images
  cfg.max_steps = kOverfitStepCap;
  cfg.stop_at_f1 = kOverfitF1;
  cfg.augment_enabled = false;
  cfg.seed = kOverfitSeed;

  ModelState m = spec.build(kOverfitSeed);
  const TrainHistory h = train_supervised(m, ds, cfg);
  if (hist_out != nullptr) *hist_out = h;

  std::string csv = "epoch,loss,f1\n";
  for (std::size_t e = 0; e < h.loss.size(); ++e) {
    csv += fmt("%zu,%.17g,%.17g\n", e, h.loss[e], h.f1[e]);
  }
  return csv;
}

// ---------------------------------------------------------------------------
// Criteria 5/6: the synthetic domain-adaptation study.

Dataset study_source() {
  return make_synthetic_domain(diverse_source_spec(), 32, 64, 64, kSourceSeed);
}

Dataset study_target() {
  const Dataset all = make_synthetic_domain(specific_target_spec(), 64, 64, 64, kTargetSeed);
  return split_dataset(all, 0.25, kSplitSeed);  // 48 train / 16 test
}

ModelSpec study_spec() {
  ModelSpec spec;
  spec.kind = ModelKind::unet;
  spec.unet.levels = 3;
  spec.unet.base_channels = 8;
  spec.unet.frame_h = 64;
  spec.unet.frame_w = 64;
  return spec;
}

TrainConfig study_cfg() {
  TrainConfig cfg;
  cfg.lr = 2e-3;
  cfg.batch = 4;
  cfg.epochs = 50;
  cfg.seed = kStudySeed;
  // The source model should see the source appearance as-is: photometric
  // augmentation would widen its effective color coverage and blur the very
  // domain gap the study measures.
  cfg.augment_enabled = false;
  return cfg;
}

ResultTable study_matrix(const std::vector<std::pair<Approach, double>>& cells) {
  const ModelSpec spec = study_spec();
  const TrainConfig cfg = study_cfg();
  std::vector<ExperimentPlan> plans;
  for (const auto& [approach, budget] : cells) {
    ExperimentPlan p;
    p.source = approach == Approach::target_only ? "" : "diverse-source";
    p.target = "specific-target";
    p.approach = approach;
    p.budget = budget;
    p.model = spec;
    p.train = cfg;
    plans.push_back(p);
  }
  std::map<std::string, Dataset> datasets;
  datasets["diverse-source"] = study_source();
  datasets["specific-target"] = study_target();
  return run_experiment_matrix(plans, datasets);
}

ResultTable adaptation_results() {
  return study_matrix({{Approach::source_only, 0.0},
                       {Approach::pseudo_label, 0.0},
                       {Approach::combined, 0.0}});
}

ResultTable finetune_results() {
  return study_matrix({{Approach::target_only, kFineTuneBudget},
                       {Approach::fine_tune, kFineTuneBudget}});
}

// ---------------------------------------------------------------------------
// Criterion runners.

struct Gate {
  fs::path out_dir;
  std::map<int, std::string> csv;  // first-run CSVs of criteria 3/5/6

  const std::string& csv_of(int k) {
    auto it = csv.find(k);
    if (it != csv.end()) return it->second;
    std::string text;
    switch (k) {
      case 3: text = overfit_csv(nullptr); break;
      case 5: text = render_report_table(adaptation_results(), ReportFormat::csv); break;
      case 6: text = render_report_table(finetune_results(), ReportFormat::csv); break;
      default: throw DataError("no CSV for this criterion");
    }
    return csv.emplace(k, std::move(text)).first->second;
  }

  Outcome criterion3() {
    TrainHistory h;
    const std::string text = overfit_csv(&h);
    csv[3] = text;
    write_text(out_dir / "criterion3.csv", text);
    if (h.f1.empty() || h.f1.back() < kOverfitF1) {
      const double best = h.f1.empty() ? 0.0 : *std::max_element(h.f1.begin(), h.f1.end());
      return fail(fmt("train F1 reached %.4f after %d steps (need >= %.2f within %d)",
                      best, h.steps, kOverfitF1, kOverfitStepCap));
    }
    if (h.steps > kOverfitStepCap) {
      return fail(fmt("took %d steps (cap %d)", h.steps, kOverfitStepCap));
    }
    return {true, fmt("[F1 %.4f after %d steps]", h.f1.back(), h.steps)};
  }

  Outcome criterion4() {
    PatchCNNConfig cfg;
    cfg.size = 35;
    cfg.conv = {8, 12, 16};  // narrow but structurally identical widths
    cfg.fc = 16;
    ModelState m = build_patch_cnn(cfg, kWindowSeed);

    const Dataset ds = make_synthetic_domain(DomainSpec{}, 1, 100, 100, kWindowSeed);
    const ImageSample& sample = ds.samples[0];
    const Plane map = predict_full_image(m, sample);
    if (map.rows() != 100 || map.cols() != 100) {
      return fail("probability map is not 100x100");
    }

    const int r = 17;  // floor(35 / 2)
    for (int y = 0; y < 100; ++y) {
      for (int x = 0; x < 100; ++x) {
        const bool border = y < r || y >= 100 - r || x < r || x >= 100 - r;
        if (border && map(y, x) != 0.0f) {
          return fail(fmt("border pixel (%d, %d) = %.9g, want exactly 0", y, x,
                          static_cast<double>(map(y, x))));
        }
      }
    }

    RngStream pick(kWindowPickSeed);
    for (int k = 0; k < 500; ++k) {
      const int y = r + static_cast<int>(pick.uniform_int(100 - 2 * r));
      const int x = r + static_cast<int>(pick.uniform_int(100 - 2 * r));
      const Image patch = extract_patch(sample.pixels, y, x, cfg.size);
      const VecF direct = patch_cnn_forward(m, {patch});
      if (map(y, x) != direct[0]) {
        return fail(fmt("pixel (%d, %d): map %.9g direct %.9g", y, x,
                        static_cast<double>(map(y, x)), static_cast<double>(direct[0])));
      }
    }
    return {true, "[border exact, 500 interior pixels bit-equal]"};
  }

  Outcome criterion5() {
    const ResultTable results = adaptation_results();
    const std::string text = render_report_table(results, ReportFormat::csv);
    csv[5] = text;
    write_text(out_dir / "criterion5.csv", text);

    const double src = results[0].metrics.f1;
    const double pseudo = results[1].metrics.f1;
    const double combined = results[2].metrics.f1;
    const std::string numbers =
        fmt("[source-only %.4f, pseudo %.4f, combined %.4f]", src, pseudo, combined);
    if (results[2].note != "fine-tune skipped") {
      return fail("combined run did not record the skipped fine-tune " + numbers);
    }
    if (pseudo < src + kPseudoGain) {
      return fail(fmt("pseudo-label gain %.4f < %.2f ", pseudo - src, kPseudoGain) +
                  numbers);
    }
    if (combined < pseudo - kCombinedSlack) {
      return fail(fmt("combined trails pseudo-label by %.4f > %.2f ", pseudo - combined,
                      kCombinedSlack) +
                  numbers);
    }
    return {true, numbers};
  }

  Outcome criterion6() {
    const ResultTable results = finetune_results();
    const std::string text = render_report_table(results, ReportFormat::csv);
    csv[6] = text;
    write_text(out_dir / "criterion6.csv", text);

    const double target_only = results[0].metrics.f1;
    const double fine_tuned = results[1].metrics.f1;
    const std::string numbers =
        fmt("[target-only %.4f, fine-tune %.4f]", target_only, fine_tuned);
    if (fine_tuned < target_only) {
      return fail("fine-tuning trails target-only " + numbers);
    }
    return {true, numbers};
  }

  Outcome criterion7() {
    for (const int k : {3, 5, 6}) {
      const std::string& first = csv_of(k);
      std::string second;
      switch (k) {
        case 3: second = overfit_csv(nullptr); break;
        case 5: second = render_report_table(adaptation_results(), ReportFormat::csv); break;
        default: second = render_report_table(finetune_results(), ReportFormat::csv); break;
      }
      if (first != second) {
        return fail(fmt("criterion %d rerun produced a different CSV", k));
      }
    }
    return {true, "[criteria 3, 5, 6 byte-identical on rerun]"};
  }

  Outcome criterion8() {
    const Dataset ds = make_synthetic_domain(DomainSpec{}, 4, 16, 16, kPersistSeed);
    ModelSpec spec;
    spec.kind = ModelKind::unet;
    spec.unet.levels = 2;
    spec.unet.base_channels = 2;
    spec.unet.frame_h = 16;
    spec.unet.frame_w = 16;
    TrainConfig cfg;
    cfg.lr = 2e-3;
    cfg.batch = 2;
    cfg.epochs = 5;
    cfg.seed = kPersistSeed;

    ModelState trained = spec.build(kPersistSeed);
    train_supervised(trained, ds, cfg);

    const fs::path p1 = out_dir / "persist-a.bin";
    const fs::path p2 = out_dir / "persist-b.bin";
    save_params(trained, p1);
    const ModelState loaded = load_params(p1);
    if (loaded.kind != trained.kind || loaded.trainable != trained.trainable ||
        !tensors_equal(loaded.tensors, trained.tensors)) {
      return fail("loaded state differs from the saved one");
    }
    save_params(loaded, p2);
    if (file_bytes(p1) != file_bytes(p2)) {
      return fail("re-saving the loaded state changed the file bytes");
    }

    const Dataset odd = make_synthetic_domain(DomainSpec{}, 2, 20, 24, kPersistSeed + 1);
    for (const auto& sample : odd.samples) {
      if (!planes_equal(predict_full_image(trained, sample),
                        predict_full_image(loaded, sample))) {
        return fail("loaded model predicts differently on " + sample.id);
      }
    }
    return {true, "[state, file bytes and predictions all bit-equal]"};
  }

  Outcome criterion9() {
    const Dataset ds = make_synthetic_domain(DomainSpec{}, 6, 32, 32, kTwinSeed);
    ModelSpec spec;
    spec.kind = ModelKind::unet;
    spec.unet.levels = 2;
    spec.unet.base_channels = 4;
    spec.unet.frame_h = 32;
    spec.unet.frame_w = 32;
    TrainConfig cfg;
    cfg.lr = 2e-3;
    cfg.batch = 3;
    cfg.epochs = 6;
    cfg.seed = kTwinSeed;

    ModelState supervised = spec.build(kTwinSeed);
    const TrainHistory hs = train_supervised(supervised, ds, cfg);

    PseudoLabeledSet set;
    set.generator = "ground truth";
    for (const int i : ds.labeled_train_indices()) {
      set.samples.push_back({ds.samples[static_cast<std::size_t>(i)], false});
    }
    ModelState twin = spec.build(kTwinSeed);
    const TrainHistory hp = train_with_pseudo_labels(twin, set, cfg);

    if (!tensors_equal(supervised.tensors, twin.tensors)) {
      return fail("parameters diverged");
    }
    if (hs.loss != hp.loss || hs.f1 != hp.f1 || hs.steps != hp.steps) {
      return fail("training histories diverged");
    }
    return {true, fmt("[%d steps bit-identical]", hs.steps)};
  }
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  fs::path out_dir = "acceptance-out";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      const int k = std::atoi(argv[++i]);
      if (k < 1 || k > 9) {
        std::fprintf(stderr, "criterion must be 1..9\n");
        return 2;
      }
      wanted.push_back(k);
    } else if (arg == "--out" && i + 1 < argc) {
      out_dir = argv[++i];
    } else {
      std::fprintf(stderr,
                   "usage: skinseg-acceptance [--criterion N ...] [--out DIR]\n");
      return 2;
    }
  }
  if (wanted.empty()) wanted = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  fs::create_directories(out_dir);
  Gate gate;
  gate.out_dir = out_dir;

  const std::map<int, double> budget = {
      {1, kBudget1}, {2, kBudget2}, {3, kBudget3}, {5, kBudget5}, {6, kBudget6}};

  bool all_pass = true;
  for (const int k : wanted) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      switch (k) {
        case 1: o = criterion1(); break;
        case 2: o = criterion2(); break;
        case 3: o = gate.criterion3(); break;
        case 4: o = gate.criterion4(); break;
        case 5: o = gate.criterion5(); break;
        case 6: o = gate.criterion6(); break;
        case 7: o = gate.criterion7(); break;
        case 8: o = gate.criterion8(); break;
        case 9: o = gate.criterion9(); break;
      }
    } catch (const std::exception& e) {
      o = fail(fmt("exception: %s", e.what()));
    }
    const double secs = seconds_since(t0);
    const auto b = budget.find(k);
    if (o.pass && b != budget.end() && secs >= b->second) {
      o = fail(fmt("took %.1f s, budget %.0f s", secs, b->second));
    }
    std::printf("criterion %d: %s (%.1f s) %s\n", k, o.pass ? "PASS" : "FAIL", secs,
                o.note.c_str());
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
