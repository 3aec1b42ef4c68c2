#include "skinseg/metrics.hpp"

#include <cstdio>

namespace skinseg {

MetricReport report_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn,
                                std::int64_t tn) {
  MetricReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.tn = tn;
  r.pixel_count = tp + fp + fn + tn;
  const auto d = [](std::int64_t v) { return static_cast<double>(v); };
  r.acc = r.pixel_count > 0 ? d(tp + tn) / d(r.pixel_count) : 1.0;
  const std::int64_t pred_pos = tp + fp;
  const std::int64_t true_pos = tp + fn;
  if (pred_pos == 0 && true_pos == 0) {
    r.prec = r.rec = r.f1 = r.iou = 1.0;
  } else {
    r.prec = pred_pos > 0 ? d(tp) / d(pred_pos) : 0.0;
    r.rec = true_pos > 0 ? d(tp) / d(true_pos) : 0.0;
    r.iou = d(tp) / d(tp + fp + fn);
    r.f1 = d(2 * tp) / d(2 * tp + fp + fn);
  }
  return r;
}

double f1_from_iou(double iou) { return 2.0 * iou / (1.0 + iou); }

double iou_from_f1(double f1) { return f1 / (2.0 - f1); }

MetricReport aggregate_report(const std::vector<MetricReport>& reports,
                              AggregateMode mode) {
  if (reports.empty()) {
    throw DataError("aggregate_report: empty input");
  }
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& r : reports) {
    tp += r.tp;
    fp += r.fp;
    fn += r.fn;
    tn += r.tn;
  }
  if (mode == AggregateMode::pixel_pooled) {
    return report_from_counts(tp, fp, fn, tn);
  }
  MetricReport out;
  const double n = static_cast<double>(reports.size());
  for (const auto& r : reports) {
    out.acc += r.acc;
    out.iou += r.iou;
    out.prec += r.prec;
    out.rec += r.rec;
    out.f1 += r.f1;
  }
  out.acc /= n;
  out.iou /= n;
  out.prec /= n;
  out.rec /= n;
  out.f1 /= n;
  out.tp = tp;
  out.fp = fp;
  out.fn = fn;
  out.tn = tn;
  out.pixel_count = tp + fp + fn + tn;
  return out;
}

std::string metric_csv_header() { return "id,acc,iou,prec,rec,f1,tp,fp,fn,tn"; }

std::string metric_csv_row(const std::string& id, const MetricReport& r) {
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%lld,%lld,%lld,%lld",
                id.c_str(), r.acc, r.iou, r.prec, r.rec, r.f1,
                static_cast<long long>(r.tp), static_cast<long long>(r.fp),
                static_cast<long long>(r.fn), static_cast<long long>(r.tn));
  return std::string(buf);
}

}  // namespace skinseg
