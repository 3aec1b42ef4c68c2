#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skinseg/common.hpp"

namespace skinseg {

/// Segmentation quality of one image or of an aggregated set.
///
/// Degenerate-denominator convention: when both prediction and ground truth
/// are empty, prec = rec = f1 = iou = 1; when exactly one of them is empty the
/// affected ratios are 0. Accuracy is always (tp+tn)/pixel_count.
struct MetricReport {
  double acc = 0.0;
  double iou = 0.0;
  double prec = 0.0;
  double rec = 0.0;
  double f1 = 0.0;
  std::int64_t pixel_count = 0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;
};

enum class AggregateMode { per_image_mean, pixel_pooled };

MetricReport report_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn,
                                std::int64_t tn);

/// Confusion counts of a binary prediction against a binary ground truth.
/// Entries must be exactly 0 or 1; lengths must match.
template <class DerivedQ, class DerivedG>
MetricReport compute_metrics(const Eigen::DenseBase<DerivedQ>& q,
                             const Eigen::DenseBase<DerivedG>& g) {
  if (q.size() != g.size()) {
    throw DataError("compute_metrics: length mismatch");
  }
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const bool qi = q.derived().coeff(i) != 0;
    const bool gi = g.derived().coeff(i) != 0;
    if (qi && gi) {
      ++tp;
    } else if (qi) {
      ++fp;
    } else if (gi) {
      ++fn;
    } else {
      ++tn;
    }
  }
  return report_from_counts(tp, fp, fn, tn);
}

double f1_from_iou(double iou);
double iou_from_f1(double f1);

MetricReport aggregate_report(const std::vector<MetricReport>& reports,
                              AggregateMode mode);

/// "id,acc,iou,prec,rec,f1,tp,fp,fn,tn"
std::string metric_csv_header();
std::string metric_csv_row(const std::string& id, const MetricReport& r);

}  // namespace skinseg
