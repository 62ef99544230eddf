#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qtl/errors.hpp"

namespace qtl {

struct ConfusionCounts {
  int64_t tp = 0, fp = 0, tn = 0, fn = 0;

  int64_t total() const { return tp + fp + tn + fn; }
};

/// Table-3-style metrics row. accuracy/precision/recall/f1/auc in [0,1].
struct MetricsReport {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0, auc = 0;
  std::string model_tag;
  std::string backend_tag = "ideal";
};

/// Threshold rule: predict 1 iff probability >= threshold.
ConfusionCounts confusion(const std::vector<double>& probabilities,
                          const std::vector<int>& labels, double threshold = 0.5);

struct Prf1 {
  double precision = 0, recall = 0, f1 = 0, accuracy = 0;
};

/// Zero-denominator convention: precision/recall/f1 are 0 when undefined.
Prf1 prf1(const ConfusionCounts& c);

/// Mann-Whitney AUC with midrank tie handling:
/// (#(pos > neg) + 0.5 * ties) / (P * N). Needs both classes present.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

MetricsReport make_report(const std::vector<double>& probabilities,
                          const std::vector<int>& labels, const std::string& model_tag,
                          const std::string& backend_tag, double threshold = 0.5);

}  // namespace qtl
