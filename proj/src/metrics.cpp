#include "qtl/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace qtl {

ConfusionCounts confusion(const std::vector<double>& probabilities,
                          const std::vector<int>& labels, double threshold) {
  if (probabilities.empty()) throw MetricError("confusion: empty input");
  if (probabilities.size() != labels.size())
    throw MetricError("confusion: " + std::to_string(probabilities.size()) +
                      " probabilities vs " + std::to_string(labels.size()) + " labels");
  ConfusionCounts c;
  for (size_t i = 0; i < probabilities.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw MetricError("confusion: labels must be 0 or 1");
    const bool pred = probabilities[i] >= threshold;
    if (pred && labels[i] == 1) ++c.tp;
    else if (pred && labels[i] == 0) ++c.fp;
    else if (!pred && labels[i] == 0) ++c.tn;
    else ++c.fn;
  }
  return c;
}

Prf1 prf1(const ConfusionCounts& c) {
  if (c.total() <= 0) throw MetricError("prf1: empty confusion counts");
  Prf1 r;
  r.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  r.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  r.f1 = (r.precision + r.recall) > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  return r;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw MetricError("auc: score/label size mismatch or empty input");
  int64_t n_pos = 0, n_neg = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw MetricError("auc: labels must be 0 or 1");
    (y == 1 ? n_pos : n_neg)++;
  }
  if (n_pos == 0 || n_neg == 0)
    throw MetricError("auc: needs at least one positive and one negative sample");

  // Midrank Mann-Whitney: U = sum of positive ranks - P(P+1)/2.
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t(0));
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (size_t k = i; k <= j; ++k)
      if (labels[order[k]] == 1) pos_rank_sum += midrank;
    i = j + 1;
  }
  const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

MetricsReport make_report(const std::vector<double>& probabilities,
                          const std::vector<int>& labels, const std::string& model_tag,
                          const std::string& backend_tag, double threshold) {
  const Prf1 r = prf1(confusion(probabilities, labels, threshold));
  MetricsReport m;
  m.accuracy = r.accuracy;
  m.precision = r.precision;
  m.recall = r.recall;
  m.f1 = r.f1;
  m.auc = auc(probabilities, labels);
  m.model_tag = model_tag;
  m.backend_tag = backend_tag;
  return m;
}

}  // namespace qtl
