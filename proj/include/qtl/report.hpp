#pragma once

#include <string>
#include <vector>

#include "qtl/metrics.hpp"

namespace qtl {

/// Index of the row tagged "baseline", or -1 when absent.
int find_baseline_row(const std::vector<MetricsReport>& rows);

/// CSV with columns model,backend,test_acc,precision,recall,f1,auc plus
/// relative-improvement columns (100*(new-base)/base, 2 decimals) against the
/// baseline row. test_acc is a percentage with 2 decimals; the other metrics
/// carry 4 decimals. Improvement columns stay empty without a baseline row.
std::string report_csv(const std::vector<MetricsReport>& rows, int baseline_index);

/// Fixed-width text rendering of the same rows.
std::string report_table(const std::vector<MetricsReport>& rows, int baseline_index);

}  // namespace qtl
