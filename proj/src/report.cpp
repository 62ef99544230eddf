#include "qtl/report.hpp"

#include <cstdio>
#include <sstream>

namespace qtl {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string improvement(double value, double base) {
  if (base == 0.0) return "";
  return fmt("%.2f", 100.0 * (value - base) / base);
}

}  // namespace

int find_baseline_row(const std::vector<MetricsReport>& rows) {
  for (size_t i = 0; i < rows.size(); ++i)
    if (rows[i].model_tag == "baseline") return static_cast<int>(i);
  return -1;
}

std::string report_csv(const std::vector<MetricsReport>& rows, int baseline_index) {
  std::ostringstream out;
  out << "model,backend,test_acc,precision,recall,f1,auc,"
         "imp_acc,imp_precision,imp_recall,imp_f1,imp_auc\n";
  const MetricsReport* base =
      (baseline_index >= 0 && baseline_index < static_cast<int>(rows.size()))
          ? &rows[baseline_index]
          : nullptr;
  for (const auto& r : rows) {
    out << r.model_tag << ',' << r.backend_tag << ',' << fmt("%.2f", 100.0 * r.accuracy) << ','
        << fmt("%.4f", r.precision) << ',' << fmt("%.4f", r.recall) << ',' << fmt("%.4f", r.f1)
        << ',' << fmt("%.4f", r.auc);
    if (base) {
      out << ',' << improvement(r.accuracy, base->accuracy) << ','
          << improvement(r.precision, base->precision) << ','
          << improvement(r.recall, base->recall) << ',' << improvement(r.f1, base->f1) << ','
          << improvement(r.auc, base->auc);
    } else {
      out << ",,,,,";
    }
    out << '\n';
  }
  return out.str();
}

std::string report_table(const std::vector<MetricsReport>& rows, int baseline_index) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-18s %-7s %9s %10s %8s %8s %8s %10s\n", "model", "backend",
                "acc(%)", "precision", "recall", "f1", "auc", "imp_acc(%)");
  out << line;
  const MetricsReport* base =
      (baseline_index >= 0 && baseline_index < static_cast<int>(rows.size()))
          ? &rows[baseline_index]
          : nullptr;
  for (const auto& r : rows) {
    const std::string imp = base ? improvement(r.accuracy, base->accuracy) : std::string();
    std::snprintf(line, sizeof(line), "%-18s %-7s %9.2f %10.4f %8.4f %8.4f %8.4f %10s\n",
                  r.model_tag.c_str(), r.backend_tag.c_str(), 100.0 * r.accuracy, r.precision,
                  r.recall, r.f1, r.auc, imp.c_str());
    out << line;
  }
  return out.str();
}

}  // namespace qtl
