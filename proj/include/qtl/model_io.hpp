#pragma once

#include <memory>
#include <string>

#include "qtl/checkpoint.hpp"
#include "qtl/models.hpp"

namespace qtl {

enum class ModelKind { Baseline, Ctl, Qtl };

std::string to_string(ModelKind k);

/// A loaded model of whichever kind the checkpoint holds.
struct AnyModel {
  ModelKind kind = ModelKind::Baseline;
  std::unique_ptr<BaselineCnn> baseline;
  std::unique_ptr<CtlModel> ctl;
  std::unique_ptr<QtlModel> qtl;
};

void save_model(const std::string& path, const BaselineCnn& model);
void save_model(const std::string& path, const CtlModel& model);
void save_model(const std::string& path, const QtlModel& model);

AnyModel load_model(const std::string& path);

}  // namespace qtl
