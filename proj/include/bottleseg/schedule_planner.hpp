#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bottleseg/error.hpp"

namespace bottleseg {

inline constexpr std::string_view kBaseModel = "BASE";

enum class LayerGroup { Heads, FourPlus, All };
enum class Backbone { ResNet50, ResNet101 };
enum class Optimizer { Sgd, Adam };

const char* to_string(LayerGroup g) noexcept;
const char* to_string(Backbone b) noexcept;
const char* to_string(Optimizer o) noexcept;

// One fine-tuning run. `parent` is another stage's model_id or kBaseModel
// (the COCO-pretrained weights).
struct TrainingStage {
  std::string model_id;
  std::string parent{kBaseModel};
  int tl_stage = 1;
  LayerGroup layers = LayerGroup::Heads;
  bool augmentation = false;  // horizontal flip
  std::int64_t epochs = 0;
  std::int64_t total_epochs = 0;

  friend bool operator==(const TrainingStage&, const TrainingStage&) = default;
};

struct Hyperparameters {
  Backbone backbone = Backbone::ResNet101;
  Optimizer optimizer = Optimizer::Sgd;
  std::int64_t steps_per_epoch = 1000;
  double learning_rate = 0.001;
  std::int64_t train_rois = 512;
  std::int64_t max_gt_instances = 512;
  std::int64_t detection_max_instances = 512;
  double detection_min_confidence = 0.9;

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

struct TransferPlan {
  std::vector<TrainingStage> stages;
  Hyperparameters hyper;

  const TrainingStage* find(std::string_view model_id) const;

  friend bool operator==(const TransferPlan&, const TransferPlan&) = default;
};

// The fifteen-model incremental fine-tuning scheme (M1..M15) for the
// ResNet-101 / SGD bottle segmentation experiments.
TransferPlan builtin_plan();

enum class ViolationKind {
  DuplicateModel,
  UnresolvedParent,
  Cycle,
  NonPositiveEpochs,
  EpochAccounting,
  StageLayers,
  StageOrder,
  BadHyperparameter,
  ReferenceMismatch,
};

const char* to_string(ViolationKind kind) noexcept;

struct Violation {
  ViolationKind kind;
  std::string model_id;  // empty for plan-wide findings
  std::string message;
};

// Structural checks: unique ids, resolvable acyclic lineage, epoch
// accounting, stage/layer rules and hyperparameter ranges. With a
// `reference`, every stage field and hyperparameter that differs from it is
// also reported.
std::vector<Violation> validate_plan(const TransferPlan& plan,
                                     const TransferPlan* reference = nullptr);

// Ancestry of `model_id`, root first. Throws ErrorKind::UnknownModel, or
// ErrorKind::InvalidArgument if the lineage is broken.
std::vector<const TrainingStage*> lineage(const TransferPlan& plan, std::string_view model_id);

// Flat `key = value` blocks, one per run in the lineage, blank-line separated.
std::string emit_config(const TransferPlan& plan, std::string_view model_id);

std::string serialize_plan(const TransferPlan& plan);
TransferPlan parse_plan(std::string_view document);

}  // namespace bottleseg
