#include "bottleseg/schedule_planner.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "bottleseg/error.hpp"
#include "json_util.hpp"

namespace bottleseg {

using detail::Json;

const char* to_string(LayerGroup g) noexcept {
  switch (g) {
    case LayerGroup::Heads: return "HEADS";
    case LayerGroup::FourPlus: return "FOUR_PLUS";
    case LayerGroup::All: return "ALL";
  }
  return "?";
}

const char* to_string(Backbone b) noexcept {
  return b == Backbone::ResNet50 ? "resnet50" : "resnet101";
}

const char* to_string(Optimizer o) noexcept { return o == Optimizer::Sgd ? "sgd" : "adam"; }

const char* to_string(ViolationKind kind) noexcept {
  switch (kind) {
    case ViolationKind::DuplicateModel: return "duplicate-model";
    case ViolationKind::UnresolvedParent: return "unresolved-parent";
    case ViolationKind::Cycle: return "cycle";
    case ViolationKind::NonPositiveEpochs: return "non-positive-epochs";
    case ViolationKind::EpochAccounting: return "epoch-accounting";
    case ViolationKind::StageLayers: return "stage-layers";
    case ViolationKind::StageOrder: return "stage-order";
    case ViolationKind::BadHyperparameter: return "bad-hyperparameter";
    case ViolationKind::ReferenceMismatch: return "reference-mismatch";
  }
  return "?";
}

const TrainingStage* TransferPlan::find(std::string_view model_id) const {
  for (const auto& s : stages) {
    if (s.model_id == model_id) return &s;
  }
  return nullptr;
}

TransferPlan builtin_plan() {
  using L = LayerGroup;
  constexpr bool aug = true;
  constexpr bool no_aug = false;
  TransferPlan plan;
  plan.stages = {
      {"M1", "BASE", 1, L::Heads, aug, 30, 30},
      {"M2", "M1", 2, L::All, aug, 30, 60},
      {"M3", "M1", 2, L::All, no_aug, 30, 60},
      {"M4", "M1", 2, L::FourPlus, aug, 30, 60},
      {"M5", "M4", 2, L::FourPlus, aug, 70, 130},
      {"M6", "M5", 3, L::All, aug, 20, 150},
      {"M7", "M5", 3, L::FourPlus, aug, 20, 150},
      {"M8", "M4", 3, L::All, aug, 30, 90},
      {"M9", "M8", 3, L::All, aug, 70, 160},
      {"M10", "M1", 2, L::FourPlus, no_aug, 30, 60},
      {"M11", "M10", 2, L::FourPlus, no_aug, 70, 130},
      {"M12", "M11", 3, L::All, no_aug, 20, 150},
      {"M13", "M11", 3, L::FourPlus, no_aug, 20, 150},
      {"M14", "M10", 3, L::All, no_aug, 30, 90},
      {"M15", "M14", 3, L::All, no_aug, 70, 160},
  };
  plan.hyper = Hyperparameters{Backbone::ResNet101, Optimizer::Sgd, 1000, 0.001, 512, 512, 512, 0.9};
  return plan;
}

namespace {

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void compare_reference(const TransferPlan& plan, const TransferPlan& ref,
                       std::vector<Violation>& out) {
  auto mismatch = [&](const std::string& id, const std::string& what) {
    out.push_back({ViolationKind::ReferenceMismatch, id, what});
  };
  for (const auto& r : ref.stages) {
    const TrainingStage* s = plan.find(r.model_id);
    if (s == nullptr) {
      mismatch(r.model_id, "missing from plan");
      continue;
    }
    if (s->parent != r.parent) mismatch(r.model_id, "parent " + s->parent + ", expected " + r.parent);
    if (s->tl_stage != r.tl_stage) {
      mismatch(r.model_id, "tl_stage " + std::to_string(s->tl_stage) + ", expected " +
                               std::to_string(r.tl_stage));
    }
    if (s->layers != r.layers) {
      mismatch(r.model_id, std::string("layers ") + to_string(s->layers) + ", expected " +
                               to_string(r.layers));
    }
    if (s->augmentation != r.augmentation) mismatch(r.model_id, "augmentation flag differs");
    if (s->epochs != r.epochs) {
      mismatch(r.model_id, "epochs " + std::to_string(s->epochs) + ", expected " +
                               std::to_string(r.epochs));
    }
    if (s->total_epochs != r.total_epochs) {
      mismatch(r.model_id, "total_epochs " + std::to_string(s->total_epochs) + ", expected " +
                               std::to_string(r.total_epochs));
    }
  }
  for (const auto& s : plan.stages) {
    if (ref.find(s.model_id) == nullptr) mismatch(s.model_id, "not in reference plan");
  }
  if (!(plan.hyper == ref.hyper)) mismatch("", "hyperparameters differ from reference");
}

}  // namespace

std::vector<Violation> validate_plan(const TransferPlan& plan, const TransferPlan* reference) {
  std::vector<Violation> out;
  auto add = [&](ViolationKind k, const std::string& id, std::string msg) {
    out.push_back({k, id, std::move(msg)});
  };

  std::map<std::string, const TrainingStage*> by_id;
  for (const auto& s : plan.stages) {
    if (s.model_id.empty() || s.model_id == kBaseModel) {
      add(ViolationKind::DuplicateModel, s.model_id, "model id is empty or reserved");
      continue;
    }
    if (!by_id.emplace(s.model_id, &s).second) {
      add(ViolationKind::DuplicateModel, s.model_id, "model id appears more than once");
    }
  }

  auto parent_of = [&](const TrainingStage& s) -> const TrainingStage* {
    auto it = by_id.find(s.parent);
    return it == by_id.end() ? nullptr : it->second;
  };

  std::set<std::string> on_cycle;
  for (const auto& s : plan.stages) {
    if (s.parent != kBaseModel && !by_id.contains(s.parent)) {
      add(ViolationKind::UnresolvedParent, s.model_id, "parent '" + s.parent + "' not found");
      continue;
    }
    // Walk up at most |plan| steps; a longer walk must revisit a model.
    const TrainingStage* cur = &s;
    std::size_t steps = 0;
    bool cyclic = false;
    while (cur != nullptr && cur->parent != kBaseModel) {
      cur = parent_of(*cur);
      if (cur == &s || ++steps > plan.stages.size()) {
        cyclic = true;
        break;
      }
    }
    if (cyclic) {
      on_cycle.insert(s.model_id);
      add(ViolationKind::Cycle, s.model_id, "lineage does not reach BASE");
    }
  }

  for (const auto& s : plan.stages) {
    if (s.epochs < 1) {
      add(ViolationKind::NonPositiveEpochs, s.model_id,
          "epochs must be >= 1, got " + std::to_string(s.epochs));
    }
    if (s.tl_stage < 1 || s.tl_stage > 3) {
      add(ViolationKind::StageOrder, s.model_id,
          "tl_stage must be 1, 2 or 3, got " + std::to_string(s.tl_stage));
    }
    if (s.tl_stage == 1 && s.layers != LayerGroup::Heads) {
      add(ViolationKind::StageLayers, s.model_id, "stage 1 trains HEADS only");
    }
    if (s.tl_stage > 1 && s.layers == LayerGroup::Heads) {
      add(ViolationKind::StageLayers, s.model_id, "stages 2 and 3 fine-tune beyond the heads");
    }

    if (on_cycle.contains(s.model_id)) continue;
    const TrainingStage* parent = parent_of(s);
    if (s.parent == kBaseModel) {
      if (s.total_epochs != s.epochs) {
        add(ViolationKind::EpochAccounting, s.model_id,
            "total_epochs " + std::to_string(s.total_epochs) + " != epochs " +
                std::to_string(s.epochs) + " for a model trained from BASE");
      }
      if (s.tl_stage != 1) {
        add(ViolationKind::StageOrder, s.model_id, "a model trained from BASE must be stage 1");
      }
    } else if (parent != nullptr) {
      if (s.total_epochs != parent->total_epochs + s.epochs) {
        add(ViolationKind::EpochAccounting, s.model_id,
            "total_epochs " + std::to_string(s.total_epochs) + " != " + parent->model_id +
                ".total_epochs " + std::to_string(parent->total_epochs) + " + epochs " +
                std::to_string(s.epochs));
      }
      if (s.tl_stage < parent->tl_stage || s.tl_stage > parent->tl_stage + 1) {
        add(ViolationKind::StageOrder, s.model_id,
            "stage " + std::to_string(s.tl_stage) + " cannot follow stage " +
                std::to_string(parent->tl_stage) + " of " + parent->model_id);
      }
    }
  }

  const Hyperparameters& h = plan.hyper;
  if (h.steps_per_epoch < 1) add(ViolationKind::BadHyperparameter, "", "steps_per_epoch < 1");
  if (!(h.learning_rate > 0.0) || !std::isfinite(h.learning_rate)) {
    add(ViolationKind::BadHyperparameter, "", "learning_rate must be positive");
  }
  if (h.train_rois < 1) add(ViolationKind::BadHyperparameter, "", "train_rois < 1");
  if (h.max_gt_instances < 1) add(ViolationKind::BadHyperparameter, "", "max_gt_instances < 1");
  if (h.detection_max_instances < 1) {
    add(ViolationKind::BadHyperparameter, "", "detection_max_instances < 1");
  }
  if (!(h.detection_min_confidence >= 0.0 && h.detection_min_confidence <= 1.0)) {
    add(ViolationKind::BadHyperparameter, "", "detection_min_confidence outside [0, 1]");
  }

  if (reference != nullptr) compare_reference(plan, *reference, out);
  return out;
}

std::vector<const TrainingStage*> lineage(const TransferPlan& plan, std::string_view model_id) {
  const TrainingStage* cur = plan.find(model_id);
  if (cur == nullptr) {
    throw Error(ErrorKind::UnknownModel, "model '" + std::string(model_id) + "' is not in the plan");
  }
  std::vector<const TrainingStage*> chain;
  while (cur != nullptr) {
    if (chain.size() > plan.stages.size()) {
      throw Error(ErrorKind::InvalidArgument,
                  "lineage of '" + std::string(model_id) + "' contains a cycle");
    }
    chain.push_back(cur);
    if (cur->parent == kBaseModel) break;
    const TrainingStage* parent = plan.find(cur->parent);
    if (parent == nullptr) {
      throw Error(ErrorKind::InvalidArgument,
                  "model '" + cur->model_id + "' has unresolved parent '" + cur->parent + "'");
    }
    cur = parent;
  }
  return {chain.rbegin(), chain.rend()};
}

std::string emit_config(const TransferPlan& plan, std::string_view model_id) {
  const auto runs = lineage(plan, model_id);
  const Hyperparameters& h = plan.hyper;
  std::string out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const TrainingStage& s = *runs[i];
    if (i > 0) out += "\n";
    auto kv = [&](const char* key, const std::string& value) {
      out += key;
      out += " = ";
      out += value;
      out += "\n";
    };
    kv("model_id", s.model_id);
    kv("run_order", std::to_string(i + 1));
    kv("parent", s.parent);
    kv("layers", to_string(s.layers));
    kv("augmentation", s.augmentation ? "fliplr" : "none");
    kv("epochs", std::to_string(s.epochs));
    kv("backbone", to_string(h.backbone));
    kv("optimizer", to_string(h.optimizer));
    kv("steps_per_epoch", std::to_string(h.steps_per_epoch));
    kv("learning_rate", format_number(h.learning_rate));
    kv("train_rois", std::to_string(h.train_rois));
    kv("max_gt_instances", std::to_string(h.max_gt_instances));
    kv("detection_max_instances", std::to_string(h.detection_max_instances));
    kv("detection_min_confidence", format_number(h.detection_min_confidence));
  }
  return out;
}

std::string serialize_plan(const TransferPlan& plan) {
  Json stages = Json::array();
  for (const auto& s : plan.stages) {
    Json j;
    j["model_id"] = s.model_id;
    j["parent"] = s.parent;
    j["tl_stage"] = s.tl_stage;
    j["layers"] = to_string(s.layers);
    j["augmentation"] = s.augmentation;
    j["epochs"] = s.epochs;
    j["total_epochs"] = s.total_epochs;
    stages.push_back(std::move(j));
  }
  const Hyperparameters& h = plan.hyper;
  Json hyper;
  hyper["backbone"] = to_string(h.backbone);
  hyper["optimizer"] = to_string(h.optimizer);
  hyper["steps_per_epoch"] = h.steps_per_epoch;
  hyper["learning_rate"] = h.learning_rate;
  hyper["train_rois"] = h.train_rois;
  hyper["max_gt_instances"] = h.max_gt_instances;
  hyper["detection_max_instances"] = h.detection_max_instances;
  hyper["detection_min_confidence"] = h.detection_min_confidence;

  Json doc;
  doc["stages"] = std::move(stages);
  doc["hyper"] = std::move(hyper);
  return doc.dump(2) + "\n";
}

namespace {

LayerGroup parse_layers(const std::string& s, const std::string& path) {
  if (s == "HEADS") return LayerGroup::Heads;
  if (s == "FOUR_PLUS" || s == "4+") return LayerGroup::FourPlus;
  if (s == "ALL") return LayerGroup::All;
  detail::schema_error(path, "unknown layer group '" + s + "'");
}

}  // namespace

TransferPlan parse_plan(std::string_view document) {
  const Json doc = detail::parse_json(document, "plan");
  TransferPlan plan;

  const Json& stages = detail::as_array(detail::field(doc, "stages", "plan"), "stages");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const std::string p = "stages[" + std::to_string(i) + "]";
    const Json& j = stages[i];
    TrainingStage s;
    s.model_id = detail::as_string(detail::field(j, "model_id", p), p + ".model_id");
    s.parent = detail::as_string(detail::field(j, "parent", p), p + ".parent");
    s.tl_stage = static_cast<int>(detail::as_int(detail::field(j, "tl_stage", p), p + ".tl_stage"));
    s.layers = parse_layers(detail::as_string(detail::field(j, "layers", p), p + ".layers"),
                            p + ".layers");
    s.augmentation = detail::as_bool(detail::field(j, "augmentation", p), p + ".augmentation");
    s.epochs = detail::as_int(detail::field(j, "epochs", p), p + ".epochs");
    s.total_epochs = detail::as_int(detail::field(j, "total_epochs", p), p + ".total_epochs");
    plan.stages.push_back(std::move(s));
  }

  const Json& h = detail::field(doc, "hyper", "plan");
  const std::string& backbone =
      detail::as_string(detail::field(h, "backbone", "hyper"), "hyper.backbone");
  if (backbone == "resnet50") {
    plan.hyper.backbone = Backbone::ResNet50;
  } else if (backbone == "resnet101") {
    plan.hyper.backbone = Backbone::ResNet101;
  } else {
    detail::schema_error("hyper.backbone", "unknown backbone '" + backbone + "'");
  }
  const std::string& optimizer =
      detail::as_string(detail::field(h, "optimizer", "hyper"), "hyper.optimizer");
  if (optimizer == "sgd") {
    plan.hyper.optimizer = Optimizer::Sgd;
  } else if (optimizer == "adam") {
    plan.hyper.optimizer = Optimizer::Adam;
  } else {
    detail::schema_error("hyper.optimizer", "unknown optimizer '" + optimizer + "'");
  }
  auto int_field = [&](const char* key) {
    return detail::as_int(detail::field(h, key, "hyper"), std::string("hyper.") + key);
  };
  auto num_field = [&](const char* key) {
    return detail::as_number(detail::field(h, key, "hyper"), std::string("hyper.") + key);
  };
  plan.hyper.steps_per_epoch = int_field("steps_per_epoch");
  plan.hyper.learning_rate = num_field("learning_rate");
  plan.hyper.train_rois = int_field("train_rois");
  plan.hyper.max_gt_instances = int_field("max_gt_instances");
  plan.hyper.detection_max_instances = int_field("detection_max_instances");
  plan.hyper.detection_min_confidence = num_field("detection_min_confidence");
  return plan;
}

}  // namespace bottleseg
