#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bottleseg/annotation_io.hpp"
#include "bottleseg/geometry.hpp"

namespace bottleseg {

enum class EvalMode { Mask, BBox };

const char* to_string(EvalMode mode) noexcept;
// Accepts "mask"/"segm" and "bbox".
EvalMode parse_eval_mode(std::string_view text);

struct GroundTruth {
  std::int64_t image_id = 0;
  std::string category;
  RleMask mask;
  BBox bbox;
  bool is_ignore = false;
};

struct DetectionInstance {
  std::int64_t image_id = 0;
  std::string category;
  double score = 0.0;
  std::optional<RleMask> mask;
  std::optional<BBox> bbox;
};

// Rasterizes every record instance into a GroundTruth (bbox from the mask).
std::vector<GroundTruth> ground_truths_from_records(std::span<const DatasetRecord> records);

enum class MatchLabel { TruePositive, FalsePositive, Ignored };

struct ImageMatch {
  // One entry per detection, in descending-score order (ties by input order).
  std::vector<double> scores;
  std::vector<MatchLabel> labels;
  // Index into the input gts of the matched ground truth, or -1.
  std::vector<std::int64_t> matched_gt;
  std::int64_t num_non_ignore_gts = 0;
  std::int64_t false_negatives = 0;
};

// Greedy COCO matching for one (image, category) cell. Each detection takes
// the unmatched non-ignore gt of highest IoU >= threshold; otherwise the best
// ignore gt, which makes it Ignored. Ignore gts may absorb any number of
// detections.
ImageMatch match_instances(std::span<const GroundTruth> gts,
                           std::span<const DetectionInstance> dts, double iou_threshold,
                           EvalMode mode);

inline constexpr int kRecallPoints = 101;

// 101-point interpolated AP over detections pooled from every cell.
double average_precision(std::span<const ImageMatch> matches, std::int64_t num_non_ignore_gts);

struct EvalParams {
  std::vector<double> iou_thresholds = default_iou_thresholds();
  std::size_t max_detections_per_image = 512;
  EvalMode mode = EvalMode::Mask;
  double min_confidence = 0.0;

  // 0.50, 0.55, ..., 0.95.
  static std::vector<double> default_iou_thresholds();
  void validate() const;
};

struct MatchCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t ignored = 0;
};

struct ImageDiagnostics {
  std::int64_t image_id = 0;
  std::vector<MatchCounts> per_threshold;  // aligned with iou_thresholds
};

struct EvalSummary {
  EvalMode mode = EvalMode::Mask;
  std::vector<double> iou_thresholds;
  std::vector<double> ap_per_threshold;
  // NaN when the threshold is not among iou_thresholds.
  double ap50 = 0.0;
  double ap75 = 0.0;
  double ap90 = 0.0;
  double map_coco = 0.0;
  std::int64_t detection_count = 0;  // after confidence filter and cap
  std::int64_t num_ground_truths = 0;  // non-ignore
  std::vector<ImageDiagnostics> images;

  // AP at `threshold`, or NaN if it was not evaluated.
  double ap_at(double threshold) const;
};

EvalSummary evaluate(std::span<const DatasetRecord> records,
                     std::span<const DetectionInstance> detections, const EvalParams& params);

struct SweepRow {
  double confidence = 0.0;
  double map_coco = 0.0;
  double ap50 = 0.0;
  std::int64_t detection_count = 0;
};

std::vector<SweepRow> confidence_sweep(std::span<const DatasetRecord> records,
                                       std::span<const DetectionInstance> detections,
                                       const EvalParams& params,
                                       std::span<const double> confidences);

// COCO results array: {image_id, category_id, score, segmentation | bbox}.
// Polygon segmentations are rasterized on the matching ground-truth image.
std::vector<DetectionInstance> parse_coco_results(std::string_view document,
                                                  const CocoDataset& dataset);

// "AP50 AP75 AP90 mAP" table, values x100 with two decimals.
std::string format_summary_table(const EvalSummary& summary);
std::string summary_to_json(const EvalSummary& summary);
std::string format_sweep_table(std::span<const SweepRow> rows);
std::string sweep_to_json(std::span<const SweepRow> rows);

}  // namespace bottleseg
