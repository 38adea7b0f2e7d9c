#include "bottleseg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "bottleseg/detection_kernels.hpp"
#include "json_util.hpp"

namespace bottleseg {

using detail::Json;

const char* to_string(EvalMode mode) noexcept {
  return mode == EvalMode::Mask ? "mask" : "bbox";
}

EvalMode parse_eval_mode(std::string_view text) {
  if (text == "mask" || text == "segm") return EvalMode::Mask;
  if (text == "bbox") return EvalMode::BBox;
  throw Error(ErrorKind::InvalidArgument, "unknown evaluation mode '" + std::string(text) + "'");
}

std::vector<GroundTruth> ground_truths_from_records(std::span<const DatasetRecord> records) {
  std::vector<GroundTruth> out;
  for (const auto& rec : records) {
    for (const auto& inst : rec.instances) {
      RleMask mask = instance_mask(inst, rec.height, rec.width);
      const BBox box = bbox_from_mask(mask);
      out.push_back(GroundTruth{rec.image_id, inst.category, std::move(mask), box, inst.is_ignore});
    }
  }
  return out;
}

namespace {

double region_iou(const DetectionInstance& dt, const GroundTruth& gt, EvalMode mode) {
  if (mode == EvalMode::Mask) return mask_iou(*dt.mask, gt.mask, gt.is_ignore);
  return bbox_iou(*dt.bbox, gt.bbox, gt.is_ignore);
}

void require_region(const DetectionInstance& dt, EvalMode mode) {
  if (mode == EvalMode::Mask && !dt.mask) {
    throw Error(ErrorKind::ModeMismatch, "mask evaluation needs segmentation for every detection "
                                         "(image " + std::to_string(dt.image_id) + ")");
  }
  if (mode == EvalMode::BBox && !dt.bbox) {
    throw Error(ErrorKind::ModeMismatch, "bbox evaluation needs a bbox for every detection "
                                         "(image " + std::to_string(dt.image_id) + ")");
  }
}

std::vector<std::size_t> score_order(std::span<const DetectionInstance> dts) {
  std::vector<double> scores;
  scores.reserve(dts.size());
  for (const auto& d : dts) scores.push_back(d.score);
  return descending_score_order(scores);
}

}  // namespace

ImageMatch match_instances(std::span<const GroundTruth> gts,
                           std::span<const DetectionInstance> dts, double iou_threshold,
                           EvalMode mode) {
  std::optional<std::int64_t> image;
  auto check_image = [&](std::int64_t id) {
    if (image && *image != id) {
      throw Error(ErrorKind::InvalidArgument, "match_instances given mixed image ids " +
                                                  std::to_string(*image) + " and " +
                                                  std::to_string(id));
    }
    image = id;
  };
  for (const auto& g : gts) check_image(g.image_id);
  for (const auto& d : dts) {
    check_image(d.image_id);
    require_region(d, mode);
  }

  // Non-ignore gts first, input order preserved within each group.
  std::vector<std::size_t> gt_order;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!gts[g].is_ignore) gt_order.push_back(g);
  }
  const std::size_t first_ignore = gt_order.size();
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (gts[g].is_ignore) gt_order.push_back(g);
  }

  ImageMatch out;
  out.num_non_ignore_gts = static_cast<std::int64_t>(first_ignore);
  const double threshold = std::min(iou_threshold, 1.0 - 1e-10);
  std::vector<bool> taken(gts.size(), false);

  for (std::size_t d : score_order(dts)) {
    double best = threshold;
    std::int64_t match = -1;
    for (std::size_t k = 0; k < gt_order.size(); ++k) {
      const std::size_t g = gt_order[k];
      if (taken[g] && !gts[g].is_ignore) continue;
      // A real match always beats an ignore region.
      if (match >= 0 && !gts[static_cast<std::size_t>(match)].is_ignore && gts[g].is_ignore) break;
      const double iou = region_iou(dts[d], gts[g], mode);
      if (iou < best) continue;
      best = iou;
      match = static_cast<std::int64_t>(g);
    }

    out.scores.push_back(dts[d].score);
    out.matched_gt.push_back(match);
    if (match < 0) {
      out.labels.push_back(MatchLabel::FalsePositive);
    } else if (gts[static_cast<std::size_t>(match)].is_ignore) {
      out.labels.push_back(MatchLabel::Ignored);
    } else {
      out.labels.push_back(MatchLabel::TruePositive);
      taken[static_cast<std::size_t>(match)] = true;
    }
  }
  out.false_negatives =
      out.num_non_ignore_gts -
      std::count(out.labels.begin(), out.labels.end(), MatchLabel::TruePositive);
  return out;
}

double average_precision(std::span<const ImageMatch> matches, std::int64_t num_non_ignore_gts) {
  if (num_non_ignore_gts <= 0) return 0.0;

  std::vector<double> scores;
  std::vector<MatchLabel> labels;
  for (const auto& m : matches) {
    scores.insert(scores.end(), m.scores.begin(), m.scores.end());
    labels.insert(labels.end(), m.labels.begin(), m.labels.end());
  }

  std::vector<std::int64_t> cum_tp;
  std::vector<double> precision;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  for (std::size_t i : descending_score_order(scores)) {
    if (labels[i] == MatchLabel::Ignored) continue;
    (labels[i] == MatchLabel::TruePositive ? tp : fp) += 1;
    cum_tp.push_back(tp);
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
  }
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }

  // Recall point k/100 is reached at the first i with cum_tp[i]/n >= k/100,
  // evaluated in integers.
  double sum = 0.0;
  std::size_t i = 0;
  for (std::int64_t k = 0; k < kRecallPoints; ++k) {
    while (i < cum_tp.size() && cum_tp[i] * (kRecallPoints - 1) < k * num_non_ignore_gts) ++i;
    if (i == cum_tp.size()) break;
    sum += precision[i];
  }
  return sum / kRecallPoints;
}

std::vector<double> EvalParams::default_iou_thresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back(static_cast<double>(50 + 5 * k) / 100.0);
  return t;
}

void EvalParams::validate() const {
  if (iou_thresholds.empty()) throw Error(ErrorKind::InvalidArgument, "no IoU thresholds");
  for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
    const double t = iou_thresholds[i];
    if (!(t > 0.0 && t <= 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "IoU threshold outside (0, 1]");
    }
    if (i > 0 && !(t > iou_thresholds[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "IoU thresholds must be strictly increasing");
    }
  }
  if (max_detections_per_image < 1) {
    throw Error(ErrorKind::InvalidArgument, "max_detections_per_image must be >= 1");
  }
  if (!(min_confidence >= 0.0 && min_confidence <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "min_confidence outside [0, 1]");
  }
}

double EvalSummary::ap_at(double threshold) const {
  for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
    if (std::abs(iou_thresholds[i] - threshold) < 1e-9) return ap_per_threshold[i];
  }
  return std::numeric_limits<double>::quiet_NaN();
}

EvalSummary evaluate(std::span<const DatasetRecord> records,
                     std::span<const DetectionInstance> detections, const EvalParams& params) {
  params.validate();
  validate_records(records);

  std::map<std::int64_t, const DatasetRecord*> images;
  for (const auto& rec : records) images.emplace(rec.image_id, &rec);

  for (const auto& d : detections) {
    auto it = images.find(d.image_id);
    if (it == images.end()) {
      throw Error(ErrorKind::UnknownImage,
                  "detection references unknown image_id " + std::to_string(d.image_id));
    }
    require_region(d, params.mode);
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "detection score outside [0, 1] on image " +
                                                  std::to_string(d.image_id));
    }
    if (d.mask && (d.mask->height() != it->second->height || d.mask->width() != it->second->width)) {
      throw Error(ErrorKind::DimensionMismatch,
                  "detection mask size differs from image " + std::to_string(d.image_id));
    }
  }

  // Per-image confidence filter and cap, keyed by (image, category) cell.
  using Cell = std::pair<std::int64_t, std::string>;
  std::map<Cell, std::vector<DetectionInstance>> dt_cells;
  std::set<std::string> categories;
  std::int64_t detection_count = 0;
  {
    std::map<std::int64_t, std::vector<DetectionInstance>> per_image;
    for (const auto& d : detections) {
      if (d.score >= params.min_confidence) per_image[d.image_id].push_back(d);
    }
    for (auto& [image_id, dts] : per_image) {
      const auto order = score_order(dts);
      const std::size_t n = std::min(order.size(), params.max_detections_per_image);
      for (std::size_t k = 0; k < n; ++k) {
        DetectionInstance& d = dts[order[k]];
        categories.insert(d.category);
        dt_cells[{image_id, d.category}].push_back(std::move(d));
      }
      detection_count += static_cast<std::int64_t>(n);
    }
  }

  std::map<Cell, std::vector<GroundTruth>> gt_cells;
  std::int64_t total_gts = 0;
  for (auto& g : ground_truths_from_records(records)) {
    categories.insert(g.category);
    if (!g.is_ignore) ++total_gts;
    gt_cells[{g.image_id, g.category}].push_back(std::move(g));
  }

  EvalSummary summary;
  summary.mode = params.mode;
  summary.iou_thresholds = params.iou_thresholds;
  summary.detection_count = detection_count;
  summary.num_ground_truths = total_gts;

  std::map<std::int64_t, std::size_t> diag_index;
  for (const auto& [image_id, rec] : images) {
    diag_index.emplace(image_id, summary.images.size());
    summary.images.push_back({image_id, std::vector<MatchCounts>(params.iou_thresholds.size())});
  }

  const std::vector<GroundTruth> no_gts;
  const std::vector<DetectionInstance> no_dts;
  for (std::size_t t = 0; t < params.iou_thresholds.size(); ++t) {
    double ap_sum = 0.0;
    std::size_t included = 0;
    for (const auto& cat : categories) {
      std::vector<ImageMatch> matches;
      std::int64_t n_gt = 0;
      std::int64_t n_dt = 0;
      for (const auto& [image_id, rec] : images) {
        const Cell cell{image_id, cat};
        auto git = gt_cells.find(cell);
        auto dit = dt_cells.find(cell);
        const auto& cell_gts = git == gt_cells.end() ? no_gts : git->second;
        const auto& cell_dts = dit == dt_cells.end() ? no_dts : dit->second;
        if (cell_gts.empty() && cell_dts.empty()) continue;

        ImageMatch m = match_instances(cell_gts, cell_dts, params.iou_thresholds[t], params.mode);
        MatchCounts& counts = summary.images[diag_index[image_id]].per_threshold[t];
        for (MatchLabel l : m.labels) {
          if (l == MatchLabel::TruePositive) ++counts.tp;
          if (l == MatchLabel::FalsePositive) ++counts.fp;
          if (l == MatchLabel::Ignored) ++counts.ignored;
        }
        counts.fn += m.false_negatives;
        n_gt += m.num_non_ignore_gts;
        n_dt += static_cast<std::int64_t>(m.labels.size());
        matches.push_back(std::move(m));
      }
      // A category with neither ground truth nor detections carries no
      // information and is left out of the mean.
      if (n_gt == 0 && n_dt == 0) continue;
      ap_sum += average_precision(matches, n_gt);
      ++included;
    }
    summary.ap_per_threshold.push_back(included > 0 ? ap_sum / static_cast<double>(included)
                                                    : 0.0);
  }

  double total = 0.0;
  for (double ap : summary.ap_per_threshold) total += ap;
  summary.map_coco = total / static_cast<double>(summary.ap_per_threshold.size());
  summary.ap50 = summary.ap_at(0.50);
  summary.ap75 = summary.ap_at(0.75);
  summary.ap90 = summary.ap_at(0.90);
  return summary;
}

std::vector<SweepRow> confidence_sweep(std::span<const DatasetRecord> records,
                                       std::span<const DetectionInstance> detections,
                                       const EvalParams& params,
                                       std::span<const double> confidences) {
  std::vector<SweepRow> rows;
  for (double conf : confidences) {
    if (!(conf >= 0.0 && conf <= 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "sweep confidence outside [0, 1]");
    }
    EvalParams p = params;
    p.min_confidence = conf;
    const EvalSummary s = evaluate(records, detections, p);
    rows.push_back({conf, s.map_coco, s.ap50, s.detection_count});
  }
  return rows;
}

std::vector<DetectionInstance> parse_coco_results(std::string_view document,
                                                  const CocoDataset& dataset) {
  const Json doc = detail::parse_json(document, "COCO results");
  const Json& items = detail::as_array(doc, "results");

  std::map<std::int64_t, const DatasetRecord*> images;
  for (const auto& rec : dataset.records) images.emplace(rec.image_id, &rec);

  std::vector<DetectionInstance> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string path = "results[" + std::to_string(i) + "]";
    const Json& item = items[i];
    DetectionInstance d;
    d.image_id = detail::as_int(detail::field(item, "image_id", path), path + ".image_id");
    auto img = images.find(d.image_id);
    if (img == images.end()) {
      throw Error(ErrorKind::UnknownImage,
                  path + ": image_id " + std::to_string(d.image_id) + " is not in the dataset");
    }
    d.category = dataset.category_name(
        detail::as_int(detail::field(item, "category_id", path), path + ".category_id"));
    d.score = detail::as_number(detail::field(item, "score", path), path + ".score");

    if (auto seg = item.find("segmentation"); seg != item.end()) {
      const std::string spath = path + ".segmentation";
      if (seg->is_object()) {
        const Json& size = detail::as_array(detail::field(*seg, "size", spath), spath + ".size");
        if (size.size() != 2) detail::schema_error(spath + ".size", "expected [h, w]");
        const Json& counts = detail::field(*seg, "counts", spath);
        if (counts.is_string()) {
          detail::schema_error(spath + ".counts",
                               "compressed RLE strings are not supported; use an integer list");
        }
        std::vector<std::uint32_t> runs;
        for (const auto& c : detail::as_array(counts, spath + ".counts")) {
          const auto v = detail::as_int(c, spath + ".counts");
          if (v < 0) detail::schema_error(spath + ".counts", "negative run length");
          runs.push_back(static_cast<std::uint32_t>(v));
        }
        d.mask = RleMask(detail::as_int(size[0], spath + ".size"),
                         detail::as_int(size[1], spath + ".size"), std::move(runs));
      } else if (seg->is_array()) {
        std::vector<Polygon> polys;
        for (const auto& flat : *seg) {
          detail::as_array(flat, spath);
          if (flat.size() % 2 != 0 || flat.size() < 6) {
            detail::schema_error(spath, "polygon must hold an even number (>= 6) of coordinates");
          }
          Polygon poly;
          for (std::size_t v = 0; v < flat.size(); v += 2) {
            poly.vertices.push_back(
                {detail::as_number(flat[v], spath), detail::as_number(flat[v + 1], spath)});
          }
          polys.push_back(std::move(poly));
        }
        d.mask = rle_encode(rasterize_polygons(polys, img->second->height, img->second->width));
      } else {
        detail::schema_error(spath, "expected polygon list or RLE object");
      }
    }
    if (auto box = item.find("bbox"); box != item.end()) {
      const Json& b = detail::as_array(*box, path + ".bbox");
      if (b.size() != 4) detail::schema_error(path + ".bbox", "expected [x, y, w, h]");
      d.bbox = BBox{detail::as_number(b[0], path + ".bbox"), detail::as_number(b[1], path + ".bbox"),
                    detail::as_number(b[2], path + ".bbox"), detail::as_number(b[3], path + ".bbox")};
      if (d.bbox->w < 0.0 || d.bbox->h < 0.0) {
        detail::schema_error(path + ".bbox", "negative width or height");
      }
    }
    if (!d.mask && !d.bbox) detail::schema_error(path, "needs 'segmentation' or 'bbox'");
    out.push_back(std::move(d));
  }
  return out;
}

namespace {

std::string percent(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
  return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

Json nan_to_null(double v) { return std::isnan(v) ? Json() : Json(v); }

}  // namespace

std::string format_summary_table(const EvalSummary& s) {
  std::string out;
  out += pad_left("AP50", 8) + pad_left("AP75", 8) + pad_left("AP90", 8) + pad_left("mAP", 8) +
         "\n";
  out += pad_left(percent(s.ap50), 8) + pad_left(percent(s.ap75), 8) +
         pad_left(percent(s.ap90), 8) + pad_left(percent(s.map_coco), 8) + "\n";
  return out;
}

std::string summary_to_json(const EvalSummary& s) {
  Json doc;
  doc["mode"] = to_string(s.mode);
  doc["iou_thresholds"] = s.iou_thresholds;
  doc["ap_per_threshold"] = s.ap_per_threshold;
  doc["ap50"] = nan_to_null(s.ap50);
  doc["ap75"] = nan_to_null(s.ap75);
  doc["ap90"] = nan_to_null(s.ap90);
  doc["map"] = s.map_coco;
  doc["detection_count"] = s.detection_count;
  doc["num_ground_truths"] = s.num_ground_truths;
  Json images = Json::array();
  for (const auto& img : s.images) {
    Json tp = Json::array();
    Json fp = Json::array();
    Json fn = Json::array();
    Json ig = Json::array();
    for (const auto& c : img.per_threshold) {
      tp.push_back(c.tp);
      fp.push_back(c.fp);
      fn.push_back(c.fn);
      ig.push_back(c.ignored);
    }
    Json j;
    j["image_id"] = img.image_id;
    j["tp"] = std::move(tp);
    j["fp"] = std::move(fp);
    j["fn"] = std::move(fn);
    j["ignored"] = std::move(ig);
    images.push_back(std::move(j));
  }
  doc["images"] = std::move(images);
  return doc.dump(1) + "\n";
}

std::string format_sweep_table(std::span<const SweepRow> rows) {
  std::string out = pad_left("confidence", 10) + pad_left("mAP", 8) + pad_left("AP50", 8) +
                    pad_left("detections", 12) + "\n";
  for (const auto& r : rows) {
    char conf[32];
    std::snprintf(conf, sizeof(conf), "%.2f", r.confidence);
    out += pad_left(conf, 10) + pad_left(percent(r.map_coco), 8) + pad_left(percent(r.ap50), 8) +
           pad_left(std::to_string(r.detection_count), 12) + "\n";
  }
  return out;
}

std::string sweep_to_json(std::span<const SweepRow> rows) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    Json j;
    j["confidence"] = r.confidence;
    j["map"] = r.map_coco;
    j["ap50"] = nan_to_null(r.ap50);
    j["detection_count"] = r.detection_count;
    arr.push_back(std::move(j));
  }
  return arr.dump(1) + "\n";
}

}  // namespace bottleseg
