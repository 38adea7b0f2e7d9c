#include "bottleseg/detection_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bottleseg {

std::vector<std::size_t> descending_score_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

namespace {

std::vector<std::size_t> order_of(std::span<const ScoredBox> boxes) {
  std::vector<double> scores;
  scores.reserve(boxes.size());
  for (const auto& b : boxes) scores.push_back(b.score);
  return descending_score_order(scores);
}

}  // namespace

std::vector<ScoredBox> nms(std::span<const ScoredBox> candidates, double iou_threshold) {
  std::vector<ScoredBox> kept;
  for (std::size_t i : order_of(candidates)) {
    const ScoredBox& cand = candidates[i];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const ScoredBox& k) {
      return k.category == cand.category && bbox_iou(cand.bbox, k.bbox) >= iou_threshold;
    });
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

std::vector<ScoredBox> confidence_filter(std::span<const ScoredBox> candidates, double min_conf) {
  std::vector<ScoredBox> out;
  std::copy_if(candidates.begin(), candidates.end(), std::back_inserter(out),
               [&](const ScoredBox& b) { return b.score >= min_conf; });
  return out;
}

std::vector<ScoredBox> cap_detections(std::span<const ScoredBox> candidates,
                                      std::size_t max_instances) {
  const auto order = order_of(candidates);
  std::vector<ScoredBox> out;
  const std::size_t n = std::min(max_instances, order.size());
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(candidates[order[k]]);
  return out;
}

FeatureGrid::FeatureGrid(std::int64_t channels, std::int64_t height, std::int64_t width)
    : FeatureGrid(channels, height, width,
                  std::vector<double>(channels > 0 && height > 0 && width > 0
                                          ? static_cast<std::size_t>(channels * height * width)
                                          : 0,
                                      0.0)) {}

FeatureGrid::FeatureGrid(std::int64_t channels, std::int64_t height, std::int64_t width,
                         std::vector<double> values)
    : channels_(channels), height_(height), width_(width), values_(std::move(values)) {
  if (channels < 1 || height < 1 || width < 1) {
    throw Error(ErrorKind::InvalidArgument, "feature grid is empty");
  }
  if (values_.size() != static_cast<std::size_t>(channels * height * width)) {
    throw Error(ErrorKind::DimensionMismatch, "feature grid holds " +
                                                  std::to_string(values_.size()) +
                                                  " values, expected " +
                                                  std::to_string(channels * height * width));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "non-finite feature value");
  }
}

double bilinear_sample(const FeatureGrid& grid, std::int64_t channel, double x, double y) {
  const auto max_x = static_cast<double>(grid.width() - 1);
  const auto max_y = static_cast<double>(grid.height() - 1);
  x = std::clamp(x, 0.0, max_x);
  y = std::clamp(y, 0.0, max_y);

  const auto x0 = static_cast<std::int64_t>(std::floor(x));
  const auto y0 = static_cast<std::int64_t>(std::floor(y));
  const std::int64_t x1 = std::min(x0 + 1, grid.width() - 1);
  const std::int64_t y1 = std::min(y0 + 1, grid.height() - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);

  // Lerp form: equal corner values reproduce that value exactly.
  const double v00 = grid.at(channel, y0, x0);
  const double v10 = grid.at(channel, y1, x0);
  const double top = v00 + fx * (grid.at(channel, y0, x1) - v00);
  const double bottom = v10 + fx * (grid.at(channel, y1, x1) - v10);
  return top + fy * (bottom - top);
}

FeatureGrid roi_align(const FeatureGrid& grid, const Roi& roi, std::int64_t out_h,
                      std::int64_t out_w, std::int64_t samples_per_bin) {
  if (!(roi.x2 >= roi.x1) || !(roi.y2 >= roi.y1)) {
    throw Error(ErrorKind::InvalidArgument, "inverted roi");
  }
  if (out_h < 1 || out_w < 1 || samples_per_bin < 1) {
    throw Error(ErrorKind::InvalidArgument, "roi_align output dims and samples must be >= 1");
  }

  const double bin_w = (roi.x2 - roi.x1) / static_cast<double>(out_w);
  const double bin_h = (roi.y2 - roi.y1) / static_cast<double>(out_h);
  const auto n = static_cast<double>(samples_per_bin);

  FeatureGrid out(grid.channels(), out_h, out_w);
  for (std::int64_t ch = 0; ch < grid.channels(); ++ch) {
    for (std::int64_t ph = 0; ph < out_h; ++ph) {
      for (std::int64_t pw = 0; pw < out_w; ++pw) {
        // Accumulate offsets from the first sample so a constant bin
        // averages to exactly that constant.
        double first = 0.0;
        double offset_sum = 0.0;
        bool have_first = false;
        for (std::int64_t iy = 0; iy < samples_per_bin; ++iy) {
          const double y = roi.y1 + bin_h * (static_cast<double>(ph) +
                                             (static_cast<double>(iy) + 0.5) / n);
          for (std::int64_t ix = 0; ix < samples_per_bin; ++ix) {
            const double x = roi.x1 + bin_w * (static_cast<double>(pw) +
                                               (static_cast<double>(ix) + 0.5) / n);
            const double v = bilinear_sample(grid, ch, x, y);
            if (!have_first) {
              first = v;
              have_first = true;
            }
            offset_sum += v - first;
          }
        }
        out.at(ch, ph, pw) = first + offset_sum / (n * n);
      }
    }
  }
  return out;
}

}  // namespace bottleseg
