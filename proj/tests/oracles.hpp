#pragma once

// Brute-force reference implementations used only by tests. None of these
// call into the library code paths they are compared against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bottleseg/detection_kernels.hpp"
#include "bottleseg/evaluation.hpp"
#include "bottleseg/geometry.hpp"

namespace oracle {

// Dense row-major 0/1 grid.
struct Grid {
  int h = 0;
  int w = 0;
  std::vector<int> px;

  Grid(int height, int width) : h(height), w(width), px(static_cast<std::size_t>(height * width), 0) {}
  int& at(int r, int c) { return px[static_cast<std::size_t>(r * w + c)]; }
  int at(int r, int c) const { return px[static_cast<std::size_t>(r * w + c)]; }
  int count() const {
    int n = 0;
    for (int v : px) n += v;
    return n;
  }
};

// Classic even-odd point-in-polygon test (W. R. Franklin's PNPOLY).
inline bool pnpoly(const bottleseg::Polygon& poly, double px, double py) {
  bool inside = false;
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if (((v[i].y > py) != (v[j].y > py)) &&
        (px < (v[j].x - v[i].x) * (py - v[i].y) / (v[j].y - v[i].y) + v[i].x)) {
      inside = !inside;
    }
  }
  return inside;
}

inline Grid rasterize(const bottleseg::Polygon& poly, int h, int w) {
  Grid g(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) g.at(r, c) = pnpoly(poly, c + 0.5, r + 0.5) ? 1 : 0;
  }
  return g;
}

inline Grid from_mask(const bottleseg::BinaryMask& m) {
  Grid g(static_cast<int>(m.height()), static_cast<int>(m.width()));
  for (int r = 0; r < g.h; ++r) {
    for (int c = 0; c < g.w; ++c) g.at(r, c) = m.at(r, c) ? 1 : 0;
  }
  return g;
}

inline bottleseg::BinaryMask to_mask(const Grid& g) {
  bottleseg::BinaryMask m(g.h, g.w);
  for (int r = 0; r < g.h; ++r) {
    for (int c = 0; c < g.w; ++c) {
      if (g.at(r, c)) m.set(r, c);
    }
  }
  return m;
}

// IoU by pixel enumeration; crowd rule divides by |a| only.
inline double iou(const Grid& a, const Grid& b, bool b_crowd = false) {
  int inter = 0;
  int uni = 0;
  int area_a = 0;
  for (std::size_t i = 0; i < a.px.size(); ++i) {
    inter += a.px[i] & b.px[i];
    uni += a.px[i] | b.px[i];
    area_a += a.px[i];
  }
  const int denom = b_crowd ? area_a : uni;
  return denom == 0 ? 0.0 : static_cast<double>(inter) / denom;
}

// Tightest box by exhaustive min/max scan.
inline bottleseg::BBox bbox_scan(const Grid& g) {
  int x0 = g.w, y0 = g.h, x1 = -1, y1 = -1;
  for (int r = 0; r < g.h; ++r) {
    for (int c = 0; c < g.w; ++c) {
      if (!g.at(r, c)) continue;
      x0 = std::min(x0, c);
      x1 = std::max(x1, c);
      y0 = std::min(y0, r);
      y1 = std::max(y1, r);
    }
  }
  if (x1 < 0) return {};
  return {double(x0), double(y0), double(x1 - x0 + 1), double(y1 - y0 + 1)};
}

inline Grid box_grid(int h, int w, int x, int y, int bw, int bh) {
  Grid g(h, w);
  for (int r = y; r < y + bh; ++r) {
    for (int c = x; c < x + bw; ++c) g.at(r, c) = 1;
  }
  return g;
}

inline double box_iou(const bottleseg::BBox& a, const bottleseg::BBox& b) {
  const double ix0 = std::max(a.x, b.x), iy0 = std::max(a.y, b.y);
  const double ix1 = std::min(a.x + a.w, b.x + b.w), iy1 = std::min(a.y + a.h, b.y + b.h);
  const double inter = std::max(0.0, ix1 - ix0) * std::max(0.0, iy1 - iy0);
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni <= 0.0 ? 0.0 : inter / uni;
}

// Suppression by repeated argmax: take the best remaining box (earliest on
// ties), then delete every same-category box overlapping it at >= threshold.
inline std::vector<std::size_t> nms_keep(const std::vector<bottleseg::ScoredBox>& boxes,
                                         double threshold) {
  std::vector<bool> alive(boxes.size(), true);
  std::vector<std::size_t> kept;
  while (true) {
    std::size_t best = boxes.size();
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (alive[i] && (best == boxes.size() || boxes[i].score > boxes[best].score)) best = i;
    }
    if (best == boxes.size()) break;
    kept.push_back(best);
    alive[best] = false;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (alive[i] && boxes[i].category == boxes[best].category &&
          box_iou(boxes[i].bbox, boxes[best].bbox) >= threshold) {
        alive[i] = false;
      }
    }
  }
  return kept;
}

// Bilinear read of a single-channel dense field, border-clamped, cell (r,c)
// at (x=c, y=r). Written in weight form rather than lerp form.
inline double bilinear(const std::vector<double>& field, int h, int w, double x, double y) {
  x = std::min(std::max(x, 0.0), double(w - 1));
  y = std::min(std::max(y, 0.0), double(h - 1));
  const int c0 = static_cast<int>(x), r0 = static_cast<int>(y);
  const int c1 = std::min(c0 + 1, w - 1), r1 = std::min(r0 + 1, h - 1);
  const double ax = x - c0, ay = y - r0;
  auto f = [&](int r, int c) { return field[static_cast<std::size_t>(r * w + c)]; };
  return (1 - ax) * (1 - ay) * f(r0, c0) + ax * (1 - ay) * f(r0, c1) + (1 - ax) * ay * f(r1, c0) +
         ax * ay * f(r1, c1);
}

// Bin average of the bilinear field using `n` x `n` midpoint samples.
inline double dense_bin_average(const std::vector<double>& field, int h, int w, double bx0,
                                double by0, double bx1, double by1, int n) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double x = bx0 + (bx1 - bx0) * (j + 0.5) / n;
      const double y = by0 + (by1 - by0) * (i + 0.5) / n;
      sum += bilinear(field, h, w, x, y);
    }
  }
  return sum / (double(n) * n);
}

// ---- evaluation protocol ----------------------------------------------------

struct Obj {
  int image = 0;
  Grid mask{1, 1};
  bool crowd = false;  // gts only
  double score = 0.0;  // dts only
};

// Step-by-step greedy protocol on a single category. Returns, per detection
// in the caller's order, 1 = TP, 0 = FP, -1 = ignored.
inline std::vector<int> label_detections(const std::vector<Obj>& gts, const std::vector<Obj>& dts,
                                         double t) {
  const double thr = std::min(t, 1.0 - 1e-10);
  std::vector<int> label(dts.size(), 0);
  // Visit detections by descending score; equal scores keep input order.
  std::vector<std::size_t> visit;
  std::vector<bool> done(dts.size(), false);
  for (std::size_t round = 0; round < dts.size(); ++round) {
    std::size_t pick = dts.size();
    for (std::size_t d = 0; d < dts.size(); ++d) {
      if (!done[d] && (pick == dts.size() || dts[d].score > dts[pick].score)) pick = d;
    }
    done[pick] = true;
    visit.push_back(pick);
  }
  std::vector<bool> used(gts.size(), false);
  for (std::size_t d : visit) {
    // Candidate real gts: same image, unused, IoU >= thr. Highest IoU wins;
    // on an IoU tie the later gt wins.
    long best_real = -1;
    double best_real_iou = -1.0;
    long best_crowd = -1;
    double best_crowd_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gts[g].image != dts[d].image) continue;
      const double v = iou(dts[d].mask, gts[g].mask, gts[g].crowd);
      if (v < thr) continue;
      if (!gts[g].crowd && !used[g] && v >= best_real_iou) {
        best_real = static_cast<long>(g);
        best_real_iou = v;
      }
      if (gts[g].crowd && v >= best_crowd_iou) {
        best_crowd = static_cast<long>(g);
        best_crowd_iou = v;
      }
    }
    if (best_real >= 0) {
      used[static_cast<std::size_t>(best_real)] = true;
      label[d] = 1;
    } else if (best_crowd >= 0) {
      label[d] = -1;
    }
  }
  return label;
}

// AP as the mean over r in {0, .01, ..., 1} of the best precision achieved at
// any cut-off whose recall is >= r (0 if none).
inline double ap_from_labels(const std::vector<double>& scores, const std::vector<int>& labels,
                             int n_gt) {
  if (n_gt == 0) return 0.0;
  std::vector<std::size_t> idx;
  std::vector<bool> done(scores.size(), false);
  for (std::size_t round = 0; round < scores.size(); ++round) {
    std::size_t pick = scores.size();
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (!done[i] && (pick == scores.size() || scores[i] > scores[pick])) pick = i;
    }
    done[pick] = true;
    idx.push_back(pick);
  }
  std::vector<std::pair<int, double>> curve;  // (tp, precision)
  int tp = 0, seen = 0;
  for (std::size_t i : idx) {
    if (labels[i] < 0) continue;
    ++seen;
    tp += labels[i];
    curve.push_back({tp, double(tp) / seen});
  }
  double total = 0.0;
  for (int k = 0; k <= 100; ++k) {
    double best = 0.0;
    for (const auto& [ctp, prec] : curve) {
      if (ctp * 100 >= k * n_gt) best = std::max(best, prec);
    }
    total += best;
  }
  return total / 101.0;
}

// Full single-category protocol over pooled images.
inline double protocol_ap(const std::vector<Obj>& gts, const std::vector<Obj>& dts, double t) {
  // Pool in image order, as the library does; within an image, detections
  // are visited by score, which label_detections handles across images
  // independently because matches never cross images.
  const auto labels = label_detections(gts, dts, t);
  // Order pooled detections: by image, then score order within image; then a
  // stable descending sort by score.
  std::vector<std::size_t> pooled;
  int max_image = 0;
  for (const auto& d : dts) max_image = std::max(max_image, d.image);
  for (const auto& g : gts) max_image = std::max(max_image, g.image);
  for (int im = 0; im <= max_image; ++im) {
    std::vector<std::size_t> in_image;
    for (std::size_t d = 0; d < dts.size(); ++d) {
      if (dts[d].image == im) in_image.push_back(d);
    }
    std::stable_sort(in_image.begin(), in_image.end(),
                     [&](std::size_t a, std::size_t b) { return dts[a].score > dts[b].score; });
    pooled.insert(pooled.end(), in_image.begin(), in_image.end());
  }
  std::vector<double> s;
  std::vector<int> l;
  for (std::size_t d : pooled) {
    s.push_back(dts[d].score);
    l.push_back(labels[d]);
  }
  int n_gt = 0;
  for (const auto& g : gts) n_gt += g.crowd ? 0 : 1;
  return ap_from_labels(s, l, n_gt);
}

}  // namespace oracle
