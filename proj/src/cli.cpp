#include "bottleseg/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "bottleseg/annotation_io.hpp"
#include "bottleseg/detection_kernels.hpp"
#include "bottleseg/evaluation.hpp"
#include "bottleseg/preprocess.hpp"
#include "bottleseg/schedule_planner.hpp"
#include "json_util.hpp"

namespace bottleseg::cli {

namespace {

// Raised for unreadable files; maps to kInputError.
struct InputFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputFailure("cannot read '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputFailure("cannot write '" + path + "'");
  os << contents;
  if (!os) throw InputFailure("failed writing '" + path + "'");
}

// Prefixes errors raised while handling `path` so diagnostics name the file.
template <typename F>
auto with_file(const std::string& path, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse:
    case ErrorKind::Region:
    case ErrorKind::MissingMetadata:
    case ErrorKind::InconsistentRle:
    case ErrorKind::InvalidPolygon:
    case ErrorKind::ReferentialIntegrity:
    case ErrorKind::DuplicateImageId:
      return kInputError;
    default:
      return kFindings;
  }
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// ---- convert ---------------------------------------------------------------

struct ConvertArgs {
  std::string via;
  std::string dims;
  std::string out;
  std::vector<std::string> categories;
  ViaOptions options;
};

int run_convert(const ConvertArgs& a, std::ostream& out) {
  const auto dims = with_file(a.dims, [&] { return parse_dimension_manifest(read_file(a.dims)); });
  const auto records = with_file(a.via, [&] { return parse_via(read_file(a.via), dims, a.options); });

  std::vector<std::string> categories = a.categories;
  if (categories.empty()) {
    std::set<std::string> seen;
    for (const auto& r : records) {
      for (const auto& inst : r.instances) seen.insert(inst.category);
    }
    categories.assign(seen.begin(), seen.end());
  }
  const std::string doc = export_coco(records, categories);
  write_file(a.out, doc);

  const DatasetStats stats = dataset_stats(records);
  out << "converted " << stats.num_images << " images, " << stats.total_instances
      << " instances, " << categories.size() << " categories -> " << a.out << "\n";
  return kOk;
}

// ---- stats -----------------------------------------------------------------

struct StatsArgs {
  std::string coco;
  std::string via;
  std::string dims;
  bool transform = false;
  std::int64_t target = kDefaultTargetSize;
  std::string out;
  ViaOptions options;
};

int run_stats(const StatsArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<DatasetRecord> records;
  if (!a.coco.empty()) {
    records = with_file(a.coco, [&] { return import_coco(read_file(a.coco)).records; });
  } else if (!a.via.empty() && !a.dims.empty()) {
    const auto dims =
        with_file(a.dims, [&] { return parse_dimension_manifest(read_file(a.dims)); });
    records = with_file(a.via, [&] { return parse_via(read_file(a.via), dims, a.options); });
  } else {
    err << "stats: give --coco FILE, or --via FILE with --dims FILE\n";
    return kUsage;
  }

  const DatasetStats s = dataset_stats(records);
  out << "images            " << s.num_images << "\n";
  out << "annotated images  " << s.num_annotated_images << "\n";
  out << "instances         " << s.total_instances << "\n";
  out << "min pixel area    " << s.min_pixel_area << "\n";
  out << "max pixel area    " << s.max_pixel_area << "\n";
  for (const auto& [cat, n] : s.per_category) out << "category " << cat << "  " << n << "\n";

  detail::Json transforms = detail::Json::array();
  if (a.transform) {
    out << "# file_name scale pad_top pad_left out_h out_w\n";
    for (const auto& r : records) {
      const SquarePadTransform t = compute_square_pad(r.height, r.width, a.target);
      out << r.file_name << " " << fixed(t.scale, 6) << " " << t.pad_top << " " << t.pad_left
          << " " << t.out_h << " " << t.out_w << "\n";
      detail::Json j;
      j["file_name"] = r.file_name;
      j["scale"] = t.scale;
      j["pad_top"] = t.pad_top;
      j["pad_left"] = t.pad_left;
      j["out_h"] = t.out_h;
      j["out_w"] = t.out_w;
      transforms.push_back(std::move(j));
    }
  }

  if (!a.out.empty()) {
    detail::Json doc;
    doc["num_images"] = s.num_images;
    doc["num_annotated_images"] = s.num_annotated_images;
    doc["total_instances"] = s.total_instances;
    doc["min_pixel_area"] = s.min_pixel_area;
    doc["max_pixel_area"] = s.max_pixel_area;
    detail::Json per = detail::Json::object();
    for (const auto& [cat, n] : s.per_category) per[cat] = n;
    doc["per_category"] = std::move(per);
    if (a.transform) doc["transforms"] = std::move(transforms);
    write_file(a.out, doc.dump(1) + "\n");
  }
  return kOk;
}

// ---- evaluate / sweep ------------------------------------------------------

struct EvalArgs {
  std::string gt;
  std::string dt;
  std::string mode = "mask";
  double min_conf = 0.0;
  std::size_t max_dets = 512;
  std::vector<double> confidences{0.5, 0.7, 0.9};
  std::string out;
};

struct LoadedEval {
  CocoDataset dataset;
  std::vector<DetectionInstance> detections;
  EvalParams params;
};

LoadedEval load_eval(const EvalArgs& a) {
  LoadedEval l;
  l.params.mode = parse_eval_mode(a.mode);
  l.params.min_confidence = a.min_conf;
  l.params.max_detections_per_image = a.max_dets;
  l.dataset = with_file(a.gt, [&] { return import_coco(read_file(a.gt)); });
  l.detections = with_file(a.dt, [&] { return parse_coco_results(read_file(a.dt), l.dataset); });
  return l;
}

int run_evaluate(const EvalArgs& a, std::ostream& out) {
  const LoadedEval l = load_eval(a);
  const EvalSummary s = evaluate(l.dataset.records, l.detections, l.params);
  out << "mode " << to_string(s.mode) << ", " << s.detection_count << " detections, "
      << s.num_ground_truths << " ground truths\n";
  out << format_summary_table(s);
  if (!a.out.empty()) write_file(a.out, summary_to_json(s));
  return kOk;
}

int run_sweep(const EvalArgs& a, std::ostream& out) {
  const LoadedEval l = load_eval(a);
  const auto rows = confidence_sweep(l.dataset.records, l.detections, l.params, a.confidences);
  out << format_sweep_table(rows);
  if (!a.out.empty()) write_file(a.out, sweep_to_json(rows));
  return kOk;
}

// ---- plan ------------------------------------------------------------------

struct PlanArgs {
  bool builtin = false;
  std::string file;
  bool validate = false;
  bool against_builtin = false;
  std::string emit;
  std::string out;
};

int run_plan(const PlanArgs& a, std::ostream& out, std::ostream& err) {
  if (a.builtin == !a.file.empty()) {
    err << "plan: give exactly one of --builtin or --file FILE\n";
    return kUsage;
  }
  const TransferPlan plan =
      a.builtin ? builtin_plan() : with_file(a.file, [&] { return parse_plan(read_file(a.file)); });

  int status = kOk;
  if (a.validate || a.against_builtin) {
    const TransferPlan reference = builtin_plan();
    const auto violations = validate_plan(plan, a.against_builtin ? &reference : nullptr);
    for (const auto& v : violations) {
      out << to_string(v.kind) << " " << (v.model_id.empty() ? "-" : v.model_id) << ": "
          << v.message << "\n";
    }
    out << violations.size() << " violations\n";
    if (!violations.empty()) status = kFindings;
  }
  if (!a.emit.empty()) out << emit_config(plan, a.emit);
  if (!a.out.empty()) write_file(a.out, serialize_plan(plan));
  if (!a.validate && !a.against_builtin && a.emit.empty() && a.out.empty()) {
    out << "stage model  parent  layers     aug  epochs  total\n";
    for (const auto& s : plan.stages) {
      char line[128];
      std::snprintf(line, sizeof(line), "%5d %-6s %-7s %-10s %-4s %6lld %6lld\n", s.tl_stage,
                    s.model_id.c_str(), s.parent.c_str(), to_string(s.layers),
                    s.augmentation ? "Y" : "N", static_cast<long long>(s.epochs),
                    static_cast<long long>(s.total_epochs));
      out << line;
    }
  }
  return status;
}

// ---- kernel ----------------------------------------------------------------

struct KernelArgs {
  std::string grid;
  std::vector<double> roi;
  std::int64_t out_h = 7;
  std::int64_t out_w = 7;
  std::int64_t samples = kDefaultSamplesPerBin;
  std::string out;
};

// Plain-text grid: `channels height width` followed by the values in
// (channel, row, col) order, whitespace separated.
FeatureGrid parse_grid_text(const std::string& text) {
  std::istringstream in(text);
  std::int64_t c = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;
  if (!(in >> c >> h >> w) || c < 1 || h < 1 || w < 1) {
    throw Error(ErrorKind::Parse, "grid header must be 'channels height width' (all >= 1)");
  }
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(c * h * w));
  double v = 0.0;
  while (in >> v) values.push_back(v);
  if (!in.eof()) {
    throw Error(ErrorKind::Parse, "non-numeric grid value after " + std::to_string(values.size()) +
                                      " values");
  }
  if (values.size() != static_cast<std::size_t>(c * h * w)) {
    throw Error(ErrorKind::Parse, "grid declares " + std::to_string(c * h * w) + " values, found " +
                                      std::to_string(values.size()));
  }
  return FeatureGrid(c, h, w, std::move(values));
}

std::string format_grid(const FeatureGrid& g) {
  std::string s = std::to_string(g.channels()) + " " + std::to_string(g.height()) + " " +
                  std::to_string(g.width()) + "\n";
  for (std::int64_t ch = 0; ch < g.channels(); ++ch) {
    if (ch > 0) s += "\n";
    for (std::int64_t r = 0; r < g.height(); ++r) {
      for (std::int64_t col = 0; col < g.width(); ++col) {
        if (col > 0) s += " ";
        s += fixed(g.at(ch, r, col), 6);
      }
      s += "\n";
    }
  }
  return s;
}

int run_kernel(const KernelArgs& a, std::ostream& out) {
  const FeatureGrid grid = with_file(a.grid, [&] { return parse_grid_text(read_file(a.grid)); });
  const Roi roi{a.roi[0], a.roi[1], a.roi[2], a.roi[3]};
  const std::string text = format_grid(roi_align(grid, roi, a.out_h, a.out_w, a.samples));
  out << text;
  if (!a.out.empty()) write_file(a.out, text);
  return kOk;
}

}  // namespace

int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Waste-bottle instance segmentation dataset and evaluation toolkit", "bottleseg"};
  app.require_subcommand(1);

  ConvertArgs conv;
  auto* convert = app.add_subcommand("convert", "Convert a VIA polygon project to COCO JSON");
  convert->add_option("--via", conv.via, "VIA 2.x project or annotation export")->required();
  convert->add_option("--dims", conv.dims, "Manifest of 'file_name height width' rows")->required();
  convert->add_option("--out", conv.out, "COCO dataset output path")->required();
  convert->add_option("--categories", conv.categories, "Ordered category names (default: sorted labels)")
      ->delimiter(',');
  convert->add_option("--label-key", conv.options.label_key, "region_attributes key with the class label")
      ->capture_default_str();
  convert->add_option("--default-label", conv.options.default_label, "Label for regions without one")
      ->capture_default_str();

  StatsArgs st;
  auto* stats = app.add_subcommand("stats", "Dataset statistics and resize transforms");
  stats->add_option("--coco", st.coco, "COCO dataset");
  stats->add_option("--via", st.via, "VIA project (with --dims)");
  stats->add_option("--dims", st.dims, "Dimension manifest for --via");
  stats->add_flag("--transform", st.transform, "Print the square resize/pad transform per image");
  stats->add_option("--target", st.target, "Square output size")->capture_default_str()
      ->check(CLI::PositiveNumber);
  stats->add_option("--out", st.out, "Write statistics JSON here");

  EvalArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "COCO mAP evaluation of detections");
  EvalArgs sw;
  auto* sweep = app.add_subcommand("sweep", "mAP across detection minimum confidences");
  for (auto [cmd, args] : {std::pair{evaluate_cmd, &ev}, std::pair{sweep, &sw}}) {
    cmd->add_option("--gt", args->gt, "Ground-truth COCO dataset")->required();
    cmd->add_option("--dt", args->dt, "COCO results array")->required();
    cmd->add_option("--mode", args->mode, "mask or bbox")->capture_default_str()
        ->check(CLI::IsMember({"mask", "segm", "bbox"}));
    cmd->add_option("--max-dets", args->max_dets, "Detections kept per image")
        ->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--out", args->out, "Write machine-readable results here");
  }
  evaluate_cmd->add_option("--min-conf", ev.min_conf, "Detection minimum confidence")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--conf", sw.confidences, "Comma-separated confidences")
      ->delimiter(',')->capture_default_str()->check(CLI::Range(0.0, 1.0));

  PlanArgs pl;
  auto* plan = app.add_subcommand("plan", "Transfer-learning plan validation and config emission");
  plan->add_flag("--builtin", pl.builtin, "Use the built-in M1..M15 plan");
  plan->add_option("--file", pl.file, "Plan JSON file");
  plan->add_flag("--validate", pl.validate, "Report structural violations");
  plan->add_flag("--against-builtin", pl.against_builtin,
                 "Also report fields that differ from the built-in plan");
  plan->add_option("--emit", pl.emit, "Emit the training config for this model id");
  plan->add_option("--out", pl.out, "Write the plan JSON here");

  KernelArgs kn;
  auto* kernel = app.add_subcommand("kernel", "RoIAlign debug kernel on a plain-text grid");
  kernel->add_option("--grid", kn.grid, "Grid file: 'C H W' then C*H*W values")->required();
  kernel->add_option("--roi", kn.roi, "x1,y1,x2,y2 in grid coordinates")
      ->required()->delimiter(',')->expected(4);
  kernel->add_option("--out-h", kn.out_h, "Output height")->capture_default_str()
      ->check(CLI::PositiveNumber);
  kernel->add_option("--out-w", kn.out_w, "Output width")->capture_default_str()
      ->check(CLI::PositiveNumber);
  kernel->add_option("--samples", kn.samples, "Samples per bin axis")->capture_default_str()
      ->check(CLI::PositiveNumber);
  kernel->add_option("--out", kn.out, "Also write the output grid here");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*convert) return run_convert(conv, out);
    if (*stats) return run_stats(st, out, err);
    if (*evaluate_cmd) return run_evaluate(ev, out);
    if (*sweep) return run_sweep(sw, out);
    if (*plan) return run_plan(pl, out, err);
    if (*kernel) return run_kernel(kn, out);
  } catch (const InputFailure& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code_for(e.kind());
  }
  return kUsage;
}

}  // namespace bottleseg::cli
