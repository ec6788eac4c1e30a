#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lift3d/box_records.h"
#include "lift3d/category_gate.h"
#include "lift3d/cloud_clean.h"
#include "lift3d/eval3d.h"
#include "lift3d/geometry.h"
#include "lift3d/loss_math.h"

namespace lift3d {

struct ImageEntry {
  std::string image_id;
  std::string depth_path;  // absolute after ingest
  std::string mask_path;
  CameraIntrinsics intrinsics;
  std::map<int, int> class_label_map;  // instance id -> class id
};

// Manifest (JSON). Relative paths resolve against the manifest directory.
//
//   {"up_axis": "Y",
//    "classes": [{"id": 1, "name": "chair"}, ...],
//    "partition": "partition.json",
//    "embeddings": "embeddings.json",
//    "reference_counts": "reference_counts.json",
//    "images": [{"image_id": "0001",
//                "depth_path": "0001_depth.bin", "mask_path": "0001_mask.bin",
//                "intrinsics": {"fx": .., "fy": .., "px": .., "py": ..},
//                "class_label_map": {"1": 1, "2": 3}}]}
struct DatasetManifest {
  std::vector<ImageEntry> images;
  std::optional<Axis> up_axis;
  std::vector<ClassEntry> classes;
  std::string partition_path;
  std::string embeddings_path;
  std::string reference_counts_path;
};

struct GateOptions {
  bool enabled = true;
};

struct FitOptions {
  Axis up_axis = Axis::Y;  // the manifest's up_axis takes precedence
};

struct EvalConfig {
  std::vector<double> iou_thresholds = default_iou_thresholds();
  double pr_threshold = 0.25;
  std::string partition_path;  // optional
};

// Config (JSON); every key optional:
//
//   {"clean": {"radius": 0.1, "min_neighbors": 8, "knn_k": 20,
//              "std_ratio": 2.0},
//    "gate": {"enabled": true},
//    "fit": {"up_axis": "Y"},
//    "eval": {"iou_thresholds": [0.05, ...], "pr_threshold": 0.25,
//             "partition": "partition.json"},
//    "parallelism": {"workers": 1}}
struct PipelineConfig {
  CleanConfig clean;
  GateOptions gate;
  FitOptions fit;
  EvalConfig eval;
  int workers = 1;

  void validate() const;
};

DatasetManifest ingest_manifest(const std::string& path);
PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config(const std::string& json_text,
                            const std::string& base_dir = ".");

// {"original": [ids], "new": [ids], "background": id}
ClassPartition read_partition(const std::string& path);

inline constexpr const char* kSkipBelowThreshold = "below point threshold";
inline constexpr const char* kSkipDegenerate = "degenerate cloud";
inline constexpr const char* kSkipNoDepth = "no valid depth";

struct SkippedInstance {
  int instance_id = 0;
  int class_id = 0;
  size_t n_points = 0;
  std::string reason;
};

struct ImageResult {
  std::string image_id;
  size_t instances = 0;
  std::vector<BoxRecord> boxes;
  std::vector<SkippedInstance> skipped;
  std::optional<std::string> error;
};

struct GenerateSummary {
  size_t images = 0;
  size_t failed_images = 0;
  size_t instances = 0;
  size_t boxes = 0;
  std::map<std::string, size_t> skipped;
};

// Thresholds from the manifest's reference counts and embeddings, or nullopt
// when gating is disabled.
std::optional<ThresholdTable> build_gate(const DatasetManifest& manifest,
                                         const PipelineConfig& config);

// backproject -> clean -> point-threshold gate -> yaw box fit for every
// instance of one image. Failures are captured in the result.
ImageResult process_image(const ImageEntry& entry, const PipelineConfig& config,
                          Axis up_axis,
                          const std::optional<ThresholdTable>& thresholds);

// Writes one JSON line per pseudo box, ordered by (manifest order, instance
// id), and a stats JSON file. Output bytes do not depend on the worker count.
GenerateSummary run_generate(const DatasetManifest& manifest,
                             const PipelineConfig& config,
                             const std::string& out_path,
                             const std::string& stats_path);

// Predictions without scores are evaluated in pseudo-box mode (score 1,
// precision/recall only).
EvalReport run_eval(const std::string& pred_path, const std::string& gt_path,
                    const PipelineConfig& config);

}  // namespace lift3d
