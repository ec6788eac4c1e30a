#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lift3d/geometry.h"
#include "lift3d/loss_math.h"

namespace lift3d {

struct DetectionRecord {
  std::string image_id;
  int class_id = 0;
  double score = 1.0;
  OrientedBox3D box;
};

// Exact volume of the intersection of two oriented boxes: box a's
// polyhedron is clipped by the six half-spaces of box b, and the volume is
// taken with the divergence theorem over fan-triangulated faces.
double intersection_volume(const OrientedBox3D& a, const OrientedBox3D& b);

// Intersection over union in [0, 1]; exactly symmetric in its arguments.
double iou3d(const OrientedBox3D& a, const OrientedBox3D& b);

struct MatchResult {
  std::vector<size_t> order;  // detection indices by descending score
  std::vector<int> det_to_gt; // per detection index, -1 if unmatched
  std::vector<double> det_iou;
  std::vector<int> gt_to_det; // per gt index, -1 if unmatched

  size_t true_positives() const;
};

// Greedy matching of one image: detections in descending score order (input
// order on ties) each take the unmatched same-class GT of highest IoU,
// provided IoU >= iou_thresh - kIouMatchTolerance. IoU ties go to the lower
// GT index.
inline constexpr double kIouMatchTolerance = 1e-9;

MatchResult match_detections(const std::vector<DetectionRecord>& dets,
                             const std::vector<DetectionRecord>& gts,
                             double iou_thresh);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  size_t tp = 0;
  size_t fp = 0;
  size_t fn = 0;
};

// Pooled over images and classes; 0/0 is 0.
PrecisionRecall precision_recall(const std::vector<DetectionRecord>& dets,
                                 const std::vector<DetectionRecord>& gts,
                                 double iou_thresh);

// Per-class AP with 101-point recall interpolation. Classes without GT are
// omitted.
std::map<int, double> average_precision(const std::vector<DetectionRecord>& dets,
                                        const std::vector<DetectionRecord>& gts,
                                        double iou_thresh);

// AP from a ranked list of TP/FP flags and the number of GT, using 101-point
// interpolation of the right-to-left running maximum of precision.
double ap_from_ranking(const std::vector<bool>& is_tp, size_t num_gt);

std::vector<double> default_iou_thresholds();  // 0.05, 0.10, ..., 0.50

struct EvalOptions {
  std::vector<double> iou_thresholds = default_iou_thresholds();
  double pr_threshold = 0.25;
  std::optional<ClassPartition> partition;
};

struct EvalReport {
  std::vector<double> thresholds;
  std::map<int, std::vector<double>> per_class_ap;  // AP at each threshold
  std::map<int, double> per_class_mean_ap;
  std::vector<double> ap_at_threshold;  // mean over classes
  std::optional<double> ap3d;           // mean over thresholds and classes
  std::optional<double> ap3d_original;
  std::optional<double> ap3d_new;
  double pr_threshold = 0.25;
  PrecisionRecall overall;
  std::map<int, PrecisionRecall> per_class_pr;

  std::string to_json() const;
  std::string to_table() const;
};

EvalReport mean_ap_over_thresholds(const std::vector<DetectionRecord>& dets,
                                   const std::vector<DetectionRecord>& gts,
                                   const EvalOptions& options = {});

// Precision/recall only; AP fields stay empty.
EvalReport precision_recall_report(const std::vector<DetectionRecord>& dets,
                                   const std::vector<DetectionRecord>& gts,
                                   double pr_threshold);

}  // namespace lift3d
