#include "lift3d/eval3d.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <Eigen/Geometry>
#include <json.hpp>

namespace lift3d {
namespace {

using Face = std::vector<Eigen::Vector3d>;
using Polyhedron = std::vector<Face>;

// Outward-oriented (counter-clockwise seen from outside) corner indices of
// the six faces, in the unit-box corner order.
constexpr int kBoxFaces[6][4] = {{0, 1, 3, 2}, {4, 6, 7, 5}, {0, 4, 5, 1},
                                 {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 5, 7, 3}};

Polyhedron box_polyhedron(const OrientedBox3D& box,
                          const Eigen::Vector3d& origin) {
  const Corners c = box_corners(box);
  Polyhedron poly(6);
  for (int f = 0; f < 6; ++f) {
    for (int k : kBoxFaces[f]) poly[f].push_back(c.col(k) - origin);
  }
  return poly;
}

// Keeps the part of `poly` with normal.x <= offset.
Polyhedron clip(const Polyhedron& poly, const Eigen::Vector3d& normal,
                double offset, double tol) {
  bool any_inside = false;
  bool any_outside = false;
  for (const Face& face : poly) {
    for (const auto& v : face) {
      const double d = normal.dot(v) - offset;
      any_inside |= d < -tol;
      any_outside |= d > tol;
    }
  }
  if (!any_outside) return poly;
  if (!any_inside) return {};

  Polyhedron out;
  std::vector<Eigen::Vector3d> cap;
  for (const Face& face : poly) {
    Face kept;
    for (size_t i = 0; i < face.size(); ++i) {
      const Eigen::Vector3d& p = face[i];
      const Eigen::Vector3d& q = face[(i + 1) % face.size()];
      const double dp = normal.dot(p) - offset;
      const double dq = normal.dot(q) - offset;
      if (dp <= tol) {
        kept.push_back(p);
        if (dp >= -tol) cap.push_back(p);
      }
      if ((dp < -tol && dq > tol) || (dp > tol && dq < -tol)) {
        const Eigen::Vector3d x = p + (q - p) * (dp / (dp - dq));
        kept.push_back(x);
        cap.push_back(x);
      }
    }
    if (kept.size() >= 3) out.push_back(std::move(kept));
  }

  // Cap polygon on the cutting plane, outward normal = +normal.
  Face unique;
  for (const auto& p : cap) {
    bool dup = false;
    for (const auto& u : unique) {
      if ((u - p).squaredNorm() <= 100.0 * tol * tol) {
        dup = true;
        break;
      }
    }
    if (!dup) unique.push_back(p);
  }
  if (unique.size() >= 3) {
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : unique) centroid += p;
    centroid /= static_cast<double>(unique.size());
    const Eigen::Vector3d axis_u = normal.unitOrthogonal();
    const Eigen::Vector3d axis_w = normal.cross(axis_u);
    std::vector<std::pair<double, size_t>> by_angle;
    for (size_t i = 0; i < unique.size(); ++i) {
      const Eigen::Vector3d r = unique[i] - centroid;
      by_angle.emplace_back(std::atan2(r.dot(axis_w), r.dot(axis_u)), i);
    }
    std::sort(by_angle.begin(), by_angle.end());
    Face face;
    for (const auto& [angle, i] : by_angle) face.push_back(unique[i]);
    out.push_back(std::move(face));
  }
  return out;
}

double polyhedron_volume(const Polyhedron& poly) {
  double six_v = 0.0;
  for (const Face& face : poly) {
    for (size_t t = 1; t + 1 < face.size(); ++t) {
      six_v += face[0].dot(face[t].cross(face[t + 1]));
    }
  }
  return six_v / 6.0;
}

// Strict weak order on boxes; used to make iou3d exactly symmetric.
bool box_less(const OrientedBox3D& a, const OrientedBox3D& b) {
  auto key = [](const OrientedBox3D& x) {
    std::array<double, 15> k{};
    for (int i = 0; i < 3; ++i) {
      k[i] = x.center[i];
      k[3 + i] = x.dims[i];
    }
    for (int i = 0; i < 9; ++i) k[6 + i] = x.rotation.data()[i];
    return k;
  };
  return key(a) < key(b);
}

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

std::map<std::string, std::vector<size_t>> group_by_image(
    const std::vector<DetectionRecord>& records) {
  std::map<std::string, std::vector<size_t>> groups;
  for (size_t i = 0; i < records.size(); ++i) {
    groups[records[i].image_id].push_back(i);
  }
  return groups;
}

template <typename T>
std::vector<T> pick(const std::vector<T>& all, const std::vector<size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (size_t i : idx) out.push_back(all[i]);
  return out;
}

// Per-detection TP flag (by global detection index) after per-image
// matching, plus GT counts per class.
struct MatchedSet {
  std::vector<bool> is_tp;
  std::map<int, size_t> gt_per_class;
};

MatchedSet match_all(const std::vector<DetectionRecord>& dets,
                     const std::vector<DetectionRecord>& gts,
                     double iou_thresh) {
  MatchedSet m;
  m.is_tp.assign(dets.size(), false);
  for (const auto& g : gts) ++m.gt_per_class[g.class_id];
  const auto det_groups = group_by_image(dets);
  const auto gt_groups = group_by_image(gts);
  for (const auto& [image, det_idx] : det_groups) {
    auto it = gt_groups.find(image);
    if (it == gt_groups.end()) continue;
    const MatchResult r =
        match_detections(pick(dets, det_idx), pick(gts, it->second), iou_thresh);
    for (size_t k = 0; k < det_idx.size(); ++k) {
      m.is_tp[det_idx[k]] = r.det_to_gt[k] >= 0;
    }
  }
  return m;
}

std::optional<double> mean_of(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json pr_json(const PrecisionRecall& pr) {
  return {{"precision", pr.precision}, {"recall", pr.recall}, {"tp", pr.tp},
          {"fp", pr.fp},               {"fn", pr.fn}};
}

}  // namespace

double intersection_volume(const OrientedBox3D& a, const OrientedBox3D& b) {
  const double ra = 0.5 * a.dims.norm();
  const double rb = 0.5 * b.dims.norm();
  if ((a.center - b.center).norm() > ra + rb) return 0.0;

  const double scale = std::max(a.dims.maxCoeff(), b.dims.maxCoeff());
  const double tol = 1e-12 * std::max(1.0, scale);
  const Eigen::Vector3d origin = a.center;
  Polyhedron poly = box_polyhedron(a, origin);
  const Eigen::Vector3d center_b = b.center - origin;
  for (int axis = 0; axis < 3 && !poly.empty(); ++axis) {
    const Eigen::Vector3d n = b.rotation.col(axis);
    const double half = 0.5 * b.dims[axis];
    const double mid = n.dot(center_b);
    poly = clip(poly, n, mid + half, tol);
    if (poly.empty()) break;
    poly = clip(poly, -n, -mid + half, tol);
  }
  const double volume = poly.empty() ? 0.0 : polyhedron_volume(poly);
  return volume < 1e-12 ? 0.0 : volume;
}

double iou3d(const OrientedBox3D& a, const OrientedBox3D& b) {
  const bool swap = box_less(b, a);
  const OrientedBox3D& first = swap ? b : a;
  const OrientedBox3D& second = swap ? a : b;
  const double inter = intersection_volume(first, second);
  if (inter <= 0.0) return 0.0;
  const double uni = first.volume() + second.volume() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

size_t MatchResult::true_positives() const {
  return static_cast<size_t>(
      std::count_if(det_to_gt.begin(), det_to_gt.end(), [](int g) { return g >= 0; }));
}

MatchResult match_detections(const std::vector<DetectionRecord>& dets,
                             const std::vector<DetectionRecord>& gts,
                             double iou_thresh) {
  MatchResult r;
  r.order.resize(dets.size());
  std::iota(r.order.begin(), r.order.end(), size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(), [&](size_t x, size_t y) {
    return dets[x].score > dets[y].score;
  });
  r.det_to_gt.assign(dets.size(), -1);
  r.det_iou.assign(dets.size(), 0.0);
  r.gt_to_det.assign(gts.size(), -1);
  for (size_t d : r.order) {
    int best = -1;
    double best_iou = -1.0;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (r.gt_to_det[g] >= 0 || gts[g].class_id != dets[d].class_id) continue;
      const double iou = iou3d(dets[d].box, gts[g].box);
      if (iou >= iou_thresh - kIouMatchTolerance && iou > best_iou) {
        best = static_cast<int>(g);
        best_iou = iou;
      }
    }
    if (best >= 0) {
      r.det_to_gt[d] = best;
      r.det_iou[d] = best_iou;
      r.gt_to_det[best] = static_cast<int>(d);
    }
  }
  return r;
}

PrecisionRecall precision_recall(const std::vector<DetectionRecord>& dets,
                                 const std::vector<DetectionRecord>& gts,
                                 double iou_thresh) {
  const MatchedSet m = match_all(dets, gts, iou_thresh);
  PrecisionRecall pr;
  pr.tp = static_cast<size_t>(std::count(m.is_tp.begin(), m.is_tp.end(), true));
  pr.fp = dets.size() - pr.tp;
  pr.fn = gts.size() - pr.tp;
  pr.precision = safe_div(pr.tp, pr.tp + pr.fp);
  pr.recall = safe_div(pr.tp, pr.tp + pr.fn);
  return pr;
}

double ap_from_ranking(const std::vector<bool>& is_tp, size_t num_gt) {
  if (num_gt == 0 || is_tp.empty()) return 0.0;
  const size_t n = is_tp.size();
  std::vector<double> recall(n), precision(n);
  size_t tp = 0;
  for (size_t i = 0; i < n; ++i) {
    tp += is_tp[i] ? 1 : 0;
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_gt);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (size_t i = n - 1; i-- > 0;) {
    precision[i] = std::max(precision[i], precision[i + 1]);
  }
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double target = k / 100.0;
    auto it = std::lower_bound(recall.begin(), recall.end(), target);
    if (it != recall.end()) sum += precision[it - recall.begin()];
  }
  return sum / 101.0;
}

std::map<int, double> average_precision(const std::vector<DetectionRecord>& dets,
                                        const std::vector<DetectionRecord>& gts,
                                        double iou_thresh) {
  const MatchedSet m = match_all(dets, gts, iou_thresh);
  std::map<int, std::vector<size_t>> by_class;
  for (size_t i = 0; i < dets.size(); ++i) by_class[dets[i].class_id].push_back(i);

  std::map<int, double> ap;
  for (const auto& [cls, num_gt] : m.gt_per_class) {
    std::vector<size_t> ranked = by_class[cls];
    std::stable_sort(ranked.begin(), ranked.end(), [&](size_t x, size_t y) {
      return dets[x].score > dets[y].score;
    });
    std::vector<bool> flags;
    flags.reserve(ranked.size());
    for (size_t i : ranked) flags.push_back(m.is_tp[i]);
    ap[cls] = ap_from_ranking(flags, num_gt);
  }
  return ap;
}

std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int k = 1; k <= 10; ++k) t.push_back(k / 20.0);
  return t;
}

EvalReport precision_recall_report(const std::vector<DetectionRecord>& dets,
                                   const std::vector<DetectionRecord>& gts,
                                   double pr_threshold) {
  EvalReport report;
  report.pr_threshold = pr_threshold;
  report.overall = precision_recall(dets, gts, pr_threshold);
  std::map<int, std::vector<DetectionRecord>> det_by_class, gt_by_class;
  for (const auto& d : dets) det_by_class[d.class_id].push_back(d);
  for (const auto& g : gts) gt_by_class[g.class_id].push_back(g);
  std::set<int> classes;
  for (const auto& [c, v] : det_by_class) classes.insert(c);
  for (const auto& [c, v] : gt_by_class) classes.insert(c);
  for (int c : classes) {
    report.per_class_pr[c] =
        precision_recall(det_by_class[c], gt_by_class[c], pr_threshold);
  }
  return report;
}

EvalReport mean_ap_over_thresholds(const std::vector<DetectionRecord>& dets,
                                   const std::vector<DetectionRecord>& gts,
                                   const EvalOptions& options) {
  EvalReport report = precision_recall_report(dets, gts, options.pr_threshold);
  report.thresholds = options.iou_thresholds;
  for (double t : options.iou_thresholds) {
    const auto ap = average_precision(dets, gts, t);
    std::vector<double> values;
    for (const auto& [cls, v] : ap) {
      report.per_class_ap[cls].push_back(v);
      values.push_back(v);
    }
    report.ap_at_threshold.push_back(mean_of(values).value_or(0.0));
  }
  std::vector<double> all, original, novel;
  for (const auto& [cls, values] : report.per_class_ap) {
    const double m = *mean_of(values);
    report.per_class_mean_ap[cls] = m;
    all.push_back(m);
    if (options.partition) {
      if (options.partition->original.count(cls)) original.push_back(m);
      if (options.partition->novel.count(cls)) novel.push_back(m);
    }
  }
  report.ap3d = mean_of(all);
  if (!report.ap3d && !options.iou_thresholds.empty()) report.ap3d = 0.0;
  if (options.partition) {
    report.ap3d_original = mean_of(original);
    report.ap3d_new = mean_of(novel);
  }
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::json per_class = nlohmann::json::object();
  std::set<int> classes;
  for (const auto& [c, v] : per_class_ap) classes.insert(c);
  for (const auto& [c, v] : per_class_pr) classes.insert(c);
  for (int c : classes) {
    nlohmann::json entry;
    if (auto it = per_class_ap.find(c); it != per_class_ap.end()) {
      entry["AP3D"] = per_class_mean_ap.at(c);
      entry["AP3D_at_threshold"] = it->second;
    }
    if (auto it = per_class_pr.find(c); it != per_class_pr.end()) {
      entry["pr"] = pr_json(it->second);
    }
    per_class[std::to_string(c)] = entry;
  }
  nlohmann::json j = {{"AP3D", optional_json(ap3d)},
                      {"AP3D_original", optional_json(ap3d_original)},
                      {"AP3D_new", optional_json(ap3d_new)},
                      {"iou_thresholds", thresholds},
                      {"AP3D_at_threshold", ap_at_threshold},
                      {"pr_threshold", pr_threshold},
                      {"precision", overall.precision},
                      {"recall", overall.recall},
                      {"counts", {{"tp", overall.tp}, {"fp", overall.fp}, {"fn", overall.fn}}},
                      {"per_class", per_class}};
  return j.dump(2);
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  char line[160];
  auto fmt = [](const std::optional<double>& v) {
    char buf[32];
    if (!v) return std::string("     -");
    std::snprintf(buf, sizeof(buf), "%6.2f", 100.0 * *v);
    return std::string(buf);
  };
  out << "AP3D " << fmt(ap3d) << "   original " << fmt(ap3d_original)
      << "   new " << fmt(ap3d_new) << "\n";
  std::snprintf(line, sizeof(line),
                "precision %6.2f  recall %6.2f  (IoU >= %.2f; tp %zu fp %zu fn %zu)\n",
                100.0 * overall.precision, 100.0 * overall.recall, pr_threshold,
                overall.tp, overall.fp, overall.fn);
  out << line;
  out << " class      AP3D   prec  recall\n";
  std::set<int> classes;
  for (const auto& [c, v] : per_class_mean_ap) classes.insert(c);
  for (const auto& [c, v] : per_class_pr) classes.insert(c);
  for (int c : classes) {
    std::optional<double> ap;
    if (auto it = per_class_mean_ap.find(c); it != per_class_mean_ap.end()) {
      ap = it->second;
    }
    const PrecisionRecall pr =
        per_class_pr.count(c) ? per_class_pr.at(c) : PrecisionRecall{};
    std::snprintf(line, sizeof(line), "%6d  %s  %5.1f  %6.1f\n", c,
                  fmt(ap).c_str(), 100.0 * pr.precision, 100.0 * pr.recall);
    out << line;
  }
  return out.str();
}

}  // namespace lift3d
