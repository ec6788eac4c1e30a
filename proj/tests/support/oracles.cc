#include "support/oracles.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

namespace lift3d::testing {

std::vector<size_t> brute_radius_inliers(const std::vector<Eigen::Vector3d>& pts,
                                         double radius, int min_neighbors) {
  std::vector<size_t> kept;
  for (size_t i = 0; i < pts.size(); ++i) {
    int count = 0;
    for (size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      const double dx = pts[i].x() - pts[j].x();
      const double dy = pts[i].y() - pts[j].y();
      const double dz = pts[i].z() - pts[j].z();
      if (dx * dx + dy * dy + dz * dz <= radius * radius) ++count;
    }
    if (count >= min_neighbors) kept.push_back(i);
  }
  return kept;
}

std::vector<size_t> brute_statistical_inliers(
    const std::vector<Eigen::Vector3d>& pts, int k, double std_ratio) {
  std::vector<size_t> kept;
  if (pts.size() <= static_cast<size_t>(k)) {
    for (size_t i = 0; i < pts.size(); ++i) kept.push_back(i);
    return kept;
  }
  std::vector<double> means(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    std::vector<double> d;
    for (size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      const double dx = pts[i].x() - pts[j].x();
      const double dy = pts[i].y() - pts[j].y();
      const double dz = pts[i].z() - pts[j].z();
      d.push_back(std::sqrt(dx * dx + dy * dy + dz * dz));
    }
    std::sort(d.begin(), d.end());
    double sum = 0.0;
    for (int n = 0; n < k; ++n) sum += d[n];
    means[i] = sum / k;
  }
  double mu = 0.0;
  for (double m : means) mu += m;
  mu /= static_cast<double>(means.size());
  double var = 0.0;
  for (double m : means) var += (m - mu) * (m - mu);
  const double sigma = std::sqrt(var / static_cast<double>(means.size()));
  for (size_t i = 0; i < means.size(); ++i) {
    if (means[i] <= mu + std_ratio * sigma) kept.push_back(i);
  }
  return kept;
}

double yaw_sweep_min_volume(const std::vector<Eigen::Vector3d>& pts, Axis up,
                            double step_deg) {
  const int k = static_cast<int>(up);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : pts) {
    lo = std::min(lo, p[k]);
    hi = std::max(hi, p[k]);
  }
  double best = std::numeric_limits<double>::infinity();
  const int steps = static_cast<int>(std::round(90.0 / step_deg));
  for (int s = 0; s < steps; ++s) {
    const double angle = s * step_deg * std::numbers::pi / 180.0;
    const Eigen::Matrix3d R = rotation_about_axis(up, angle);
    Eigen::Vector3d mn = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d mx = -mn;
    for (const auto& p : pts) {
      const Eigen::Vector3d local = R.transpose() * p;
      mn = mn.cwiseMin(local);
      mx = mx.cwiseMax(local);
    }
    Eigen::Vector3d ext = mx - mn;
    ext[k] = hi - lo;
    best = std::min(best, ext.prod());
  }
  return best;
}

double monte_carlo_iou(const OrientedBox3D& a, const OrientedBox3D& b,
                       int samples, std::mt19937_64& rng) {
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (const auto* box : {&a, &b}) {
    const Corners c = box_corners(*box);
    for (int k = 0; k < 8; ++k) {
      lo = lo.cwiseMin(c.col(k));
      hi = hi.cwiseMax(c.col(k));
    }
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  long in_both = 0, in_either = 0;
  for (int s = 0; s < samples; ++s) {
    const Eigen::Vector3d p(lo.x() + (hi.x() - lo.x()) * unit(rng),
                            lo.y() + (hi.y() - lo.y()) * unit(rng),
                            lo.z() + (hi.z() - lo.z()) * unit(rng));
    const bool ia = a.contains(p);
    const bool ib = b.contains(p);
    in_both += (ia && ib) ? 1 : 0;
    in_either += (ia || ib) ? 1 : 0;
  }
  return in_either == 0 ? 0.0 : static_cast<double>(in_both) / in_either;
}

double axis_aligned_iou(const OrientedBox3D& a, const OrientedBox3D& b) {
  double inter = 1.0;
  for (int i = 0; i < 3; ++i) {
    const double lo = std::max(a.center[i] - a.dims[i] / 2, b.center[i] - b.dims[i] / 2);
    const double hi = std::min(a.center[i] + a.dims[i] / 2, b.center[i] + b.dims[i] / 2);
    inter *= std::max(0.0, hi - lo);
  }
  return inter / (a.volume() + b.volume() - inter);
}

double all_point_ap(const std::vector<bool>& ranked_tp, size_t num_gt) {
  if (num_gt == 0) return 0.0;
  const size_t n = ranked_tp.size();
  std::vector<double> precision(n);
  size_t tp = 0;
  for (size_t i = 0; i < n; ++i) {
    tp += ranked_tp[i] ? 1 : 0;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  double area = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (!ranked_tp[i]) continue;
    double best = 0.0;
    for (size_t j = i; j < n; ++j) best = std::max(best, precision[j]);
    area += best / static_cast<double>(num_gt);
  }
  return area;
}

bool inside_convex(const Hull2D& hull, const Eigen::Vector2d& p, double tol) {
  const auto& v = hull.vertices;
  for (size_t i = 0; i < v.size(); ++i) {
    const Eigen::Vector2d a = v[i];
    const Eigen::Vector2d b = v[(i + 1) % v.size()];
    const double cross = (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
    if (cross < -tol) return false;
  }
  return true;
}

OrientedBox3D random_box(std::mt19937_64& rng, double center_spread) {
  std::uniform_real_distribution<double> c(-center_spread, center_spread);
  std::uniform_real_distribution<double> d(0.3, 2.0);
  std::normal_distribution<double> g(0.0, 1.0);
  OrientedBox3D box;
  box.center = {c(rng), c(rng), c(rng)};
  box.dims = {d(rng), d(rng), d(rng)};
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  box.rotation = q.normalized().toRotationMatrix();
  return box;
}

}  // namespace lift3d::testing
