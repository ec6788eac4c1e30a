#include "lift3d/box_fit.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lift3d/error.h"

namespace lift3d {
namespace {

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a,
             const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Planar axes (i, j) for a given up axis: the cyclic successors of `up`.
std::pair<int, int> ground_axes(Axis up) {
  const int k = static_cast<int>(up);
  return {(k + 1) % 3, (k + 2) % 3};
}

struct Extents {
  double a_min, a_max, b_min, b_max;
};

template <typename Range>
Extents project_extents(const Range& points, const Eigen::Vector2d& d) {
  const Eigen::Vector2d n(-d.y(), d.x());
  Extents e{std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};
  for (const Eigen::Vector2d& p : points) {
    const double a = p.dot(d);
    const double b = p.dot(n);
    e.a_min = std::min(e.a_min, a);
    e.a_max = std::max(e.a_max, a);
    e.b_min = std::min(e.b_min, b);
    e.b_max = std::max(e.b_max, b);
  }
  return e;
}

Rect2D rect_from_extents(double angle, const Extents& e) {
  const Eigen::Vector2d d(std::cos(angle), std::sin(angle));
  const Eigen::Vector2d n(-d.y(), d.x());
  Rect2D r;
  r.angle = angle;
  r.extent_a = e.a_max - e.a_min;
  r.extent_b = e.b_max - e.b_min;
  r.center = 0.5 * (e.a_min + e.a_max) * d + 0.5 * (e.b_min + e.b_max) * n;
  return r;
}

}  // namespace

double Hull2D::signed_area() const {
  double twice = 0.0;
  for (size_t i = 0; i < vertices.size(); ++i) {
    const auto& p = vertices[i];
    const auto& q = vertices[(i + 1) % vertices.size()];
    twice += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * twice;
}

Hull2D convex_hull_2d(const std::vector<Eigen::Vector2d>& input) {
  if (input.empty()) throw ValidationError("convex_hull_2d: empty input");
  std::vector<Eigen::Vector2d> pts = input;
  auto less = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  };
  std::sort(pts.begin(), pts.end(), less);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return {pts};

  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return {hull};
}

Rect2D min_area_rect_2d(const Hull2D& hull) {
  const auto& v = hull.vertices;
  if (v.empty()) throw ValidationError("min_area_rect_2d: empty hull");
  if (v.size() == 1) {
    Rect2D r;
    r.center = v[0];
    return r;
  }
  if (v.size() == 2) {
    // Zero-width rectangle along the segment; angle in [0, pi).
    const Eigen::Vector2d seg = v[1] - v[0];
    double angle = std::atan2(seg.y(), seg.x());
    if (angle < 0.0) angle += std::numbers::pi;
    if (angle >= std::numbers::pi) angle -= std::numbers::pi;
    Rect2D r = rect_from_extents(
        angle, project_extents(v, {std::cos(angle), std::sin(angle)}));
    r.extent_a = seg.norm();
    r.extent_b = 0.0;
    r.center = 0.5 * (v[0] + v[1]);
    return r;
  }

  constexpr double kQuarter = 0.5 * std::numbers::pi;
  Rect2D best;
  double best_area = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < v.size(); ++i) {
    const Eigen::Vector2d edge = v[(i + 1) % v.size()] - v[i];
    double angle = std::fmod(std::atan2(edge.y(), edge.x()) + 2.0 * std::numbers::pi,
                             kQuarter);
    if (angle < 0.0 || angle >= kQuarter) angle = 0.0;
    const Rect2D r = rect_from_extents(
        angle, project_extents(v, {std::cos(angle), std::sin(angle)}));
    const double area = r.area();
    const bool first = i == 0;
    const double tie = first ? 0.0 : 1e-12 * std::max(area, best_area);
    if (first || area < best_area - tie ||
        (std::abs(area - best_area) <= tie && angle < best.angle)) {
      best = r;
      best_area = std::min(area, best_area);
    }
  }
  return best;
}

Eigen::Vector2d ground_coordinates(const Eigen::Vector3d& p, Axis up) {
  const auto [i, j] = ground_axes(up);
  return {p[i], p[j]};
}

OrientedBox3D min_oriented_box_yaw(const PointCloud& pc, Axis up) {
  if (pc.size() < 3) {
    throw DegenerateCloudError("degenerate cloud: fewer than 3 points");
  }
  std::vector<Eigen::Vector2d> planar;
  planar.reserve(pc.size());
  for (const auto& p : pc.points) planar.push_back(ground_coordinates(p, up));
  const Hull2D hull = convex_hull_2d(planar);
  if (hull.vertices.size() < 3) {
    throw DegenerateCloudError("degenerate cloud: collinear in ground plane");
  }
  const Rect2D rect = min_area_rect_2d(hull);

  // Re-derive extents from every point at the chosen angle so containment
  // holds up to projection roundoff.
  const Rect2D fitted = rect_from_extents(
      rect.angle,
      project_extents(planar, {std::cos(rect.angle), std::sin(rect.angle)}));

  const int k = static_cast<int>(up);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& p : pc.points) {
    lo = std::min(lo, p[k]);
    hi = std::max(hi, p[k]);
  }
  if (!(fitted.extent_a > 0.0) || !(fitted.extent_b > 0.0) || !(hi > lo)) {
    throw DegenerateCloudError("degenerate cloud: zero extent");
  }

  const auto [i, j] = ground_axes(up);
  OrientedBox3D box;
  box.rotation = rotation_about_axis(up, fitted.angle);
  box.center[i] = fitted.center.x();
  box.center[j] = fitted.center.y();
  box.center[k] = 0.5 * (lo + hi);
  box.dims[i] = fitted.extent_a;
  box.dims[j] = fitted.extent_b;
  box.dims[k] = hi - lo;
  return box;
}

}  // namespace lift3d
