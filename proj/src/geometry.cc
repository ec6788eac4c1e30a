#include "lift3d/geometry.h"

#include <cmath>
#include <set>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "lift3d/error.h"

namespace lift3d {

Axis parse_axis(const std::string& name) {
  if (name == "X" || name == "x") return Axis::X;
  if (name == "Y" || name == "y") return Axis::Y;
  if (name == "Z" || name == "z") return Axis::Z;
  throw ValidationError("unknown axis '" + name + "' (expected X, Y or Z)");
}

std::string axis_name(Axis axis) {
  switch (axis) {
    case Axis::X:
      return "X";
    case Axis::Y:
      return "Y";
    case Axis::Z:
      return "Z";
  }
  return "?";
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw ValidationError("intrinsics: focal lengths must be positive");
  }
  if (!std::isfinite(px) || !std::isfinite(py)) {
    throw ValidationError("intrinsics: principal point must be finite");
  }
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d K;
  K << fx, 0, px, 0, fy, py, 0, 0, 1;
  return K;
}

Eigen::Vector2d CameraIntrinsics::project(const Eigen::Vector3d& p) const {
  return {fx * p.x() / p.z() + px, fy * p.y() / p.z() + py};
}

DepthMap::DepthMap(int width, int height, std::vector<float> values)
    : width(width), height(height), values(std::move(values)) {
  validate();
}

void DepthMap::validate() const {
  if (width <= 0 || height <= 0) {
    throw ValidationError("depth map: non-positive raster size");
  }
  if (values.size() != static_cast<size_t>(width) * height) {
    throw ValidationError("depth map: value count does not match width*height");
  }
  for (float d : values) {
    if (!std::isfinite(d)) throw ValidationError("depth map: non-finite depth");
  }
}

InstanceMask::InstanceMask(int width, int height, std::vector<uint16_t> ids,
                           std::map<int, int> labels)
    : width(width), height(height), ids(std::move(ids)),
      labels(std::move(labels)) {
  if (width <= 0 || height <= 0 ||
      this->ids.size() != static_cast<size_t>(width) * height) {
    throw ValidationError("instance mask: id count does not match width*height");
  }
}

std::vector<int> InstanceMask::instance_ids() const {
  std::set<int> seen;
  for (uint16_t id : ids) {
    if (id != 0) seen.insert(id);
  }
  return {seen.begin(), seen.end()};
}

void InstanceMask::validate() const {
  if (ids.size() != static_cast<size_t>(width) * height) {
    throw ValidationError("instance mask: id count does not match width*height");
  }
  for (int id : instance_ids()) {
    if (!labels.count(id)) {
      throw ValidationError("instance mask: id " + std::to_string(id) +
                            " has no class label");
    }
  }
}

void OrientedBox3D::validate() const {
  if (!center.allFinite()) throw ValidationError("box: non-finite center");
  if (!dims.allFinite() || (dims.array() <= 0.0).any()) {
    throw ValidationError("box: dims must be strictly positive");
  }
  if (!is_rotation(rotation)) {
    throw ValidationError("box: rotation is not orthonormal with det +1");
  }
}

bool OrientedBox3D::contains(const Eigen::Vector3d& point,
                             double inflate) const {
  const Eigen::Vector3d local = rotation.transpose() * (point - center);
  return ((local.cwiseAbs() - 0.5 * dims).array() <= inflate).all();
}

void CuboidParams::validate() const {
  if (!(z > 0.0)) throw ValidationError("cuboid: depth z must be positive");
  if (!(w > 0.0) || !(h > 0.0) || !(l > 0.0)) {
    throw ValidationError("cuboid: side lengths must be positive");
  }
  rotation_from_6d(p);
}

Eigen::Vector3d backproject_pixel(double u, double v, double depth,
                                  const CameraIntrinsics& K) {
  return {depth * (u - K.px) / K.fx, depth * (v - K.py) / K.fy, depth};
}

PointCloud backproject(const DepthMap& depth, const InstanceMask& mask,
                       const CameraIntrinsics& K, int instance_id) {
  if (depth.width != mask.width || depth.height != mask.height) {
    throw ValidationError("backproject: depth and mask dimensions differ");
  }
  K.validate();
  PointCloud cloud;
  cloud.instance_id = instance_id;
  if (auto it = mask.labels.find(instance_id); it != mask.labels.end()) {
    cloud.class_id = it->second;
  }
  bool seen = false;
  for (int row = 0; row < depth.height; ++row) {
    for (int col = 0; col < depth.width; ++col) {
      if (mask.at(col, row) != instance_id) continue;
      seen = true;
      const double z = depth.at(col, row);
      if (!(z > 0.0)) continue;
      cloud.points.push_back(backproject_pixel(col + 0.5, row + 0.5, z, K));
    }
  }
  if (!seen) {
    throw ValidationError("backproject: instance " +
                          std::to_string(instance_id) + " not in mask");
  }
  return cloud;
}

Eigen::Matrix3d rotation_from_6d(const Vector6d& p) {
  const Eigen::Vector3d first = p.head<3>();
  const Eigen::Vector3d second = p.tail<3>();
  const double n1 = first.norm();
  const double n2 = second.norm();
  if (!(n1 > 0.0) || !(n2 > 0.0) || !std::isfinite(n1) || !std::isfinite(n2)) {
    throw DegenerateRotationError("rotation_from_6d: zero or non-finite half");
  }
  const Eigen::Vector3d a1 = first / n1;
  const Eigen::Vector3d q = second - a1.dot(second) * a1;
  const double nq = q.norm();
  if (nq <= 1e-12 * n2) {
    throw DegenerateRotationError("rotation_from_6d: parallel halves");
  }
  const Eigen::Vector3d a2 = q / nq;
  Eigen::Matrix3d R;
  R.col(0) = a1;
  R.col(1) = a2;
  R.col(2) = a1.cross(a2);
  return R;
}

Eigen::Vector3d center_from_projection(const CuboidParams& c,
                                       const CameraIntrinsics& K) {
  const Box2D& b = c.box2d;
  return {c.z / K.fx * (b.x + c.u * b.w - K.px),
          c.z / K.fy * (b.y + c.v * b.h - K.py), c.z};
}

Eigen::Matrix3d rotation_about_axis(Axis axis, double angle) {
  Eigen::Vector3d unit = Eigen::Vector3d::Zero();
  unit[static_cast<int>(axis)] = 1.0;
  return Eigen::AngleAxisd(angle, unit).toRotationMatrix();
}

const Corners& unit_box_corners() {
  static const Corners corners = [] {
    Corners c;
    for (int k = 0; k < 8; ++k) {
      c(0, k) = (k & 4) ? 0.5 : -0.5;
      c(1, k) = (k & 2) ? 0.5 : -0.5;
      c(2, k) = (k & 1) ? 0.5 : -0.5;
    }
    return c;
  }();
  return corners;
}

Corners box_corners(const OrientedBox3D& box) {
  Corners c = box.rotation * box.dims.asDiagonal() * unit_box_corners();
  c.colwise() += box.center;
  return c;
}

bool is_rotation(const Eigen::Matrix3d& R, double tol) {
  if (!R.allFinite()) return false;
  const double ortho =
      (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

}  // namespace lift3d
