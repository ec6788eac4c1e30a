#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lift3d {

using Vector6d = Eigen::Matrix<double, 6, 1>;

// Eight box corners stored as columns, ordered like the unit box: column k
// has sign pattern (bit2, bit1, bit0) of k over (x, y, z), 0 meaning -1/2
// and 1 meaning +1/2. Column 0 is (-,-,-), column 7 is (+,+,+).
using Corners = Eigen::Matrix<double, 3, 8>;

enum class Axis { X = 0, Y = 1, Z = 2 };

Axis parse_axis(const std::string& name);
std::string axis_name(Axis axis);

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double px = 0.0;
  double py = 0.0;

  void validate() const;
  Eigen::Matrix3d matrix() const;
  // Pinhole projection of a camera-space point with z > 0.
  Eigen::Vector2d project(const Eigen::Vector3d& point) const;
};

// Metric depth raster, row-major. Depth <= 0 marks an invalid pixel.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  DepthMap() = default;
  DepthMap(int width, int height, std::vector<float> values);

  float at(int col, int row) const {
    return values[static_cast<size_t>(row) * width + col];
  }
  void validate() const;
};

// Instance-id raster (0 = background) with the instance -> class mapping.
struct InstanceMask {
  int width = 0;
  int height = 0;
  std::vector<uint16_t> ids;
  std::map<int, int> labels;

  InstanceMask() = default;
  InstanceMask(int width, int height, std::vector<uint16_t> ids,
               std::map<int, int> labels = {});

  uint16_t at(int col, int row) const {
    return ids[static_cast<size_t>(row) * width + col];
  }
  // Distinct nonzero ids in ascending order.
  std::vector<int> instance_ids() const;
  void validate() const;
};

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  int instance_id = 0;
  int class_id = 0;

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct OrientedBox3D {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  // Full side lengths (w, h, l) along the rotation's columns.
  Eigen::Vector3d dims = Eigen::Vector3d::Ones();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

  void validate() const;
  double volume() const { return dims.prod(); }
  // True when the point lies inside the box grown by `inflate` on every side.
  bool contains(const Eigen::Vector3d& point, double inflate = 0.0) const;
};

struct Box2D {
  double x = 0.0;  // center x (pixels)
  double y = 0.0;  // center y (pixels)
  double w = 1.0;
  double h = 1.0;
};

// Cuboid head output: projected-center offsets relative to the 2D box, center
// depth, side lengths, 6D rotation and the per-image log-scale `s`.
struct CuboidParams {
  double u = 0.0;
  double v = 0.0;
  double z = 1.0;
  double w = 1.0;
  double h = 1.0;
  double l = 1.0;
  Vector6d p = (Vector6d() << 1, 0, 0, 0, 1, 0).finished();
  Box2D box2d;
  double s = 0.0;

  void validate() const;
};

// Z * K^-1 * (u, v, 1) for an already pixel-centered coordinate.
Eigen::Vector3d backproject_pixel(double u, double v, double depth,
                                  const CameraIntrinsics& K);

// Lifts every valid pixel of `instance_id` using the pixel-center convention
// (col + 0.5, row + 0.5). Zero valid pixels yields an empty cloud.
PointCloud backproject(const DepthMap& depth, const InstanceMask& mask,
                       const CameraIntrinsics& K, int instance_id);

// Gram-Schmidt on the two halves of p; columns are (a1, a2, a1 x a2).
// Throws DegenerateRotationError for zero or parallel halves.
Eigen::Matrix3d rotation_from_6d(const Vector6d& p);

Eigen::Vector3d center_from_projection(const CuboidParams& c,
                                       const CameraIntrinsics& K);

// Rotation by `angle` radians about a coordinate axis (right-handed).
Eigen::Matrix3d rotation_about_axis(Axis axis, double angle);

const Corners& unit_box_corners();
Corners box_corners(const OrientedBox3D& box);

bool is_rotation(const Eigen::Matrix3d& R, double tol = 1e-9);

}  // namespace lift3d
