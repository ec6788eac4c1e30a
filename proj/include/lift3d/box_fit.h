#pragma once

#include <vector>

#include <Eigen/Core>

#include "lift3d/geometry.h"

namespace lift3d {

// Convex polygon, counter-clockwise, no three consecutive vertices
// collinear. Collinear input collapses to its two extreme points and a
// single distinct point to one vertex.
struct Hull2D {
  std::vector<Eigen::Vector2d> vertices;

  double signed_area() const;
};

struct Rect2D {
  double angle = 0.0;     // direction of the `extent_a` side, in [0, pi/2)
  double extent_a = 0.0;  // full side length along angle
  double extent_b = 0.0;  // full side length along angle + pi/2
  Eigen::Vector2d center = Eigen::Vector2d::Zero();

  double area() const { return extent_a * extent_b; }
};

// Andrew's monotone chain. Throws ValidationError on empty input.
Hull2D convex_hull_2d(const std::vector<Eigen::Vector2d>& points);

// Minimum-area enclosing rectangle. One side of the optimum is collinear
// with a hull edge, so every edge direction is tried; equal areas keep the
// smallest angle. A 1-vertex hull gives a zero-size rectangle at angle 0, a
// 2-vertex hull a zero-width rectangle along the segment.
Rect2D min_area_rect_2d(const Hull2D& hull);

// Projection of a 3D point onto the plane orthogonal to `up`, using the
// cyclic axis pair after `up` (up=Y -> (z, x)) so that a positive planar
// angle is a positive rotation about `up`.
Eigen::Vector2d ground_coordinates(const Eigen::Vector3d& p, Axis up);

// Gravity-aligned minimum-volume box around the cloud: rotating calipers in
// the ground plane, min/max extent along `up`. The rotation is a pure
// rotation about `up`. Throws DegenerateCloudError for fewer than 3 points,
// points collinear in the ground plane, or zero extent along `up`.
OrientedBox3D min_oriented_box_yaw(const PointCloud& pc, Axis up = Axis::Y);

}  // namespace lift3d
