#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "lift3d/geometry.h"

namespace lift3d {

struct CleanConfig {
  double radius = 0.1;    // meters
  int min_neighbors = 8;  // other points within `radius`
  int knn_k = 20;
  double std_ratio = 2.0;

  void validate() const;
};

// Index-level filters: return the retained input indices in ascending order.
//
// A point survives the radius filter when at least `min_neighbors` other
// points lie within Euclidean distance <= radius.
std::vector<size_t> radius_inlier_indices(
    const std::vector<Eigen::Vector3d>& points, double radius,
    int min_neighbors);

// A point survives the statistical filter when the mean distance to its
// `knn_k` nearest other points is <= mu + std_ratio * sigma, with mu and
// sigma (population) taken over all points. Clouds with <= knn_k points are
// returned whole.
std::vector<size_t> statistical_inlier_indices(
    const std::vector<Eigen::Vector3d>& points, int knn_k, double std_ratio);

// Mean distance from each point to its k nearest other points, summed in
// ascending distance order.
std::vector<double> mean_knn_distances(
    const std::vector<Eigen::Vector3d>& points, int k);

PointCloud radius_outlier_filter(const PointCloud& pc, double radius,
                                 int min_neighbors);
PointCloud statistical_outlier_filter(const PointCloud& pc, int knn_k,
                                      double std_ratio);

// Removes the union of both filters' outliers; each filter sees the full
// input cloud.
PointCloud clean(const PointCloud& pc, const CleanConfig& cfg);
std::vector<size_t> clean_indices(const std::vector<Eigen::Vector3d>& points,
                                  const CleanConfig& cfg);

PointCloud select_points(const PointCloud& pc,
                         const std::vector<size_t>& indices);

}  // namespace lift3d
