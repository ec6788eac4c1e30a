#include "lift3d/cloud_clean.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>

#include "lift3d/error.h"

namespace lift3d {
namespace {

inline double squared_distance(const Eigen::Vector3d& a,
                               const Eigen::Vector3d& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

struct Cell {
  int64_t x, y, z;
  bool operator==(const Cell&) const = default;
};

struct CellHash {
  size_t operator()(const Cell& c) const {
    uint64_t h = static_cast<uint64_t>(c.x) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<uint64_t>(c.y) + 0x7F4A7C159E3779B9ull + (h << 6) + (h >> 2);
    h ^= static_cast<uint64_t>(c.z) + 0x94D049BB133111EBull + (h << 6) + (h >> 2);
    return static_cast<size_t>(h);
  }
};

// Uniform hash grid over a point set. Points of one cell are contiguous in
// `order_`.
class SpatialGrid {
 public:
  SpatialGrid(const std::vector<Eigen::Vector3d>& points, double cell_size)
      : points_(points), cell_size_(cell_size) {
    origin_ = points.front();
    for (const auto& p : points) origin_ = origin_.cwiseMin(p);
    std::vector<Cell> cells(points.size());
    for (size_t i = 0; i < points.size(); ++i) cells[i] = cell_of(points[i]);
    order_.resize(points.size());
    std::iota(order_.begin(), order_.end(), size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](size_t a, size_t b) {
      const Cell& ca = cells[a];
      const Cell& cb = cells[b];
      if (ca.x != cb.x) return ca.x < cb.x;
      if (ca.y != cb.y) return ca.y < cb.y;
      return ca.z < cb.z;
    });
    for (size_t k = 0; k < order_.size();) {
      const Cell c = cells[order_[k]];
      size_t end = k;
      while (end < order_.size() && cells[order_[end]] == c) ++end;
      ranges_.emplace(c, std::make_pair(k, end));
      occupied_.push_back(c);
      k = end;
    }
  }

  Cell cell_of(const Eigen::Vector3d& p) const {
    const Eigen::Vector3d q = (p - origin_) / cell_size_;
    return {static_cast<int64_t>(std::floor(q.x())),
            static_cast<int64_t>(std::floor(q.y())),
            static_cast<int64_t>(std::floor(q.z()))};
  }

  // Calls fn(index) for each point stored in `cell`.
  template <typename Fn>
  void for_each_in(const Cell& cell, Fn&& fn) const {
    auto it = ranges_.find(cell);
    if (it == ranges_.end()) return;
    for (size_t k = it->second.first; k < it->second.second; ++k) fn(order_[k]);
  }

  const std::vector<Cell>& occupied() const { return occupied_; }
  double cell_size() const { return cell_size_; }

 private:
  const std::vector<Eigen::Vector3d>& points_;
  double cell_size_;
  Eigen::Vector3d origin_;
  std::vector<size_t> order_;
  std::unordered_map<Cell, std::pair<size_t, size_t>, CellHash> ranges_;
  std::vector<Cell> occupied_;
};

int64_t chebyshev(const Cell& a, const Cell& b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y),
                   std::abs(a.z - b.z)});
}

// Cell size giving roughly k points per occupied cell for volumetric data.
double knn_cell_size(const std::vector<Eigen::Vector3d>& points, int k) {
  Eigen::Vector3d lo = points.front();
  Eigen::Vector3d hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double extent = (hi - lo).maxCoeff();
  if (!(extent > 0.0)) return 1.0;
  const double cells_per_axis =
      std::max(1.0, std::cbrt(static_cast<double>(points.size()) / k));
  return extent / cells_per_axis;
}

// Squared distances of the k nearest other points of `query`, ascending.
std::vector<double> knn_squared(const SpatialGrid& grid,
                                const std::vector<Eigen::Vector3d>& points,
                                size_t query, size_t k) {
  std::vector<double> best;  // max-heap of the k smallest so far
  best.reserve(k + 1);
  auto offer = [&](size_t j) {
    if (j == query) return;
    const double d2 = squared_distance(points[query], points[j]);
    if (best.size() < k) {
      best.push_back(d2);
      std::push_heap(best.begin(), best.end());
    } else if (d2 < best.front()) {
      std::pop_heap(best.begin(), best.end());
      best.back() = d2;
      std::push_heap(best.begin(), best.end());
    }
  };

  const Cell center = grid.cell_of(points[query]);
  const auto occupied_count = static_cast<int64_t>(grid.occupied().size());
  for (int64_t r = 0;; ++r) {
    const int64_t side = 2 * r + 1;
    const int64_t inner = r == 0 ? 0 : (2 * r - 1);
    const int64_t ring_cells = side * side * side - inner * inner * inner;
    if (ring_cells > occupied_count) {
      // Sparse relative to the ring: finish with every unvisited cell.
      for (const Cell& c : grid.occupied()) {
        if (chebyshev(c, center) >= r) grid.for_each_in(c, offer);
      }
      break;
    }
    for (int64_t dx = -r; dx <= r; ++dx) {
      for (int64_t dy = -r; dy <= r; ++dy) {
        const bool edge_xy = std::abs(dx) == r || std::abs(dy) == r;
        for (int64_t dz = -r; dz <= r; ++dz) {
          if (!edge_xy && std::abs(dz) != r) continue;
          grid.for_each_in({center.x + dx, center.y + dy, center.z + dz},
                           offer);
        }
      }
    }
    // Unvisited points are at least r * cell_size away.
    const double reach = static_cast<double>(r) * grid.cell_size();
    if (best.size() == k && best.front() <= reach * reach) break;
  }
  std::sort(best.begin(), best.end());
  return best;
}

}  // namespace

void CleanConfig::validate() const {
  if (!(radius > 0.0)) throw ValidationError("clean.radius must be > 0");
  if (min_neighbors < 1) throw ValidationError("clean.min_neighbors must be >= 1");
  if (knn_k < 1) throw ValidationError("clean.knn_k must be >= 1");
  if (!(std_ratio > 0.0)) throw ValidationError("clean.std_ratio must be > 0");
}

std::vector<size_t> radius_inlier_indices(
    const std::vector<Eigen::Vector3d>& points, double radius,
    int min_neighbors) {
  std::vector<size_t> kept;
  if (points.empty()) return kept;
  const SpatialGrid grid(points, radius);
  const double r2 = radius * radius;
  for (size_t i = 0; i < points.size(); ++i) {
    const Cell c = grid.cell_of(points[i]);
    int count = 0;
    for (int64_t dx = -1; dx <= 1 && count < min_neighbors; ++dx) {
      for (int64_t dy = -1; dy <= 1 && count < min_neighbors; ++dy) {
        for (int64_t dz = -1; dz <= 1 && count < min_neighbors; ++dz) {
          grid.for_each_in({c.x + dx, c.y + dy, c.z + dz}, [&](size_t j) {
            if (j != i && squared_distance(points[i], points[j]) <= r2) {
              ++count;
            }
          });
        }
      }
    }
    if (count >= min_neighbors) kept.push_back(i);
  }
  return kept;
}

std::vector<double> mean_knn_distances(
    const std::vector<Eigen::Vector3d>& points, int k) {
  std::vector<double> means(points.size(), 0.0);
  if (points.size() < 2 || k < 1) return means;
  const size_t kk = std::min(static_cast<size_t>(k), points.size() - 1);
  const SpatialGrid grid(points, knn_cell_size(points, static_cast<int>(kk)));
  for (size_t i = 0; i < points.size(); ++i) {
    const std::vector<double> d2 = knn_squared(grid, points, i, kk);
    double sum = 0.0;
    for (double v : d2) sum += std::sqrt(v);
    means[i] = sum / static_cast<double>(kk);
  }
  return means;
}

std::vector<size_t> statistical_inlier_indices(
    const std::vector<Eigen::Vector3d>& points, int knn_k, double std_ratio) {
  std::vector<size_t> kept(points.size());
  std::iota(kept.begin(), kept.end(), size_t{0});
  if (points.size() <= static_cast<size_t>(knn_k)) return kept;

  const std::vector<double> means = mean_knn_distances(points, knn_k);
  const double n = static_cast<double>(means.size());
  double sum = 0.0;
  for (double m : means) sum += m;
  const double mu = sum / n;
  double sq = 0.0;
  for (double m : means) sq += (m - mu) * (m - mu);
  const double sigma = std::sqrt(sq / n);
  const double threshold = mu + std_ratio * sigma;

  kept.clear();
  for (size_t i = 0; i < means.size(); ++i) {
    if (means[i] <= threshold) kept.push_back(i);
  }
  return kept;
}

PointCloud select_points(const PointCloud& pc,
                         const std::vector<size_t>& indices) {
  PointCloud out;
  out.instance_id = pc.instance_id;
  out.class_id = pc.class_id;
  out.points.reserve(indices.size());
  for (size_t i : indices) out.points.push_back(pc.points[i]);
  return out;
}

PointCloud radius_outlier_filter(const PointCloud& pc, double radius,
                                 int min_neighbors) {
  return select_points(pc,
                       radius_inlier_indices(pc.points, radius, min_neighbors));
}

PointCloud statistical_outlier_filter(const PointCloud& pc, int knn_k,
                                      double std_ratio) {
  return select_points(
      pc, statistical_inlier_indices(pc.points, knn_k, std_ratio));
}

std::vector<size_t> clean_indices(const std::vector<Eigen::Vector3d>& points,
                                  const CleanConfig& cfg) {
  cfg.validate();
  const auto by_radius =
      radius_inlier_indices(points, cfg.radius, cfg.min_neighbors);
  const auto by_stats =
      statistical_inlier_indices(points, cfg.knn_k, cfg.std_ratio);
  std::vector<size_t> kept;
  std::set_intersection(by_radius.begin(), by_radius.end(), by_stats.begin(),
                        by_stats.end(), std::back_inserter(kept));
  return kept;
}

PointCloud clean(const PointCloud& pc, const CleanConfig& cfg) {
  return select_points(pc, clean_indices(pc.points, cfg));
}

}  // namespace lift3d
