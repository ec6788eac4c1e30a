#include "lift3d/loss_selftest.h"

#include <chrono>
#include <random>

#include <Eigen/Geometry>
#include <json.hpp>

#include "lift3d/loss_math.h"

namespace lift3d {
namespace {

using Rng = std::mt19937_64;

// A softmax this close to one-hot has gradients at the finite-difference
// noise floor; such inputs are redrawn.
constexpr double kSaturated = 0.999;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Eigen::VectorXd gaussian_vector(Rng& rng, Eigen::Index n, double sigma = 1.0) {
  std::normal_distribution<double> g(0.0, sigma);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

// Smallest gap between the best and second-best nearest-neighbor distance
// in either direction. Large gaps keep the argmin fixed under probing.
double nearest_neighbor_margin(const Corners& A, const Corners& B) {
  Eigen::Matrix<double, 8, 8> d2;
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) d2(i, j) = (A.col(i) - B.col(j)).squaredNorm();
  }
  auto gap = [](auto values) {
    double first = std::numeric_limits<double>::infinity();
    double second = first;
    for (Eigen::Index k = 0; k < values.size(); ++k) {
      const double v = values[k];
      if (v < first) {
        second = first;
        first = v;
      } else if (v < second) {
        second = v;
      }
    }
    return second - first;
  };
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 8; ++i) margin = std::min(margin, gap(d2.row(i)));
  for (int j = 0; j < 8; ++j) margin = std::min(margin, gap(d2.col(j)));
  return margin;
}

Corners random_corners(Rng& rng) {
  Corners c;
  for (int k = 0; k < 8; ++k) c.col(k) = gaussian_vector(rng, 3);
  return c;
}

CameraIntrinsics random_intrinsics(Rng& rng) {
  return {uniform(rng, 300, 800), uniform(rng, 300, 800), uniform(rng, 200, 400),
          uniform(rng, 150, 300)};
}

CuboidParams random_cuboid(Rng& rng) {
  CuboidParams c;
  c.u = uniform(rng, -0.5, 0.5);
  c.v = uniform(rng, -0.5, 0.5);
  c.z = uniform(rng, 1.0, 8.0);
  c.w = uniform(rng, 0.2, 3.0);
  c.h = uniform(rng, 0.2, 3.0);
  c.l = uniform(rng, 0.2, 3.0);
  for (;;) {
    c.p = gaussian_vector(rng, 6);
    const Eigen::Vector3d a = c.p.head<3>();
    const Eigen::Vector3d b = c.p.tail<3>();
    if (a.norm() > 0.3 && b.norm() > 0.3 &&
        a.normalized().cross(b.normalized()).norm() > 0.3) {
      break;
    }
  }
  c.s = uniform(rng, -0.5, 0.5);
  c.box2d = {uniform(rng, 100, 500), uniform(rng, 100, 400),
             uniform(rng, 20, 200), uniform(rng, 20, 200)};
  return c;
}

template <typename Trial>
GradientSuiteResult run_suite(const std::string& name, int trials,
                              double tolerance, Trial&& trial) {
  GradientSuiteResult r;
  r.name = name;
  r.trials = trials;
  for (int t = 0; t < trials; ++t) {
    r.max_rel_error = std::max(r.max_rel_error, trial());
  }
  r.passed = r.max_rel_error < tolerance;
  return r;
}

}  // namespace

bool SelftestReport::passed() const {
  for (const auto& s : suites) {
    if (!s.passed) return false;
  }
  return !suites.empty();
}

std::string SelftestReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : suites) {
    rows.push_back({{"name", s.name},
                    {"trials", s.trials},
                    {"max_rel_error", s.max_rel_error},
                    {"passed", s.passed}});
  }
  return nlohmann::json{{"passed", passed()},
                        {"tolerance", tolerance},
                        {"seconds", seconds},
                        {"suites", rows}}
      .dump(2);
}

SelftestReport run_gradient_selftest(int trials, uint64_t seed,
                                     double tolerance) {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(seed);
  SelftestReport report;
  report.tolerance = tolerance;

  report.suites.push_back(run_suite("chamfer_corner_loss", trials, tolerance, [&] {
    Corners A, B;
    do {
      A = random_corners(rng);
      B = random_corners(rng);
    } while (nearest_neighbor_margin(A, B) < 1e-2);
    const Eigen::Map<const Eigen::VectorXd> x(A.data(), 24);
    const ChamferResult r = chamfer_corner_loss(A, B);
    const Eigen::Map<const Eigen::VectorXd> g(r.grad_a.data(), 24);
    return grad_check(
        [&](const Eigen::VectorXd& probe) {
          return chamfer_corner_loss(Eigen::Map<const Corners>(probe.data()), B)
              .loss;
        },
        x, g);
  }));

  report.suites.push_back(run_suite("ambiguity_loss", trials, tolerance, [&] {
    const int n = std::uniform_int_distribution<int>(3, 10)(rng);
    const Eigen::VectorXd logits = gaussian_vector(rng, n, 2.0);
    ClassPartition part;
    part.background = n - 1;
    for (int i = 0; i < n - 1; ++i) {
      (std::bernoulli_distribution(0.5)(rng) ? part.novel : part.original)
          .insert(i);
    }
    auto loss = [&](const Eigen::VectorXd& z) {
      return ambiguity_loss({softmax(z)}, part).loss;
    };
    return grad_check(loss, logits,
                      ambiguity_loss({softmax(logits)}, part).dlogits);
  }));

  report.suites.push_back(run_suite("classify_wrt_v", trials, tolerance, [&] {
    const int dim = std::uniform_int_distribution<int>(4, 16)(rng);
    const int classes = std::uniform_int_distribution<int>(2, 8)(rng);
    EmbeddingTable E(dim);
    for (int i = 0; i < classes; ++i) {
      E.add("c" + std::to_string(i), gaussian_vector(rng, dim));
    }
    const double temperature = uniform(rng, 0.05, 1.0);
    Eigen::VectorXd v;
    do {
      v = gaussian_vector(rng, dim);
    } while (classify(v, E, temperature).probs.maxCoeff() > kSaturated);
    const Eigen::VectorXd w = gaussian_vector(rng, classes);
    auto f = [&](const Eigen::VectorXd& probe) {
      return w.dot(classify(probe, E, temperature).probs);
    };
    return grad_check(f, v, classify_backward(v, E, temperature, w));
  }));

  report.suites.push_back(run_suite("classify_wrt_logits", trials, tolerance, [&] {
    const int classes = std::uniform_int_distribution<int>(2, 12)(rng);
    Eigen::VectorXd logits;
    do {
      logits = gaussian_vector(rng, classes, 2.0);
    } while (softmax(logits).maxCoeff() > kSaturated);
    const Eigen::VectorXd w = gaussian_vector(rng, classes);
    auto f = [&](const Eigen::VectorXd& z) { return w.dot(softmax(z)); };
    return grad_check(f, logits, softmax_backward(softmax(logits), w));
  }));

  report.suites.push_back(run_suite("assemble_cuboid", trials, tolerance, [&] {
    const CameraIntrinsics K = random_intrinsics(rng);
    const CuboidParams c = random_cuboid(rng);
    Corners upstream;
    for (int k = 0; k < 8; ++k) upstream.col(k) = gaussian_vector(rng, 3);
    auto f = [&](const Eigen::VectorXd& x) {
      const Corners corners =
          assemble_cuboid(unpack_cuboid(CuboidVector(x), c.box2d), K);
      return (corners.array() * upstream.array()).sum();
    };
    const Eigen::VectorXd x = pack_cuboid(c);
    return grad_check(f, x, assemble_cuboid_backward(c, K, upstream));
  }));

  report.suites.push_back(run_suite("self_calibrated_chamfer", trials, tolerance, [&] {
    const CameraIntrinsics K = random_intrinsics(rng);
    CuboidParams c;
    Corners pred, target;
    do {
      c = random_cuboid(rng);
      pred = assemble_cuboid(c, K);
      target = pred + 0.3 * random_corners(rng);
    } while (nearest_neighbor_margin(pred, target) < 1e-2);
    auto f = [&](const Eigen::VectorXd& x) {
      return chamfer_corner_loss(
                 assemble_cuboid(unpack_cuboid(CuboidVector(x), c.box2d), K),
                 target)
          .loss;
    };
    const ChamferResult r = chamfer_corner_loss(pred, target);
    return grad_check(f, pack_cuboid(c),
                      assemble_cuboid_backward(c, K, r.grad_a));
  }));

  report.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return report;
}

}  // namespace lift3d
