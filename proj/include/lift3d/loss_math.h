#pragma once

#include <functional>
#include <set>

#include <Eigen/Core>

#include "lift3d/category_gate.h"
#include "lift3d/geometry.h"

namespace lift3d {

// Softmax output over the C object classes plus background.
struct ClassProbabilities {
  Eigen::VectorXd probs;

  void validate() const;
  size_t size() const { return static_cast<size_t>(probs.size()); }
};

// Disjoint split of class indices into originally annotated classes, classes
// introduced by lifted 2D data, and the background index.
struct ClassPartition {
  std::set<int> original;
  std::set<int> novel;
  int background = 0;

  // Checks disjointness and that the sets cover exactly [0, num_classes).
  void validate(size_t num_classes) const;
  bool contains(int index) const {
    return original.count(index) || novel.count(index) || index == background;
  }
};

// --- Cosine classifier -----------------------------------------------------

// logit_i = cos(E_i, v) / temperature. The background is an ordinary row of
// the table.
Eigen::VectorXd cosine_logits(const Eigen::VectorXd& v,
                              const EmbeddingTable& E, double temperature);
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
ClassProbabilities classify(const Eigen::VectorXd& v, const EmbeddingTable& E,
                            double temperature = 1.0);

// Vector-Jacobian products.
Eigen::VectorXd softmax_backward(const Eigen::VectorXd& probs,
                                 const Eigen::VectorXd& dprobs);
Eigen::VectorXd cosine_logits_backward(const Eigen::VectorXd& v,
                                       const EmbeddingTable& E,
                                       double temperature,
                                       const Eigen::VectorXd& dlogits);
Eigen::VectorXd classify_backward(const Eigen::VectorXd& v,
                                  const EmbeddingTable& E, double temperature,
                                  const Eigen::VectorXd& dprobs);

// --- Self-calibrated cuboid ------------------------------------------------

// Order of the raw cuboid parameters in packed vectors and Jacobians.
enum CuboidParam : int {
  kU = 0, kV, kZ, kW, kH, kL, kP0, kP1, kP2, kP3, kP4, kP5, kS,
  kNumCuboidParams
};

using CuboidVector = Eigen::Matrix<double, kNumCuboidParams, 1>;
// Rows index the flattened corners (3 * corner + axis).
using CuboidJacobian = Eigen::Matrix<double, 24, kNumCuboidParams>;

CuboidVector pack_cuboid(const CuboidParams& c);
CuboidParams unpack_cuboid(const CuboidVector& x, const Box2D& box2d);

// R(p) diag(w,h,l) B_unit + exp(s) x, with x the projected-center recovery.
Corners assemble_cuboid(const CuboidParams& c, const CameraIntrinsics& K);
CuboidJacobian assemble_cuboid_jacobian(const CuboidParams& c,
                                        const CameraIntrinsics& K);
// dL/dparams given dL/dcorners.
CuboidVector assemble_cuboid_backward(const CuboidParams& c,
                                      const CameraIntrinsics& K,
                                      const Corners& dcorners);

// --- Losses ----------------------------------------------------------------

struct ChamferResult {
  double loss = 0.0;
  Corners grad_a = Corners::Zero();  // d loss / d A
};

// (1/8) sum_a min_b |a-b|^2 + (1/8) sum_b min_a |a-b|^2. Nearest-neighbor
// ties resolve to the lowest index.
ChamferResult chamfer_corner_loss(const Corners& A, const Corners& B);

struct ScalarLoss {
  double value = 0.0;
  double grad = 0.0;
};

// |s| with subgradient sign(s), 0 at s = 0.
ScalarLoss scale_regularizer(double s);

struct AmbiguityResult {
  double loss = 0.0;
  Eigen::VectorXd dlogits;
};

// -log of the probability mass on novel classes plus background. The
// gradient is with respect to the pre-softmax logits. Zero group mass throws;
// mass below 1e-12 is clamped for the log.
AmbiguityResult ambiguity_loss(const ClassProbabilities& probs,
                               const ClassPartition& part);

inline constexpr double kLogClamp = 1e-12;

// --- Gradient checking -----------------------------------------------------

// Max over coordinates of |analytic - numeric| / max(|analytic|, |numeric|,
// 1e-8), with numeric from central differences of step eps. Throws
// NumericalError when f is not finite at a probe point.
double grad_check(const std::function<double(const Eigen::VectorXd&)>& f,
                  const Eigen::VectorXd& x, const Eigen::VectorXd& analytic,
                  double eps = 1e-5);

}  // namespace lift3d
