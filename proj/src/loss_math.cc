#include "lift3d/loss_math.h"

#include <cmath>
#include <limits>

#include <Eigen/Geometry>

#include "lift3d/error.h"

namespace lift3d {
namespace {

using Matrix36 = Eigen::Matrix<double, 3, 6>;

// Jacobian of x / |x|.
Eigen::Matrix3d normalize_jacobian(const Eigen::Vector3d& x) {
  const double n = x.norm();
  const Eigen::Vector3d unit = x / n;
  return (Eigen::Matrix3d::Identity() - unit * unit.transpose()) / n;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& a) {
  Eigen::Matrix3d m;
  m << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
  return m;
}

// d(column_i of R(p)) / dp for i = 0, 1, 2.
std::array<Matrix36, 3> rotation_6d_jacobians(const Vector6d& p) {
  const Eigen::Matrix3d R = rotation_from_6d(p);
  const Eigen::Vector3d p1 = p.head<3>();
  const Eigen::Vector3d p2 = p.tail<3>();
  const Eigen::Vector3d a1 = R.col(0);
  const Eigen::Vector3d a2 = R.col(1);
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();

  Matrix36 da1 = Matrix36::Zero();
  da1.leftCols<3>() = normalize_jacobian(p1);

  const double proj = a1.dot(p2);
  const Eigen::Vector3d q = p2 - proj * a1;
  Matrix36 dq;
  dq.leftCols<3>() = -(a1 * p2.transpose() + proj * I) * da1.leftCols<3>();
  dq.rightCols<3>() = I - a1 * a1.transpose();
  const Matrix36 da2 = normalize_jacobian(q) * dq;

  const Matrix36 da3 = -skew(a2) * da1 + skew(a1) * da2;
  return {da1, da2, da3};
}

}  // namespace

void ClassProbabilities::validate() const {
  if (probs.size() == 0) throw ValidationError("probabilities: empty vector");
  if (!probs.allFinite() || (probs.array() < 0.0).any() ||
      (probs.array() > 1.0).any()) {
    throw ValidationError("probabilities: entries must lie in [0, 1]");
  }
  if (std::abs(probs.sum() - 1.0) > 1e-9) {
    throw ValidationError("probabilities: entries must sum to 1");
  }
}

void ClassPartition::validate(size_t num_classes) const {
  std::set<int> seen;
  auto claim = [&](int index) {
    if (index < 0 || static_cast<size_t>(index) >= num_classes) {
      throw ValidationError("partition: index " + std::to_string(index) +
                            " out of range");
    }
    if (!seen.insert(index).second) {
      throw ValidationError("partition: index " + std::to_string(index) +
                            " appears in more than one set");
    }
  };
  for (int i : original) claim(i);
  for (int i : novel) claim(i);
  claim(background);
  if (seen.size() != num_classes) {
    throw ValidationError("partition: sets do not cover every class index");
  }
}

Eigen::VectorXd cosine_logits(const Eigen::VectorXd& v,
                              const EmbeddingTable& E, double temperature) {
  if (!(temperature > 0.0)) throw ValidationError("classify: temperature <= 0");
  if (v.size() != E.dim()) {
    throw ValidationError("classify: feature dimension does not match table");
  }
  const double vn = v.norm();
  if (!(vn > 0.0)) throw ValidationError("classify: zero feature vector");
  Eigen::VectorXd logits(E.size());
  for (size_t i = 0; i < E.size(); ++i) {
    const Eigen::VectorXd& e = E.vector(i);
    logits[i] = e.dot(v) / (e.norm() * vn) / temperature;
  }
  return logits;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::ArrayXd shifted = (logits.array() - logits.maxCoeff()).exp();
  return (shifted / shifted.sum()).matrix();
}

ClassProbabilities classify(const Eigen::VectorXd& v, const EmbeddingTable& E,
                            double temperature) {
  return {softmax(cosine_logits(v, E, temperature))};
}

Eigen::VectorXd softmax_backward(const Eigen::VectorXd& probs,
                                 const Eigen::VectorXd& dprobs) {
  const double inner = probs.dot(dprobs);
  return (probs.array() * (dprobs.array() - inner)).matrix();
}

Eigen::VectorXd cosine_logits_backward(const Eigen::VectorXd& v,
                                       const EmbeddingTable& E,
                                       double temperature,
                                       const Eigen::VectorXd& dlogits) {
  const double vn = v.norm();
  const Eigen::VectorXd v_unit = v / vn;
  Eigen::VectorXd dv = Eigen::VectorXd::Zero(v.size());
  for (size_t i = 0; i < E.size(); ++i) {
    const Eigen::VectorXd e_unit = E.vector(i).normalized();
    const double cos = e_unit.dot(v_unit);
    dv += dlogits[i] * (e_unit - cos * v_unit);
  }
  return dv / (temperature * vn);
}

Eigen::VectorXd classify_backward(const Eigen::VectorXd& v,
                                  const EmbeddingTable& E, double temperature,
                                  const Eigen::VectorXd& dprobs) {
  const Eigen::VectorXd probs = classify(v, E, temperature).probs;
  return cosine_logits_backward(v, E, temperature,
                                softmax_backward(probs, dprobs));
}

CuboidVector pack_cuboid(const CuboidParams& c) {
  CuboidVector x;
  x << c.u, c.v, c.z, c.w, c.h, c.l, c.p[0], c.p[1], c.p[2], c.p[3], c.p[4],
      c.p[5], c.s;
  return x;
}

CuboidParams unpack_cuboid(const CuboidVector& x, const Box2D& box2d) {
  CuboidParams c;
  c.u = x[kU];
  c.v = x[kV];
  c.z = x[kZ];
  c.w = x[kW];
  c.h = x[kH];
  c.l = x[kL];
  c.p = x.segment<6>(kP0);
  c.s = x[kS];
  c.box2d = box2d;
  return c;
}

Corners assemble_cuboid(const CuboidParams& c, const CameraIntrinsics& K) {
  c.validate();
  const Eigen::Matrix3d R = rotation_from_6d(c.p);
  const Eigen::Vector3d x = center_from_projection(c, K);
  Corners corners =
      R * Eigen::Vector3d(c.w, c.h, c.l).asDiagonal() * unit_box_corners();
  corners.colwise() += std::exp(c.s) * x;
  return corners;
}

CuboidJacobian assemble_cuboid_jacobian(const CuboidParams& c,
                                        const CameraIntrinsics& K) {
  c.validate();
  const Eigen::Matrix3d R = rotation_from_6d(c.p);
  const auto dR = rotation_6d_jacobians(c.p);
  const Eigen::Vector3d x = center_from_projection(c, K);
  const double scale = std::exp(c.s);
  const Box2D& b = c.box2d;

  const Eigen::Vector3d dx_du(c.z * b.w / K.fx, 0.0, 0.0);
  const Eigen::Vector3d dx_dv(0.0, c.z * b.h / K.fy, 0.0);
  const Eigen::Vector3d dx_dz((b.x + c.u * b.w - K.px) / K.fx,
                              (b.y + c.v * b.h - K.py) / K.fy, 1.0);
  const Eigen::Vector3d dims(c.w, c.h, c.l);

  CuboidJacobian J = CuboidJacobian::Zero();
  const Corners& unit = unit_box_corners();
  for (int k = 0; k < 8; ++k) {
    auto rows = J.middleRows<3>(3 * k);
    rows.col(kU) = scale * dx_du;
    rows.col(kV) = scale * dx_dv;
    rows.col(kZ) = scale * dx_dz;
    rows.col(kW) = R.col(0) * unit(0, k);
    rows.col(kH) = R.col(1) * unit(1, k);
    rows.col(kL) = R.col(2) * unit(2, k);
    Matrix36 dp = Matrix36::Zero();
    for (int axis = 0; axis < 3; ++axis) {
      dp += dims[axis] * unit(axis, k) * dR[axis];
    }
    rows.middleCols<6>(kP0) = dp;
    rows.col(kS) = scale * x;
  }
  return J;
}

CuboidVector assemble_cuboid_backward(const CuboidParams& c,
                                      const CameraIntrinsics& K,
                                      const Corners& dcorners) {
  const Eigen::Map<const Eigen::Matrix<double, 24, 1>> flat(dcorners.data());
  return assemble_cuboid_jacobian(c, K).transpose() * flat;
}

ChamferResult chamfer_corner_loss(const Corners& A, const Corners& B) {
  if (!A.allFinite() || !B.allFinite()) {
    throw ValidationError("chamfer: non-finite corner");
  }
  Eigen::Matrix<double, 8, 8> d2;  // d2(i, j) = |a_i - b_j|^2
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) d2(i, j) = (A.col(i) - B.col(j)).squaredNorm();
  }
  constexpr double kWeight = 1.0 / 8.0;
  ChamferResult r;
  for (int i = 0; i < 8; ++i) {
    Eigen::Index j = 0;
    const double best = d2.row(i).minCoeff(&j);  // first minimum on ties
    r.loss += kWeight * best;
    r.grad_a.col(i) += 2.0 * kWeight * (A.col(i) - B.col(j));
  }
  for (int j = 0; j < 8; ++j) {
    Eigen::Index i = 0;
    const double best = d2.col(j).minCoeff(&i);
    r.loss += kWeight * best;
    r.grad_a.col(i) += 2.0 * kWeight * (A.col(i) - B.col(j));
  }
  return r;
}

ScalarLoss scale_regularizer(double s) {
  if (!std::isfinite(s)) throw ValidationError("scale_regularizer: non-finite s");
  return {std::abs(s), s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0)};
}

AmbiguityResult ambiguity_loss(const ClassProbabilities& probs,
                               const ClassPartition& part) {
  probs.validate();
  part.validate(probs.size());
  auto in_group = [&](int j) {
    return part.novel.count(j) > 0 || j == part.background;
  };
  double mass = 0.0;
  double rest = 0.0;
  for (int j = 0; j < static_cast<int>(probs.size()); ++j) {
    (in_group(j) ? mass : rest) += probs.probs[j];
  }
  if (mass == 0.0) {
    throw ValidationError("ambiguity loss: zero probability on novel+background");
  }
  // Near mass 1 the complement carries the precision.
  AmbiguityResult r;
  r.loss = mass > 0.5 ? -std::log1p(-rest) : -std::log(std::max(mass, kLogClamp));
  r.loss += 0.0;
  r.dlogits.resize(probs.probs.size());
  for (int j = 0; j < static_cast<int>(probs.size()); ++j) {
    r.dlogits[j] = in_group(j) ? -probs.probs[j] * rest / mass : probs.probs[j];
  }
  return r;
}

double grad_check(const std::function<double(const Eigen::VectorXd&)>& f,
                  const Eigen::VectorXd& x, const Eigen::VectorXd& analytic,
                  double eps) {
  if (!(eps > 0.0)) throw ValidationError("grad_check: eps must be > 0");
  if (analytic.size() != x.size()) {
    throw ValidationError("grad_check: gradient size does not match x");
  }
  double worst = 0.0;
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = f(probe);
    probe[i] = x[i] - eps;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("grad_check: non-finite function value");
    }
    const double numeric = (up - down) / (2.0 * eps);
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace lift3d
