#include "lift3d/loss_math.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lift3d/error.h"
#include "lift3d/loss_selftest.h"

namespace lift3d {
namespace {

ClassPartition four_way() {
  ClassPartition part;
  part.original = {0, 1};
  part.novel = {2};
  part.background = 3;
  return part;
}

ClassProbabilities probs_of(std::initializer_list<double> v) {
  ClassProbabilities p;
  p.probs = Eigen::VectorXd(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p.probs[i++] = x;
  return p;
}

CuboidParams sample_cuboid() {
  CuboidParams c;
  c.u = 0.1;
  c.v = -0.2;
  c.z = 3.0;
  c.w = 0.8;
  c.h = 1.1;
  c.l = 0.6;
  c.p << 0.9, 0.1, -0.2, 0.1, 1.0, 0.3;
  c.box2d = {300.0, 200.0, 80.0, 60.0};
  c.s = 0.0;
  return c;
}

const CameraIntrinsics kK{500.0, 480.0, 320.0, 240.0};

TEST(Classify, TwoOrthogonalEmbeddings) {
  EmbeddingTable E(2);
  E.add("a", Eigen::Vector2d(1, 0));
  E.add("bg", Eigen::Vector2d(0, 1));
  const ClassProbabilities p = classify(Eigen::Vector2d(1, 0), E, 1.0);
  EXPECT_NEAR(p.probs[0], 0.7311, 1e-4);
  EXPECT_NEAR(p.probs[1], 0.2689, 1e-4);
}

TEST(Classify, ScaleInvarianceSumAndUniform) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  EmbeddingTable E(4);
  for (int i = 0; i < 5; ++i) {
    E.add("c" + std::to_string(i), Eigen::Vector4d(g(rng), g(rng), g(rng), g(rng)));
  }
  const Eigen::VectorXd v = Eigen::Vector4d(g(rng), g(rng), g(rng), g(rng));
  const ClassProbabilities p = classify(v, E, 0.3);
  EXPECT_NEAR(p.probs.sum(), 1.0, 1e-12);
  EXPECT_LE((classify(17.0 * v, E, 0.3).probs - p.probs).cwiseAbs().maxCoeff(), 1e-15);

  EmbeddingTable same(2);
  same.add("x", Eigen::Vector2d(1, 1));
  same.add("y", Eigen::Vector2d(2, 2));
  same.add("z", Eigen::Vector2d(3, 3));
  const ClassProbabilities u = classify(Eigen::Vector2d(1, -4), same);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(u.probs[i], 1.0 / 3.0, 1e-15);
}

TEST(Classify, Errors) {
  EmbeddingTable E(2);
  E.add("a", Eigen::Vector2d(1, 0));
  EXPECT_THROW(classify(Eigen::Vector2d(0, 0), E), ValidationError);
  EXPECT_THROW(classify(Eigen::Vector2d(1, 0), E, 0.0), ValidationError);
  EXPECT_THROW(classify(Eigen::Vector3d(1, 0, 0), E), ValidationError);
}

TEST(ClassPartition, Validation) {
  EXPECT_NO_THROW(four_way().validate(4));
  EXPECT_THROW(four_way().validate(5), ValidationError);
  ClassPartition overlap = four_way();
  overlap.novel.insert(1);
  EXPECT_THROW(overlap.validate(4), ValidationError);
  ClassPartition bg_in_set = four_way();
  bg_in_set.original.insert(3);
  EXPECT_THROW(bg_in_set.validate(4), ValidationError);
}

TEST(ClassProbabilities, Validation) {
  EXPECT_NO_THROW(probs_of({0.5, 0.5}).validate());
  EXPECT_THROW(probs_of({0.5, 0.6}).validate(), ValidationError);
  EXPECT_THROW(probs_of({1.5, -0.5}).validate(), ValidationError);
}

TEST(AssembleCuboid, ZeroScaleMatchesUncalibratedBox) {
  const CuboidParams c = sample_cuboid();
  OrientedBox3D box;
  box.center = center_from_projection(c, kK);
  box.dims = {c.w, c.h, c.l};
  box.rotation = rotation_from_6d(c.p);
  EXPECT_LE((assemble_cuboid(c, kK) - box_corners(box)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AssembleCuboid, ScaleMovesCentroidOnly) {
  CuboidParams c = sample_cuboid();
  const Corners base = assemble_cuboid(c, kK);
  c.s = std::log(2.0);
  const Corners doubled = assemble_cuboid(c, kK);
  const Eigen::Vector3d m0 = base.rowwise().mean();
  const Eigen::Vector3d m1 = doubled.rowwise().mean();
  EXPECT_LE((m1 - 2.0 * m0).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(((doubled.colwise() - m1) - (base.colwise() - m0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AssembleCuboid, ScaleColumnOfJacobian) {
  CuboidParams c = sample_cuboid();
  c.s = 0.37;
  const CuboidJacobian J = assemble_cuboid_jacobian(c, kK);
  const Eigen::Vector3d x = std::exp(c.s) * center_from_projection(c, kK);
  for (int k = 0; k < 8; ++k) {
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(J(3 * k + a, kS), x[a], 1e-12);
  }
}

TEST(AssembleCuboid, JacobianMatchesFiniteDifferences) {
  const CuboidParams c = sample_cuboid();
  const CuboidJacobian J = assemble_cuboid_jacobian(c, kK);
  const CuboidVector x0 = pack_cuboid(c);
  for (int i = 0; i < kNumCuboidParams; ++i) {
    const double eps = 1e-6;
    CuboidVector up = x0, down = x0;
    up[i] += eps;
    down[i] -= eps;
    const Corners d = (assemble_cuboid(unpack_cuboid(up, c.box2d), kK) -
                       assemble_cuboid(unpack_cuboid(down, c.box2d), kK)) /
                      (2 * eps);
    for (int k = 0; k < 8; ++k)
      for (int a = 0; a < 3; ++a) EXPECT_NEAR(J(3 * k + a, i), d(a, k), 1e-6);
  }
}

TEST(AssembleCuboid, DegenerateRotationPropagates) {
  CuboidParams c = sample_cuboid();
  c.p << 1, 0, 0, 2, 0, 0;
  EXPECT_THROW(assemble_cuboid(c, kK), DegenerateRotationError);
}

TEST(Chamfer, IdenticalSetsAndSymmetry) {
  const Corners A = box_corners(OrientedBox3D{});
  const ChamferResult same = chamfer_corner_loss(A, A);
  EXPECT_EQ(same.loss, 0.0);
  EXPECT_EQ(same.grad_a, Corners::Zero());

  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Corners X, Y;
    for (int k = 0; k < 8; ++k)
      for (int a = 0; a < 3; ++a) {
        X(a, k) = g(rng);
        Y(a, k) = g(rng);
      }
    const double xy = chamfer_corner_loss(X, Y).loss;
    EXPECT_GE(xy, 0.0);
    EXPECT_NEAR(xy, chamfer_corner_loss(Y, X).loss, 1e-14);
  }
}

TEST(Chamfer, SmallTranslation) {
  const Corners A = box_corners(OrientedBox3D{});
  const Eigen::Vector3d t(0.01, -0.02, 0.015);
  const Corners B = A.colwise() + t;
  const ChamferResult r = chamfer_corner_loss(A, B);
  EXPECT_NEAR(r.loss, 2.0 * t.squaredNorm(), 1e-15);
  // Each a is pulled toward its partner (weight 1/8 twice).
  for (int k = 0; k < 8; ++k) {
    EXPECT_LE((r.grad_a.col(k) - (-0.5 * t)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Chamfer, NonFiniteRejected) {
  Corners A = Corners::Zero();
  A(0, 0) = std::nan("");
  EXPECT_THROW(chamfer_corner_loss(A, Corners::Zero()), ValidationError);
}

TEST(ScaleRegularizer, Values) {
  EXPECT_EQ(scale_regularizer(0.0).value, 0.0);
  EXPECT_EQ(scale_regularizer(0.0).grad, 0.0);
  EXPECT_DOUBLE_EQ(scale_regularizer(-0.3).value, 0.3);
  EXPECT_EQ(scale_regularizer(-0.3).grad, -1.0);
  EXPECT_EQ(scale_regularizer(1.5).value, 1.5);
  EXPECT_EQ(scale_regularizer(1.5).grad, 1.0);
}

TEST(AmbiguityLoss, Examples) {
  const ClassPartition part = four_way();
  EXPECT_EQ(ambiguity_loss(probs_of({0, 0, 0, 1}), part).loss, 0.0);
  EXPECT_NEAR(ambiguity_loss(probs_of({0.25, 0.25, 0.25, 0.25}), part).loss, std::log(2.0),
              1e-6);
  EXPECT_THROW(ambiguity_loss(probs_of({0.5, 0.5, 0, 0}), part), ValidationError);
  // Underflowing mass is clamped for the log.
  const double tiny = 1e-300;
  EXPECT_NEAR(ambiguity_loss(probs_of({0.5, 0.5 - tiny, tiny, 0}), part).loss,
              -std::log(kLogClamp), 1e-9);
}

TEST(AmbiguityLoss, StrictlyDecreasingInGroupMass) {
  const ClassPartition part = four_way();
  double previous = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 100; ++i) {
    const double mass = i / 100.0;
    const double loss =
        ambiguity_loss(probs_of({(1 - mass) / 2, (1 - mass) / 2, mass / 2, mass / 2}), part).loss;
    EXPECT_LT(loss, previous);
    EXPECT_GE(loss, 0.0);
    previous = loss;
  }
  EXPECT_EQ(previous, 0.0);
}

TEST(AmbiguityLoss, LogitGradientMatchesFiniteDifferences) {
  const ClassPartition part = four_way();
  std::mt19937_64 rng(14);
  std::normal_distribution<double> g(0.0, 2.0);
  auto f = [&](const Eigen::VectorXd& z) {
    ClassProbabilities p;
    p.probs = softmax(z);
    return ambiguity_loss(p, part).loss;
  };
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd z(4);
    for (int i = 0; i < 4; ++i) z[i] = g(rng);
    ClassProbabilities p;
    p.probs = softmax(z);
    EXPECT_LT(grad_check(f, z, ambiguity_loss(p, part).dlogits), 1e-5);
  }
}

TEST(GradCheck, QuadraticAndErrors) {
  Eigen::VectorXd x(3);
  x << 0.5, -2.0, 3.0;
  auto sq = [](const Eigen::VectorXd& v) { return v.squaredNorm(); };
  EXPECT_LT(grad_check(sq, x, 2.0 * x), 1e-7);
  Eigen::VectorXd wrong = 2.0 * x;
  wrong[1] += 1.0;
  EXPECT_GT(grad_check(sq, x, wrong), 0.1);
  auto log0 = [](const Eigen::VectorXd& v) { return std::log(v[0]); };
  EXPECT_THROW(grad_check(log0, x, x, 0.0), ValidationError);
  Eigen::VectorXd at(1);
  at << 1e-6;
  EXPECT_THROW(grad_check(log0, at, at, 1e-5), NumericalError);
}

TEST(Selftest, AllSuitesPass) {
  const SelftestReport report = run_gradient_selftest(20, 3);
  EXPECT_TRUE(report.passed()) << report.to_json();
}

}  // namespace
}  // namespace lift3d
