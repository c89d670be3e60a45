#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support.hpp"

using namespace normsmooth;
using testsupport::Vector;

namespace {

// Diagonal 0/1 mask derivative through the l1 operator: coordinates with
// |z_i| > mu*lambda are active. Arbitrary SPD curvatures are realized by
// seeding a limited-memory model with exact pairs of a random SPD map.
ProxDerivative mask_derivative(const std::vector<int>& active, double lambda) {
  const Index n = static_cast<Index>(active.size());
  Vector z(n);
  for (Index i = 0; i < n; ++i) z[i] = active[i] ? 2.0 : 0.0;
  return ProxOperator::l1(1.0 / lambda).derivative(z, lambda);  // threshold t = 1
}

Matrix dense_operator(const NewtonOperator& op, Index n,
                      Vector (NewtonOperator::*applyfn)(const Vector&) const) {
  Matrix out(n, n);
  for (Index j = 0; j < n; ++j) {
    Vector e = Vector::Zero(n);
    e[j] = 1.0;
    out.col(j) = (op.*applyfn)(e);
  }
  return out;
}

Matrix dense_hessian(const HessianModel& model, Index n) {
  Matrix out(n, n);
  for (Index j = 0; j < n; ++j) {
    Vector e = Vector::Zero(n);
    e[j] = 1.0;
    out.col(j) = model.apply(e);
  }
  return out;
}

}  // namespace

TEST_CASE("identity reduced system solves in one iteration") {
  const Index n = 5;
  const SmoothObjective quad = SmoothObjective::quadratic(Vector::Zero(n), 1.0);  // B = I
  HessianModel model = HessianModel::exact(quad);
  model.set_point(Vector::Zero(n));
  const ProxDerivative d = mask_derivative(std::vector<int>(n, 1), 1.0);
  const NewtonOperator op(model, d, 1.0);  // S = I
  Rng rng(1);
  const Vector g = rng.normal_vector(n);
  const CGOutcome out = cg_solve(op, g, 0.0, 100);
  REQUIRE(out.status == CGStatus::TolConverged);
  REQUIRE(out.iterations == 1);
  REQUIRE((out.q + g).norm() <= 1e-12 * g.norm());
}

TEST_CASE("zero curvature model exits on negative curvature with q = -g") {
  const Index n = 4;
  const SmoothObjective quad = SmoothObjective::quadratic(Vector::Zero(n), 0.0);  // B = 0
  HessianModel model = HessianModel::exact(quad);
  model.set_point(Vector::Zero(n));
  const ProxDerivative d = mask_derivative(std::vector<int>(n, 1), 1.0);
  const NewtonOperator op(model, d, 1.0);  // M = 0, S = 0
  Rng rng(2);
  const Vector g = rng.normal_vector(n);
  const CGOutcome out = cg_solve(op, g, 0.0, 100);
  REQUIRE(out.status == CGStatus::NegativeCurvature);
  REQUIRE(out.iterations == 0);
  REQUIRE((out.q + g).norm() == 0.0);
}

TEST_CASE("zero derivative gives a zero-residual start") {
  const Index n = 4;
  const SmoothObjective quad = SmoothObjective::quadratic(Vector::Zero(n));
  HessianModel model = HessianModel::exact(quad);
  model.set_point(Vector::Zero(n));
  const ProxDerivative d = mask_derivative(std::vector<int>(n, 0), 1.0);  // D = 0
  const NewtonOperator op(model, d, 1.0);
  const Vector fnor = Vector::Ones(n);
  const Vector g = d.apply(fnor);  // = 0
  const CGOutcome out = cg_solve(op, g, 0.0, 100);
  REQUIRE(out.status == CGStatus::ZeroResidualStart);
  REQUIRE(out.iterations == 0);
  REQUIRE(out.q.norm() == 0.0);
}

TEST_CASE("dense pseudo-inverse oracle and the rank bound") {
  Rng rng(3);
  for (int rep = 0; rep < 30; ++rep) {
    const Index n = 8 + rng.uniform_index(43);
    const double lambda = rng.uniform(0.5, 4.0);
    // random curvature-consistent limited-memory model (SPD by construction)
    HessianModel model = HessianModel::lbfgs(n, 10);
    const Matrix map = testsupport::random_spd(rng, n, 0.5, 3.0);
    for (int k = 0; k < 6; ++k) {
      const Vector s = rng.normal_vector(n);
      model.update(s, map * s);
    }
    std::vector<int> active(n);
    Index rank = 0;
    for (Index i = 0; i < n; ++i) {
      active[i] = rng.uniform() < 0.6 ? 1 : 0;
      rank += active[i];
    }
    const ProxDerivative d = mask_derivative(active, lambda);
    const NewtonOperator op(model, d, lambda);

    Vector fnor = rng.normal_vector(n);
    const Vector g = d.apply(fnor);
    const CGOutcome out = cg_solve(op, g, 0.0, static_cast<int>(n) + 5);

    const Matrix s_dense = dense_operator(op, n, &NewtonOperator::apply_reduced);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(s_dense);
    const Vector expected = cod.solve(-g);
    if (rank == 0) {
      REQUIRE(out.status == CGStatus::ZeroResidualStart);
      continue;
    }
    REQUIRE(out.status == CGStatus::TolConverged);
    REQUIRE(out.iterations <= static_cast<int>(rank) + 1);
    REQUIRE((out.q - expected).norm() <= 1e-8 * std::max(1.0, expected.norm()));
    // S is PSD here, so the curvature exit must never fire
    REQUIRE(out.status != CGStatus::NegativeCurvature);
  }
}

TEST_CASE("CG iterates stay conjugate and residuals orthogonal to prior directions") {
  Rng rng(5);
  const Index n = 20;
  HessianModel model = HessianModel::lbfgs(n, 10);
  const Matrix map = testsupport::random_spd(rng, n);
  for (int k = 0; k < 8; ++k) {
    const Vector s = rng.normal_vector(n);
    model.update(s, map * s);
  }
  std::vector<int> active(n, 1);
  const ProxDerivative d = mask_derivative(active, 1.0);
  const NewtonOperator op(model, d, 1.0);

  std::vector<Vector> rs, ps;
  const Vector g = rng.normal_vector(n);
  cg_solve(op, g, 0.0, n, [&](int, const Vector& r, const Vector& p) {
    rs.push_back(r);
    ps.push_back(p);
  });
  REQUIRE(rs.size() >= 3);
  const Matrix s_dense = dense_operator(op, n, &NewtonOperator::apply_reduced);
  for (std::size_t i = 1; i < rs.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      REQUIRE(std::abs(rs[i].dot(ps[j])) <= 1e-8 * std::max(1.0, rs[i].norm() * ps[j].norm()));
      REQUIRE(std::abs(ps[i].dot(s_dense * ps[j])) <=
              1e-7 * std::max(1.0, ps[i].norm() * ps[j].norm()));
    }
  }
}

TEST_CASE("iteration cap is honored") {
  Rng rng(6);
  const Index n = 30;
  HessianModel model = HessianModel::lbfgs(n, 10);
  const Matrix map = testsupport::random_spd(rng, n, 0.1, 10.0);
  for (int k = 0; k < 10; ++k) {
    const Vector s = rng.normal_vector(n);
    model.update(s, map * s);
  }
  const ProxDerivative d = mask_derivative(std::vector<int>(n, 1), 1.0);
  const NewtonOperator op(model, d, 1.0);
  const Vector g = rng.normal_vector(n);
  const CGOutcome out = cg_solve(op, g, 1e-300, 3);  // unreachable tolerance
  REQUIRE(out.status == CGStatus::IterationCap);
  REQUIRE(out.iterations == 3);
}

TEST_CASE("recover_directions: algebra and the exact-solve oracle") {
  Rng rng(7);
  const Index n = 12;
  const double lambda = 1.7;
  HessianModel model = HessianModel::lbfgs(n, 10);
  const Matrix map = testsupport::random_spd(rng, n);
  for (int k = 0; k < 6; ++k) {
    const Vector s = rng.normal_vector(n);
    model.update(s, map * s);
  }
  std::vector<int> active(n);
  for (Index i = 0; i < n; ++i) active[i] = rng.uniform() < 0.7 ? 1 : 0;
  const ProxDerivative d = mask_derivative(active, lambda);
  const NewtonOperator op(model, d, lambda);
  const Vector fnor = rng.normal_vector(n);

  // q = 0 gives d = -F and no curvature correction
  {
    const auto [dd, ee] = recover_directions(op, Vector::Zero(n), fnor);
    REQUIRE((dd + fnor).norm() == 0.0);
    REQUIRE(ee.norm() == 0.0);
  }
  // lambda = 1 with M = I cancels the correction for any q
  {
    const SmoothObjective quad = SmoothObjective::quadratic(Vector::Zero(n), 1.0);
    HessianModel eye = HessianModel::exact(quad);
    eye.set_point(Vector::Zero(n));
    const ProxDerivative full = mask_derivative(std::vector<int>(n, 1), 1.0);
    const NewtonOperator identity_op(eye, full, 1.0);
    const Vector q = rng.normal_vector(n);
    const auto [dd, ee] = recover_directions(identity_op, q, fnor);
    REQUIRE(ee.norm() <= 1e-14 * q.norm());
  }
  // exact unreduced solve M qhat = -F makes lambda(d + e) the pure Newton step
  {
    const Matrix m_dense = dense_operator(op, n, &NewtonOperator::apply_newton_matrix);
    const Vector qhat = m_dense.fullPivLu().solve(-fnor);
    const auto [dd, ee] = recover_directions(op, qhat, fnor);
    const Vector step = lambda * (dd + ee);
    REQUIRE((step - qhat).norm() <= 1e-9 * std::max(1.0, qhat.norm()));
  }
}

TEST_CASE("step recovery bound of the reduced solve") {
  Rng rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 10 + rng.uniform_index(20);
    const double lambda = rng.uniform(0.5, 2.0);
    HessianModel model = HessianModel::lbfgs(n, 10);
    const Matrix map = testsupport::random_spd(rng, n);
    for (int k = 0; k < 5; ++k) {
      const Vector s = rng.normal_vector(n);
      model.update(s, map * s);
    }
    std::vector<int> active(n);
    for (Index i = 0; i < n; ++i) active[i] = rng.uniform() < 0.5 ? 1 : 0;
    const ProxDerivative d = mask_derivative(active, lambda);
    const NewtonOperator op(model, d, lambda);
    const Vector fnor = rng.normal_vector(n);
    const Vector g = d.apply(fnor);
    const double eps = rng.uniform(1e-6, 1e-2) * std::max(g.norm(), 1.0);
    const CGOutcome out = cg_solve(op, g, eps, static_cast<int>(n) + 2);
    if (out.status != CGStatus::TolConverged) continue;
    const Vector mq = op.apply_newton_matrix(out.q);
    const Vector s = out.q - lambda * (mq + fnor);
    const Matrix gap = Matrix::Identity(n, n) - lambda * dense_hessian(model, n);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(gap);
    const double bound = eig.eigenvalues().cwiseAbs().maxCoeff() * eps;
    const Vector ms = op.apply_newton_matrix(s);
    REQUIRE((ms + fnor).norm() <= bound * (1.0 + 1e-8) + 1e-14);
  }
}

TEST_CASE("gradient-related test thresholds") {
  GradTestConfig cfg;  // eta = 1e-8, q = 0.2, c = 1e-3
  Vector e0 = Vector::Zero(3);
  REQUIRE(gradient_related_test(e0, 5.0, 100, cfg) == StepFlag::SO);

  Rng rng(9);
  const Vector e = rng.normal_vector(3).normalized();
  // k <= 1 degenerates eta_k to zero and always passes
  REQUIRE(gradient_related_test(1e12 * e, 1.0, 0, cfg) == StepFlag::SO);
  REQUIRE(gradient_related_test(1e12 * e, 1.0, 1, cfg) == StepFlag::SO);
  // chi = 0 likewise
  REQUIRE(gradient_related_test(1e12 * e, 0.0, 50, cfg) == StepFlag::SO);

  // large k where b_k chi^q saturates at eta = 1e-8: threshold ||e|| <= chi/eta
  const int k = 100000000;
  REQUIRE(growth_coefficient(k, cfg.scale, cfg.exponent) * 1.0 > cfg.eta);
  REQUIRE(gradient_related_test(1e9 * e, 1.0, k, cfg) == StepFlag::FO);
  REQUIRE(gradient_related_test(1e7 * e, 1.0, k, cfg) == StepFlag::SO);
}

TEST_CASE("growth coefficient follows c k^q ln^{2q}(k)") {
  REQUIRE(growth_coefficient(0, 1e-3, 0.2) == 0.0);
  REQUIRE(growth_coefficient(1, 1e-3, 0.2) == 0.0);
  const double k5 = growth_coefficient(5, 1e-3, 0.2);
  REQUIRE(k5 == Catch::Approx(1e-3 * std::pow(5.0, 0.2) * std::pow(std::log(5.0), 0.4)));
}

TEST_CASE("non-finite inputs surface as numerical breakdown") {
  const Index n = 3;
  const SmoothObjective quad = SmoothObjective::quadratic(Vector::Zero(n), 1.0);
  HessianModel model = HessianModel::exact(quad);
  model.set_point(Vector::Zero(n));
  const ProxDerivative d = mask_derivative(std::vector<int>(n, 1), 1.0);
  const NewtonOperator op(model, d, 1.0);
  Vector g(n);
  g << 1.0, std::numeric_limits<double>::quiet_NaN(), 0.0;
  REQUIRE_THROWS_AS(cg_solve(op, g, 0.0, 10), NumericalBreakdownError);
}
