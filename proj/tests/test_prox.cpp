#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "support.hpp"

using namespace normsmooth;
using testsupport::Vector;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ProxOperator make_operator(int which, Index n, double mu, Rng& rng) {
  switch (which) {
    case 0:
      return ProxOperator::l1(mu);
    case 1: {
      std::vector<Index> order(n);
      std::iota(order.begin(), order.end(), Index{0});
      rng.shuffle(order);
      std::vector<std::vector<Index>> groups;
      Index at = 0;
      while (at < n) {
        const Index len = std::min<Index>(n - at, 1 + rng.uniform_index(4));
        groups.emplace_back(order.begin() + at, order.begin() + at + len);
        at += len;
      }
      return ProxOperator::group_l2(mu, groups);
    }
    case 2:
      return ProxOperator::box_plus_l1(mu);
    default:
      return ProxOperator::zero();
  }
}

}  // namespace

TEST_CASE("l1 prox soft-thresholds") {
  const ProxOperator op = ProxOperator::l1(1.0);
  const Vector out = op.prox(vec({2.0, -0.5, 0.1}), 1.0);
  REQUIRE(out[0] == 1.0);
  REQUIRE(out[1] == 0.0);
  REQUIRE(out[2] == 0.0);
}

TEST_CASE("mu = 0 collapses to the identity for l1, group, zero") {
  Rng rng(7);
  const Vector z = rng.normal_vector(6);
  REQUIRE((ProxOperator::l1(0.0).prox(z, 2.0) - z).norm() == 0.0);
  REQUIRE((ProxOperator::zero().prox(z, 2.0) - z).norm() == 0.0);
  const auto groups = std::vector<std::vector<Index>>{{0, 1, 2}, {3, 4, 5}};
  REQUIRE((ProxOperator::group_l2(0.0, groups).prox(z, 2.0) - z).norm() == 0.0);
}

TEST_CASE("box prox at mu = 0 is the box projection") {
  const ProxOperator op = ProxOperator::box_plus_l1(0.0);
  const Vector out = op.prox(vec({1.7, -0.2, 0.5}), 1.0);
  REQUIRE(out[0] == 1.0);
  REQUIRE(out[1] == 0.0);
  REQUIRE(out[2] == 0.5);
}

TEST_CASE("group prox shrinks by 1 - t/||z_g||") {
  const ProxOperator op = ProxOperator::group_l2(1.0, {{0, 1}});
  const Vector out = op.prox(vec({3.0, 4.0}), 1.0);
  REQUIRE(out[0] == Catch::Approx((1.0 - 1.0 / 5.0) * 3.0).epsilon(1e-15));
  REQUIRE(out[1] == Catch::Approx((1.0 - 1.0 / 5.0) * 4.0).epsilon(1e-15));
}

TEST_CASE("box-plus-l1 prox composes clip with soft threshold") {
  const ProxOperator op = ProxOperator::box_plus_l1(0.5);
  const Vector out = op.prox(vec({1.7, 0.3, 0.9}), 1.0);
  REQUIRE(out[0] == 1.0);
  REQUIRE(out[1] == 0.0);
  REQUIRE(out[2] == 0.9 - 0.5);
}

TEST_CASE("prox rejects non-finite input and non-positive stepsize") {
  const ProxOperator op = ProxOperator::l1(1.0);
  Vector bad = vec({1.0, std::numeric_limits<double>::quiet_NaN()});
  REQUIRE_THROWS_AS(op.prox(bad, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(op.prox(vec({1.0}), 0.0), std::invalid_argument);
}

TEST_CASE("group construction validates the partition") {
  REQUIRE_THROWS_AS(ProxOperator::group_l2(1.0, {{0, 1}, {1, 2}}), std::invalid_argument);
  REQUIRE_THROWS_AS(ProxOperator::group_l2(1.0, {{0, 3}}), std::invalid_argument);
  REQUIRE_THROWS_AS(ProxOperator::group_l2(-1.0, {{0}}), std::invalid_argument);
}

TEST_CASE("phi values") {
  REQUIRE(ProxOperator::l1(2.0).phi(vec({1.0, -3.0})) == 8.0);
  REQUIRE(std::isinf(ProxOperator::box_plus_l1(1.0).phi(vec({1.2}))));
  const ProxOperator grp = ProxOperator::group_l2(1.0, {{0, 1}, {2}});
  REQUIRE(grp.phi(vec({3.0, 4.0, -2.0})) == 7.0);
  REQUIRE(ProxOperator::zero().phi(vec({5.0})) == 0.0);
}

TEST_CASE("derivative masks and tie conventions") {
  const ProxOperator op = ProxOperator::l1(1.0);
  const Vector dv = op.derivative_apply(vec({2.0, -0.5, 0.1}), 1.0, vec({1.0, 1.0, 1.0}));
  REQUIRE(dv[0] == 1.0);
  REQUIRE(dv[1] == 0.0);
  REQUIRE(dv[2] == 0.0);
  // ties |z_i| = t sit in the masked-out branch
  const Vector tie = op.derivative_apply(vec({1.0, -1.0}), 1.0, vec({1.0, 1.0}));
  REQUIRE(tie.norm() == 0.0);

  const ProxOperator box = ProxOperator::box_plus_l1(0.5);
  const Vector bd = box.derivative_apply(vec({0.5, 1.5, 1.0}), 1.0, vec({1.0, 1.0, 1.0}));
  REQUIRE(bd[0] == 0.0);  // z <= t
  REQUIRE(bd[1] == 0.0);  // z >= t + 1
  REQUIRE(bd[2] == 1.0);
}

TEST_CASE("group derivative vanishes on inactive blocks, zero kind is identity") {
  const ProxOperator grp = ProxOperator::group_l2(2.0, {{0, 1}, {2, 3}});
  Rng rng(3);
  const Vector v = rng.normal_vector(4);
  const Vector dv = grp.derivative_apply(vec({0.1, 0.1, 5.0, 1.0}), 1.0, v);
  REQUIRE(dv[0] == 0.0);  // ||z_g|| < mu*lambda
  REQUIRE(dv[1] == 0.0);
  REQUIRE(dv.tail(2).norm() > 0.0);
  // boundary ||z_g|| = mu*lambda also belongs to the inactive branch
  const Vector tie = grp.derivative_apply(vec({2.0, 0.0, 0.0, 2.0}), 1.0, v);
  REQUIRE(tie.norm() == 0.0);

  const Vector idv = ProxOperator::zero().derivative_apply(vec({9.0, -2.0}), 1.0, vec({1.0, 2.0}));
  REQUIRE(idv[0] == 1.0);
  REQUIRE(idv[1] == 2.0);
}

TEST_CASE("derivative apply agrees with the dense export, including permuted groups") {
  Rng rng(11);
  for (int which = 0; which < 4; ++which) {
    for (int rep = 0; rep < 5; ++rep) {
      const Index n = 8;
      const double mu = rng.uniform(0.05, 1.5);
      const ProxOperator op = make_operator(which, n, mu, rng);
      const double lambda = rng.uniform(0.2, 3.0);
      const Vector z = rng.normal_vector(n);
      const ProxDerivative d = op.derivative(z, lambda);
      const Matrix dense = d.dense();
      const Vector v = rng.normal_vector(n);
      REQUIRE((d.apply(v) - dense * v).norm() <= 1e-14 * std::max(1.0, v.norm()));
    }
  }
}

TEST_CASE("firm nonexpansiveness and derivative contraction") {
  Rng rng(17);
  for (int which = 0; which < 4; ++which) {
    const Index n = 10;
    const double mu = 0.4;
    const ProxOperator op = make_operator(which, n, mu, rng);
    for (int rep = 0; rep < 200; ++rep) {
      const double lambda = rng.uniform(0.3, 2.0);
      const Vector z = 3.0 * rng.normal_vector(n);
      const Vector w = 3.0 * rng.normal_vector(n);
      const Vector pz = op.prox(z, lambda);
      const Vector pw = op.prox(w, lambda);
      const double gap = (pz - pw).squaredNorm() - (pz - pw).dot(z - w);
      REQUIRE(gap <= 1e-12);

      const Vector v = rng.normal_vector(n);
      const double quad = v.dot(op.derivative_apply(z, lambda, v));
      REQUIRE(quad >= -1e-12);
      REQUIRE(quad <= v.squaredNorm() + 1e-12);
    }
  }
}

TEST_CASE("subgradient optimality of the prox image") {
  Rng rng(23);
  for (int which = 0; which < 4; ++which) {
    const Index n = 6;
    const ProxOperator op = make_operator(which, n, 0.7, rng);
    for (int rep = 0; rep < 100; ++rep) {
      const double lambda = rng.uniform(0.3, 2.0);
      const Vector z = 2.0 * rng.normal_vector(n);
      const Vector pz = op.prox(z, lambda);
      const Vector u = (z - pz) / lambda;
      for (int ysample = 0; ysample < 10; ++ysample) {
        Vector y = 2.0 * rng.normal_vector(n);
        if (which == 2) y = y.cwiseMax(0.0).cwiseMin(1.0);  // stay inside the box
        const double lhs = op.phi(y);
        const double rhs = op.phi(pz) + u.dot(y - pz);
        REQUIRE(lhs >= rhs - 1e-10);
      }
    }
  }
}

TEST_CASE("directional consistency of the generalized derivative") {
  Rng rng(29);
  for (int which = 0; which < 4; ++which) {
    const Index n = 8;
    const ProxOperator op = make_operator(which, n, 0.5, rng);
    const double lambda = 1.3;
    // generic base point kept away from the kink sets
    Vector z;
    ProxDerivative d;
    for (;;) {
      z = 2.0 * rng.normal_vector(n);
      d = op.derivative(z, lambda);
      bool near_kink = false;
      for (Index i = 0; i < n; ++i)
        if (std::abs(std::abs(z[i]) - op.mu() * lambda) < 0.05) near_kink = true;
      if (!near_kink) break;
    }
    const Vector dir = rng.normal_vector(n).normalized();
    auto ratio_at = [&](double h) {
      const Vector lhs = op.prox(z + h * dir, lambda) - op.prox(z, lambda) - h * d.apply(dir);
      return lhs.norm() / h;
    };
    // piecewise-affine kinds are exact away from kinks; the group kind decays
    // like O(h) until the difference quotient hits roundoff noise
    const double r1 = ratio_at(1e-3);
    const double r2 = ratio_at(1e-5);
    const double r3 = ratio_at(1e-7);
    REQUIRE(r2 <= std::max(0.1 * r1, 1e-8));
    REQUIRE(r3 <= std::max(0.01 * r1, 1e-8));
  }
}

TEST_CASE("dense export is reserved for test scale") {
  const ProxOperator op = ProxOperator::l1(1.0);
  REQUIRE_THROWS_AS(op.derivative(Vector::Zero(201), 1.0).dense(), std::logic_error);
}
