#include "support.hpp"

using namespace pbtrack;
using support::vec;
using Catch::Matchers::WithinAbs;

TEST_CASE("coriolis vanishes for constant inertia") {
  PointMass pm;
  const Matrix c = coriolis(pm, {vec({0.3, -1.0}), vec({2.0, -0.7})});
  CHECK(c.isZero(0.0));
}

TEST_CASE("coriolis vanishes at rest for the arm") {
  TwoLinkArm arm;
  const Matrix c = coriolis(arm, {vec({0.4, 1.1}), Vector::Zero(2)});
  CHECK(c.isZero(0.0));
}

TEST_CASE("inertia rate minus twice coriolis is skew along the flow") {
  TwoLinkArm arm;
  std::mt19937_64 rng(1);
  constexpr double h = 1e-6;
  for (int i = 0; i < 1000; ++i) {
    const Vector q = support::random_vector(rng, 2, 3.0);
    const Vector qd = support::random_vector(rng, 2, 2.0);
    const Vector v = support::random_vector(rng, 2, 1.0);
    const Matrix mdot = (arm.inertia(q + h * qd) - arm.inertia(q - h * qd)) / (2 * h);
    const Matrix c = coriolis(arm, {q, qd});
    REQUIRE_THAT(v.dot((mdot - 2.0 * c) * v), WithinAbs(0.0, 1e-9));
    REQUIRE_THAT(qd.dot((mdot - 2.0 * c) * qd), WithinAbs(0.0, 1e-9));
  }
}

TEST_CASE("coriolis matches the closed-form two-link expression") {
  TwoLinkArm arm;
  const TwoLinkParams p;
  const Vector q = vec({0.3, 0.8});
  const Vector qd = vec({1.2, -0.5});
  const double h = -p.m2 * p.l1 * p.lc2 * std::sin(q(1));
  Matrix expected(2, 2);
  expected << h * qd(1), h * (qd(0) + qd(1)), -h * qd(0), 0.0;
  CHECK((coriolis(arm, {q, qd}) - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("forward dynamics of a free and a pushed point mass") {
  PointMass pm;
  CHECK(forward_dynamics(pm, {vec({0, 0}), vec({1, 0})}, vec({0, 0})).isZero(0.0));
  CHECK(forward_dynamics(pm, {vec({0, 0}), vec({0, 0})}, vec({2, 0})).isApprox(vec({2, 0})));
}

TEST_CASE("inverse dynamics of a unit mass on the unit circle") {
  PointMass pm;
  const Vector tau = inverse_dynamics(pm, {vec({1, 0}), vec({0, 1})}, vec({-1, 0}));
  CHECK((tau - vec({-1, 0})).norm() < 1e-15);
  CHECK(inverse_dynamics(pm, {vec({0.3, 2}), vec({0, 0})}, vec({0, 0})).isZero(0.0));
}

TEST_CASE("forward and inverse dynamics round-trip on the arm") {
  TwoLinkArm arm;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const ConfigurationState cs{support::random_vector(rng, 2, 3.0), support::random_vector(rng, 2, 2.0)};
    const Vector qdd = support::random_vector(rng, 2, 5.0);
    const Vector tau = inverse_dynamics(arm, cs, qdd);
    REQUIRE((forward_dynamics(arm, cs, tau) - qdd).norm() <= 1e-9);
  }
}

TEST_CASE("singular inertia is reported") {
  UserModel bad("flat", 2, [](const Vector&) {
    Matrix m = Matrix::Identity(2, 2);
    m(1, 1) = 1e-14;
    return m;
  }, [](const Vector&) { return 0.0; });
  try {
    forward_dynamics(bad, {vec({0, 0}), vec({0, 0})}, vec({1, 1}));
    FAIL("expected singular_inertia");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::singular_inertia);
  }
  UserModel indefinite("neg", 1, [](const Vector&) { return Matrix::Constant(1, 1, -1.0); },
                       [](const Vector&) { return 0.0; });
  CHECK_THROWS_AS(forward_dynamics(indefinite, {vec({0}), vec({0})}, vec({1})), Error);
}

TEST_CASE("dimension mismatches are contract errors") {
  TwoLinkArm arm;
  try {
    coriolis(arm, {vec({0, 0, 0}), vec({0, 0, 0})});
    FAIL("expected contract error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::contract);
  }
  CHECK_THROWS_AS(inverse_dynamics(arm, {vec({0, 0}), vec({0, 0})}, vec({1})), Error);
  CHECK_THROWS_AS(power_bracket(vec({1, 2}), vec({1})), Error);
  CHECK_THROWS_AS(hamiltonian(arm, {vec({0, NAN}), vec({0, 0})}), Error);
}

TEST_CASE("hamiltonian") {
  PointMass pm;
  CHECK(hamiltonian(pm, {vec({4, 5}), vec({1, 1})}) == 1.0);
  TwoLinkArm arm;
  const Vector q = vec({0.2, -0.4});
  CHECK(hamiltonian(arm, {q, Vector::Zero(2)}) == arm.potential(q));
}

TEST_CASE("power bracket") {
  CHECK(power_bracket(vec({1, 2}), vec({3, 4})) == 11.0);
  CHECK(power_bracket(vec({1, 0}), vec({0, 5})) == 0.0);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vector a = support::random_vector(rng, 3), b = support::random_vector(rng, 3), c = support::random_vector(rng, 3);
    const double x = std::uniform_real_distribution<double>(-5, 5)(rng);
    REQUIRE_THAT(power_bracket(x * a + b, c), WithinAbs(x * power_bracket(a, c) + power_bracket(b, c), 1e-12));
    REQUIRE_THAT(power_bracket(a, x * c), WithinAbs(x * power_bracket(a, c), 1e-12));
  }
}

TEST_CASE("built-in inertias are symmetric positive definite") {
  std::mt19937_64 rng(4);
  const TwoLinkArm arm;
  const PointMass pm(2.5, 3, 9.81);
  for (int i = 0; i < 1000; ++i) {
    for (const MechModel* m : {static_cast<const MechModel*>(&arm), static_cast<const MechModel*>(&pm)}) {
      const Matrix M = m->inertia(support::random_vector(rng, m->dim(), 4.0));
      REQUIRE((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      REQUIRE(Eigen::SelfAdjointEigenSolver<Matrix>(M).eigenvalues().minCoeff() > 0.0);
    }
  }
}

TEST_CASE("two-link inertia matches the closed form at a known pose") {
  const TwoLinkArm arm;
  const Matrix M = arm.inertia(vec({0.0, std::numbers::pi / 2}));
  // cos(q2) = 0: M11 = 1/4 + 1/12 + 1 + 1/4 + 1/12 = 5/3, M12 = 1/4 + 1/12, M22 = 1/3
  CHECK_THAT(M(0, 0), WithinAbs(5.0 / 3.0, 1e-15));
  CHECK_THAT(M(0, 1), WithinAbs(1.0 / 3.0, 1e-15));
  CHECK_THAT(M(1, 1), WithinAbs(1.0 / 3.0, 1e-15));
  CHECK_THAT(arm.inertia(vec({0.0, 0.0}))(0, 0), WithinAbs(5.0 / 3.0 + 1.0, 1e-15));
}

TEST_CASE("model gradients match central differences") {
  constexpr double h = 1e-6;
  std::mt19937_64 rng(5);
  const TwoLinkArm arm;
  const PointMass pm(2.0, 2, 9.81);
  for (int i = 0; i < 1000; ++i) {
    for (const MechModel* m : {static_cast<const MechModel*>(&arm), static_cast<const MechModel*>(&pm)}) {
      const Vector q = support::random_vector(rng, 2, 3.0);
      const Vector g = m->potential_grad(q);
      const auto dM = m->inertia_partials(q);
      for (Eigen::Index k = 0; k < 2; ++k) {
        Vector qp = q, qm = q;
        qp(k) += h;
        qm(k) -= h;
        REQUIRE_THAT(g(k), WithinAbs((m->potential(qp) - m->potential(qm)) / (2 * h), 1e-6));
        const Matrix fd = (m->inertia(qp) - m->inertia(qm)) / (2 * h);
        REQUIRE((fd - dM[static_cast<std::size_t>(k)]).cwiseAbs().maxCoeff() <= 1e-5 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST_CASE("point-mass gravity acts on the last coordinate") {
  const PointMass pm(2.0, 2, 9.81);
  CHECK_THAT(pm.potential(vec({3.0, 0.5})), WithinAbs(2.0 * 9.81 * 0.5, 1e-14));
  CHECK(pm.potential_grad(vec({3.0, 0.5})).isApprox(vec({0.0, 2.0 * 9.81})));
}

TEST_CASE("user model without partials falls back to finite differences") {
  const TwoLinkArm arm;
  UserModel user("arm-copy", 2, [&](const Vector& q) { return arm.inertia(q); },
                 [&](const Vector& q) { return arm.potential(q); });
  CHECK_FALSE(user.has_analytic_partials());
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const ConfigurationState cs{support::random_vector(rng, 2, 3.0), support::random_vector(rng, 2, 2.0)};
    REQUIRE((coriolis(user, cs) - coriolis(arm, cs)).cwiseAbs().maxCoeff() <= 1e-8);
    REQUIRE((user.potential_grad(cs.q) - arm.potential_grad(cs.q)).norm() <= 1e-7);
  }
}

namespace {

/// Open-loop run under tau(t) with trapezoidal power integral.
double energy_balance_error(const MechModel& m, const ConfigurationState& x0,
                            const std::function<Vector(double)>& tau) {
  constexpr double h = 1e-3;
  ConfigurationState x = x0;
  const auto n = m.dim();
  auto field = [&](double t, const Vector& y) {
    Vector d(2 * n);
    const ConfigurationState cs{y.head(n), y.tail(n)};
    d << cs.qdot, forward_dynamics(m, cs, tau(t));
    return d;
  };
  Vector y(2 * n);
  y << x.q, x.qdot;
  const double H0 = hamiltonian(m, x);
  double work = 0.0;
  double p_prev = power_bracket(tau(0.0), x.qdot);
  for (int k = 0; k < 5000; ++k) {
    const double t = k * h;
    const Vector k1 = field(t, y), k2 = field(t + h / 2, y + h / 2 * k1), k3 = field(t + h / 2, y + h / 2 * k2),
                 k4 = field(t + h, y + h * k3);
    y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    const double p = power_bracket(tau(t + h), y.tail(n));
    work += 0.5 * h * (p_prev + p);
    p_prev = p;
  }
  const double dH = hamiltonian(m, {y.head(n), y.tail(n)}) - H0;
  return std::abs(dH - work) / (1.0 + std::abs(dH));
}

}  // namespace

TEST_CASE("open-loop energy balance under bounded input") {
  auto tau = [](double t) { return vec({std::sin(3 * t), 0.5 * std::cos(2 * t)}); };
  CHECK(energy_balance_error(TwoLinkArm{}, {vec({0.3, 0.5}), vec({0.2, -0.4})}, tau) <= 1e-5);
  CHECK(energy_balance_error(PointMass(1.0, 2, 9.81), {vec({0, 0}), vec({1, 0.5})}, tau) <= 1e-5);
}
