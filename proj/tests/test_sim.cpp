#include "support.hpp"

#include <cstring>

using namespace pbtrack;
using support::vec;
using Catch::Matchers::WithinAbs;

namespace {

Scenario circle_scenario(ControllerMode mode, double horizon = 20.0) {
  Scenario sc;
  sc.rm = support::reduced(support::unit_mass(), support::unit_circle());
  sc.controller = mode;
  sc.horizon = horizon;
  sc.initial = standard_perturbation(*sc.rm);
  return sc;
}

Scenario arm_scenario(ControllerMode mode, double horizon) {
  Scenario sc;
  sc.rm = support::reduced(support::arm(0.0), support::joint_circle(2.0));
  sc.controller = mode;
  sc.horizon = horizon;
  sc.initial = standard_perturbation(*sc.rm);
  return sc;
}

/// 1-D unit mass with potential U = q^2/2.
std::shared_ptr<UserModel> oscillator() {
  return std::make_shared<UserModel>(
      "oscillator", 1, [](const Vector&) { return Matrix(Matrix::Identity(1, 1)); },
      [](const Vector& q) { return 0.5 * q(0) * q(0); },
      [](const Vector&) { return std::vector<Matrix>{Matrix::Zero(1, 1)}; }, [](const Vector& q) { return q; });
}

Scenario open_loop_1d(ModelPtr model, double q0, double v0, double horizon) {
  Scenario sc;
  sc.rm = support::reduced(std::move(model), support::line(vec({0}), vec({1})));
  sc.controller = ControllerMode::open_loop;
  sc.horizon = horizon;
  sc.initial.q = vec({q0});
  sc.initial.qdot = vec({v0});
  return sc;
}

}  // namespace

TEST_CASE("augmented state packs and unpacks") {
  AugmentedState a{vec({1, 2}), vec({3, 4}), 5, 6, 7};
  const AugmentedState b = AugmentedState::unpack(a.pack(), 2);
  CHECK(b.q == a.q);
  CHECK(b.qdot == a.qdot);
  CHECK(b.s == 5);
  CHECK(b.sdot == 6);
  CHECK(b.sigma == 7);
}

TEST_CASE("open-loop free point mass does not accelerate") {
  Scenario sc = circle_scenario(ControllerMode::open_loop);
  sc.initial.qdot = vec({1, 0});
  const Vector d = closed_loop_field(sc, sc.initial);
  CHECK(d.segment(2, 2).isZero(0.0));
}

TEST_CASE("field at exact reference conditions") {
  for (auto mode : {ControllerMode::theorem1, ControllerMode::theorem1_pump}) {
    Scenario sc = arm_scenario(mode, 1.0);
    sc.rm = support::reduced(support::arm(), support::joint_circle());
    const double s = 0.8;
    const AugmentedState x{sc.rm->path().value(s), sc.rm->path().d1(s), s, 1.0, s};
    const Vector d = closed_loop_field(sc, x);
    CHECK((d.segment(2, 2) - sc.rm->path().d2(s)).norm() <= 1e-10);
    CHECK_THAT(d(5), WithinAbs(0.0, 1e-12));
    CHECK_THAT(d(6), WithinAbs(1.0, 1e-15));
  }
}

TEST_CASE("recorded states are consistent with the field") {
  const Scenario sc = arm_scenario(ControllerMode::theorem1, 2.0);
  const Trace tr = integrate(sc);
  REQUIRE(tr.complete());
  const double h = sc.step;
  double worst = 0.0;
  auto x = [&](std::size_t i) { return tr.samples[i].state.pack(); };
  for (std::size_t i = 2; i + 2 < tr.samples.size(); i += 37) {
    const Vector fd = (x(i - 2) - 8 * x(i - 1) + 8 * x(i + 1) - x(i + 2)) / (12 * h);
    const Vector f = closed_loop_field(sc, tr.samples[i].state, tr.samples[i].t);
    worst = std::max(worst, (fd - f).cwiseAbs().maxCoeff() / (1 + f.cwiseAbs().maxCoeff()));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("free unit mass travels one unit in one second") {
  const Scenario sc = open_loop_1d(std::make_shared<PointMass>(1.0, 1), 0.25, 1.0, 1.0);
  const Trace tr = integrate(sc);
  REQUIRE(tr.complete());
  REQUIRE(tr.samples.size() == 1001);
  CHECK_THAT(tr.samples.back().state.q(0), WithinAbs(1.25, 1e-12));
  CHECK_THAT(tr.samples.back().t, WithinAbs(1.0, 1e-15));
}

TEST_CASE("harmonic oscillator energy drift over a thousand periods") {
  const double periods = 1000;
  const Scenario sc = open_loop_1d(oscillator(), 1.0, 0.0, 1.0);
  const auto steps = static_cast<std::size_t>(std::llround(periods * 2 * std::numbers::pi / sc.step));
  const AugmentedState end = advance(sc, steps);
  const double E0 = 0.5, E1 = 0.5 * (end.q(0) * end.q(0) + end.qdot(0) * end.qdot(0));
  CHECK(std::abs(E1 - E0) / E0 <= 1e-6);
}

TEST_CASE("advance and integrate agree") {
  const Scenario sc = arm_scenario(ControllerMode::theorem1_pump, 0.5);
  const Trace tr = integrate(sc);
  const AugmentedState end = advance(sc, 500);
  CHECK(end.pack() == tr.samples.back().state.pack());
}

TEST_CASE("integration is deterministic") {
  const Scenario sc = arm_scenario(ControllerMode::theorem1_pump, 1.0);
  const Trace a = integrate(sc), b = integrate(sc);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    REQUIRE(a.samples[i].state.pack() == b.samples[i].state.pack());
    REQUIRE(a.samples[i].tau_total == b.samples[i].tau_total);
    REQUIRE(std::memcmp(&a.samples[i].energy.E_total, &b.samples[i].energy.E_total, sizeof(double)) == 0);
  }
  const std::vector<Scenario> batch{sc, circle_scenario(ControllerMode::theorem1, 1.0), sc};
  const auto traces = run_batch(batch, 3);
  CHECK(traces[0].samples.back().state.pack() == a.samples.back().state.pack());
  CHECK(traces[2].samples.back().state.pack() == a.samples.back().state.pack());
  CHECK(traces[1].mode == ControllerMode::theorem1);
}

TEST_CASE("faults end the run with a partial trace") {
  auto blowup = std::make_shared<UserModel>(
      "blowup", 2, [](const Vector&) { return Matrix(Matrix::Identity(2, 2)); },
      [](const Vector& q) { return q(0) > 0.5 ? NAN : 0.0; }, std::nullopt,
      [](const Vector& q) { return q(0) > 0.5 ? vec({NAN, 0}) : vec({0, 0}); });
  Scenario sc;
  sc.rm = support::reduced(blowup, support::line(vec({0, 0}), vec({1, 0})));
  sc.controller = ControllerMode::open_loop;
  sc.horizon = 2.0;
  sc.initial.q = vec({0, 0});
  sc.initial.qdot = vec({1, 0});
  const Trace tr = integrate(sc);
  REQUIRE_FALSE(tr.complete());
  CHECK(tr.samples.size() > 400);
  CHECK(tr.samples.size() < 600);
  CHECK_THAT(tr.fault->what, Catch::Matchers::ContainsSubstring("non-finite"));
}

TEST_CASE("computed-torque baseline") {
  const auto rm = support::reduced(support::arm(), support::joint_circle());
  const auto ref = TimeReference::from_path(rm->path_ptr(), 0.0);
  const double t = 0.7;
  const ConfigurationState on{ref.value(t), ref.d1(t)};
  CHECK((computed_torque_baseline(rm->model(), ref, {}, on, t) - inverse_dynamics(rm->model(), on, ref.d2(t))).norm() <=
        1e-12);

  const auto circle = support::reduced(support::unit_mass(), support::unit_circle());
  const auto cref = TimeReference::from_path(circle->path_ptr(), 0.0);
  for (double tt : {0.0, 1.0, 2.5}) {
    const Vector tau = computed_torque_baseline(circle->model(), cref, {}, {cref.value(tt), cref.d1(tt)}, tt);
    CHECK((tau - vec({-std::cos(tt), -std::sin(tt)})).norm() <= 1e-15);
  }
}

TEST_CASE("computed-torque tracking error decays in the inertia norm") {
  Scenario sc = arm_scenario(ControllerMode::computed_torque, 3.0);
  sc.rm = support::reduced(support::arm(), support::joint_circle());
  sc.initial = standard_perturbation(*sc.rm, 0.0, 0.01, 1.0);
  const Trace tr = integrate(sc);
  REQUIRE(tr.complete());
  const auto ref = TimeReference::from_path(sc.rm->path_ptr(), 0.0);
  double prev = INFINITY;
  for (std::size_t i = 0; i < tr.samples.size(); i += 100) {
    const auto& x = tr.samples[i];
    const Vector e = x.state.q - ref.value(x.t);
    const Vector ed = x.state.qdot - ref.d1(x.t);
    const Matrix M = sc.model().inertia(x.state.q);
    // Lyapunov-like error energy of the PD loop
    const double v = 0.5 * ed.dot(M * ed) + 0.5 * sc.baseline.kp * e.squaredNorm();
    REQUIRE(v <= prev * (1 + 1e-9));
    prev = v;
  }
}

TEST_CASE("zero-dynamics portrait") {
  const auto arm = support::reduced(support::arm(), support::joint_circle());
  const std::vector<PortraitSeed> seeds{{0.0, 1.0}, {1.0, -1.0}, {0.5, 0.5}, {2.0, -0.3}};
  const auto runs = zero_dynamics_portrait(*arm, seeds, 10.0, 1e-3);
  REQUIRE(runs.size() == 4);
  for (std::size_t k = 0; k < runs[0].sdot.size(); ++k) {
    REQUIRE_THAT(runs[0].sdot[k], WithinAbs(1.0, 1e-8));
    REQUIRE_THAT(runs[1].sdot[k], WithinAbs(-1.0, 1e-8));
    REQUIRE(std::abs(runs[2].sdot[k]) <= 1 + 1e-6);
    REQUIRE(std::abs(runs[3].sdot[k]) <= 1 + 1e-6);
  }

  const auto line = support::reduced(support::unit_mass(), support::line(vec({0, 0}), vec({0.5, 0.5})));
  const std::vector<PortraitSeed> more{{0, 2.0}, {0, -0.4}};
  for (const auto& run : zero_dynamics_portrait(*line, more, 2.0, 1e-2)) {
    for (double v : run.sdot) REQUIRE(v == run.seed.sdot0);
  }
}

TEST_CASE("portrait faults are per seed") {
  auto path = std::make_shared<PolynomialPath>(vec({0, 0}), vec({1, 0}), vec({0, 0}), PathDomain{0, 1, Extension::clamp});
  const auto rm = support::reduced(support::unit_mass(), path);
  const std::vector<PortraitSeed> seeds{{0.1, 1.0}, {0.2, 0.01}};
  const auto runs = zero_dynamics_portrait(*rm, seeds, 2.0, 1e-2);
  CHECK(runs[0].fault.has_value());
  CHECK_FALSE(runs[1].fault.has_value());
  CHECK(runs[1].t.size() == 201);
}

TEST_CASE("power balance verification") {
  SECTION("on-reference run has zero residual") {
    Scenario sc = circle_scenario(ControllerMode::theorem1, 5.0);
    sc.initial = on_reference(*sc.rm, 0.3);
    const auto r = verify_power_balance(integrate(sc));
    CHECK(r.pass);
    CHECK(r.max_abs_stilde_dot <= 1e-12);
  }
  SECTION("perturbed run") {
    const Trace tr = integrate(arm_scenario(ControllerMode::theorem1, 5.0));
    const auto r = verify_power_balance(tr);
    CHECK(r.pass);
    CHECK(r.max_abs_stilde_dot > 1e-2);
  }
  SECTION("wrong mode") {
    try {
      verify_power_balance(integrate(circle_scenario(ControllerMode::open_loop, 0.1)));
      FAIL("expected misuse");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::misuse);
    }
  }
}

TEST_CASE("energy rate stencil is fourth order") {
  Trace tr;
  tr.step = 0.01;
  for (int i = 0; i <= 100; ++i) {
    TraceSample s;
    s.t = i * tr.step;
    s.energy.E_total = std::sin(s.t);
    tr.samples.push_back(s);
  }
  fill_energy_rate(tr);
  for (const auto& s : tr.samples) REQUIRE_THAT(s.energy.dE_dt_numeric, WithinAbs(std::cos(s.t), 1e-8));
}

TEST_CASE("convergence metrics on a reference-start run") {
  Scenario sc = circle_scenario(ControllerMode::theorem1_pump, 10.0);
  sc.initial = on_reference(*sc.rm, 0.3);
  const Trace tr = integrate(sc);
  const auto c = convergence_metrics(tr, *sc.rm);
  CHECK_THAT(c.t0_estimate, WithinAbs(0.3, 1e-6));
  CHECK(std::abs(c.stilde_mean) <= 1e-12);
  CHECK(c.phi_max <= 1e-20);
  CHECK(c.E_max_abs <= 1e-12);
  CHECK_THROWS_AS(convergence_metrics(tr, *sc.rm, 11.0), Error);
}

TEST_CASE("reference-start invariance for both systems and both backings") {
  CirclePath jc(vec({0.5, 1.0}), 0.5);
  const std::vector<std::pair<ModelPtr, PathPtr>> cases{
      {support::unit_mass(), support::unit_circle()},
      {support::unit_mass(), support::spline_circle()},
      {support::arm(), support::joint_circle()},
      {support::arm(), std::make_shared<SplinePath>(sample_path(jc, 0, jc.domain().hi, 1000), Extension::periodic)}};
  for (const auto& [m, p] : cases) {
    Scenario sc;
    sc.rm = support::reduced(m, p);
    const ReferenceStartReport r = reference_start_run(sc, 0.3, 10.0);
    REQUIRE_FALSE(r.fault);
    CHECK(r.max_q_error <= 1e-6);
    CHECK(r.max_tau_error <= 1e-6);
    CHECK(r.max_pump_force <= 1e-9);
    CHECK(r.max_pump_reference <= 1e-9);
  }
}

TEST_CASE("scenario validation") {
  Scenario sc = circle_scenario(ControllerMode::theorem1);
  sc.step = 0.0;
  CHECK_THROWS_AS(integrate(sc), Error);
  sc = circle_scenario(ControllerMode::theorem1);
  sc.horizon = 1e-4;
  CHECK_THROWS_AS(integrate(sc), Error);
  sc = circle_scenario(ControllerMode::theorem1);
  sc.initial.q = vec({0, 0, 0});
  CHECK_THROWS_AS(integrate(sc), Error);
  sc = circle_scenario(ControllerMode::theorem1);
  sc.gains.damping_R = 0.0;
  CHECK_THROWS_AS(integrate(sc), Error);
}
