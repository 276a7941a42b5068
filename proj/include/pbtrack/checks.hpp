// Invariant checks shared by the `verify` command: each returns a named
// measurement against a fixed tolerance.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "pbtrack/sim.hpp"

namespace pbtrack {

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

namespace detail {

/// Interior sample grid over the path's nominal domain, kept `margin` away
/// from clamped ends.
inline std::vector<double> sample_params(const ReferencePath& path, std::size_t count, double margin) {
  const auto& d = path.domain();
  const double lo = d.lo + (d.mode == Extension::clamp ? margin : 0.0);
  const double hi = d.hi - (d.mode == Extension::clamp ? margin : 0.0);
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return out;
}

inline CheckResult make_check(std::string name, double value, double tol, std::string info = {}) {
  return {std::move(name), std::isfinite(value) && value <= tol, value, tol, std::move(info)};
}

}  // namespace detail

/// max |dW_r/ds + <q_r', tau_r>| with dW_r/ds by central differences
/// (h = 1e-5) over `count` samples.
inline CheckResult check_reference_potential_identity(const ReducedModel& rm, std::size_t count, double tol) {
  constexpr double h = 1e-5;
  double worst = 0.0;
  for (double s : detail::sample_params(rm.path(), count, 2.0 * h)) {
    const double dW = (rm.reference_potential(s + h) - rm.reference_potential(s - h)) / (2.0 * h);
    worst = std::max(worst, std::abs(dW + rm.path().d1(s).dot(rm.reference_force(s))));
  }
  return detail::make_check("reference-potential-identity", worst, tol);
}

/// max |H_r(s, +-1)| over `count` samples.
inline CheckResult check_reference_energy_zero(const ReducedModel& rm, std::size_t count) {
  double worst = 0.0;
  for (double s : detail::sample_params(rm.path(), count, 0.0)) {
    worst = std::max({worst, std::abs(rm.reference_hamiltonian(s, 1.0)), std::abs(rm.reference_hamiltonian(s, -1.0))});
  }
  return detail::make_check("reference-energy-zero", worst, 1e-12);
}

/// Power balance dE/dt = -R s~'^2 on a pumps-off run of the scenario.
inline CheckResult check_power_balance(const Scenario& base) {
  Scenario sc = base;
  sc.controller = ControllerMode::theorem1;
  const Trace trace = integrate(sc);
  if (trace.fault) return {"power-balance", false, NAN, NAN, "run fault at t = " + std::to_string(trace.fault->t) + ": " + trace.fault->what};
  const auto r = verify_power_balance(trace);
  return {"power-balance", r.pass, r.max_residual, r.tolerance, "max|dE/dt| = " + std::to_string(r.max_abs_Edot)};
}

/// Reference-start invariance: tracking and torque errors over the run and
/// pump activity, which must vanish up to round-off.
inline std::vector<CheckResult> check_reference_start(const Scenario& base, double t0, double horizon) {
  const ReferenceStartReport r = reference_start_run(base, t0, horizon);
  std::string info = r.fault ? "run fault at t = " + std::to_string(r.fault->t) + ": " + r.fault->what : "";
  auto ok = [&](CheckResult c) {
    if (r.fault) c.pass = false;
    c.detail = info;
    return c;
  };
  return {ok(detail::make_check("reference-start-tracking", r.max_q_error, 1e-6)),
          ok(detail::make_check("reference-start-torque", r.max_tau_error, 1e-6)),
          ok(detail::make_check("reference-start-pumps-idle", std::max(r.max_pump_force, r.max_pump_reference), 1e-9))};
}

/// Random closed-loop states near the path: q = q_r(s) + U(-0.5, 0.5),
/// qdot ~ U(-1, 1), s and sigma uniform over the nominal domain.
struct RandomState {
  ConfigurationState cs;
  double s = 0.0;
  double sigma = 0.0;
};

inline std::vector<RandomState> random_states(const ReducedModel& rm, std::size_t count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto& d = rm.path().domain();
  const double margin = d.mode == Extension::clamp ? 1e-3 * (d.hi - d.lo) : 0.0;
  std::uniform_real_distribution<double> param(d.lo + margin, d.hi - margin);
  const auto n = rm.model().dim();
  std::vector<RandomState> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RandomState r;
    r.s = param(rng);
    r.sigma = param(rng);
    r.cs.q = rm.path().value(r.s);
    for (Eigen::Index k = 0; k < n; ++k) r.cs.q(k) += 0.5 * unit(rng);
    r.cs.qdot.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) r.cs.qdot(k) = unit(rng);
    out.push_back(std::move(r));
  }
  return out;
}

/// Workless constraint force, vanishing dual torque at rest and a
/// non-negative speed ratio over random states.
inline std::vector<CheckResult> check_structure(const ReducedModel& rm, std::size_t count, unsigned seed) {
  double work = 0.0, rest = 0.0, min_ratio = INFINITY;
  for (const auto& r : random_states(rm, count, seed)) {
    const auto tau_r = rm.reference_force(r.s);
    work = std::max(work, std::abs(constraint_force(rm.model(), r.cs, rm, r.s, tau_r).dot(r.cs.qdot)));
    const ConfigurationState still{r.cs.q, Vector::Zero(r.cs.q.size())};
    rest = std::max(rest, dual_torque(rm.model(), still).cwiseAbs().maxCoeff());
    min_ratio = std::min(min_ratio, speed_ratio(rm.model(), r.cs, rm, r.s));
  }
  return {detail::make_check("constraint-force-workless", work, 1e-10),
          detail::make_check("dual-torque-zero-at-rest", rest, 0.0),
          {"speed-ratio-nonnegative", min_ratio >= 0.0, min_ratio, 0.0, "minimum over samples"}};
}

/// Model gradients, inertia partials and the spring gradient against
/// central differences (h = 1e-6) over random states. Gradients are held to
/// 1e-6 absolute, inertia partials to 1e-5 relative.
inline std::vector<CheckResult> check_gradients(const ReducedModel& rm, const CouplingGains& gains, std::size_t count,
                                                unsigned seed) {
  constexpr double h = 1e-6;
  const MechModel& model = rm.model();
  const QuadraticSpring spring(gains.spring_K);
  double gU = 0.0, gM = 0.0, gPhi = 0.0;
  for (const auto& r : random_states(rm, count, seed)) {
    const Vector& q = r.cs.q;
    const Vector qr = rm.path().value(r.s);
    const Vector grad = model.potential_grad(q);
    const auto partials = model.inertia_partials(q);
    const auto sp = spring.evaluate(q, qr);
    for (Eigen::Index k = 0; k < q.size(); ++k) {
      Vector qp = q, qm = q;
      qp(k) += h;
      qm(k) -= h;
      const double fdU = (model.potential(qp) - model.potential(qm)) / (2 * h);
      gU = std::max(gU, std::abs(fdU - grad(k)));
      const Matrix fdM = (model.inertia(qp) - model.inertia(qm)) / (2 * h);
      const double diff = (fdM - partials[static_cast<std::size_t>(k)]).cwiseAbs().maxCoeff();
      if (diff > 0.0) gM = std::max(gM, diff / std::max(fdM.cwiseAbs().maxCoeff(), 1e-300));
      const double fdPhi = (spring.evaluate(qp, qr).phi - spring.evaluate(qm, qr).phi) / (2 * h);
      gPhi = std::max(gPhi, std::abs(fdPhi - sp.dphi_dq(k)));
    }
  }
  return {detail::make_check("potential-gradient", gU, 1e-6), detail::make_check("inertia-partials", gM, 1e-5),
          detail::make_check("spring-gradient", gPhi, 1e-6)};
}

}  // namespace pbtrack
