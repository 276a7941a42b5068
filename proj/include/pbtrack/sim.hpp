// Closed-loop simulation of the true system coupled to the reference system.
//
// The augmented state is (q, qdot, s, sdot, sigma), integrated with fixed-step
// classical RK4. sigma is integrated from sigma_dot rather than by quadrature
// of a stored trace.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pbtrack/dynamics.hpp"
#include "pbtrack/energy.hpp"
#include "pbtrack/reference.hpp"
#include "pbtrack/sync.hpp"

namespace pbtrack {

struct AugmentedState {
  Vector q;
  Vector qdot;
  double s = 0.0;
  double sdot = 1.0;
  double sigma = 0.0;

  Eigen::Index dim() const { return q.size(); }
  ConfigurationState config() const { return {q, qdot}; }

  Vector pack() const {
    const auto n = q.size();
    Vector x(2 * n + 3);
    x << q, qdot, s, sdot, sigma;
    return x;
  }

  static AugmentedState unpack(const Vector& x, Eigen::Index n) {
    AugmentedState a;
    a.q = x.head(n);
    a.qdot = x.segment(n, n);
    a.s = x(2 * n);
    a.sdot = x(2 * n + 1);
    a.sigma = x(2 * n + 2);
    return a;
  }

  bool all_finite() const {
    return q.allFinite() && qdot.allFinite() && std::isfinite(s) && std::isfinite(sdot) && std::isfinite(sigma);
  }
};

enum class ControllerMode { theorem1, theorem1_pump, computed_torque, open_loop };

inline const char* to_string(ControllerMode m) {
  switch (m) {
    case ControllerMode::theorem1: return "theorem1";
    case ControllerMode::theorem1_pump: return "theorem1+pump";
    case ControllerMode::computed_torque: return "computed_torque";
    case ControllerMode::open_loop: return "open_loop";
  }
  return "?";
}

inline std::optional<ControllerMode> parse_controller(const std::string& text) {
  for (auto m : {ControllerMode::theorem1, ControllerMode::theorem1_pump, ControllerMode::computed_torque,
                 ControllerMode::open_loop}) {
    if (text == to_string(m)) return m;
  }
  return std::nullopt;
}

/// PD gains of the computed-torque baseline.
struct BaselineGains {
  double kp = 25.0;
  double kd = 10.0;

  bool operator==(const BaselineGains&) const = default;
};

/// A reference given as a function of time, q_r(t) with two derivatives.
struct TimeReference {
  std::function<Vector(double)> value;
  std::function<Vector(double)> d1;
  std::function<Vector(double)> d2;

  /// q_r(t) = path(s0 + t).
  static TimeReference from_path(PathPtr path, double s0) {
    return {[path, s0](double t) { return path->value(s0 + t); },
            [path, s0](double t) { return path->d1(s0 + t); },
            [path, s0](double t) { return path->d2(s0 + t); }};
  }
};

/// Computed torque with PD on the residue torque:
///   tau = M(q) qr'' + C(q, qdot) qr' + dU/dq - Kp (q - qr) - Kd (qdot - qr').
inline GeneralizedForce computed_torque_baseline(const MechModel& model, const TimeReference& ref,
                                                 const BaselineGains& pd, const ConfigurationState& state,
                                                 double t) {
  detail::check_state(model, state);
  const Vector qr = ref.value(t);
  const Vector dqr = ref.d1(t);
  const Vector ddqr = ref.d2(t);
  detail::check_dim(model, qr.size(), "reference");
  return model.inertia(state.q) * ddqr + coriolis(model, state) * dqr + model.potential_grad(state.q) -
         pd.kp * (state.q - qr) - pd.kd * (state.qdot - dqr);
}

using InputFn = std::function<Vector(double, const AugmentedState&)>;

struct Scenario {
  ReducedPtr rm;
  CouplingGains gains;
  double pump_k = kDefaultPumpGain;
  AugmentedState initial;
  double horizon = 20.0;
  double step = 1e-3;
  ControllerMode controller = ControllerMode::theorem1_pump;
  BaselineGains baseline;
  /// Open-loop input; zero when empty. Ignored by the other modes.
  InputFn external_input;

  const MechModel& model() const { return rm->model(); }

  void validate() const {
    require(rm != nullptr, ErrorKind::contract, "scenario needs a reduced model");
    gains.validate();
    require(pump_k >= 0.0 && std::isfinite(pump_k), ErrorKind::contract, "pump_k must be >= 0");
    require(step > 0.0 && std::isfinite(step), ErrorKind::contract, "step must be positive");
    require(horizon >= step && std::isfinite(horizon), ErrorKind::contract, "horizon must be >= step");
    require(initial.q.size() == model().dim() && initial.qdot.size() == model().dim(), ErrorKind::contract,
            "initial state dimension does not match the model");
    require(initial.all_finite(), ErrorKind::contract, "initial state has non-finite entries");
    require(baseline.kp > 0.0 && baseline.kd > 0.0, ErrorKind::contract, "baseline gains must be positive");
  }
};

/// Displaces q by `offset` in every coordinate, qdot = 0.9 q_r'(s0), s = s0,
/// sdot = 1, sigma = 0.
inline AugmentedState standard_perturbation(const ReducedModel& rm, double s0 = 0.0, double offset = 0.1,
                                            double speed_factor = 0.9) {
  AugmentedState a;
  a.q = rm.path().value(s0).array() + offset;
  a.qdot = speed_factor * rm.path().d1(s0);
  a.s = s0;
  a.sdot = 1.0;
  a.sigma = 0.0;
  return a;
}

/// Exactly on the reference shifted by t0: s = -t0, q = q_r(s), qdot = q_r'(s),
/// sdot = 1, sigma = s.
inline AugmentedState on_reference(const ReducedModel& rm, double t0) {
  AugmentedState a;
  a.s = -t0;
  a.q = rm.path().value(a.s);
  a.qdot = rm.path().d1(a.s);
  a.sdot = 1.0;
  a.sigma = a.s;
  return a;
}

/// Field value together with the signals that produced it.
struct FieldEval {
  Vector deriv;
  SyncOutput sync;
  GeneralizedForce tau_total;
  double e_total = 0.0;
  GeneralizedForce f;
  double f_r = 0.0;
};

namespace detail {

inline void check_finite_term(const Vector& v, const char* term) {
  if (!v.allFinite()) throw Error(ErrorKind::numeric_fault, std::string("non-finite ") + term);
}

}  // namespace detail

/// Field value at (x, t). Without `diagnostics` the baseline and open-loop
/// modes skip the interconnection signals they do not use; sigma_dot is
/// always computed.
inline FieldEval evaluate_field(const Scenario& sc, const AugmentedState& x, double t, bool diagnostics = true) {
  const MechModel& model = sc.model();
  const ReducedModel& rm = *sc.rm;
  const auto n = model.dim();
  const ConfigurationState cs = x.config();

  FieldEval out;
  const bool coupled = sc.controller == ControllerMode::theorem1 || sc.controller == ControllerMode::theorem1_pump;
  if (coupled || diagnostics) {
    out.sync = control_signals(model, cs, rm, x.s, x.sdot, x.sigma, sc.gains);
  } else {
    out.sync.sigma_dot = speed_ratio(model, cs, rm, x.s);
    if (!std::isfinite(out.sync.sigma_dot)) throw Error(ErrorKind::numeric_fault, "non-finite sigma_dot");
  }
  out.f = Vector::Zero(n);
  switch (sc.controller) {
    case ControllerMode::theorem1:
      out.tau_total = out.sync.tau;
      out.e_total = out.sync.e_c;
      break;
    case ControllerMode::theorem1_pump:
      out.f = pump_true(model, cs, rm, x.sigma, sc.pump_k);
      out.f_r = pump_reference(rm, x.s, x.sdot, sc.pump_k);
      out.tau_total = out.sync.tau + out.f;
      out.e_total = out.sync.e_c + out.f_r;
      break;
    case ControllerMode::computed_torque:
      out.tau_total = computed_torque_baseline(model, TimeReference::from_path(rm.path_ptr(), sc.initial.s),
                                               sc.baseline, cs, t);
      out.e_total = 0.0;
      break;
    case ControllerMode::open_loop:
      out.tau_total = sc.external_input ? sc.external_input(t, x) : Vector::Zero(n);
      require(out.tau_total.size() == n, ErrorKind::contract, "external input has wrong dimension");
      out.e_total = 0.0;
      break;
  }
  detail::check_finite_term(out.tau_total, "tau_total");
  if (!std::isfinite(out.e_total)) throw Error(ErrorKind::numeric_fault, "non-finite e_total");

  out.deriv.resize(2 * n + 3);
  const Vector qddot = forward_dynamics(model, cs, out.tau_total);
  detail::check_finite_term(qddot, "qddot");
  const double sddot = rm.reference_dynamics(x.s, x.sdot, out.e_total);
  if (!std::isfinite(sddot)) throw Error(ErrorKind::numeric_fault, "non-finite sddot");
  out.deriv << x.qdot, qddot, x.sdot, sddot, out.sync.sigma_dot;
  return out;
}

/// d/dt of the augmented state.
inline Vector closed_loop_field(const Scenario& sc, const AugmentedState& x, double t = 0.0) {
  return evaluate_field(sc, x, t, false).deriv;
}

/// One classical RK4 step from x at time t, given the field k1 at (x, t).
inline Vector rk4_step(const Scenario& sc, const Vector& x, const Vector& k1, double t, double h) {
  const auto n = sc.model().dim();
  const Vector k2 = closed_loop_field(sc, AugmentedState::unpack(x + 0.5 * h * k1, n), t + 0.5 * h);
  const Vector k3 = closed_loop_field(sc, AugmentedState::unpack(x + 0.5 * h * k2, n), t + 0.5 * h);
  const Vector k4 = closed_loop_field(sc, AugmentedState::unpack(x + h * k3, n), t + h);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Advances the scenario's initial state over `steps` RK4 steps without
/// recording a trace. Uses the same arithmetic as integrate().
inline AugmentedState advance(const Scenario& sc, std::size_t steps) {
  sc.validate();
  const auto n = sc.model().dim();
  Vector xv = sc.initial.pack();
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * sc.step;
    xv = rk4_step(sc, xv, closed_loop_field(sc, AugmentedState::unpack(xv, n), t), t, sc.step);
    if (!xv.allFinite()) throw Error(ErrorKind::numeric_fault, "state became non-finite");
  }
  return AugmentedState::unpack(xv, n);
}

struct TraceSample {
  double t = 0.0;
  AugmentedState state;
  SyncOutput sync;
  EnergyBreakdown energy;
  GeneralizedForce tau_total;
  double e_total = 0.0;
  double f_pow = 0.0;   // <f, qdot>
  double fr_pow = 0.0;  // f_r sdot
};

struct Fault {
  double t = 0.0;
  std::string what;
};

struct Trace {
  ControllerMode mode = ControllerMode::theorem1;
  double step = 0.0;
  double damping_R = 0.0;
  std::vector<TraceSample> samples;
  std::optional<Fault> fault;

  bool complete() const { return !fault.has_value(); }
};

namespace detail {

inline TraceSample make_sample(const Scenario& sc, const AugmentedState& x, double t, const FieldEval& fe) {
  TraceSample smp;
  smp.t = t;
  smp.state = x;
  smp.sync = fe.sync;
  smp.tau_total = fe.tau_total;
  smp.e_total = fe.e_total;
  smp.f_pow = fe.f.dot(x.qdot);
  smp.fr_pow = fe.f_r * x.sdot;
  const ConfigurationState cs = x.config();
  auto& e = smp.energy;
  e.H_true = hamiltonian(sc.model(), cs);
  e.H_ref = sc.rm->reference_hamiltonian(x.s, x.sdot);
  e.W_sigma = sc.rm->reference_potential(x.sigma);
  e.phi = fe.sync.phi;
  e.psi = fe.sync.psi;
  e.E_total = e.H_true + e.W_sigma + e.H_ref + e.phi + e.psi;
  e.neg_R_stilde_dot_sq = -sc.gains.damping_R * fe.sync.s_tilde_dot * fe.sync.s_tilde_dot;
  return smp;
}

}  // namespace detail

/// Fourth-order finite-difference derivative of the energy ledger, with
/// one-sided five-point stencils at the ends. Leaves NaN when fewer than
/// five samples exist.
inline void fill_energy_rate(Trace& trace) {
  auto& s = trace.samples;
  const std::size_t m = s.size();
  if (m < 5) return;
  const double h = trace.step;
  auto E = [&](std::size_t i) { return s[i].energy.E_total; };
  for (std::size_t i = 0; i < m; ++i) {
    double d;
    if (i >= 2 && i + 2 < m) {
      d = (-E(i + 2) + 8.0 * E(i + 1) - 8.0 * E(i - 1) + E(i - 2)) / (12.0 * h);
    } else if (i == 0) {
      d = (-25.0 * E(0) + 48.0 * E(1) - 36.0 * E(2) + 16.0 * E(3) - 3.0 * E(4)) / (12.0 * h);
    } else if (i == 1) {
      d = (-3.0 * E(0) - 10.0 * E(1) + 18.0 * E(2) - 6.0 * E(3) + E(4)) / (12.0 * h);
    } else if (i == m - 2) {
      d = (3.0 * E(m - 1) + 10.0 * E(m - 2) - 18.0 * E(m - 3) + 6.0 * E(m - 4) - E(m - 5)) / (12.0 * h);
    } else {
      d = (25.0 * E(m - 1) - 48.0 * E(m - 2) + 36.0 * E(m - 3) - 16.0 * E(m - 4) + 3.0 * E(m - 5)) / (12.0 * h);
    }
    s[i].energy.dE_dt_numeric = d;
  }
}

/// Fixed-step classical RK4 over the scenario horizon. A fault ends the run
/// and the samples accepted so far are returned with the fault record.
inline Trace integrate(const Scenario& sc) {
  sc.validate();
  Trace trace;
  trace.mode = sc.controller;
  trace.step = sc.step;
  trace.damping_R = sc.gains.damping_R;

  const auto n = sc.model().dim();
  const auto steps = static_cast<std::size_t>(std::llround(sc.horizon / sc.step));
  const double h = sc.step;
  trace.samples.reserve(steps + 1);

  AugmentedState x = sc.initial;
  Vector xv = x.pack();
  double t = 0.0;
  for (std::size_t k = 0;; ++k) {
    t = static_cast<double>(k) * h;
    try {
      const FieldEval k1 = evaluate_field(sc, x, t);
      trace.samples.push_back(detail::make_sample(sc, x, t, k1));
      if (k == steps) break;
      xv = rk4_step(sc, xv, k1.deriv, t, h);
      x = AugmentedState::unpack(xv, n);
      if (!x.all_finite()) throw Error(ErrorKind::numeric_fault, "state became non-finite");
    } catch (const Error& err) {
      trace.fault = Fault{t, err.what()};
      break;
    }
  }
  fill_energy_rate(trace);
  return trace;
}

/// Runs independent scenarios on up to `threads` worker threads. Output order
/// matches input order.
inline std::vector<Trace> run_batch(std::span<const Scenario> scenarios, unsigned threads = 0) {
  std::vector<Trace> out(scenarios.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, scenarios.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      try {
        out[i] = integrate(scenarios[i]);
      } catch (const Error& err) {
        out[i].mode = scenarios[i].controller;
        out[i].fault = Fault{0.0, err.what()};
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

// ---------------------------------------------------------------------------
// Zero dynamics of the reference system

struct PortraitSeed {
  double s0 = 0.0;
  double sdot0 = 1.0;
};

struct PortraitRun {
  std::size_t seed_id = 0;
  PortraitSeed seed;
  std::vector<double> t;
  std::vector<double> s;
  std::vector<double> sdot;
  std::optional<Fault> fault;
};

/// Integrates the unforced reference dynamics (e_c = 0) from every seed.
/// A faulting seed keeps its partial trajectory; the others continue.
inline std::vector<PortraitRun> zero_dynamics_portrait(const ReducedModel& rm, std::span<const PortraitSeed> seeds,
                                                       double horizon, double step) {
  require(step > 0.0 && horizon >= step, ErrorKind::contract, "portrait needs step > 0 and horizon >= step");
  const auto steps = static_cast<std::size_t>(std::llround(horizon / step));
  std::vector<PortraitRun> runs;
  runs.reserve(seeds.size());
  auto field = [&](double s, double v) { return rm.reference_dynamics(s, v, 0.0); };
  for (std::size_t id = 0; id < seeds.size(); ++id) {
    PortraitRun run;
    run.seed_id = id;
    run.seed = seeds[id];
    double s = seeds[id].s0;
    double v = seeds[id].sdot0;
    for (std::size_t k = 0;; ++k) {
      const double t = static_cast<double>(k) * step;
      run.t.push_back(t);
      run.s.push_back(s);
      run.sdot.push_back(v);
      if (k == steps) break;
      try {
        const double a1 = field(s, v);
        const double a2 = field(s + 0.5 * step * v, v + 0.5 * step * a1);
        const double v2 = v + 0.5 * step * a1;
        const double a3 = field(s + 0.5 * step * v2, v + 0.5 * step * a2);
        const double v3 = v + 0.5 * step * a2;
        const double a4 = field(s + step * v3, v + step * a3);
        const double v4 = v + step * a3;
        s += step / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4);
        v += step / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        if (!std::isfinite(s) || !std::isfinite(v)) throw Error(ErrorKind::numeric_fault, "portrait state non-finite");
      } catch (const Error& err) {
        run.fault = Fault{t, err.what()};
        break;
      }
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

// ---------------------------------------------------------------------------
// Verification harnesses

struct PowerBalanceReport {
  double max_residual = 0.0;
  double rms_residual = 0.0;
  double max_abs_Edot = 0.0;
  double tolerance = 0.0;
  double max_abs_stilde_dot = 0.0;
  std::size_t samples = 0;
  bool pass = false;
};

/// Per-sample residual dE/dt + R s~'^2 on a pumps-off theorem1 trace.
/// PASS iff max residual <= 1e-6 (1 + max |dE/dt|).
inline PowerBalanceReport verify_power_balance(const Trace& trace) {
  if (trace.mode != ControllerMode::theorem1) {
    throw Error(ErrorKind::misuse, std::string("power balance needs a theorem1 trace, got ") + to_string(trace.mode));
  }
  require(trace.samples.size() >= 5, ErrorKind::misuse, "power balance needs at least 5 samples");
  PowerBalanceReport r;
  double sum2 = 0.0;
  for (const auto& smp : trace.samples) {
    const double edot = smp.energy.dE_dt_numeric;
    const double res = std::abs(edot - smp.energy.neg_R_stilde_dot_sq);
    r.max_residual = std::max(r.max_residual, res);
    r.max_abs_Edot = std::max(r.max_abs_Edot, std::abs(edot));
    r.max_abs_stilde_dot = std::max(r.max_abs_stilde_dot, std::abs(smp.sync.s_tilde_dot));
    sum2 += res * res;
  }
  r.samples = trace.samples.size();
  r.rms_residual = std::sqrt(sum2 / static_cast<double>(r.samples));
  r.tolerance = 1e-6 * (1.0 + r.max_abs_Edot);
  r.pass = std::isfinite(r.max_residual) && r.max_residual <= r.tolerance;
  return r;
}

inline constexpr double kTailFraction = 0.2;

struct ConvergenceReport {
  double tail_start = 0.0;
  std::size_t tail_samples = 0;
  double stilde_mean = 0.0;
  double stilde_slope = 0.0;          // per unit time
  double stilde_dot_mean_abs = 0.0;
  double stilde_dot_max_abs = 0.0;
  double phi_mean = 0.0;
  double phi_max = 0.0;
  double phi_final = 0.0;
  double sdot_error_max = 0.0;        // max |sdot - 1|
  double sdot_error_final = 0.0;
  double E_max_abs = 0.0;
  double E_final = 0.0;
  double tracking_error_max = 0.0;    // max |q - q_r(s)|
  double t0_estimate = 0.0;           // tail mean of t - s
  double t0_slope = 0.0;
};

namespace detail {

/// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

}  // namespace detail

/// Tail-window statistics over the final `tail_seconds` of a trace (default:
/// the final 20 % of its duration).
inline ConvergenceReport convergence_metrics(const Trace& trace, const ReducedModel& rm,
                                             std::optional<double> tail_seconds = std::nullopt) {
  require(trace.samples.size() >= 3, ErrorKind::config, "trace too short for convergence metrics");
  const double t_end = trace.samples.back().t;
  const double duration = t_end - trace.samples.front().t;
  const double tail = tail_seconds.value_or(kTailFraction * duration);
  if (!(tail > 0.0) || tail > duration) {
    throw Error(ErrorKind::config, "tail window " + std::to_string(tail) + " s does not fit in a " +
                                       std::to_string(duration) + " s trace");
  }
  ConvergenceReport r;
  r.tail_start = t_end - tail;
  std::vector<double> ts, stilde, offset;
  double sum_std = 0, sum_phi = 0;
  for (const auto& smp : trace.samples) {
    if (smp.t < r.tail_start) continue;
    ts.push_back(smp.t);
    stilde.push_back(smp.sync.s_tilde);
    offset.push_back(smp.t - smp.state.s);
    sum_std += std::abs(smp.sync.s_tilde_dot);
    sum_phi += smp.sync.phi;
    r.stilde_dot_max_abs = std::max(r.stilde_dot_max_abs, std::abs(smp.sync.s_tilde_dot));
    r.phi_max = std::max(r.phi_max, smp.sync.phi);
    r.sdot_error_max = std::max(r.sdot_error_max, std::abs(smp.state.sdot - 1.0));
    r.E_max_abs = std::max(r.E_max_abs, std::abs(smp.energy.E_total));
    r.tracking_error_max = std::max(r.tracking_error_max, (smp.state.q - rm.path().value(smp.state.s)).norm());
  }
  require(ts.size() >= 2, ErrorKind::config, "tail window holds fewer than 2 samples");
  const double m = static_cast<double>(ts.size());
  r.tail_samples = ts.size();
  for (double v : stilde) r.stilde_mean += v / m;
  r.stilde_slope = detail::fit_slope(ts, stilde);
  r.stilde_dot_mean_abs = sum_std / m;
  r.phi_mean = sum_phi / m;
  for (double v : offset) r.t0_estimate += v / m;
  r.t0_slope = detail::fit_slope(ts, offset);
  const auto& last = trace.samples.back();
  r.phi_final = last.sync.phi;
  r.sdot_error_final = std::abs(last.state.sdot - 1.0);
  r.E_final = last.energy.E_total;
  return r;
}

/// Outcome of a run started exactly on the reference shifted by t0.
struct ReferenceStartReport {
  double max_q_error = 0.0;        // max |q(t) - q_r(t - t0)|
  double max_tau_error = 0.0;      // max |tau_applied - tau_r(t - t0)|
  double max_pump_force = 0.0;     // max |f|
  double max_pump_reference = 0.0; // max |f_r|
  double max_abs_stilde = 0.0;
  double max_abs_E = 0.0;
  std::optional<Fault> fault;
};

inline ReferenceStartReport reference_start_run(const Scenario& base, double t0, double horizon) {
  Scenario sc = base;
  sc.controller = ControllerMode::theorem1_pump;
  sc.initial = on_reference(*sc.rm, t0);
  sc.horizon = horizon;
  const Trace trace = integrate(sc);
  ReferenceStartReport r;
  r.fault = trace.fault;
  for (const auto& smp : trace.samples) {
    const double sr = smp.t - t0;
    r.max_q_error = std::max(r.max_q_error, (smp.state.q - sc.rm->path().value(sr)).norm());
    const double pump_r = smp.state.sdot != 0.0 ? std::abs(smp.fr_pow / smp.state.sdot) : 0.0;
    const Vector f = pump_true(sc.model(), smp.state.config(), *sc.rm, smp.state.sigma, sc.pump_k);
    r.max_tau_error = std::max(r.max_tau_error, (smp.tau_total - sc.rm->reference_force(sr)).norm());
    r.max_pump_force = std::max(r.max_pump_force, f.norm());
    r.max_pump_reference = std::max(r.max_pump_reference, pump_r);
    r.max_abs_stilde = std::max(r.max_abs_stilde, std::abs(smp.sync.s_tilde));
    r.max_abs_E = std::max(r.max_abs_E, std::abs(smp.energy.E_total));
  }
  return r;
}

}  // namespace pbtrack
