// Spring/damper interconnection between the true system and the reference
// system. Every function here is a stateless map of the instantaneous
// closed-loop state; the relative path parameter sigma is owned by the
// integrator.
#pragma once

#include <cmath>
#include <memory>
#include <string>

#include "pbtrack/dynamics.hpp"
#include "pbtrack/reference.hpp"

namespace pbtrack {

/// Kinetic-energy cutoff below which the velocity-aligned steering term is
/// defined as zero.
inline constexpr double kZeroVelocityCutoff = 1e-12;

struct CouplingGains {
  double spring_K = 10.0;
  double kappa = 5.0;
  double damping_R = 2.0;

  void validate() const {
    require(spring_K > 0.0 && std::isfinite(spring_K), ErrorKind::contract, "spring_K must be positive");
    require(kappa > 0.0 && std::isfinite(kappa), ErrorKind::contract, "kappa must be positive");
    require(damping_R > 0.0 && std::isfinite(damping_R), ErrorKind::contract, "damping_R must be positive");
  }

  bool operator==(const CouplingGains&) const = default;
};

/// Controller outputs and every intermediate quantity.
struct SyncOutput {
  GeneralizedForce tau;
  double e_c = 0.0;
  double mu = 0.0;
  GeneralizedForce tau_qdot;
  GeneralizedForce tau_r0;
  double sigma_dot = 0.0;
  double s_tilde = 0.0;
  double s_tilde_dot = 0.0;
  double phi = 0.0;
  double psi = 0.0;
};

struct SpringEval {
  double phi = 0.0;
  Vector dphi_dq;
  Vector dphi_dqr;
};

/// Positive-definite coupling potential phi(q, q_r) with phi = 0 iff q = q_r.
class SpringPotential {
 public:
  virtual ~SpringPotential() = default;
  virtual SpringEval evaluate(const Vector& q, const Vector& q_r) const = 0;
};

/// phi = K/2 |q - q_r|^2.
class QuadraticSpring final : public SpringPotential {
 public:
  explicit QuadraticSpring(double K) : K_(K) {
    require(K > 0.0 && std::isfinite(K), ErrorKind::contract, "spring gain must be positive");
  }

  SpringEval evaluate(const Vector& q, const Vector& q_r) const override {
    require(q.size() == q_r.size(), ErrorKind::contract, "spring operands differ in length");
    const Vector d = q - q_r;
    return {0.5 * K_ * d.squaredNorm(), K_ * d, -K_ * d};
  }

  double gain() const { return K_; }

 private:
  double K_;
};

inline SpringEval spring(const Vector& q, const Vector& q_r, double spring_K) {
  return QuadraticSpring(spring_K).evaluate(q, q_r);
}

/// Speed of the true system measured against the reference speed at s:
/// sqrt(qdot^T M qdot) / sqrt(M_r(s)).
inline double speed_ratio(const MechModel& model, const ConfigurationState& state, const ReducedModel& rm,
                          double s) {
  detail::check_state(model, state);
  const double m_r = rm.inertia(s);
  const double kinetic2 = state.qdot.dot(model.inertia(state.q) * state.qdot);
  if (!(kinetic2 > 0.0)) return 0.0;
  return std::sqrt(kinetic2) / std::sqrt(m_r);
}

/// Covector metrically dual to qdot; M(q) qdot in coordinates.
inline GeneralizedForce dual_torque(const MechModel& model, const ConfigurationState& state) {
  detail::check_state(model, state);
  return model.inertia(state.q) * state.qdot;
}

/// Workless part of the reference force:
///   tau_r0 = <tau_qdot, qdot>/M_r tau_r - <qdot, tau_r>/M_r tau_qdot.
inline GeneralizedForce constraint_force(const MechModel& model, const ConfigurationState& state,
                                         const ReducedModel& rm, double s, const GeneralizedForce& tau_r) {
  detail::check_dim(model, tau_r.size(), "tau_r");
  const GeneralizedForce tq = dual_torque(model, state);
  const double m_r = rm.inertia(s);
  return (tq.dot(state.qdot) / m_r) * tau_r - (state.qdot.dot(tau_r) / m_r) * tq;
}

/// mu = (dW_r/dsigma - kappa s~ - R s~') / sqrt(M_r(s)), with
/// dW_r/dsigma = -e_r(sigma).
inline double mu_gain(const ReducedModel& rm, double s, double s_tilde, double s_tilde_dot, double sigma,
                      const CouplingGains& gains) {
  const double dW = -rm.reference_input(sigma);
  return (dW - gains.kappa * s_tilde - gains.damping_R * s_tilde_dot) / std::sqrt(rm.inertia(s));
}

namespace detail {

inline void check_finite(double v, const char* term) {
  if (!std::isfinite(v)) throw Error(ErrorKind::numeric_fault, std::string("non-finite ") + term);
}

inline void check_finite(const Vector& v, const char* term) {
  if (!v.allFinite()) throw Error(ErrorKind::numeric_fault, std::string("non-finite ") + term);
}

}  // namespace detail

/// Interconnection signals
///   tau = -mu tau_qdot / sqrt(<tau_qdot, qdot>) + tau_r0 - dphi/dq
///   e_c = -kappa s~ - R s~' - <dphi/dq_r, q_r'(s)>
/// with s~ = s - sigma and s~' = sdot - sigma_dot. The steering term is zero
/// when <tau_qdot, qdot> falls below kZeroVelocityCutoff.
inline SyncOutput control_signals(const MechModel& model, const ConfigurationState& state, const ReducedModel& rm,
                                  double s, double sdot, double sigma, const CouplingGains& gains,
                                  const SpringPotential& phi) {
  detail::check_state(model, state);
  const ReducedPoint ref = rm.at(s);
  const double dW_sigma = -rm.reference_input(sigma);

  SyncOutput out;
  out.tau_qdot = model.inertia(state.q) * state.qdot;
  const double kinetic2 = out.tau_qdot.dot(state.qdot);
  out.sigma_dot = kinetic2 > 0.0 ? std::sqrt(kinetic2) / std::sqrt(ref.M_r) : 0.0;
  out.tau_r0 = (kinetic2 / ref.M_r) * ref.tau_r - (state.qdot.dot(ref.tau_r) / ref.M_r) * out.tau_qdot;
  out.s_tilde = s - sigma;
  out.s_tilde_dot = sdot - out.sigma_dot;
  out.mu = (dW_sigma - gains.kappa * out.s_tilde - gains.damping_R * out.s_tilde_dot) / std::sqrt(ref.M_r);

  const SpringEval sp = phi.evaluate(state.q, ref.q);
  out.phi = sp.phi;
  out.psi = 0.5 * gains.kappa * out.s_tilde * out.s_tilde;

  out.tau = out.tau_r0 - sp.dphi_dq;
  if (kinetic2 >= kZeroVelocityCutoff) out.tau -= (out.mu / std::sqrt(kinetic2)) * out.tau_qdot;
  out.e_c = -gains.kappa * out.s_tilde - gains.damping_R * out.s_tilde_dot - sp.dphi_dqr.dot(ref.dq);

  detail::check_finite(out.sigma_dot, "sigma_dot");
  detail::check_finite(out.mu, "mu");
  detail::check_finite(out.tau_r0, "tau_r0");
  detail::check_finite(out.phi, "phi");
  detail::check_finite(out.tau, "tau");
  detail::check_finite(out.e_c, "e_c");
  return out;
}

inline SyncOutput control_signals(const MechModel& model, const ConfigurationState& state, const ReducedModel& rm,
                                  double s, double sdot, double sigma, const CouplingGains& gains) {
  return control_signals(model, state, rm, s, sdot, sigma, gains, QuadraticSpring(gains.spring_K));
}

}  // namespace pbtrack
