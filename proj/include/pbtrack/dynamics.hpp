// Rigid-body mechanical dynamics for fully actuated conservative systems:
//
//   M(q) q'' + C(q, q') q' + dU/dq = tau
//
// A MechModel supplies M, U and their partial derivatives; everything else
// (Coriolis matrix, forward/inverse dynamics, Hamiltonian) is derived here.
#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "pbtrack/errors.hpp"

namespace pbtrack {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Generalized force (covector). Also used for tau_r, tau_ff and the
/// baseline residue torque.
using GeneralizedForce = Eigen::VectorXd;

/// Inertia matrices above this condition estimate are treated as singular.
inline constexpr double kSingularCondition = 1e12;

/// Generalized coordinates and velocities of the true system.
struct ConfigurationState {
  Vector q;
  Vector qdot;

  Eigen::Index dim() const { return q.size(); }

  void validate() const {
    require(q.size() >= 1, ErrorKind::contract, "configuration dimension must be >= 1");
    require(q.size() == qdot.size(), ErrorKind::contract,
            "q and qdot lengths differ (" + std::to_string(q.size()) + " vs " +
                std::to_string(qdot.size()) + ")");
    require(q.allFinite() && qdot.allFinite(), ErrorKind::contract,
            "configuration state has non-finite entries");
  }
};

/// Evaluatable mechanical system. Implementations must be immutable after
/// construction; all methods are const and thread-safe.
class MechModel {
 public:
  virtual ~MechModel() = default;

  virtual Eigen::Index dim() const = 0;
  virtual std::string name() const = 0;

  /// Symmetric positive-definite generalized inertia M(q).
  virtual Matrix inertia(const Vector& q) const = 0;
  /// Potential energy U(q).
  virtual double potential(const Vector& q) const = 0;
  /// dM/dq_k for k = 0..n-1.
  virtual std::vector<Matrix> inertia_partials(const Vector& q) const = 0;
  /// dU/dq as a covector.
  virtual Vector potential_grad(const Vector& q) const = 0;
  /// False when inertia_partials is itself a numerical approximation.
  virtual bool has_analytic_partials() const { return true; }
};

using ModelPtr = std::shared_ptr<const MechModel>;

namespace detail {

inline void check_dim(const MechModel& model, Eigen::Index size, const char* what) {
  require(size == model.dim(), ErrorKind::contract,
          std::string(what) + " has length " + std::to_string(size) + ", model " +
              model.name() + " has dimension " + std::to_string(model.dim()));
}

inline void check_state(const MechModel& model, const ConfigurationState& state) {
  state.validate();
  check_dim(model, state.q.size(), "state");
}

/// dM/dt along direction v: sum_k dM/dq_k v_k.
inline Matrix inertia_rate(const std::vector<Matrix>& partials, const Vector& v) {
  Matrix out = Matrix::Zero(v.size(), v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) out += partials[static_cast<std::size_t>(k)] * v(k);
  return out;
}

}  // namespace detail

/// Coriolis matrix from Christoffel symbols of the first kind:
///   C_ij = sum_k 1/2 (dM_ij/dq_k + dM_ik/dq_j - dM_jk/dq_i) qdot_k
/// With this choice Mdot - 2C is skew-symmetric.
inline Matrix coriolis(const MechModel& model, const ConfigurationState& state) {
  detail::check_state(model, state);
  const auto n = model.dim();
  const auto partials = model.inertia_partials(state.q);
  Matrix c = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double vk = state.qdot(k);
    const Matrix& dk = partials[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double dij_dk = dk(i, j);
        const double dik_dj = partials[static_cast<std::size_t>(j)](i, k);
        const double djk_di = partials[static_cast<std::size_t>(i)](j, k);
        c(i, j) += 0.5 * (dij_dk + dik_dj - djk_di) * vk;
      }
    }
  }
  return c;
}

/// Factorizes M(q), rejecting numerically singular inertia.
inline Eigen::LLT<Matrix> factor_inertia(const MechModel& model, const Vector& q) {
  const Matrix m = model.inertia(q);
  require(m.allFinite(), ErrorKind::numeric_fault, "inertia matrix has non-finite entries");
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::singular_inertia, "inertia matrix is not positive definite");
  }
  const double rcond = llt.rcond();
  if (!(rcond > 0.0) || 1.0 / rcond > kSingularCondition) {
    throw Error(ErrorKind::singular_inertia,
                "inertia condition estimate " + std::to_string(rcond > 0.0 ? 1.0 / rcond : INFINITY) +
                    " exceeds 1e12");
  }
  return llt;
}

/// Acceleration qddot = M^-1 (tau - C qdot - dU/dq).
inline Vector forward_dynamics(const MechModel& model, const ConfigurationState& state,
                               const GeneralizedForce& tau) {
  detail::check_state(model, state);
  detail::check_dim(model, tau.size(), "tau");
  const auto llt = factor_inertia(model, state.q);
  const Vector rhs = tau - coriolis(model, state) * state.qdot - model.potential_grad(state.q);
  return llt.solve(rhs);
}

/// Torque tau = M qddot + C qdot + dU/dq.
inline GeneralizedForce inverse_dynamics(const MechModel& model, const ConfigurationState& state,
                                         const Vector& qddot) {
  detail::check_state(model, state);
  detail::check_dim(model, qddot.size(), "qddot");
  return model.inertia(state.q) * qddot + coriolis(model, state) * state.qdot +
         model.potential_grad(state.q);
}

/// Kinetic plus potential energy.
inline double hamiltonian(const MechModel& model, const ConfigurationState& state) {
  detail::check_state(model, state);
  return 0.5 * state.qdot.dot(model.inertia(state.q) * state.qdot) + model.potential(state.q);
}

/// Power delivered by a generalized force at a velocity (coordinate inner product).
inline double power_bracket(const GeneralizedForce& tau, const Vector& qdot) {
  require(tau.size() == qdot.size(), ErrorKind::contract,
          "power bracket operands differ in length (" + std::to_string(tau.size()) + " vs " +
              std::to_string(qdot.size()) + ")");
  return tau.dot(qdot);
}

}  // namespace pbtrack
