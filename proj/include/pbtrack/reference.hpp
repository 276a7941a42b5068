// Single-coordinate reference system obtained by constraining the mechanical
// model to a reference path.
//
// For a path q_r(s):
//   M_r(s) = q_r'(s)^T M(q_r(s)) q_r'(s)        reduced inertia
//   U_r(s) = U(q_r(s))
//   W_r(s) = -U_r(s) - M_r(s)/2                  reference potential
//   e_r(s) = d/ds (U_r + M_r/2) = -dW_r/ds       reference input
//   tau_r(s) = inverse dynamics at (q_r, q_r', q_r'')
// and the shaped reference dynamics
//   M_r s'' = -1/2 dM_r/ds (s'^2 - 1) + e_c
// have s' = +-1 as free solutions with H_r = 0.
#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "pbtrack/dynamics.hpp"
#include "pbtrack/path.hpp"

namespace pbtrack {

inline constexpr double kDefaultBeta = 1e-6;
inline constexpr Eigen::Index kBetaSweepPoints = 10000;
/// Central-difference step for dM_r/ds when the model has no analytic partials.
inline constexpr double kSlopeFdStep = 1e-5;

/// Every reduced quantity at one path parameter.
struct ReducedPoint {
  double s = 0.0;
  Vector q;         // q_r(s)
  Vector dq;        // q_r'(s)
  Vector ddq;       // q_r''(s)
  double M_r = 0.0;
  double dM_r = 0.0;
  double U_r = 0.0;
  double W_r = 0.0;
  double e_r = 0.0;
  GeneralizedForce tau_r;
};

class ReducedModel {
 public:
  /// Validates the non-stationarity bound M_r > beta on a 10^4-point sweep of
  /// the path domain.
  ReducedModel(ModelPtr model, PathPtr path, double beta = kDefaultBeta)
      : model_(std::move(model)), path_(std::move(path)), beta_(beta) {
    require(model_ != nullptr && path_ != nullptr, ErrorKind::contract, "reduced model needs a model and a path");
    require(beta > 0.0 && std::isfinite(beta), ErrorKind::contract, "beta must be positive");
    require(model_->dim() == path_->dim(), ErrorKind::contract,
            "path dimension " + std::to_string(path_->dim()) + " does not match model dimension " +
                std::to_string(model_->dim()));
    const auto& d = path_->domain();
    for (Eigen::Index i = 0; i < kBetaSweepPoints; ++i) {
      const double s = d.lo + (d.hi - d.lo) * static_cast<double>(i) / static_cast<double>(kBetaSweepPoints - 1);
      (void)inertia(s);
    }
  }

  const MechModel& model() const { return *model_; }
  const ReferencePath& path() const { return *path_; }
  const ModelPtr& model_ptr() const { return model_; }
  const PathPtr& path_ptr() const { return path_; }
  double beta() const { return beta_; }

  /// M_r(s) = q_r'^T M(q_r) q_r'.
  double inertia(double s) const {
    const Vector dq = path_->d1(s);
    return checked_inertia(s, dq.dot(model_->inertia(path_->value(s)) * dq));
  }

  /// dM_r/ds by the chain rule: 2 q'^T M q'' + q'^T (sum_k dM/dq_k q'_k) q'.
  double inertia_slope(double s) const {
    path_->check_interior(s);
    const Vector q = path_->value(s);
    const Vector dq = path_->d1(s);
    const Vector ddq = path_->d2(s);
    return slope_from(s, q, dq, ddq);
  }

  double potential(double s) const { return model_->potential(path_->value(s)); }

  /// W_r(s) = -U_r(s) - M_r(s)/2.
  double reference_potential(double s) const {
    const Vector q = path_->value(s);
    const Vector dq = path_->d1(s);
    const double m_r = checked_inertia(s, dq.dot(model_->inertia(q) * dq));
    return -model_->potential(q) - 0.5 * m_r;
  }

  /// e_r(s) = dU/dq . q_r' + dM_r/ds / 2 = -dW_r/ds.
  double reference_input(double s) const {
    path_->check_interior(s);
    const Vector q = path_->value(s);
    const Vector dq = path_->d1(s);
    const Vector ddq = path_->d2(s);
    (void)checked_inertia(s, dq.dot(model_->inertia(q) * dq));
    return model_->potential_grad(q).dot(dq) + 0.5 * slope_from(s, q, dq, ddq);
  }

  /// Reference force tau_r(s) that generates q_r at unit path speed.
  GeneralizedForce reference_force(double s) const {
    path_->check_interior(s);
    return inverse_dynamics(*model_, ConfigurationState{path_->value(s), path_->d1(s)}, path_->d2(s));
  }

  /// Shaped reference dynamics: s'' = (-1/2 dM_r/ds (s'^2 - 1) + e) / M_r.
  double reference_dynamics(double s, double sdot, double e_c) const {
    const double m_r = inertia(s);
    return (-0.5 * inertia_slope(s) * (sdot * sdot - 1.0) + e_c) / m_r;
  }

  /// H_r = M_r s'^2 / 2 + U_r + W_r, which equals M_r (s'^2 - 1) / 2.
  double reference_hamiltonian(double s, double sdot) const {
    const Vector q = path_->value(s);
    const Vector dq = path_->d1(s);
    const double m_r = checked_inertia(s, dq.dot(model_->inertia(q) * dq));
    const double u_r = model_->potential(q);
    const double w_r = -u_r - 0.5 * m_r;
    return 0.5 * m_r * sdot * sdot + u_r + w_r;
  }

  /// All reduced quantities at s in one pass.
  ReducedPoint at(double s) const {
    path_->check_interior(s);
    ReducedPoint p;
    p.s = s;
    p.q = path_->value(s);
    p.dq = path_->d1(s);
    p.ddq = path_->d2(s);
    const Matrix m = model_->inertia(p.q);
    p.M_r = checked_inertia(s, p.dq.dot(m * p.dq));
    p.dM_r = slope_from(s, p.q, p.dq, p.ddq);
    p.U_r = model_->potential(p.q);
    p.W_r = -p.U_r - 0.5 * p.M_r;
    p.e_r = model_->potential_grad(p.q).dot(p.dq) + 0.5 * p.dM_r;
    p.tau_r = inverse_dynamics(*model_, ConfigurationState{p.q, p.dq}, p.ddq);
    return p;
  }

 private:
  double checked_inertia(double s, double m_r) const {
    require(std::isfinite(m_r), ErrorKind::numeric_fault, "reduced inertia is not finite at s = " + std::to_string(s));
    if (!(m_r > beta_)) {
      throw Error(ErrorKind::degenerate_path, "reduced inertia M_r(" + std::to_string(s) + ") = " +
                                                  std::to_string(m_r) + " is not above beta = " +
                                                  std::to_string(beta_));
    }
    return m_r;
  }

  double slope_from(double s, const Vector& q, const Vector& dq, const Vector& ddq) const {
    if (!model_->has_analytic_partials()) {
      const double h = kSlopeFdStep;
      auto m_r = [&](double x) {
        const Vector d = path_->d1(x);
        return d.dot(model_->inertia(path_->value(x)) * d);
      };
      return (m_r(s + h) - m_r(s - h)) / (2.0 * h);
    }
    const auto partials = model_->inertia_partials(q);
    return 2.0 * dq.dot(model_->inertia(q) * ddq) + dq.dot(detail::inertia_rate(partials, dq) * dq);
  }

  ModelPtr model_;
  PathPtr path_;
  double beta_;
};

using ReducedPtr = std::shared_ptr<const ReducedModel>;

}  // namespace pbtrack
