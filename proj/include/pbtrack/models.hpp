// Built-in mechanical models and a user-model adapter.
#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pbtrack/dynamics.hpp"

namespace pbtrack {

/// Point mass in R^n with optional uniform gravity acting on the last
/// coordinate: U = m g q_n.
class PointMass final : public MechModel {
 public:
  explicit PointMass(double mass = 1.0, Eigen::Index dim = 2, double gravity = 0.0)
      : mass_(mass), dim_(dim), gravity_(gravity) {
    require(mass > 0.0 && std::isfinite(mass), ErrorKind::contract, "point mass must be positive");
    require(dim >= 1, ErrorKind::contract, "point mass dimension must be >= 1");
    require(std::isfinite(gravity), ErrorKind::contract, "gravity must be finite");
  }

  Eigen::Index dim() const override { return dim_; }
  std::string name() const override { return "point_mass"; }
  double mass() const { return mass_; }
  double gravity() const { return gravity_; }

  Matrix inertia(const Vector&) const override { return mass_ * Matrix::Identity(dim_, dim_); }

  double potential(const Vector& q) const override { return mass_ * gravity_ * q(dim_ - 1); }

  std::vector<Matrix> inertia_partials(const Vector&) const override {
    return std::vector<Matrix>(static_cast<std::size_t>(dim_), Matrix::Zero(dim_, dim_));
  }

  Vector potential_grad(const Vector&) const override {
    Vector g = Vector::Zero(dim_);
    g(dim_ - 1) = mass_ * gravity_;
    return g;
  }

 private:
  double mass_;
  Eigen::Index dim_;
  double gravity_;
};

struct TwoLinkParams {
  double m1 = 1.0;
  double m2 = 1.0;
  double l1 = 1.0;
  double l2 = 1.0;
  double lc1 = 0.5;
  double lc2 = 0.5;
  double I1 = 1.0 / 12.0;
  double I2 = 1.0 / 12.0;
  double g = 9.81;

  bool operator==(const TwoLinkParams&) const = default;
};

/// Planar two-link revolute arm. q1 is measured from the horizontal, q2 is
/// the relative elbow angle; gravity acts along -y.
class TwoLinkArm final : public MechModel {
 public:
  explicit TwoLinkArm(TwoLinkParams p = {}) : p_(p) {
    require(p.m1 > 0 && p.m2 > 0 && p.l1 > 0 && p.l2 > 0, ErrorKind::contract,
            "two-link masses and lengths must be positive");
    require(p.lc1 >= 0 && p.lc2 >= 0 && p.I1 >= 0 && p.I2 >= 0, ErrorKind::contract,
            "two-link centre-of-mass offsets and inertias must be non-negative");
  }

  Eigen::Index dim() const override { return 2; }
  std::string name() const override { return "two_link"; }
  const TwoLinkParams& params() const { return p_; }

  Matrix inertia(const Vector& q) const override {
    const double c2 = std::cos(q(1));
    const double m22 = p_.m2 * p_.lc2 * p_.lc2 + p_.I2;
    const double m12 = m22 + p_.m2 * p_.l1 * p_.lc2 * c2;
    const double m11 = p_.m1 * p_.lc1 * p_.lc1 + p_.I1 +
                       p_.m2 * (p_.l1 * p_.l1 + p_.lc2 * p_.lc2 + 2.0 * p_.l1 * p_.lc2 * c2) + p_.I2;
    Matrix m(2, 2);
    m << m11, m12, m12, m22;
    return m;
  }

  double potential(const Vector& q) const override {
    return p_.m1 * p_.g * p_.lc1 * std::sin(q(0)) +
           p_.m2 * p_.g * (p_.l1 * std::sin(q(0)) + p_.lc2 * std::sin(q(0) + q(1)));
  }

  std::vector<Matrix> inertia_partials(const Vector& q) const override {
    const double h = -p_.m2 * p_.l1 * p_.lc2 * std::sin(q(1));
    Matrix d2(2, 2);
    d2 << 2.0 * h, h, h, 0.0;
    return {Matrix::Zero(2, 2), d2};
  }

  Vector potential_grad(const Vector& q) const override {
    const double c12 = std::cos(q(0) + q(1));
    Vector g(2);
    g(0) = p_.m1 * p_.g * p_.lc1 * std::cos(q(0)) + p_.m2 * p_.g * (p_.l1 * std::cos(q(0)) + p_.lc2 * c12);
    g(1) = p_.m2 * p_.g * p_.lc2 * c12;
    return g;
  }

 private:
  TwoLinkParams p_;
};

/// Finite-difference step used when a user model omits analytic partials.
inline constexpr double kModelFdStep = 1e-6;

/// Model assembled from user callables. Missing partials are produced by
/// central differences with step 1e-6, which costs roughly 1e-10 relative
/// accuracy in the Coriolis terms.
class UserModel final : public MechModel {
 public:
  using InertiaFn = std::function<Matrix(const Vector&)>;
  using PotentialFn = std::function<double(const Vector&)>;
  using PartialsFn = std::function<std::vector<Matrix>(const Vector&)>;
  using GradFn = std::function<Vector(const Vector&)>;

  UserModel(std::string name, Eigen::Index dim, InertiaFn inertia, PotentialFn potential,
            std::optional<PartialsFn> partials = std::nullopt,
            std::optional<GradFn> grad = std::nullopt)
      : name_(std::move(name)),
        dim_(dim),
        inertia_(std::move(inertia)),
        potential_(std::move(potential)),
        partials_(std::move(partials)),
        grad_(std::move(grad)) {
    require(dim >= 1, ErrorKind::contract, "user model dimension must be >= 1");
    require(static_cast<bool>(inertia_) && static_cast<bool>(potential_), ErrorKind::contract,
            "user model needs inertia and potential callables");
  }

  Eigen::Index dim() const override { return dim_; }
  std::string name() const override { return name_; }
  bool has_analytic_partials() const override { return partials_.has_value(); }
  bool has_analytic_gradient() const { return grad_.has_value(); }

  Matrix inertia(const Vector& q) const override { return inertia_(q); }
  double potential(const Vector& q) const override { return potential_(q); }

  std::vector<Matrix> inertia_partials(const Vector& q) const override {
    if (partials_) return (*partials_)(q);
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(dim_));
    Vector qp = q;
    Vector qm = q;
    for (Eigen::Index k = 0; k < dim_; ++k) {
      qp(k) = q(k) + kModelFdStep;
      qm(k) = q(k) - kModelFdStep;
      out.push_back((inertia_(qp) - inertia_(qm)) / (2.0 * kModelFdStep));
      qp(k) = q(k);
      qm(k) = q(k);
    }
    return out;
  }

  Vector potential_grad(const Vector& q) const override {
    if (grad_) return (*grad_)(q);
    Vector g(dim_);
    Vector qp = q;
    Vector qm = q;
    for (Eigen::Index k = 0; k < dim_; ++k) {
      qp(k) = q(k) + kModelFdStep;
      qm(k) = q(k) - kModelFdStep;
      g(k) = (potential_(qp) - potential_(qm)) / (2.0 * kModelFdStep);
      qp(k) = q(k);
      qm(k) = q(k);
    }
    return g;
  }

 private:
  std::string name_;
  Eigen::Index dim_;
  InertiaFn inertia_;
  PotentialFn potential_;
  std::optional<PartialsFn> partials_;
  std::optional<GradFn> grad_;
};

}  // namespace pbtrack
