#pragma once

#include <catch_amalgamated.hpp>

#include <initializer_list>
#include <memory>
#include <random>

#include "pbtrack/pbtrack.hpp"

namespace support {

using pbtrack::Matrix;
using pbtrack::Vector;

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline std::shared_ptr<pbtrack::PointMass> unit_mass(double g = 0.0) {
  return std::make_shared<pbtrack::PointMass>(1.0, 2, g);
}

inline std::shared_ptr<pbtrack::TwoLinkArm> arm(double g = 9.81) {
  pbtrack::TwoLinkParams p;
  p.g = g;
  return std::make_shared<pbtrack::TwoLinkArm>(p);
}

inline std::shared_ptr<pbtrack::CirclePath> unit_circle() {
  return std::make_shared<pbtrack::CirclePath>(Vector::Zero(2));
}

/// Circle in joint space that keeps the arm away from its folded pose.
inline std::shared_ptr<pbtrack::CirclePath> joint_circle(double omega = 1.0) {
  return std::make_shared<pbtrack::CirclePath>(vec({0.5, 1.0}), 0.5, omega);
}

inline std::shared_ptr<pbtrack::PolynomialPath> line(Vector origin, Vector velocity, double lo = 0.0, double hi = 20.0) {
  const auto n = origin.size();
  return std::make_shared<pbtrack::PolynomialPath>(std::move(origin), std::move(velocity), Vector::Zero(n),
                                                   pbtrack::PathDomain{lo, hi, pbtrack::Extension::extrapolate});
}

/// Circle through 1000 samples, periodic spline.
inline std::shared_ptr<pbtrack::SplinePath> spline_circle(Eigen::Index count = 1000) {
  pbtrack::CirclePath c(Vector::Zero(2));
  return std::make_shared<pbtrack::SplinePath>(pbtrack::sample_path(c, 0.0, c.domain().hi, count),
                                               pbtrack::Extension::periodic);
}

inline std::shared_ptr<pbtrack::ReducedModel> reduced(pbtrack::ModelPtr m, pbtrack::PathPtr p) {
  return std::make_shared<pbtrack::ReducedModel>(std::move(m), std::move(p));
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

}  // namespace support
