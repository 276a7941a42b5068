// Reference paths s -> q_r(s) with first and second derivatives.
//
// The path parameter s carries time units: the desired motion is s(t) = t - t0.
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <istream>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "pbtrack/dynamics.hpp"

namespace pbtrack {

/// Behaviour of a path outside [lo, hi].
enum class Extension { clamp, extrapolate, periodic };

inline const char* to_string(Extension e) {
  switch (e) {
    case Extension::clamp: return "clamp";
    case Extension::extrapolate: return "linear-extrapolate";
    case Extension::periodic: return "periodic";
  }
  return "?";
}

struct PathDomain {
  double lo = 0.0;
  double hi = 1.0;
  Extension mode = Extension::extrapolate;

  double period() const { return hi - lo; }
  bool contains(double s) const { return s >= lo && s <= hi; }
};

enum class PathBacking { analytic, spline };

class ReferencePath {
 public:
  virtual ~ReferencePath() = default;

  virtual Eigen::Index dim() const = 0;
  virtual PathBacking backing() const = 0;
  const PathDomain& domain() const { return domain_; }

  Vector value(double s) const { return eval_value(resolve(s)); }
  Vector d1(double s) const { return eval_d1(resolve(s)); }
  Vector d2(double s) const { return eval_d2(resolve(s)); }

  /// Throws when s lies outside a clamped domain.
  void check_in_domain(double s) const {
    require(std::isfinite(s), ErrorKind::numeric_fault, "path parameter is not finite");
    if (domain_.mode == Extension::clamp && !domain_.contains(s)) {
      throw Error(ErrorKind::domain, "s = " + std::to_string(s) + " outside clamped path domain [" +
                                         std::to_string(domain_.lo) + ", " +
                                         std::to_string(domain_.hi) + "]");
    }
  }

  /// Throws when a derivative of a reduced quantity is requested where the
  /// clamped path has only a one-sided neighbourhood.
  void check_interior(double s) const {
    check_in_domain(s);
    if (domain_.mode == Extension::clamp && (s <= domain_.lo || s >= domain_.hi)) {
      throw Error(ErrorKind::boundary_derivative,
                  "s = " + std::to_string(s) + " is on the boundary of a clamped path");
    }
  }

 protected:
  explicit ReferencePath(PathDomain domain) : domain_(domain) {
    require(domain.hi > domain.lo, ErrorKind::contract, "path domain must satisfy lo < hi");
  }

  /// Maps s to the parameter the concrete evaluators understand.
  virtual double resolve(double s) const {
    check_in_domain(s);
    return s;
  }

  virtual Vector eval_value(double s) const = 0;
  virtual Vector eval_d1(double s) const = 0;
  virtual Vector eval_d2(double s) const = 0;

 private:
  PathDomain domain_;
};

using PathPtr = std::shared_ptr<const ReferencePath>;

/// q_r(s) = center + radius (cos(omega s + phase), sin(omega s + phase)),
/// embedded in the first two coordinates of an n >= 2 space. Coordinates
/// beyond the second stay at center.
class CirclePath final : public ReferencePath {
 public:
  CirclePath(Vector center, double radius = 1.0, double omega = 1.0, double phase = 0.0)
      : ReferencePath(PathDomain{0.0, 2.0 * std::numbers::pi / std::abs(omega), Extension::periodic}),
        center_(std::move(center)),
        radius_(radius),
        omega_(omega),
        phase_(phase) {
    require(center_.size() >= 2, ErrorKind::contract, "circle path needs dimension >= 2");
    require(radius > 0.0 && std::isfinite(radius), ErrorKind::contract, "circle radius must be positive");
    require(omega != 0.0 && std::isfinite(omega), ErrorKind::contract, "circle omega must be non-zero");
  }

  Eigen::Index dim() const override { return center_.size(); }
  PathBacking backing() const override { return PathBacking::analytic; }

 protected:
  Vector eval_value(double s) const override {
    Vector q = center_;
    const double a = omega_ * s + phase_;
    q(0) += radius_ * std::cos(a);
    q(1) += radius_ * std::sin(a);
    return q;
  }
  Vector eval_d1(double s) const override {
    Vector q = Vector::Zero(dim());
    const double a = omega_ * s + phase_;
    q(0) = -radius_ * omega_ * std::sin(a);
    q(1) = radius_ * omega_ * std::cos(a);
    return q;
  }
  Vector eval_d2(double s) const override {
    Vector q = Vector::Zero(dim());
    const double a = omega_ * s + phase_;
    const double w2 = omega_ * omega_;
    q(0) = -radius_ * w2 * std::cos(a);
    q(1) = -radius_ * w2 * std::sin(a);
    return q;
  }

 private:
  Vector center_;
  double radius_;
  double omega_;
  double phase_;
};

/// q_r(s) = origin + velocity s + accel s^2. With accel = 0 this is a
/// constant-velocity line. The domain is the validated window; in
/// extrapolate mode the polynomial is evaluated outside it unchanged.
class PolynomialPath final : public ReferencePath {
 public:
  PolynomialPath(Vector origin, Vector velocity, Vector accel, PathDomain domain)
      : ReferencePath(domain), origin_(std::move(origin)), velocity_(std::move(velocity)), accel_(std::move(accel)) {
    require(origin_.size() >= 1 && origin_.size() == velocity_.size() && origin_.size() == accel_.size(),
            ErrorKind::contract, "polynomial path vectors must share one dimension");
    require(domain.mode != Extension::periodic, ErrorKind::contract,
            "polynomial paths cannot be periodic");
  }

  Eigen::Index dim() const override { return origin_.size(); }
  PathBacking backing() const override { return PathBacking::analytic; }

 protected:
  Vector eval_value(double s) const override { return origin_ + velocity_ * s + accel_ * (s * s); }
  Vector eval_d1(double s) const override { return velocity_ + 2.0 * s * accel_; }
  Vector eval_d2(double) const override { return 2.0 * accel_; }

 private:
  Vector origin_;
  Vector velocity_;
  Vector accel_;
};

/// Samples of a path: strictly increasing s and one row of q per sample.
struct PathSamples {
  std::vector<double> s;
  Matrix q;  // rows = samples, cols = dimension
};

/// Per-coordinate cubic spline through path samples. Natural end conditions
/// for clamp/extrapolate, periodic end conditions for periodic paths (the
/// last sample must repeat the first).
class SplinePath final : public ReferencePath {
 public:
  SplinePath(PathSamples samples, Extension mode)
      : ReferencePath(PathDomain{samples.s.empty() ? 0.0 : samples.s.front(),
                                 samples.s.empty() ? 1.0 : samples.s.back(), mode}),
        knots_(std::move(samples.s)),
        values_(std::move(samples.q)) {
    const auto count = static_cast<Eigen::Index>(knots_.size());
    require(count >= 8, ErrorKind::contract, "sampled path needs at least 8 samples");
    require(values_.rows() == count && values_.cols() >= 1, ErrorKind::contract,
            "sampled path value matrix does not match sample count");
    for (std::size_t i = 1; i < knots_.size(); ++i) {
      require(knots_[i] > knots_[i - 1], ErrorKind::contract, "sampled path s must be strictly increasing");
    }
    require(values_.allFinite(), ErrorKind::contract, "sampled path has non-finite values");
    if (mode == Extension::periodic) {
      const double gap = (values_.row(count - 1) - values_.row(0)).norm();
      const double scale = 1.0 + values_.cwiseAbs().maxCoeff();
      require(gap <= 1e-9 * scale, ErrorKind::contract,
              "periodic sampled path must end at its first sample");
    }
    second_ = solve_second_derivatives(mode == Extension::periodic);
  }

  Eigen::Index dim() const override { return values_.cols(); }
  PathBacking backing() const override { return PathBacking::spline; }
  const std::vector<double>& knots() const { return knots_; }

 protected:
  double resolve(double s) const override {
    check_in_domain(s);
    if (domain().mode == Extension::periodic) {
      const double p = domain().period();
      double r = std::fmod(s - domain().lo, p);
      if (r < 0.0) r += p;
      return domain().lo + r;
    }
    return s;
  }

  Vector eval_value(double s) const override {
    if (s < knots_.front()) return values_.row(0).transpose() + (s - knots_.front()) * end_slope(true);
    if (s > knots_.back()) return values_.row(last()).transpose() + (s - knots_.back()) * end_slope(false);
    const auto [i, a, b, h] = locate(s);
    return (a * values_.row(i) + b * values_.row(i + 1) +
            ((a * a * a - a) * second_.row(i) + (b * b * b - b) * second_.row(i + 1)) * (h * h / 6.0))
        .transpose();
  }

  Vector eval_d1(double s) const override {
    if (s < knots_.front()) return end_slope(true);
    if (s > knots_.back()) return end_slope(false);
    const auto [i, a, b, h] = locate(s);
    return ((values_.row(i + 1) - values_.row(i)) / h - (3.0 * a * a - 1.0) / 6.0 * h * second_.row(i) +
            (3.0 * b * b - 1.0) / 6.0 * h * second_.row(i + 1))
        .transpose();
  }

  Vector eval_d2(double s) const override {
    if (s < knots_.front() || s > knots_.back()) return Vector::Zero(dim());
    const auto [i, a, b, h] = locate(s);
    return (a * second_.row(i) + b * second_.row(i + 1)).transpose();
  }

 private:
  struct Segment {
    Eigen::Index i;
    double a;  // weight of the left knot
    double b;  // weight of the right knot
    double h;
  };

  Eigen::Index last() const { return static_cast<Eigen::Index>(knots_.size()) - 1; }

  Segment locate(double s) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
    auto idx = static_cast<Eigen::Index>(it - knots_.begin()) - 1;
    idx = std::clamp<Eigen::Index>(idx, 0, last() - 1);
    const double x0 = knots_[static_cast<std::size_t>(idx)];
    const double h = knots_[static_cast<std::size_t>(idx) + 1] - x0;
    const double b = (s - x0) / h;
    return {idx, 1.0 - b, b, h};
  }

  Vector end_slope(bool front) const { return eval_d1(front ? knots_.front() : knots_.back()); }

  Matrix solve_second_derivatives(bool periodic) const {
    const Eigen::Index n = last();  // number of intervals
    const Eigen::Index cols = values_.cols();
    auto h = [&](Eigen::Index i) {
      return knots_[static_cast<std::size_t>(i) + 1] - knots_[static_cast<std::size_t>(i)];
    };
    auto slope = [&](Eigen::Index i) { return (values_.row(i + 1) - values_.row(i)) / h(i); };

    Matrix second = Matrix::Zero(n + 1, cols);
    const Eigen::Index unknowns = periodic ? n : n - 1;
    const Eigen::Index offset = periodic ? 0 : 1;
    std::vector<Eigen::Triplet<double>> triplets;
    Matrix rhs(unknowns, cols);
    for (Eigen::Index r = 0; r < unknowns; ++r) {
      const Eigen::Index i = r + offset;  // knot index of this equation
      const Eigen::Index left = i == 0 ? n - 1 : i - 1;
      const double hl = h(left);
      const double hr = h(i);
      triplets.emplace_back(r, r, 2.0 * (hl + hr));
      if (periodic) {
        triplets.emplace_back(r, (r + unknowns - 1) % unknowns, hl);
        triplets.emplace_back(r, (r + 1) % unknowns, hr);
      } else {
        if (r > 0) triplets.emplace_back(r, r - 1, hl);
        if (r + 1 < unknowns) triplets.emplace_back(r, r + 1, hr);
      }
      rhs.row(r) = 6.0 * (slope(i) - slope(left));
    }
    Eigen::SparseMatrix<double> a(unknowns, unknowns);
    a.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    require(lu.info() == Eigen::Success, ErrorKind::numeric_fault, "spline system factorization failed");
    const Matrix m = lu.solve(rhs);
    second.middleRows(offset, unknowns) = m;
    if (periodic) second.row(n) = second.row(0);
    return second;
  }

  std::vector<double> knots_;
  Matrix values_;
  Matrix second_;
};

/// Reads a sampled path in the `s,q_1,...,q_n` CSV format: header line,
/// strictly increasing s, at least 8 rows.
inline PathSamples read_path_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::io, "path CSV is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell.erase(std::remove_if(cell.begin(), cell.end(), [](unsigned char c) { return std::isspace(c); }),
                 cell.end());
      header.push_back(cell);
    }
  }
  require(header.size() >= 2 && header[0] == "s", ErrorKind::io, "path CSV header must be s,q_1,...,q_n");
  for (std::size_t k = 1; k < header.size(); ++k) {
    require(header[k] == "q_" + std::to_string(k), ErrorKind::io,
            "path CSV column " + std::to_string(k + 1) + " must be named q_" + std::to_string(k));
  }
  const auto n = static_cast<Eigen::Index>(header.size() - 1);

  std::vector<double> s;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        require(cell.find_first_not_of(" \t\r", used) == std::string::npos, ErrorKind::io, "trailing text");
      } catch (const std::exception&) {
        throw Error(ErrorKind::io, "path CSV line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    require(static_cast<Eigen::Index>(row.size()) == n + 1, ErrorKind::io,
            "path CSV line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                " fields, expected " + std::to_string(n + 1));
    require(s.empty() || row[0] > s.back(), ErrorKind::io,
            "path CSV line " + std::to_string(line_no) + ": s must be strictly increasing");
    s.push_back(row[0]);
    rows.emplace_back(row.begin() + 1, row.end());
  }
  require(s.size() >= 8, ErrorKind::io, "path CSV needs at least 8 rows, got " + std::to_string(s.size()));
  PathSamples out;
  out.s = std::move(s);
  out.q.resize(static_cast<Eigen::Index>(rows.size()), n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Eigen::Index c = 0; c < n; ++c) out.q(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
  }
  return out;
}

inline PathSamples read_path_csv_file(const std::string& filename) {
  std::ifstream in(filename);
  require(in.good(), ErrorKind::io, "cannot open path CSV '" + filename + "'");
  return read_path_csv(in);
}

/// Samples a path at `count` uniformly spaced points over [lo, hi].
inline PathSamples sample_path(const ReferencePath& path, double lo, double hi, Eigen::Index count) {
  require(count >= 2 && hi > lo, ErrorKind::contract, "sample_path needs count >= 2 and lo < hi");
  PathSamples out;
  out.q.resize(count, path.dim());
  for (Eigen::Index i = 0; i < count; ++i) {
    const double s = i + 1 == count ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    out.s.push_back(s);
    out.q.row(i) = path.value(s).transpose();
  }
  return out;
}

inline void write_path_csv(std::ostream& out, const PathSamples& samples) {
  out << "s";
  for (Eigen::Index k = 0; k < samples.q.cols(); ++k) out << ",q_" << (k + 1);
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < samples.s.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", samples.s[i]);
    out << buf;
    for (Eigen::Index k = 0; k < samples.q.cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", samples.q(static_cast<Eigen::Index>(i), k));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace pbtrack
