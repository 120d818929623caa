#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bloom {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Sorted list of point indices.
using PointSet = std::vector<int>;

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The requested method cannot handle this input (size, exponents, geometry).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// A space file or generated space violates one of the structural axioms.
class ValidationError : public Error {
 public:
  ValidationError(std::string axiom, const std::string& detail)
      : Error(axiom + ": " + detail), axiom_(std::move(axiom)) {}
  const std::string& axiom() const { return axiom_; }

 private:
  std::string axiom_;
};

/// A dyadic construction failed one of its axioms.
class ConstructionError : public Error {
 public:
  ConstructionError(std::string axiom, const std::string& detail)
      : Error(axiom + ": " + detail), axiom_(std::move(axiom)) {}
  const std::string& axiom() const { return axiom_; }

 private:
  std::string axiom_;
};

/// A precondition measured at run time does not hold (e.g. a divisor bound).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An internal invariant that is true by construction failed.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Malformed experiment configuration; `path` names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& detail)
      : Error(path + ": " + detail), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline ComplexVector to_complex(const RealVector& v) { return v.cast<Complex>(); }

inline bool is_real(const ComplexVector& v, double tol = 0.0) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v[i].imag()) > tol) return false;
  return true;
}

inline double sup_norm(const ComplexVector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

inline PointSet all_points(int n) {
  PointSet s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = i;
  return s;
}

inline bool contains(const PointSet& s, int x) { return std::binary_search(s.begin(), s.end(), x); }

inline bool is_subset(const PointSet& a, const PointSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline bool intersects(const PointSet& a, const PointSet& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

/// Indicator vector of a point set.
inline ComplexVector indicator(const PointSet& s, int n) {
  ComplexVector v = ComplexVector::Zero(n);
  for (int x : s) v[x] = 1.0;
  return v;
}

inline void require_positive(const RealVector& w) {
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (!(w[i] > 0.0) || !std::isfinite(w[i])) throw DomainError("weights must be positive and finite");
}

/// Conjugate exponent p' with 1/p + 1/p' = 1.
inline double conjugate(double p) { return p / (p - 1.0); }

}  // namespace bloom
