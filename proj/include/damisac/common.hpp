#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace damisac {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr cplx kJ{0.0, 1.0};
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Scenario / experiment configuration problems (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Optimization problem has no feasible point (CLI exit code 3).
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double bound)
      : Error(what), bound_(bound) {}
  /// Best achievable value of the violated quantity, when known.
  double bound() const { return bound_; }

 private:
  double bound_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watt(double dbm) { return 1e-3 * db_to_lin(dbm); }

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

}  // namespace damisac
