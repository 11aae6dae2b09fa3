#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdris {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using CRowVector = Eigen::RowVectorXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kDefaultTol = 1e-10;
inline constexpr Complex kJ{0.0, 1.0};

enum class ErrorCode {
  dimension_mismatch,
  constraint_violation,
  unstable_amplifier_loop,
  resonant_network,
  non_symmetric,
  non_unitary,
  zero_norm_group,
  bracket_not_found,
  infeasible_budget,
  invalid_argument,
  size_limit,
  non_convergence,
  io_error,
  config_error,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries a machine-readable code so the
// harness can record it per result row.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

// Unit conversions. x dBm = 10^((x-30)/10) W.
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// ||a - b||_F / max(||b||_F, floor)
double relative_difference(const CMatrix& a, const CMatrix& b, double floor = 1e-300);

// ||M^H M - I||_F
double unitarity_error(const CMatrix& m);

// ||M - M^T||_F / ||M||_F (0 for the zero matrix)
double symmetry_error(const CMatrix& m);

CMatrix block_diagonal(const std::vector<CMatrix>& blocks);

}  // namespace bdris
