#pragma once

#include "bdris/common.hpp"

#include <random>

namespace testutil {

using bdris::CMatrix;
using bdris::Complex;
using bdris::CVector;

class Rng {
 public:
  explicit Rng(unsigned seed) : gen_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }
  Complex cn() {
    std::normal_distribution<double> n(0.0, std::sqrt(0.5));
    return {n(gen_), n(gen_)};
  }
  CMatrix matrix(int rows, int cols) {
    CMatrix m(rows, cols);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r) m(r, c) = cn();
    return m;
  }
  CVector vector(int n) { return matrix(n, 1).col(0); }
  CMatrix unitary(int n) {
    Eigen::HouseholderQR<CMatrix> qr(matrix(n, n));
    return qr.householderQ() * CMatrix::Identity(n, n);
  }
  CMatrix symmetric(int n) {
    const CMatrix x = matrix(n, n);
    return x + x.transpose();
  }
  CMatrix hermitian_psd(int n, int rank) {
    const CMatrix x = matrix(n, rank);
    return x * x.adjoint();
  }

 private:
  std::mt19937_64 gen_;
};

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testutil
