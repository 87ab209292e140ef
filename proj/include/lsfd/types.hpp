// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lsfd {

template <typename Real>
using Complex = std::complex<Real>;

template <typename Real>
using CMatX = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVecX = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RVecX = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

using cd = Complex<double>;
using CMat = CMatX<double>;
using CVec = CVecX<double>;
using RVec = RVecX<double>;
using RMat = Eigen::MatrixXd;

/// Bad user-supplied configuration (invalid ranges, incompatible options).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Precondition violated by a caller.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Factorization or division failed where the math says it should not.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Estimator { mmse, ew_mmse };
enum class Combiner { mrc, rzf };
enum class CorrMode { full, diagonal_approx };

std::string to_string(Estimator e);
std::string to_string(Combiner c);
Estimator parse_estimator(const std::string& s);
Combiner parse_combiner(const std::string& s);

/// Network dimensions: L cells, K users per cell, M antennas per BS.
///
/// Per-link quantities are indexed by (user cell, user index, BS); the flat
/// layout is ((cell * K) + user) * L + bs.
struct Dims {
  std::size_t L = 0;
  std::size_t K = 0;
  std::size_t M = 0;

  std::size_t users() const { return L * K; }
  std::size_t user(std::size_t cell, std::size_t k) const { return cell * K + k; }
  std::size_t link(std::size_t cell, std::size_t k, std::size_t bs) const {
    return (cell * K + k) * L + bs;
  }
  std::size_t links() const { return L * K * L; }
};

}  // namespace lsfd
