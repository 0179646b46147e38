// Copyright 2026 The loopqpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LOOPQPC_TYPES_HPP
#define LOOPQPC_TYPES_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace loopqpc {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Raised for caller mistakes: bad parameters, shapes, indices, files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine cannot meet its own accuracy contract.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InputError(what);
}

}  // namespace detail

/// SplitMix64 finalizer; used to derive independent sub-stream seeds.
inline constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  return mix_seed(mix_seed(mix_seed(base) ^ a) ^ b);
}

/// Largest elementwise magnitude of U^dagger U - I.
inline double unitarity_defect(const CMatrix& u) {
  if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
  const CMatrix d = u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols());
  return d.cwiseAbs().maxCoeff();
}

/// Dense square complex matrix checked to be unitary on construction.
class UnitaryMatrix {
 public:
  static constexpr double kTolerance = 1e-10;

  UnitaryMatrix() = default;

  explicit UnitaryMatrix(CMatrix entries, double tol = kTolerance) : m_(std::move(entries)) {
    detail::require(m_.rows() == m_.cols() && m_.rows() > 0, "unitary matrix must be square and non-empty");
    const double defect = unitarity_defect(m_);
    if (!(defect < tol)) {
      throw InputError("matrix is not unitary (max |U^dagger U - I| = " + std::to_string(defect) + ")");
    }
  }

  static UnitaryMatrix identity(Eigen::Index dim) {
    return UnitaryMatrix(CMatrix::Identity(dim, dim));
  }

  Eigen::Index dim() const { return m_.rows(); }
  const CMatrix& matrix() const { return m_; }
  Complex operator()(Eigen::Index r, Eigen::Index c) const { return m_(r, c); }

 private:
  CMatrix m_;
};

}  // namespace loopqpc

#endif  // LOOPQPC_TYPES_HPP
