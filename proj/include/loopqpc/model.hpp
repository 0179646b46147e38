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

#ifndef LOOPQPC_MODEL_HPP
#define LOOPQPC_MODEL_HPP

// Truncated spin-boson model in unary (one-hot) encoding.
//
//   H = w a^dag a + 1/2 (h sz + eps sx) + lambda sx (a^dag + a)
//
// Channel index = spin_index * n_boson + boson_level, spin_index 0 for the
// excited state (sz = +1). Energies are in units of h, time in hbar/h.

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "loopqpc/types.hpp"

namespace loopqpc {

struct SpinBosonParams {
  double epsilon = 1.0;
  double omega_hbar = 1.0;
  double lambda = 1.0;
  double h_field = 1.0;
  int n_boson = 3;
  double dt = 1.0;

  int dim() const { return 2 * n_boson; }

  void validate() const {
    detail::require(n_boson >= 1, "n_boson must be >= 1");
    detail::require(std::isfinite(epsilon) && std::isfinite(omega_hbar) && std::isfinite(lambda) &&
                        std::isfinite(h_field),
                    "spin-boson energies must be finite");
    detail::require(std::isfinite(dt) && dt > 0.0, "time step dt must be > 0");
  }
};

enum class Spin { kExcited = 0, kGround = 1 };

struct BasisLabel {
  Spin spin = Spin::kExcited;
  int boson_level = 0;

  friend bool operator==(const BasisLabel&, const BasisLabel&) = default;
};

inline int channel_of(const BasisLabel& label, int n_boson) {
  detail::require(label.boson_level >= 0 && label.boson_level < n_boson, "boson level out of range");
  return static_cast<int>(label.spin) * n_boson + label.boson_level;
}

inline BasisLabel label_of(int channel, int n_boson) {
  detail::require(n_boson >= 1 && channel >= 0 && channel < 2 * n_boson, "channel out of range");
  return {channel < n_boson ? Spin::kExcited : Spin::kGround, channel % n_boson};
}

/// Hermitian matrix in the unary channel basis.
class HamiltonianMatrix {
 public:
  static constexpr double kTolerance = 1e-12;

  explicit HamiltonianMatrix(CMatrix entries) : m_(std::move(entries)) {
    detail::require(m_.rows() == m_.cols() && m_.rows() > 0, "Hamiltonian must be square and non-empty");
    const double asym = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
    if (!(asym <= kTolerance)) throw InputError("Hamiltonian is not Hermitian");
  }

  Eigen::Index dim() const { return m_.rows(); }
  const CMatrix& matrix() const { return m_; }
  Complex operator()(Eigen::Index r, Eigen::Index c) const { return m_(r, c); }

 private:
  CMatrix m_;
};

/// Annihilation and creation operators truncated to n_boson levels.
inline std::pair<CMatrix, CMatrix> truncated_ladder(int n_boson) {
  detail::require(n_boson >= 1, "n_boson must be >= 1");
  CMatrix a = CMatrix::Zero(n_boson, n_boson);
  for (int m = 0; m + 1 < n_boson; ++m) a(m, m + 1) = std::sqrt(static_cast<double>(m + 1));
  CMatrix a_dag = a.adjoint();
  return {std::move(a), std::move(a_dag)};
}

namespace detail {

inline CMatrix kron(const CMatrix& lhs, const CMatrix& rhs) {
  CMatrix out(lhs.rows() * rhs.rows(), lhs.cols() * rhs.cols());
  for (Eigen::Index i = 0; i < lhs.rows(); ++i) {
    for (Eigen::Index j = 0; j < lhs.cols(); ++j) {
      out.block(i * rhs.rows(), j * rhs.cols(), rhs.rows(), rhs.cols()) = lhs(i, j) * rhs;
    }
  }
  return out;
}

}  // namespace detail

inline HamiltonianMatrix build_hamiltonian(const SpinBosonParams& p) {
  p.validate();
  const auto [a, a_dag] = truncated_ladder(p.n_boson);
  const CMatrix id_b = CMatrix::Identity(p.n_boson, p.n_boson);
  const CMatrix id_s = CMatrix::Identity(2, 2);
  CMatrix sz = CMatrix::Zero(2, 2);
  sz(0, 0) = 1.0;
  sz(1, 1) = -1.0;
  CMatrix sx = CMatrix::Zero(2, 2);
  sx(0, 1) = 1.0;
  sx(1, 0) = 1.0;

  CMatrix h = p.omega_hbar * detail::kron(id_s, a_dag * a) +
              0.5 * detail::kron(p.h_field * sz + p.epsilon * sx, id_b) +
              p.lambda * detail::kron(sx, a_dag + a);
  // Remove roundoff asymmetry so the Hermitian check is exact.
  h = 0.5 * (h + h.adjoint()).eval();
  return HamiltonianMatrix(std::move(h));
}

/// exp(-i H dt) by Hermitian eigendecomposition.
inline UnitaryMatrix step_unitary(const HamiltonianMatrix& h, double dt) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(h.matrix());
  if (eig.info() != Eigen::Success) throw NumericalError("Hermitian eigendecomposition failed");
  const CMatrix& v = eig.eigenvectors();
  const RVector& lambda = eig.eigenvalues();
  const double residual = (h.matrix() * v - v * lambda.cast<Complex>().asDiagonal()).cwiseAbs().maxCoeff();
  if (residual > 1e-9) {
    throw NumericalError("eigendecomposition residual too large: " + std::to_string(residual));
  }
  CVector phases(lambda.size());
  for (Eigen::Index k = 0; k < lambda.size(); ++k) phases(k) = std::polar(1.0, -lambda(k) * dt);
  return UnitaryMatrix(v * phases.asDiagonal() * v.adjoint());
}

inline UnitaryMatrix step_unitary(const SpinBosonParams& p) {
  return step_unitary(build_hamiltonian(p), p.dt);
}

/// Lossless reference populations |<l| U^n |initial>|^2 for n = 1..n_steps.
inline std::vector<RVector> evolve_exact(const SpinBosonParams& p, int initial, int n_steps) {
  p.validate();
  detail::require(initial >= 0 && initial < p.dim(), "initial channel out of range");
  detail::require(n_steps >= 1, "n_steps must be >= 1");
  const UnitaryMatrix u = step_unitary(p);
  CVector psi = CVector::Unit(p.dim(), initial);
  std::vector<RVector> out;
  out.reserve(static_cast<std::size_t>(n_steps));
  for (int n = 0; n < n_steps; ++n) {
    psi = u.matrix() * psi;
    out.push_back(psi.cwiseAbs2());
  }
  return out;
}

}  // namespace loopqpc

#endif  // LOOPQPC_MODEL_HPP
