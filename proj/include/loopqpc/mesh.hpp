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

#ifndef LOOPQPC_MESH_HPP
#define LOOPQPC_MESH_HPP

// Rectangular MZI mesh: compilation of an N x N unitary into N(N-1)/2
// nearest-neighbour cells plus an output phase screen, and forward
// evaluation of a plan on ideal or imperfect hardware.
//
// Cell transfer on modes (lo, hi):
//
//   T(theta, phi) = [ e^{i phi} cos(theta)   -sin(theta) ]
//                   [ e^{i phi} sin(theta)    cos(theta) ]
//
// A plan evaluates to U = diag(e^{i psi}) * T_K * ... * T_1, where T_1 is the
// first cell in `cells` (the first one the light meets).

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "loopqpc/types.hpp"

namespace loopqpc {

using Matrix2c = Eigen::Matrix2cd;

struct MZICell {
  int mode_lo = 0;
  int mode_hi = 1;
  double theta = 0.0;
  double phi = 0.0;
  int column = 0;

  friend bool operator==(const MZICell&, const MZICell&) = default;
};

struct MeshPlan {
  int dim = 0;
  std::vector<MZICell> cells;
  std::vector<double> output_phases;

  static std::size_t full_cell_count(int n) { return static_cast<std::size_t>(n) * (n - 1) / 2; }

  void validate() const {
    detail::require(dim >= 1, "mesh dimension must be >= 1");
    detail::require(output_phases.size() == static_cast<std::size_t>(dim), "output_phases must have dim entries");
    for (const auto& c : cells) {
      detail::require(c.mode_lo >= 0 && c.mode_hi == c.mode_lo + 1 && c.mode_hi < dim,
                      "MZI cell modes must be adjacent and inside the mesh");
      detail::require(std::isfinite(c.theta) && std::isfinite(c.phi), "MZI cell angles must be finite");
    }
    for (double p : output_phases) detail::require(std::isfinite(p), "output phases must be finite");
  }

  friend bool operator==(const MeshPlan&, const MeshPlan&) = default;
};

/// Hardware imperfection model. Offsets are drawn per cell index, so a given
/// (seed, cell) pair always sees the same error regardless of evaluation order.
struct MeshNoise {
  double sigma_theta = 0.05;
  double sigma_phi = 0.05;
  double sigma_split = 0.005;
  std::uint64_t seed = 0;

  static MeshNoise none() { return {0.0, 0.0, 0.0, 0}; }

  bool is_zero() const { return sigma_theta == 0.0 && sigma_phi == 0.0 && sigma_split == 0.0; }

  void validate() const {
    detail::require(sigma_theta >= 0.0 && sigma_phi >= 0.0 && sigma_split >= 0.0, "noise sigmas must be >= 0");
  }
};

/// Realized deviation of one physical cell from its commanded settings.
struct CellImperfection {
  double dtheta = 0.0;
  double dphi = 0.0;
  double reflectivity_in = 0.5;
  double reflectivity_out = 0.5;
};

inline Matrix2c mzi_transfer(double theta, double phi) {
  const Complex e = std::polar(1.0, phi);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Matrix2c t;
  t << e * c, -s, e * s, c;
  return t;
}

/// Symmetric-phase directional coupler with power reflectivity r.
inline Matrix2c beam_splitter(double r) {
  const double a = std::sqrt(r);
  const Complex b{0.0, std::sqrt(1.0 - r)};
  Matrix2c m;
  m << a, b, b, a;
  return m;
}

/// Two-coupler MZI: external phase, coupler, internal arm phase, coupler, and
/// a fixed output correction. Reduces to mzi_transfer when both couplers are 50/50.
inline Matrix2c mzi_physical(double theta, double phi, double r_in, double r_out) {
  const Matrix2c ext = Eigen::Vector2cd(std::polar(1.0, phi), 1.0).asDiagonal();
  const Matrix2c arm = Eigen::Vector2cd(std::polar(1.0, 2.0 * theta + kPi), 1.0).asDiagonal();
  const Matrix2c flip = Eigen::Vector2cd(1.0, -1.0).asDiagonal();
  const Complex correction = -std::polar(1.0, -theta);
  return correction * flip * beam_splitter(r_out) * arm * beam_splitter(r_in) * ext;
}

inline CellImperfection draw_imperfection(const MeshNoise& noise, std::size_t cell_index) {
  CellImperfection imp;
  if (noise.is_zero()) return imp;
  std::seed_seq seq{static_cast<std::uint32_t>(noise.seed), static_cast<std::uint32_t>(noise.seed >> 32),
                    static_cast<std::uint32_t>(cell_index), static_cast<std::uint32_t>(cell_index >> 32),
                    0x6d657368u};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> gauss(0.0, 1.0);
  imp.dtheta = noise.sigma_theta * gauss(rng);
  imp.dphi = noise.sigma_phi * gauss(rng);
  imp.reflectivity_in = std::clamp(0.5 + noise.sigma_split * gauss(rng), 0.0, 1.0);
  imp.reflectivity_out = std::clamp(0.5 + noise.sigma_split * gauss(rng), 0.0, 1.0);
  return imp;
}

inline Matrix2c realized_transfer(const MZICell& cell, const CellImperfection& imp) {
  const double theta = cell.theta + imp.dtheta;
  const double phi = cell.phi + imp.dphi;
  if (imp.reflectivity_in == 0.5 && imp.reflectivity_out == 0.5) return mzi_transfer(theta, phi);
  return mzi_physical(theta, phi, imp.reflectivity_in, imp.reflectivity_out);
}

inline UnitaryMatrix embed_cell(const MZICell& cell, int dim) {
  detail::require(dim >= 2, "embedding dimension must be >= 2");
  detail::require(cell.mode_lo >= 0 && cell.mode_hi == cell.mode_lo + 1 && cell.mode_hi < dim,
                  "MZI cell modes out of range");
  CMatrix m = CMatrix::Identity(dim, dim);
  m.block(cell.mode_lo, cell.mode_lo, 2, 2) = mzi_transfer(cell.theta, cell.phi);
  return UnitaryMatrix(std::move(m));
}

namespace detail {

inline double wrap_phase(double p) {
  double w = std::fmod(p, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

// Left-multiplies rows (lo, lo+1) of m by t.
inline void apply_rows(CMatrix& m, int lo, const Matrix2c& t) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const Complex a = m(lo, c);
    const Complex b = m(lo + 1, c);
    m(lo, c) = t(0, 0) * a + t(0, 1) * b;
    m(lo + 1, c) = t(1, 0) * a + t(1, 1) * b;
  }
}

// Right-multiplies columns (lo, lo+1) of m by t.
inline void apply_cols(CMatrix& m, int lo, const Matrix2c& t) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const Complex a = m(r, lo);
    const Complex b = m(r, lo + 1);
    m(r, lo) = a * t(0, 0) + b * t(1, 0);
    m(r, lo + 1) = a * t(0, 1) + b * t(1, 1);
  }
}

struct CellAngles {
  double theta = 0.0;
  double phi = 0.0;
};

// Angles for which (u_lo, u_hi) * T^dagger has a zero in the first slot.
inline CellAngles null_by_column_op(Complex u_lo, Complex u_hi) {
  if (u_lo == 0.0) return {};
  if (u_hi == 0.0) return {kPi / 2, 0.0};
  return {std::atan2(std::abs(u_lo), std::abs(u_hi)), wrap_phase(std::arg(u_lo) - std::arg(u_hi))};
}

// Angles for which T * (u_lo, u_hi)^T has a zero in the second slot.
inline CellAngles null_by_row_op(Complex u_lo, Complex u_hi) {
  if (u_hi == 0.0) return {};
  if (u_lo == 0.0) return {kPi / 2, 0.0};
  return {std::atan2(std::abs(u_hi), std::abs(u_lo)), wrap_phase(kPi + std::arg(u_hi) - std::arg(u_lo))};
}

inline void assign_columns(MeshPlan& plan) {
  std::vector<int> next_free(static_cast<std::size_t>(plan.dim), 0);
  for (auto& c : plan.cells) {
    const auto lo = static_cast<std::size_t>(c.mode_lo);
    c.column = std::max(next_free[lo], next_free[lo + 1]);
    next_free[lo] = next_free[lo + 1] = c.column + 1;
  }
}

}  // namespace detail

/// Rectangular decomposition: null the lower triangle anti-diagonal by
/// anti-diagonal, alternating column operations (U T^-1) and row operations
/// (T U), then commute the row operations through the residual diagonal.
inline MeshPlan clements_decompose(const UnitaryMatrix& u) {
  constexpr double kNullTolerance = 1e-10;
  const int n = static_cast<int>(u.dim());
  CMatrix w = u.matrix();

  std::vector<MZICell> col_ops;
  std::vector<MZICell> row_ops;
  for (int d = 0; d + 1 < n; ++d) {
    for (int j = 0; j <= d; ++j) {
      int row = 0;
      int col = 0;
      MZICell cell;
      if (d % 2 == 0) {
        row = n - 1 - j;
        col = d - j;
        const auto a = detail::null_by_column_op(w(row, col), w(row, col + 1));
        cell = {col, col + 1, a.theta, a.phi, 0};
        detail::apply_cols(w, col, mzi_transfer(a.theta, a.phi).adjoint());
        col_ops.push_back(cell);
      } else {
        row = n - 1 - d + j;
        col = j;
        const auto a = detail::null_by_row_op(w(row - 1, col), w(row, col));
        cell = {row - 1, row, a.theta, a.phi, 0};
        detail::apply_rows(w, row - 1, mzi_transfer(a.theta, a.phi));
        row_ops.push_back(cell);
      }
      if (std::abs(w(row, col)) >= kNullTolerance) {
        throw NumericalError("nulling step failed at (" + std::to_string(row) + "," + std::to_string(col) +
                             "): residual " + std::to_string(std::abs(w(row, col))));
      }
      w(row, col) = 0.0;
    }
  }

  CMatrix off = w;
  off.diagonal().setZero();
  if (off.size() > 0 && off.cwiseAbs().maxCoeff() > 1e-9) {
    throw NumericalError("mesh decomposition left a non-diagonal remainder");
  }

  CVector diag = w.diagonal();
  MeshPlan plan;
  plan.dim = n;
  plan.cells = std::move(col_ops);
  // T^-1(theta, phi) D = D' T(theta, phi'), applied from the innermost row op out.
  for (auto it = row_ops.rbegin(); it != row_ops.rend(); ++it) {
    const auto lo = it->mode_lo;
    const Complex d1 = diag(lo);
    const Complex d2 = diag(lo + 1);
    MZICell moved = *it;
    if (it->theta == 0.0) {
      moved.phi = 0.0;
      diag(lo) = std::polar(1.0, -it->phi) * d1;
    } else {
      moved.phi = detail::wrap_phase(std::arg(-d1 / d2));
      diag(lo) = -std::polar(1.0, -it->phi) * d2;
    }
    plan.cells.push_back(moved);
  }
  plan.output_phases.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) plan.output_phases[static_cast<std::size_t>(k)] = detail::wrap_phase(std::arg(diag(k)));
  detail::assign_columns(plan);
  return plan;
}

inline std::vector<CellImperfection> draw_imperfections(const MeshNoise& noise, std::size_t n_cells) {
  std::vector<CellImperfection> imps;
  imps.reserve(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) imps.push_back(draw_imperfection(noise, i));
  return imps;
}

/// Transfer matrix of `plan` on hardware with the given per-cell imperfections
/// (an empty span means ideal cells). No validation; hot path for training.
inline CMatrix realize(const MeshPlan& plan, std::span<const CellImperfection> imps) {
  CMatrix m = CMatrix::Identity(plan.dim, plan.dim);
  for (std::size_t i = 0; i < plan.cells.size(); ++i) {
    const auto& cell = plan.cells[i];
    const CellImperfection imp = i < imps.size() ? imps[i] : CellImperfection{};
    detail::apply_rows(m, cell.mode_lo, realized_transfer(cell, imp));
  }
  for (int k = 0; k < plan.dim; ++k) m.row(k) *= std::polar(1.0, plan.output_phases[static_cast<std::size_t>(k)]);
  return m;
}

/// What the chip does when commanded with `plan`, optionally with imperfections.
inline UnitaryMatrix mesh_forward(const MeshPlan& plan, const std::optional<MeshNoise>& noise = std::nullopt) {
  plan.validate();
  if (!noise) return UnitaryMatrix(realize(plan, {}));
  noise->validate();
  const auto imps = draw_imperfections(*noise, plan.cells.size());
  return UnitaryMatrix(realize(plan, imps));
}

/// Plan with every cell at theta = phi = 0 in rectangular layout.
inline MeshPlan zero_plan(int n) {
  detail::require(n >= 1, "mesh dimension must be >= 1");
  MeshPlan plan;
  plan.dim = n;
  for (int col = 0; col < n; ++col) {
    for (int lo = col % 2; lo + 1 < n; lo += 2) plan.cells.push_back({lo, lo + 1, 0.0, 0.0, col});
  }
  plan.output_phases.assign(static_cast<std::size_t>(n), 0.0);
  return plan;
}

inline double frobenius_distance(const CMatrix& a, const CMatrix& b) { return (a - b).norm(); }

}  // namespace loopqpc

#endif  // LOOPQPC_MESH_HPP
