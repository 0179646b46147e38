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

#ifndef LOOPQPC_LOOPCHIP_HPP
#define LOOPQPC_LOOPCHIP_HPP

// Recirculating-loop chip. A photon enters through the input splitter, passes
// the mesh, and at every pass either exits through the output splitter or is
// routed through the delay line back into the mesh:
//
//   I_1 = c * U * sqrt(r_in) * X
//   I_n = c * U * sqrt(1 - r_in) * l * sqrt(1 - r_out) * I_{n-1}
//   Y_n = d * sqrt(r_out) * I_n
//
// r_in / r_out are power fractions; c, l, d are amplitude transmissions of one
// mesh pass, one delay-line pass and the lumped coupling/detection loss.
// Photons from different passes arrive at different times, so I_n are kept
// separate and never superposed.

#include <cmath>
#include <vector>

#include "loopqpc/types.hpp"

namespace loopqpc {

struct ChipConfig {
  int dim = 6;
  double ratio_in = 1.0 / 3.0;
  double ratio_out = 1.0 / 3.0;
  double alpha_db_per_cm = 0.6;
  double chip_length_cm = 5.0;
  double loop_length_cm = 4.0;
  double others_loss_db = 5.0;
  double loop_delay_ps = 400.0;
  double rep_rate_mhz = 500.0;
  bool lossless = false;

  static constexpr double kMinLoopLengthCm = 4.0;

  void validate() const {
    detail::require(dim >= 1, "chip dimension must be >= 1");
    detail::require(ratio_in > 0.0 && ratio_in < 1.0, "ratio_in must lie in (0, 1)");
    detail::require(ratio_out > 0.0 && ratio_out < 1.0, "ratio_out must lie in (0, 1)");
    detail::require(alpha_db_per_cm >= 0.0 && others_loss_db >= 0.0, "losses must be >= 0");
    detail::require(chip_length_cm > 0.0 && loop_length_cm > 0.0, "lengths must be > 0");
    detail::require(loop_length_cm >= kMinLoopLengthCm, "loop length below the 4 cm peak-separation threshold");
    detail::require(loop_delay_ps > 0.0 && rep_rate_mhz > 0.0, "loop delay and repetition rate must be > 0");
  }

  /// Pump period in ps (2000 ps at 500 MHz).
  double pump_period_ps() const { return 1e6 / rep_rate_mhz; }

  double chip_amplitude() const { return lossless ? 1.0 : db_to_amplitude(alpha_db_per_cm * chip_length_cm); }
  double loop_amplitude() const { return lossless ? 1.0 : db_to_amplitude(alpha_db_per_cm * loop_length_cm); }
  double others_amplitude() const { return lossless ? 1.0 : db_to_amplitude(others_loss_db); }

  static double db_to_amplitude(double db) { return std::pow(10.0, -db / 20.0); }
};

struct StageRecord {
  CVector x;
  std::vector<CVector> intermediates;
  std::vector<CVector> outputs;
  std::vector<RVector> probabilities;

  int n_steps() const { return static_cast<int>(outputs.size()); }

  double total_mass() const {
    double s = 0.0;
    for (const auto& p : probabilities) s += p.sum();
    return s;
  }
};

enum class Normalization { kRaw, kRow };

struct PowerMatrix {
  int step = 1;
  RMatrix entries;
  Normalization normalization = Normalization::kRow;
};

inline StageRecord run_loop(const ChipConfig& config, const UnitaryMatrix& mesh, int input_channel, int n_steps) {
  config.validate();
  detail::require(mesh.dim() == config.dim, "mesh dimension does not match chip dimension");
  detail::require(input_channel >= 0 && input_channel < config.dim, "input channel out of range");
  detail::require(n_steps >= 1, "n_steps must be >= 1");

  const double chip = config.chip_amplitude();
  const double recirculate = std::sqrt(1.0 - config.ratio_out) * config.loop_amplitude() *
                             std::sqrt(1.0 - config.ratio_in);
  const double exit = std::sqrt(config.ratio_out) * config.others_amplitude();

  StageRecord rec;
  rec.x = CVector::Unit(config.dim, input_channel);
  CVector stage = chip * (mesh.matrix() * (std::sqrt(config.ratio_in) * rec.x));
  for (int n = 1; n <= n_steps; ++n) {
    if (n > 1) stage = chip * (mesh.matrix() * (recirculate * stage));
    CVector y = exit * stage;
    rec.probabilities.push_back(y.cwiseAbs2());
    rec.intermediates.push_back(stage);
    rec.outputs.push_back(std::move(y));
  }
  return rec;
}

/// Per-step output distribution renormalized over the photons that survive to that step.
inline std::vector<RVector> conditional_probabilities(const StageRecord& record) {
  std::vector<RVector> out;
  out.reserve(record.probabilities.size());
  for (std::size_t n = 0; n < record.probabilities.size(); ++n) {
    const double mass = record.probabilities[n].sum();
    if (!(mass >= 1e-300)) {
      throw NumericalError("degenerate step " + std::to_string(n + 1) + ": no surviving probability mass");
    }
    out.push_back(record.probabilities[n] / mass);
  }
  return out;
}

/// Input x output transmittance matrices for steps 1..n_steps.
inline std::vector<PowerMatrix> power_matrices(const ChipConfig& config, const UnitaryMatrix& mesh, int n_steps,
                                               Normalization norm) {
  std::vector<PowerMatrix> mats(static_cast<std::size_t>(n_steps));
  for (int n = 0; n < n_steps; ++n) {
    mats[static_cast<std::size_t>(n)] = {n + 1, RMatrix::Zero(config.dim, config.dim), norm};
  }
  for (int k = 0; k < config.dim; ++k) {
    const StageRecord rec = run_loop(config, mesh, k, n_steps);
    const auto rows = norm == Normalization::kRow ? conditional_probabilities(rec) : rec.probabilities;
    for (int n = 0; n < n_steps; ++n) mats[static_cast<std::size_t>(n)].entries.row(k) = rows[static_cast<std::size_t>(n)].transpose();
  }
  return mats;
}

inline PowerMatrix power_matrix(const ChipConfig& config, const UnitaryMatrix& mesh, int step, Normalization norm) {
  detail::require(step >= 1, "step must be >= 1");
  return power_matrices(config, mesh, step, norm).back();
}

}  // namespace loopqpc

#endif  // LOOPQPC_LOOPCHIP_HPP
