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

#ifndef LOOPQPC_LOSSES_HPP
#define LOOPQPC_LOSSES_HPP

// Loss budget of the loop chip after n passes:
//
//   L(n) = Sbar_i * [S_i * l_chip * l_loop * S_o]^(n-1) * l_chip * Sbar_o * l_others
//
// with every factor expressed in dB and summed. S is the loop branch, Sbar
// the single-use input/exit branch (S + Sbar = 1 at each splitter).

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "loopqpc/loopchip.hpp"
#include "loopqpc/mesh.hpp"
#include "loopqpc/types.hpp"

namespace loopqpc {

struct PlatformSpec {
  std::string name;
  double alpha_db_per_cm = 0.0;
  double mzi_extra_db = 0.0;
  double offchip_per_loop_db = 0.0;

  void validate() const {
    detail::require(!name.empty(), "platform name must be non-empty");
    detail::require(alpha_db_per_cm >= 0.0 && mzi_extra_db >= 0.0 && offchip_per_loop_db >= 0.0,
                    "platform losses must be >= 0");
  }
};

/// On-chip SiN, SOI, LNOI and SiN with an off-chip fibre loop.
inline std::vector<PlatformSpec> default_platforms() {
  return {
      {"SiN", 0.6, 0.0, 0.0},
      {"SOI", 3.0, 0.0, 0.0},
      {"LNOI", 0.8, 0.2, 0.0},
      {"SiN-offchip", 0.6, 0.0, 12.0},
  };
}

inline const PlatformSpec& find_platform(std::span<const PlatformSpec> platforms, const std::string& name) {
  for (const auto& p : platforms) {
    if (p.name == name) return p;
  }
  throw InputError("unknown platform: " + name);
}

/// Power fractions: r_loop on the recirculating branch, r_end on the input/exit branch.
struct SplitterRatios {
  double r_loop = 2.0 / 3.0;
  double r_end = 1.0 / 3.0;
};

struct LossBudget {
  std::string platform;
  std::vector<double> per_step_db;  // entry n-1 holds L(n)
};

inline double fraction_to_db(double r) { return -10.0 * std::log10(r); }

namespace detail {

inline double chip_pass_db(const PlatformSpec& p, const ChipConfig& g) {
  return p.alpha_db_per_cm * g.chip_length_cm + p.mzi_extra_db * static_cast<double>(MeshPlan::full_cell_count(g.dim));
}

inline double loop_pass_db(const PlatformSpec& p, const ChipConfig& g) {
  return p.alpha_db_per_cm * g.loop_length_cm + p.offchip_per_loop_db;
}

inline double budget_db(const PlatformSpec& p, const ChipConfig& g, double feed_in, double loop_in, double loop_out,
                        double exit_out, int n) {
  const double per_loop = fraction_to_db(loop_in) + chip_pass_db(p, g) + loop_pass_db(p, g) + fraction_to_db(loop_out);
  return fraction_to_db(feed_in) + (n - 1) * per_loop + chip_pass_db(p, g) + fraction_to_db(exit_out) +
         g.others_loss_db;
}

inline void require_fraction(double r, const char* what) {
  require(r > 0.0 && r < 1.0, std::string(what) + " must lie in (0, 1)");
}

}  // namespace detail

/// L(n) in dB with both splitters set to `ratios`.
inline double total_loss_db(const PlatformSpec& platform, const ChipConfig& geometry, const SplitterRatios& ratios,
                            int n) {
  platform.validate();
  detail::require(n >= 1, "loop count n must be >= 1");
  detail::require_fraction(ratios.r_loop, "r_loop");
  detail::require_fraction(ratios.r_end, "r_end");
  return detail::budget_db(platform, geometry, ratios.r_end, ratios.r_loop, ratios.r_loop, ratios.r_end, n);
}

/// L(n) for the splitter assignment of a ChipConfig: ratio_in feeds the mesh
/// once, ratio_out exits once, the complements recirculate.
inline double total_loss_db(const PlatformSpec& platform, const ChipConfig& chip, int n) {
  platform.validate();
  chip.validate();
  detail::require(n >= 1, "loop count n must be >= 1");
  return detail::budget_db(platform, chip, chip.ratio_in, 1.0 - chip.ratio_in, 1.0 - chip.ratio_out, chip.ratio_out,
                           n);
}

/// Maximizer of (1 - r) r^(n-1): r_loop = (n-1)/n.
inline SplitterRatios optimal_splitters(int n) {
  detail::require(n >= 2, "splitter optimization needs n >= 2");
  const double r = static_cast<double>(n - 1) / static_cast<double>(n);
  return {r, 1.0 - r};
}

/// Bracketed bisection on d/dr [ln(1 - r) + (n-1) ln r], which is strictly decreasing on (0, 1).
inline double numeric_optimal_loop_ratio(int n) {
  detail::require(n >= 2, "splitter optimization needs n >= 2");
  const auto slope = [n](double r) { return -1.0 / (1.0 - r) + static_cast<double>(n - 1) / r; };
  double lo = 1e-12;
  double hi = 1.0 - 1e-12;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline std::vector<LossBudget> platform_comparison(std::span<const PlatformSpec> platforms, const ChipConfig& geometry,
                                                   const SplitterRatios& ratios, int max_loops) {
  detail::require(!platforms.empty(), "platform list must be non-empty");
  detail::require(max_loops >= 1, "max_loops must be >= 1");
  std::vector<LossBudget> table;
  for (const auto& p : platforms) {
    LossBudget b{p.name, {}};
    for (int n = 1; n <= max_loops; ++n) b.per_step_db.push_back(total_loss_db(p, geometry, ratios, n));
    table.push_back(std::move(b));
  }
  return table;
}

/// Single-pass identity-configured loss of an n-mode rectangular mesh: n
/// columns of cells, each cell_length long.
inline double mode_scaling_loss(int n_modes, const PlatformSpec& platform, double cell_length_cm) {
  detail::require(n_modes >= 2 && n_modes % 2 == 0, "mode count must be even and >= 2");
  detail::require(cell_length_cm > 0.0, "cell length must be > 0");
  platform.validate();
  const double modes = static_cast<double>(n_modes);
  return platform.alpha_db_per_cm * modes * cell_length_cm + platform.mzi_extra_db * modes;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = slope x + intercept.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  detail::require(x.size() == y.size() && x.size() >= 2, "linear fit needs >= 2 paired points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  detail::require(sxx > 0.0, "linear fit needs distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

}  // namespace loopqpc

#endif  // LOOPQPC_LOSSES_HPP
