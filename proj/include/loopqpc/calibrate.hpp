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

#ifndef LOOPQPC_CALIBRATE_HPP
#define LOOPQPC_CALIBRATE_HPP

// Training-based calibration of the mesh against a fixed imperfect chip, and
// the normalized power-matrix error used to compare it with plain
// decomposition.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "loopqpc/loopchip.hpp"
#include "loopqpc/mesh.hpp"
#include "loopqpc/model.hpp"
#include "loopqpc/types.hpp"

namespace loopqpc {

enum class Optimizer { kAdam, kSgd };

struct TrainingConfig {
  double learning_rate = 0.01;
  int max_iters = 2000;
  double tol = 1e-6;
  double grad_eps = 1e-6;
  Optimizer optimizer = Optimizer::kAdam;
  double clamp_eps = 1e-12;

  void validate() const {
    // A zero learning rate is accepted and leaves the plan untouched.
    detail::require(learning_rate >= 0.0 && std::isfinite(learning_rate), "learning_rate must be >= 0");
    detail::require(max_iters >= 0, "max_iters must be >= 0");
    detail::require(tol > 0.0 && grad_eps > 0.0, "tol and grad_eps must be > 0");
    detail::require(clamp_eps > 0.0 && clamp_eps < 1e-6, "clamp_eps must lie in (0, 1e-6)");
  }
};

struct HamiltonianRow {
  double epsilon = 0.0;
  double omega_hbar = 0.0;
  double lambda = 0.0;

  friend bool operator==(const HamiltonianRow&, const HamiltonianRow&) = default;
};

struct ParamTable {
  static constexpr std::size_t kRows = 20;
  std::vector<HamiltonianRow> rows;

  void validate() const {
    detail::require(rows.size() == kRows, "expected 20 rows in parameter table, got " + std::to_string(rows.size()));
  }
};

/// The twenty (epsilon, hbar*omega, lambda) sets, in units of h.
inline ParamTable table_a1() {
  static constexpr std::array<double, 20> eps{0.2, 0.2, 0.2, 0.2, 0.4, 0.4, 0.4, 0.4, 0.8, 0.8,
                                              0.8, 0.8, 1.0, 1.0, 1.0, 1.0, 1.2, 1.2, 1.2, 1.2};
  static constexpr std::array<double, 20> omega{0.2, 0.4, 0.8, 1.2, 0.2, 1.0, 0.8, 1.2, 0.4, 1.0,
                                                0.8, 1.2, 0.2, 0.4, 1.0, 1.2, 0.8, 0.2, 0.8, 1.2};
  static constexpr std::array<double, 20> lam{0.2, 1.2, 1.0, 0.8, 0.4, 1.2, 1.0, 0.8, 0.2, 1.2,
                                              1.0, 0.8, 0.8, 1.2, 1.0, 0.4, 0.4, 1.2, 1.0, 0.8};
  ParamTable t;
  for (std::size_t i = 0; i < eps.size(); ++i) t.rows.push_back({eps[i], omega[i], lam[i]});
  return t;
}

inline SpinBosonParams params_for_row(const HamiltonianRow& row, const SpinBosonParams& base = {}) {
  SpinBosonParams p = base;
  p.epsilon = row.epsilon;
  p.omega_hbar = row.omega_hbar;
  p.lambda = row.lambda;
  return p;
}

/// sum_l e_l ln(e_l / t_l) with both vectors floored at clamp_eps. Weights are
/// the chip outputs e, as in the training objective; this is the reverse of
/// the textbook KL(t || e).
inline double kl_loss(std::span<const double> t, std::span<const double> e, double clamp_eps = 1e-12) {
  detail::require(t.size() == e.size(), "kl_loss: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    detail::require(t[i] >= 0.0 && e[i] >= 0.0, "kl_loss: negative probability");
    const double ec = std::max(e[i], clamp_eps);
    const double tc = std::max(t[i], clamp_eps);
    sum += ec * std::log(ec / tc);
  }
  return sum;
}

inline double kl_loss(const RVector& t, const RVector& e, double clamp_eps = 1e-12) {
  return kl_loss(std::span<const double>(t.data(), static_cast<std::size_t>(t.size())),
                 std::span<const double>(e.data(), static_cast<std::size_t>(e.size())), clamp_eps);
}

namespace detail {

// Input-major, then step, then output channel.
inline RVector flatten_conditionals(const ChipConfig& config, const UnitaryMatrix& u, int n_steps) {
  const int dim = config.dim;
  RVector e(static_cast<Eigen::Index>(dim) * dim * n_steps);
  Eigen::Index pos = 0;
  for (int k = 0; k < dim; ++k) {
    const auto cond = conditional_probabilities(run_loop(config, u, k, n_steps));
    for (const auto& v : cond) {
      e.segment(pos, dim) = v;
      pos += dim;
    }
  }
  return e;
}

}  // namespace detail

/// Flattened conditional output distributions for every basis input.
inline RVector forward_all_inputs(const MeshPlan& plan, const MeshNoise& noise, const ChipConfig& config, int n_steps) {
  detail::require(plan.dim == config.dim, "plan dimension does not match chip dimension");
  detail::require(n_steps >= 1, "n_steps must be >= 1");
  return detail::flatten_conditionals(config, mesh_forward(plan, noise), n_steps);
}

/// Splits a flattened vector back into per-step k x l matrices.
inline std::vector<PowerMatrix> unflatten(const RVector& flat, int dim, int n_steps) {
  detail::require(flat.size() == static_cast<Eigen::Index>(dim) * dim * n_steps, "flattened vector has wrong length");
  std::vector<PowerMatrix> mats;
  for (int n = 0; n < n_steps; ++n) mats.push_back({n + 1, RMatrix::Zero(dim, dim), Normalization::kRow});
  Eigen::Index pos = 0;
  for (int k = 0; k < dim; ++k) {
    for (int n = 0; n < n_steps; ++n) {
      mats[static_cast<std::size_t>(n)].entries.row(k) = flat.segment(pos, dim).transpose();
      pos += dim;
    }
  }
  return mats;
}

/// Lossless reference t: evolve_exact for every basis input, flattened like forward_all_inputs.
inline RVector theoretical_target(const SpinBosonParams& params, int n_steps) {
  const int dim = params.dim();
  RVector t(static_cast<Eigen::Index>(dim) * dim * n_steps);
  Eigen::Index pos = 0;
  for (int k = 0; k < dim; ++k) {
    for (const auto& v : evolve_exact(params, k, n_steps)) {
      t.segment(pos, dim) = v;
      pos += dim;
    }
  }
  return t;
}

struct TrainingResult {
  MeshPlan plan;
  std::vector<double> trace;  // loss before the first update, then after each iteration
  int iterations = 0;
  bool converged = false;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

namespace detail {

class CalibrationObjective {
 public:
  CalibrationObjective(const MeshPlan& plan, const MeshNoise& noise, const ChipConfig& config, int n_steps,
                       RVector target, double clamp_eps)
      : plan_(plan),
        imps_(draw_imperfections(noise, plan.cells.size())),
        config_(config),
        n_steps_(n_steps),
        target_(std::move(target)),
        clamp_eps_(clamp_eps) {}

  std::size_t size() const { return 2 * plan_.cells.size(); }

  std::vector<double> params() const {
    std::vector<double> x;
    x.reserve(size());
    for (const auto& c : plan_.cells) {
      x.push_back(c.theta);
      x.push_back(c.phi);
    }
    return x;
  }

  MeshPlan plan_at(std::span<const double> x) const {
    MeshPlan p = plan_;
    for (std::size_t i = 0; i < p.cells.size(); ++i) {
      p.cells[i].theta = x[2 * i];
      p.cells[i].phi = x[2 * i + 1];
    }
    return p;
  }

  double operator()(std::span<const double> x) const {
    const UnitaryMatrix u(realize(plan_at(x), imps_));
    return kl_loss(target_, flatten_conditionals(config_, u, n_steps_), clamp_eps_);
  }

  std::vector<double> gradient(std::span<const double> x, double eps) const {
    std::vector<double> probe(x.begin(), x.end());
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      probe[i] = x[i] + eps;
      const double up = (*this)(probe);
      probe[i] = x[i] - eps;
      const double down = (*this)(probe);
      probe[i] = x[i];
      g[i] = (up - down) / (2.0 * eps);
    }
    return g;
  }

 private:
  MeshPlan plan_;
  std::vector<CellImperfection> imps_;
  ChipConfig config_;
  int n_steps_;
  RVector target_;
  double clamp_eps_;
};

}  // namespace detail

/// Central finite-difference gradient of the calibration loss with respect to
/// (theta_0, phi_0, theta_1, phi_1, ...).
inline std::vector<double> loss_gradient(const MeshPlan& plan, const MeshNoise& noise, const RVector& target,
                                         const ChipConfig& config, int n_steps, double eps,
                                         double clamp_eps = 1e-12) {
  const detail::CalibrationObjective f(plan, noise, config, n_steps, target, clamp_eps);
  const auto x = f.params();
  return f.gradient(x, eps);
}

/// Gradient descent on the commanded (theta, phi) of every cell. The noise
/// realization stays fixed for the whole run; the best plan seen is returned.
inline TrainingResult train(const MeshPlan& plan0, const MeshNoise& noise, const RVector& target,
                            const TrainingConfig& tc, const ChipConfig& config = {}, int n_steps = 3) {
  tc.validate();
  plan0.validate();
  noise.validate();
  detail::require(plan0.dim == config.dim, "plan dimension does not match chip dimension");
  detail::require(target.size() == static_cast<Eigen::Index>(config.dim) * config.dim * n_steps,
                  "target length does not match forward_all_inputs output");

  const detail::CalibrationObjective f(plan0, noise, config, n_steps, target, tc.clamp_eps);
  std::vector<double> x = f.params();
  double loss = f(x);

  TrainingResult res;
  res.initial_loss = loss;
  res.trace.push_back(loss);
  std::vector<double> best = x;
  double best_loss = loss;

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kAdamEps = 1e-8;
  std::vector<double> m(x.size(), 0.0);
  std::vector<double> v(x.size(), 0.0);
  double sgd_rate = tc.learning_rate;

  while (best_loss > tc.tol && res.iterations < tc.max_iters) {
    const auto g = f.gradient(x, tc.grad_eps);
    ++res.iterations;
    if (tc.optimizer == Optimizer::kAdam) {
      const double t = static_cast<double>(res.iterations);
      const double c1 = 1.0 - std::pow(kBeta1, t);
      const double c2 = 1.0 - std::pow(kBeta2, t);
      for (std::size_t i = 0; i < x.size(); ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
        x[i] -= tc.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + kAdamEps);
      }
      loss = f(x);
    } else {
      // Halve the step until the loss does not increase.
      std::vector<double> trial(x.size());
      double trial_loss = loss;
      bool accepted = false;
      for (int halvings = 0; halvings < 40; ++halvings) {
        for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - sgd_rate * g[i];
        trial_loss = f(trial);
        if (trial_loss <= loss) {
          accepted = true;
          break;
        }
        sgd_rate *= 0.5;
      }
      if (accepted) {
        x = trial;
        loss = trial_loss;
      }
    }
    res.trace.push_back(loss);
    if (loss < best_loss) {
      best_loss = loss;
      best = x;
    }
  }

  res.plan = f.plan_at(best);
  res.final_loss = best_loss;
  res.converged = best_loss <= tc.tol;
  return res;
}

/// sqrt( sum (t - e)^2 / sum t^2 ) over one step's k x l matrices.
inline double error_metric(const RMatrix& t, const RMatrix& e) {
  detail::require(t.rows() == e.rows() && t.cols() == e.cols(), "error_metric: shape mismatch");
  const double denom = t.squaredNorm();
  detail::require(denom > 0.0, "error_metric: theoretical matrix is all zero");
  return std::sqrt((t - e).squaredNorm() / denom);
}

inline double error_metric(std::span<const PowerMatrix> t, std::span<const PowerMatrix> e, int n) {
  detail::require(n >= 1 && static_cast<std::size_t>(n) <= t.size() && static_cast<std::size_t>(n) <= e.size(),
                  "error_metric: step out of range");
  return error_metric(t[static_cast<std::size_t>(n - 1)].entries, e[static_cast<std::size_t>(n - 1)].entries);
}

enum class Method { kDecomposition, kTrained };

inline const char* method_name(Method m) { return m == Method::kDecomposition ? "decomposition" : "trained"; }

struct ErrorReport {
  std::vector<double> per_step;
  Method method = Method::kDecomposition;
  int params_id = 0;  // 1-based column of the parameter table
  int seed_index = 0;
};

struct RowOutcome {
  ErrorReport decomposition;
  ErrorReport trained;
  bool converged = true;
  int iterations = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

struct CompareResult {
  std::vector<RowOutcome> rows;  // ordered by (params_id, seed_index)

  int nonconverged() const {
    return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.converged; }));
  }
};

struct CompareOptions {
  SpinBosonParams base;  // n_boson, h_field and dt shared by every row
  ChipConfig chip;
  int n_steps = 3;
  int seeds = 1;
  int workers = 1;
};

/// Noise realization for (row, seed) derived from the base noise seed.
inline MeshNoise noise_for(const MeshNoise& base, int params_id, int seed_index) {
  MeshNoise n = base;
  n.seed = mix_seed(base.seed, static_cast<std::uint64_t>(params_id), static_cast<std::uint64_t>(seed_index));
  return n;
}

inline RowOutcome compare_row(const HamiltonianRow& row, int params_id, int seed_index, const MeshNoise& base_noise,
                              const TrainingConfig& tc, const CompareOptions& opt) {
  const SpinBosonParams params = params_for_row(row, opt.base);
  const MeshPlan plan = clements_decompose(step_unitary(params));
  const MeshNoise noise = noise_for(base_noise, params_id, seed_index);
  const RVector target = theoretical_target(params, opt.n_steps);
  const auto t_mats = unflatten(target, params.dim(), opt.n_steps);

  const auto errors_for = [&](const MeshPlan& p, Method method) {
    const auto e_mats = unflatten(forward_all_inputs(p, noise, opt.chip, opt.n_steps), params.dim(), opt.n_steps);
    ErrorReport r{{}, method, params_id, seed_index};
    for (int n = 1; n <= opt.n_steps; ++n) r.per_step.push_back(error_metric(t_mats, e_mats, n));
    return r;
  };

  RowOutcome out;
  out.decomposition = errors_for(plan, Method::kDecomposition);
  const TrainingResult tr = train(plan, noise, target, tc, opt.chip, opt.n_steps);
  out.trained = errors_for(tr.plan, Method::kTrained);
  out.converged = tr.converged;
  out.iterations = tr.iterations;
  out.initial_loss = tr.initial_loss;
  out.final_loss = tr.final_loss;
  return out;
}

/// Decomposition vs trained error for every (row, seed). Rows may be fanned
/// out to `workers` threads; results are stored in deterministic order.
inline CompareResult compare_methods(const ParamTable& table, const MeshNoise& noise, const TrainingConfig& tc,
                                     const CompareOptions& opt = {}) {
  table.validate();
  tc.validate();
  noise.validate();
  detail::require(opt.seeds >= 1, "seeds must be >= 1");
  detail::require(opt.n_steps >= 1, "n_steps must be >= 1");

  const std::size_t jobs = table.rows.size() * static_cast<std::size_t>(opt.seeds);
  CompareResult res;
  res.rows.resize(jobs);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const std::size_t row = j / static_cast<std::size_t>(opt.seeds);
      const int seed_index = static_cast<int>(j % static_cast<std::size_t>(opt.seeds));
      res.rows[j] = compare_row(table.rows[row], static_cast<int>(row) + 1, seed_index, noise, tc, opt);
    }
  };
  const int n_workers = std::clamp(opt.workers, 1, static_cast<int>(jobs));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  return res;
}

struct CompareSummary {
  int pairs = 0;
  int ties = 0;
  int trained_not_worse = 0;
  std::optional<double> win_rate;  // empty when every pair is a tie
  double median_decomposition = 0.0;
  double median_trained = 0.0;
  int nonconverged = 0;
};

inline double median(std::vector<double> v) {
  detail::require(!v.empty(), "median of empty sequence");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

/// Pairs where both errors are below tie_tol count as ties and are excluded
/// from the win rate.
inline CompareSummary summarize(const CompareResult& res, double tie_tol = 1e-8) {
  CompareSummary s;
  std::vector<double> dec;
  std::vector<double> trn;
  int decided = 0;
  int wins = 0;
  for (const auto& r : res.rows) {
    for (std::size_t n = 0; n < r.decomposition.per_step.size(); ++n) {
      const double d = r.decomposition.per_step[n];
      const double t = r.trained.per_step[n];
      dec.push_back(d);
      trn.push_back(t);
      ++s.pairs;
      if (t <= d) ++s.trained_not_worse;
      if (d < tie_tol && t < tie_tol) {
        ++s.ties;
      } else {
        ++decided;
        if (t <= d) ++wins;
      }
    }
  }
  if (decided > 0) s.win_rate = static_cast<double>(wins) / decided;
  if (!dec.empty()) {
    s.median_decomposition = median(dec);
    s.median_trained = median(trn);
  }
  s.nonconverged = res.nonconverged();
  return s;
}

}  // namespace loopqpc

#endif  // LOOPQPC_CALIBRATE_HPP
