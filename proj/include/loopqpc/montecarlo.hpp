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

#ifndef LOOPQPC_MONTECARLO_HPP
#define LOOPQPC_MONTECARLO_HPP

// Heralded single-photon counting on the loop chip. Arrival times are taken
// relative to the idler herald; a photon leaving after n passes arrives at
// (n - 1) * loop_delay plus Gaussian detector jitter.
//
// Photon emission is Poisson, so by thinning the counts for every
// (step, channel) outcome are independent Poisson variables. Each channel draws
// from its own sub-stream of the run seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "loopqpc/loopchip.hpp"
#include "loopqpc/types.hpp"

namespace loopqpc {

struct CountingConfig {
  double pair_rate_hz = 1e4;
  double duration_s = 10.0;
  double jitter_ps = 50.0;
  double bin_ps = 20.0;
  double background_rate_hz = 10.0;
  std::uint64_t seed = 0;
  // Herald-relative acquisition span; one pump period at 500 MHz.
  double window_ps = 2000.0;

  void validate() const {
    detail::require(pair_rate_hz >= 0.0 && background_rate_hz >= 0.0, "rates must be >= 0");
    detail::require(duration_s >= 0.0, "duration must be >= 0");
    detail::require(bin_ps > 0.0, "bin width must be > 0");
    detail::require(jitter_ps >= 0.0, "jitter must be >= 0");
    detail::require(window_ps > 0.0, "acquisition window must be > 0");
  }

  double expected_pairs() const { return pair_rate_hz * duration_s; }
  double expected_background() const { return background_rate_hz * duration_s; }
};

struct ArrivalHistogram {
  int channel = 0;
  std::vector<double> bin_edges_ps;  // counts.size() + 1 entries
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }
};

struct TimeWindow {
  double start_ps = 0.0;
  double end_ps = 0.0;

  double width() const { return end_ps - start_ps; }
  bool contains(double t) const { return t >= start_ps && t < end_ps; }
};

/// Histogram range: starts half a loop delay before the first peak and spans
/// the acquisition window or all n_steps peaks, whichever is longer, snapped
/// outward to whole bins.
inline TimeWindow histogram_window(int n_steps, double loop_delay_ps, double bin_ps, double window_ps) {
  detail::require(n_steps >= 1 && loop_delay_ps > 0.0 && bin_ps > 0.0, "invalid histogram window request");
  const double start = std::floor(-0.5 * loop_delay_ps / bin_ps) * bin_ps;
  const double span = std::max(window_ps, n_steps * loop_delay_ps);
  const double end = start + std::ceil(span / bin_ps - 1e-9) * bin_ps;
  return {start, end};
}

struct CountingRun {
  std::vector<ArrivalHistogram> histograms;
  TimeWindow window;
  std::uint64_t emitted = 0;      // heralded photons drawn, including lost ones
  std::uint64_t signal_drawn = 0;
  std::uint64_t background_drawn = 0;
};

inline CountingRun sample_run(const StageRecord& record, const CountingConfig& cfg, double loop_delay_ps) {
  cfg.validate();
  detail::require(record.n_steps() >= 1 && !record.probabilities.empty(), "stage record has no steps");
  detail::require(loop_delay_ps > 0.0, "loop delay must be > 0");
  const double mass = record.total_mass();
  detail::require(mass <= 1.0 + 1e-12, "stage record probability mass exceeds 1");
  for (const auto& p : record.probabilities) detail::require((p.array() >= 0.0).all(), "negative probability");

  const int dim = static_cast<int>(record.probabilities.front().size());
  const int n_steps = record.n_steps();
  const double mu = cfg.expected_pairs();

  CountingRun run;
  run.window = histogram_window(n_steps, loop_delay_ps, cfg.bin_ps, cfg.window_ps);
  const auto n_bins = static_cast<std::size_t>(std::llround(run.window.width() / cfg.bin_ps));
  std::vector<double> edges(n_bins + 1);
  for (std::size_t b = 0; b <= n_bins; ++b) edges[b] = run.window.start_ps + static_cast<double>(b) * cfg.bin_ps;

  const auto bin_of = [&](double t) -> std::ptrdiff_t {
    if (!run.window.contains(t)) return -1;
    const auto b = static_cast<std::ptrdiff_t>(std::floor((t - run.window.start_ps) / cfg.bin_ps));
    return std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(n_bins) - 1);
  };

  for (int l = 0; l < dim; ++l) {
    std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(l), 1));
    std::normal_distribution<double> jitter(0.0, 1.0);
    ArrivalHistogram h{l, edges, std::vector<std::uint64_t>(n_bins, 0)};
    for (int n = 0; n < n_steps; ++n) {
      const double p = record.probabilities[static_cast<std::size_t>(n)](l);
      if (mu * p <= 0.0) continue;
      std::poisson_distribution<std::uint64_t> draw(mu * p);
      const std::uint64_t k = draw(rng);
      run.signal_drawn += k;
      const double center = n * loop_delay_ps;
      for (std::uint64_t i = 0; i < k; ++i) {
        const double t = center + (cfg.jitter_ps > 0.0 ? cfg.jitter_ps * jitter(rng) : 0.0);
        if (const auto b = bin_of(t); b >= 0) ++h.counts[static_cast<std::size_t>(b)];
      }
    }
    if (cfg.expected_background() > 0.0) {
      std::poisson_distribution<std::uint64_t> draw(cfg.expected_background());
      std::uniform_real_distribution<double> when(run.window.start_ps, run.window.end_ps);
      const std::uint64_t k = draw(rng);
      run.background_drawn += k;
      for (std::uint64_t i = 0; i < k; ++i) {
        if (const auto b = bin_of(when(rng)); b >= 0) ++h.counts[static_cast<std::size_t>(b)];
      }
    }
    run.histograms.push_back(std::move(h));
  }

  std::uint64_t lost = 0;
  if (const double lost_mean = mu * std::max(0.0, 1.0 - mass); lost_mean > 0.0) {
    std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(dim), 2));
    lost = std::poisson_distribution<std::uint64_t>(lost_mean)(rng);
  }
  run.emitted = run.signal_drawn + lost;
  return run;
}

/// One gate per step, centred on the nominal arrival time. Half-width is three
/// jitter sigmas (at least one bin), rounded up to whole bins.
inline std::vector<TimeWindow> step_gates(int n_steps, double loop_delay_ps, double jitter_ps, double bin_ps) {
  detail::require(n_steps >= 1 && loop_delay_ps > 0.0 && bin_ps > 0.0 && jitter_ps >= 0.0, "invalid gate request");
  const double half = std::max(1.0, std::ceil(3.0 * jitter_ps / bin_ps)) * bin_ps;
  detail::require(2.0 * half <= loop_delay_ps, "time gates overlap: loop delay too short for the detector jitter");
  std::vector<TimeWindow> gates;
  for (int n = 0; n < n_steps; ++n) gates.push_back({n * loop_delay_ps - half, n * loop_delay_ps + half});
  return gates;
}

struct ProbabilityEstimates {
  RMatrix p_hat;   // steps x channels
  RMatrix std_error;  // binomial standard error sqrt(p (1 - p) / N_step)
  std::vector<double> step_counts;  // background-subtracted gated counts
  std::vector<bool> low_statistics;

  static constexpr double kLowStatisticsCount = 100.0;

  bool any_low_statistics() const {
    return std::any_of(low_statistics.begin(), low_statistics.end(), [](bool b) { return b; });
  }
};

/// Row-normalized estimates from gated counts (steps x channels) with the
/// expected background per gate removed and floored at zero.
inline ProbabilityEstimates estimate_from_gated(const RMatrix& gross, const std::vector<double>& background_per_gate) {
  detail::require(static_cast<std::size_t>(gross.rows()) == background_per_gate.size(),
                  "one background expectation per gate required");
  ProbabilityEstimates est;
  est.p_hat = RMatrix::Zero(gross.rows(), gross.cols());
  est.std_error = RMatrix::Zero(gross.rows(), gross.cols());
  for (Eigen::Index n = 0; n < gross.rows(); ++n) {
    const RVector net = (gross.row(n).transpose().array() - background_per_gate[static_cast<std::size_t>(n)])
                            .max(0.0)
                            .matrix();
    const double total = net.sum();
    est.step_counts.push_back(total);
    est.low_statistics.push_back(total < ProbabilityEstimates::kLowStatisticsCount);
    if (total <= 0.0) continue;
    for (Eigen::Index l = 0; l < gross.cols(); ++l) {
      const double p = net(l) / total;
      est.p_hat(n, l) = p;
      est.std_error(n, l) = std::sqrt(p * (1.0 - p) / total);
    }
  }
  return est;
}

inline RMatrix gate_counts(const std::vector<ArrivalHistogram>& histograms, const std::vector<TimeWindow>& gates) {
  RMatrix gross = RMatrix::Zero(static_cast<Eigen::Index>(gates.size()), static_cast<Eigen::Index>(histograms.size()));
  for (std::size_t l = 0; l < histograms.size(); ++l) {
    const auto& h = histograms[l];
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      const double mid = 0.5 * (h.bin_edges_ps[b] + h.bin_edges_ps[b + 1]);
      for (std::size_t n = 0; n < gates.size(); ++n) {
        if (gates[n].contains(mid)) gross(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(l)) += static_cast<double>(h.counts[b]);
      }
    }
  }
  return gross;
}

inline ProbabilityEstimates estimate_probabilities(const std::vector<ArrivalHistogram>& histograms,
                                                   const std::vector<TimeWindow>& gates, const CountingConfig& cfg) {
  detail::require(!histograms.empty() && !gates.empty(), "need histograms and gates");
  for (std::size_t i = 0; i + 1 < gates.size(); ++i) {
    detail::require(gates[i].end_ps <= gates[i + 1].start_ps, "time gates must be ordered and non-overlapping");
  }
  for (const auto& g : gates) detail::require(g.width() >= 6.0 * cfg.jitter_ps, "time gate narrower than 6 jitter sigmas");
  const auto& edges = histograms.front().bin_edges_ps;
  const double span = edges.back() - edges.front();
  std::vector<double> bg;
  for (const auto& g : gates) bg.push_back(cfg.expected_background() * g.width() / span);
  return estimate_from_gated(gate_counts(histograms, gates), bg);
}

/// Noise-free counterpart of sample_run + estimate_probabilities: gated
/// counts are replaced by their expectations with no jitter spill-over.
inline ProbabilityEstimates expected_estimates(const StageRecord& record, const CountingConfig& cfg,
                                               const std::vector<TimeWindow>& gates, const TimeWindow& window) {
  detail::require(gates.size() == record.probabilities.size(), "one gate per recorded step required");
  const int dim = static_cast<int>(record.probabilities.front().size());
  RMatrix gross(static_cast<Eigen::Index>(gates.size()), dim);
  std::vector<double> bg;
  for (std::size_t n = 0; n < gates.size(); ++n) {
    const double b = cfg.expected_background() * gates[n].width() / window.width();
    bg.push_back(b);
    gross.row(static_cast<Eigen::Index>(n)) =
        (cfg.expected_pairs() * record.probabilities[n].array() + b).matrix().transpose();
  }
  return estimate_from_gated(gross, bg);
}

struct PeakCheck {
  bool separated = false;
  double margin_ps = 0.0;  // min separation minus 6 jitter sigmas
  double min_separation_ps = 0.0;
  std::vector<double> centers_ps;
};

/// Separation test on nominal peak positions.
inline PeakCheck peak_separation_check(double loop_delay_ps, double jitter_ps) {
  PeakCheck c;
  c.min_separation_ps = loop_delay_ps;
  c.margin_ps = loop_delay_ps - 6.0 * jitter_ps;
  c.separated = c.margin_ps >= 0.0;
  c.centers_ps = {0.0, loop_delay_ps};
  return c;
}

/// Count-weighted centroid of each peak, summed over channels, inside a gate
/// of +/- half a loop delay around the nominal arrival time.
inline std::vector<double> peak_centers(const std::vector<ArrivalHistogram>& histograms, int n_steps,
                                        double loop_delay_ps) {
  std::vector<double> num(static_cast<std::size_t>(n_steps), 0.0);
  std::vector<double> den(static_cast<std::size_t>(n_steps), 0.0);
  for (const auto& h : histograms) {
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      const double mid = 0.5 * (h.bin_edges_ps[b] + h.bin_edges_ps[b + 1]);
      const long n = std::lround(mid / loop_delay_ps);
      if (n < 0 || n >= n_steps) continue;
      num[static_cast<std::size_t>(n)] += mid * static_cast<double>(h.counts[b]);
      den[static_cast<std::size_t>(n)] += static_cast<double>(h.counts[b]);
    }
  }
  std::vector<double> centers;
  for (int n = 0; n < n_steps; ++n) {
    const auto i = static_cast<std::size_t>(n);
    centers.push_back(den[i] > 0.0 ? num[i] / den[i] : n * loop_delay_ps);
  }
  return centers;
}

/// Separation test on measured peak centroids.
inline PeakCheck peak_separation_check(const std::vector<ArrivalHistogram>& histograms, int n_steps,
                                       double loop_delay_ps, double jitter_ps) {
  detail::require(n_steps >= 2, "peak separation needs at least two steps");
  PeakCheck c;
  c.centers_ps = peak_centers(histograms, n_steps, loop_delay_ps);
  c.min_separation_ps = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < c.centers_ps.size(); ++i) {
    c.min_separation_ps = std::min(c.min_separation_ps, c.centers_ps[i + 1] - c.centers_ps[i]);
  }
  c.margin_ps = c.min_separation_ps - 6.0 * jitter_ps;
  c.separated = c.margin_ps >= 0.0;
  return c;
}

}  // namespace loopqpc

#endif  // LOOPQPC_MONTECARLO_HPP
