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

#ifndef LOOPQPC_TOOLS_CLI_HPP
#define LOOPQPC_TOOLS_CLI_HPP

// Command-line front end. Exit codes: 0 success, 1 internal or numerical
// failure, 2 user-input error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "loopqpc/loopqpc.hpp"

namespace loopqpc::cli {

using nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

struct RunConfig {
  SpinBosonParams model;
  int initial_channel = 0;
  ChipConfig chip;
  std::string platform = "SiN";
  std::string platforms_file;  // empty: built-in defaults
  MeshNoise noise;
  TrainingConfig training;
  CountingConfig counting;
  int n_steps = 3;
  std::string output_dir = "out";

  std::vector<PlatformSpec> platforms() const {
    return platforms_file.empty() ? default_platforms() : io::parse_platforms_json(io::read_text(platforms_file));
  }

  void validate() const {
    model.validate();
    detail::require(initial_channel >= 0 && initial_channel < model.dim(), "initial_channel out of range");
    chip.validate();
    detail::require(chip.dim == model.dim(), "chip.dim must equal 2 * n_boson");
    noise.validate();
    training.validate();
    counting.validate();
    detail::require(n_steps >= 1, "n_steps must be >= 1");
    detail::require(!output_dir.empty(), "output_dir must be non-empty");
    const auto plats = platforms();
    find_platform(plats, platform);
  }
};

inline json to_json(const RunConfig& c) {
  return json{
      {"model",
       {{"epsilon", c.model.epsilon},
        {"omega_hbar", c.model.omega_hbar},
        {"lambda", c.model.lambda},
        {"h_field", c.model.h_field},
        {"n_boson", c.model.n_boson},
        {"dt", c.model.dt},
        {"initial_channel", c.initial_channel}}},
      {"chip",
       {{"dim", c.chip.dim},
        {"ratio_in", c.chip.ratio_in},
        {"ratio_out", c.chip.ratio_out},
        {"alpha_db_per_cm", c.chip.alpha_db_per_cm},
        {"chip_length_cm", c.chip.chip_length_cm},
        {"loop_length_cm", c.chip.loop_length_cm},
        {"others_loss_db", c.chip.others_loss_db},
        {"loop_delay_ps", c.chip.loop_delay_ps},
        {"rep_rate_mhz", c.chip.rep_rate_mhz},
        {"lossless", c.chip.lossless}}},
      {"platform", c.platform},
      {"platforms_file", c.platforms_file},
      {"noise",
       {{"sigma_theta", c.noise.sigma_theta},
        {"sigma_phi", c.noise.sigma_phi},
        {"sigma_split", c.noise.sigma_split},
        {"seed", c.noise.seed}}},
      {"training",
       {{"learning_rate", c.training.learning_rate},
        {"max_iters", c.training.max_iters},
        {"tol", c.training.tol},
        {"grad_eps", c.training.grad_eps},
        {"optimizer", c.training.optimizer == Optimizer::kAdam ? "adam" : "sgd"},
        {"clamp_eps", c.training.clamp_eps}}},
      {"counting",
       {{"pair_rate_hz", c.counting.pair_rate_hz},
        {"duration_s", c.counting.duration_s},
        {"jitter_ps", c.counting.jitter_ps},
        {"bin_ps", c.counting.bin_ps},
        {"background_rate_hz", c.counting.background_rate_hz},
        {"window_ps", c.counting.window_ps},
        {"seed", c.counting.seed}}},
      {"n_steps", c.n_steps},
      {"output_dir", c.output_dir},
  };
}

namespace detail {

template <typename T>
void take(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace detail

/// Missing keys keep their defaults.
inline RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    using detail::take;
    if (j.contains("model")) {
      const auto& m = j.at("model");
      take(m, "epsilon", c.model.epsilon);
      take(m, "omega_hbar", c.model.omega_hbar);
      take(m, "lambda", c.model.lambda);
      take(m, "h_field", c.model.h_field);
      take(m, "n_boson", c.model.n_boson);
      take(m, "dt", c.model.dt);
      take(m, "initial_channel", c.initial_channel);
    }
    if (j.contains("chip")) {
      const auto& m = j.at("chip");
      take(m, "dim", c.chip.dim);
      take(m, "ratio_in", c.chip.ratio_in);
      take(m, "ratio_out", c.chip.ratio_out);
      take(m, "alpha_db_per_cm", c.chip.alpha_db_per_cm);
      take(m, "chip_length_cm", c.chip.chip_length_cm);
      take(m, "loop_length_cm", c.chip.loop_length_cm);
      take(m, "others_loss_db", c.chip.others_loss_db);
      take(m, "loop_delay_ps", c.chip.loop_delay_ps);
      take(m, "rep_rate_mhz", c.chip.rep_rate_mhz);
      take(m, "lossless", c.chip.lossless);
    }
    take(j, "platform", c.platform);
    take(j, "platforms_file", c.platforms_file);
    if (j.contains("noise")) {
      const auto& m = j.at("noise");
      take(m, "sigma_theta", c.noise.sigma_theta);
      take(m, "sigma_phi", c.noise.sigma_phi);
      take(m, "sigma_split", c.noise.sigma_split);
      take(m, "seed", c.noise.seed);
    }
    if (j.contains("training")) {
      const auto& m = j.at("training");
      take(m, "learning_rate", c.training.learning_rate);
      take(m, "max_iters", c.training.max_iters);
      take(m, "tol", c.training.tol);
      take(m, "grad_eps", c.training.grad_eps);
      take(m, "clamp_eps", c.training.clamp_eps);
      if (m.contains("optimizer")) {
        const auto name = m.at("optimizer").get<std::string>();
        if (name == "adam") {
          c.training.optimizer = Optimizer::kAdam;
        } else if (name == "sgd") {
          c.training.optimizer = Optimizer::kSgd;
        } else {
          throw InputError("training.optimizer must be adam or sgd");
        }
      }
    }
    if (j.contains("counting")) {
      const auto& m = j.at("counting");
      take(m, "pair_rate_hz", c.counting.pair_rate_hz);
      take(m, "duration_s", c.counting.duration_s);
      take(m, "jitter_ps", c.counting.jitter_ps);
      take(m, "bin_ps", c.counting.bin_ps);
      take(m, "background_rate_hz", c.counting.background_rate_hz);
      take(m, "window_ps", c.counting.window_ps);
      take(m, "seed", c.counting.seed);
    }
    take(j, "n_steps", c.n_steps);
    take(j, "output_dir", c.output_dir);
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return c;
}

inline fs::path prepare_output(const RunConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  return dir;
}

inline void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

template <typename Writer>
void write_csv(const fs::path& path, Writer&& writer) {
  std::ostringstream os;
  writer(os);
  write_file(path, os.str());
}

inline UnitaryMatrix model_mesh(const RunConfig& cfg, bool identity_mesh) {
  if (identity_mesh) return UnitaryMatrix::identity(cfg.model.dim());
  // The chip runs the compiled plan, not the ideal matrix.
  return mesh_forward(clements_decompose(step_unitary(cfg.model)));
}

// ---- commands -------------------------------------------------------------

inline int cmd_simulate(const RunConfig& cfg, bool identity_mesh, std::ostream& log) {
  const auto dir = prepare_output(cfg);
  std::vector<RVector> theory;
  if (identity_mesh) {
    for (int n = 0; n < cfg.n_steps; ++n) theory.push_back(RVector::Unit(cfg.model.dim(), cfg.initial_channel));
  } else {
    theory = evolve_exact(cfg.model, cfg.initial_channel, cfg.n_steps);
  }
  const UnitaryMatrix mesh = model_mesh(cfg, identity_mesh);
  const StageRecord rec = run_loop(cfg.chip, mesh, cfg.initial_channel, cfg.n_steps);
  const auto chip = conditional_probabilities(rec);

  const auto run = sample_run(rec, cfg.counting, cfg.chip.loop_delay_ps);
  const auto gates = step_gates(cfg.n_steps, cfg.chip.loop_delay_ps, cfg.counting.jitter_ps, cfg.counting.bin_ps);
  const auto est = estimate_probabilities(run.histograms, gates, cfg.counting);

  write_csv(dir / "theory.csv", [&](std::ostream& os) { io::write_distributions_csv(os, theory); });
  write_csv(dir / "chip.csv", [&](std::ostream& os) { io::write_distributions_csv(os, chip); });
  write_csv(dir / "record.csv", [&](std::ostream& os) { io::write_stage_record_csv(os, rec); });
  write_csv(dir / "mc.csv", [&](std::ostream& os) { io::write_estimates_csv(os, est); });
  write_csv(dir / "histograms.csv", [&](std::ostream& os) { io::write_histograms_csv(os, run.histograms); });

  double worst = 0.0;
  for (std::size_t n = 0; n < chip.size(); ++n) worst = std::max(worst, (chip[n] - theory[n]).cwiseAbs().maxCoeff());
  log << "simulate: " << cfg.n_steps << " steps x " << cfg.model.dim() << " channels, max |chip - theory| = " << worst
      << "\n";
  for (std::size_t n = 0; n < est.low_statistics.size(); ++n) {
    if (est.low_statistics[n]) log << "simulate: step " << n + 1 << " is low-statistics (" << est.step_counts[n] << " counts)\n";
  }
  return kOk;
}

inline int cmd_decompose(const RunConfig& cfg, const std::string& unitary_file, std::ostream& log) {
  const UnitaryMatrix u = unitary_file.empty() ? step_unitary(cfg.model) : UnitaryMatrix(io::matrix_from_json(io::read_text(unitary_file)));
  const MeshPlan plan = clements_decompose(u);
  const double err = frobenius_distance(mesh_forward(plan).matrix(), u.matrix());
  const auto dir = prepare_output(cfg);
  write_file(dir / "plan.json", io::plan_to_json(plan));
  const json report{{"dim", plan.dim}, {"cells", plan.cells.size()}, {"frobenius_error", err}, {"ok", err <= 1e-8}};
  write_file(dir / "report.json", report.dump(2) + "\n");
  log << "decompose: " << plan.cells.size() << " cells, round-trip Frobenius error " << err << "\n";
  if (err > 1e-8) {
    log << "decompose: round-trip error exceeds 1e-8\n";
    return kFailure;
  }
  return kOk;
}

inline std::vector<PlatformSpec> select_platforms(const RunConfig& cfg, const std::vector<std::string>& names) {
  const auto all = cfg.platforms();
  if (names.empty()) return all;
  std::vector<PlatformSpec> out;
  for (const auto& n : names) out.push_back(find_platform(all, n));
  return out;
}

inline int cmd_losses(const RunConfig& cfg, const std::vector<std::string>& names, int max_loops, std::ostream& log) {
  const auto platforms = select_platforms(cfg, names);
  const SplitterRatios ratios = max_loops >= 2 ? optimal_splitters(max_loops) : SplitterRatios{};
  const auto table = platform_comparison(platforms, cfg.chip, ratios, max_loops);
  const auto dir = prepare_output(cfg);
  write_csv(dir / "losses.csv", [&](std::ostream& os) { io::write_loss_table_csv(os, table); });
  for (int n = 2; n <= max_loops; ++n) {
    const auto r = optimal_splitters(n);
    log << "optimal splitter n=" << n << ": loop ratio " << r.r_loop << " (" << n - 1 << "/" << n << "), end ratio "
        << r.r_end << "\n";
  }
  for (int n = 1; n <= max_loops; ++n) {
    const auto i = static_cast<std::size_t>(n - 1);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : table) best = std::min(best, b.per_step_db[i]);
    log << "lowest loss at n=" << n << ":";
    for (const auto& b : table) {
      if (b.per_step_db[i] <= best + 1e-12) log << ' ' << b.platform;
    }
    log << " (" << best << " dB)\n";
  }
  return kOk;
}

inline int cmd_scaling(const RunConfig& cfg, const std::vector<int>& modes, double cell_length_cm, std::ostream& log) {
  const auto platforms = cfg.platforms();
  const PlatformSpec& p = find_platform(platforms, cfg.platform);
  std::vector<double> xs;
  std::vector<double> ys;
  std::ostringstream os;
  os << "modes,loss_db\n";
  for (int m : modes) {
    const double l = mode_scaling_loss(m, p, cell_length_cm);
    xs.push_back(m);
    ys.push_back(l);
    os << m << ',' << io::fmt17(l) << '\n';
  }
  const auto dir = prepare_output(cfg);
  write_file(dir / "scaling.csv", os.str());
  if (xs.size() >= 2) {
    const auto fit = linear_fit(xs, ys);
    log << "scaling: slope " << fit.slope << " dB/mode, intercept " << fit.intercept << " dB, R^2 " << fit.r_squared
        << "\n";
  }
  return kOk;
}

inline int cmd_train(const RunConfig& cfg, bool zero_noise, std::ostream& log) {
  const MeshNoise noise = zero_noise ? MeshNoise::none() : cfg.noise;
  const MeshPlan plan0 = clements_decompose(step_unitary(cfg.model));
  const RVector target = theoretical_target(cfg.model, cfg.n_steps);
  ChipConfig chip = cfg.chip;
  const auto res = train(plan0, noise, target, cfg.training, chip, cfg.n_steps);

  const auto t_mats = unflatten(target, chip.dim, cfg.n_steps);
  const auto dec = unflatten(forward_all_inputs(plan0, noise, chip, cfg.n_steps), chip.dim, cfg.n_steps);
  const auto trn = unflatten(forward_all_inputs(res.plan, noise, chip, cfg.n_steps), chip.dim, cfg.n_steps);

  const auto dir = prepare_output(cfg);
  write_csv(dir / "trace.csv", [&](std::ostream& os) { io::write_trace_csv(os, res.trace); });
  write_file(dir / "plan_initial.json", io::plan_to_json(plan0));
  write_file(dir / "plan_trained.json", io::plan_to_json(res.plan));
  std::ostringstream os;
  os << "params_id,method,step,error\n";
  for (int n = 1; n <= cfg.n_steps; ++n) os << "0,decomposition," << n << ',' << io::fmt17(error_metric(t_mats, dec, n)) << '\n';
  for (int n = 1; n <= cfg.n_steps; ++n) os << "0,trained," << n << ',' << io::fmt17(error_metric(t_mats, trn, n)) << '\n';
  write_file(dir / "errors.csv", os.str());

  log << "train: " << res.iterations << " iterations, loss " << res.initial_loss << " -> " << res.final_loss
      << (res.converged ? "" : " (not converged)") << "\n";
  return kOk;
}

inline int cmd_compare(const RunConfig& cfg, const std::string& table_file, int seeds, int workers, bool zero_noise,
                       std::ostream& log) {
  const ParamTable table = table_file.empty() ? table_a1() : io::parse_param_table_csv(io::read_text(table_file));
  table.validate();
  CompareOptions opt;
  opt.base = cfg.model;
  opt.chip = cfg.chip;
  opt.n_steps = cfg.n_steps;
  opt.seeds = seeds;
  opt.workers = workers;
  const MeshNoise noise = zero_noise ? MeshNoise::none() : cfg.noise;
  const auto res = compare_methods(table, noise, cfg.training, opt);
  const auto s = summarize(res);

  const auto dir = prepare_output(cfg);
  write_csv(dir / "errors.csv", [&](std::ostream& os) { io::write_error_reports_csv(os, res); });
  std::ostringstream os;
  os << "pairs,trained_not_worse,ties,win_rate,median_decomposition,median_trained,nonconverged\n";
  os << s.pairs << ',' << s.trained_not_worse << ',' << s.ties << ','
     << (s.win_rate ? io::fmt17(*s.win_rate) : std::string("undefined")) << ',' << io::fmt17(s.median_decomposition)
     << ',' << io::fmt17(s.median_trained) << ',' << s.nonconverged << '\n';
  write_file(dir / "summary.csv", os.str());

  log << "compare: " << res.rows.size() << " runs, win-rate "
      << (s.win_rate ? std::to_string(*s.win_rate) : std::string("undefined (all ties)")) << ", median error "
      << s.median_decomposition << " (decomposition) vs " << s.median_trained << " (trained), " << s.nonconverged
      << " not converged\n";
  return kOk;
}

inline int cmd_counts(const RunConfig& cfg, bool identity_mesh, std::ostream& log) {
  const UnitaryMatrix mesh = model_mesh(cfg, identity_mesh);
  const StageRecord rec = run_loop(cfg.chip, mesh, cfg.initial_channel, cfg.n_steps);
  const auto run = sample_run(rec, cfg.counting, cfg.chip.loop_delay_ps);
  const auto gates = step_gates(cfg.n_steps, cfg.chip.loop_delay_ps, cfg.counting.jitter_ps, cfg.counting.bin_ps);
  const auto est = estimate_probabilities(run.histograms, gates, cfg.counting);

  const auto dir = prepare_output(cfg);
  write_csv(dir / "histograms.csv", [&](std::ostream& os) { io::write_histograms_csv(os, run.histograms); });
  write_csv(dir / "estimates.csv", [&](std::ostream& os) { io::write_estimates_csv(os, est); });

  log << "counts: " << run.emitted << " heralded photons, " << run.signal_drawn << " detected, "
      << run.background_drawn << " background\n";
  if (cfg.n_steps >= 2) {
    const auto pc = peak_separation_check(run.histograms, cfg.n_steps, cfg.chip.loop_delay_ps, cfg.counting.jitter_ps);
    log << "counts: peak centers";
    for (double c : pc.centers_ps) log << ' ' << c;
    log << " ps; separated=" << (pc.separated ? "yes" : "no") << ", margin " << pc.margin_ps << " ps\n";
  }
  return kOk;
}

// ---- entry point ----------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Loop photonic chip simulator and calibration toolkit", "loopqpc"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool dump_config = false;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Seed for noise and photon counting");
  app.add_option("--out", out_dir, "Output directory");
  app.add_flag("--dump-config", dump_config, "Print the resolved configuration and exit");

  // Model overrides shared by several commands.
  std::optional<double> eps, omega, lam, dt;
  std::optional<int> n_steps, initial;
  const auto add_model_flags = [&](CLI::App* sub) {
    sub->add_option("--epsilon", eps, "Transverse field (units of h)");
    sub->add_option("--omega", omega, "Oscillator energy hbar*omega (units of h)");
    sub->add_option("--lambda", lam, "Spin-oscillator coupling (units of h)");
    sub->add_option("--dt", dt, "Time step (units of hbar/h)");
    sub->add_option("--n-steps", n_steps, "Number of loop passes");
    sub->add_option("--initial", initial, "Input channel");
  };

  bool identity_mesh = false;
  bool zero_noise = false;
  std::string unitary_file;
  std::string table_file;
  std::vector<std::string> platform_names;
  int max_loops = 3;
  std::vector<int> modes{2, 4, 6, 8};
  double cell_length = 0.5;
  int seeds = 1;
  int workers = 1;

  auto* simulate = app.add_subcommand("simulate", "Theory, chip and Monte-Carlo distributions per time step");
  add_model_flags(simulate);
  simulate->add_flag("--identity-mesh", identity_mesh, "Program the mesh to the identity");

  auto* decompose = app.add_subcommand("decompose", "Compile a unitary into an MZI mesh plan");
  add_model_flags(decompose);
  decompose->add_option("--unitary", unitary_file, "JSON unitary {\"re\": [[...]], \"im\": [[...]]}")->check(CLI::ExistingFile);

  auto* losses = app.add_subcommand("losses", "Loss budget per platform and loop count");
  losses->add_option("--platform", platform_names, "Platform names to compare (default: all)")->delimiter(',');
  losses->add_option("--max-loops", max_loops, "Largest loop count")->check(CLI::PositiveNumber);

  auto* scaling = app.add_subcommand("scaling", "Single-pass loss versus mode count");
  scaling->add_option("--modes", modes, "Even mode counts")->delimiter(',');
  scaling->add_option("--cell-length", cell_length, "Cell length in cm");

  auto* train_cmd = app.add_subcommand("train", "Calibrate one mesh against the noisy hardware model");
  add_model_flags(train_cmd);
  train_cmd->add_flag("--zero-noise", zero_noise, "Ideal hardware");

  auto* compare = app.add_subcommand("compare", "Decomposition vs trained error over the parameter table");
  compare->add_option("--table", table_file, "CSV parameter table (default: bundled)")->check(CLI::ExistingFile);
  compare->add_option("--seeds", seeds, "Noise realizations per row")->check(CLI::PositiveNumber);
  compare->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  compare->add_flag("--zero-noise", zero_noise, "Ideal hardware");

  auto* counts = app.add_subcommand("counts", "Photon arrival histograms and probability estimates");
  add_model_flags(counts);
  counts->add_flag("--identity-mesh", identity_mesh, "Program the mesh to the identity");

  std::string platforms_file;
  for (auto* sub : {losses, scaling}) {
    sub->add_option("--platforms", platforms_file, "Platform JSON file")->check(CLI::ExistingFile);
  }
  scaling->add_option("--platform", platform_names, "Platform name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : config_from_json(io::parse_json(io::read_text(config_path), "config"));
    if (seed) {
      cfg.noise.seed = *seed;
      cfg.counting.seed = *seed;
    }
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (!platforms_file.empty()) cfg.platforms_file = platforms_file;
    if (eps) cfg.model.epsilon = *eps;
    if (omega) cfg.model.omega_hbar = *omega;
    if (lam) cfg.model.lambda = *lam;
    if (dt) cfg.model.dt = *dt;
    if (n_steps) cfg.n_steps = *n_steps;
    if (initial) cfg.initial_channel = *initial;
    if (scaling->parsed() && !platform_names.empty()) cfg.platform = platform_names.front();
    cfg.validate();

    if (dump_config) {
      out << to_json(cfg).dump(2) << "\n";
      return kOk;
    }
    if (simulate->parsed()) return cmd_simulate(cfg, identity_mesh, out);
    if (decompose->parsed()) return cmd_decompose(cfg, unitary_file, out);
    if (losses->parsed()) return cmd_losses(cfg, platform_names, max_loops, out);
    if (scaling->parsed()) return cmd_scaling(cfg, modes, cell_length, out);
    if (train_cmd->parsed()) return cmd_train(cfg, zero_noise, out);
    if (compare->parsed()) return cmd_compare(cfg, table_file, seeds, workers, zero_noise, out);
    if (counts->parsed()) return cmd_counts(cfg, identity_mesh, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace loopqpc::cli

#endif  // LOOPQPC_TOOLS_CLI_HPP
