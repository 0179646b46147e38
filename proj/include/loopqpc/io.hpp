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

#ifndef LOOPQPC_IO_HPP
#define LOOPQPC_IO_HPP

// File formats: mesh plans and unitaries as JSON, tables and traces as CSV.
// Floating-point values are written with 17 significant digits so every
// double round-trips exactly.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "loopqpc/calibrate.hpp"
#include "loopqpc/loopchip.hpp"
#include "loopqpc/losses.hpp"
#include "loopqpc/mesh.hpp"
#include "loopqpc/montecarlo.hpp"
#include "loopqpc/types.hpp"

namespace loopqpc::io {

using nlohmann::json;

inline std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(what + ": malformed JSON: " + e.what());
  }
}

// ---- mesh plans -----------------------------------------------------------

inline std::string plan_to_json(const MeshPlan& plan) {
  std::ostringstream os;
  os << "{\n  \"dim\": " << plan.dim << ",\n  \"cells\": [";
  for (std::size_t i = 0; i < plan.cells.size(); ++i) {
    const auto& c = plan.cells[i];
    os << (i == 0 ? "\n" : ",\n") << "    {\"lo\": " << c.mode_lo << ", \"hi\": " << c.mode_hi
       << ", \"theta\": " << fmt17(c.theta) << ", \"phi\": " << fmt17(c.phi) << ", \"column\": " << c.column << "}";
  }
  os << (plan.cells.empty() ? "" : "\n  ") << "],\n  \"output_phases\": [";
  for (std::size_t i = 0; i < plan.output_phases.size(); ++i) {
    os << (i == 0 ? "" : ", ") << fmt17(plan.output_phases[i]);
  }
  os << "]\n}\n";
  return os.str();
}

inline MeshPlan plan_from_json(const std::string& text) {
  const json j = parse_json(text, "mesh plan");
  MeshPlan plan;
  try {
    plan.dim = j.at("dim").get<int>();
    for (const auto& c : j.at("cells")) {
      plan.cells.push_back({c.at("lo").get<int>(), c.at("hi").get<int>(), c.at("theta").get<double>(),
                            c.at("phi").get<double>(), c.value("column", 0)});
    }
    plan.output_phases = j.at("output_phases").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw InputError(std::string("mesh plan: ") + e.what());
  }
  plan.validate();
  return plan;
}

// ---- unitaries: {"re": [[...]], "im": [[...]]} ----------------------------

inline std::string matrix_to_json(const CMatrix& m) {
  std::ostringstream os;
  const auto emit = [&](auto part) {
    os << "[";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      os << (r == 0 ? "" : ", ") << "[";
      for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c == 0 ? "" : ", ") << fmt17(part(m(r, c)));
      os << "]";
    }
    os << "]";
  };
  os << "{\"dim\": " << m.rows() << ", \"re\": ";
  emit([](Complex z) { return z.real(); });
  os << ", \"im\": ";
  emit([](Complex z) { return z.imag(); });
  os << "}\n";
  return os.str();
}

/// Parses a square complex matrix. Unitarity is the caller's concern.
inline CMatrix matrix_from_json(const std::string& text) {
  const json j = parse_json(text, "unitary");
  try {
    const auto re = j.at("re").get<std::vector<std::vector<double>>>();
    const auto im = j.contains("im") ? j.at("im").get<std::vector<std::vector<double>>>()
                                     : std::vector<std::vector<double>>(re.size(), std::vector<double>(re.size(), 0.0));
    const auto n = re.size();
    detail::require(n > 0 && im.size() == n, "unitary: re/im must be non-empty square arrays of equal size");
    CMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
      detail::require(re[r].size() == n && im[r].size() == n, "unitary: matrix must be square");
      for (std::size_t c = 0; c < n; ++c) {
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = {re[r][c], im[r][c]};
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("unitary: ") + e.what());
  }
}

// ---- CSV writers ----------------------------------------------------------

inline void write_stage_record_csv(std::ostream& os, const StageRecord& rec) {
  os << "step,channel,re,im,prob\n";
  for (std::size_t n = 0; n < rec.outputs.size(); ++n) {
    for (Eigen::Index l = 0; l < rec.outputs[n].size(); ++l) {
      const Complex y = rec.outputs[n](l);
      os << n + 1 << ',' << l << ',' << fmt17(y.real()) << ',' << fmt17(y.imag()) << ','
         << fmt17(rec.probabilities[n](l)) << '\n';
    }
  }
}

inline void write_power_matrices_csv(std::ostream& os, const std::vector<PowerMatrix>& mats) {
  os << "step,k,l,value\n";
  for (const auto& m : mats) {
    for (Eigen::Index k = 0; k < m.entries.rows(); ++k) {
      for (Eigen::Index l = 0; l < m.entries.cols(); ++l) os << m.step << ',' << k << ',' << l << ',' << fmt17(m.entries(k, l)) << '\n';
    }
  }
}

/// Per-step distributions as step,channel,prob.
inline void write_distributions_csv(std::ostream& os, const std::vector<RVector>& dists) {
  os << "step,channel,prob\n";
  for (std::size_t n = 0; n < dists.size(); ++n) {
    for (Eigen::Index l = 0; l < dists[n].size(); ++l) os << n + 1 << ',' << l << ',' << fmt17(dists[n](l)) << '\n';
  }
}

inline void write_loss_table_csv(std::ostream& os, const std::vector<LossBudget>& table) {
  os << "platform,n,loss_db\n";
  for (const auto& b : table) {
    for (std::size_t n = 0; n < b.per_step_db.size(); ++n) os << b.platform << ',' << n + 1 << ',' << fmt17(b.per_step_db[n]) << '\n';
  }
}

inline void write_histograms_csv(std::ostream& os, const std::vector<ArrivalHistogram>& hists) {
  os << "channel,bin_start_ps,count\n";
  for (const auto& h : hists) {
    for (std::size_t b = 0; b < h.counts.size(); ++b) os << h.channel << ',' << fmt17(h.bin_edges_ps[b]) << ',' << h.counts[b] << '\n';
  }
}

inline void write_estimates_csv(std::ostream& os, const ProbabilityEstimates& est) {
  os << "step,channel,p_hat,stderr\n";
  for (Eigen::Index n = 0; n < est.p_hat.rows(); ++n) {
    for (Eigen::Index l = 0; l < est.p_hat.cols(); ++l) {
      os << n + 1 << ',' << l << ',' << fmt17(est.p_hat(n, l)) << ',' << fmt17(est.std_error(n, l)) << '\n';
    }
  }
}

inline void write_error_reports_csv(std::ostream& os, const CompareResult& res) {
  os << "params_id,method,step,error\n";
  for (const auto& r : res.rows) {
    for (const ErrorReport* rep : {&r.decomposition, &r.trained}) {
      for (std::size_t n = 0; n < rep->per_step.size(); ++n) {
        os << rep->params_id << ',' << method_name(rep->method) << ',' << n + 1 << ',' << fmt17(rep->per_step[n]) << '\n';
      }
    }
  }
}

inline void write_trace_csv(std::ostream& os, const std::vector<double>& trace) {
  os << "iter,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) os << i << ',' << fmt17(trace[i]) << '\n';
}

// ---- CSV / JSON readers ---------------------------------------------------

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

/// Reads epsilon,omega_hbar,lambda rows (header required). Row count is not checked here.
inline ParamTable parse_param_table_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ParamTable t;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (header) {
      detail::require(f.size() == 3 && f[0] == "epsilon" && f[1] == "omega_hbar" && f[2] == "lambda",
                      "parameter table header must be epsilon,omega_hbar,lambda");
      header = false;
      continue;
    }
    detail::require(f.size() == 3, "parameter table row must have 3 fields: " + line);
    try {
      t.rows.push_back({std::stod(f[0]), std::stod(f[1]), std::stod(f[2])});
    } catch (const std::exception&) {
      throw InputError("parameter table: non-numeric field in: " + line);
    }
  }
  return t;
}

inline std::string param_table_to_csv(const ParamTable& t) {
  std::ostringstream os;
  os << "epsilon,omega_hbar,lambda\n";
  for (const auto& r : t.rows) os << fmt17(r.epsilon) << ',' << fmt17(r.omega_hbar) << ',' << fmt17(r.lambda) << '\n';
  return os.str();
}

inline json platform_to_json(const PlatformSpec& p) {
  return json{{"name", p.name},
           {"alpha_db_per_cm", p.alpha_db_per_cm},
           {"mzi_extra_db", p.mzi_extra_db},
           {"offchip_per_loop_db", p.offchip_per_loop_db}};
}

inline PlatformSpec platform_from_json(const json& j) {
  PlatformSpec p;
  p.name = j.at("name").get<std::string>();
  p.alpha_db_per_cm = j.at("alpha_db_per_cm").get<double>();
  p.mzi_extra_db = j.value("mzi_extra_db", 0.0);
  p.offchip_per_loop_db = j.value("offchip_per_loop_db", 0.0);
  return p;
}

/// {"platforms": [{"name": ..., "alpha_db_per_cm": ..., ...}, ...]}
inline std::vector<PlatformSpec> parse_platforms_json(const std::string& text) {
  const json j = parse_json(text, "platforms");
  std::vector<PlatformSpec> out;
  try {
    for (const auto& item : j.at("platforms")) out.push_back(platform_from_json(item));
  } catch (const json::exception& e) {
    throw InputError(std::string("platforms: ") + e.what());
  }
  detail::require(!out.empty(), "platforms: list is empty");
  for (const auto& p : out) p.validate();
  return out;
}

inline std::string platforms_to_json(const std::vector<PlatformSpec>& platforms) {
  json list = json::array();
  for (const auto& p : platforms) list.push_back(platform_to_json(p));
  return json{{"platforms", list}}.dump(2) + "\n";
}

}  // namespace loopqpc::io

#endif  // LOOPQPC_IO_HPP
