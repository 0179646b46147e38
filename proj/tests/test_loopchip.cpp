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

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "loopqpc/loopchip.hpp"
#include "loopqpc/losses.hpp"
#include "loopqpc/mesh.hpp"
#include "loopqpc/model.hpp"
#include "support/oracles.hpp"

using namespace loopqpc;
using Catch::Approx;

namespace {

ChipConfig lossless(double r_in, double r_out) {
  ChipConfig c;
  c.lossless = true;
  c.ratio_in = r_in;
  c.ratio_out = r_out;
  return c;
}

}  // namespace

TEST_CASE("identity mesh loop powers", "[loopchip]") {
  const auto chip = lossless(2.0 / 3.0, 2.0 / 3.0);
  for (int k = 0; k < 6; ++k) {
    const auto rec = run_loop(chip, UnitaryMatrix::identity(6), k, 3);
    REQUIRE(rec.n_steps() == 3);
    const double want[] = {4.0 / 9.0, 4.0 / 81.0, 4.0 / 729.0};
    for (int n = 0; n < 3; ++n) {
      CHECK(rec.probabilities[n](k) == Approx(want[n]).epsilon(1e-14));
      CHECK(rec.probabilities[n].sum() == Approx(want[n]).epsilon(1e-14));
      CHECK(rec.probabilities[n](k) == Approx(oracle::identity_loop_power(2.0 / 3.0, 2.0 / 3.0, n + 1)).epsilon(1e-14));
    }
    for (const auto& p : conditional_probabilities(rec)) CHECK(p(k) == 1.0);
  }
}

TEST_CASE("full transmission limit", "[loopchip]") {
  std::mt19937_64 rng(1);
  const CMatrix u = oracle::haar_unitary(6, rng);
  const RVector single = u.col(2).cwiseAbs2();
  double prev = 1.0;
  for (double r : {0.9, 0.99, 0.999, 0.999999}) {
    const auto rec = run_loop(lossless(r, r), UnitaryMatrix(u), 2, 1);
    const double gap = (rec.probabilities[0] - single).cwiseAbs().maxCoeff();
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev < 1e-5);
}

TEST_CASE("stage record bookkeeping", "[loopchip]") {
  std::mt19937_64 rng(2);
  const UnitaryMatrix u(oracle::haar_unitary(6, rng));
  ChipConfig chip;
  const auto rec = run_loop(chip, u, 0, 5);
  CHECK(rec.x == CVector::Unit(6, 0));
  CHECK(rec.intermediates.size() == 5);
  CHECK(rec.outputs.size() == 5);
  CHECK(rec.total_mass() <= 1.0 + 1e-12);
  for (int n = 0; n < 5; ++n) {
    CHECK((rec.outputs[n].cwiseAbs2() - rec.probabilities[n]).cwiseAbs().maxCoeff() == 0.0);
  }
  // I_1 = chip * U * sqrt(r_in) X
  const CVector i1 = chip.chip_amplitude() * (u.matrix() * (std::sqrt(chip.ratio_in) * rec.x));
  CHECK((rec.intermediates[0] - i1).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("passive optics never amplify", "[loopchip][property]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> r(0.01, 0.99);
  for (int trial = 0; trial < 200; ++trial) {
    ChipConfig chip;
    chip.ratio_in = r(rng);
    chip.ratio_out = r(rng);
    chip.lossless = trial % 2 == 0;
    const auto rec = run_loop(chip, UnitaryMatrix(oracle::haar_unitary(6, rng)), trial % 6, 6);
    CHECK(rec.total_mass() <= 1.0 + 1e-12);
    for (int n = 1; n < 6; ++n) CHECK(rec.probabilities[n].sum() < rec.probabilities[n - 1].sum());
  }
}

TEST_CASE("uniform loss cancels in conditional distributions", "[loopchip][property]") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const UnitaryMatrix u(oracle::haar_unitary(6, rng));
    const int k = trial % 6;
    const auto ref = conditional_probabilities(run_loop(lossless(0.5, 0.5), u, k, 4));
    CVector psi = CVector::Unit(6, k);
    for (int n = 0; n < 4; ++n) {
      psi = u.matrix() * psi;
      CHECK((ref[n] - RVector(psi.cwiseAbs2())).cwiseAbs().maxCoeff() < 1e-9);
    }
    for (double alpha : {0.0, 0.6, 3.0}) {
      for (auto [ri, ro] : {std::pair{0.5, 0.5}, std::pair{2.0 / 3.0, 1.0 / 3.0}, std::pair{0.2, 0.9}}) {
        ChipConfig chip;
        chip.alpha_db_per_cm = alpha;
        chip.others_loss_db = 7.5;
        chip.ratio_in = ri;
        chip.ratio_out = ro;
        const auto got = conditional_probabilities(run_loop(chip, u, k, 4));
        for (int n = 0; n < 4; ++n) CHECK((got[n] - ref[n]).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("chip reproduces the stepped evolution", "[loopchip]") {
  SpinBosonParams second;
  second.epsilon = 0.5;
  second.omega_hbar = 1.2;
  second.lambda = 0.8;
  for (const auto& p : {SpinBosonParams{}, second}) {
    const auto mesh = mesh_forward(clements_decompose(step_unitary(p)));
    const auto got = conditional_probabilities(run_loop(ChipConfig{}, mesh, 0, 3));
    const auto want = oracle::evolve(oracle::hamiltonian(p.epsilon, p.omega_hbar, p.lambda, 1.0, 3), 1.0, 0, 3);
    for (int n = 0; n < 3; ++n) {
      CHECK(got[n].sum() == Approx(1.0).margin(1e-10));
      CHECK((got[n] - want[n]).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("power matrices", "[loopchip]") {
  ChipConfig chip;
  for (const auto& m : power_matrices(chip, UnitaryMatrix::identity(6), 3, Normalization::kRow)) {
    CHECK((m.entries - RMatrix::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
  }

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix u = oracle::haar_unitary(6, rng);
    chip.ratio_in = 0.1 + 0.08 * trial;
    const auto step1 = power_matrix(chip, UnitaryMatrix(u), 1, Normalization::kRow);
    CHECK(step1.step == 1);
    for (int k = 0; k < 6; ++k) {
      for (int l = 0; l < 6; ++l) CHECK(std::abs(step1.entries(k, l) - std::norm(u(l, k))) < 1e-12);
    }
    CHECK((step1.entries.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
    CHECK((step1.entries.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);

    const auto raw = power_matrices(chip, UnitaryMatrix(u), 3, Normalization::kRaw);
    for (const auto& m : raw) {
      CHECK(m.normalization == Normalization::kRaw);
      CHECK(m.entries.minCoeff() >= 0.0);
      CHECK(m.entries.rowwise().sum().maxCoeff() < 1.0);
    }
  }

  const SpinBosonParams p;
  const auto mats = power_matrices(ChipConfig{}, mesh_forward(clements_decompose(step_unitary(p))), 3,
                                   Normalization::kRow);
  const CMatrix h = oracle::hamiltonian(1.0, 1.0, 1.0, 1.0, 3);
  for (int k = 0; k < 6; ++k) {
    const auto want = oracle::evolve(h, 1.0, k, 3);
    for (int n = 0; n < 3; ++n) CHECK((mats[n].entries.row(k).transpose() - want[n]).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("lost mass matches the loss budget", "[loopchip][losses]") {
  const PlatformSpec sin_only{"SiN", 0.6, 0.0, 0.0};
  for (auto [ri, ro] : {std::pair{1.0 / 3.0, 1.0 / 3.0}, std::pair{2.0 / 3.0, 1.0 / 3.0}, std::pair{0.5, 0.25}}) {
    ChipConfig chip;
    chip.ratio_in = ri;
    chip.ratio_out = ro;
    const auto rec = run_loop(chip, UnitaryMatrix::identity(6), 0, 4);
    for (int n = 1; n <= 4; ++n) {
      CHECK(total_loss_db(sin_only, chip, n) == Approx(fraction_to_db(rec.probabilities[n - 1].sum())).epsilon(1e-12));
    }
  }
}

TEST_CASE("chip validation", "[loopchip]") {
  ChipConfig chip;
  CHECK_THROWS_AS(run_loop(chip, UnitaryMatrix::identity(4), 0, 1), InputError);
  CHECK_THROWS_AS(run_loop(chip, UnitaryMatrix::identity(6), 6, 1), InputError);
  CHECK_THROWS_AS(run_loop(chip, UnitaryMatrix::identity(6), 0, 0), InputError);
  chip.loop_length_cm = 3.0;
  CHECK_THROWS_AS(chip.validate(), InputError);
  chip = {};
  chip.ratio_in = 1.0;
  CHECK_THROWS_AS(chip.validate(), InputError);
  chip = {};
  chip.ratio_out = 0.0;
  CHECK_THROWS_AS(chip.validate(), InputError);
  CHECK(ChipConfig{}.pump_period_ps() == 2000.0);
}

TEST_CASE("degenerate step", "[loopchip]") {
  StageRecord rec;
  rec.probabilities.push_back(RVector::Zero(3));
  CHECK_THROWS_AS(conditional_probabilities(rec), NumericalError);
}
