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

#include "loopqpc/mesh.hpp"
#include "loopqpc/model.hpp"
#include "support/oracles.hpp"

using namespace loopqpc;

namespace {

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

// Cell-by-cell product written independently of realize().
CMatrix multiply_out(const MeshPlan& plan) {
  CMatrix m = CMatrix::Identity(plan.dim, plan.dim);
  for (const auto& c : plan.cells) {
    CMatrix t = CMatrix::Identity(plan.dim, plan.dim);
    const Complex e = std::polar(1.0, c.phi);
    t(c.mode_lo, c.mode_lo) = e * std::cos(c.theta);
    t(c.mode_lo, c.mode_hi) = -std::sin(c.theta);
    t(c.mode_hi, c.mode_lo) = e * std::sin(c.theta);
    t(c.mode_hi, c.mode_hi) = std::cos(c.theta);
    m = t * m;
  }
  for (int k = 0; k < plan.dim; ++k) m.row(k) *= std::polar(1.0, plan.output_phases[static_cast<std::size_t>(k)]);
  return m;
}

}  // namespace

TEST_CASE("mzi transfer matrix", "[mesh]") {
  CHECK(max_abs(mzi_transfer(0.0, 0.0) - Matrix2c::Identity()) == 0.0);
  Matrix2c cross;
  cross << 0.0, -1.0, 1.0, 0.0;
  CHECK(max_abs(mzi_transfer(kPi / 2, 0.0) - cross) < 1e-16);
  const double r = 1.0 / std::sqrt(2.0);
  Matrix2c want;
  want << Complex(0.0, r), -r, Complex(0.0, r), r;
  CHECK(max_abs(mzi_transfer(kPi / 4, kPi / 2) - want) < 1e-15);
}

TEST_CASE("two-coupler mzi reduces to the ideal cell", "[mesh]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> a(-4.0, 4.0);
  for (int i = 0; i < 100; ++i) {
    const double th = a(rng);
    const double ph = a(rng);
    CHECK(max_abs(mzi_physical(th, ph, 0.5, 0.5) - mzi_transfer(th, ph)) < 1e-14);
    const Matrix2c skewed = mzi_physical(th, ph, 0.47, 0.52);
    CHECK(max_abs(skewed.adjoint() * skewed - Matrix2c::Identity()) < 1e-14);
  }
}

TEST_CASE("embedding a cell", "[mesh]") {
  const MZICell c01{0, 1, 0.4, 1.1, 0};
  CHECK(max_abs(embed_cell(c01, 2).matrix() - mzi_transfer(0.4, 1.1)) == 0.0);
  CHECK(max_abs(embed_cell({4, 5, 0.0, 0.0, 0}, 6).matrix() - CMatrix::Identity(6, 6)) == 0.0);

  const auto m = embed_cell({2, 3, kPi / 3, kPi / 5, 0}, 6).matrix();
  CHECK(unitarity_defect(m) < 1e-15);
  for (int k : {0, 1, 4, 5}) {
    CMatrix unit = CMatrix::Zero(6, 1);
    unit(k, 0) = 1.0;
    CHECK(max_abs(m.col(k) - unit) == 0.0);
    CHECK(max_abs(m.row(k).transpose() - unit) == 0.0);
  }
  CHECK_THROWS_AS(embed_cell({5, 6, 0.0, 0.0, 0}, 6), InputError);
  CHECK_THROWS_AS(embed_cell({1, 3, 0.0, 0.0, 0}, 6), InputError);
}

TEST_CASE("decomposing the identity gives the canonical zero plan", "[mesh]") {
  const auto plan = clements_decompose(UnitaryMatrix::identity(6));
  REQUIRE(plan.cells.size() == 15);
  for (const auto& c : plan.cells) {
    CHECK(c.theta == 0.0);
    CHECK(c.phi == 0.0);
  }
  for (double p : plan.output_phases) CHECK(p == 0.0);
}

TEST_CASE("haar round trip", "[mesh]") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const UnitaryMatrix u(oracle::haar_unitary(6, rng));
    const auto plan = clements_decompose(u);
    REQUIRE(plan.cells.size() == 15);
    CHECK(frobenius_distance(mesh_forward(plan).matrix(), u.matrix()) < 1e-9);
    CHECK(frobenius_distance(multiply_out(plan), u.matrix()) < 1e-9);
    for (const auto& c : plan.cells) {
      CHECK(c.theta >= 0.0);
      CHECK(c.theta <= kPi / 2);
      CHECK(c.phi >= 0.0);
      CHECK(c.phi < kTwoPi);
    }
  }
}

TEST_CASE("cell count and depth", "[mesh]") {
  std::mt19937_64 rng(5);
  for (int n : {2, 3, 4, 5, 6, 7, 8}) {
    const auto plan = clements_decompose(UnitaryMatrix(oracle::haar_unitary(n, rng)));
    CHECK(plan.cells.size() == MeshPlan::full_cell_count(n));
    int depth = 0;
    for (const auto& c : plan.cells) depth = std::max(depth, c.column + 1);
    CHECK(depth == (n == 2 ? 1 : n));
  }
  CHECK(MeshPlan::full_cell_count(2) == 1);
  CHECK(MeshPlan::full_cell_count(4) == 6);
  CHECK(MeshPlan::full_cell_count(6) == 15);
  CHECK(MeshPlan::full_cell_count(8) == 28);
}

TEST_CASE("re-decomposition is stable", "[mesh]") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const auto plan = clements_decompose(UnitaryMatrix(oracle::haar_unitary(6, rng)));
    const auto again = clements_decompose(mesh_forward(plan));
    REQUIRE(again.cells.size() == plan.cells.size());
    for (std::size_t i = 0; i < plan.cells.size(); ++i) {
      CHECK(std::abs(again.cells[i].theta - plan.cells[i].theta) < 1e-8);
    }
  }
}

TEST_CASE("hamiltonian step compiles onto the mesh", "[mesh]") {
  const auto u = step_unitary(SpinBosonParams{});
  const auto plan = clements_decompose(u);
  CHECK(plan.cells.size() == 15);
  CHECK(frobenius_distance(mesh_forward(plan).matrix(), u.matrix()) < 1e-9);
}

TEST_CASE("rejects non-unitary input", "[mesh]") {
  CMatrix m = CMatrix::Identity(3, 3);
  m(0, 1) = 0.1;
  CHECK_THROWS_WITH(clements_decompose(UnitaryMatrix(m)), Catch::Matchers::ContainsSubstring("not unitary"));
}

TEST_CASE("zero plan", "[mesh]") {
  auto plan = zero_plan(6);
  CHECK(plan.cells.size() == 15);
  CHECK(max_abs(mesh_forward(plan).matrix() - CMatrix::Identity(6, 6)) == 0.0);
  plan.output_phases = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  const auto m = mesh_forward(plan).matrix();
  for (int k = 0; k < 6; ++k) CHECK(std::abs(m(k, k) - std::polar(1.0, 0.1 * (k + 1))) < 1e-15);
  CHECK(std::abs(m.sum() - m.diagonal().sum()) < 1e-15);
}

TEST_CASE("noisy hardware", "[mesh]") {
  std::mt19937_64 rng(17);
  const auto plan = clements_decompose(UnitaryMatrix(oracle::haar_unitary(6, rng)));

  SECTION("zero sigmas match the ideal mesh") {
    MeshNoise none = MeshNoise::none();
    none.seed = 1234;
    CHECK(max_abs(mesh_forward(plan, none).matrix() - mesh_forward(plan).matrix()) == 0.0);
  }
  SECTION("still unitary and deterministic") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      MeshNoise noise;
      noise.seed = seed;
      noise.sigma_split = 0.05;
      const auto a = mesh_forward(plan, noise).matrix();
      const auto b = mesh_forward(plan, noise).matrix();
      CHECK(unitarity_defect(a) < 1e-10);
      CHECK(a == b);
    }
  }
  SECTION("different seeds realize different hardware") {
    MeshNoise n0;
    MeshNoise n1;
    n1.seed = 1;
    CHECK(frobenius_distance(mesh_forward(plan, n0).matrix(), mesh_forward(plan, n1).matrix()) > 1e-3);
  }
  SECTION("imperfections are indexed by cell") {
    MeshNoise noise;
    noise.seed = 42;
    const auto all = draw_imperfections(noise, 15);
    const auto five = draw_imperfections(noise, 5);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(all[i].dtheta == five[i].dtheta);
      CHECK(all[i].reflectivity_out == five[i].reflectivity_out);
    }
    CHECK(draw_imperfection(noise, 7).dphi == all[7].dphi);
  }
  SECTION("negative sigma rejected") {
    MeshNoise bad;
    bad.sigma_phi = -0.1;
    CHECK_THROWS_AS(mesh_forward(plan, bad), InputError);
  }
}
