// Copyright 2026 The mppo Authors
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

#include <doctest.h>

#include <cmath>
#include <random>

#include "mppo/error.hpp"
#include "mppo/ising_env.hpp"
#include "mppo/oracle.hpp"

using namespace mppo;

namespace {

IsingConfig pauli_config(int sites) {
  IsingConfig c;
  c.sites = sites;
  c.operator_scale = 1.0;
  return c;
}

ComplexOperator dense_eye(int n) { return ComplexOperator::Identity(n, n); }

std::vector<double> random_fields(int steps, double h_max, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-h_max, h_max);
  std::vector<double> f(static_cast<std::size_t>(steps));
  for (double& v : f) v = u(rng);
  return f;
}

void check_code(const std::function<void()>& fn, ErrorCode code) {
  try {
    fn();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_SUITE("ising_env") {

TEST_CASE("Hamiltonian construction") {
  IsingConfig c = pauli_config(1);
  CHECK((build_ising(c, 0.0) + pauli(Pauli::kZ)).cwiseAbs().maxCoeff() < 1e-15);
  ComplexOperator want(2, 2);
  want << -1, -2, -2, 1;
  CHECK((build_ising(c, -2.0) - want).cwiseAbs().maxCoeff() < 1e-15);

  c.sites = 2;
  const ComplexOperator x = pauli(Pauli::kX), z = pauli(Pauli::kZ);
  const ComplexOperator two = -kron(x, x) - kron(z, dense_eye(2)) - kron(dense_eye(2), z);
  CHECK((build_ising(c, 0.0) - two).cwiseAbs().maxCoeff() < 1e-15);

  // Spin-1/2 operators scale each Pauli factor by one half.
  IsingConfig half = c;
  half.operator_scale = 0.5;
  const ComplexOperator want_half =
      -0.25 * kron(x, x) - 0.5 * kron(z, dense_eye(2)) - 0.5 * kron(dense_eye(2), z) +
      0.5 * 1.5 * (kron(x, dense_eye(2)) + kron(dense_eye(2), x));
  CHECK((build_ising(half, 1.5) - want_half).cwiseAbs().maxCoeff() < 1e-15);

  IsingConfig zz = c;
  zz.coupling_axis = Pauli::kZ;
  CHECK((build_ising(zz, 0.0) - (-kron(z, z) - kron(z, dense_eye(2)) - kron(dense_eye(2), z)))
            .cwiseAbs()
            .maxCoeff() < 1e-15);

  for (int sites = 1; sites <= 5; ++sites) {
    c.sites = sites;
    const ComplexOperator h = build_ising(c, 1.3);
    CHECK(h.rows() == (1 << sites));
    CHECK(hermiticity_error(h) == 0.0);
  }
}

TEST_CASE("ground states") {
  ComplexOperator z = pauli(Pauli::kZ);
  const GroundState gz = ground_state(z);
  CHECK(gz.energy == doctest::Approx(-1.0));
  CHECK(std::abs(gz.psi(1)) == doctest::Approx(1.0));

  const GroundState g1 = ground_state(build_ising(pauli_config(1), -2.0));
  CHECK(std::abs(g1.energy + std::sqrt(5.0)) < 1e-12);

  for (int sites = 1; sites <= 5; ++sites) {
    for (Pauli axis : {Pauli::kX, Pauli::kZ}) {
      IsingConfig c = pauli_config(sites);
      c.coupling_axis = axis;
      const ComplexOperator h = build_ising(c, sites == 5 ? 0.0 : 0.7);
      const GroundState g = ground_state(h);
      CHECK((h * g.psi - g.energy * g.psi).norm() <= 1e-8);
      CHECK(std::abs(g.psi.norm() - 1.0) < 1e-12);
      // General (non-Hermitian) solver as an independent oracle.
      Eigen::ComplexEigenSolver<ComplexOperator> dense(h);
      CHECK(std::abs(g.energy - dense.eigenvalues().real().minCoeff()) < 1e-10);
    }
  }
  ComplexOperator bad = ComplexOperator::Zero(2, 2);
  bad(0, 1) = 1.0;
  check_code([&] { ground_state(bad); }, ErrorCode::kNotHermitian);
}

TEST_CASE("field resolution") {
  CHECK(resolve_field(FieldDiscrete{1}, 4.0) == 4.0);
  CHECK(resolve_field(FieldDiscrete{-1}, 4.0) == -4.0);
  CHECK(resolve_field(FieldContinuous{-1, 0.0}, 4.0) == -4.0);
  CHECK(resolve_field(FieldContinuous{1, 4.0}, 4.0) == 0.0);
  CHECK(resolve_field(FieldContinuous{-1, 1.0}, 4.0) == -3.0);
  CHECK(resolve_field(FieldConstrained{-2.5}, 4.0) == -2.5);
}

TEST_CASE("sequence evaluation") {
  IsingConfig c;
  c.total_time = 0.0;
  CHECK(evaluate_sequence({}, c) == doctest::Approx(0.2).epsilon(1e-12));
  c.h_target = c.h_initial;
  CHECK(evaluate_sequence({}, c) == doctest::Approx(1.0).epsilon(1e-12));

  IsingConfig d;
  const IsingModel model(d);
  std::vector<double> f(10, 4.0);
  check_code([&] { model.evaluate_sequence(std::span(f).first(9)); }, ErrorCode::kLengthMismatch);
  f[3] = 4.0 + 1e-6;
  check_code([&] { model.evaluate_sequence(f); }, ErrorCode::kFieldOutOfRange);
  f[3] = 4.0 + 1e-13;
  CHECK_NOTHROW(model.evaluate_sequence(f));
}

TEST_CASE("norm preservation, phase and stationarity") {
  std::mt19937_64 rng(11);
  for (int sites = 1; sites <= 5; ++sites) {
    IsingConfig c;
    c.sites = sites;
    c.coupling_axis = sites % 2 ? Pauli::kX : Pauli::kZ;
    const IsingModel model(c);
    for (int rep = 0; rep < 3; ++rep) {
      const auto f = random_fields(c.steps(), c.h_max, rng);
      const StateVector psi = model.evolve(f);
      CHECK(std::abs(psi.norm() - 1.0) <= 1e-9);
      const double s2 = model.evaluate_sequence(f);
      CHECK(s2 >= 0.0);
      CHECK(s2 <= 1.0 + 1e-12);
      const StateVector rotated = std::polar(1.0, 0.9) * psi;
      CHECK(std::norm(overlap(model.target_state(), rotated)) == doctest::Approx(s2).epsilon(1e-12));
    }
    // The initial ground state is stationary under its own field.
    IsingConfig s = c;
    s.h_target = s.h_initial;
    s.total_time = 1.0;
    const IsingModel still(s);
    const std::vector<double> hold(static_cast<std::size_t>(s.steps()), s.h_initial);
    CHECK(std::abs(still.evaluate_sequence(hold) - 1.0) <= 1e-9);
  }
}

TEST_CASE("budget-constrained reward") {
  IsingConfig c;
  c.budget = 10.0;
  const IsingModel model(c);
  const std::vector<double> zero(10, 0.0);
  CHECK(model.constrained_reward(zero) == model.evaluate_sequence(zero));
  CHECK(model.evaluate_sequence(zero) > 0.0);
  std::vector<double> edge(10, 1.0);
  CHECK(model.constrained_reward(edge) == model.evaluate_sequence(edge));
  edge[0] += 0.001;
  CHECK(model.constrained_reward(edge) == 0.0);

  IsingConfig none;
  check_code([&] { IsingModel(none).constrained_reward(zero); }, ErrorCode::kConfigInvalid);
  check_code([&] { IsingEnvironment(none, IsingTask::kConstrained); }, ErrorCode::kConfigInvalid);
}

TEST_CASE("budget violations score exactly zero") {
  std::mt19937_64 rng(12);
  for (double budget : {5.0, 20.0, 60.0, 120.0}) {
    IsingConfig c;
    c.total_time = 3.0;
    c.budget = budget;
    const IsingEnvironment env(c, IsingTask::kConstrained);
    int violated = 0, kept = 0;
    for (int rep = 0; rep < 200; ++rep) {
      ControlSequence s = env.random_sequence(rng);
      // Vary the overall field magnitude so both sides of the budget occur.
      const double scale = unit_uniform(rng);
      for (double& r : s.raw) r *= scale;
      double total = 0.0;
      for (double h : env.fields(s)) total += std::abs(h);
      const double r = env.reward(s);
      if (total > budget + 1e-12) {
        ++violated;
        CHECK(r == 0.0);
      } else {
        ++kept;
        CHECK(r == env.model().evaluate_sequence(env.fields(s)));
      }
    }
    CHECK(violated > 0);
    if (budget >= 60.0) CHECK(kept > 0);
  }
}

TEST_CASE("continuous with zero deviation equals discrete") {
  IsingConfig c;
  c.sites = 3;
  c.total_time = 0.5;
  const IsingEnvironment disc(c, IsingTask::kDiscrete);
  const IsingEnvironment cont(c, IsingTask::kContinuous);
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    ControlSequence s = disc.random_sequence(rng);
    const double r = disc.reward(s);
    s.raw.assign(s.choices.size(), 0.0);
    CHECK(cont.reward(s) == r);
  }
  CHECK(disc.shape().n_choices == 2);
  CHECK(cont.shape().n_continuous == 1);
  CHECK(cont.describe_step({{0, 1}, {0.0, 1.5}}, 1) == "2.5");
  check_code([&] { disc.reward({{0, 1}, {}}); }, ErrorCode::kLengthMismatch);
}

TEST_CASE("config validation") {
  const auto field_of = [](IsingConfig c) -> std::string {
    try {
      c.validate();
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kConfigInvalid);
      return e.what();
    }
    return "";
  };
  IsingConfig c;
  CHECK(field_of(c).empty());
  CHECK(c.steps() == 10);
  c.total_time = 0.52;
  CHECK(field_of(c).find("total_time") != std::string::npos);
  c = IsingConfig{};
  c.h_initial = -5.0;
  CHECK(field_of(c).find("h_initial") != std::string::npos);
  c = IsingConfig{};
  c.h_max = 0.0;
  CHECK(field_of(c).find("h_max") != std::string::npos);
  c = IsingConfig{};
  c.budget = -1.0;
  CHECK(field_of(c).find("budget") != std::string::npos);
  c = IsingConfig{};
  c.coupling_axis = Pauli::kIdentity;
  CHECK(field_of(c).find("coupling_axis") != std::string::npos);
}

TEST_CASE("single-spin optima") {
  IsingConfig c;
  const IsingEnvironment short_env(c, IsingTask::kDiscrete);
  CHECK(brute_force(short_env).best_reward == doctest::Approx(0.331).epsilon(0.001 / 0.331));
  // At unit operator scale the single-spin dynamics run twice as fast.
  IsingConfig fast = c;
  fast.operator_scale = 1.0;
  fast.total_time = 0.25;
  IsingConfig slow = c;
  slow.delta_t = 0.1;
  slow.total_time = 0.5;
  const IsingEnvironment a(fast, IsingTask::kDiscrete);
  std::vector<double> f(5, 4.0);
  f[1] = f[3] = -4.0;
  IsingConfig fast_eq = fast;
  fast_eq.delta_t = 0.05;
  const double lhs = IsingModel(fast_eq).evaluate_sequence(f);
  const double rhs = IsingModel(slow).evaluate_sequence(f);
  CHECK(std::abs(lhs - rhs) < 1e-12);
}

}  // TEST_SUITE
