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

#ifndef MPPO_DD_ENV_HPP_
#define MPPO_DD_ENV_HPP_

// Quantum-memory environment: one system qubit (leading tensor factor)
// coupled to a bath of qubits, controlled by instantaneous-angle rotations of
// the system qubit at every time step.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "mppo/environment.hpp"
#include "mppo/linalg.hpp"

namespace mppo {

struct DdConfig {
  int n_bath_qubits = 4;
  double delta_t = 0.002;
  double total_time = 0.064;
  std::uint64_t noise_seed = 42;
  double noise_strength = 1.0;
  int max_body = 3;

  // total_time / delta_t; validate() guarantees it is an exact integer.
  int steps() const;
  int dim() const { return 1 << (1 + n_bath_qubits); }
  int bath_dim() const { return 1 << n_bath_qubits; }
  // Throws ConfigInvalid naming the offending field.
  void validate() const;
  bool operator==(const DdConfig&) const = default;
};

enum class DdTask { kDiscrete, kSemiContinuous, kContinuous };

struct DdDiscrete {
  Pauli axis = Pauli::kIdentity;
};
struct DdSemiContinuous {
  Pauli axis = Pauli::kIdentity;
  double dalpha = 0.0;
};
struct DdContinuous {
  Pauli axis = Pauli::kIdentity;
  double dalpha = 0.0;
  double dtheta = 0.0;
  double dphi = 0.0;
};
using DdAction = std::variant<DdDiscrete, DdSemiContinuous, DdContinuous>;

// Random traceless noise Hamiltonian on system + bath. Pauli strings of
// weight 1..max_body are enumerated in base-4 order (qubit 0 = system is the
// most significant digit; digit values I,X,Y,Z = 0..3), strings acting on the
// system alone are skipped, and each kept string receives a coefficient
// 2u - 1 where u = (mt19937_64() >> 11) * 2^-53 is drawn from an mt19937_64
// seeded with noise_seed. The sum is rescaled to Frobenius norm
// noise_strength * sqrt(dim).
ComplexOperator build_noise_hamiltonian(const DdConfig& cfg);

Eigen::Vector3d bloch_axis(double theta, double phi);

struct Rotation {
  Eigen::Vector3d axis;
  double alpha = 0.0;
};

// Discrete and semi-continuous axes are the Pauli directions; continuous axes
// deviate from them in Bloch angles. The identity axis is always a no-pulse
// (alpha = 0). Deviations are clamped to [-pi, pi].
Rotation resolve_action(const DdAction& action);

// H0 + alpha/(2 dt) (n . sigma) (x) I_B.
ComplexOperator step_generator(const DdAction& action, const ComplexOperator& h0,
                               double delta_t);

// sqrt(max(0, 1 - ||Tr_S U||_tr / (dS dB))).
struct DecouplingDistance {
  double distance = 0.0;
  double radicand = 0.0;
};
DecouplingDistance decoupling_distance(const ComplexOperator& u, int d_system,
                                       int d_bath);

struct DdScore {
  double distance = 0.0;
  double reward_raw = 0.0;
};

// Total evolution U = U_T ... U_1 scored against the identity.
DdScore evaluate_sequence(std::span<const DdAction> actions, const DdConfig& cfg,
                          const ComplexOperator& h0);

// Environment adapter. Discrete step propagators are computed once; the
// instance is immutable after construction.
class DdEnvironment final : public Environment {
 public:
  DdEnvironment(DdConfig cfg, DdTask task);
  // Uses the given H0 instead of the seeded construction.
  DdEnvironment(DdConfig cfg, DdTask task, ComplexOperator h0);

  TaskShape shape() const override;
  int steps() const override { return cfg_.steps(); }
  double reward(const ControlSequence& seq) const override;
  ControlSequence random_sequence(std::mt19937_64& rng) const override;
  std::string describe_step(const ControlSequence& seq, int t) const override;

  DdAction action_at(const ControlSequence& seq, int t) const;
  std::vector<DdAction> actions(const ControlSequence& seq) const;
  DdScore score(const ControlSequence& seq) const;

  const DdConfig& config() const { return cfg_; }
  DdTask task() const { return task_; }
  const ComplexOperator& noise_hamiltonian() const { return h0_; }

 private:
  DdConfig cfg_;
  DdTask task_;
  ComplexOperator h0_;
  std::array<ComplexOperator, 4> pauli_props_;
};

}  // namespace mppo

#endif  // MPPO_DD_ENV_HPP_
