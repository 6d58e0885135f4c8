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

#ifndef MPPO_ISING_ENV_HPP_
#define MPPO_ISING_ENV_HPP_

// Ground-state transition environment for the open transverse-field Ising
// chain H(J, g, h) = J sum sx sx + g sum sz + h sum sx.

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "mppo/environment.hpp"
#include "mppo/linalg.hpp"

namespace mppo {

struct IsingConfig {
  int sites = 1;
  double coupling = -1.0;    // J
  double transverse = -1.0;  // g
  double h_initial = -2.0;
  double h_target = 2.0;
  double h_max = 4.0;
  double delta_t = 0.05;
  double total_time = 0.5;
  std::optional<double> budget;
  // Every Pauli factor is multiplied by this; 0.5 gives spin-1/2 operators.
  double operator_scale = 0.5;
  // Axis of the nearest-neighbour coupling, kX or kZ.
  Pauli coupling_axis = Pauli::kX;

  int steps() const;
  int dim() const { return 1 << sites; }
  void validate() const;
  bool operator==(const IsingConfig&) const = default;
};

enum class IsingTask { kDiscrete, kContinuous, kConstrained };

struct FieldDiscrete {
  int sign = 1;
};
// Field sign*h_max - sign*dh: the deviation pulls the extremal value toward 0.
struct FieldContinuous {
  int sign = 1;
  double dh = 0.0;
};
struct FieldConstrained {
  double h = 0.0;
};
using FieldAction = std::variant<FieldDiscrete, FieldContinuous, FieldConstrained>;

double resolve_field(const FieldAction& action, double h_max);

// Open chain: J s^2 sum a_i a_{i+1} + g s sum z_i + field s sum x_i, with a the
// coupling axis and s the operator scale.
ComplexOperator build_ising(const IsingConfig& cfg, double field);

struct GroundState {
  double energy = 0.0;
  StateVector psi;
};
GroundState ground_state(const ComplexOperator& h);

// Precomputed initial and target states plus the two bang-bang propagators.
class IsingModel {
 public:
  explicit IsingModel(IsingConfig cfg);

  // |<E_min(h*), psi(T)>|^2 after piecewise-constant evolution.
  double evaluate_sequence(std::span<const double> fields) const;
  // S2 when sum |h_t| <= B (1e-12 slack), 0 otherwise.
  double constrained_reward(std::span<const double> fields) const;
  // Final state, exposed for norm checks.
  StateVector evolve(std::span<const double> fields) const;

  const IsingConfig& config() const { return cfg_; }
  const StateVector& initial_state() const { return psi_initial_; }
  const StateVector& target_state() const { return psi_target_; }

 private:
  const ComplexOperator& step_propagator(double field,
                                         ComplexOperator& scratch) const;

  IsingConfig cfg_;
  StateVector psi_initial_;
  StateVector psi_target_;
  ComplexOperator prop_plus_;
  ComplexOperator prop_minus_;
};

double evaluate_sequence(std::span<const double> fields, const IsingConfig& cfg);
double constrained_reward(std::span<const double> fields, const IsingConfig& cfg);

class IsingEnvironment final : public Environment {
 public:
  IsingEnvironment(IsingConfig cfg, IsingTask task);

  TaskShape shape() const override;
  int steps() const override { return model_.config().steps(); }
  double reward(const ControlSequence& seq) const override;
  ControlSequence random_sequence(std::mt19937_64& rng) const override;
  std::string describe_step(const ControlSequence& seq, int t) const override;

  FieldAction action_at(const ControlSequence& seq, int t) const;
  std::vector<double> fields(const ControlSequence& seq) const;

  const IsingModel& model() const { return model_; }
  IsingTask task() const { return task_; }

 private:
  IsingModel model_;
  IsingTask task_;
};

}  // namespace mppo

#endif  // MPPO_ISING_ENV_HPP_
