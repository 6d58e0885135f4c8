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

#include "mppo/dd_env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

#include "mppo/error.hpp"

namespace mppo {
namespace {

constexpr double kPi = std::numbers::pi;

constexpr char kAxisLabel[4] = {'0', 'x', 'y', 'z'};

double clamp_angle(double v) { return std::clamp(v, -kPi, kPi); }

// Polar and azimuthal angles of the Pauli directions.
struct BaseAngles {
  double theta;
  double phi;
};
BaseAngles base_angles(Pauli axis) {
  switch (axis) {
    case Pauli::kX:
      return {kPi / 2, 0.0};
    case Pauli::kY:
      return {kPi / 2, kPi / 2};
    default:
      return {0.0, 0.0};
  }
}

Eigen::Vector3d pauli_direction(Pauli axis) {
  switch (axis) {
    case Pauli::kX:
      return Eigen::Vector3d::UnitX();
    case Pauli::kY:
      return Eigen::Vector3d::UnitY();
    case Pauli::kZ:
      return Eigen::Vector3d::UnitZ();
    default:
      return Eigen::Vector3d::Zero();
  }
}

Pauli axis_of(const DdAction& action) {
  return std::visit([](const auto& a) { return a.axis; }, action);
}

}  // namespace

int DdConfig::steps() const {
  return static_cast<int>(std::llround(total_time / delta_t));
}

void DdConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::kConfigInvalid,
                "quantum_memory." + field + ": " + why);
  };
  if (n_bath_qubits < 1 || n_bath_qubits > 5) {
    fail("n_bath_qubits", "must be in [1, 5]");
  }
  if (!(delta_t > 0.0) || !std::isfinite(delta_t)) {
    fail("delta_t", "must be positive");
  }
  if (!(total_time > 0.0) || !std::isfinite(total_time)) {
    fail("total_time", "must be positive");
  }
  const int n = steps();
  if (n < 1 || std::abs(n * delta_t - total_time) > 1e-12) {
    fail("total_time", "must be a positive integer multiple of delta_t");
  }
  if (!(noise_strength >= 0.0) || !std::isfinite(noise_strength)) {
    fail("noise_strength", "must be non-negative");
  }
  if (max_body < 1 || max_body > 1 + n_bath_qubits) {
    fail("max_body", "must be in [1, 1 + n_bath_qubits]");
  }
}

ComplexOperator build_noise_hamiltonian(const DdConfig& cfg) {
  const int n_qubits = 1 + cfg.n_bath_qubits;
  const int dim = cfg.dim();
  ComplexOperator h = ComplexOperator::Zero(dim, dim);
  if (cfg.noise_strength == 0.0) return h;

  std::mt19937_64 rng(cfg.noise_seed);
  const long n_strings = 1L << (2 * n_qubits);
  std::vector<int> digits(static_cast<std::size_t>(n_qubits));
  for (long code = 1; code < n_strings; ++code) {
    int weight = 0;
    long rest = code;
    for (int q = n_qubits - 1; q >= 0; --q) {
      digits[static_cast<std::size_t>(q)] = static_cast<int>(rest & 3);
      weight += (rest & 3) != 0;
      rest >>= 2;
    }
    if (weight > cfg.max_body) continue;
    if (weight == 1 && digits[0] != 0) continue;  // system-only term

    const double coeff = 2.0 * unit_uniform(rng) - 1.0;
    ComplexOperator term = pauli(static_cast<Pauli>(digits[0]));
    for (int q = 1; q < n_qubits; ++q) {
      term = kron(term, pauli(static_cast<Pauli>(digits[static_cast<std::size_t>(q)])));
    }
    h += coeff * term;
  }
  const double norm = h.norm();
  if (norm > 0.0) h *= cfg.noise_strength * std::sqrt(double(dim)) / norm;
  return h;
}

Eigen::Vector3d bloch_axis(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
          std::cos(theta)};
}

Rotation resolve_action(const DdAction& action) {
  const Pauli axis = axis_of(action);
  if (axis == Pauli::kIdentity) return {Eigen::Vector3d::Zero(), 0.0};
  return std::visit(
      [axis](const auto& a) -> Rotation {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, DdDiscrete>) {
          return {pauli_direction(axis), kPi};
        } else if constexpr (std::is_same_v<T, DdSemiContinuous>) {
          return {pauli_direction(axis), kPi + clamp_angle(a.dalpha)};
        } else {
          const BaseAngles base = base_angles(axis);
          return {bloch_axis(base.theta + clamp_angle(a.dtheta),
                             base.phi + clamp_angle(a.dphi)),
                  kPi + clamp_angle(a.dalpha)};
        }
      },
      action);
}

ComplexOperator step_generator(const DdAction& action, const ComplexOperator& h0,
                               double delta_t) {
  if (h0.rows() != h0.cols() || h0.rows() < 2 || h0.rows() % 2 != 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                "step_generator: H0 must be square with even dimension");
  }
  const Rotation rot = resolve_action(action);
  if (rot.alpha == 0.0) return h0;
  const ComplexOperator n_sigma = rot.axis.x() * pauli(Pauli::kX) +
                                  rot.axis.y() * pauli(Pauli::kY) +
                                  rot.axis.z() * pauli(Pauli::kZ);
  const Eigen::Index d_bath = h0.rows() / 2;
  return h0 + (rot.alpha / (2.0 * delta_t)) *
                  kron(n_sigma, ComplexOperator::Identity(d_bath, d_bath));
}

DecouplingDistance decoupling_distance(const ComplexOperator& u, int d_system,
                                       int d_bath) {
  const ComplexOperator reduced = partial_trace_system(u, d_system, d_bath);
  const double radicand =
      1.0 - trace_norm(reduced) / (double(d_system) * double(d_bath));
  return {std::sqrt(std::max(0.0, radicand)), radicand};
}

DdScore evaluate_sequence(std::span<const DdAction> actions, const DdConfig& cfg,
                          const ComplexOperator& h0) {
  if (static_cast<int>(actions.size()) != cfg.steps()) {
    throw Error(ErrorCode::kLengthMismatch,
                "dd evaluate_sequence: expected " + std::to_string(cfg.steps()) +
                    " actions, got " + std::to_string(actions.size()));
  }
  if (h0.rows() != cfg.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "dd evaluate_sequence: H0 dimension does not match config");
  }
  ComplexOperator u = ComplexOperator::Identity(h0.rows(), h0.cols());
  for (const auto& a : actions) {
    u = propagator(step_generator(a, h0, cfg.delta_t), cfg.delta_t) * u;
  }
  const DecouplingDistance d = decoupling_distance(u, 2, cfg.bath_dim());
  if (d.radicand < -1e-9) {
    std::fprintf(stderr, "warning: decoupling radicand %.3e clamped to 0\n",
                 d.radicand);
  }
  return {d.distance, 1.0 - d.distance};
}

DdEnvironment::DdEnvironment(DdConfig cfg, DdTask task)
    : DdEnvironment(cfg, task, build_noise_hamiltonian(cfg)) {}

DdEnvironment::DdEnvironment(DdConfig cfg, DdTask task, ComplexOperator h0)
    : cfg_(cfg), task_(task), h0_(std::move(h0)) {
  cfg_.validate();
  if (h0_.rows() != cfg_.dim() || h0_.cols() != cfg_.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "DdEnvironment: H0 dimension does not match config");
  }
  for (int k = 0; k < 4; ++k) {
    pauli_props_[static_cast<std::size_t>(k)] = propagator(
        step_generator(DdDiscrete{static_cast<Pauli>(k)}, h0_, cfg_.delta_t),
        cfg_.delta_t);
  }
}

TaskShape DdEnvironment::shape() const {
  switch (task_) {
    case DdTask::kDiscrete:
      return {4, 0, {}};
    case DdTask::kSemiContinuous:
      return {4, 1, {kPi}};
    case DdTask::kContinuous:
      return {4, 3, {kPi, kPi, kPi}};
  }
  return {};
}

DdAction DdEnvironment::action_at(const ControlSequence& seq, int t) const {
  const auto ti = static_cast<std::size_t>(t);
  const int c = seq.choices[ti];
  if (c < 0 || c > 3) {
    throw Error(ErrorCode::kShapeMismatch, "dd action: choice out of range");
  }
  const Pauli axis = static_cast<Pauli>(c);
  switch (task_) {
    case DdTask::kDiscrete:
      return DdDiscrete{axis};
    case DdTask::kSemiContinuous:
      return DdSemiContinuous{axis, seq.raw[ti]};
    case DdTask::kContinuous:
      return DdContinuous{axis, seq.raw[3 * ti], seq.raw[3 * ti + 1],
                          seq.raw[3 * ti + 2]};
  }
  return DdDiscrete{axis};
}

std::vector<DdAction> DdEnvironment::actions(const ControlSequence& seq) const {
  const TaskShape s = shape();
  if (seq.steps() != steps() ||
      seq.raw.size() != seq.choices.size() * static_cast<std::size_t>(s.n_continuous)) {
    throw Error(ErrorCode::kLengthMismatch,
                "dd sequence: expected " + std::to_string(steps()) + " steps");
  }
  std::vector<DdAction> out;
  out.reserve(seq.choices.size());
  for (int t = 0; t < seq.steps(); ++t) out.push_back(action_at(seq, t));
  return out;
}

DdScore DdEnvironment::score(const ControlSequence& seq) const {
  if (task_ != DdTask::kDiscrete) {
    const auto acts = actions(seq);
    return evaluate_sequence(acts, cfg_, h0_);
  }
  if (seq.steps() != steps() || !seq.raw.empty()) {
    throw Error(ErrorCode::kLengthMismatch,
                "dd sequence: expected " + std::to_string(steps()) + " steps");
  }
  ComplexOperator u = ComplexOperator::Identity(cfg_.dim(), cfg_.dim());
  for (int c : seq.choices) {
    if (c < 0 || c > 3) {
      throw Error(ErrorCode::kShapeMismatch, "dd action: choice out of range");
    }
    u = pauli_props_[static_cast<std::size_t>(c)] * u;
  }
  const DecouplingDistance d = decoupling_distance(u, 2, cfg_.bath_dim());
  return {d.distance, 1.0 - d.distance};
}

double DdEnvironment::reward(const ControlSequence& seq) const {
  return score(seq).reward_raw;
}

ControlSequence DdEnvironment::random_sequence(std::mt19937_64& rng) const {
  const TaskShape s = shape();
  ControlSequence seq;
  seq.choices.resize(static_cast<std::size_t>(steps()));
  seq.raw.resize(static_cast<std::size_t>(steps() * s.n_continuous));
  for (int t = 0; t < steps(); ++t) {
    seq.choices[static_cast<std::size_t>(t)] = static_cast<int>(rng() % 4);
    for (int k = 0; k < s.n_continuous; ++k) {
      seq.raw[static_cast<std::size_t>(t * s.n_continuous + k)] =
          kPi * (2.0 * unit_uniform(rng) - 1.0);
    }
  }
  return seq;
}

std::string DdEnvironment::describe_step(const ControlSequence& seq,
                                         int t) const {
  const auto ti = static_cast<std::size_t>(t);
  std::string label(1, kAxisLabel[seq.choices[ti]]);
  const int nc = shape().n_continuous;
  char buf[32];
  for (int k = 0; k < nc; ++k) {
    std::snprintf(buf, sizeof buf, "%s%+.4f", k == 0 ? ":" : "/",
                  clamp_angle(seq.raw[ti * static_cast<std::size_t>(nc) + static_cast<std::size_t>(k)]));
    label += buf;
  }
  return label;
}

}  // namespace mppo
