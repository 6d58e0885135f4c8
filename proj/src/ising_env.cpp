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

#include "mppo/ising_env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "mppo/error.hpp"

namespace mppo {
namespace {

constexpr double kFieldSlack = 1e-12;

int sign_of_choice(int choice) { return choice == 0 ? -1 : 1; }

}  // namespace

int IsingConfig::steps() const {
  return static_cast<int>(std::llround(total_time / delta_t));
}

void IsingConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::kConfigInvalid, "ising." + field + ": " + why);
  };
  if (sites < 1 || sites > 8) fail("L", "must be in [1, 8]");
  if (!(h_max > 0.0) || !std::isfinite(h_max)) fail("h_max", "must be positive");
  if (std::abs(h_initial) > h_max) fail("h_initial", "|h_initial| exceeds h_max");
  if (std::abs(h_target) > h_max) fail("h_target", "|h_target| exceeds h_max");
  if (!(delta_t > 0.0) || !std::isfinite(delta_t)) {
    fail("delta_t", "must be positive");
  }
  if (!(total_time >= 0.0) || !std::isfinite(total_time)) {
    fail("total_time", "must be non-negative");
  }
  if (std::abs(steps() * delta_t - total_time) > 1e-12) {
    fail("total_time", "must be an integer multiple of delta_t");
  }
  if (budget && !(*budget >= 0.0)) fail("budget", "must be non-negative");
  if (!(operator_scale > 0.0) || !std::isfinite(operator_scale)) {
    fail("operator_scale", "must be positive");
  }
  if (coupling_axis == Pauli::kIdentity) fail("coupling_axis", "must be x, y or z");
}

double resolve_field(const FieldAction& action, double h_max) {
  return std::visit(
      [h_max](const auto& a) -> double {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, FieldDiscrete>) {
          return a.sign * h_max;
        } else if constexpr (std::is_same_v<T, FieldContinuous>) {
          return a.sign * h_max - a.sign * a.dh;
        } else {
          return a.h;
        }
      },
      action);
}

ComplexOperator build_ising(const IsingConfig& cfg, double field) {
  const int sites = cfg.sites;
  const double s = cfg.operator_scale;
  const ComplexOperator sa = pauli(cfg.coupling_axis);
  const ComplexOperator sx = pauli(Pauli::kX);
  const ComplexOperator sz = pauli(Pauli::kZ);
  const Eigen::Index dim = Eigen::Index{1} << sites;
  ComplexOperator h = ComplexOperator::Zero(dim, dim);
  for (int i = 0; i + 1 < sites; ++i) {
    h += (cfg.coupling * s * s) * (embed_site(sa, i, sites) * embed_site(sa, i + 1, sites));
  }
  for (int i = 0; i < sites; ++i) {
    h += (cfg.transverse * s) * embed_site(sz, i, sites) +
         (field * s) * embed_site(sx, i, sites);
  }
  return h;
}

GroundState ground_state(const ComplexOperator& h) {
  const EigenDecomposition eig = eig_hermitian(h);
  return {eig.eigenvalues(0), eig.eigenvectors.col(0).normalized()};
}

IsingModel::IsingModel(IsingConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto h_of = [this](double field) {
    return build_ising(cfg_, field);
  };
  psi_initial_ = ground_state(h_of(cfg_.h_initial)).psi;
  psi_target_ = ground_state(h_of(cfg_.h_target)).psi;
  prop_plus_ = propagator(h_of(cfg_.h_max), cfg_.delta_t);
  prop_minus_ = propagator(h_of(-cfg_.h_max), cfg_.delta_t);
}

const ComplexOperator& IsingModel::step_propagator(
    double field, ComplexOperator& scratch) const {
  if (field == cfg_.h_max) return prop_plus_;
  if (field == -cfg_.h_max) return prop_minus_;
  scratch = propagator(
      build_ising(cfg_, field),
      cfg_.delta_t);
  return scratch;
}

StateVector IsingModel::evolve(std::span<const double> fields) const {
  if (static_cast<int>(fields.size()) != cfg_.steps()) {
    throw Error(ErrorCode::kLengthMismatch,
                "ising evaluate_sequence: expected " +
                    std::to_string(cfg_.steps()) + " fields, got " +
                    std::to_string(fields.size()));
  }
  StateVector psi = psi_initial_;
  StateVector next(psi.size());
  ComplexOperator scratch;
  for (double h : fields) {
    if (!(std::abs(h) <= cfg_.h_max + kFieldSlack)) {
      throw Error(ErrorCode::kFieldOutOfRange,
                  "ising evaluate_sequence: |h| exceeds h_max");
    }
    next.noalias() = step_propagator(h, scratch) * psi;
    psi.swap(next);
  }
  return psi;
}

double IsingModel::evaluate_sequence(std::span<const double> fields) const {
  return std::norm(overlap(psi_target_, evolve(fields)));
}

double IsingModel::constrained_reward(std::span<const double> fields) const {
  if (!cfg_.budget) {
    throw Error(ErrorCode::kConfigInvalid,
                "ising.budget: required for the constrained reward");
  }
  double total = 0.0;
  for (double h : fields) total += std::abs(h);
  const double s2 = evaluate_sequence(fields);
  return total <= *cfg_.budget + kFieldSlack ? s2 : 0.0;
}

double evaluate_sequence(std::span<const double> fields, const IsingConfig& cfg) {
  return IsingModel(cfg).evaluate_sequence(fields);
}

double constrained_reward(std::span<const double> fields, const IsingConfig& cfg) {
  return IsingModel(cfg).constrained_reward(fields);
}

IsingEnvironment::IsingEnvironment(IsingConfig cfg, IsingTask task)
    : model_(std::move(cfg)), task_(task) {
  if (task_ == IsingTask::kConstrained && !model_.config().budget) {
    throw Error(ErrorCode::kConfigInvalid,
                "ising.budget: required for the constrained task");
  }
}

TaskShape IsingEnvironment::shape() const {
  if (task_ == IsingTask::kDiscrete) return {2, 0, {}};
  return {2, 1, {model_.config().h_max}};
}

FieldAction IsingEnvironment::action_at(const ControlSequence& seq, int t) const {
  const auto ti = static_cast<std::size_t>(t);
  const double h_max = model_.config().h_max;
  const int c = seq.choices[ti];
  if (c < 0 || c > 1) {
    throw Error(ErrorCode::kShapeMismatch, "ising action: choice out of range");
  }
  const int sign = sign_of_choice(c);
  switch (task_) {
    case IsingTask::kDiscrete:
      return FieldDiscrete{sign};
    case IsingTask::kContinuous:
      return FieldContinuous{sign, std::clamp(seq.raw[ti], 0.0, h_max)};
    case IsingTask::kConstrained:
      return FieldConstrained{sign * std::clamp(seq.raw[ti], 0.0, h_max)};
  }
  return FieldDiscrete{sign};
}

std::vector<double> IsingEnvironment::fields(const ControlSequence& seq) const {
  const std::size_t width = task_ == IsingTask::kDiscrete ? 0 : 1;
  if (seq.steps() != steps() || seq.raw.size() != seq.choices.size() * width) {
    throw Error(ErrorCode::kLengthMismatch,
                "ising sequence: expected " + std::to_string(steps()) + " steps");
  }
  std::vector<double> out(seq.choices.size());
  for (int t = 0; t < seq.steps(); ++t) {
    out[static_cast<std::size_t>(t)] =
        resolve_field(action_at(seq, t), model_.config().h_max);
  }
  return out;
}

double IsingEnvironment::reward(const ControlSequence& seq) const {
  const std::vector<double> h = fields(seq);
  return task_ == IsingTask::kConstrained ? model_.constrained_reward(h)
                                          : model_.evaluate_sequence(h);
}

ControlSequence IsingEnvironment::random_sequence(std::mt19937_64& rng) const {
  const double h_max = model_.config().h_max;
  ControlSequence seq;
  seq.choices.resize(static_cast<std::size_t>(steps()));
  if (task_ != IsingTask::kDiscrete) seq.raw.resize(seq.choices.size());
  for (std::size_t t = 0; t < seq.choices.size(); ++t) {
    seq.choices[t] = static_cast<int>(rng() & 1);
    if (!seq.raw.empty()) seq.raw[t] = h_max * unit_uniform(rng);
  }
  return seq;
}

std::string IsingEnvironment::describe_step(const ControlSequence& seq,
                                            int t) const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g",
                resolve_field(action_at(seq, t), model_.config().h_max));
  return buf;
}

}  // namespace mppo
