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
#include <vector>

#include "mppo/policy.hpp"

using namespace mppo;

namespace {

const TaskShape kDiscrete{4, 0, {}};
const TaskShape kContinuous{4, 3, {3.14159, 3.14159, 3.14159}};

ControlSequence random_sequence(const TaskShape& shape, int steps, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, shape.n_choices - 1);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  ControlSequence s;
  for (int t = 0; t < steps; ++t) {
    s.choices.push_back(pick(rng));
    for (int k = 0; k < shape.n_continuous; ++k) s.raw.push_back(val(rng));
  }
  return s;
}

// f = sum_n sum_t w_{n,t} logp_{n,t} + 0.1 (sum_t logp_{n,t})^2, smooth in the
// parameters.
struct SmoothLoss {
  std::vector<std::vector<double>> w;
  double operator()(std::size_t n, std::span<const double> lp, std::span<double> d) const {
    double lin = 0.0, s = 0.0;
    for (std::size_t t = 0; t < lp.size(); ++t) {
      lin += w[n][t] * lp[t];
      s += lp[t];
    }
    for (std::size_t t = 0; t < lp.size(); ++t) d[t] = w[n][t] + 0.2 * s;
    return lin + 0.1 * s * s;
  }
};

double total_loss(const PolicyParameters& p, const std::vector<ControlSequence>& seqs,
                  const SmoothLoss& f) {
  double total = 0.0;
  for (std::size_t n = 0; n < seqs.size(); ++n) {
    const std::vector<double> lp = reference::step_log_probs(p, seqs[n]);
    std::vector<double> d(lp.size());
    total += f(n, lp, d);
  }
  return total;
}

// Worst |a - b| / max(|a| + |b|, 1e-3) over all coordinates; the floor keeps
// difference-quotient rounding on near-zero entries out of the ratio.
double gradient_check(const TaskShape& shape, MixtureDensity density) {
  std::mt19937_64 rng(11);
  PolicyParameters p = init_parameters(shape, 4, 5, 0.7);
  p.density = density;
  std::vector<ControlSequence> seqs;
  SmoothLoss f;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 0; n < 3; ++n) {
    seqs.push_back(random_sequence(shape, 3, rng));
    f.w.push_back({u(rng), u(rng), u(rng)});
  }
  std::vector<double> grad(p.size());
  loss_and_gradient(p, seqs, std::cref(f), grad);

  double worst = 0.0;
  const double h = 1e-5;
  for (std::size_t i = 0; i < p.size(); ++i) {
    PolicyParameters q = p;
    q.values()[i] += h;
    const double up = total_loss(q, seqs, f);
    q.values()[i] -= 2 * h;
    const double down = total_loss(q, seqs, f);
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(fd - grad[i]) / std::max(std::abs(fd) + std::abs(grad[i]), 1e-3));
  }
  return worst;
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("parameter layout covers the flat buffer") {
  const PolicyParameters p(kContinuous, 8);
  std::size_t total = 0;
  for (const auto& s : p.tensors()) {
    CHECK(s.offset == total);
    total += static_cast<std::size_t>(s.rows * s.cols);
  }
  CHECK(total == p.size());
  CHECK(p.spec(Tensor::kInput0).rows == 32);
  CHECK(p.spec(Tensor::kInput0).cols == kContinuous.input_width());
  CHECK(p.spec(Tensor::kMeanW).rows == 12);
}

TEST_CASE("forget-gate bias and init bounds") {
  const PolicyParameters p = init_parameters(kDiscrete, 6, 3, 0.25, 1.0);
  const auto b0 = p.tensor(Tensor::kBias0);
  for (int r = 6; r < 12; ++r) CHECK(b0(r, 0) == 1.0);
  const auto w = p.tensor(Tensor::kRecur1);
  CHECK(w.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(6.0));
}

TEST_CASE("blocked log-probs match the plain-loop reference") {
  std::mt19937_64 rng(2);
  for (const TaskShape& shape : {kDiscrete, kContinuous}) {
    PolicyParameters p = init_parameters(shape, 5, 9, 0.4);
    std::vector<ControlSequence> seqs;
    for (int n = 0; n < 130; ++n) seqs.push_back(random_sequence(shape, 7, rng));
    for (MixtureDensity d : {MixtureDensity::kJoint, MixtureDensity::kMarginal}) {
      p.density = d;
      const Eigen::MatrixXd lp = batch_step_log_probs(p, seqs);
      double worst = 0.0;
      for (std::size_t n = 0; n < seqs.size(); ++n) {
        const auto ref = reference::step_log_probs(p, seqs[n]);
        for (int t = 0; t < 7; ++t) {
          worst = std::max(worst, std::abs(ref[t] - lp(t, static_cast<Eigen::Index>(n))));
        }
      }
      CHECK(worst < 1e-12);
    }
  }
}

TEST_CASE("gradient matches central differences") {
  CHECK(gradient_check(kDiscrete, MixtureDensity::kJoint) <= 1e-4);
  CHECK(gradient_check(kContinuous, MixtureDensity::kJoint) <= 1e-4);
  CHECK(gradient_check(kContinuous, MixtureDensity::kMarginal) <= 1e-4);
}

TEST_CASE("gradient is independent of how items fall into blocks") {
  std::mt19937_64 rng(4);
  const PolicyParameters p = init_parameters(kDiscrete, 4, 1, 0.3);
  std::vector<ControlSequence> seqs;
  for (int n = 0; n < 150; ++n) seqs.push_back(random_sequence(kDiscrete, 4, rng));
  const ItemLoss f = [](std::size_t, std::span<const double> lp, std::span<double> d) {
    for (auto& x : d) x = 1.0;
    return lp[0] + lp[1] + lp[2] + lp[3];
  };
  std::vector<double> g1(p.size()), g2(p.size());
  const double a = loss_and_gradient(p, seqs, f, g1);
  const double b = loss_and_gradient(p, seqs, f, g2);
  CHECK(a == b);
  CHECK(g1 == g2);
}

TEST_CASE("discrete policy is normalized over every sequence") {
  for (int steps = 1; steps <= 6; ++steps) {
    const PolicyParameters p = init_parameters(kDiscrete, 8, 100 + steps, 0.25);
    std::vector<ControlSequence> all;
    const int n = 1 << (2 * steps);
    for (int idx = 0; idx < n; ++idx) {
      ControlSequence s;
      for (int t = steps - 1; t >= 0; --t) s.choices.push_back((idx >> (2 * t)) & 3);
      all.push_back(s);
    }
    const Eigen::MatrixXd lp = batch_step_log_probs(p, all);
    const double total = lp.colwise().sum().array().exp().sum();
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("mixture density integrates to one") {
  const std::vector<double> log_probs{std::log(0.1), std::log(0.2), std::log(0.3), std::log(0.4)};
  const std::vector<double> means{-0.8, 0.1, 0.6, 1.5};
  const double sigma = 0.3;
  // Composite Simpson over [-6, 8].
  const int n = 20000;
  const double a = -6.0, b = 8.0, h = (b - a) / n;
  auto integrate = [&](auto&& density) {
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      s += w * density(a + i * h);
    }
    return s * h / 3.0;
  };
  const double marginal = integrate([&](double x) {
    const std::vector<double> v{x};
    return std::exp(step_log_prob(log_probs, means, 1, sigma, 0, v, MixtureDensity::kMarginal));
  });
  CHECK(std::abs(marginal - 1.0) <= 1e-6);
  const double joint = integrate([&](double x) {
    const std::vector<double> v{x};
    double s = 0.0;
    for (int c = 0; c < 4; ++c) {
      s += std::exp(step_log_prob(log_probs, means, 1, sigma, c, v, MixtureDensity::kJoint));
    }
    return s;
  });
  CHECK(std::abs(joint - 1.0) <= 1e-6);
}

TEST_CASE("marginal responsibilities sum to one") {
  const std::vector<double> log_probs{std::log(0.25), std::log(0.25), std::log(0.5)};
  const std::vector<double> means{0.0, 0.0, 1.0, 1.0, -1.0, 0.5};
  const std::vector<double> v{0.2, 0.4};
  double gamma[3];
  step_log_prob(log_probs, means, 2, 0.5, 1, v, MixtureDensity::kMarginal, gamma);
  CHECK(gamma[0] + gamma[1] + gamma[2] == doctest::Approx(1.0));
  // Components 0 and 1 share probability; 1 sits closer to the point in
  // neither coordinate ordering, so check the explicit ratio.
  const double r = std::exp(-0.5 * ((0.2 * 0.2 + 0.4 * 0.4) - (0.8 * 0.8 + 0.6 * 0.6)) / 0.25);
  CHECK(gamma[0] / gamma[1] == doctest::Approx(r));
}

TEST_CASE("sampling records the log-probability it drew with") {
  const PolicyParameters p = init_parameters(kContinuous, 6, 8, 0.3);
  std::vector<std::mt19937_64> rngs;
  for (int i = 0; i < 70; ++i) rngs.emplace_back(1000 + i);
  const auto batch = sample_batch(p, 5, rngs);
  REQUIRE(batch.size() == 70);
  for (const auto& s : batch) {
    CHECK(s.seq.steps() == 5);
    CHECK(s.seq.raw.size() == 15);
    CHECK(s.logprob_old == doctest::Approx(log_prob(p, s.seq)).epsilon(1e-10));
  }
  std::vector<std::mt19937_64> again;
  for (int i = 0; i < 70; ++i) again.emplace_back(1000 + i);
  const auto batch2 = sample_batch(p, 5, again);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(batch[i].seq.choices == batch2[i].seq.choices);
    CHECK(batch[i].seq.raw == batch2[i].seq.raw);
  }
}

TEST_CASE("sigma scales the continuous spread") {
  PolicyParameters p = init_parameters(TaskShape{2, 1, {1.0}}, 4, 3, 1e-4);
  std::mt19937_64 rng(5);
  const SampledSequence s = sample_sequence(p, 4, rng);
  const auto out = forward(p, encode_inputs(p.shape(), s.seq));
  for (int t = 0; t < 4; ++t) {
    const int c = s.seq.choices[t];
    CHECK(std::abs(s.seq.raw[t] - out[t].means(c, 0)) < 1e-2);
  }
}

}  // TEST_SUITE
