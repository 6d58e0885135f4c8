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

#include <algorithm>
#include <cmath>
#include <vector>

#include "mppo/error.hpp"
#include "mppo/policy.hpp"

namespace mppo::reference {
namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// y = A x + b with A stored column-major at `a`.
void affine(const double* a, const double* b, int rows, int cols,
            const std::vector<double>& x, std::vector<double>& y) {
  y.assign(static_cast<std::size_t>(rows), 0.0);
  for (int r = 0; r < rows; ++r) y[static_cast<std::size_t>(r)] = b ? b[r] : 0.0;
  for (int c = 0; c < cols; ++c) {
    const double xc = x[static_cast<std::size_t>(c)];
    for (int r = 0; r < rows; ++r) {
      y[static_cast<std::size_t>(r)] += a[static_cast<std::size_t>(c) * rows + r] * xc;
    }
  }
}

struct Cell {
  std::vector<double> h, c;
};

void cell_step(const PolicyParameters& p, Tensor w_id, Tensor u_id, Tensor b_id,
               const std::vector<double>& x, Cell& cell) {
  const int hidden = p.hidden();
  const auto data = p.values().data();
  const TensorSpec& ws = p.spec(w_id);
  std::vector<double> z, zr;
  affine(data + ws.offset, data + p.spec(b_id).offset, 4 * hidden,
         static_cast<int>(ws.cols), x, z);
  affine(data + p.spec(u_id).offset, nullptr, 4 * hidden, hidden, cell.h, zr);
  for (int r = 0; r < hidden; ++r) {
    const auto ri = static_cast<std::size_t>(r);
    const double i = sigmoid(z[ri] + zr[ri]);
    const double f = sigmoid(z[ri + hidden] + zr[ri + hidden]);
    const double g = std::tanh(z[ri + 2 * hidden] + zr[ri + 2 * hidden]);
    const double o = sigmoid(z[ri + 3 * hidden] + zr[ri + 3 * hidden]);
    cell.c[ri] = f * cell.c[ri] + i * g;
    cell.h[ri] = o * std::tanh(cell.c[ri]);
  }
}

}  // namespace

std::vector<double> step_log_probs(const PolicyParameters& p,
                                   const ControlSequence& seq) {
  const TaskShape& shape = p.shape();
  const int hidden = p.hidden();
  const int nc = shape.n_choices;
  const int nk = shape.n_continuous;
  const int steps = seq.steps();
  if (seq.raw.size() != static_cast<std::size_t>(steps * nk)) {
    throw Error(ErrorCode::kShapeMismatch, "reference: sequence shape mismatch");
  }
  const auto data = p.values().data();
  Cell l0{std::vector<double>(static_cast<std::size_t>(hidden), 0.0),
          std::vector<double>(static_cast<std::size_t>(hidden), 0.0)};
  Cell l1 = l0;
  std::vector<double> x(static_cast<std::size_t>(shape.input_width()));
  std::vector<double> logits, means, values(static_cast<std::size_t>(nk));
  std::vector<double> out;
  for (int t = 0; t < steps; ++t) {
    std::fill(x.begin(), x.end(), 0.0);
    if (t == 0) {
      x.back() = 1.0;
    } else {
      x[static_cast<std::size_t>(seq.choices[static_cast<std::size_t>(t - 1)])] = 1.0;
      for (int k = 0; k < nk; ++k) {
        x[static_cast<std::size_t>(nc + k)] = std::clamp(
            seq.raw[static_cast<std::size_t>((t - 1) * nk + k)] /
                shape.value_scale[static_cast<std::size_t>(k)],
            -1.0, 1.0);
      }
    }
    cell_step(p, Tensor::kInput0, Tensor::kRecur0, Tensor::kBias0, x, l0);
    cell_step(p, Tensor::kInput1, Tensor::kRecur1, Tensor::kBias1, l0.h, l1);

    affine(data + p.spec(Tensor::kSoftmaxW).offset,
           data + p.spec(Tensor::kSoftmaxB).offset, nc, hidden, l1.h, logits);
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - m);
    const double lse = m + std::log(sum);
    for (double& v : logits) v -= lse;

    if (nk > 0) {
      affine(data + p.spec(Tensor::kMeanW).offset,
             data + p.spec(Tensor::kMeanB).offset, nc * nk, hidden, l1.h, means);
    } else {
      means.clear();
    }
    for (int k = 0; k < nk; ++k) {
      values[static_cast<std::size_t>(k)] =
          seq.raw[static_cast<std::size_t>(t * nk + k)];
    }
    out.push_back(step_log_prob(logits, means, nk, p.sigma,
                                seq.choices[static_cast<std::size_t>(t)], values,
                                p.density));
  }
  return out;
}

}  // namespace mppo::reference
