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

#include "mppo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mppo/error.hpp"

namespace mppo {
namespace {

using Mat = Eigen::MatrixXd;
using ConstMap = Eigen::Map<const Mat>;
using GradMap = Eigen::Map<Mat>;

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

ConstMap view(const PolicyParameters& p, Tensor t) { return p.tensor(t); }

GradMap grad_view(std::span<double> grad, const TensorSpec& s) {
  return GradMap(grad.data() + s.offset, s.rows, s.cols);
}

struct LayerCache {
  Mat gates;  // post-activation, 4H x N
  Mat c;
  Mat tc;
  Mat h;
};

void layer_forward(const ConstMap& w, const ConstMap& u, const ConstMap& b,
                   const Mat& x, const Mat& h_prev, const Mat& c_prev, int hidden,
                   LayerCache& out) {
  const Eigen::Index n = x.cols();
  out.gates.noalias() = w * x;
  out.gates.noalias() += u * h_prev;
  out.gates.colwise() += b.col(0);
  auto sig = [&](Eigen::Index row) {
    auto blk = out.gates.middleRows(row, hidden).array();
    blk = (1.0 + (-blk).exp()).inverse();
  };
  sig(0);
  sig(hidden);
  out.gates.middleRows(2 * hidden, hidden) =
      out.gates.middleRows(2 * hidden, hidden).array().tanh().matrix();
  sig(3 * hidden);
  const auto i = out.gates.middleRows(0, hidden).array();
  const auto f = out.gates.middleRows(hidden, hidden).array();
  const auto g = out.gates.middleRows(2 * hidden, hidden).array();
  const auto o = out.gates.middleRows(3 * hidden, hidden).array();
  out.c.resize(hidden, n);
  out.c.array() = f * c_prev.array() + i * g;
  out.tc = out.c.array().tanh().matrix();
  out.h.resize(hidden, n);
  out.h.array() = o * out.tc.array();
}

// Accumulates parameter gradients of one layer-step and returns the
// gradients w.r.t. its input, previous hidden and previous cell state.
void layer_backward(const ConstMap& w, const ConstMap& u, const LayerCache& cur,
                    const Mat& x, const Mat& h_prev, const Mat& c_prev,
                    const Mat& dh, const Mat& dc_next, int hidden, GradMap& dw,
                    GradMap& du, GradMap& db, Mat& dx, Mat& dh_prev,
                    Mat& dc_prev, Mat& dz) {
  const auto i = cur.gates.middleRows(0, hidden).array();
  const auto f = cur.gates.middleRows(hidden, hidden).array();
  const auto g = cur.gates.middleRows(2 * hidden, hidden).array();
  const auto o = cur.gates.middleRows(3 * hidden, hidden).array();
  const auto tc = cur.tc.array();

  const Eigen::ArrayXXd dc =
      dh.array() * o * (1.0 - tc * tc) + dc_next.array();
  dz.resize(4 * hidden, x.cols());
  dz.middleRows(0, hidden).array() = dc * g * i * (1.0 - i);
  dz.middleRows(hidden, hidden).array() = dc * c_prev.array() * f * (1.0 - f);
  dz.middleRows(2 * hidden, hidden).array() = dc * i * (1.0 - g * g);
  dz.middleRows(3 * hidden, hidden).array() = dh.array() * tc * o * (1.0 - o);
  dc_prev = (dc * f).matrix();

  dw.noalias() += dz * x.transpose();
  du.noalias() += dz * h_prev.transpose();
  db.col(0) += dz.rowwise().sum();
  dx.noalias() = w.transpose() * dz;
  dh_prev.noalias() = u.transpose() * dz;
}

struct StepCache {
  Mat x;
  LayerCache l0;
  LayerCache l1;
  Mat log_probs;  // n_choices x N
  Mat means;      // n_choices*n_continuous x N
  Mat values;     // n_continuous x N (raw draws)
  Mat gamma;      // n_choices x N
};

void validate_sequence(const TaskShape& shape, const ControlSequence& seq,
                       int steps) {
  if (seq.steps() != steps ||
      seq.raw.size() !=
          static_cast<std::size_t>(steps) * static_cast<std::size_t>(shape.n_continuous)) {
    throw Error(ErrorCode::kShapeMismatch,
                "policy: sequence shape does not match the task");
  }
  for (int c : seq.choices) {
    if (c < 0 || c >= shape.n_choices) {
      throw Error(ErrorCode::kShapeMismatch, "policy: choice out of range");
    }
  }
}

// Converts the column-wise logits into log-softmax in place.
void log_softmax_columns(Mat& logits) {
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    auto col = logits.col(j);
    const double m = col.maxCoeff();
    const double lse = m + std::log((col.array() - m).exp().sum());
    col.array() -= lse;
  }
}

void heads_forward(const PolicyParameters& p, const Mat& h, StepCache& sc) {
  const TaskShape& shape = p.shape();
  sc.log_probs.noalias() = view(p, Tensor::kSoftmaxW) * h;
  sc.log_probs.colwise() += view(p, Tensor::kSoftmaxB).col(0);
  log_softmax_columns(sc.log_probs);
  if (shape.n_continuous > 0) {
    sc.means.noalias() = view(p, Tensor::kMeanW) * h;
    sc.means.colwise() += view(p, Tensor::kMeanB).col(0);
  } else {
    sc.means.resize(0, h.cols());
  }
}

// Fills the step-t network input for `n` sequences; `seq_at(j)` returns the
// j-th (partially sampled) sequence.
template <class SeqAt>
void set_input(const TaskShape& shape, Eigen::Index n, int t, SeqAt&& seq_at,
               Mat& x) {
  x.setZero(shape.input_width(), n);
  if (t == 0) {
    x.row(shape.input_width() - 1).setOnes();
    return;
  }
  const auto prev = static_cast<std::size_t>(t - 1);
  const auto nk = static_cast<std::size_t>(shape.n_continuous);
  for (Eigen::Index j = 0; j < n; ++j) {
    const ControlSequence& s = seq_at(j);
    x(s.choices[prev], j) = 1.0;
    for (std::size_t k = 0; k < nk; ++k) {
      x(shape.n_choices + static_cast<Eigen::Index>(k), j) =
          std::clamp(s.raw[prev * nk + k] / shape.value_scale[k], -1.0, 1.0);
    }
  }
}

void set_input(const TaskShape& shape, std::span<const ControlSequence> seqs,
               int t, Mat& x) {
  set_input(shape, static_cast<Eigen::Index>(seqs.size()), t,
            [&](Eigen::Index j) -> const ControlSequence& {
              return seqs[static_cast<std::size_t>(j)];
            },
            x);
}

// Forward pass over one block of equal-length sequences.
class BlockPass {
 public:
  BlockPass(const PolicyParameters& p, std::span<const ControlSequence> seqs)
      : p_(p), seqs_(seqs) {
    const TaskShape& shape = p.shape();
    steps_ = seqs.empty() ? 0 : seqs.front().steps();
    for (const auto& s : seqs) validate_sequence(shape, s, steps_);
    const int hidden = p.hidden();
    const auto n = static_cast<Eigen::Index>(seqs.size());
    const auto nk = static_cast<std::size_t>(shape.n_continuous);

    cache_.resize(static_cast<std::size_t>(steps_));
    step_logp_.resize(steps_, n);
    const Mat zero = Mat::Zero(hidden, n);
    for (int t = 0; t < steps_; ++t) {
      StepCache& sc = cache_[static_cast<std::size_t>(t)];
      set_input(shape, seqs, t, sc.x);
      const Mat& h0_prev = t ? cache_[static_cast<std::size_t>(t - 1)].l0.h : zero;
      const Mat& c0_prev = t ? cache_[static_cast<std::size_t>(t - 1)].l0.c : zero;
      const Mat& h1_prev = t ? cache_[static_cast<std::size_t>(t - 1)].l1.h : zero;
      const Mat& c1_prev = t ? cache_[static_cast<std::size_t>(t - 1)].l1.c : zero;
      layer_forward(view(p, Tensor::kInput0), view(p, Tensor::kRecur0),
                    view(p, Tensor::kBias0), sc.x, h0_prev, c0_prev, hidden,
                    sc.l0);
      layer_forward(view(p, Tensor::kInput1), view(p, Tensor::kRecur1),
                    view(p, Tensor::kBias1), sc.l0.h, h1_prev, c1_prev, hidden,
                    sc.l1);
      heads_forward(p, sc.l1.h, sc);

      sc.values.resize(shape.n_continuous, n);
      sc.gamma.resize(shape.n_choices, n);
      const auto tt = static_cast<std::size_t>(t);
      for (Eigen::Index j = 0; j < n; ++j) {
        const ControlSequence& s = seqs[static_cast<std::size_t>(j)];
        for (std::size_t k = 0; k < nk; ++k) {
          sc.values(static_cast<Eigen::Index>(k), j) = s.raw[tt * nk + k];
        }
        step_logp_(t, j) = step_log_prob(
            {sc.log_probs.col(j).data(), static_cast<std::size_t>(shape.n_choices)},
            {sc.means.col(j).data(), static_cast<std::size_t>(sc.means.rows())},
            shape.n_continuous, p.sigma, s.choices[tt],
            {sc.values.col(j).data(), nk}, p.density, sc.gamma.col(j).data());
      }
    }
  }

  const Mat& step_logp() const { return step_logp_; }

  // dstep: T x N derivative of the loss w.r.t. each step log-probability.
  void backward(const Mat& dstep, std::span<double> grad) const {
    const PolicyParameters& p = p_;
    const TaskShape& shape = p.shape();
    const int hidden = p.hidden();
    const int nk = shape.n_continuous;
    const auto n = static_cast<Eigen::Index>(seqs_.size());
    const double inv_var = 1.0 / (p.sigma * p.sigma);

    GradMap dw0 = grad_view(grad, p.spec(Tensor::kInput0));
    GradMap du0 = grad_view(grad, p.spec(Tensor::kRecur0));
    GradMap db0 = grad_view(grad, p.spec(Tensor::kBias0));
    GradMap dw1 = grad_view(grad, p.spec(Tensor::kInput1));
    GradMap du1 = grad_view(grad, p.spec(Tensor::kRecur1));
    GradMap db1 = grad_view(grad, p.spec(Tensor::kBias1));
    GradMap dws = grad_view(grad, p.spec(Tensor::kSoftmaxW));
    GradMap dbs = grad_view(grad, p.spec(Tensor::kSoftmaxB));
    GradMap dwm = grad_view(grad, p.spec(Tensor::kMeanW));
    GradMap dbm = grad_view(grad, p.spec(Tensor::kMeanB));

    const Mat zero = Mat::Zero(hidden, n);
    Mat dh0_next = zero, dc0_next = zero, dh1_next = zero, dc1_next = zero;
    Mat dlogits(shape.n_choices, n), dmeans(shape.n_choices * nk, n);
    Mat dh1, dx, dh_prev, dc_prev, dz, dh0, dx0;
    for (int t = steps_ - 1; t >= 0; --t) {
      const StepCache& sc = cache_[static_cast<std::size_t>(t)];
      for (Eigen::Index j = 0; j < n; ++j) {
        const double w = dstep(t, j);
        for (int c = 0; c < shape.n_choices; ++c) {
          const double pc = std::exp(sc.log_probs(c, j));
          dlogits(c, j) = w * (sc.gamma(c, j) - pc);
          for (int k = 0; k < nk; ++k) {
            const Eigen::Index r = c * nk + k;
            dmeans(r, j) =
                w * sc.gamma(c, j) * (sc.values(k, j) - sc.means(r, j)) * inv_var;
          }
        }
      }
      dws.noalias() += dlogits * sc.l1.h.transpose();
      dbs.col(0) += dlogits.rowwise().sum();
      dh1.noalias() = view(p, Tensor::kSoftmaxW).transpose() * dlogits;
      if (nk > 0) {
        dwm.noalias() += dmeans * sc.l1.h.transpose();
        dbm.col(0) += dmeans.rowwise().sum();
        dh1.noalias() += view(p, Tensor::kMeanW).transpose() * dmeans;
      }
      dh1 += dh1_next;

      const bool first = t == 0;
      const StepCache* prev = first ? nullptr : &cache_[static_cast<std::size_t>(t - 1)];
      layer_backward(view(p, Tensor::kInput1), view(p, Tensor::kRecur1), sc.l1,
                     sc.l0.h, first ? zero : prev->l1.h,
                     first ? zero : prev->l1.c, dh1, dc1_next, hidden, dw1, du1,
                     db1, dh0, dh_prev, dc_prev, dz);
      dh1_next = dh_prev;
      dc1_next = dc_prev;
      dh0 += dh0_next;
      layer_backward(view(p, Tensor::kInput0), view(p, Tensor::kRecur0), sc.l0,
                     sc.x, first ? zero : prev->l0.h, first ? zero : prev->l0.c,
                     dh0, dc0_next, hidden, dw0, du0, db0, dx0, dh_prev, dc_prev,
                     dz);
      dh0_next = dh_prev;
      dc0_next = dc_prev;
    }
  }

 private:
  const PolicyParameters& p_;
  std::span<const ControlSequence> seqs_;
  int steps_ = 0;
  std::vector<StepCache> cache_;
  Mat step_logp_;
};

int common_steps(std::span<const ControlSequence> batch) {
  const int steps = batch.empty() ? 0 : batch.front().steps();
  for (const auto& s : batch) {
    if (s.steps() != steps) {
      throw Error(ErrorCode::kShapeMismatch,
                  "policy: batch sequences differ in length");
    }
  }
  return steps;
}

std::ptrdiff_t block_count(std::size_t n) {
  return static_cast<std::ptrdiff_t>((n + kBlockSize - 1) / kBlockSize);
}

std::span<const ControlSequence> block_of(std::span<const ControlSequence> batch,
                                          std::ptrdiff_t b) {
  const auto begin = static_cast<std::size_t>(b) * kBlockSize;
  return batch.subspan(begin, std::min<std::size_t>(kBlockSize, batch.size() - begin));
}

}  // namespace

PolicyParameters::PolicyParameters(TaskShape shape, int hidden)
    : shape_(std::move(shape)), hidden_(hidden) {
  if (hidden_ < 1 || shape_.n_choices < 1 || shape_.n_continuous < 0 ||
      static_cast<int>(shape_.value_scale.size()) != shape_.n_continuous) {
    throw Error(ErrorCode::kShapeMismatch, "policy: invalid task shape");
  }
  const Eigen::Index h = hidden_;
  const Eigen::Index nc = shape_.n_choices;
  const Eigen::Index nm = nc * shape_.n_continuous;
  const std::pair<const char*, std::pair<Eigen::Index, Eigen::Index>> layout[] = {
      {"lstm0.input", {4 * h, shape_.input_width()}},
      {"lstm0.recurrent", {4 * h, h}},
      {"lstm0.bias", {4 * h, 1}},
      {"lstm1.input", {4 * h, h}},
      {"lstm1.recurrent", {4 * h, h}},
      {"lstm1.bias", {4 * h, 1}},
      {"softmax.weight", {nc, h}},
      {"softmax.bias", {nc, 1}},
      {"mean.weight", {nm, h}},
      {"mean.bias", {nm, 1}},
  };
  std::size_t offset = 0;
  for (const auto& [name, dims] : layout) {
    specs_.push_back({name, dims.first, dims.second, offset});
    offset += static_cast<std::size_t>(dims.first * dims.second);
  }
  values_.assign(offset, 0.0);
}

Eigen::Map<Eigen::MatrixXd> PolicyParameters::tensor(Tensor t) {
  const TensorSpec& s = spec(t);
  return Eigen::Map<Eigen::MatrixXd>(values_.data() + s.offset, s.rows, s.cols);
}

Eigen::Map<const Eigen::MatrixXd> PolicyParameters::tensor(Tensor t) const {
  const TensorSpec& s = spec(t);
  return Eigen::Map<const Eigen::MatrixXd>(values_.data() + s.offset, s.rows,
                                           s.cols);
}

PolicyParameters init_parameters(const TaskShape& shape, int hidden,
                                 std::uint64_t seed, double sigma,
                                 double forget_bias) {
  PolicyParameters p(shape, hidden);
  p.sigma = sigma;
  std::mt19937_64 rng(seed);
  const double recur_bound = 1.0 / std::sqrt(double(hidden));
  for (int t = 0; t < static_cast<int>(Tensor::kCount); ++t) {
    const Tensor id = static_cast<Tensor>(t);
    const TensorSpec& s = p.spec(id);
    const bool bias = s.cols == 1;
    const double bound = bias ? recur_bound : 1.0 / std::sqrt(double(s.cols));
    auto m = p.tensor(id);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        m(i, j) = bound * (2.0 * unit_uniform(rng) - 1.0);
      }
    }
  }
  for (Tensor b : {Tensor::kBias0, Tensor::kBias1}) {
    p.tensor(b).middleRows(hidden, hidden).setConstant(forget_bias);
  }
  return p;
}

Eigen::MatrixXd encode_inputs(const TaskShape& shape, const ControlSequence& seq) {
  Mat inputs(shape.input_width(), seq.steps());
  Mat x;
  const std::span<const ControlSequence> one(&seq, 1);
  for (int t = 0; t < seq.steps(); ++t) {
    set_input(shape, one, t, x);
    inputs.col(t) = x.col(0);
  }
  return inputs;
}

std::vector<StepOutput> forward(const PolicyParameters& params,
                                const Eigen::MatrixXd& inputs) {
  const TaskShape& shape = params.shape();
  if (inputs.rows() != shape.input_width()) {
    throw Error(ErrorCode::kShapeMismatch, "forward: input width mismatch");
  }
  const int hidden = params.hidden();
  std::vector<StepOutput> out;
  LayerCache l0, l1;
  l0.h = l0.c = l1.h = l1.c = Mat::Zero(hidden, 1);
  StepCache sc;
  for (Eigen::Index t = 0; t < inputs.cols(); ++t) {
    const Mat x = inputs.col(t);
    const Mat h0 = l0.h, c0 = l0.c, h1 = l1.h, c1 = l1.c;
    layer_forward(view(params, Tensor::kInput0), view(params, Tensor::kRecur0),
                  view(params, Tensor::kBias0), x, h0, c0, hidden, l0);
    layer_forward(view(params, Tensor::kInput1), view(params, Tensor::kRecur1),
                  view(params, Tensor::kBias1), l0.h, h1, c1, hidden, l1);
    heads_forward(params, l1.h, sc);
    StepOutput step;
    step.probs = sc.log_probs.col(0).array().exp();
    step.means = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                Eigen::Dynamic, Eigen::RowMajor>>(
        sc.means.data(), shape.n_choices, shape.n_continuous);
    out.push_back(std::move(step));
  }
  return out;
}

double step_log_prob(std::span<const double> log_probs,
                     std::span<const double> means, int n_continuous,
                     double sigma, int choice, std::span<const double> values,
                     MixtureDensity density, double* gamma) {
  const auto nc = static_cast<int>(log_probs.size());
  auto gauss = [&](int c) {
    double s = 0.0;
    for (int k = 0; k < n_continuous; ++k) {
      const double z =
          (values[static_cast<std::size_t>(k)] -
           means[static_cast<std::size_t>(c * n_continuous + k)]) / sigma;
      s += -0.5 * z * z - kHalfLog2Pi - std::log(sigma);
    }
    return s;
  };
  if (n_continuous == 0 || density == MixtureDensity::kJoint) {
    if (gamma) {
      for (int c = 0; c < nc; ++c) gamma[c] = c == choice ? 1.0 : 0.0;
    }
    const double lp = log_probs[static_cast<std::size_t>(choice)];
    return n_continuous == 0 ? lp : lp + gauss(choice);
  }
  double terms[16];
  double m = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < nc; ++c) {
    terms[c] = log_probs[static_cast<std::size_t>(c)] + gauss(c);
    m = std::max(m, terms[c]);
  }
  double sum = 0.0;
  for (int c = 0; c < nc; ++c) sum += std::exp(terms[c] - m);
  const double lse = m + std::log(sum);
  if (gamma) {
    for (int c = 0; c < nc; ++c) gamma[c] = std::exp(terms[c] - lse);
  }
  return lse;
}

Eigen::MatrixXd batch_step_log_probs(const PolicyParameters& params,
                                     std::span<const ControlSequence> batch) {
  const int steps = common_steps(batch);
  Mat out(steps, static_cast<Eigen::Index>(batch.size()));
  const std::ptrdiff_t blocks = block_count(batch.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const BlockPass pass(params, block_of(batch, b));
    out.middleCols(b * kBlockSize, pass.step_logp().cols()) = pass.step_logp();
  }
  return out;
}

double log_prob(const PolicyParameters& params, const ControlSequence& seq) {
  return batch_step_log_probs(params, {&seq, 1}).sum();
}

double loss_and_gradient(const PolicyParameters& params,
                         std::span<const ControlSequence> batch,
                         const ItemLoss& loss, std::span<double> grad) {
  if (grad.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient buffer size mismatch");
  }
  const int steps = common_steps(batch);
  const std::ptrdiff_t blocks = block_count(batch.size());
  std::vector<AlignedBuffer> block_grad(static_cast<std::size_t>(blocks));
  std::vector<double> block_loss(static_cast<std::size_t>(blocks), 0.0);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const auto seqs = block_of(batch, b);
    const BlockPass pass(params, seqs);
    Mat dstep(steps, static_cast<Eigen::Index>(seqs.size()));
    double total = 0.0;
    for (Eigen::Index j = 0; j < dstep.cols(); ++j) {
      const std::size_t item = static_cast<std::size_t>(b) * kBlockSize +
                               static_cast<std::size_t>(j);
      total += loss(item,
                    {pass.step_logp().col(j).data(), static_cast<std::size_t>(steps)},
                    {dstep.col(j).data(), static_cast<std::size_t>(steps)});
    }
    auto& g = block_grad[static_cast<std::size_t>(b)];
    g.assign(params.size(), 0.0);
    pass.backward(dstep, g);
    block_loss[static_cast<std::size_t>(b)] = total;
  }

  // Reduce in block order so the result does not depend on the thread count.
  std::fill(grad.begin(), grad.end(), 0.0);
  double total = 0.0;
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const auto& g = block_grad[static_cast<std::size_t>(b)];
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
    total += block_loss[static_cast<std::size_t>(b)];
  }
  return total;
}

std::vector<SampledSequence> sample_batch(const PolicyParameters& params,
                                          int steps,
                                          std::span<std::mt19937_64> rngs) {
  const TaskShape& shape = params.shape();
  const int hidden = params.hidden();
  const auto nk = static_cast<std::size_t>(shape.n_continuous);
  std::vector<SampledSequence> out(rngs.size());
  for (auto& s : out) {
    s.seq.choices.resize(static_cast<std::size_t>(steps));
    s.seq.raw.resize(static_cast<std::size_t>(steps) * nk);
    s.step_logprob_old.resize(static_cast<std::size_t>(steps));
  }
  const std::ptrdiff_t blocks = block_count(rngs.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const auto begin = static_cast<std::size_t>(b) * kBlockSize;
    const auto n = static_cast<Eigen::Index>(
        std::min<std::size_t>(kBlockSize, rngs.size() - begin));
    LayerCache l0, l1;
    l0.h = l0.c = l1.h = l1.c = Mat::Zero(hidden, n);
    Mat h0, c0, h1, c1;
    StepCache sc;
    std::vector<double> values(nk);
    for (int t = 0; t < steps; ++t) {
      // Inputs only read step t-1, which is already filled in.
      set_input(shape, n, t,
                [&](Eigen::Index j) -> const ControlSequence& {
                  return out[begin + static_cast<std::size_t>(j)].seq;
                },
                sc.x);
      h0 = l0.h, c0 = l0.c, h1 = l1.h, c1 = l1.c;
      layer_forward(view(params, Tensor::kInput0), view(params, Tensor::kRecur0),
                    view(params, Tensor::kBias0), sc.x, h0, c0, hidden, l0);
      layer_forward(view(params, Tensor::kInput1), view(params, Tensor::kRecur1),
                    view(params, Tensor::kBias1), l0.h, h1, c1, hidden, l1);
      heads_forward(params, l1.h, sc);
      const auto tt = static_cast<std::size_t>(t);
      for (Eigen::Index j = 0; j < n; ++j) {
        SampledSequence& s = out[begin + static_cast<std::size_t>(j)];
        std::mt19937_64& rng = rngs[begin + static_cast<std::size_t>(j)];
        const double u = unit_uniform(rng);
        int choice = shape.n_choices - 1;
        double cum = 0.0;
        for (int c = 0; c < shape.n_choices; ++c) {
          cum += std::exp(sc.log_probs(c, j));
          if (u < cum) {
            choice = c;
            break;
          }
        }
        s.seq.choices[tt] = choice;
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t k = 0; k < nk; ++k) {
          const double mu = sc.means(choice * static_cast<Eigen::Index>(nk) +
                                         static_cast<Eigen::Index>(k), j);
          values[k] = mu + params.sigma * normal(rng);
          s.seq.raw[tt * nk + k] = values[k];
        }
        s.step_logprob_old[tt] = step_log_prob(
            {sc.log_probs.col(j).data(), static_cast<std::size_t>(shape.n_choices)},
            {sc.means.col(j).data(), static_cast<std::size_t>(sc.means.rows())},
            shape.n_continuous, params.sigma, choice, values, params.density);
      }
    }
  }
  for (auto& s : out) {
    s.logprob_old = 0.0;
    for (double v : s.step_logprob_old) s.logprob_old += v;
  }
  return out;
}

SampledSequence sample_sequence(const PolicyParameters& params, int steps,
                                std::mt19937_64& rng) {
  return std::move(sample_batch(params, steps, {&rng, 1}).front());
}

}  // namespace mppo
