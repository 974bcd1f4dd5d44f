#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hierfolio/rng.hpp"

namespace hierfolio {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class OutputHead { softmax, linear };

// Three dense layers with ReLU hidden activations:
//   head(W3 * relu(W2 * relu(W1 * x + b1) + b2) + b3)
// The softmax head yields portfolio weights; critics use the linear head.
// Gradients share this layout (see Mlp3Grad).
struct Mlp3 {
  Mat w1, w2, w3;
  Vec b1, b2, b3;
  OutputHead head = OutputHead::softmax;

  static Mlp3 zeros(std::size_t input, std::size_t hidden1, std::size_t hidden2,
                    std::size_t output, OutputHead head = OutputHead::softmax);
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static Mlp3 initialized(std::size_t input, std::size_t hidden1, std::size_t hidden2,
                          std::size_t output, OutputHead head, Rng& rng);

  std::size_t input_dim() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden1() const { return static_cast<std::size_t>(w1.rows()); }
  std::size_t hidden2() const { return static_cast<std::size_t>(w2.rows()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(w3.rows()); }
  std::size_t parameter_count() const;

  Mlp3 zeros_like() const;
  bool all_finite() const;
  // Applies f(param_block, other_block) over the six blocks in a fixed order.
  template <class F>
  void for_each_block(Mlp3& other, F&& f);
  template <class F>
  void for_each_block(F&& f);

  friend bool operator==(const Mlp3& a, const Mlp3& b);
};

using Mlp3Grad = Mlp3;

namespace detail {
template <class M>
std::span<double> flat(M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
}  // namespace detail

template <class F>
void Mlp3::for_each_block(Mlp3& other, F&& f) {
  f(detail::flat(w1), detail::flat(other.w1));
  f(detail::flat(b1), detail::flat(other.b1));
  f(detail::flat(w2), detail::flat(other.w2));
  f(detail::flat(b2), detail::flat(other.b2));
  f(detail::flat(w3), detail::flat(other.w3));
  f(detail::flat(b3), detail::flat(other.b3));
}

template <class F>
void Mlp3::for_each_block(F&& f) {
  f(detail::flat(w1));
  f(detail::flat(b1));
  f(detail::flat(w2));
  f(detail::flat(b2));
  f(detail::flat(w3));
  f(detail::flat(b3));
}

Vec softmax(const Vec& logits);

struct ForwardCache {
  Vec input;
  Vec z1, a1, z2, a2, z3;
  Vec output;
};

Vec forward(const Mlp3& net, const Vec& x);
ForwardCache forward_cached(const Mlp3& net, const Vec& x);
// Row-wise forward over a [B x d] batch.
Mat forward_batch(const Mlp3& net, const Mat& inputs);

// Adds d(loss)/d(params) into `grad` given d(loss)/d(output) for one
// sample; writes d(loss)/d(input) when `d_input` is non-null. For the
// softmax head `d_output` is taken w.r.t. the probabilities.
void accumulate_backward(const Mlp3& net, const ForwardCache& cache, const Vec& d_output,
                         Mlp3Grad& grad, Vec* d_input = nullptr);

struct TrainBatch {
  Mat inputs;   // [B x d]
  Mat targets;  // [B x k], rows on the simplex
  void validate() const;
};

// (1/B) * sum_i ||pred_i - target_i||^2
double mse_loss(const Mat& pred, const Mat& target);
// Exact gradient of mse_loss(forward_batch(net, X), targets).
Mlp3Grad backward(const Mlp3& net, const TrainBatch& batch);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam on one flat parameter block.
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, std::int64_t step, const AdamConfig& cfg);

struct OptimState {
  AdamConfig config;
  Mlp3 m;
  Mlp3 v;
  std::int64_t step = 0;

  static OptimState for_net(const Mlp3& net, AdamConfig config = {});
};

// Throws DivergenceError on a non-finite gradient (parameters untouched).
void optim_step(Mlp3& net, const Mlp3Grad& grad, OptimState& state);

// Polyak averaging: target <- tau * source + (1 - tau) * target.
void soft_update(Mlp3& target, const Mlp3& source, double tau);

nlohmann::json to_json(const Mlp3& net);
Mlp3 mlp3_from_json(const nlohmann::json& j);

}  // namespace hierfolio
