#include "hierfolio/neural.hpp"

#include <cmath>

#include <fmt/format.h>

#include "hierfolio/errors.hpp"

namespace hierfolio {
namespace {

void fill_uniform(Mat& m, double bound, Rng& rng) {
  // row-major fill keeps the draw order independent of Eigen's storage order
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
  }
}

void fill_uniform(Vec& v, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(-bound, bound);
}

Vec relu(const Vec& z) { return z.cwiseMax(0.0); }

Vec relu_mask(const Vec& z) { return (z.array() > 0.0).cast<double>().matrix(); }

nlohmann::json matrix_to_json(const Mat& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  }
  return flat;
}

Mat matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols, const char* name) {
  const auto flat = j.get<std::vector<double>>();
  if (flat.size() != rows * cols) {
    throw DomainError(fmt::format("checkpoint block {} has {} values, expected {}", name,
                                  flat.size(), rows * cols));
  }
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = flat[r * cols + c];
  }
  return m;
}

Vec vector_from_json(const nlohmann::json& j, std::size_t n, const char* name) {
  const auto flat = j.get<std::vector<double>>();
  if (flat.size() != n) {
    throw DomainError(fmt::format("checkpoint block {} has {} values, expected {}", name, flat.size(), n));
  }
  return Eigen::Map<const Vec>(flat.data(), static_cast<Eigen::Index>(n));
}

}  // namespace

Mlp3 Mlp3::zeros(std::size_t input, std::size_t hidden1, std::size_t hidden2, std::size_t output,
                 OutputHead head) {
  if (input == 0 || hidden1 == 0 || hidden2 == 0 || output == 0) {
    throw DomainError("Mlp3 dimensions must be positive");
  }
  Mlp3 net;
  net.w1 = Mat::Zero(hidden1, input);
  net.b1 = Vec::Zero(hidden1);
  net.w2 = Mat::Zero(hidden2, hidden1);
  net.b2 = Vec::Zero(hidden2);
  net.w3 = Mat::Zero(output, hidden2);
  net.b3 = Vec::Zero(output);
  net.head = head;
  return net;
}

Mlp3 Mlp3::initialized(std::size_t input, std::size_t hidden1, std::size_t hidden2,
                       std::size_t output, OutputHead head, Rng& rng) {
  Mlp3 net = zeros(input, hidden1, hidden2, output, head);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(input));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden1));
  const double s3 = 1.0 / std::sqrt(static_cast<double>(hidden2));
  fill_uniform(net.w1, s1, rng);
  fill_uniform(net.b1, s1, rng);
  fill_uniform(net.w2, s2, rng);
  fill_uniform(net.b2, s2, rng);
  fill_uniform(net.w3, s3, rng);
  fill_uniform(net.b3, s3, rng);
  return net;
}

std::size_t Mlp3::parameter_count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size());
}

Mlp3 Mlp3::zeros_like() const { return zeros(input_dim(), hidden1(), hidden2(), output_dim(), head); }

bool Mlp3::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite() && w3.allFinite() &&
         b3.allFinite();
}

bool operator==(const Mlp3& a, const Mlp3& b) {
  auto same = [](const auto& x, const auto& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && (x.size() == 0 || x == y);
  };
  return a.head == b.head && same(a.w1, b.w1) && same(a.b1, b.b1) && same(a.w2, b.w2) &&
         same(a.b2, b.b2) && same(a.w3, b.w3) && same(a.b3, b.b3);
}

Vec softmax(const Vec& logits) {
  const double m = logits.maxCoeff();
  Vec e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

ForwardCache forward_cached(const Mlp3& net, const Vec& x) {
  if (static_cast<std::size_t>(x.size()) != net.input_dim()) {
    throw DomainError(fmt::format("network expects input of length {}, got {}", net.input_dim(), x.size()));
  }
  ForwardCache c;
  c.input = x;
  c.z1 = net.w1 * x + net.b1;
  c.a1 = relu(c.z1);
  c.z2 = net.w2 * c.a1 + net.b2;
  c.a2 = relu(c.z2);
  c.z3 = net.w3 * c.a2 + net.b3;
  c.output = net.head == OutputHead::softmax ? softmax(c.z3) : c.z3;
  return c;
}

Vec forward(const Mlp3& net, const Vec& x) { return forward_cached(net, x).output; }

Mat forward_batch(const Mlp3& net, const Mat& inputs) {
  Mat out(inputs.rows(), static_cast<Eigen::Index>(net.output_dim()));
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) out.row(i) = forward(net, inputs.row(i).transpose()).transpose();
  return out;
}

void accumulate_backward(const Mlp3& net, const ForwardCache& cache, const Vec& d_output,
                         Mlp3Grad& grad, Vec* d_input) {
  Vec d_z3;
  if (net.head == OutputHead::softmax) {
    const Vec& p = cache.output;
    d_z3 = p.cwiseProduct((d_output.array() - p.dot(d_output)).matrix());
  } else {
    d_z3 = d_output;
  }
  grad.w3.noalias() += d_z3 * cache.a2.transpose();
  grad.b3 += d_z3;
  const Vec d_z2 = (net.w3.transpose() * d_z3).cwiseProduct(relu_mask(cache.z2));
  grad.w2.noalias() += d_z2 * cache.a1.transpose();
  grad.b2 += d_z2;
  const Vec d_z1 = (net.w2.transpose() * d_z2).cwiseProduct(relu_mask(cache.z1));
  grad.w1.noalias() += d_z1 * cache.input.transpose();
  grad.b1 += d_z1;
  if (d_input != nullptr) *d_input = net.w1.transpose() * d_z1;
}

void TrainBatch::validate() const {
  if (inputs.rows() != targets.rows() || inputs.rows() == 0) {
    throw DomainError("training batch needs matching, nonzero row counts");
  }
  for (Eigen::Index i = 0; i < targets.rows(); ++i) {
    if ((targets.row(i).array() < 0.0).any() || std::abs(targets.row(i).sum() - 1.0) > 1e-6) {
      throw DomainError(fmt::format("target row {} is not on the simplex", i));
    }
  }
}

double mse_loss(const Mat& pred, const Mat& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw DomainError("mse_loss: prediction and target shapes differ");
  }
  if (pred.rows() == 0) throw DomainError("mse_loss: empty batch");
  return (pred - target).squaredNorm() / static_cast<double>(pred.rows());
}

Mlp3Grad backward(const Mlp3& net, const TrainBatch& batch) {
  if (batch.inputs.rows() != batch.targets.rows() ||
      static_cast<std::size_t>(batch.targets.cols()) != net.output_dim()) {
    throw DomainError("backward: batch shape does not match the network");
  }
  Mlp3Grad grad = net.zeros_like();
  const double scale = 2.0 / static_cast<double>(batch.inputs.rows());
  for (Eigen::Index i = 0; i < batch.inputs.rows(); ++i) {
    const auto cache = forward_cached(net, batch.inputs.row(i).transpose());
    const Vec d_out = scale * (cache.output - batch.targets.row(i).transpose());
    accumulate_backward(net, cache, d_out, grad);
  }
  return grad;
}

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, std::int64_t step, const AdamConfig& cfg) {
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    param[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

OptimState OptimState::for_net(const Mlp3& net, AdamConfig config) {
  return OptimState{config, net.zeros_like(), net.zeros_like(), 0};
}

void optim_step(Mlp3& net, const Mlp3Grad& grad, OptimState& state) {
  if (!grad.all_finite()) throw DivergenceError("non-finite gradient in optimizer step");
  ++state.step;
  // Walk the six blocks of net, grad, m and v in lockstep.
  Mlp3 g = grad;
  std::vector<std::span<double>> p_blocks, g_blocks, m_blocks, v_blocks;
  net.for_each_block([&](std::span<double> b) { p_blocks.push_back(b); });
  g.for_each_block([&](std::span<double> b) { g_blocks.push_back(b); });
  state.m.for_each_block([&](std::span<double> b) { m_blocks.push_back(b); });
  state.v.for_each_block([&](std::span<double> b) { v_blocks.push_back(b); });
  for (std::size_t i = 0; i < p_blocks.size(); ++i) {
    if (p_blocks[i].size() != g_blocks[i].size() || p_blocks[i].size() != m_blocks[i].size()) {
      throw DomainError("optim_step: gradient shape does not match the network");
    }
    adam_update(p_blocks[i], g_blocks[i], m_blocks[i], v_blocks[i], state.step, state.config);
  }
}

void soft_update(Mlp3& target, const Mlp3& source, double tau) {
  target.w1 = tau * source.w1 + (1.0 - tau) * target.w1;
  target.b1 = tau * source.b1 + (1.0 - tau) * target.b1;
  target.w2 = tau * source.w2 + (1.0 - tau) * target.w2;
  target.b2 = tau * source.b2 + (1.0 - tau) * target.b2;
  target.w3 = tau * source.w3 + (1.0 - tau) * target.w3;
  target.b3 = tau * source.b3 + (1.0 - tau) * target.b3;
}

nlohmann::json to_json(const Mlp3& net) {
  return {
      {"format", "hierfolio.mlp3"},
      {"version", 1},
      {"head", net.head == OutputHead::softmax ? "softmax" : "linear"},
      {"shape", {net.input_dim(), net.hidden1(), net.hidden2(), net.output_dim()}},
      {"w1", matrix_to_json(net.w1)},
      {"b1", matrix_to_json(net.b1)},
      {"w2", matrix_to_json(net.w2)},
      {"b2", matrix_to_json(net.b2)},
      {"w3", matrix_to_json(net.w3)},
      {"b3", matrix_to_json(net.b3)},
  };
}

Mlp3 mlp3_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "hierfolio.mlp3" || j.value("version", 0) != 1) {
    throw DomainError("not a version-1 hierfolio.mlp3 checkpoint");
  }
  const auto shape = j.at("shape").get<std::vector<std::size_t>>();
  if (shape.size() != 4) throw DomainError("mlp3 checkpoint shape must have 4 entries");
  const std::string head = j.at("head").get<std::string>();
  if (head != "softmax" && head != "linear") throw DomainError("unknown output head '" + head + "'");
  Mlp3 net;
  net.head = head == "softmax" ? OutputHead::softmax : OutputHead::linear;
  net.w1 = matrix_from_json(j.at("w1"), shape[1], shape[0], "w1");
  net.b1 = vector_from_json(j.at("b1"), shape[1], "b1");
  net.w2 = matrix_from_json(j.at("w2"), shape[2], shape[1], "w2");
  net.b2 = vector_from_json(j.at("b2"), shape[2], "b2");
  net.w3 = matrix_from_json(j.at("w3"), shape[3], shape[2], "w3");
  net.b3 = vector_from_json(j.at("b3"), shape[3], "b3");
  return net;
}

}  // namespace hierfolio
