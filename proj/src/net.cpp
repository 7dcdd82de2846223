#include "hamppo/net.hpp"

#include <cmath>
#include <stdexcept>

namespace hamppo {

Eigen::MatrixXd orthogonal_matrix(int rows, int cols, Rng& rng, double gain) {
  const int big = std::max(rows, cols);
  const int small = std::min(rows, cols);
  Eigen::MatrixXd a(big, small);
  for (int i = 0; i < big; ++i) {
    for (int j = 0; j < small; ++j) a(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(small);
  for (int j = 0; j < small; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  q *= gain;
  if (rows < cols) return q.transpose();
  return q;
}

Mlp::Mlp(const std::vector<int>& widths, bool relu_last) : relu_after_last(relu_last) {
  if (widths.size() < 2) throw std::invalid_argument("an mlp needs at least one layer");
  layers.reserve(widths.size() - 1);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    LinearLayer layer;
    layer.W = Eigen::MatrixXd::Zero(widths[i + 1], widths[i]);
    layer.b = Eigen::VectorXd::Zero(widths[i + 1]);
    layers.push_back(std::move(layer));
  }
}

void Mlp::init_orthogonal(Rng& rng, double hidden_gain, double final_gain) {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const double gain = (k + 1 == layers.size()) ? final_gain : hidden_gain;
    layers[k].W = orthogonal_matrix(static_cast<int>(layers[k].W.rows()),
                                    static_cast<int>(layers[k].W.cols()), rng, gain);
    layers[k].b.setZero();
  }
}

void Mlp::zero() {
  for (auto& layer : layers) {
    layer.W.setZero();
    layer.b.setZero();
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd h = X;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    h = (h * layers[k].W.transpose()).rowwise() + layers[k].b.transpose();
    if (relu_at(k)) h = h.cwiseMax(0.0);
  }
  return h;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& X, MlpCache& cache) const {
  cache.inputs.assign(layers.size(), {});
  cache.pre.assign(layers.size(), {});
  Eigen::MatrixXd h = X;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    cache.inputs[k] = h;
    cache.pre[k] = (h * layers[k].W.transpose()).rowwise() + layers[k].b.transpose();
    h = relu_at(k) ? cache.pre[k].cwiseMax(0.0) : cache.pre[k];
  }
  return h;
}

Eigen::MatrixXd Mlp::backward(const MlpCache& cache, const Eigen::MatrixXd& d_out,
                              Mlp& grad) const {
  if (grad.layers.size() != layers.size())
    throw std::invalid_argument("gradient mlp has a different shape");
  Eigen::MatrixXd d = d_out;
  for (std::size_t idx = layers.size(); idx-- > 0;) {
    if (relu_at(idx)) {
      d = d.array() * (cache.pre[idx].array() > 0.0).cast<double>();
    }
    grad.layers[idx].W.noalias() += d.transpose() * cache.inputs[idx];
    grad.layers[idx].b.noalias() += d.colwise().sum().transpose();
    d = d * layers[idx].W;
  }
  return d;
}

std::vector<int> Mlp::widths() const {
  std::vector<int> w;
  if (layers.empty()) return w;
  w.push_back(static_cast<int>(layers.front().W.cols()));
  for (const auto& layer : layers) w.push_back(static_cast<int>(layer.W.rows()));
  return w;
}

std::vector<TensorSpan> tensor_spans(Mlp& mlp) {
  std::vector<TensorSpan> spans;
  for (auto& layer : mlp.layers) {
    spans.push_back({layer.W.data(), layer.W.size()});
    spans.push_back({layer.b.data(), layer.b.size()});
  }
  return spans;
}

std::vector<TensorSpan> tensor_spans(LinearLayer& layer) {
  return {{layer.W.data(), layer.W.size()}, {layer.b.data(), layer.b.size()}};
}

double global_norm(const std::vector<TensorSpan>& tensors) {
  double sum = 0.0;
  for (const auto& t : tensors) {
    for (std::ptrdiff_t i = 0; i < t.size; ++i) sum += t.data[i] * t.data[i];
  }
  return std::sqrt(sum);
}

void scale_tensors(const std::vector<TensorSpan>& tensors, double factor) {
  for (const auto& t : tensors) {
    for (std::ptrdiff_t i = 0; i < t.size; ++i) t.data[i] *= factor;
  }
}

void zero_tensors(const std::vector<TensorSpan>& tensors) {
  for (const auto& t : tensors) {
    for (std::ptrdiff_t i = 0; i < t.size; ++i) t.data[i] = 0.0;
  }
}

void AdamOptimizer::attach(const std::vector<TensorSpan>& params) {
  std::ptrdiff_t total = 0;
  for (const auto& p : params) total += p.size;
  m_.assign(static_cast<std::size_t>(total), 0.0);
  v_.assign(static_cast<std::size_t>(total), 0.0);
  step_count_ = 0;
}

void AdamOptimizer::step(const std::vector<TensorSpan>& params,
                         const std::vector<TensorSpan>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("parameter and gradient span lists differ");
  ++step_count_;
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  std::size_t offset = 0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].size != grads[t].size)
      throw std::invalid_argument("parameter and gradient tensor shapes differ");
    for (std::ptrdiff_t i = 0; i < params[t].size; ++i, ++offset) {
      const double g = grads[t].data[i];
      m_[offset] = beta1_ * m_[offset] + (1.0 - beta1_) * g;
      v_[offset] = beta2_ * v_[offset] + (1.0 - beta2_) * g * g;
      const double m_hat = m_[offset] / bias1;
      const double v_hat = v_[offset] / bias2;
      params[t].data[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
  if (offset != m_.size()) throw std::logic_error("optimizer state does not match parameters");
}

void AdamOptimizer::restore(std::vector<double> m, std::vector<double> v, long step_count) {
  if (m.size() != v.size()) throw std::invalid_argument("moment vectors differ in size");
  m_ = std::move(m);
  v_ = std::move(v);
  step_count_ = step_count;
}

}  // namespace hamppo
