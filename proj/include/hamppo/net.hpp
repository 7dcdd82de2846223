#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hamppo/rng.hpp"

namespace hamppo {

struct LinearLayer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
};

// Deterministic orthogonal matrix (QR of a normal draw, sign-fixed).
Eigen::MatrixXd orthogonal_matrix(int rows, int cols, Rng& rng, double gain);

struct MlpCache {
  std::vector<Eigen::MatrixXd> inputs;  // per-layer input activations
  std::vector<Eigen::MatrixXd> pre;     // per-layer pre-activations
};

// Fully connected stack, samples as rows. ReLU after every layer when
// relu_after_last is set, otherwise after every layer but the final one.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::vector<int>& widths, bool relu_after_last);

  void init_orthogonal(Rng& rng, double hidden_gain, double final_gain);
  void zero();

  Eigen::MatrixXd forward(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& X, MlpCache& cache) const;
  // Accumulates parameter gradients into `grad` (same shapes) and returns the
  // gradient w.r.t. the input.
  Eigen::MatrixXd backward(const MlpCache& cache, const Eigen::MatrixXd& d_out, Mlp& grad) const;

  std::vector<int> widths() const;

  std::vector<LinearLayer> layers;
  bool relu_after_last = false;

 private:
  bool relu_at(std::size_t layer) const {
    return relu_after_last || layer + 1 < layers.size();
  }
};

struct TensorSpan {
  double* data = nullptr;
  std::ptrdiff_t size = 0;
};

std::vector<TensorSpan> tensor_spans(Mlp& mlp);
std::vector<TensorSpan> tensor_spans(LinearLayer& layer);

double global_norm(const std::vector<TensorSpan>& tensors);
void scale_tensors(const std::vector<TensorSpan>& tensors, double factor);
void zero_tensors(const std::vector<TensorSpan>& tensors);

class AdamOptimizer {
 public:
  explicit AdamOptimizer(double lr = 3e-4, double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void attach(const std::vector<TensorSpan>& params);
  void step(const std::vector<TensorSpan>& params, const std::vector<TensorSpan>& grads);

  long step_count() const { return step_count_; }
  double learning_rate() const { return lr_; }

  // Flat optimizer state for checkpointing.
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  void restore(std::vector<double> m, std::vector<double> v, long step_count);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  long step_count_ = 0;
};

}  // namespace hamppo
