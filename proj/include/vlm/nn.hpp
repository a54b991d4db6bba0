#pragma once

#include "vlm/tensor.hpp"

namespace vlm {

double gelu(double x);
double gelu_grad(double x);

// Trainable tensor with an accumulated gradient of the same shape.
struct Param {
    Tensor value;
    Tensor grad;

    Param() = default;
    explicit Param(Tensor v) : value(std::move(v)), grad(Tensor::zeros(value.shape)) {}

    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
    void sgd_step(double lr) {
        for (std::int64_t i = 0; i < value.numel(); ++i)
            value[i] -= lr * grad[i];
    }
};

// y = x @ W^T + b, x is [t, in], W is [out, in].
struct Linear {
    Param weight;
    Param bias;

    Linear() = default;
    Linear(int in, int out, Rng &rng, double scale = 0.02);

    Tensor forward(const Tensor &x);
    Tensor backward(const Tensor &dy);

  private:
    Tensor x_cache_;
};

// Two-layer MLP with GELU, the shape shared by the VL projector, MoE
// experts, and the toy encoder block.
struct Mlp {
    Linear fc1;
    Linear fc2;

    Mlp() = default;
    Mlp(int in, int hidden, int out, Rng &rng);

    Tensor forward(const Tensor &x);
    Tensor backward(const Tensor &dy);

  private:
    Tensor pre_act_;
};

// Per-row RMS normalization with a learnable gain.
struct RmsNormLayer {
    Param gain;
    double eps = 1e-6;

    RmsNormLayer() = default;
    explicit RmsNormLayer(int dim) : gain(Tensor::full({dim}, 1.0)) {}

    Tensor forward(const Tensor &x); // x is [t, dim]
    Tensor backward(const Tensor &dy);

  private:
    Tensor x_cache_;
    std::vector<double> inv_rms_;
};

} // namespace vlm
