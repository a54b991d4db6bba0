#include "vlm/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace vlm {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_grad(double x) {
    double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
    double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    return cdf + x * pdf;
}

Linear::Linear(int in, int out, Rng &rng, double scale)
    : weight(rng.normal_tensor({out, in}, scale)), bias(Tensor::zeros({out})) {}

Tensor Linear::forward(const Tensor &x) {
    if (x.rank() != 2 || x.dim(1) != weight.value.dim(1))
        throw std::invalid_argument("linear: input width does not match weight");
    x_cache_ = x;
    int t = x.dim(0), in = x.dim(1), out = weight.value.dim(0);
    Tensor y = Tensor::zeros({t, out});
    for (int i = 0; i < t; ++i) {
        for (int o = 0; o < out; ++o) {
            double acc = bias.value[o];
            for (int j = 0; j < in; ++j)
                acc += weight.value.at(o, j) * x.at(i, j);
            y.at(i, o) = acc;
        }
    }
    return y;
}

Tensor Linear::backward(const Tensor &dy) {
    int t = x_cache_.dim(0), in = x_cache_.dim(1), out = weight.value.dim(0);
    Tensor dx = Tensor::zeros({t, in});
    for (int i = 0; i < t; ++i) {
        for (int o = 0; o < out; ++o) {
            double g = dy.at(i, o);
            bias.grad[o] += g;
            for (int j = 0; j < in; ++j) {
                weight.grad.at(o, j) += g * x_cache_.at(i, j);
                dx.at(i, j) += g * weight.value.at(o, j);
            }
        }
    }
    return dx;
}

Mlp::Mlp(int in, int hidden, int out, Rng &rng)
    : fc1(in, hidden, rng), fc2(hidden, out, rng) {}

Tensor Mlp::forward(const Tensor &x) {
    pre_act_ = fc1.forward(x);
    Tensor h = pre_act_;
    for (auto &v : h.data)
        v = gelu(v);
    return fc2.forward(h);
}

Tensor Mlp::backward(const Tensor &dy) {
    Tensor dh = fc2.backward(dy);
    for (std::int64_t i = 0; i < dh.numel(); ++i)
        dh[i] *= gelu_grad(pre_act_[i]);
    return fc1.backward(dh);
}

Tensor RmsNormLayer::forward(const Tensor &x) {
    if (x.rank() != 2 || x.dim(1) != gain.value.dim(0))
        throw std::invalid_argument("rms_norm: input width does not match gain");
    x_cache_ = x;
    int t = x.dim(0), d = x.dim(1);
    inv_rms_.assign(static_cast<std::size_t>(t), 0.0);
    Tensor y = Tensor::zeros({t, d});
    for (int i = 0; i < t; ++i) {
        double ms = 0.0;
        for (int j = 0; j < d; ++j)
            ms += x.at(i, j) * x.at(i, j);
        ms /= d;
        double inv = 1.0 / std::sqrt(ms + eps);
        inv_rms_[static_cast<std::size_t>(i)] = inv;
        for (int j = 0; j < d; ++j)
            y.at(i, j) = gain.value[j] * x.at(i, j) * inv;
    }
    return y;
}

Tensor RmsNormLayer::backward(const Tensor &dy) {
    int t = x_cache_.dim(0), d = x_cache_.dim(1);
    Tensor dx = Tensor::zeros({t, d});
    for (int i = 0; i < t; ++i) {
        double inv = inv_rms_[static_cast<std::size_t>(i)];
        // d(inv)/dx_j = -inv^3 * x_j / d
        double dot = 0.0;
        for (int j = 0; j < d; ++j) {
            gain.grad[j] += dy.at(i, j) * x_cache_.at(i, j) * inv;
            dot += dy.at(i, j) * gain.value[j] * x_cache_.at(i, j);
        }
        double c = dot * inv * inv * inv / d;
        for (int j = 0; j < d; ++j)
            dx.at(i, j) = dy.at(i, j) * gain.value[j] * inv - c * x_cache_.at(i, j);
    }
    return dx;
}

} // namespace vlm
