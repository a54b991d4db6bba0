#include "vlm/moe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vlm {

void MoEConfig::validate() const {
    if (top_k < 1 || top_k > n_routed)
        throw std::invalid_argument("moe: top_k must lie in [1, n_routed]");
    if (n_shared < 0)
        throw std::invalid_argument("moe: n_shared must be >= 0");
    if (bias_step < 0.0 || aux_weight < 0.0)
        throw std::invalid_argument("moe: bias_step and aux_weight must be >= 0");
}

RoutingDecision route(const Tensor &h, const Tensor &w_gate, const ExpertBias &bias,
                      const MoEConfig &cfg) {
    cfg.validate();
    if (h.rank() != 1 || w_gate.rank() != 2 || w_gate.dim(1) != h.dim(0) ||
        w_gate.dim(0) != cfg.n_routed)
        throw std::invalid_argument("route: shape mismatch");
    if (static_cast<int>(bias.b.size()) != cfg.n_routed)
        throw std::invalid_argument("route: bias size mismatch");

    Tensor z = Tensor::zeros({cfg.n_routed});
    for (int i = 0; i < cfg.n_routed; ++i) {
        double acc = 0.0;
        for (int j = 0; j < h.dim(0); ++j)
            acc += w_gate.at(i, j) * h[j];
        z[i] = acc;
    }

    RoutingDecision dec;
    dec.affinities.resize(static_cast<std::size_t>(cfg.n_routed));
    if (cfg.routing == Routing::Softmax) {
        Tensor s = softmax(z);
        std::copy(s.data.begin(), s.data.end(), dec.affinities.begin());
    } else {
        for (int i = 0; i < cfg.n_routed; ++i)
            dec.affinities[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-z[i]));
    }

    // Top-K on s + b, ties to the lower index. Bias never touches gates.
    std::vector<int> order(static_cast<std::size_t>(cfg.n_routed));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b2) {
        double sa = dec.affinities[static_cast<std::size_t>(a)] + bias.b[static_cast<std::size_t>(a)];
        double sb = dec.affinities[static_cast<std::size_t>(b2)] + bias.b[static_cast<std::size_t>(b2)];
        if (sa != sb)
            return sa > sb;
        return a < b2;
    });
    dec.selected.assign(order.begin(), order.begin() + cfg.top_k);
    std::sort(dec.selected.begin(), dec.selected.end());

    dec.gates.reserve(static_cast<std::size_t>(cfg.top_k));
    for (int id : dec.selected)
        dec.gates.push_back(dec.affinities[static_cast<std::size_t>(id)]);
    if (cfg.routing == Routing::Sigmoid) {
        double sum = std::accumulate(dec.gates.begin(), dec.gates.end(), 0.0);
        for (auto &g : dec.gates)
            g /= sum;
    }

    dec.load_counts.assign(static_cast<std::size_t>(cfg.n_routed), 0);
    for (int id : dec.selected)
        dec.load_counts[static_cast<std::size_t>(id)] = 1;
    return dec;
}

Tensor moe_forward(const Tensor &h, std::vector<Mlp> &shared_experts,
                   std::vector<Mlp> &routed_experts, const RoutingDecision &decision) {
    if (h.rank() != 1)
        throw std::invalid_argument("moe_forward expects a rank-1 token");
    for (int id : decision.selected)
        if (id < 0 || id >= static_cast<int>(routed_experts.size()))
            throw std::invalid_argument("moe_forward: selected expert out of range");
    Tensor row({1, h.dim(0)}, h.data);
    Tensor y = Tensor::zeros({h.dim(0)});
    for (auto &e : shared_experts) {
        Tensor out = e.forward(row);
        for (int j = 0; j < h.dim(0); ++j)
            y[j] += out.at(0, j);
    }
    for (std::size_t k = 0; k < decision.selected.size(); ++k) {
        Tensor out = routed_experts[static_cast<std::size_t>(decision.selected[k])].forward(row);
        for (int j = 0; j < h.dim(0); ++j)
            y[j] += decision.gates[k] * out.at(0, j);
    }
    return y;
}

void update_bias(ExpertBias &bias, const std::vector<int> &load_counts, double gamma) {
    if (gamma < 0.0)
        throw std::invalid_argument("update_bias: gamma must be >= 0");
    if (load_counts.size() != bias.b.size())
        throw std::invalid_argument("update_bias: load count size mismatch");
    double mean = std::accumulate(load_counts.begin(), load_counts.end(), 0.0) /
                  static_cast<double>(load_counts.size());
    for (std::size_t i = 0; i < bias.b.size(); ++i) {
        if (load_counts[i] > mean)
            bias.b[i] -= gamma;
        else if (load_counts[i] < mean)
            bias.b[i] += gamma;
    }
}

double aux_balance_loss(const std::vector<double> &load_fractions,
                        const std::vector<double> &mean_gate_probs, double alpha,
                        int n_routed) {
    if (load_fractions.size() != mean_gate_probs.size() ||
        static_cast<int>(load_fractions.size()) != n_routed)
        throw std::invalid_argument("aux_balance_loss: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < load_fractions.size(); ++i)
        acc += load_fractions[i] * mean_gate_probs[i];
    return alpha * n_routed * acc;
}

MoELayer::MoELayer(const MoEConfig &cfg_, Rng &rng) : cfg(cfg_), bias(cfg_.n_routed) {
    cfg.validate();
    w_gate = Param(rng.normal_tensor({cfg.n_routed, cfg.d_model}, 0.02));
    for (int i = 0; i < cfg.n_shared; ++i)
        shared.emplace_back(cfg.d_model, cfg.d_expert_hidden, cfg.d_model, rng);
    for (int i = 0; i < cfg.n_routed; ++i)
        routed.emplace_back(cfg.d_model, cfg.d_expert_hidden, cfg.d_model, rng);
}

Tensor MoELayer::forward(const Tensor &x) {
    if (x.rank() != 2 || x.dim(1) != cfg.d_model)
        throw std::invalid_argument("moe layer: input width does not match d_model");
    x_ = x;
    int t = x.dim(0), d = cfg.d_model;
    decisions_.clear();
    loads_.assign(static_cast<std::size_t>(cfg.n_routed), 0);
    Tensor y = Tensor::zeros({t, d});
    for (int i = 0; i < t; ++i) {
        Tensor h({d}, std::vector<double>(x.data.begin() + static_cast<std::ptrdiff_t>(i) * d,
                                          x.data.begin() + static_cast<std::ptrdiff_t>(i + 1) * d));
        RoutingDecision dec = route(h, w_gate.value, bias, cfg);
        for (int e = 0; e < cfg.n_routed; ++e)
            loads_[static_cast<std::size_t>(e)] += dec.load_counts[static_cast<std::size_t>(e)];
        Tensor out = moe_forward(h, shared, routed, dec);
        for (int j = 0; j < d; ++j)
            y.at(i, j) = out[j];
        decisions_.push_back(std::move(dec));
    }
    return y;
}

Tensor MoELayer::backward(const Tensor &dy) {
    int t = x_.dim(0), d = cfg.d_model;
    Tensor dx = Tensor::zeros({t, d});
    for (int i = 0; i < t; ++i) {
        const RoutingDecision &dec = decisions_[static_cast<std::size_t>(i)];
        Tensor row({1, d}, std::vector<double>(x_.data.begin() + static_cast<std::ptrdiff_t>(i) * d,
                                               x_.data.begin() + static_cast<std::ptrdiff_t>(i + 1) * d));
        Tensor drow({1, d}, std::vector<double>(dy.data.begin() + static_cast<std::ptrdiff_t>(i) * d,
                                                dy.data.begin() + static_cast<std::ptrdiff_t>(i + 1) * d));
        // Experts cache only their latest call, so re-run forward per token
        // before taking its backward.
        for (auto &e : shared) {
            e.forward(row);
            Tensor dxe = e.backward(drow);
            for (int j = 0; j < d; ++j)
                dx.at(i, j) += dxe.at(0, j);
        }
        std::vector<double> dgate(dec.selected.size(), 0.0);
        for (std::size_t k = 0; k < dec.selected.size(); ++k) {
            Mlp &e = routed[static_cast<std::size_t>(dec.selected[k])];
            Tensor out = e.forward(row);
            for (int j = 0; j < d; ++j)
                dgate[k] += drow.at(0, j) * out.at(0, j);
            Tensor scaled = drow;
            for (auto &v : scaled.data)
                v *= dec.gates[k];
            Tensor dxe = e.backward(scaled);
            for (int j = 0; j < d; ++j)
                dx.at(i, j) += dxe.at(0, j);
        }
        // Gate gradient through the routing function, selection frozen.
        std::vector<double> dz(static_cast<std::size_t>(cfg.n_routed), 0.0);
        if (cfg.routing == Routing::Softmax) {
            for (std::size_t k = 0; k < dec.selected.size(); ++k) {
                double s_k = dec.affinities[static_cast<std::size_t>(dec.selected[k])];
                for (int j = 0; j < cfg.n_routed; ++j) {
                    double delta = (j == dec.selected[k]) ? 1.0 : 0.0;
                    dz[static_cast<std::size_t>(j)] +=
                        dgate[k] * s_k * (delta - dec.affinities[static_cast<std::size_t>(j)]);
                }
            }
        } else {
            double sum = 0.0;
            for (int id : dec.selected)
                sum += dec.affinities[static_cast<std::size_t>(id)];
            for (std::size_t k = 0; k < dec.selected.size(); ++k) {
                for (std::size_t l = 0; l < dec.selected.size(); ++l) {
                    int j = dec.selected[l];
                    double s_j = dec.affinities[static_cast<std::size_t>(j)];
                    double delta = (k == l) ? 1.0 : 0.0;
                    // d g_k / d s_j for renormalized sigmoid gates
                    double dg_ds = (delta - dec.gates[k]) / sum;
                    double ds_dz = s_j * (1.0 - s_j);
                    dz[static_cast<std::size_t>(j)] += dgate[k] * dg_ds * ds_dz;
                }
            }
        }
        for (int e = 0; e < cfg.n_routed; ++e) {
            double g = dz[static_cast<std::size_t>(e)];
            if (g == 0.0)
                continue;
            for (int j = 0; j < d; ++j) {
                w_gate.grad.at(e, j) += g * row.at(0, j);
                dx.at(i, j) += g * w_gate.value.at(e, j);
            }
        }
    }
    return dx;
}

std::vector<Param *> MoELayer::params() {
    std::vector<Param *> out{&w_gate};
    for (auto &e : shared) {
        out.push_back(&e.fc1.weight);
        out.push_back(&e.fc1.bias);
        out.push_back(&e.fc2.weight);
        out.push_back(&e.fc2.bias);
    }
    for (auto &e : routed) {
        out.push_back(&e.fc1.weight);
        out.push_back(&e.fc1.bias);
        out.push_back(&e.fc2.weight);
        out.push_back(&e.fc2.bias);
    }
    return out;
}

} // namespace vlm
