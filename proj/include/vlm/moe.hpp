#pragma once

#include "vlm/nn.hpp"

#include <vector>

namespace vlm {

enum class Routing { Softmax, Sigmoid };

struct MoEConfig {
    int n_routed = 8;
    int n_shared = 2;
    int top_k = 2;
    Routing routing = Routing::Softmax;
    bool bias_enabled = false;
    double bias_step = 0.0;  // gamma
    double aux_weight = 0.0; // alpha
    int d_model = 32;
    int d_expert_hidden = 32;

    void validate() const;
};

// Persistent per-expert selection bias; selection-only, never gates.
struct ExpertBias {
    std::vector<double> b;

    explicit ExpertBias(int n_routed = 0) : b(static_cast<std::size_t>(n_routed), 0.0) {}
};

struct RoutingDecision {
    std::vector<double> affinities;  // s, length n_routed
    std::vector<int> selected;       // ascending expert ids
    std::vector<double> gates;       // aligned with selected
    std::vector<int> load_counts;    // per-expert tokens this step
};

// Affinities from softmax/sigmoid of W_gate h; top-K on s + b with ties to
// the lower index; gates from s only (sigmoid gates renormalized to sum 1).
RoutingDecision route(const Tensor &h, const Tensor &w_gate, const ExpertBias &bias,
                      const MoEConfig &cfg);

// y = sum of shared experts + gate-weighted selected routed experts.
Tensor moe_forward(const Tensor &h, std::vector<Mlp> &shared_experts,
                   std::vector<Mlp> &routed_experts, const RoutingDecision &decision);

// Sign rule: overloaded experts step down by gamma, underloaded step up.
void update_bias(ExpertBias &bias, const std::vector<int> &load_counts, double gamma);

// alpha * n_routed * sum_i f_i * P_i
double aux_balance_loss(const std::vector<double> &load_fractions,
                        const std::vector<double> &mean_gate_probs, double alpha,
                        int n_routed);

// Full trainable MoE block: routing, shared + routed experts, with gate
// gradients flowing into the router under a frozen top-K selection.
struct MoELayer {
    MoEConfig cfg;
    Param w_gate;
    std::vector<Mlp> shared;
    std::vector<Mlp> routed;
    ExpertBias bias;

    MoELayer() = default;
    MoELayer(const MoEConfig &cfg_, Rng &rng);

    Tensor forward(const Tensor &x); // x is [t, d_model]
    Tensor backward(const Tensor &dy);

    std::vector<Param *> params();

    // Loads accumulated by the most recent forward.
    const std::vector<int> &last_load_counts() const { return loads_; }

  private:
    Tensor x_;
    std::vector<RoutingDecision> decisions_;
    std::vector<int> loads_;
};

} // namespace vlm
