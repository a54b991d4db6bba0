#pragma once

#include "vlm/nn.hpp"

#include <vector>

namespace vlm {

enum class AttnMode { MHA, MLA };

struct AttnConfig {
    int n_heads = 1;
    int d_head = 1;
    AttnMode mode = AttnMode::MHA;
    int rank = 0;   // MLA latent dim
    int d_rope = 0; // decoupled rotary key dim, shared across heads, even
    int max_len = 4096;

    int d_model() const { return n_heads * d_head; }
    void validate() const;
};

// Per-token cached decoding state. MHA keeps full per-head K/V; MLA keeps
// only the latent and the shared rotary key.
struct KVCache {
    AttnMode mode = AttnMode::MHA;
    std::vector<std::vector<double>> keys;      // MHA, [n_heads*d_head] each
    std::vector<std::vector<double>> values;    // MHA
    std::vector<std::vector<double>> latents;   // MLA, [rank] each
    std::vector<std::vector<double>> rope_keys; // MLA, [d_rope] each

    explicit KVCache(AttnMode m = AttnMode::MHA) : mode(m) {}
    std::size_t size() const {
        return mode == AttnMode::MHA ? keys.size() : latents.size();
    }
};

struct AttnWeights {
    // MHA: wq/wk/wv/wo all [d_model, d_model].
    // MLA: wq [d_model, d_model], wqr [n_heads*d_rope, d_model],
    //      wdkv [rank, d_model], wkr [d_rope, d_model],
    //      wuk/wuv [n_heads*d_head, rank], wo [d_model, d_model].
    Tensor wq, wk, wv, wo, wqr, wdkv, wkr, wuk, wuv;

    static AttnWeights random(const AttnConfig &cfg, Rng &rng, double scale = 0.02);
};

// Interleaved-pair rotation at the given position, base 10000. dim must be
// even; sign < 0 applies the inverse rotation.
void rotary_inplace(double *v, int dim, int position, int sign = 1);

// Decode-style forward over a cache: x holds new tokens at positions
// cache.size()..cache.size()+t-1; the cache is extended in place.
Tensor attention_forward(const Tensor &x, const AttnConfig &cfg,
                         const AttnWeights &weights, KVCache &cache,
                         bool causal = true);

// Cached floats per token: MHA 2*n_heads*d_head, MLA rank + d_rope.
int kv_cache_floats_per_token(const AttnConfig &cfg);

// Training-path attention (full sequence, positions from 0, no cache)
// with a hand-written backward.
struct AttentionLayer {
    AttnConfig cfg;
    Param wq, wk, wv, wo, wqr, wdkv, wkr, wuk, wuv;

    AttentionLayer() = default;
    AttentionLayer(const AttnConfig &cfg_, Rng &rng, double scale = 0.02);

    Tensor forward(const Tensor &x, bool causal = true);
    Tensor backward(const Tensor &dy);

    std::vector<Param *> params();

  private:
    bool causal_ = true;
    Tensor x_, q_, qr_, c_, kr_, k_, v_, probs_, heads_out_;
};

} // namespace vlm
