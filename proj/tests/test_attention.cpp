#include "vlm/attention.hpp"

#include <doctest.h>

#include <stdexcept>

#include <cmath>

using namespace vlm;

namespace {

AttnConfig mha_cfg(int heads = 2, int d_head = 4) {
    AttnConfig cfg;
    cfg.n_heads = heads;
    cfg.d_head = d_head;
    cfg.mode = AttnMode::MHA;
    return cfg;
}

AttnConfig mla_cfg(int heads = 2, int d_head = 4, int rank = 6, int d_rope = 4) {
    AttnConfig cfg;
    cfg.n_heads = heads;
    cfg.d_head = d_head;
    cfg.mode = AttnMode::MLA;
    cfg.rank = rank;
    cfg.d_rope = d_rope;
    return cfg;
}

AttnWeights weights_from_layer(const AttentionLayer &layer) {
    AttnWeights w;
    w.wq = layer.wq.value;
    w.wk = layer.wk.value;
    w.wv = layer.wv.value;
    w.wo = layer.wo.value;
    w.wqr = layer.wqr.value;
    w.wdkv = layer.wdkv.value;
    w.wkr = layer.wkr.value;
    w.wuk = layer.wuk.value;
    w.wuv = layer.wuv.value;
    return w;
}

} // namespace

TEST_CASE("kv cache footprint") {
    AttnConfig small = mla_cfg(16, 128, 512, 64);
    CHECK(kv_cache_floats_per_token(small) == 576);

    AttnConfig small_mha = mha_cfg(16, 128);
    CHECK(kv_cache_floats_per_token(small_mha) == 4096);

    CHECK(double(kv_cache_floats_per_token(small_mha)) /
              kv_cache_floats_per_token(small) ==
          doctest::Approx(4096.0 / 576.0));
}

TEST_CASE("rotary basics") {
    double v[4] = {1.0, 2.0, 3.0, 4.0};
    double orig[4] = {1.0, 2.0, 3.0, 4.0};
    rotary_inplace(v, 4, 0);
    for (int i = 0; i < 4; ++i)
        CHECK(v[i] == orig[i]); // position 0 is the identity rotation

    rotary_inplace(v, 4, 37);
    double norm = 0.0;
    for (double x : v)
        norm += x * x;
    CHECK(norm == doctest::Approx(1.0 + 4.0 + 9.0 + 16.0).epsilon(1e-12));

    rotary_inplace(v, 4, 37, -1);
    for (int i = 0; i < 4; ++i)
        CHECK(v[i] == doctest::Approx(orig[i]).epsilon(1e-12));
}

TEST_CASE("rotary relative-position property") {
    // <rot(q, p+d), rot(k, p'+d)> depends only on p - p'.
    double q0[4] = {0.3, -0.7, 1.1, 0.2};
    double k0[4] = {-0.5, 0.9, 0.4, -1.3};
    auto dot_at = [&](int pq, int pk) {
        double q[4], k[4];
        std::copy(q0, q0 + 4, q);
        std::copy(k0, k0 + 4, k);
        rotary_inplace(q, 4, pq);
        rotary_inplace(k, 4, pk);
        double s = 0.0;
        for (int i = 0; i < 4; ++i)
            s += q[i] * k[i];
        return s;
    };
    CHECK(dot_at(5, 2) == doctest::Approx(dot_at(9, 6)).epsilon(1e-10));
    CHECK(dot_at(3, 3) == doctest::Approx(dot_at(11, 11)).epsilon(1e-10));
}

TEST_CASE("incremental decode matches one-shot prefill") {
    for (AttnConfig cfg : {mha_cfg(), mla_cfg()}) {
        Rng rng(21);
        AttnWeights w = AttnWeights::random(cfg, rng, 0.1);
        int t = 6;
        Tensor x = rng.normal_tensor({t, cfg.d_model()}, 1.0);

        KVCache full(cfg.mode);
        Tensor y_full = attention_forward(x, cfg, w, full);

        KVCache step(cfg.mode);
        for (int i = 0; i < t; ++i) {
            Tensor xi = Tensor::zeros({1, cfg.d_model()});
            for (int j = 0; j < cfg.d_model(); ++j)
                xi.at(0, j) = x.at(i, j);
            Tensor yi = attention_forward(xi, cfg, w, step);
            for (int j = 0; j < cfg.d_model(); ++j)
                CHECK(yi.at(0, j) == doctest::Approx(y_full.at(i, j)).epsilon(1e-10));
        }
        CHECK(step.size() == static_cast<std::size_t>(t));
    }
}

TEST_CASE("causal masking blocks future tokens") {
    AttnConfig cfg = mla_cfg();
    Rng rng(4);
    AttnWeights w = AttnWeights::random(cfg, rng, 0.1);
    Tensor x = rng.normal_tensor({5, cfg.d_model()}, 1.0);
    KVCache c1(cfg.mode);
    Tensor y1 = attention_forward(x, cfg, w, c1);

    Tensor x2 = x;
    for (int j = 0; j < cfg.d_model(); ++j)
        x2.at(4, j) += 3.0; // perturb the last token only
    KVCache c2(cfg.mode);
    Tensor y2 = attention_forward(x2, cfg, w, c2);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < cfg.d_model(); ++j)
            CHECK(y1.at(i, j) == doctest::Approx(y2.at(i, j)).epsilon(1e-12));
}

TEST_CASE("cache overflow throws") {
    AttnConfig cfg = mha_cfg();
    cfg.max_len = 3;
    Rng rng(1);
    AttnWeights w = AttnWeights::random(cfg, rng);
    KVCache cache(cfg.mode);
    Tensor x = rng.normal_tensor({3, cfg.d_model()}, 1.0);
    attention_forward(x, cfg, w, cache);
    Tensor one = rng.normal_tensor({1, cfg.d_model()}, 1.0);
    CHECK_THROWS_AS(attention_forward(one, cfg, w, cache), std::length_error);
}

TEST_CASE("full-rank MLA reproduces MHA") {
    AttnConfig mha = mha_cfg(2, 3);
    AttnConfig mla;
    mla.n_heads = 2;
    mla.d_head = 3;
    mla.mode = AttnMode::MLA;
    mla.rank = mha.d_model(); // full rank
    mla.d_rope = 0;

    Rng rng(77);
    AttnWeights wm = AttnWeights::random(mha, rng, 0.3);
    AttnWeights wl;
    wl.wq = wm.wq;
    wl.wo = wm.wo;
    wl.wdkv = Tensor::identity(mha.d_model());
    wl.wuk = wm.wk;
    wl.wuv = wm.wv;
    wl.wkr = Tensor::zeros({0, mha.d_model()});
    wl.wqr = Tensor::zeros({0, mha.d_model()});

    Tensor x = rng.normal_tensor({4, mha.d_model()}, 1.0);
    KVCache cm(AttnMode::MHA), cl(AttnMode::MLA);
    Tensor ym = attention_forward(x, mha, wm, cm);
    Tensor yl = attention_forward(x, mla, wl, cl);
    for (std::int64_t i = 0; i < ym.numel(); ++i)
        CHECK(ym[i] == doctest::Approx(yl[i]).epsilon(1e-10));
}

TEST_CASE("training layer matches decode path") {
    for (AttnConfig cfg : {mha_cfg(), mla_cfg()}) {
        Rng rng(31);
        AttentionLayer layer(cfg, rng, 0.1);
        AttnWeights w = weights_from_layer(layer);
        Tensor x = rng.normal_tensor({5, cfg.d_model()}, 1.0);
        Tensor y_train = layer.forward(x);
        KVCache cache(cfg.mode);
        Tensor y_decode = attention_forward(x, cfg, w, cache);
        for (std::int64_t i = 0; i < y_train.numel(); ++i)
            CHECK(y_train[i] == doctest::Approx(y_decode[i]).epsilon(1e-10));
    }
}

TEST_CASE("attention layer input gradient") {
    for (AttnConfig cfg : {mha_cfg(2, 3), mla_cfg(2, 3, 5, 2)}) {
        Rng rng(13);
        AttentionLayer layer(cfg, rng, 0.2);
        int t = 4;
        Tensor coeff = rng.normal_tensor({t, cfg.d_model()}, 1.0);
        Tensor x0 = rng.normal_tensor({t, cfg.d_model()}, 0.7);
        auto f = [&](const Tensor &x, Tensor *grad) {
            Tensor y = layer.forward(x);
            double loss = 0.0;
            for (std::int64_t i = 0; i < y.numel(); ++i)
                loss += coeff[i] * y[i];
            if (grad) {
                for (auto *p : layer.params())
                    p->zero_grad();
                *grad = layer.backward(coeff);
            }
            return loss;
        };
        CHECK(grad_check(f, x0, 1e-5) <= 1e-6);
    }
}

TEST_CASE("attention layer weight gradients") {
    AttnConfig cfg = mla_cfg(2, 3, 5, 2);
    Rng rng(14);
    AttentionLayer layer(cfg, rng, 0.2);
    int t = 3;
    Tensor coeff = rng.normal_tensor({t, cfg.d_model()}, 1.0);
    Tensor x = rng.normal_tensor({t, cfg.d_model()}, 0.7);
    for (Param *p : layer.params()) {
        if (p->value.numel() == 0)
            continue;
        Tensor w0 = p->value;
        auto f = [&](const Tensor &w, Tensor *grad) {
            p->value = w;
            Tensor y = layer.forward(x);
            double loss = 0.0;
            for (std::int64_t i = 0; i < y.numel(); ++i)
                loss += coeff[i] * y[i];
            if (grad) {
                for (auto *q : layer.params())
                    q->zero_grad();
                layer.backward(coeff);
                *grad = p->grad;
            }
            return loss;
        };
        CHECK(grad_check(f, w0, 1e-5) <= 1e-5);
        p->value = w0;
    }
}

TEST_CASE("config validation") {
    AttnConfig bad = mla_cfg();
    bad.d_rope = 3; // must be even
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    AttnConfig bad2 = mla_cfg();
    bad2.rank = 0;
    CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
    CHECK_NOTHROW(mha_cfg().validate());
    CHECK_NOTHROW(mla_cfg().validate());
}
