#include "vlm/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace vlm {

namespace {

constexpr double kRopeBase = 10000.0;

// y = W x for a row-major [out, in] matrix and a raw input pointer.
void matvec(const Tensor &w, const double *x, double *y) {
    int out = w.dim(0), in = w.dim(1);
    for (int o = 0; o < out; ++o) {
        double acc = 0.0;
        for (int j = 0; j < in; ++j)
            acc += w.at(o, j) * x[j];
        y[o] = acc;
    }
}

// dW += g ⊗ x; dx += W^T g
void matvec_backward(const Tensor &w, Tensor &dw, const double *x, double *dx,
                     const double *g) {
    int out = w.dim(0), in = w.dim(1);
    for (int o = 0; o < out; ++o) {
        for (int j = 0; j < in; ++j) {
            dw.at(o, j) += g[o] * x[j];
            dx[j] += w.at(o, j) * g[o];
        }
    }
}

void softmax_row(double *row, int n) {
    double mx = row[0];
    for (int i = 1; i < n; ++i)
        mx = std::max(mx, row[i]);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        row[i] = std::exp(row[i] - mx);
        sum += row[i];
    }
    for (int i = 0; i < n; ++i)
        row[i] /= sum;
}

} // namespace

void AttnConfig::validate() const {
    if (n_heads < 1 || d_head < 1)
        throw std::invalid_argument("attention: n_heads and d_head must be >= 1");
    if (mode == AttnMode::MLA) {
        if (rank < 1)
            throw std::invalid_argument("attention: MLA rank must be >= 1");
        if (d_rope < 0 || d_rope % 2 != 0)
            throw std::invalid_argument("attention: d_rope must be even and >= 0");
    }
}

void rotary_inplace(double *v, int dim, int position, int sign) {
    for (int p = 0; p < dim / 2; ++p) {
        double theta = position * std::pow(kRopeBase, -2.0 * p / dim);
        if (sign < 0)
            theta = -theta;
        double c = std::cos(theta), s = std::sin(theta);
        double a = v[2 * p], b = v[2 * p + 1];
        v[2 * p] = a * c - b * s;
        v[2 * p + 1] = a * s + b * c;
    }
}

AttnWeights AttnWeights::random(const AttnConfig &cfg, Rng &rng, double scale) {
    cfg.validate();
    AttnWeights w;
    int d = cfg.d_model();
    w.wq = rng.normal_tensor({d, d}, scale);
    w.wo = rng.normal_tensor({d, d}, scale);
    if (cfg.mode == AttnMode::MHA) {
        w.wk = rng.normal_tensor({d, d}, scale);
        w.wv = rng.normal_tensor({d, d}, scale);
    } else {
        w.wdkv = rng.normal_tensor({cfg.rank, d}, scale);
        w.wuk = rng.normal_tensor({d, cfg.rank}, scale);
        w.wuv = rng.normal_tensor({d, cfg.rank}, scale);
        if (cfg.d_rope > 0) {
            w.wqr = rng.normal_tensor({cfg.n_heads * cfg.d_rope, d}, scale);
            w.wkr = rng.normal_tensor({cfg.d_rope, d}, scale);
        }
    }
    return w;
}

int kv_cache_floats_per_token(const AttnConfig &cfg) {
    cfg.validate();
    return cfg.mode == AttnMode::MHA ? 2 * cfg.n_heads * cfg.d_head
                                     : cfg.rank + cfg.d_rope;
}

Tensor attention_forward(const Tensor &x, const AttnConfig &cfg,
                         const AttnWeights &weights, KVCache &cache, bool causal) {
    cfg.validate();
    if (cache.mode != cfg.mode)
        throw std::invalid_argument("attention: cache mode does not match config");
    int d = cfg.d_model();
    if (x.rank() != 2 || x.dim(1) != d)
        throw std::invalid_argument("attention: input width does not match d_model");
    int t_new = x.dim(0);
    int t_prev = static_cast<int>(cache.size());
    if (t_prev + t_new > cfg.max_len)
        throw std::length_error("attention: position exceeds configured max length");
    int h_count = cfg.n_heads, dh = cfg.d_head, dr = cfg.d_rope;
    double inv_scale = cfg.mode == AttnMode::MLA ? 1.0 / std::sqrt(double(dh + dr))
                                                 : 1.0 / std::sqrt(double(dh));

    // Project and cache the new tokens first.
    Tensor q = Tensor::zeros({t_new, d});
    Tensor qr = dr > 0 && cfg.mode == AttnMode::MLA
                    ? Tensor::zeros({t_new, h_count * dr})
                    : Tensor();
    for (int i = 0; i < t_new; ++i) {
        const double *xi = &x.data[static_cast<std::size_t>(i) * d];
        int pos = t_prev + i;
        matvec(weights.wq, xi, &q.data[static_cast<std::size_t>(i) * d]);
        if (cfg.mode == AttnMode::MHA) {
            std::vector<double> k(static_cast<std::size_t>(d)), v(static_cast<std::size_t>(d));
            matvec(weights.wk, xi, k.data());
            matvec(weights.wv, xi, v.data());
            cache.keys.push_back(std::move(k));
            cache.values.push_back(std::move(v));
        } else {
            std::vector<double> c(static_cast<std::size_t>(cfg.rank));
            matvec(weights.wdkv, xi, c.data());
            std::vector<double> kr(static_cast<std::size_t>(dr));
            if (dr > 0) {
                matvec(weights.wkr, xi, kr.data());
                rotary_inplace(kr.data(), dr, pos);
                double *qri = &qr.data[static_cast<std::size_t>(i) * h_count * dr];
                matvec(weights.wqr, xi, qri);
                for (int h = 0; h < h_count; ++h)
                    rotary_inplace(qri + static_cast<std::ptrdiff_t>(h) * dr, dr, pos);
            }
            cache.latents.push_back(std::move(c));
            cache.rope_keys.push_back(std::move(kr));
        }
    }

    int t_total = t_prev + t_new;
    // MLA up-projects per-head keys/values from the cached latents.
    Tensor k_all, v_all;
    if (cfg.mode == AttnMode::MLA) {
        k_all = Tensor::zeros({t_total, d});
        v_all = Tensor::zeros({t_total, d});
        for (int j = 0; j < t_total; ++j) {
            matvec(weights.wuk, cache.latents[static_cast<std::size_t>(j)].data(),
                   &k_all.data[static_cast<std::size_t>(j) * d]);
            matvec(weights.wuv, cache.latents[static_cast<std::size_t>(j)].data(),
                   &v_all.data[static_cast<std::size_t>(j) * d]);
        }
    }

    Tensor y = Tensor::zeros({t_new, d});
    std::vector<double> logits(static_cast<std::size_t>(t_total));
    std::vector<double> head_out(static_cast<std::size_t>(d));
    for (int i = 0; i < t_new; ++i) {
        int pos = t_prev + i;
        int limit = causal ? pos + 1 : t_total;
        for (int h = 0; h < h_count; ++h) {
            const double *qi = &q.data[static_cast<std::size_t>(i) * d] +
                               static_cast<std::ptrdiff_t>(h) * dh;
            for (int j = 0; j < limit; ++j) {
                double acc = 0.0;
                const double *kptr =
                    cfg.mode == AttnMode::MHA
                        ? cache.keys[static_cast<std::size_t>(j)].data() + h * dh
                        : &k_all.data[static_cast<std::size_t>(j) * d] + h * dh;
                for (int e = 0; e < dh; ++e)
                    acc += qi[e] * kptr[e];
                if (cfg.mode == AttnMode::MLA && dr > 0) {
                    const double *qri = &qr.data[static_cast<std::size_t>(i) * h_count * dr] +
                                        static_cast<std::ptrdiff_t>(h) * dr;
                    const double *krj = cache.rope_keys[static_cast<std::size_t>(j)].data();
                    for (int e = 0; e < dr; ++e)
                        acc += qri[e] * krj[e];
                }
                logits[static_cast<std::size_t>(j)] = acc * inv_scale;
            }
            softmax_row(logits.data(), limit);
            for (int e = 0; e < dh; ++e) {
                double acc = 0.0;
                for (int j = 0; j < limit; ++j) {
                    const double *vptr =
                        cfg.mode == AttnMode::MHA
                            ? cache.values[static_cast<std::size_t>(j)].data() + h * dh
                            : &v_all.data[static_cast<std::size_t>(j) * d] + h * dh;
                    acc += logits[static_cast<std::size_t>(j)] * vptr[e];
                }
                head_out[static_cast<std::size_t>(h * dh + e)] = acc;
            }
        }
        matvec(weights.wo, head_out.data(), &y.data[static_cast<std::size_t>(i) * d]);
    }
    return y;
}

AttentionLayer::AttentionLayer(const AttnConfig &cfg_, Rng &rng, double scale)
    : cfg(cfg_) {
    AttnWeights w = AttnWeights::random(cfg, rng, scale);
    wq = Param(w.wq);
    wo = Param(w.wo);
    if (cfg.mode == AttnMode::MHA) {
        wk = Param(w.wk);
        wv = Param(w.wv);
    } else {
        wdkv = Param(w.wdkv);
        wuk = Param(w.wuk);
        wuv = Param(w.wuv);
        if (cfg.d_rope > 0) {
            wqr = Param(w.wqr);
            wkr = Param(w.wkr);
        }
    }
}

std::vector<Param *> AttentionLayer::params() {
    std::vector<Param *> out{&wq, &wo};
    if (cfg.mode == AttnMode::MHA) {
        out.push_back(&wk);
        out.push_back(&wv);
    } else {
        out.push_back(&wdkv);
        out.push_back(&wuk);
        out.push_back(&wuv);
        if (cfg.d_rope > 0) {
            out.push_back(&wqr);
            out.push_back(&wkr);
        }
    }
    return out;
}

Tensor AttentionLayer::forward(const Tensor &x, bool causal) {
    cfg.validate();
    causal_ = causal;
    x_ = x;
    int t = x.dim(0), d = cfg.d_model(), hc = cfg.n_heads, dh = cfg.d_head,
        dr = cfg.mode == AttnMode::MLA ? cfg.d_rope : 0;
    double inv_scale = cfg.mode == AttnMode::MLA ? 1.0 / std::sqrt(double(dh + dr))
                                                 : 1.0 / std::sqrt(double(dh));

    q_ = Tensor::zeros({t, d});
    k_ = Tensor::zeros({t, d});
    v_ = Tensor::zeros({t, d});
    if (cfg.mode == AttnMode::MLA) {
        c_ = Tensor::zeros({t, cfg.rank});
        if (dr > 0) {
            qr_ = Tensor::zeros({t, hc * dr});
            kr_ = Tensor::zeros({t, dr});
        }
    }
    for (int i = 0; i < t; ++i) {
        const double *xi = &x.data[static_cast<std::size_t>(i) * d];
        matvec(wq.value, xi, &q_.data[static_cast<std::size_t>(i) * d]);
        if (cfg.mode == AttnMode::MHA) {
            matvec(wk.value, xi, &k_.data[static_cast<std::size_t>(i) * d]);
            matvec(wv.value, xi, &v_.data[static_cast<std::size_t>(i) * d]);
        } else {
            double *ci = &c_.data[static_cast<std::size_t>(i) * cfg.rank];
            matvec(wdkv.value, xi, ci);
            matvec(wuk.value, ci, &k_.data[static_cast<std::size_t>(i) * d]);
            matvec(wuv.value, ci, &v_.data[static_cast<std::size_t>(i) * d]);
            if (dr > 0) {
                double *kri = &kr_.data[static_cast<std::size_t>(i) * dr];
                matvec(wkr.value, xi, kri);
                rotary_inplace(kri, dr, i);
                double *qri = &qr_.data[static_cast<std::size_t>(i) * hc * dr];
                matvec(wqr.value, xi, qri);
                for (int h = 0; h < hc; ++h)
                    rotary_inplace(qri + static_cast<std::ptrdiff_t>(h) * dr, dr, i);
            }
        }
    }

    probs_ = Tensor::zeros({hc, t, t});
    heads_out_ = Tensor::zeros({t, d});
    Tensor y = Tensor::zeros({t, d});
    for (int h = 0; h < hc; ++h) {
        for (int i = 0; i < t; ++i) {
            int limit = causal ? i + 1 : t;
            std::vector<double> row(static_cast<std::size_t>(limit));
            const double *qi = &q_.data[static_cast<std::size_t>(i) * d] + h * dh;
            for (int j = 0; j < limit; ++j) {
                double acc = 0.0;
                const double *kj = &k_.data[static_cast<std::size_t>(j) * d] + h * dh;
                for (int e = 0; e < dh; ++e)
                    acc += qi[e] * kj[e];
                if (dr > 0) {
                    const double *qri = &qr_.data[static_cast<std::size_t>(i) * hc * dr] + h * dr;
                    const double *krj = &kr_.data[static_cast<std::size_t>(j) * dr];
                    for (int e = 0; e < dr; ++e)
                        acc += qri[e] * krj[e];
                }
                row[static_cast<std::size_t>(j)] = acc * inv_scale;
            }
            softmax_row(row.data(), limit);
            for (int j = 0; j < limit; ++j)
                probs_.at(h, i, j) = row[static_cast<std::size_t>(j)];
            for (int e = 0; e < dh; ++e) {
                double acc = 0.0;
                for (int j = 0; j < limit; ++j)
                    acc += row[static_cast<std::size_t>(j)] *
                           v_.data[static_cast<std::size_t>(j) * d + h * dh + e];
                heads_out_.at(i, h * dh + e) = acc;
            }
        }
    }
    for (int i = 0; i < t; ++i)
        matvec(wo.value, &heads_out_.data[static_cast<std::size_t>(i) * d],
               &y.data[static_cast<std::size_t>(i) * d]);
    return y;
}

Tensor AttentionLayer::backward(const Tensor &dy) {
    int t = x_.dim(0), d = cfg.d_model(), hc = cfg.n_heads, dh = cfg.d_head,
        dr = cfg.mode == AttnMode::MLA ? cfg.d_rope : 0;
    double inv_scale = cfg.mode == AttnMode::MLA ? 1.0 / std::sqrt(double(dh + dr))
                                                 : 1.0 / std::sqrt(double(dh));

    Tensor dx = Tensor::zeros({t, d});
    Tensor dheads = Tensor::zeros({t, d});
    for (int i = 0; i < t; ++i)
        matvec_backward(wo.value, wo.grad,
                        &heads_out_.data[static_cast<std::size_t>(i) * d],
                        &dheads.data[static_cast<std::size_t>(i) * d],
                        &dy.data[static_cast<std::size_t>(i) * d]);

    Tensor dq = Tensor::zeros({t, d});
    Tensor dk = Tensor::zeros({t, d});
    Tensor dv = Tensor::zeros({t, d});
    Tensor dqr = dr > 0 ? Tensor::zeros({t, hc * dr}) : Tensor();
    Tensor dkr = dr > 0 ? Tensor::zeros({t, dr}) : Tensor();

    for (int h = 0; h < hc; ++h) {
        for (int i = 0; i < t; ++i) {
            int limit = causal_ ? i + 1 : t;
            // dA and softmax backward.
            std::vector<double> da(static_cast<std::size_t>(limit), 0.0);
            const double *dout = &dheads.data[static_cast<std::size_t>(i) * d] + h * dh;
            for (int j = 0; j < limit; ++j) {
                double acc = 0.0;
                const double *vj = &v_.data[static_cast<std::size_t>(j) * d] + h * dh;
                for (int e = 0; e < dh; ++e) {
                    acc += dout[e] * vj[e];
                    dv.data[static_cast<std::size_t>(j) * d + h * dh + e] +=
                        probs_.at(h, i, j) * dout[e];
                }
                da[static_cast<std::size_t>(j)] = acc;
            }
            double dot = 0.0;
            for (int j = 0; j < limit; ++j)
                dot += da[static_cast<std::size_t>(j)] * probs_.at(h, i, j);
            for (int j = 0; j < limit; ++j) {
                double dl = probs_.at(h, i, j) * (da[static_cast<std::size_t>(j)] - dot) *
                            inv_scale;
                const double *qi = &q_.data[static_cast<std::size_t>(i) * d] + h * dh;
                const double *kj = &k_.data[static_cast<std::size_t>(j) * d] + h * dh;
                for (int e = 0; e < dh; ++e) {
                    dq.data[static_cast<std::size_t>(i) * d + h * dh + e] += dl * kj[e];
                    dk.data[static_cast<std::size_t>(j) * d + h * dh + e] += dl * qi[e];
                }
                if (dr > 0) {
                    const double *qri = &qr_.data[static_cast<std::size_t>(i) * hc * dr] + h * dr;
                    const double *krj = &kr_.data[static_cast<std::size_t>(j) * dr];
                    for (int e = 0; e < dr; ++e) {
                        dqr.data[static_cast<std::size_t>(i) * hc * dr + h * dr + e] += dl * krj[e];
                        dkr.data[static_cast<std::size_t>(j) * dr + e] += dl * qri[e];
                    }
                }
            }
        }
    }

    for (int i = 0; i < t; ++i) {
        const double *xi = &x_.data[static_cast<std::size_t>(i) * d];
        double *dxi = &dx.data[static_cast<std::size_t>(i) * d];
        matvec_backward(wq.value, wq.grad, xi, dxi,
                        &dq.data[static_cast<std::size_t>(i) * d]);
        if (cfg.mode == AttnMode::MHA) {
            matvec_backward(wk.value, wk.grad, xi, dxi,
                            &dk.data[static_cast<std::size_t>(i) * d]);
            matvec_backward(wv.value, wv.grad, xi, dxi,
                            &dv.data[static_cast<std::size_t>(i) * d]);
        } else {
            const double *ci = &c_.data[static_cast<std::size_t>(i) * cfg.rank];
            std::vector<double> dc(static_cast<std::size_t>(cfg.rank), 0.0);
            matvec_backward(wuk.value, wuk.grad, ci, dc.data(),
                            &dk.data[static_cast<std::size_t>(i) * d]);
            matvec_backward(wuv.value, wuv.grad, ci, dc.data(),
                            &dv.data[static_cast<std::size_t>(i) * d]);
            matvec_backward(wdkv.value, wdkv.grad, xi, dxi, dc.data());
            if (dr > 0) {
                // Rotation is orthogonal; its adjoint is the inverse rotation.
                std::vector<double> g(static_cast<std::size_t>(dr));
                std::copy_n(&dkr.data[static_cast<std::size_t>(i) * dr], dr, g.data());
                rotary_inplace(g.data(), dr, i, -1);
                matvec_backward(wkr.value, wkr.grad, xi, dxi, g.data());
                std::vector<double> gq(static_cast<std::size_t>(hc) * dr);
                std::copy_n(&dqr.data[static_cast<std::size_t>(i) * hc * dr], hc * dr, gq.data());
                for (int h = 0; h < hc; ++h)
                    rotary_inplace(gq.data() + static_cast<std::ptrdiff_t>(h) * dr, dr, i, -1);
                matvec_backward(wqr.value, wqr.grad, xi, dxi, gq.data());
            }
        }
    }
    return dx;
}

} // namespace vlm
