#include "vlm/model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace vlm {

AttnConfig ModelConfig::attn_config() const {
    AttnConfig a;
    a.n_heads = n_heads;
    a.d_head = d_head();
    a.mode = attn_mode;
    a.rank = attn_mode == AttnMode::MLA ? mla_rank : 0;
    a.d_rope = attn_mode == AttnMode::MLA ? d_rope : 0;
    a.max_len = max_seq;
    return a;
}

MoEConfig ModelConfig::moe_config() const {
    MoEConfig m;
    m.n_routed = n_routed;
    m.n_shared = n_shared;
    m.top_k = top_k;
    m.routing = routing;
    m.bias_enabled = bias_correction;
    m.bias_step = bias_correction ? 0.001 : 0.0;
    m.aux_weight = variant == Variant::Base ? 0.0001 : 0.001;
    m.d_model = d_model;
    m.d_expert_hidden = d_expert_hidden();
    return m;
}

void ModelConfig::validate() const {
    if (d_model % n_heads != 0)
        throw std::invalid_argument("config: d_model must be divisible by n_heads");
    if (n_layers < 1 || vocab_size < 2)
        throw std::invalid_argument("config: bad n_layers or vocab_size");
    attn_config().validate();
    moe_config().validate();
}

ModelConfig build_config(Variant variant) {
    ModelConfig c;
    c.variant = variant;
    switch (variant) {
    case Variant::Tiny:
        c.vocab_size = 129280;
        c.d_model = 1280;
        c.n_heads = 10;
        c.n_layers = 12;
        c.attn_mode = AttnMode::MHA;
        c.mla_rank = 0;
        c.d_rope = 0;
        c.n_routed = 64;
        c.n_shared = 2;
        c.top_k = 6;
        c.routing = Routing::Softmax;
        c.bias_correction = false;
        c.patch_grid = 27;
        c.vision_channels = 1152;
        break;
    case Variant::Small:
        c.vocab_size = 102400;
        c.d_model = 2048;
        c.n_heads = 16;
        c.n_layers = 27;
        c.attn_mode = AttnMode::MLA;
        c.mla_rank = 512;
        c.d_rope = 64;
        c.n_routed = 64;
        c.n_shared = 2;
        c.top_k = 6;
        c.routing = Routing::Softmax;
        c.bias_correction = false;
        c.patch_grid = 27;
        c.vision_channels = 1152;
        break;
    case Variant::Base:
        c.vocab_size = 129280;
        c.d_model = 2560;
        c.n_heads = 32;
        c.n_layers = 30;
        c.attn_mode = AttnMode::MLA;
        c.mla_rank = 512;
        c.d_rope = 64;
        c.n_routed = 72;
        c.n_shared = 2;
        c.top_k = 6;
        c.routing = Routing::Sigmoid;
        c.bias_correction = true;
        c.patch_grid = 27;
        c.vision_channels = 1152;
        break;
    case Variant::Toy:
        c.vocab_size = 128;
        c.d_model = 32;
        c.n_heads = 2;
        c.n_layers = 2;
        c.attn_mode = AttnMode::MLA;
        c.mla_rank = 16;
        c.d_rope = 8;
        c.n_routed = 8;
        c.n_shared = 2;
        c.top_k = 2;
        c.routing = Routing::Softmax;
        c.bias_correction = false;
        c.patch_grid = 6;
        c.vision_channels = 8;
        break;
    }
    c.validate();
    return c;
}

Variant variant_from_string(const std::string &name) {
    if (name == "tiny")
        return Variant::Tiny;
    if (name == "small")
        return Variant::Small;
    if (name == "base")
        return Variant::Base;
    if (name == "toy")
        return Variant::Toy;
    throw std::invalid_argument("unknown variant: " + name);
}

std::string variant_to_string(Variant variant) {
    switch (variant) {
    case Variant::Tiny:
        return "tiny";
    case Variant::Small:
        return "small";
    case Variant::Base:
        return "base";
    case Variant::Toy:
        return "toy";
    }
    return "?";
}

std::string config_to_json(const ModelConfig &cfg) {
    nlohmann::json j{
        {"variant", variant_to_string(cfg.variant)},
        {"vocab_size", cfg.vocab_size},
        {"d_model", cfg.d_model},
        {"n_heads", cfg.n_heads},
        {"n_layers", cfg.n_layers},
        {"attn_mode", cfg.attn_mode == AttnMode::MLA ? "mla" : "mha"},
        {"mla_rank", cfg.mla_rank},
        {"d_rope", cfg.d_rope},
        {"n_routed", cfg.n_routed},
        {"n_shared", cfg.n_shared},
        {"top_k", cfg.top_k},
        {"routing", cfg.routing == Routing::Softmax ? "softmax" : "sigmoid"},
        {"bias_correction", cfg.bias_correction},
        {"max_tiles", cfg.max_tiles},
        {"base_tile", cfg.base_tile},
        {"patch_grid", cfg.patch_grid},
        {"vision_channels", cfg.vision_channels},
        {"max_seq", cfg.max_seq},
    };
    return j.dump(2);
}

ModelConfig config_from_json_file(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    ModelConfig c = build_config(variant_from_string(j.value("variant", "toy")));
    auto get = [&](const char *key, int &field) {
        if (j.contains(key))
            field = j.at(key).get<int>();
    };
    get("vocab_size", c.vocab_size);
    get("d_model", c.d_model);
    get("n_heads", c.n_heads);
    get("n_layers", c.n_layers);
    get("mla_rank", c.mla_rank);
    get("d_rope", c.d_rope);
    get("n_routed", c.n_routed);
    get("n_shared", c.n_shared);
    get("top_k", c.top_k);
    get("max_tiles", c.max_tiles);
    get("base_tile", c.base_tile);
    get("patch_grid", c.patch_grid);
    get("vision_channels", c.vision_channels);
    get("max_seq", c.max_seq);
    if (j.contains("attn_mode"))
        c.attn_mode = j.at("attn_mode") == "mla" ? AttnMode::MLA : AttnMode::MHA;
    if (j.contains("routing"))
        c.routing = j.at("routing") == "sigmoid" ? Routing::Sigmoid : Routing::Softmax;
    if (j.contains("bias_correction"))
        c.bias_correction = j.at("bias_correction").get<bool>();
    c.validate();
    return c;
}

double next_token_loss(const Tensor &logits, const std::vector<int> &labels,
                       const std::vector<int> &loss_mask, Tensor *dlogits) {
    if (logits.rank() != 2)
        throw std::invalid_argument("next_token_loss: logits must be [seq, vocab]");
    int seq = logits.dim(0), vocab = logits.dim(1);
    if (static_cast<int>(labels.size()) != seq || static_cast<int>(loss_mask.size()) != seq)
        throw std::invalid_argument("next_token_loss: labels/mask length mismatch");
    if (dlogits)
        *dlogits = Tensor::zeros({seq, vocab});
    int count = 0;
    for (int t = 0; t < seq; ++t)
        if (loss_mask[static_cast<std::size_t>(t)] != 0)
            ++count;
    if (count == 0)
        return 0.0;
    double total = 0.0;
    for (int t = 0; t < seq; ++t) {
        if (loss_mask[static_cast<std::size_t>(t)] == 0)
            continue;
        int label = labels[static_cast<std::size_t>(t)];
        if (label < 0 || label >= vocab)
            throw std::invalid_argument("next_token_loss: label out of vocab range");
        Tensor row({vocab}, std::vector<double>(
                                logits.data.begin() + static_cast<std::ptrdiff_t>(t) * vocab,
                                logits.data.begin() + static_cast<std::ptrdiff_t>(t + 1) * vocab));
        Tensor p = softmax(row);
        total += -std::log(p[label]);
        if (dlogits) {
            for (int v = 0; v < vocab; ++v)
                dlogits->at(t, v) = (p[v] - (v == label ? 1.0 : 0.0)) / count;
        }
    }
    return total / count;
}

VisionEncoder::VisionEncoder(int base_tile, int patch_grid_, int channels_, Rng &rng)
    : patch_grid(patch_grid_), patch_size(base_tile / patch_grid_), channels(channels_) {
    if (patch_size < 1)
        throw std::invalid_argument("vision encoder: patch_grid too large for tile");
    patch_embed = Linear(patch_size * patch_size * 3, channels, rng);
    norm1 = RmsNormLayer(channels);
    norm2 = RmsNormLayer(channels);
    AttnConfig a;
    a.n_heads = channels % 2 == 0 ? 2 : 1;
    a.d_head = channels / a.n_heads;
    a.mode = AttnMode::MHA;
    a.max_len = patch_grid * patch_grid;
    attn = AttentionLayer(a, rng);
    mlp = Mlp(channels, 2 * channels, channels, rng);
}

TileFeatures VisionEncoder::forward(const Image &tile) {
    int side = patch_grid * patch_size;
    if (tile.width < side || tile.height < side)
        throw std::invalid_argument("vision encoder: tile smaller than patch grid");
    int g = patch_grid, pd = patch_size * patch_size * 3;
    tokens_ = Tensor::zeros({g * g, pd});
    for (int py = 0; py < g; ++py) {
        for (int px = 0; px < g; ++px) {
            int row = py * g + px, slot = 0;
            for (int y = 0; y < patch_size; ++y)
                for (int x = 0; x < patch_size; ++x)
                    for (int c = 0; c < 3; ++c, ++slot)
                        tokens_.at(row, slot) =
                            tile.sample(px * patch_size + x, py * patch_size + y, c) / 255.0;
        }
    }
    Tensor emb = patch_embed.forward(tokens_);
    attn_in_ = emb;
    Tensor a = attn.forward(norm1.forward(emb), /*causal=*/false);
    Tensor h = emb;
    for (std::int64_t i = 0; i < h.numel(); ++i)
        h[i] += a[i];
    mlp_in_ = h;
    Tensor m = mlp.forward(norm2.forward(h));
    Tensor out = h;
    for (std::int64_t i = 0; i < out.numel(); ++i)
        out[i] += m[i];
    TileFeatures feat(g, g, channels);
    feat.values.data = out.data;
    return feat;
}

void VisionEncoder::backward(const Tensor &dfeatures) {
    Tensor dh = dfeatures; // [g*g, C]
    Tensor dm = norm2.backward(mlp.backward(dh));
    for (std::int64_t i = 0; i < dh.numel(); ++i)
        dh[i] += dm[i];
    Tensor da = norm1.backward(attn.backward(dh));
    Tensor demb = dh;
    for (std::int64_t i = 0; i < demb.numel(); ++i)
        demb[i] += da[i];
    patch_embed.backward(demb);
}

std::vector<Param *> VisionEncoder::params() {
    std::vector<Param *> out{&patch_embed.weight, &patch_embed.bias, &norm1.gain,
                             &norm2.gain,         &mlp.fc1.weight,   &mlp.fc1.bias,
                             &mlp.fc2.weight,     &mlp.fc2.bias};
    for (Param *p : attn.params())
        out.push_back(p);
    return out;
}

Model::Model(const ModelConfig &cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    vision_ = VisionEncoder(cfg_.base_tile, cfg_.patch_grid, cfg_.vision_channels, rng);
    int c_in = cfg_.vision_channels * 4; // after the 2x2 shuffle
    projector_ = Mlp(c_in, cfg_.d_model, cfg_.d_model, rng);
    embedding_ = Param(rng.normal_tensor({cfg_.vocab_size + 3, cfg_.d_model}, 0.02));
    blocks_.reserve(static_cast<std::size_t>(cfg_.n_layers));
    for (int l = 0; l < cfg_.n_layers; ++l) {
        TransformerBlock b;
        b.norm1 = RmsNormLayer(cfg_.d_model);
        b.norm2 = RmsNormLayer(cfg_.d_model);
        b.attn = AttentionLayer(cfg_.attn_config(), rng);
        b.moe = MoELayer(cfg_.moe_config(), rng);
        blocks_.push_back(std::move(b));
    }
    final_norm_ = RmsNormLayer(cfg_.d_model);
    head_ = Linear(cfg_.d_model, cfg_.vocab_size, rng);
}

std::vector<TileFeatures> Model::encode_tiles(const std::vector<Image> &tiles) {
    std::vector<TileFeatures> out;
    out.reserve(tiles.size());
    for (const Image &tile : tiles) {
        if (tile.width != cfg_.base_tile || tile.height != cfg_.base_tile)
            throw std::invalid_argument("encode_tiles: tile is not base_tile sized");
        out.push_back(vision_.forward(tile));
    }
    return out;
}

VisualBlock Model::prepare_image(const Image &img, int images_in_context) {
    VisualBlock block;
    block.plan = select_resolution(img.height, img.width,
                                   candidate_resolutions(cfg_.base_tile, cfg_.max_tiles));
    Image canvas = build_canvas(img, block.plan);
    block.tiles = slice_tiles(canvas, block.plan);
    if (images_in_context > 2)
        block.tiles.resize(1); // tiling disabled, thumbnail only
    std::vector<TileFeatures> feats = encode_tiles(block.tiles);
    block.shuffled.reserve(feats.size());
    for (const auto &f : feats)
        block.shuffled.push_back(pixel_shuffle(f, 2));
    block.layout = layout_visual_tokens(block.plan.candidate.rows, block.plan.candidate.cols,
                                        images_in_context, cfg_.post_shuffle_grid());
    int c_in = cfg_.vision_channels * 4;
    int n_patches = 0;
    for (const auto &tok : block.layout.sequence)
        if (tok.kind == VisualToken::Kind::Patch)
            ++n_patches;
    block.gathered = Tensor::zeros({n_patches, c_in});
    int row = 0;
    for (const auto &tok : block.layout.sequence) {
        if (tok.kind != VisualToken::Kind::Patch)
            continue;
        const TileFeatures &f = block.shuffled[static_cast<std::size_t>(tok.tile)];
        for (int ch = 0; ch < c_in; ++ch)
            block.gathered.at(row, ch) = f.values.at(tok.row, tok.col, ch);
        ++row;
    }
    block.projected = projector_.forward(block.gathered);
    return block;
}

int Model::merged_length(const SequenceBatch &batch,
                         const std::vector<VisualBlock> &blocks) const {
    int len = static_cast<int>(batch.token_ids.size()) -
              static_cast<int>(batch.image_slots.size());
    for (const auto &b : blocks)
        len += static_cast<int>(b.layout.sequence.size());
    return len;
}

Tensor Model::merge_embeddings(const SequenceBatch &batch,
                               const std::vector<VisualBlock> &blocks) {
    sources_.clear();
    std::size_t slot_i = 0;
    for (std::size_t pos = 0; pos < batch.token_ids.size(); ++pos) {
        bool is_slot = slot_i < batch.image_slots.size() &&
                       batch.image_slots[slot_i] == static_cast<int>(pos);
        if (!is_slot) {
            int id = batch.token_ids[pos];
            if (id < 0 || id >= cfg_.vocab_size + 3)
                throw std::invalid_argument("merge: token id out of range");
            sources_.push_back({SourceKind::Text, id, 0, 0});
            continue;
        }
        if (slot_i >= blocks.size())
            throw std::invalid_argument("merge: image slot without a visual block");
        const VisualBlock &block = blocks[slot_i];
        int patch = 0;
        for (const auto &tok : block.layout.sequence) {
            switch (tok.kind) {
            case VisualToken::Kind::Patch:
                sources_.push_back({SourceKind::Patch, 0, static_cast<int>(slot_i), patch++});
                break;
            case VisualToken::Kind::TileNewline:
                sources_.push_back({SourceKind::Newline, 0, 0, 0});
                break;
            case VisualToken::Kind::ViewSeparator:
                sources_.push_back({SourceKind::Separator, 0, 0, 0});
                break;
            }
        }
        ++slot_i;
    }
    if (slot_i != blocks.size())
        throw std::invalid_argument("merge: visual block count does not match slots");

    int seq = static_cast<int>(sources_.size());
    if (!batch.labels.empty() && static_cast<int>(batch.labels.size()) != seq)
        throw std::invalid_argument("merge: labels length does not match merged sequence");
    if (!batch.loss_mask.empty()) {
        if (static_cast<int>(batch.loss_mask.size()) != seq)
            throw std::invalid_argument("merge: loss_mask length does not match merged sequence");
        for (int t = 0; t < seq; ++t)
            if (sources_[static_cast<std::size_t>(t)].kind != SourceKind::Text &&
                batch.loss_mask[static_cast<std::size_t>(t)] != 0)
                throw std::invalid_argument("merge: loss_mask must be 0 at visual positions");
    }

    Tensor x = Tensor::zeros({seq, cfg_.d_model});
    for (int t = 0; t < seq; ++t) {
        const MergeSource &src = sources_[static_cast<std::size_t>(t)];
        const double *row = nullptr;
        switch (src.kind) {
        case SourceKind::Text:
            row = &embedding_.value.data[static_cast<std::size_t>(src.token_id) * cfg_.d_model];
            break;
        case SourceKind::Newline:
            row = &embedding_.value.data[static_cast<std::size_t>(cfg_.vocab_size + kTileNewlineRow) *
                                         cfg_.d_model];
            break;
        case SourceKind::Separator:
            row = &embedding_.value.data[static_cast<std::size_t>(cfg_.vocab_size + kViewSeparatorRow) *
                                         cfg_.d_model];
            break;
        case SourceKind::Patch:
            row = &blocks[static_cast<std::size_t>(src.image)]
                       .projected.data[static_cast<std::size_t>(src.patch) * cfg_.d_model];
            break;
        }
        std::copy_n(row, cfg_.d_model, &x.data[static_cast<std::size_t>(t) * cfg_.d_model]);
    }
    return x;
}

Tensor Model::forward(const SequenceBatch &batch, const std::vector<Image> &images) {
    blocks_cache_.clear();
    for (const Image &img : images)
        blocks_cache_.push_back(prepare_image(img, static_cast<int>(images.size())));
    merged_ = merge_embeddings(batch, blocks_cache_);
    Tensor x = merged_;
    for (auto &b : blocks_) {
        Tensor a = b.attn.forward(b.norm1.forward(x), /*causal=*/true);
        for (std::int64_t i = 0; i < x.numel(); ++i)
            x[i] += a[i];
        Tensor m = b.moe.forward(b.norm2.forward(x));
        for (std::int64_t i = 0; i < x.numel(); ++i)
            x[i] += m[i];
    }
    return head_.forward(final_norm_.forward(x));
}

void Model::backward(const Tensor &dlogits) {
    Tensor dx = final_norm_.backward(head_.backward(dlogits));
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
        Tensor dm = it->norm2.backward(it->moe.backward(dx));
        for (std::int64_t i = 0; i < dx.numel(); ++i)
            dx[i] += dm[i];
        Tensor da = it->norm1.backward(it->attn.backward(dx));
        for (std::int64_t i = 0; i < dx.numel(); ++i)
            dx[i] += da[i];
    }

    // Scatter the merged-sequence gradient back to its sources.
    std::vector<Tensor> dprojected(blocks_cache_.size());
    for (std::size_t i = 0; i < blocks_cache_.size(); ++i)
        dprojected[i] = Tensor::zeros(blocks_cache_[i].projected.shape);
    int seq = static_cast<int>(sources_.size());
    for (int t = 0; t < seq; ++t) {
        const MergeSource &src = sources_[static_cast<std::size_t>(t)];
        const double *g = &dx.data[static_cast<std::size_t>(t) * cfg_.d_model];
        double *dst = nullptr;
        switch (src.kind) {
        case SourceKind::Text:
            dst = &embedding_.grad.data[static_cast<std::size_t>(src.token_id) * cfg_.d_model];
            break;
        case SourceKind::Newline:
            dst = &embedding_.grad.data[static_cast<std::size_t>(cfg_.vocab_size + kTileNewlineRow) *
                                        cfg_.d_model];
            break;
        case SourceKind::Separator:
            dst = &embedding_.grad.data[static_cast<std::size_t>(cfg_.vocab_size + kViewSeparatorRow) *
                                        cfg_.d_model];
            break;
        case SourceKind::Patch:
            dst = &dprojected[static_cast<std::size_t>(src.image)]
                       .data[static_cast<std::size_t>(src.patch) * cfg_.d_model];
            break;
        }
        for (int j = 0; j < cfg_.d_model; ++j)
            dst[j] += g[j];
    }

    // Per image: projector, un-shuffle, then the vision encoder per tile.
    // Layers cache only their latest call, so re-run forward before each
    // backward.
    int c_in = cfg_.vision_channels * 4;
    for (std::size_t bi = 0; bi < blocks_cache_.size(); ++bi) {
        VisualBlock &block = blocks_cache_[bi];
        projector_.forward(block.gathered);
        Tensor dgathered = projector_.backward(dprojected[bi]);

        std::vector<Tensor> dshuffled(block.shuffled.size());
        for (std::size_t ti = 0; ti < block.shuffled.size(); ++ti)
            dshuffled[ti] = Tensor::zeros(block.shuffled[ti].values.shape);
        int row = 0;
        for (const auto &tok : block.layout.sequence) {
            if (tok.kind != VisualToken::Kind::Patch)
                continue;
            Tensor &d = dshuffled[static_cast<std::size_t>(tok.tile)];
            for (int ch = 0; ch < c_in; ++ch)
                d.at(tok.row, tok.col, ch) += dgathered.at(row, ch);
            ++row;
        }

        int g = cfg_.patch_grid, c = cfg_.vision_channels;
        for (std::size_t ti = 0; ti < block.tiles.size(); ++ti) {
            // Invert the 2x2 space-to-depth, dropping padded slots.
            Tensor dfeat = Tensor::zeros({g * g, c});
            const Tensor &ds = dshuffled[ti];
            int oh = block.shuffled[ti].grid_h, ow = block.shuffled[ti].grid_w;
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    int slot = 0;
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx2 = 0; dx2 < 2; ++dx2)
                            for (int ch = 0; ch < c; ++ch, ++slot) {
                                int iy = oy * 2 + dy, ix = ox * 2 + dx2;
                                if (iy < g && ix < g)
                                    dfeat.at(iy * g + ix, ch) += ds.at(oy, ox, slot);
                            }
                }
            vision_.forward(block.tiles[ti]);
            vision_.backward(dfeat);
        }
    }
}

double Model::train_step(const SequenceBatch &batch, const std::vector<Image> &images,
                         int stage, double lr) {
    if (stage < 1 || stage > 3)
        throw std::invalid_argument("train_step: stage must be 1, 2 or 3");
    zero_grads();
    Tensor logits = forward(batch, images);
    Tensor dlogits;
    double loss = next_token_loss(logits, batch.labels, batch.loss_mask, &dlogits);
    backward(dlogits);

    for (Param *p : params(ParamGroup::Vision))
        p->sgd_step(lr);
    for (Param *p : params(ParamGroup::Adaptor))
        p->sgd_step(lr);
    if (stage != 1)
        for (Param *p : params(ParamGroup::LanguageModel))
            p->sgd_step(lr);

    if (cfg_.bias_correction) {
        double gamma = stage == 2 ? cfg_.moe_config().bias_step : 0.0;
        if (gamma > 0.0)
            for (auto &b : blocks_)
                update_bias(b.moe.bias, b.moe.last_load_counts(), gamma);
    }
    return loss;
}

std::vector<Param *> Model::params(ParamGroup group) {
    std::vector<Param *> out;
    switch (group) {
    case ParamGroup::Vision:
        return vision_.params();
    case ParamGroup::Adaptor:
        out = {&projector_.fc1.weight, &projector_.fc1.bias, &projector_.fc2.weight,
               &projector_.fc2.bias};
        return out;
    case ParamGroup::LanguageModel:
        out.push_back(&embedding_);
        for (auto &b : blocks_) {
            out.push_back(&b.norm1.gain);
            out.push_back(&b.norm2.gain);
            for (Param *p : b.attn.params())
                out.push_back(p);
            for (Param *p : b.moe.params())
                out.push_back(p);
        }
        out.push_back(&final_norm_.gain);
        out.push_back(&head_.weight);
        out.push_back(&head_.bias);
        return out;
    }
    return out;
}

std::vector<Param *> Model::all_params() {
    std::vector<Param *> out = params(ParamGroup::Vision);
    for (Param *p : params(ParamGroup::Adaptor))
        out.push_back(p);
    for (Param *p : params(ParamGroup::LanguageModel))
        out.push_back(p);
    return out;
}

void Model::zero_grads() {
    for (Param *p : all_params())
        p->zero_grad();
}

} // namespace vlm
