#pragma once

#include "vlm/adaptor.hpp"
#include "vlm/attention.hpp"
#include "vlm/image.hpp"
#include "vlm/moe.hpp"
#include "vlm/tiling.hpp"

#include <string>
#include <vector>

namespace vlm {

enum class Variant { Tiny, Small, Base, Toy };

struct ModelConfig {
    Variant variant = Variant::Toy;
    int vocab_size = 128;
    int d_model = 32;
    int n_heads = 2;
    int n_layers = 2;
    AttnMode attn_mode = AttnMode::MLA;
    int mla_rank = 16;
    int d_rope = 8;
    int n_routed = 8;
    int n_shared = 2;
    int top_k = 2;
    Routing routing = Routing::Softmax;
    bool bias_correction = false;
    int max_tiles = 9;
    int base_tile = kBaseTile;
    int patch_grid = 6;       // 27 at production scale
    int vision_channels = 8;  // 1152 at production scale
    int max_seq = 4096;

    int d_head() const { return d_model / n_heads; }
    int d_expert_hidden() const { return 2 * d_model / top_k; }
    int post_shuffle_grid() const { return (patch_grid + 1) / 2; }

    AttnConfig attn_config() const;
    MoEConfig moe_config() const;
    void validate() const;
};

ModelConfig build_config(Variant variant);
Variant variant_from_string(const std::string &name);
std::string variant_to_string(Variant variant);

ModelConfig config_from_json_file(const std::string &path);
std::string config_to_json(const ModelConfig &cfg);

// Text token ids with image placeholders; labels and loss_mask are sized
// for the merged sequence (mask 0 at every visual position).
struct SequenceBatch {
    std::vector<int> token_ids;
    std::vector<int> image_slots; // indices into token_ids
    std::vector<int> labels;
    std::vector<int> loss_mask;
};

// Mean cross-entropy over mask-in positions; 0 when everything is masked
// out. When dlogits is non-null the gradient is written there.
double next_token_loss(const Tensor &logits, const std::vector<int> &labels,
                       const std::vector<int> &loss_mask, Tensor *dlogits = nullptr);

// Toy patchifying stand-in for the vision tower: linear patch embedding
// plus one bidirectional attention + MLP block.
struct VisionEncoder {
    int patch_grid = 6;
    int patch_size = 64;
    int channels = 8;
    Linear patch_embed;
    RmsNormLayer norm1, norm2;
    AttentionLayer attn;
    Mlp mlp;

    VisionEncoder() = default;
    VisionEncoder(int base_tile, int patch_grid_, int channels_, Rng &rng);

    TileFeatures forward(const Image &tile);
    // Requires a preceding forward of the same tile.
    void backward(const Tensor &dfeatures);

    std::vector<Param *> params();

  private:
    Tensor tokens_, attn_in_, mlp_in_;
};

struct TransformerBlock {
    RmsNormLayer norm1, norm2;
    AttentionLayer attn;
    MoELayer moe;
};

// Everything visual the language model sees for one image.
struct VisualBlock {
    TilingPlan plan;
    VisualLayout layout;
    std::vector<Image> tiles;
    std::vector<TileFeatures> shuffled;
    Tensor gathered;  // [patch tokens, channels * factor^2] in layout order
    Tensor projected; // [patch tokens, d_model]
};

enum class ParamGroup { Vision, Adaptor, LanguageModel };

class Model {
  public:
    Model(const ModelConfig &cfg, std::uint64_t seed);

    const ModelConfig &config() const { return cfg_; }

    std::vector<TileFeatures> encode_tiles(const std::vector<Image> &tiles);
    VisualBlock prepare_image(const Image &img, int images_in_context = 1);

    // Text lookup with each image slot replaced by its visual sequence.
    Tensor merge_embeddings(const SequenceBatch &batch,
                            const std::vector<VisualBlock> &blocks);

    // Full pipeline: merge -> transformer stack -> logits [seq, vocab].
    Tensor forward(const SequenceBatch &batch, const std::vector<Image> &images);
    void backward(const Tensor &dlogits);

    // Forward + masked loss + backward + SGD; stage 1 freezes the language
    // model, stages 2/3 update everything. Returns the loss.
    double train_step(const SequenceBatch &batch, const std::vector<Image> &images,
                      int stage, double lr);

    std::vector<Param *> params(ParamGroup group);
    std::vector<Param *> all_params();
    void zero_grads();

    int merged_length(const SequenceBatch &batch,
                      const std::vector<VisualBlock> &blocks) const;

    std::vector<TransformerBlock> &blocks() { return blocks_; }
    Mlp &projector() { return projector_; }
    VisionEncoder &vision() { return vision_; }
    Param &embedding_table() { return embedding_; }

  private:
    enum class SourceKind { Text, Patch, Newline, Separator };
    struct MergeSource {
        SourceKind kind;
        int token_id = 0;  // Text
        int image = 0;     // Patch
        int patch = 0;     // Patch row in the image's projected block
    };

    ModelConfig cfg_;
    VisionEncoder vision_;
    Mlp projector_;
    Param embedding_; // [vocab_size + 3, d_model]; rows vocab..vocab+2 are
                      // tile-newline, view-separator, image-placeholder
    std::vector<TransformerBlock> blocks_;
    RmsNormLayer final_norm_;
    Linear head_;

    std::vector<VisualBlock> blocks_cache_;
    std::vector<MergeSource> sources_;
    Tensor merged_;
};

inline constexpr int kTileNewlineRow = 0;   // offset past vocab_size
inline constexpr int kViewSeparatorRow = 1;
inline constexpr int kImagePlaceholderRow = 2;

} // namespace vlm
