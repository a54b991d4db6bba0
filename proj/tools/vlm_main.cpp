#include "vlm/adaptor.hpp"
#include "vlm/grounding.hpp"
#include "vlm/model.hpp"
#include "vlm/schedsim.hpp"
#include "vlm/tiling.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

std::vector<int> parse_int_list(const std::string &csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(std::stoi(item));
    return out;
}

std::vector<double> parse_double_list(const std::string &csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(std::stod(item));
    return out;
}

void print_plan(const vlm::TilingPlan &plan) {
    const auto &c = plan.candidate;
    vlm::VisualLayout layout =
        vlm::layout_visual_tokens(c.rows, c.cols, /*images_in_context=*/1, /*grid=*/14);
    std::cout << "m=" << c.rows << "\n"
              << "n=" << c.cols << "\n"
              << "scale=" << plan.scale << "\n"
              << "resized_h=" << plan.resized_h << "\n"
              << "resized_w=" << plan.resized_w << "\n"
              << "padding_area=" << plan.padding_area << "\n"
              << "tile_count=" << plan.tile_count() << "\n"
              << "visual_tokens=" << layout.sequence.size() << "\n";
}

void print_config(const vlm::ModelConfig &c) {
    std::cout << "variant=" << vlm::variant_to_string(c.variant) << "\n"
              << "vocab_size=" << c.vocab_size << "\n"
              << "d_model=" << c.d_model << "\n"
              << "n_heads=" << c.n_heads << "\n"
              << "n_layers=" << c.n_layers << "\n"
              << "attention=" << (c.attn_mode == vlm::AttnMode::MLA ? "mla" : "mha") << "\n"
              << "mla_rank=" << c.mla_rank << "\n"
              << "n_routed=" << c.n_routed << "\n"
              << "n_shared=" << c.n_shared << "\n"
              << "top_k=" << c.top_k << "\n"
              << "routing=" << (c.routing == vlm::Routing::Sigmoid ? "sigmoid" : "softmax")
              << "\n"
              << "bias_correction=" << (c.bias_correction ? 1 : 0) << "\n";
}

std::string render_from_lines(std::istream &in) {
    vlm::GroundedMessage msg;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error("render: expected 'ref<TAB>boxes' line");
        vlm::GroundedSpan span;
        span.ref_text = line.substr(0, tab);
        std::string boxes = line.substr(tab + 1);
        std::stringstream ss(boxes);
        std::string one;
        while (std::getline(ss, one, ';')) {
            if (one.empty())
                continue;
            std::vector<int> v = parse_int_list(one);
            if (v.size() != 4)
                throw std::runtime_error("render: box needs 4 coordinates");
            span.boxes.push_back({v[0], v[1], v[2], v[3]});
        }
        msg.segments.emplace_back(std::move(span));
    }
    return vlm::serialize_grounded(msg);
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Desk-scale VLM toolkit: tiling, token layout, attention cache "
                 "accounting, MoE routing, grounding grammar, and schedulers"};
    app.require_subcommand(1);

    // tile
    auto *tile = app.add_subcommand("tile", "Pick a tiling plan for an image or raw size");
    int tile_h = 0, tile_w = 0, tile_max = 9;
    std::string tile_image;
    tile->add_option("--height", tile_h)->check(CLI::PositiveNumber);
    tile->add_option("--width", tile_w)->check(CLI::PositiveNumber);
    tile->add_option("--max-tiles", tile_max)->check(CLI::PositiveNumber);
    tile->add_option("--image", tile_image);
    tile->callback([&] {
        int h = tile_h, w = tile_w;
        if (!tile_image.empty()) {
            vlm::Image img = vlm::load_ppm_file(tile_image);
            h = img.height;
            w = img.width;
        }
        if (h < 1 || w < 1)
            throw CLI::ValidationError("tile", "--height/--width or --image required");
        auto plan = vlm::select_resolution(h, w, vlm::candidate_resolutions(vlm::kBaseTile, tile_max));
        print_plan(plan);
    });

    // layout
    auto *layout = app.add_subcommand("layout", "Dump the visual token layout");
    int lay_m = 1, lay_n = 1, lay_images = 1;
    layout->add_option("--m", lay_m)->required()->check(CLI::PositiveNumber);
    layout->add_option("--n", lay_n)->required()->check(CLI::PositiveNumber);
    layout->add_option("--images", lay_images)->check(CLI::PositiveNumber);
    layout->callback([&] {
        std::cout << vlm::dump_layout(vlm::layout_visual_tokens(lay_m, lay_n, lay_images, 14));
    });

    // forward
    auto *fwd = app.add_subcommand("forward", "Run a toy forward pass on a PPM image");
    std::string fwd_config, fwd_image;
    std::uint64_t fwd_seed = 0;
    int fwd_prompt_len = 4;
    fwd->add_option("--config", fwd_config)->required();
    fwd->add_option("--image", fwd_image)->required();
    fwd->add_option("--seed", fwd_seed);
    fwd->add_option("--prompt-len", fwd_prompt_len)->check(CLI::PositiveNumber);
    fwd->callback([&] {
        vlm::ModelConfig cfg = vlm::config_from_json_file(fwd_config);
        vlm::Model model(cfg, fwd_seed);
        vlm::Image img = vlm::load_ppm_file(fwd_image);
        vlm::SequenceBatch batch;
        batch.token_ids.push_back(cfg.vocab_size + vlm::kImagePlaceholderRow);
        batch.image_slots.push_back(0);
        for (int i = 0; i < fwd_prompt_len; ++i)
            batch.token_ids.push_back((i * 7 + 3) % cfg.vocab_size);
        vlm::Tensor logits = model.forward(batch, {img});
        int last = logits.dim(0) - 1;
        int best = 0;
        for (int v = 1; v < logits.dim(1); ++v)
            if (logits.at(last, v) > logits.at(last, best))
                best = v;
        std::cout << "seq_len=" << logits.dim(0) << "\n"
                  << "logits_rows=" << logits.dim(0) << "\n"
                  << "logits_cols=" << logits.dim(1) << "\n"
                  << "next_token=" << best << "\n"
                  << "kv_floats_per_token=" << vlm::kv_cache_floats_per_token(cfg.attn_config())
                  << "\n";
    });

    // ground
    auto *ground = app.add_subcommand("ground", "Grounding grammar utilities");
    ground->require_subcommand(1);
    auto *gparse = ground->add_subcommand("parse", "Parse grammar text from stdin");
    gparse->callback([&] {
        std::string text((std::istreambuf_iterator<char>(std::cin)),
                         std::istreambuf_iterator<char>());
        vlm::GroundedMessage msg = vlm::parse_grounded(text);
        std::cout << "grounding_prefix=" << (msg.grounding_prefix ? 1 : 0) << "\n"
                  << "segments=" << msg.segments.size() << "\n";
        for (const auto &seg : msg.segments) {
            if (const auto *t = std::get_if<std::string>(&seg)) {
                std::cout << "text=" << *t << "\n";
            } else {
                const auto &span = std::get<vlm::GroundedSpan>(seg);
                vlm::GroundedMessage one;
                one.segments.emplace_back(span);
                std::cout << "span=" << vlm::serialize_grounded(one) << "\n";
            }
        }
    });
    auto *grender = ground->add_subcommand("render", "Serialize 'ref<TAB>x1,y1,x2,y2;...' lines");
    grender->callback([&] { std::cout << render_from_lines(std::cin) << "\n"; });

    // balance
    auto *balance = app.add_subcommand("balance", "LPT tile balancing across ranks");
    std::string bal_counts;
    int bal_ranks = 1;
    balance->add_option("--counts", bal_counts)->required();
    balance->add_option("--ranks", bal_ranks)->required()->check(CLI::PositiveNumber);
    balance->callback([&] {
        auto assignment = vlm::balance_tiles(parse_int_list(bal_counts), bal_ranks);
        for (std::size_t r = 0; r < assignment.loads.size(); ++r)
            std::cout << "load_" << r << "=" << assignment.loads[r] << "\n";
    });

    // stages
    auto *stages = app.add_subcommand("stages", "Min-max pipeline stage partition");
    std::string st_costs;
    int st_stages = 1;
    stages->add_option("--costs", st_costs)->required();
    stages->add_option("--stages", st_stages)->required()->check(CLI::PositiveNumber);
    stages->callback([&] {
        auto part = vlm::split_pipeline_stages(parse_double_list(st_costs), st_stages);
        for (std::size_t s = 0; s < part.stage_costs.size(); ++s)
            std::cout << "stage_" << s << "_cost=" << part.stage_costs[s] << "\n";
        for (std::size_t s = 0; s < part.boundaries.size(); ++s)
            std::cout << "split_" << s << "=" << part.boundaries[s] << "\n";
        std::cout << "max_cost=" << part.max_cost << "\n";
    });

    // config
    auto *config = app.add_subcommand("config", "Print architectural configuration");
    std::string cfg_variant;
    config->add_option("--variant", cfg_variant)->required();
    config->callback([&] { print_config(vlm::build_config(vlm::variant_from_string(cfg_variant))); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 2;
    } catch (const std::invalid_argument &e) {
        // Library precondition violations are usage errors too.
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
