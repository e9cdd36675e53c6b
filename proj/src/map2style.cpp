#include "styleinv/map2style.hpp"

namespace styleinv {

int64_t styles_for_resolution(int64_t output_resolution) {
    TORCH_CHECK(output_resolution >= 8 &&
                    (output_resolution & (output_resolution - 1)) == 0,
                "output resolution must be a power of two >= 8, got ", output_resolution);
    int64_t log2res = 0;
    while ((1LL << log2res) < output_resolution) ++log2res;
    return 2 * (log2res - 1);
}

void Map2StyleConfig::validate() const {
    TORCH_CHECK(style_dim >= 1 && n_styles >= 1, "style_dim and n_styles must be >= 1");
    TORCH_CHECK(lq_window >= 1, "lq_window must be >= 1");
    int64_t total = 0;
    for (auto c : level_counts) {
        TORCH_CHECK(c >= 0, "level counts must be nonnegative");
        total += c;
    }
    TORCH_CHECK(total == n_styles,
                "level counts ", level_counts[0], ",", level_counts[1], ",",
                level_counts[2], ",", level_counts[3],
                " do not partition ", n_styles, " styles");
}

int Map2StyleConfig::level_of_style(int64_t s) const {
    TORCH_CHECK(s >= 0 && s < n_styles, "style index ", s, " out of range");
    int64_t upto = 0;
    for (int group = 0; group < 4; ++group) {
        upto += level_counts[group];
        if (s < upto) {
            return 3 - group;  // group 0 owns the coarsest level (pyramid index 3)
        }
    }
    TORCH_CHECK(false, "style index ", s, " not covered by level counts");
}

Map2StyleConfig Map2StyleConfig::for_resolution(int64_t output_resolution, int64_t style_dim) {
    Map2StyleConfig cfg;
    cfg.style_dim = style_dim;
    cfg.n_styles = styles_for_resolution(output_resolution);
    int64_t base = cfg.n_styles / 4;
    int64_t rem = cfg.n_styles % 4;
    cfg.level_counts = {base, base, base, base};
    const int order[4] = {1, 2, 0, 3};  // middle levels absorb the remainder first
    for (int64_t r = 0; r < rem; ++r) {
        cfg.level_counts[order[r]] += 1;
    }
    cfg.validate();
    return cfg;
}

TowerPlan TowerPlan::for_tokens(int64_t token_count) {
    TORCH_CHECK(token_count >= 1, "tower needs at least one token");
    int64_t k = 0;
    int64_t n = token_count;
    while (n > 1) {
        TORCH_CHECK(n % 4 == 0, "token count ", token_count,
                    " is not a power of 4; cannot merge down to 16 tokens");
        n /= 4;
        ++k;
    }
    TowerPlan plan;
    plan.merges = std::max<int64_t>(0, k - 2);
    plan.reductions = k - plan.merges;
    return plan;
}

StyleTowerImpl::StyleTowerImpl(int64_t side, int64_t dim, const Map2StyleConfig& cfg)
    : in_side(side), in_dim(dim) {
    auto plan = TowerPlan::for_tokens(side * side);
    int64_t cur_side = side;
    int64_t cur_dim = dim;
    for (int64_t m = 0; m < plan.merges; ++m) {
        merges.push_back(register_module("merge" + std::to_string(m), PatchMerging(cur_dim)));
        cur_side /= 2;
        cur_dim *= 2;
        if (cfg.block != TowerBlock::LinearOnly) {
            int64_t ws = std::min(cfg.lq_window, cur_side);
            auto source = cfg.block == TowerBlock::LearnableQuery ? QuerySource::Learnable
                                                                  : QuerySource::Projected;
            // heads: one per 32 channels, at least 1
            int64_t heads = std::max<int64_t>(1, cur_dim / 32);
            while (cur_dim % heads != 0) --heads;
            blocks.push_back(register_module(
                "block" + std::to_string(m),
                TransformerBlock(cur_dim, heads, ws, /*shift=*/0, source)));
        }
    }
    for (int64_t r = 0; r < plan.reductions; ++r) {
        reducers.push_back(register_module(
            "reduce" + std::to_string(r),
            torch::nn::Linear(torch::nn::LinearOptions(4 * cur_dim, cur_dim).bias(false))));
        cur_side /= 2;
    }
    head = register_module("head", torch::nn::Linear(cur_dim, cfg.style_dim));
}

torch::Tensor StyleTowerImpl::forward(const TokenGrid& grid) {
    TORCH_CHECK(grid.h == in_side && grid.w == in_side && grid.dim() == in_dim,
                "tower expects ", in_side, "x", in_side, "x", in_dim, ", got ",
                grid.h, "x", grid.w, "x", grid.dim());
    auto x = grid;
    for (size_t m = 0; m < merges.size(); ++m) {
        x = merges[m]->forward(x);
        if (!blocks.empty()) {
            x = blocks[m]->forward(x);
        }
    }
    for (auto& reduce : reducers) {
        auto packed = merge_neighbors(x);
        x = TokenGrid(reduce->forward(packed.data), packed.h, packed.w);
    }
    TORCH_CHECK(x.tokens() == 1, "tower did not reduce to a single token");
    return head->forward(x.data.squeeze(1));
}

Map2StyleImpl::Map2StyleImpl(const EncoderConfig& enc, const Map2StyleConfig& cfg_)
    : cfg(cfg_) {
    cfg.validate();
    for (int64_t s = 0; s < cfg.n_styles; ++s) {
        int level = cfg.level_of_style(s);
        towers.push_back(register_module(
            "tower" + std::to_string(s),
            StyleTower(enc.grid_side(level), enc.stage_dims[level], cfg)));
    }
}

torch::Tensor Map2StyleImpl::forward(const FeaturePyramid& fused) {
    fused.validate();
    std::vector<torch::Tensor> codes;
    codes.reserve(towers.size());
    for (int64_t s = 0; s < cfg.n_styles; ++s) {
        codes.push_back(towers[s]->forward(fused.levels[cfg.level_of_style(s)]));
    }
    return torch::stack(codes, 1);  // [B, n_styles, style_dim]
}

}  // namespace styleinv
