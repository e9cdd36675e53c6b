#include "styleinv/backbone.hpp"

namespace styleinv {

void FeaturePyramid::validate() const {
    for (int i = 0; i < 4; ++i) {
        TORCH_CHECK(levels[i].data.defined(), "pyramid level ", i, " undefined");
    }
    for (int i = 0; i < 3; ++i) {
        TORCH_CHECK(levels[i].tokens() == 4 * levels[i + 1].tokens(),
                    "pyramid level ", i, " must hold 4x the tokens of level ", i + 1);
        TORCH_CHECK(levels[i].dim() < levels[i + 1].dim(),
                    "pyramid dims must strictly increase with depth");
    }
}

MlpImpl::MlpImpl(int64_t dim, int64_t hidden) {
    fc1 = register_module("fc1", torch::nn::Linear(dim, hidden));
    fc2 = register_module("fc2", torch::nn::Linear(hidden, dim));
}

torch::Tensor MlpImpl::forward(const torch::Tensor& x) {
    return fc2->forward(torch::gelu(fc1->forward(x)));
}

TransformerBlockImpl::TransformerBlockImpl(int64_t dim, int64_t heads, int64_t window,
                                           int64_t shift_, QuerySource source,
                                           int64_t mlp_ratio)
    : shift(shift_) {
    norm1 = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
    norm2 = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
    attn = register_module("attn", WindowAttention(dim, heads, window, source));
    mlp = register_module("mlp", Mlp(dim, dim * mlp_ratio));
}

TokenGrid TransformerBlockImpl::forward(const TokenGrid& grid) {
    auto attended = attn->forward(TokenGrid(norm1->forward(grid.data), grid.h, grid.w), shift);
    auto x = grid.data + attended.data;
    x = x + mlp->forward(norm2->forward(x));
    return TokenGrid(x, grid.h, grid.w);
}

PatchMergingImpl::PatchMergingImpl(int64_t dim) {
    norm = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({4 * dim})));
    reduce = register_module("reduce", torch::nn::Linear(
        torch::nn::LinearOptions(4 * dim, 2 * dim).bias(false)));
}

TokenGrid PatchMergingImpl::forward(const TokenGrid& grid) {
    auto merged = merge_neighbors(grid);
    return TokenGrid(reduce->forward(norm->forward(merged.data)), merged.h, merged.w);
}

StageImpl::StageImpl(int64_t side_, int64_t dim_, int64_t depth, int64_t heads, int64_t window)
    : side(side_), dim(dim_) {
    int64_t ws = std::min(window, side);
    TORCH_CHECK(side % ws == 0, "stage grid side ", side, " not divisible by window ", ws);
    bool can_shift = ws < side && ws > 1;
    for (int64_t d = 0; d < depth; ++d) {
        int64_t shift = (d % 2 == 1 && can_shift) ? ws / 2 : 0;
        auto block = TransformerBlock(dim, heads, ws, shift, QuerySource::Projected);
        blocks.push_back(register_module("block" + std::to_string(d), block));
    }
}

TokenGrid StageImpl::forward(const TokenGrid& grid) {
    TORCH_CHECK(grid.h == side && grid.w == side,
                "stage expects a ", side, "x", side, " grid, got ", grid.h, "x", grid.w);
    TORCH_CHECK(grid.dim() == dim, "stage expects dim ", dim, ", got ", grid.dim());
    auto x = grid;
    for (auto& block : blocks) {
        x = block->forward(x);
    }
    return x;
}

BackboneImpl::BackboneImpl(const EncoderConfig& cfg_) : cfg(cfg_) {
    cfg.validate();
    embed = register_module("embed", PatchEmbed(cfg.patch_size, 3, cfg.stage_dims[0]));
    for (int i = 0; i < 4; ++i) {
        stages.push_back(register_module(
            "stage" + std::to_string(i),
            Stage(cfg.grid_side(i), cfg.stage_dims[i], cfg.stage_depths[i],
                  cfg.stage_heads[i], cfg.stage_window[i])));
        if (i < 3) {
            TORCH_CHECK(cfg.stage_dims[i + 1] == 2 * cfg.stage_dims[i],
                        "stage dims must double between stages, got ",
                        cfg.stage_dims[i], " -> ", cfg.stage_dims[i + 1]);
            merges.push_back(register_module("merge" + std::to_string(i),
                                             PatchMerging(cfg.stage_dims[i])));
        }
    }
}

FeaturePyramid BackboneImpl::forward(const torch::Tensor& img) {
    check_image_batch(img);
    TORCH_CHECK(img.size(2) == cfg.input_resolution,
                "backbone expects ", cfg.input_resolution, "-pixel input, got ", img.size(2));
    FeaturePyramid pyr;
    auto x = embed->forward(img);
    for (int i = 0; i < 4; ++i) {
        x = stages[i]->forward(x);
        pyr.levels[i] = x;
        if (i < 3) {
            x = merges[i]->forward(x);
        }
    }
    pyr.validate();
    return pyr;
}

}  // namespace styleinv
