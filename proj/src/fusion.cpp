#include "styleinv/fusion.hpp"

namespace styleinv {

namespace F = torch::nn::functional;

UpsampleBlockImpl::UpsampleBlockImpl(int64_t dim_in_, int64_t dim_out_, int64_t out_side_)
    : dim_in(dim_in_), dim_out(dim_out_), out_side(out_side_) {
    align = register_module("align", torch::nn::Linear(dim_in, dim_out));
    norm = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim_out})));
    abs_pos = register_parameter("abs_pos", torch::randn({out_side * out_side, dim_out}) * 0.02);
    pos_gate = register_parameter("pos_gate", torch::zeros({}));
}

TokenGrid UpsampleBlockImpl::forward(const TokenGrid& grid) {
    TORCH_CHECK(grid.dim() == dim_in,
                "upsample block expects dim ", dim_in, ", got ", grid.dim());
    TORCH_CHECK(2 * grid.h == out_side && 2 * grid.w == out_side,
                "upsample block targets side ", out_side, ", got input ", grid.h, "x", grid.w);
    auto x = F::interpolate(grid.as_image(),
                            F::InterpolateFuncOptions()
                                .size(std::vector<int64_t>{out_side, out_side})
                                .mode(torch::kBilinear)
                                .align_corners(false));
    auto up = TokenGrid::from_image(x);
    auto tokens = norm->forward(align->forward(up.data));
    tokens = tokens + pos_gate * abs_pos.unsqueeze(0);
    return TokenGrid(tokens, out_side, out_side);
}

PyramidFusionImpl::PyramidFusionImpl(const EncoderConfig& cfg) {
    cfg.validate();
    for (int j = 1; j < 4; ++j) {
        for (int i = 0; i < j; ++i) {
            // Steps j -> j-1 -> ... -> i; step k maps level-k geometry onto
            // level k-1 (side doubles, dim stage_dims[k] -> stage_dims[k-1]).
            for (int k = j; k > i; --k) {
                chains[j][i].push_back(register_module(
                    "up_" + std::to_string(j) + "_to_" + std::to_string(i) +
                        "_step" + std::to_string(j - k),
                    UpsampleBlock(cfg.stage_dims[k], cfg.stage_dims[k - 1],
                                  cfg.grid_side(k - 1))));
            }
        }
    }
}

FeaturePyramid PyramidFusionImpl::forward(const FeaturePyramid& pyr) {
    pyr.validate();
    FeaturePyramid fused;
    fused.levels[3] = pyr.levels[3];
    for (int i = 2; i >= 0; --i) {
        auto acc = pyr.levels[i].data;
        for (int j = i + 1; j < 4; ++j) {
            auto contrib = fused.levels[j];
            for (auto& block : chains[j][i]) {
                contrib = block->forward(contrib);
            }
            acc = acc + contrib.data;
        }
        fused.levels[i] = TokenGrid(acc, pyr.levels[i].h, pyr.levels[i].w);
    }
    return fused;
}

}  // namespace styleinv
