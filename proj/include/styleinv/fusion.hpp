#pragma once

#include "styleinv/backbone.hpp"

namespace styleinv {

// 2x bilinear upsample, linear channel alignment, normalization, then a gated
// trainable absolute-position table: out += pos_gate * abs_pos. The gate is
// initialized to zero so spatial coordinates are learned in only when useful.
class UpsampleBlockImpl : public torch::nn::Module {
public:
    UpsampleBlockImpl(int64_t dim_in, int64_t dim_out, int64_t out_side);
    TokenGrid forward(const TokenGrid& grid);

    torch::nn::Linear align{nullptr};
    torch::nn::LayerNorm norm{nullptr};
    torch::Tensor abs_pos;   // [out_side*out_side, dim_out]
    torch::Tensor pos_gate;  // scalar
    int64_t dim_in, dim_out, out_side;
};
TORCH_MODULE(UpsampleBlock);

// Multi-scale connections: every level receives residual contributions from
// all coarser levels. Contributions flow top-down from already-fused maps:
//   fused[3] = levels[3]
//   fused[i] = levels[i] + sum_{j>i} chain_{j->i}(fused[j])
// where chain_{j->i} composes (j-i) upsample blocks with their own parameters
// (6 chains, 10 blocks for 4 levels).
class PyramidFusionImpl : public torch::nn::Module {
public:
    explicit PyramidFusionImpl(const EncoderConfig& cfg);
    FeaturePyramid forward(const FeaturePyramid& pyr);

    // chains[j][i] upsamples from level j to level i (j > i).
    std::array<std::array<std::vector<UpsampleBlock>, 4>, 4> chains;
};
TORCH_MODULE(PyramidFusion);

}  // namespace styleinv
