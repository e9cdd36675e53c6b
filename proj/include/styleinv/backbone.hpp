#pragma once

#include "styleinv/attention.hpp"
#include "styleinv/core.hpp"

#include <vector>

namespace styleinv {

// Backbone outputs, finest first: levels[0] at side r, levels[3] at side r/8.
struct FeaturePyramid {
    std::array<TokenGrid, 4> levels;
    void validate() const;
};

class MlpImpl : public torch::nn::Module {
public:
    MlpImpl(int64_t dim, int64_t hidden);
    torch::Tensor forward(const torch::Tensor& x);
    torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(Mlp);

// Pre-norm transformer block: x + attn(norm(x)), then x + mlp(norm(x)).
class TransformerBlockImpl : public torch::nn::Module {
public:
    TransformerBlockImpl(int64_t dim, int64_t heads, int64_t window, int64_t shift,
                         QuerySource source, int64_t mlp_ratio = 4);
    TokenGrid forward(const TokenGrid& grid);

    torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr};
    WindowAttention attn{nullptr};
    Mlp mlp{nullptr};
    int64_t shift;
};
TORCH_MODULE(TransformerBlock);

// 2x downsampling: 2x2 neighbor concatenation, normalization, 4C -> 2C linear.
class PatchMergingImpl : public torch::nn::Module {
public:
    explicit PatchMergingImpl(int64_t dim);
    TokenGrid forward(const TokenGrid& grid);
    torch::nn::LayerNorm norm{nullptr};
    torch::nn::Linear reduce{nullptr};
};
TORCH_MODULE(PatchMerging);

// One backbone stage: `depth` blocks alternating shift 0 and ws/2.
// The window is clamped to the grid side; a single-window stage never shifts.
class StageImpl : public torch::nn::Module {
public:
    StageImpl(int64_t side, int64_t dim, int64_t depth, int64_t heads, int64_t window);
    TokenGrid forward(const TokenGrid& grid);

    std::vector<TransformerBlock> blocks;
    int64_t side, dim;
};
TORCH_MODULE(Stage);

class BackboneImpl : public torch::nn::Module {
public:
    explicit BackboneImpl(const EncoderConfig& cfg);
    FeaturePyramid forward(const torch::Tensor& img);

    PatchEmbed embed{nullptr};
    std::vector<Stage> stages;
    std::vector<PatchMerging> merges;
    EncoderConfig cfg;
};
TORCH_MODULE(Backbone);

}  // namespace styleinv
