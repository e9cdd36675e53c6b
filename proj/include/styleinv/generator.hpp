#pragma once

#include <torch/torch.h>

#include <vector>

namespace styleinv {

struct GeneratorConfig {
    int64_t style_dim = 512;
    int64_t base_resolution = 4;
    int64_t output_resolution = 64;
    int64_t mapping_depth = 8;
    int64_t channel_base = 1024;
    int64_t channel_max = 128;
    int64_t channel_min = 8;

    int64_t n_styles() const;
    int64_t channels(int64_t resolution) const;
    void validate() const;
};

// z -> w, a stack of linear + leaky-relu layers. Depth 0 is the identity.
class MappingNetworkImpl : public torch::nn::Module {
public:
    MappingNetworkImpl(int64_t style_dim, int64_t depth);
    torch::Tensor forward(const torch::Tensor& z);
    std::vector<torch::nn::Linear> layers;
};
TORCH_MODULE(MappingNetwork);

// One style-modulated block: instance-normalize, scale/shift from the affine
// map of the style code, 3x3 conv, leaky relu.
class StyledBlockImpl : public torch::nn::Module {
public:
    StyledBlockImpl(int64_t in_ch, int64_t out_ch, int64_t style_dim);
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& w);

    torch::nn::Linear affine{nullptr};
    torch::nn::Conv2d conv{nullptr};
    torch::nn::InstanceNorm2d norm{nullptr};
    int64_t in_ch, out_ch;
};
TORCH_MODULE(StyledBlock);

// Miniature style-based generator: learned constant start, two modulated
// blocks per resolution, 2x upsampling between resolutions, tanh output.
// No noise inputs; synthesis is deterministic.
class GeneratorImpl : public torch::nn::Module {
public:
    explicit GeneratorImpl(const GeneratorConfig& cfg);

    torch::Tensor mapping_forward(const torch::Tensor& z);
    // Seeded standard-normal z batch pushed through the mapping network.
    torch::Tensor sample_w(int64_t n, uint64_t seed);
    // codes [B, n_styles, style_dim] -> images [B, 3, R, R] in [-1, 1].
    torch::Tensor synthesize(const torch::Tensor& codes);
    // Same, collecting the feature map after every styled block.
    torch::Tensor synthesize_collect(const torch::Tensor& codes,
                                     std::vector<torch::Tensor>* features);
    // One w for every style row (plain-W synthesis).
    torch::Tensor broadcast_w(const torch::Tensor& w) const;

    // Mean style vector estimate, used by super-resolution regularization.
    void refresh_w_avg(int64_t samples, uint64_t seed);

    GeneratorConfig cfg;
    MappingNetwork mapping{nullptr};
    torch::Tensor const_input;
    std::vector<StyledBlock> blocks;
    torch::nn::Conv2d to_rgb{nullptr};
    torch::Tensor w_avg;  // buffer
};
TORCH_MODULE(Generator);

// result[i] = b[i] if i is listed, else a[i]; indices must be in range.
torch::Tensor style_mix(const torch::Tensor& a, const torch::Tensor& b,
                        const std::vector<int64_t>& layers);

}  // namespace styleinv
