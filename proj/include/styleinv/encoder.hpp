#pragma once

#include "styleinv/fusion.hpp"
#include "styleinv/map2style.hpp"

namespace styleinv {

// Image -> extended latent codes [B, n_styles, style_dim]: hierarchical
// backbone, optional multi-scale connections, per-style towers.
class EncoderImpl : public torch::nn::Module {
public:
    EncoderImpl(const EncoderConfig& enc, const Map2StyleConfig& m2s, bool multi_scale);

    torch::Tensor forward(const torch::Tensor& img);
    FeaturePyramid fused_pyramid(const torch::Tensor& img);

    Backbone backbone{nullptr};
    PyramidFusion fusion{nullptr};  // null when multi-scale connections are off
    Map2Style map2style{nullptr};
    bool multi_scale;
};
TORCH_MODULE(Encoder);

}  // namespace styleinv
