#include "styleinv/encoder.hpp"

namespace styleinv {

EncoderImpl::EncoderImpl(const EncoderConfig& enc, const Map2StyleConfig& m2s,
                         bool multi_scale_)
    : multi_scale(multi_scale_) {
    backbone = register_module("backbone", Backbone(enc));
    if (multi_scale) {
        fusion = register_module("fusion", PyramidFusion(enc));
    }
    map2style = register_module("map2style", Map2Style(enc, m2s));
}

FeaturePyramid EncoderImpl::fused_pyramid(const torch::Tensor& img) {
    auto pyr = backbone->forward(img);
    return multi_scale ? fusion->forward(pyr) : pyr;
}

torch::Tensor EncoderImpl::forward(const torch::Tensor& img) {
    return map2style->forward(fused_pyramid(img));
}

}  // namespace styleinv
