#include "styleinv/generator.hpp"

#include <ATen/CPUGeneratorImpl.h>

namespace styleinv {

namespace F = torch::nn::functional;

int64_t GeneratorConfig::n_styles() const {
    int64_t log2res = 0;
    while ((1LL << log2res) < output_resolution) ++log2res;
    return 2 * (log2res - 1);
}

int64_t GeneratorConfig::channels(int64_t resolution) const {
    return std::clamp(channel_base / resolution, channel_min, channel_max);
}

void GeneratorConfig::validate() const {
    TORCH_CHECK(style_dim >= 1, "style_dim must be >= 1");
    TORCH_CHECK(base_resolution >= 1 &&
                    (base_resolution & (base_resolution - 1)) == 0,
                "base resolution must be a power of two");
    TORCH_CHECK(output_resolution >= base_resolution &&
                    (output_resolution & (output_resolution - 1)) == 0,
                "output resolution must be a power of two >= base resolution, got ",
                output_resolution);
    TORCH_CHECK(mapping_depth >= 0, "mapping depth must be >= 0");
}

MappingNetworkImpl::MappingNetworkImpl(int64_t style_dim, int64_t depth) {
    for (int64_t i = 0; i < depth; ++i) {
        layers.push_back(register_module("fc" + std::to_string(i),
                                         torch::nn::Linear(style_dim, style_dim)));
    }
}

torch::Tensor MappingNetworkImpl::forward(const torch::Tensor& z) {
    auto x = z;
    for (auto& layer : layers) {
        x = torch::leaky_relu(layer->forward(x), 0.2);
    }
    return x;
}

StyledBlockImpl::StyledBlockImpl(int64_t in_ch_, int64_t out_ch_, int64_t style_dim)
    : in_ch(in_ch_), out_ch(out_ch_) {
    affine = register_module("affine", torch::nn::Linear(style_dim, 2 * in_ch));
    torch::NoGradGuard guard;
    affine->weight.mul_(0.1);
    affine->bias.zero_();
    conv = register_module("conv", torch::nn::Conv2d(
        torch::nn::Conv2dOptions(in_ch, out_ch, 3).padding(1)));
    norm = register_module("norm", torch::nn::InstanceNorm2d(
        torch::nn::InstanceNorm2dOptions(in_ch).affine(false).track_running_stats(false)));
}

torch::Tensor StyledBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& w) {
    auto style = affine->forward(w);  // [B, 2*in_ch]
    auto chunks = style.chunk(2, 1);
    auto scale = chunks[0].unsqueeze(-1).unsqueeze(-1);
    auto shift = chunks[1].unsqueeze(-1).unsqueeze(-1);
    auto y = norm->forward(x) * (1.0 + scale) + shift;
    return torch::leaky_relu(conv->forward(y), 0.2);
}

GeneratorImpl::GeneratorImpl(const GeneratorConfig& cfg_) : cfg(cfg_) {
    cfg.validate();
    mapping = register_module("mapping", MappingNetwork(cfg.style_dim, cfg.mapping_depth));
    const_input = register_parameter(
        "const_input",
        torch::randn({1, cfg.channels(cfg.base_resolution), cfg.base_resolution,
                      cfg.base_resolution}));
    int64_t prev_ch = cfg.channels(cfg.base_resolution);
    int block_idx = 0;
    for (int64_t res = cfg.base_resolution; res <= cfg.output_resolution; res *= 2) {
        int64_t ch = cfg.channels(res);
        blocks.push_back(register_module("block" + std::to_string(block_idx++),
                                         StyledBlock(prev_ch, ch, cfg.style_dim)));
        blocks.push_back(register_module("block" + std::to_string(block_idx++),
                                         StyledBlock(ch, ch, cfg.style_dim)));
        prev_ch = ch;
    }
    TORCH_CHECK(static_cast<int64_t>(blocks.size()) == cfg.n_styles(),
                "block count ", blocks.size(), " != n_styles ", cfg.n_styles());
    to_rgb = register_module("to_rgb", torch::nn::Conv2d(
        torch::nn::Conv2dOptions(prev_ch, 3, 1)));
    w_avg = register_buffer("w_avg", torch::zeros({cfg.style_dim}));
}

torch::Tensor GeneratorImpl::mapping_forward(const torch::Tensor& z) {
    TORCH_CHECK(z.size(-1) == cfg.style_dim,
                "z dim ", z.size(-1), " != style_dim ", cfg.style_dim);
    return mapping->forward(z);
}

torch::Tensor GeneratorImpl::sample_w(int64_t n, uint64_t seed) {
    TORCH_CHECK(n >= 1, "sample_w needs n >= 1");
    auto gen = at::detail::createCPUGenerator(seed);
    auto z = torch::randn({n, cfg.style_dim}, gen,
                          torch::TensorOptions().dtype(torch::kFloat32));
    return mapping_forward(z);
}

torch::Tensor GeneratorImpl::synthesize(const torch::Tensor& codes) {
    return synthesize_collect(codes, nullptr);
}

torch::Tensor GeneratorImpl::synthesize_collect(const torch::Tensor& codes,
                                                std::vector<torch::Tensor>* features) {
    TORCH_CHECK(codes.dim() == 3 && codes.size(2) == cfg.style_dim,
                "codes must be [B, n_styles, ", cfg.style_dim, "], got ", codes.sizes());
    TORCH_CHECK(codes.size(1) == cfg.n_styles(),
                "expected ", cfg.n_styles(), " style rows, got ", codes.size(1));
    auto b = codes.size(0);
    auto x = const_input.expand({b, -1, -1, -1});
    int64_t style_idx = 0;
    for (int64_t res = cfg.base_resolution; res <= cfg.output_resolution; res *= 2) {
        if (res != cfg.base_resolution) {
            x = F::interpolate(x, F::InterpolateFuncOptions()
                                      .scale_factor(std::vector<double>{2.0, 2.0})
                                      .mode(torch::kNearest));
        }
        for (int half = 0; half < 2; ++half) {
            x = blocks[style_idx]->forward(x, codes.select(1, style_idx));
            if (features) {
                features->push_back(x);
            }
            ++style_idx;
        }
    }
    return torch::tanh(to_rgb->forward(x));
}

torch::Tensor GeneratorImpl::broadcast_w(const torch::Tensor& w) const {
    TORCH_CHECK(w.dim() == 1 || w.dim() == 2, "w must be [D] or [B, D]");
    auto w2 = w.dim() == 1 ? w.unsqueeze(0) : w;
    return w2.unsqueeze(1).expand({w2.size(0), cfg.n_styles(), cfg.style_dim}).contiguous();
}

void GeneratorImpl::refresh_w_avg(int64_t samples, uint64_t seed) {
    torch::NoGradGuard guard;
    w_avg.copy_(sample_w(samples, seed).mean(0));
}

torch::Tensor style_mix(const torch::Tensor& a, const torch::Tensor& b,
                        const std::vector<int64_t>& layers) {
    TORCH_CHECK(a.sizes() == b.sizes(), "style_mix needs same-shape codes, got ",
                a.sizes(), " vs ", b.sizes());
    auto result = a.clone();
    for (auto layer : layers) {
        TORCH_CHECK(layer >= 0 && layer < a.size(1),
                    "mix layer ", layer, " out of range [0, ", a.size(1), ")");
        result.select(1, layer).copy_(b.select(1, layer));
    }
    return result;
}

}  // namespace styleinv
