#include "styleinv/losses.hpp"

#include <ATen/CPUGeneratorImpl.h>

namespace styleinv {

torch::Tensor pixel_loss(const torch::Tensor& x, const torch::Tensor& xhat) {
    TORCH_CHECK(x.sizes() == xhat.sizes(),
                "pixel_loss shape mismatch: ", x.sizes(), " vs ", xhat.sizes());
    return torch::mse_loss(xhat, x);
}

namespace {

torch::Tensor channel_unit_normalize(const torch::Tensor& f) {
    auto norm_sq = (f * f).sum(1, /*keepdim=*/true);
    return f * torch::rsqrt(norm_sq + 1e-8);
}

}  // namespace

torch::Tensor perceptual_loss(const torch::Tensor& x, const torch::Tensor& xhat,
                              const FeatureFn& features) {
    TORCH_CHECK(x.sizes() == xhat.sizes(),
                "perceptual_loss shape mismatch: ", x.sizes(), " vs ", xhat.sizes());
    auto fx = features(x);
    auto fy = features(xhat);
    TORCH_CHECK(!fx.empty() && fx.size() == fy.size(),
                "feature extractor must yield at least one layer per image");
    torch::Tensor acc;
    for (size_t i = 0; i < fx.size(); ++i) {
        auto d = torch::mse_loss(channel_unit_normalize(fy[i]), channel_unit_normalize(fx[i]));
        acc = acc.defined() ? acc + d : d;
    }
    return acc / static_cast<double>(fx.size());
}

torch::Tensor id_loss(const torch::Tensor& x, const torch::Tensor& xhat,
                      const EmbedFn& embed) {
    auto ex = embed(x);
    auto ey = embed(xhat);
    auto nx = ex.norm(2, -1);
    auto ny = ey.norm(2, -1);
    TORCH_CHECK(nx.min().item<double>() > 0 && ny.min().item<double>() > 0,
                "id_loss: zero-norm embedding");
    auto cos = (ex * ey).sum(-1) / (nx * ny);
    return (1.0 - cos).mean();
}

torch::Tensor da_loss(const torch::Tensor& codes, const torch::Tensor& w_batch,
                      DaMode mode) {
    TORCH_CHECK(w_batch.dim() == 2 && w_batch.size(0) >= 1,
                "da_loss needs a nonempty [m, style_dim] style batch");
    auto d = codes.size(-1);
    TORCH_CHECK(w_batch.size(1) == d,
                "style_dim mismatch: codes ", d, " vs style batch ", w_batch.size(1));
    auto rows = codes.reshape({-1, d});
    if (mode == DaMode::Mean) {
        auto p = torch::softmax(rows, 1).mean(0);
        auto q = torch::softmax(w_batch, 1).mean(0);
        return (p * (torch::log(p) - torch::log(q))).sum();
    }
    auto idx = torch::arange(rows.size(0), torch::kLong) % w_batch.size(0);
    auto paired = w_batch.index_select(0, idx);
    auto logp = torch::log_softmax(rows, 1);
    auto logq = torch::log_softmax(paired, 1);
    auto p = torch::softmax(rows, 1);
    return (p * (logp - logq)).sum(1).mean();
}

torch::Tensor adv_d_loss(const torch::Tensor& d_real, const torch::Tensor& d_fake) {
    return ((d_real - 1).pow(2) + (d_fake + 1).pow(2)).mean();
}

torch::Tensor adv_g_loss(const torch::Tensor& d_fake) {
    return (d_fake - 1).pow(2).mean();
}

torch::Tensor sr_regularization(const torch::Tensor& codes, const torch::Tensor& w_avg) {
    TORCH_CHECK(codes.size(-1) == w_avg.size(-1),
                "sr_regularization shape mismatch: ", codes.sizes(), " vs ", w_avg.sizes());
    return (codes - w_avg).pow(2).mean();
}

torch::Tensor total_loss(const LossComponents& c, const LossWeights& w) {
    auto check = [](const torch::Tensor& t, const char* name) {
        TORCH_CHECK(t.defined(), "total_loss: missing component ", name);
        TORCH_CHECK(!torch::isnan(t).any().item<bool>(),
                    "total_loss: NaN in component ", name);
    };
    check(c.pixel, "pixel");
    check(c.perceptual, "perceptual");
    check(c.identity, "identity");
    check(c.dist_align, "dist_align");
    check(c.adversarial, "adversarial");
    return w.pixel * c.pixel + w.perceptual * c.perceptual + w.identity * c.identity +
           w.dist_align * c.dist_align + w.adversarial * c.adversarial;
}

RandomFeatureExtractorImpl::RandomFeatureExtractorImpl(uint64_t seed) {
    auto gen = at::detail::createCPUGenerator(seed);
    const int64_t chs[4] = {3, 16, 32, 64};
    for (int i = 0; i < 3; ++i) {
        auto conv = torch::nn::Conv2d(
            torch::nn::Conv2dOptions(chs[i], chs[i + 1], 3).stride(2).padding(1));
        torch::NoGradGuard guard;
        double fan_in = static_cast<double>(chs[i]) * 9;
        conv->weight.copy_(torch::randn(conv->weight.sizes(), gen,
                                        torch::TensorOptions().dtype(torch::kFloat32)) *
                           std::sqrt(2.0 / fan_in));
        conv->bias.zero_();
        convs.push_back(register_module("conv" + std::to_string(i), conv));
    }
    for (auto& p : parameters()) {
        p.set_requires_grad(false);
    }
}

std::vector<torch::Tensor> RandomFeatureExtractorImpl::features(const torch::Tensor& img) {
    std::vector<torch::Tensor> out;
    auto x = img;
    for (auto& conv : convs) {
        x = torch::leaky_relu(conv->forward(x), 0.2);
        out.push_back(x);
    }
    return out;
}

FeatureFn RandomFeatureExtractorImpl::fn() {
    return [this](const torch::Tensor& img) { return features(img); };
}

RandomEmbedderImpl::RandomEmbedderImpl(int64_t resolution_, int64_t embed_dim, uint64_t seed)
    : resolution(resolution_) {
    auto gen = at::detail::createCPUGenerator(seed);
    int64_t in_dim = 3 * resolution * resolution;
    weight = register_buffer(
        "weight", torch::randn({in_dim, embed_dim}, gen,
                               torch::TensorOptions().dtype(torch::kFloat32)) /
                      std::sqrt(static_cast<double>(in_dim)));
}

torch::Tensor RandomEmbedderImpl::forward(const torch::Tensor& img) {
    TORCH_CHECK(img.size(-1) == resolution,
                "embedder expects ", resolution, "-pixel images, got ", img.size(-1));
    auto flat = img.reshape({img.size(0), -1});
    auto e = torch::matmul(flat, weight);
    auto norm = e.norm(2, -1, /*keepdim=*/true);
    TORCH_CHECK(norm.min().item<double>() > 0, "embedder produced a zero embedding");
    return e / norm;
}

EmbedFn RandomEmbedderImpl::fn() {
    return [this](const torch::Tensor& img) { return forward(img); };
}

}  // namespace styleinv
