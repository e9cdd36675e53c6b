#include "styleinv/discriminator.hpp"

#include <random>

namespace styleinv {

namespace F = torch::nn::functional;

ImageEncoderImpl::ImageEncoderImpl(int64_t resolution_, int64_t embed_dim)
    : resolution(resolution_) {
    TORCH_CHECK(resolution >= 8 && (resolution & (resolution - 1)) == 0,
                "encoder resolution must be a power of two >= 8, got ", resolution);
    int64_t side = resolution;
    int64_t ch = 3;
    int64_t next = 32;
    int idx = 0;
    while (side > 4) {
        convs.push_back(register_module(
            "conv" + std::to_string(idx++),
            torch::nn::Conv2d(torch::nn::Conv2dOptions(ch, next, 3).stride(2).padding(1))));
        ch = next;
        next = std::min<int64_t>(next * 2, 256);
        side /= 2;
    }
    proj = register_module("proj", torch::nn::Linear(ch * side * side, embed_dim));
}

torch::Tensor ImageEncoderImpl::forward(const torch::Tensor& img) {
    TORCH_CHECK(img.dim() == 4 && img.size(2) == resolution && img.size(3) == resolution,
                "encoder expects [B, 3, ", resolution, ", ", resolution, "], got ",
                img.sizes());
    auto x = img;
    for (auto& conv : convs) {
        x = torch::leaky_relu(conv->forward(x), 0.2);
    }
    return proj->forward(x.flatten(1));
}

InversionDiscriminatorImpl::InversionDiscriminatorImpl(int64_t resolution, int64_t embed_dim,
                                                       double momentum_)
    : momentum(momentum_) {
    TORCH_CHECK(momentum >= 0.0 && momentum < 1.0,
                "momentum must be in [0, 1), got ", momentum);
    query = register_module("query", ImageEncoder(resolution, embed_dim));
    momentum_encoder = register_module("momentum_encoder", ImageEncoder(resolution, embed_dim));
    torch::NoGradGuard guard;
    auto q_params = query->parameters();
    auto k_params = momentum_encoder->parameters();
    for (size_t i = 0; i < q_params.size(); ++i) {
        k_params[i].copy_(q_params[i]);
        k_params[i].set_requires_grad(false);
    }
}

torch::Tensor InversionDiscriminatorImpl::encode(const torch::Tensor& img, Branch which) {
    if (which == Branch::Momentum) {
        torch::NoGradGuard guard;
        return momentum_encoder->forward(img);
    }
    return query->forward(img);
}

torch::Tensor InversionDiscriminatorImpl::score(const torch::Tensor& a,
                                                const torch::Tensor& b) {
    TORCH_CHECK(a.size(0) == b.size(0),
                "score needs equal batch sizes, got ", a.size(0), " vs ", b.size(0));
    auto ea = encode(a, Branch::Query);
    auto eb = encode(b, Branch::Momentum);
    auto na = ea.norm(2, -1);
    auto nb = eb.norm(2, -1);
    TORCH_CHECK(na.min().item<double>() > 0 && nb.min().item<double>() > 0,
                "score: zero-norm embedding");
    return (ea * eb).sum(-1) / (na * nb);
}

void InversionDiscriminatorImpl::momentum_update() {
    torch::NoGradGuard guard;
    auto q_params = query->parameters();
    auto k_params = momentum_encoder->parameters();
    for (size_t i = 0; i < q_params.size(); ++i) {
        k_params[i].mul_(momentum).add_(q_params[i], 1.0 - momentum);
    }
}

PlainDiscriminatorImpl::PlainDiscriminatorImpl(int64_t resolution, int64_t embed_dim) {
    encoder = register_module("encoder", ImageEncoder(resolution, embed_dim));
    head = register_module("head", torch::nn::Linear(embed_dim, 1));
}

torch::Tensor PlainDiscriminatorImpl::forward(const torch::Tensor& img) {
    return head->forward(torch::leaky_relu(encoder->forward(img), 0.2)).squeeze(-1);
}

namespace {

// Portable uniform draws; std::uniform_real_distribution is
// implementation-defined and would break cross-platform reproducibility.
struct Rand {
    explicit Rand(uint64_t seed) : eng(seed) {}
    double uniform() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
    double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int64_t below(int64_t n) { return n <= 1 ? 0 : static_cast<int64_t>(eng() % static_cast<uint64_t>(n)); }
    bool coin() { return uniform() < 0.5; }
    std::mt19937_64 eng;
};

torch::Tensor augment_one(const torch::Tensor& img, Rand& rng, bool strong,
                          const AugmentConfig& cfg) {
    auto x = img;
    int64_t h = x.size(-2), w = x.size(-1);
    if (strong && cfg.crop) {
        double scale = rng.range(0.8, 1.0);
        int64_t cs = std::max<int64_t>(1, static_cast<int64_t>(std::lround(scale * h)));
        int64_t top = rng.below(h - cs + 1);
        int64_t left = rng.below(w - cs + 1);
        x = x.narrow(-2, top, cs).narrow(-1, left, cs);
        x = F::interpolate(x, F::InterpolateFuncOptions()
                                  .size(std::vector<int64_t>{h, w})
                                  .mode(torch::kBilinear)
                                  .align_corners(false));
    }
    if (cfg.flip && rng.coin()) {
        x = torch::flip(x, {-1});
    }
    if (strong && cfg.jitter) {
        double brightness = rng.range(-0.2, 0.2);
        double contrast = rng.range(0.8, 1.2);
        x = x * contrast + brightness;
    }
    return torch::clamp(x, -1.0, 1.0);
}

}  // namespace

std::pair<torch::Tensor, torch::Tensor> augment_pair(const torch::Tensor& strong_side,
                                                     const torch::Tensor& weak_side,
                                                     uint64_t seed,
                                                     const AugmentConfig& cfg) {
    TORCH_CHECK(strong_side.sizes() == weak_side.sizes(),
                "augment_pair shape mismatch: ", strong_side.sizes(), " vs ",
                weak_side.sizes());
    if (!cfg.enabled) {
        return {strong_side, weak_side};
    }
    Rand rng(seed);
    std::vector<torch::Tensor> a, b;
    for (int64_t i = 0; i < strong_side.size(0); ++i) {
        a.push_back(augment_one(strong_side.narrow(0, i, 1), rng, /*strong=*/true, cfg));
        b.push_back(augment_one(weak_side.narrow(0, i, 1), rng, /*strong=*/false, cfg));
    }
    return {torch::cat(a, 0), torch::cat(b, 0)};
}

}  // namespace styleinv
