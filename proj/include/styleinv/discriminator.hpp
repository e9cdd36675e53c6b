#pragma once

#include <torch/torch.h>

#include <utility>
#include <vector>

namespace styleinv {

// Strided conv stack down to 4x4, flatten, linear projection to an embedding.
class ImageEncoderImpl : public torch::nn::Module {
public:
    ImageEncoderImpl(int64_t resolution, int64_t embed_dim = 256);
    torch::Tensor forward(const torch::Tensor& img);

    std::vector<torch::nn::Conv2d> convs;
    torch::nn::Linear proj{nullptr};
    int64_t resolution;
};
TORCH_MODULE(ImageEncoder);

enum class Branch { Query, Momentum };

// Dual-encoder scorer: a query encoder plus a momentum shadow copy, scored by
// cosine similarity over (candidate, reference) image pairs. The momentum
// branch never receives gradient; momentum_update is its only writer.
class InversionDiscriminatorImpl : public torch::nn::Module {
public:
    InversionDiscriminatorImpl(int64_t resolution, int64_t embed_dim = 256,
                               double momentum = 0.999);

    torch::Tensor encode(const torch::Tensor& img, Branch which);
    // cosine(query(a_i), momentum(b_i)) per pair, in [-1, 1].
    torch::Tensor score(const torch::Tensor& a, const torch::Tensor& b);
    // k <- momentum * k + (1 - momentum) * q, elementwise; q untouched.
    void momentum_update();

    ImageEncoder query{nullptr};
    ImageEncoder momentum_encoder{nullptr};
    double momentum;
};
TORCH_MODULE(InversionDiscriminator);

// Generation-style stand-in: single encoder and a linear head scoring one
// image (the ablation replacement for the dual-encoder scorer).
class PlainDiscriminatorImpl : public torch::nn::Module {
public:
    explicit PlainDiscriminatorImpl(int64_t resolution, int64_t embed_dim = 256);
    torch::Tensor forward(const torch::Tensor& img);  // [B] raw scores

    ImageEncoder encoder{nullptr};
    torch::nn::Linear head{nullptr};
};
TORCH_MODULE(PlainDiscriminator);

struct AugmentConfig {
    bool enabled = true;
    bool crop = true;
    bool flip = true;
    bool jitter = true;
};

// Unbalanced pair augmentation: a strong pipeline (crop-resize, flip,
// brightness/contrast jitter) on the first image and a weak one (flip only)
// on the second. Seeded and reproducible; outputs stay in [-1, 1].
std::pair<torch::Tensor, torch::Tensor> augment_pair(const torch::Tensor& strong_side,
                                                     const torch::Tensor& weak_side,
                                                     uint64_t seed,
                                                     const AugmentConfig& cfg = {});

}  // namespace styleinv
