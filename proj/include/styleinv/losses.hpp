#pragma once

#include <torch/torch.h>

#include <functional>
#include <string>
#include <vector>

namespace styleinv {

struct LossWeights {
    double pixel = 1.0;
    double perceptual = 0.8;
    double identity = 0.1;
    double dist_align = 0.1;
    double adversarial = 1e-4;
};

// How latent-code rows are paired with sampled style vectors for the
// distribution-alignment KL.
enum class DaMode {
    PerVector,  // row i vs sampled row (i mod m), mean of the KLs
    Mean,       // KL between the two batch-aggregated softmax distributions
};

using FeatureFn = std::function<std::vector<torch::Tensor>(const torch::Tensor&)>;
using EmbedFn = std::function<torch::Tensor(const torch::Tensor&)>;

// Mean squared error over all elements.
torch::Tensor pixel_loss(const torch::Tensor& x, const torch::Tensor& xhat);

// Mean over extractor layers of the MSE between channel-unit-normalized
// feature maps; normalization is v * rsqrt(sum_c v^2 + 1e-8).
torch::Tensor perceptual_loss(const torch::Tensor& x, const torch::Tensor& xhat,
                              const FeatureFn& features);

// 1 - cosine(embed(x), embed(xhat)); embeddings must have nonzero norm.
torch::Tensor id_loss(const torch::Tensor& x, const torch::Tensor& xhat,
                      const EmbedFn& embed);

// KL between softmax-normalized latent-code rows and softmax-normalized
// sampled style vectors.
torch::Tensor da_loss(const torch::Tensor& codes, const torch::Tensor& w_batch,
                      DaMode mode = DaMode::PerVector);

// Least-squares objectives on discriminator scores (means over the batch):
//   D: (D_real - 1)^2 + (D_fake + 1)^2      G/E: (D_fake - 1)^2
torch::Tensor adv_d_loss(const torch::Tensor& d_real, const torch::Tensor& d_fake);
torch::Tensor adv_g_loss(const torch::Tensor& d_fake);

// Mean squared deviation of every code row from the average style vector.
torch::Tensor sr_regularization(const torch::Tensor& codes, const torch::Tensor& w_avg);

struct LossComponents {
    torch::Tensor pixel, perceptual, identity, dist_align, adversarial;
};

// Weighted sum; a NaN component is an error naming the component.
torch::Tensor total_loss(const LossComponents& c, const LossWeights& w);

// Frozen, seeded random conv stack standing in for a pretrained perceptual
// network; returns one activation map per layer.
class RandomFeatureExtractorImpl : public torch::nn::Module {
public:
    explicit RandomFeatureExtractorImpl(uint64_t seed);
    std::vector<torch::Tensor> features(const torch::Tensor& img);
    FeatureFn fn();
    std::vector<torch::nn::Conv2d> convs;
};
TORCH_MODULE(RandomFeatureExtractor);

// Frozen, seeded random projection standing in for a pretrained identity
// embedder; output rows are unit-norm.
class RandomEmbedderImpl : public torch::nn::Module {
public:
    RandomEmbedderImpl(int64_t resolution, int64_t embed_dim, uint64_t seed);
    torch::Tensor forward(const torch::Tensor& img);
    EmbedFn fn();
    torch::Tensor weight;
    int64_t resolution;
};
TORCH_MODULE(RandomEmbedder);

}  // namespace styleinv
