#pragma once

#include <torch/torch.h>

namespace styleinv {

struct EvalMetrics {
    double mse = 0.0;
    double psnr = 0.0;  // +inf for identical images
    double ssim = 0.0;
    double perceptual = 0.0;
};

// All metric math runs in float64 internally.
double mse_metric(const torch::Tensor& x, const torch::Tensor& xhat);

// 10*log10(peak^2 / mse) with peak = 2 (the [-1, 1] range width).
double psnr_metric(const torch::Tensor& x, const torch::Tensor& xhat);

// SSIM on the Rec.601 luminance of both images, sliding 8x8 uniform windows,
// standard constants C1 = (0.01*L)^2, C2 = (0.03*L)^2 with L = 2.
double ssim_metric(const torch::Tensor& x, const torch::Tensor& xhat);

// Rec.601 luminance [B, H, W] of an RGB batch.
torch::Tensor luminance(const torch::Tensor& img);

// Symmetric KL between the batch-aggregated softmax distribution of the code
// rows and that of the sampled style vectors.
double distribution_gap(const torch::Tensor& codes, const torch::Tensor& w_batch);

}  // namespace styleinv
