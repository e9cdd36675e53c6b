#include "styleinv/metrics.hpp"

#include <limits>

namespace styleinv {

namespace F = torch::nn::functional;

double mse_metric(const torch::Tensor& x, const torch::Tensor& xhat) {
    TORCH_CHECK(x.sizes() == xhat.sizes(),
                "metric shape mismatch: ", x.sizes(), " vs ", xhat.sizes());
    return torch::mse_loss(xhat.to(torch::kFloat64), x.to(torch::kFloat64)).item<double>();
}

double psnr_metric(const torch::Tensor& x, const torch::Tensor& xhat) {
    double mse = mse_metric(x, xhat);
    if (mse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    constexpr double peak = 2.0;
    return 10.0 * std::log10(peak * peak / mse);
}

torch::Tensor luminance(const torch::Tensor& img) {
    TORCH_CHECK(img.dim() == 4 && img.size(1) == 3,
                "luminance expects [B, 3, H, W], got ", img.sizes());
    auto x = img.to(torch::kFloat64);
    return 0.299 * x.select(1, 0) + 0.587 * x.select(1, 1) + 0.114 * x.select(1, 2);
}

double ssim_metric(const torch::Tensor& x, const torch::Tensor& xhat) {
    TORCH_CHECK(x.sizes() == xhat.sizes(),
                "metric shape mismatch: ", x.sizes(), " vs ", xhat.sizes());
    auto lx = luminance(x).unsqueeze(1);
    auto ly = luminance(xhat).unsqueeze(1);
    TORCH_CHECK(lx.size(-1) >= 8 && lx.size(-2) >= 8, "ssim needs images of side >= 8");

    constexpr double L = 2.0;
    const double c1 = (0.01 * L) * (0.01 * L);
    const double c2 = (0.03 * L) * (0.03 * L);
    auto window_mean = [](const torch::Tensor& t) {
        return F::avg_pool2d(t, F::AvgPool2dFuncOptions(8).stride(1));
    };
    auto mu_x = window_mean(lx);
    auto mu_y = window_mean(ly);
    auto sigma_x = window_mean(lx * lx) - mu_x * mu_x;
    auto sigma_y = window_mean(ly * ly) - mu_y * mu_y;
    auto sigma_xy = window_mean(lx * ly) - mu_x * mu_y;
    auto ssim_map = ((2 * mu_x * mu_y + c1) * (2 * sigma_xy + c2)) /
                    ((mu_x * mu_x + mu_y * mu_y + c1) * (sigma_x + sigma_y + c2));
    return ssim_map.mean().item<double>();
}

double distribution_gap(const torch::Tensor& codes, const torch::Tensor& w_batch) {
    TORCH_CHECK(codes.numel() > 0 && w_batch.numel() > 0, "distribution_gap needs nonempty inputs");
    auto d = codes.size(-1);
    TORCH_CHECK(w_batch.size(-1) == d, "style_dim mismatch in distribution_gap");
    auto p = torch::softmax(codes.reshape({-1, d}).to(torch::kFloat64), 1).mean(0);
    auto q = torch::softmax(w_batch.reshape({-1, d}).to(torch::kFloat64), 1).mean(0);
    auto kl_pq = (p * (torch::log(p) - torch::log(q))).sum();
    auto kl_qp = (q * (torch::log(q) - torch::log(p))).sum();
    return (kl_pq + kl_qp).item<double>();
}

}  // namespace styleinv
