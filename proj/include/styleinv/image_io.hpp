#pragma once

#include <torch/torch.h>

#include <string>

namespace styleinv {

// 8-bit RGB PNG -> [3, H, W] float in [-1, 1] (x / 127.5 - 1).
torch::Tensor read_png(const std::string& path);

// [3, H, W] (or [1, 3, H, W]) in [-1, 1] -> 8-bit RGB PNG. Values are clamped
// and rounded to nearest; a write/read round trip preserves 8-bit pixels
// exactly.
void write_png(const std::string& path, const torch::Tensor& img);

// [H, W] in [0, 1] -> 8-bit grayscale PNG.
void write_png_gray(const std::string& path, const torch::Tensor& gray);

// Text round trips for latent codes and edit directions. Codes files hold
// n_styles whitespace-separated rows of style_dim reals; directions hold
// either one style_dim vector or one row per style index.
void write_codes(const std::string& path, const torch::Tensor& codes);
torch::Tensor read_codes(const std::string& path, int64_t style_dim);
torch::Tensor read_direction(const std::string& path, int64_t n_styles, int64_t style_dim);

}  // namespace styleinv
