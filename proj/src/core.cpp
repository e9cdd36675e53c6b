#include "styleinv/core.hpp"

namespace styleinv {

TokenGrid::TokenGrid(torch::Tensor data_, int64_t h_, int64_t w_)
    : data(std::move(data_)), h(h_), w(w_) {
    TORCH_CHECK(data.dim() == 3, "TokenGrid expects [batch, tokens, dim], got ", data.sizes());
    TORCH_CHECK(h >= 1 && w >= 1, "TokenGrid needs h, w >= 1, got ", h, "x", w);
    TORCH_CHECK(data.size(1) == h * w,
                "TokenGrid sequence length ", data.size(1), " does not equal h*w = ", h * w);
}

torch::Tensor TokenGrid::as_image() const {
    return data.transpose(1, 2).reshape({batch(), dim(), h, w});
}

TokenGrid TokenGrid::from_image(const torch::Tensor& nchw) {
    TORCH_CHECK(nchw.dim() == 4, "from_image expects [B, C, H, W], got ", nchw.sizes());
    auto b = nchw.size(0), c = nchw.size(1), h = nchw.size(2), w = nchw.size(3);
    return TokenGrid(nchw.reshape({b, c, h * w}).transpose(1, 2).contiguous(), h, w);
}

void check_image_batch(const torch::Tensor& img) {
    TORCH_CHECK(img.dim() == 4, "image batch must be [B, C, H, W], got ", img.sizes());
    TORCH_CHECK(img.size(2) == img.size(3),
                "images must be square, got ", img.size(2), "x", img.size(3));
}

int64_t EncoderConfig::grid_side(int stage) const {
    return (input_resolution / patch_size) >> stage;
}

int64_t EncoderConfig::effective_window(int stage) const {
    return std::min(stage_window[stage], grid_side(stage));
}

void EncoderConfig::validate() const {
    TORCH_CHECK(patch_size >= 1, "patch_size must be >= 1");
    TORCH_CHECK(input_resolution % patch_size == 0,
                "input resolution ", input_resolution,
                " not divisible by patch size ", patch_size);
    int64_t side = input_resolution / patch_size;
    TORCH_CHECK(side % 8 == 0, "token grid side ", side,
                " must be divisible by 8 (three downsampling merges)");
    for (int i = 0; i < 4; ++i) {
        TORCH_CHECK(stage_dims[i] % stage_heads[i] == 0,
                    "stage ", i, ": dim ", stage_dims[i],
                    " not divisible by heads ", stage_heads[i]);
        TORCH_CHECK(stage_window[i] >= 1, "stage ", i, ": window must be >= 1");
        int64_t ws = effective_window(i);
        TORCH_CHECK(grid_side(i) % ws == 0,
                    "stage ", i, ": grid side ", grid_side(i),
                    " not divisible by window ", ws);
    }
}

EncoderConfig EncoderConfig::toy() {
    return EncoderConfig{};
}

EncoderConfig EncoderConfig::base256() {
    EncoderConfig cfg;
    cfg.stage_dims = {96, 192, 384, 768};
    cfg.stage_depths = {2, 2, 6, 2};
    cfg.stage_heads = {3, 6, 12, 24};
    cfg.input_resolution = 256;
    return cfg;
}

torch::Tensor window_partition(const TokenGrid& grid, int64_t ws) {
    TORCH_CHECK(ws >= 1, "window size must be >= 1");
    TORCH_CHECK(grid.h % ws == 0 && grid.w % ws == 0,
                "grid ", grid.h, "x", grid.w, " not divisible by window size ", ws);
    auto b = grid.batch();
    auto c = grid.dim();
    auto x = grid.data.reshape({b, grid.h / ws, ws, grid.w / ws, ws, c});
    x = x.permute({0, 1, 3, 2, 4, 5}).contiguous();
    return x.reshape({b * (grid.h / ws) * (grid.w / ws), ws * ws, c});
}

TokenGrid window_reverse(const torch::Tensor& windows, int64_t ws, int64_t h, int64_t w) {
    TORCH_CHECK(windows.dim() == 3, "windows must be [B*n, ws*ws, C], got ", windows.sizes());
    TORCH_CHECK(h % ws == 0 && w % ws == 0,
                "target grid ", h, "x", w, " not divisible by window size ", ws);
    TORCH_CHECK(windows.size(1) == ws * ws,
                "window token count ", windows.size(1), " != ws*ws = ", ws * ws);
    int64_t per_batch = (h / ws) * (w / ws);
    TORCH_CHECK(windows.size(0) % per_batch == 0,
                "window count ", windows.size(0),
                " inconsistent with ", per_batch, " windows per batch element");
    int64_t b = windows.size(0) / per_batch;
    auto c = windows.size(2);
    auto x = windows.reshape({b, h / ws, w / ws, ws, ws, c});
    x = x.permute({0, 1, 3, 2, 4, 5}).contiguous();
    return TokenGrid(x.reshape({b, h * w, c}), h, w);
}

TokenGrid cyclic_shift(const TokenGrid& grid, int64_t offset) {
    auto x = grid.data.reshape({grid.batch(), grid.h, grid.w, grid.dim()});
    x = torch::roll(x, {-offset, -offset}, {1, 2});
    return TokenGrid(x.reshape({grid.batch(), grid.tokens(), grid.dim()}), grid.h, grid.w);
}

TokenGrid merge_neighbors(const TokenGrid& grid) {
    TORCH_CHECK(grid.h % 2 == 0 && grid.w % 2 == 0,
                "merge_neighbors needs even sides, got ", grid.h, "x", grid.w);
    using torch::indexing::Slice;
    auto x = grid.data.reshape({grid.batch(), grid.h, grid.w, grid.dim()});
    auto x00 = x.index({Slice(), Slice(0, torch::indexing::None, 2), Slice(0, torch::indexing::None, 2), Slice()});
    auto x10 = x.index({Slice(), Slice(1, torch::indexing::None, 2), Slice(0, torch::indexing::None, 2), Slice()});
    auto x01 = x.index({Slice(), Slice(0, torch::indexing::None, 2), Slice(1, torch::indexing::None, 2), Slice()});
    auto x11 = x.index({Slice(), Slice(1, torch::indexing::None, 2), Slice(1, torch::indexing::None, 2), Slice()});
    auto merged = torch::cat({x00, x10, x01, x11}, -1);
    return TokenGrid(merged.reshape({grid.batch(), (grid.h / 2) * (grid.w / 2), 4 * grid.dim()}),
                     grid.h / 2, grid.w / 2);
}

PatchEmbedImpl::PatchEmbedImpl(int64_t patch_size_, int64_t in_channels, int64_t dim)
    : patch_size(patch_size_) {
    proj = register_module("proj", torch::nn::Conv2d(
        torch::nn::Conv2dOptions(in_channels, dim, patch_size).stride(patch_size)));
    norm = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
}

TokenGrid PatchEmbedImpl::forward(const torch::Tensor& img) {
    check_image_batch(img);
    auto side = img.size(2);
    TORCH_CHECK(side % patch_size == 0,
                "image side ", side, " not divisible by patch size ", patch_size);
    auto x = proj->forward(img);  // [B, dim, side/p, side/p]
    auto grid = TokenGrid::from_image(x);
    grid.data = norm->forward(grid.data);
    return grid;
}

}  // namespace styleinv
