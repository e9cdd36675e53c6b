#pragma once

#include <torch/torch.h>

#include <array>
#include <cstdint>

namespace styleinv {

// Internal layout convention, used everywhere: token tensors are
// [batch, h*w, dim] with row-major spatial flattening (token index = row*w + col).
// Images are [batch, channels, height, width] with values in [-1, 1].
struct TokenGrid {
    torch::Tensor data;  // [B, h*w, C]
    int64_t h = 0;
    int64_t w = 0;

    TokenGrid() = default;
    TokenGrid(torch::Tensor data_, int64_t h_, int64_t w_);

    int64_t batch() const { return data.size(0); }
    int64_t tokens() const { return data.size(1); }
    int64_t dim() const { return data.size(2); }

    // [B, C, h, w] view of the same values.
    torch::Tensor as_image() const;
    static TokenGrid from_image(const torch::Tensor& nchw);
};

void check_image_batch(const torch::Tensor& img);

struct EncoderConfig {
    int64_t patch_size = 4;
    std::array<int64_t, 4> stage_dims{32, 64, 128, 256};
    std::array<int64_t, 4> stage_depths{1, 1, 2, 1};
    std::array<int64_t, 4> stage_heads{2, 2, 4, 8};
    std::array<int64_t, 4> stage_window{2, 2, 8, 8};
    int64_t input_resolution = 64;

    // Side of the token grid entering stage i (i in 0..3).
    int64_t grid_side(int stage) const;
    // Window actually used by stage i: clamped to the grid side when the
    // grid is smaller than the configured window (single-window stage).
    int64_t effective_window(int stage) const;
    void validate() const;

    // 64-input configuration used as the test default.
    static EncoderConfig toy();
    // Standard tiny hierarchical-transformer configuration at 256 input.
    static EncoderConfig base256();
};

// Non-overlapping ws x ws windows: [B, h*w, C] -> [B*n_windows, ws*ws, C].
// Windows are ordered row-major over the window grid and tokens row-major
// within each window.
torch::Tensor window_partition(const TokenGrid& grid, int64_t ws);

// Exact inverse of window_partition.
TokenGrid window_reverse(const torch::Tensor& windows, int64_t ws, int64_t h, int64_t w);

// 2-D torus roll by (-offset, -offset). cyclic_shift(cyclic_shift(g, s), -s) == g.
TokenGrid cyclic_shift(const TokenGrid& grid, int64_t offset);

// Concatenate each 2x2 neighborhood into one token of 4x width; side halves.
// Channel order of the concatenation: (row+0,col+0), (row+1,col+0),
// (row+0,col+1), (row+1,col+1).
TokenGrid merge_neighbors(const TokenGrid& grid);

class PatchEmbedImpl : public torch::nn::Module {
public:
    PatchEmbedImpl(int64_t patch_size, int64_t in_channels, int64_t dim);
    TokenGrid forward(const torch::Tensor& img);

    torch::nn::Conv2d proj{nullptr};
    torch::nn::LayerNorm norm{nullptr};
    int64_t patch_size;
};
TORCH_MODULE(PatchEmbed);

}  // namespace styleinv
