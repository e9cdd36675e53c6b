#pragma once

#include "styleinv/core.hpp"

namespace styleinv {

// Where the attention queries come from.
//   Projected: Q is a linear projection of the window tokens (standard W-MSA).
//   Learnable: Q is a trainable bank shared by every window and batch element;
//              K and V are still projected from the input. No shifted variant.
enum class QuerySource { Projected, Learnable };

// Additive attention mask for a shifted-window pass: 0 where both tokens
// come from the same pre-shift region, -1e9 across wrapped boundaries.
// Shape [n_windows, ws*ws, ws*ws].
torch::Tensor shifted_window_mask(int64_t h, int64_t w, int64_t ws, int64_t shift,
                                  const torch::TensorOptions& opts = {});

class WindowAttentionImpl : public torch::nn::Module {
public:
    WindowAttentionImpl(int64_t dim, int64_t heads, int64_t window, QuerySource source);

    TokenGrid forward(const TokenGrid& grid, int64_t shift = 0);

    // Post-softmax weights actually used, [B*n_windows, heads, ws*ws, ws*ws].
    torch::Tensor attention_weights(const TokenGrid& grid, int64_t shift = 0);

    std::pair<TokenGrid, torch::Tensor> forward_with_weights(const TokenGrid& grid,
                                                             int64_t shift);

    // Relative position bias matrix [heads, ws*ws, ws*ws] from the table.
    torch::Tensor relative_bias() const;

    torch::nn::Linear q_proj{nullptr};  // absent for Learnable
    torch::nn::Linear k_proj{nullptr};
    torch::nn::Linear v_proj{nullptr};
    torch::nn::Linear out_proj{nullptr};
    torch::Tensor query_bank;  // [heads, ws*ws, dim/heads], Learnable only
    torch::Tensor bias_table;  // [(2ws-1)^2, heads]
    torch::Tensor relative_index;  // buffer [ws*ws * ws*ws]

    int64_t dim, heads, window, head_dim;
    QuerySource source;
};
TORCH_MODULE(WindowAttention);

}  // namespace styleinv
