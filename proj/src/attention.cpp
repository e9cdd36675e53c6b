#include "styleinv/attention.hpp"

namespace styleinv {

namespace {

torch::Tensor make_relative_index(int64_t ws) {
    auto coords = torch::stack(torch::meshgrid({torch::arange(ws), torch::arange(ws)}, "ij"));
    auto flat = coords.reshape({2, ws * ws});                       // [2, N]
    auto rel = flat.unsqueeze(2) - flat.unsqueeze(1);               // [2, N, N]
    rel = rel.permute({1, 2, 0}).contiguous();                      // [N, N, 2]
    rel.select(2, 0) += ws - 1;
    rel.select(2, 1) += ws - 1;
    rel.select(2, 0) *= 2 * ws - 1;
    return rel.sum(-1).reshape({-1});                               // [N*N]
}

constexpr double kMaskValue = -1e9;

}  // namespace

torch::Tensor shifted_window_mask(int64_t h, int64_t w, int64_t ws, int64_t shift,
                                  const torch::TensorOptions& opts) {
    // Region labels in the shifted frame: the last `shift` rows/cols are the
    // wrapped ones, rows/cols [h-ws, h-shift) sit against the wrap boundary.
    auto zone = torch::zeros({1, h * w, 1}, torch::kFloat32);
    auto canvas = zone.reshape({1, h, w, 1});
    int64_t counter = 0;
    std::array<std::pair<int64_t, int64_t>, 3> spans_h{{{0, h - ws}, {h - ws, h - shift}, {h - shift, h}}};
    std::array<std::pair<int64_t, int64_t>, 3> spans_w{{{0, w - ws}, {w - ws, w - shift}, {w - shift, w}}};
    using torch::indexing::Slice;
    for (auto [h0, h1] : spans_h) {
        for (auto [w0, w1] : spans_w) {
            if (h0 < h1 && w0 < w1) {
                canvas.index_put_({Slice(), Slice(h0, h1), Slice(w0, w1), Slice()},
                                  static_cast<double>(counter));
            }
            ++counter;
        }
    }
    TokenGrid zone_grid(zone, h, w);
    auto zones = window_partition(zone_grid, ws).squeeze(-1);       // [nW, N]
    auto diff = zones.unsqueeze(1) - zones.unsqueeze(2);            // [nW, N, N]
    auto mask = torch::where(diff == 0, torch::zeros_like(diff),
                             torch::full_like(diff, kMaskValue));
    return mask.to(opts);
}

WindowAttentionImpl::WindowAttentionImpl(int64_t dim_, int64_t heads_, int64_t window_,
                                         QuerySource source_)
    : dim(dim_), heads(heads_), window(window_), head_dim(dim_ / heads_), source(source_) {
    TORCH_CHECK(dim % heads == 0, "dim ", dim, " not divisible by heads ", heads);
    auto no_bias = torch::nn::LinearOptions(dim, dim).bias(false);
    if (source == QuerySource::Projected) {
        q_proj = register_module("q_proj", torch::nn::Linear(no_bias));
    } else {
        query_bank = register_parameter(
            "query_bank", torch::randn({heads, window * window, head_dim}) * 0.02);
    }
    k_proj = register_module("k_proj", torch::nn::Linear(no_bias));
    v_proj = register_module("v_proj", torch::nn::Linear(no_bias));
    out_proj = register_module("out_proj", torch::nn::Linear(dim, dim));

    int64_t table_size = (2 * window - 1) * (2 * window - 1);
    bias_table = register_parameter("bias_table", torch::randn({table_size, heads}) * 0.02);
    relative_index = register_buffer("relative_index", make_relative_index(window));
}

torch::Tensor WindowAttentionImpl::relative_bias() const {
    auto n = window * window;
    // Module::to(dtype) converts integer buffers too; index dtype must stay long.
    auto bias = bias_table.index_select(0, relative_index.to(torch::kLong));  // [N*N, heads]
    return bias.reshape({n, n, heads}).permute({2, 0, 1}).contiguous();
}

std::pair<TokenGrid, torch::Tensor> WindowAttentionImpl::forward_with_weights(
    const TokenGrid& grid, int64_t shift) {
    TORCH_CHECK(shift == 0 || shift == window / 2,
                "shift must be 0 or window/2, got ", shift);
    TORCH_CHECK(shift == 0 || source == QuerySource::Projected,
                "learnable-query attention has no shifted variant");
    auto working = shift != 0 ? cyclic_shift(grid, shift) : grid;
    auto windows = window_partition(working, window);               // [M, N, C]
    auto m = windows.size(0);
    auto n = windows.size(1);

    auto split_heads = [&](torch::Tensor t) {
        return t.reshape({m, n, heads, head_dim}).permute({0, 2, 1, 3});
    };
    torch::Tensor q;
    if (source == QuerySource::Projected) {
        q = split_heads(q_proj->forward(windows));
    } else {
        q = query_bank.unsqueeze(0).expand({m, heads, n, head_dim});
    }
    auto k = split_heads(k_proj->forward(windows));
    auto v = split_heads(v_proj->forward(windows));

    auto scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    auto attn = torch::matmul(q * scale, k.transpose(-2, -1));      // [M, heads, N, N]
    attn = attn + relative_bias().unsqueeze(0);
    if (shift != 0) {
        auto mask = shifted_window_mask(grid.h, grid.w, window, shift, attn.options());
        int64_t n_windows = mask.size(0);
        attn = attn.reshape({m / n_windows, n_windows, heads, n, n})
               + mask.unsqueeze(0).unsqueeze(2);
        attn = attn.reshape({m, heads, n, n});
    }
    attn = torch::softmax(attn, -1);

    auto out = torch::matmul(attn, v);                              // [M, heads, N, hd]
    out = out.permute({0, 2, 1, 3}).reshape({m, n, dim});
    out = out_proj->forward(out);
    auto result = window_reverse(out, window, working.h, working.w);
    if (shift != 0) {
        result = cyclic_shift(result, -shift);
    }
    return {result, attn};
}

TokenGrid WindowAttentionImpl::forward(const TokenGrid& grid, int64_t shift) {
    return forward_with_weights(grid, shift).first;
}

torch::Tensor WindowAttentionImpl::attention_weights(const TokenGrid& grid, int64_t shift) {
    return forward_with_weights(grid, shift).second;
}

}  // namespace styleinv
