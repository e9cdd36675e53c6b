#include "styleinv/attention.hpp"
#include "styleinv/core.hpp"

// torch's logging header defines a CHECK macro; doctest must come last
#ifdef CHECK
#undef CHECK
#endif
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

using namespace styleinv;

namespace {

TokenGrid random_grid(int64_t b, int64_t h, int64_t w, int64_t c, uint64_t seed = 7) {
    torch::manual_seed(seed);
    return TokenGrid(torch::randn({b, h * w, c}), h, w);
}

// Independent (row, col) -> (window, slot) index mapping.
void check_partition_oracle(const TokenGrid& g, int64_t ws) {
    auto wins = window_partition(g, ws);
    int64_t nw = (g.h / ws) * (g.w / ws);
    for (int64_t b = 0; b < g.batch(); ++b) {
        for (int64_t r = 0; r < g.h; ++r) {
            for (int64_t c = 0; c < g.w; ++c) {
                int64_t win = (r / ws) * (g.w / ws) + (c / ws);
                int64_t slot = (r % ws) * ws + (c % ws);
                CHECK(torch::equal(wins[b * nw + win][slot], g.data[b][r * g.w + c]));
            }
        }
    }
}

}  // namespace

TEST_CASE("window partition maps tokens row-major and reverses exactly") {
    auto g = random_grid(2, 4, 4, 3);
    auto wins = window_partition(g, 2);
    CHECK(wins.sizes() == torch::IntArrayRef({2 * 4, 4, 3}));
    check_partition_oracle(g, 2);

    auto back = window_reverse(wins, 2, 4, 4);
    CHECK(torch::equal(back.data, g.data));
}

TEST_CASE("window partition with ws == side is the identity partition") {
    auto g = random_grid(1, 4, 4, 5);
    auto wins = window_partition(g, 4);
    CHECK(wins.sizes() == torch::IntArrayRef({1, 16, 5}));
    CHECK(torch::equal(wins[0], g.data[0]));
    auto back = window_reverse(wins, 4, 4, 4);
    CHECK(torch::equal(back.data, g.data));
}

TEST_CASE("window round trips are bit-exact on random grids") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        int64_t side = 2 << (seed % 3);  // 2, 4, 8
        int64_t ws = seed % 2 == 0 ? 2 : side;
        auto g = random_grid(1 + seed % 3, side, side, 3 + seed % 4, seed);
        auto round = window_reverse(window_partition(g, ws), ws, side, side);
        CHECK(torch::equal(round.data, g.data));
        check_partition_oracle(g, ws);
    }
}

TEST_CASE("window ops reject inconsistent shapes") {
    auto g = random_grid(1, 4, 4, 2);
    CHECK_THROWS(window_partition(g, 3));
    auto wins = window_partition(g, 2);
    CHECK_THROWS(window_reverse(wins, 2, 6, 6));           // wrong window count
    CHECK_THROWS(window_reverse(wins.narrow(0, 0, 3), 2, 4, 4));
}

TEST_CASE("window partition preserves the token multiset") {
    auto g = random_grid(2, 4, 4, 3);
    auto wins = window_partition(g, 2);
    auto sorted_in = std::get<0>(g.data.reshape({-1}).sort());
    auto sorted_out = std::get<0>(wins.reshape({-1}).sort());
    CHECK(torch::equal(sorted_in, sorted_out));
}

TEST_CASE("cyclic shift: identity, inverse, modular oracle") {
    auto g = random_grid(2, 4, 4, 3);
    CHECK(torch::equal(cyclic_shift(g, 0).data, g.data));

    auto shifted = cyclic_shift(g, 1);
    CHECK(torch::equal(cyclic_shift(shifted, -1).data, g.data));

    // modular-index oracle
    for (int64_t b = 0; b < g.batch(); ++b) {
        for (int64_t r = 0; r < g.h; ++r) {
            for (int64_t c = 0; c < g.w; ++c) {
                auto expect = g.data[b][((r + 1) % g.h) * g.w + (c + 1) % g.w];
                CHECK(torch::equal(shifted.data[b][r * g.w + c], expect));
            }
        }
    }

    auto sorted_in = std::get<0>(g.data.reshape({-1}).sort());
    auto sorted_out = std::get<0>(shifted.data.reshape({-1}).sort());
    CHECK(torch::equal(sorted_in, sorted_out));
}

TEST_CASE("cyclic shift on a 2x2 grid swaps the diagonal") {
    auto g = random_grid(1, 2, 2, 3);
    auto s = cyclic_shift(g, 1);
    CHECK(torch::equal(s.data[0][0], g.data[0][3]));
    CHECK(torch::equal(s.data[0][1], g.data[0][2]));
    CHECK(torch::equal(s.data[0][2], g.data[0][1]));
    CHECK(torch::equal(s.data[0][3], g.data[0][0]));
}

TEST_CASE("merge_neighbors concatenates the 2x2 block in documented order") {
    auto g = random_grid(1, 2, 2, 3);
    auto m = merge_neighbors(g);
    CHECK(m.h == 1);
    CHECK(m.w == 1);
    CHECK(m.dim() == 12);
    // order: (0,0), (1,0), (0,1), (1,1)
    auto expected = torch::cat({g.data[0][0], g.data[0][2], g.data[0][1], g.data[0][3]});
    CHECK(torch::equal(m.data[0][0], expected));
    CHECK_THROWS(merge_neighbors(random_grid(1, 3, 3, 2)));
}

TEST_CASE("patch embedding produces (side/patch)^2 tokens") {
    torch::manual_seed(1);
    {
        PatchEmbed pe(4, 3, 96);
        auto g = pe->forward(torch::randn({1, 3, 256, 256}));
        CHECK(g.h == 64);
        CHECK(g.w == 64);
        CHECK(g.dim() == 96);
        CHECK(g.tokens() == 64 * 64);
    }
    {
        PatchEmbed pe(4, 3, 8);
        auto g = pe->forward(torch::randn({1, 3, 8, 8}));
        CHECK(g.h == 2);
        CHECK(g.w == 2);
        CHECK(g.dim() == 8);
    }
}

TEST_CASE("patch embedding rejects non-divisible sides naming both dimensions") {
    PatchEmbed pe(4, 3, 8);
    try {
        pe->forward(torch::randn({1, 3, 255, 255}));
        CHECK(false);
    } catch (const c10::Error& e) {
        std::string msg = e.what_without_backtrace();
        CHECK(msg.find("255") != std::string::npos);
        CHECK(msg.find("4") != std::string::npos);
    }
}

namespace {

int64_t rel_index_oracle(int64_t i, int64_t j, int64_t ws) {
    int64_t ri = i / ws, ci = i % ws, rj = j / ws, cj = j % ws;
    return (ri - rj + ws - 1) * (2 * ws - 1) + (ci - cj + ws - 1);
}

// Dense single-window attention with explicit loops, no torch ops.
torch::Tensor dense_attention_oracle(const torch::Tensor& tokens, WindowAttention& attn) {
    int64_t n = tokens.size(0);
    int64_t dim = tokens.size(1);
    int64_t heads = attn->heads;
    int64_t hd = attn->head_dim;
    auto x = tokens.to(torch::kFloat64);
    auto wq = attn->q_proj->weight.to(torch::kFloat64);
    auto wk = attn->k_proj->weight.to(torch::kFloat64);
    auto wv = attn->v_proj->weight.to(torch::kFloat64);
    auto wo = attn->out_proj->weight.to(torch::kFloat64);
    auto bo = attn->out_proj->bias.to(torch::kFloat64);
    auto table = attn->bias_table.to(torch::kFloat64);

    auto xa = x.accessor<double, 2>();
    auto qa = wq.accessor<double, 2>();
    auto ka = wk.accessor<double, 2>();
    auto va = wv.accessor<double, 2>();
    auto oa = wo.accessor<double, 2>();
    auto ba = bo.accessor<double, 1>();
    auto ta = table.accessor<double, 2>();

    // projections: Linear computes y = x W^T
    std::vector<std::vector<double>> q(n, std::vector<double>(dim, 0.0)), k = q, v = q;
    for (int64_t t = 0; t < n; ++t) {
        for (int64_t o = 0; o < dim; ++o) {
            for (int64_t i = 0; i < dim; ++i) {
                q[t][o] += qa[o][i] * xa[t][i];
                k[t][o] += ka[o][i] * xa[t][i];
                v[t][o] += va[o][i] * xa[t][i];
            }
        }
    }
    double scale = 1.0 / std::sqrt(static_cast<double>(hd));
    std::vector<std::vector<double>> merged(n, std::vector<double>(dim, 0.0));
    for (int64_t h = 0; h < heads; ++h) {
        for (int64_t i = 0; i < n; ++i) {
            std::vector<double> logits(n, 0.0);
            for (int64_t j = 0; j < n; ++j) {
                double dot = 0.0;
                for (int64_t d = 0; d < hd; ++d) {
                    dot += q[i][h * hd + d] * scale * k[j][h * hd + d];
                }
                logits[j] = dot + ta[rel_index_oracle(i, j, attn->window)][h];
            }
            double mx = *std::max_element(logits.begin(), logits.end());
            double z = 0.0;
            for (auto& l : logits) {
                l = std::exp(l - mx);
                z += l;
            }
            for (int64_t j = 0; j < n; ++j) {
                double wgt = logits[j] / z;
                for (int64_t d = 0; d < hd; ++d) {
                    merged[i][h * hd + d] += wgt * v[j][h * hd + d];
                }
            }
        }
    }
    auto out = torch::zeros({n, dim}, torch::kFloat64);
    auto outa = out.accessor<double, 2>();
    for (int64_t t = 0; t < n; ++t) {
        for (int64_t o = 0; o < dim; ++o) {
            double acc = ba[o];
            for (int64_t i = 0; i < dim; ++i) {
                acc += oa[o][i] * merged[t][i];
            }
            outa[t][o] = acc;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("W-MSA matches a dense brute-force oracle on a single window") {
    torch::manual_seed(3);
    WindowAttention attn(4, 1, 2, QuerySource::Projected);
    auto g = random_grid(1, 2, 2, 4, 11);
    auto out = attn->forward(g, 0);
    auto expect = dense_attention_oracle(g.data[0], attn);
    CHECK(torch::allclose(out.data[0].to(torch::kFloat64), expect, 1e-5, 1e-5));
}

TEST_CASE("attention weight rows sum to one") {
    torch::manual_seed(4);
    WindowAttention attn(8, 2, 2, QuerySource::Projected);
    auto g = random_grid(2, 4, 4, 8, 12);
    auto w = attn->attention_weights(g, 0);
    CHECK(w.sizes() == torch::IntArrayRef({2 * 4, 2, 4, 4}));
    auto sums = w.sum(-1);
    CHECK(torch::allclose(sums, torch::ones_like(sums), 1e-5, 1e-5));

    WindowAttention lq(8, 2, 2, QuerySource::Learnable);
    auto wl = lq->attention_weights(g, 0);
    auto sums_l = wl.sum(-1);
    CHECK(torch::allclose(sums_l, torch::ones_like(sums_l), 1e-5, 1e-5));
}

TEST_CASE("single-token windows degenerate to projected values") {
    torch::manual_seed(5);
    WindowAttention attn(6, 2, 1, QuerySource::Projected);
    auto g = random_grid(1, 2, 2, 6, 13);
    auto out = attn->forward(g, 0);
    auto expect = attn->out_proj->forward(attn->v_proj->forward(g.data));
    CHECK(torch::allclose(out.data, expect, 1e-6, 1e-6));

    auto w = attn->attention_weights(g, 0);
    CHECK(torch::equal(w, torch::ones_like(w)));
}

TEST_CASE("shifted attention masks cross-boundary pairs below 1e-6") {
    torch::manual_seed(6);
    int64_t h = 4, w = 4, ws = 2, shift = 1;
    WindowAttention attn(8, 2, ws, QuerySource::Projected);
    auto g = random_grid(1, h, w, 8, 14);
    auto weights = attn->attention_weights(g, shift);

    // zone oracle, derived from first principles in shifted coordinates:
    // rows/cols [0, h-ws) are interior, [h-ws, h-shift) edge, [h-shift, h) wrapped
    auto zone_of = [&](int64_t r, int64_t c) {
        auto band = [&](int64_t v) { return v < h - ws ? 0 : (v < h - shift ? 1 : 2); };
        return band(r) * 3 + band(c);
    };
    int64_t nw = (h / ws) * (w / ws);
    for (int64_t win = 0; win < nw; ++win) {
        for (int64_t a = 0; a < ws * ws; ++a) {
            for (int64_t b = 0; b < ws * ws; ++b) {
                int64_t ra = (win / (w / ws)) * ws + a / ws;
                int64_t ca = (win % (w / ws)) * ws + a % ws;
                int64_t rb = (win / (w / ws)) * ws + b / ws;
                int64_t cb = (win % (w / ws)) * ws + b % ws;
                if (zone_of(ra, ca) != zone_of(rb, cb)) {
                    auto val = weights.index({win, torch::indexing::Slice(), a, b}).max();
                    CHECK(val.item<double>() < 1e-6);
                }
            }
        }
    }

    // shifted rows still normalize
    auto sums = weights.sum(-1);
    CHECK(torch::allclose(sums, torch::ones_like(sums), 1e-5, 1e-5));
}

TEST_CASE("learnable queries give identical outputs on identical windows") {
    torch::manual_seed(7);
    WindowAttention lq(8, 2, 2, QuerySource::Learnable);
    // 2x4 grid = two 2x2 windows; make both windows hold the same tokens
    auto left = torch::randn({2, 2, 8});
    auto row0 = torch::cat({left[0], left[0]}, 0);
    auto row1 = torch::cat({left[1], left[1]}, 0);
    TokenGrid g(torch::cat({row0, row1}, 0).reshape({1, 8, 8}), 2, 4);

    auto [out, weights] = lq->forward_with_weights(g, 0);
    CHECK(torch::allclose(weights[0], weights[1], 1e-6, 1e-6));
    auto img = out.as_image();  // [1, 8, 2, 4]
    CHECK(torch::allclose(img.narrow(3, 0, 2), img.narrow(3, 2, 2), 1e-6, 1e-6));
}

TEST_CASE("learnable-query parameter count drops the Q projection and adds the bank") {
    int64_t dim = 8, heads = 2, ws = 2;
    WindowAttention wmsa(dim, heads, ws, QuerySource::Projected);
    WindowAttention lq(dim, heads, ws, QuerySource::Learnable);
    auto count = [](WindowAttention& m) {
        int64_t n = 0;
        for (auto& p : m->parameters()) n += p.numel();
        return n;
    };
    CHECK(count(lq) == count(wmsa) - dim * dim + heads * ws * ws * (dim / heads));
}

TEST_CASE("query bank gradient matches central finite differences") {
    torch::manual_seed(8);
    WindowAttention lq(8, 2, 2, QuerySource::Learnable);
    lq->to(torch::kFloat64);
    auto g = TokenGrid(torch::randn({1, 16, 8}, torch::kFloat64), 4, 4);

    auto loss_of = [&]() { return lq->forward(g, 0).data.sum(); };
    lq->zero_grad();
    auto loss = loss_of();
    loss.backward();
    auto grad = lq->query_bank.grad().clone();
    CHECK(grad.abs().sum().item<double>() > 0);

    double eps = 1e-5;
    auto flat = lq->query_bank.view({-1});
    auto gflat = grad.view({-1});
    torch::NoGradGuard guard;
    for (int64_t i = 0; i < flat.numel(); ++i) {
        double orig = flat[i].item<double>();
        flat[i] = orig + eps;
        double up = loss_of().item<double>();
        flat[i] = orig - eps;
        double down = loss_of().item<double>();
        flat[i] = orig;
        double fd = (up - down) / (2 * eps);
        double analytic = gflat[i].item<double>();
        double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
        CHECK(std::abs(fd - analytic) / denom < 1e-3);
    }
}

TEST_CASE("attention does not mix batch elements") {
    torch::manual_seed(9);
    WindowAttention attn(8, 2, 2, QuerySource::Projected);
    auto g = random_grid(3, 4, 4, 8, 15);
    auto out = attn->forward(g, 0);
    auto perm = torch::tensor({2, 0, 1}, torch::kLong);
    auto g_perm = TokenGrid(g.data.index_select(0, perm), 4, 4);
    auto out_perm = attn->forward(g_perm, 0);
    CHECK(torch::allclose(out_perm.data, out.data.index_select(0, perm), 1e-6, 1e-6));
}

TEST_CASE("learnable-query attention rejects shifts and bad grids") {
    WindowAttention lq(8, 2, 2, QuerySource::Learnable);
    auto g = random_grid(1, 4, 4, 8, 16);
    CHECK_THROWS(lq->forward(g, 1));
    auto odd = random_grid(1, 3, 3, 8, 17);
    CHECK_THROWS(lq->forward(odd, 0));
}
