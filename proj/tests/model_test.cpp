#include "styleinv/encoder.hpp"
#include "styleinv/generator.hpp"

// torch's logging header defines a CHECK macro; doctest must come last
#ifdef CHECK
#undef CHECK
#endif
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

using namespace styleinv;

namespace {

void zero_all(torch::nn::Module& m) {
    torch::NoGradGuard guard;
    for (auto& p : m.parameters()) {
        p.zero_();
    }
}

TokenGrid random_grid(int64_t b, int64_t h, int64_t w, int64_t c, uint64_t seed) {
    torch::manual_seed(seed);
    return TokenGrid(torch::randn({b, h * w, c}), h, w);
}

FeaturePyramid random_pyramid(const EncoderConfig& cfg, int64_t b, uint64_t seed) {
    torch::manual_seed(seed);
    FeaturePyramid pyr;
    for (int i = 0; i < 4; ++i) {
        auto side = cfg.grid_side(i);
        pyr.levels[i] = TokenGrid(torch::randn({b, side * side, cfg.stage_dims[i]}), side, side);
    }
    return pyr;
}

}  // namespace

TEST_CASE("default stage windows are 2,2,8,8") {
    CHECK((EncoderConfig::toy().stage_window == std::array<int64_t, 4>{2, 2, 8, 8}));
    CHECK((EncoderConfig::base256().stage_window == std::array<int64_t, 4>{2, 2, 8, 8}));
}

TEST_CASE("patch merging halves the side and doubles the width") {
    torch::manual_seed(21);
    PatchMerging pm(4);
    auto out = pm->forward(random_grid(1, 4, 4, 4, 22));
    CHECK(out.h == 2);
    CHECK(out.w == 2);
    CHECK(out.dim() == 8);

    auto out2 = pm->forward(random_grid(1, 2, 2, 4, 23));
    CHECK(out2.h == 1);
    CHECK(out2.dim() == 8);

    CHECK_THROWS(pm->forward(random_grid(1, 3, 3, 4, 24)));
}

TEST_CASE("a stage preserves shape and zeroed weights make it the identity") {
    torch::manual_seed(25);
    Stage stage(4, 8, 2, 2, 2);
    auto g = random_grid(2, 4, 4, 8, 26);
    auto out = stage->forward(g);
    CHECK(out.h == 4);
    CHECK(out.dim() == 8);

    zero_all(*stage);
    auto idn = stage->forward(g);
    CHECK(torch::equal(idn.data, g.data));

    CHECK_THROWS(stage->forward(random_grid(1, 8, 8, 8, 27)));
}

TEST_CASE("a block equals the manual composition of its sub-ops") {
    torch::manual_seed(28);
    TransformerBlock block(8, 2, 2, 0, QuerySource::Projected);
    auto g = random_grid(1, 4, 4, 8, 29);
    auto out = block->forward(g);

    auto attended = block->attn->forward(TokenGrid(block->norm1->forward(g.data), 4, 4), 0);
    auto y = g.data + attended.data;
    auto expect = y + block->mlp->forward(block->norm2->forward(y));
    CHECK(torch::equal(out.data, expect));
}

TEST_CASE("the backbone emits the documented pyramid sides") {
    auto base = EncoderConfig::base256();
    CHECK(base.grid_side(0) == 64);
    CHECK(base.grid_side(1) == 32);
    CHECK(base.grid_side(2) == 16);
    CHECK(base.grid_side(3) == 8);

    auto cfg = EncoderConfig::toy();
    Backbone bb(cfg);
    torch::manual_seed(30);
    auto one = torch::randn({1, 3, 64, 64});
    auto img = torch::cat({one, one}, 0);
    auto pyr = bb->forward(img);
    const int64_t sides[4] = {16, 8, 4, 2};
    for (int i = 0; i < 4; ++i) {
        CHECK(pyr.levels[i].h == sides[i]);
        CHECK(pyr.levels[i].dim() == cfg.stage_dims[i]);
        CHECK(torch::allclose(pyr.levels[i].data[0], pyr.levels[i].data[1]));
    }
    for (int i = 0; i < 3; ++i) {
        CHECK(pyr.levels[i].tokens() == 4 * pyr.levels[i + 1].tokens());
    }

    auto pyr2 = bb->forward(img);
    for (int i = 0; i < 4; ++i) {
        CHECK(torch::equal(pyr.levels[i].data, pyr2.levels[i].data));
    }

    CHECK_THROWS(bb->forward(torch::randn({1, 3, 32, 32})));
}

TEST_CASE("upsample block contract: shape, constants, gate") {
    torch::manual_seed(31);
    UpsampleBlock up(8, 4, 16);
    auto g = random_grid(1, 8, 8, 8, 32);
    auto out = up->forward(g);
    CHECK(out.h == 16);
    CHECK(out.dim() == 4);

    // constant input stays spatially constant while the gate is zero
    auto constant = TokenGrid(torch::ones({1, 64, 8}), 8, 8);
    auto cout = up->forward(constant);
    auto first = cout.data[0][0];
    for (int64_t t = 1; t < cout.tokens(); ++t) {
        CHECK(torch::allclose(cout.data[0][t], first, 1e-5, 1e-5));
    }

    // gate zero -> independent of the positional table
    auto before = up->forward(g);
    {
        torch::NoGradGuard guard;
        up->abs_pos.normal_(0, 10.0);
    }
    CHECK(torch::equal(up->forward(g).data, before.data));

    CHECK_THROWS(up->forward(random_grid(1, 8, 8, 5, 33)));
}

TEST_CASE("pyramid fusion: identity cases and manual chain composition") {
    auto cfg = EncoderConfig::toy();
    torch::manual_seed(34);
    PyramidFusion fusion(cfg);
    auto pyr = random_pyramid(cfg, 2, 35);

    // coarsest level passes through untouched
    auto fused = fusion->forward(pyr);
    CHECK(torch::equal(fused.levels[3].data, pyr.levels[3].data));
    for (int i = 0; i < 4; ++i) {
        CHECK(fused.levels[i].h == pyr.levels[i].h);
        CHECK(fused.levels[i].dim() == pyr.levels[i].dim());
    }

    // manual composition oracle
    std::array<TokenGrid, 4> manual;
    manual[3] = pyr.levels[3];
    for (int i = 2; i >= 0; --i) {
        auto acc = pyr.levels[i].data;
        for (int j = i + 1; j < 4; ++j) {
            auto contrib = manual[j];
            for (auto& block : fusion->chains[j][i]) {
                contrib = block->forward(contrib);
            }
            acc = acc + contrib.data;
        }
        manual[i] = TokenGrid(acc, pyr.levels[i].h, pyr.levels[i].w);
    }
    for (int i = 0; i < 4; ++i) {
        CHECK(torch::equal(fused.levels[i].data, manual[i].data));
    }

    // zeroed fusion parameters -> identity, bit-exact
    zero_all(*fusion);
    auto idn = fusion->forward(pyr);
    for (int i = 0; i < 4; ++i) {
        CHECK(torch::equal(idn.levels[i].data, pyr.levels[i].data));
    }
}

TEST_CASE("fusion has 6 chains of 10 upsample blocks with disjoint parameters") {
    PyramidFusion fusion(EncoderConfig::toy());
    int64_t chains = 0, blocks = 0;
    for (int j = 1; j < 4; ++j) {
        for (int i = 0; i < j; ++i) {
            if (!fusion->chains[j][i].empty()) ++chains;
            blocks += fusion->chains[j][i].size();
            CHECK(fusion->chains[j][i].size() == static_cast<size_t>(j - i));
        }
    }
    CHECK(chains == 6);
    CHECK(blocks == 10);
    // 6 tensors per block: align W/b, norm W/b, abs_pos, pos_gate
    CHECK(fusion->parameters().size() == static_cast<size_t>(blocks * 6));
}

TEST_CASE("tower plans derive merge and reduction counts from the token count") {
    CHECK(TowerPlan::for_tokens(64 * 64).merges == 4);
    CHECK(TowerPlan::for_tokens(8 * 8).merges == 1);
    CHECK(TowerPlan::for_tokens(16).merges == 0);
    CHECK(TowerPlan::for_tokens(16).reductions == 2);
    CHECK(TowerPlan::for_tokens(4).merges == 0);
    CHECK(TowerPlan::for_tokens(4).reductions == 1);
    CHECK_THROWS(TowerPlan::for_tokens(36));
}

TEST_CASE("style counts per resolution and level grouping defaults") {
    CHECK(styles_for_resolution(256) == 14);
    CHECK(styles_for_resolution(64) == 10);
    auto m14 = Map2StyleConfig::for_resolution(256);
    CHECK((m14.level_counts == std::array<int64_t, 4>{3, 4, 4, 3}));
    auto m10 = Map2StyleConfig::for_resolution(64);
    CHECK((m10.level_counts == std::array<int64_t, 4>{2, 3, 3, 2}));
    CHECK(m10.level_of_style(0) == 3);   // coarsest level owns the first styles
    CHECK(m10.level_of_style(9) == 0);   // finest level owns the last styles

    auto bad = m10;
    bad.level_counts = {2, 3, 3, 3};
    CHECK_THROWS(bad.validate());
}

TEST_CASE("towers emit one finite style vector and map2style stacks them") {
    torch::manual_seed(36);
    auto enc = EncoderConfig::toy();
    auto m2s = Map2StyleConfig::for_resolution(64, 64);
    StyleTower tower(16, 32, m2s);
    auto vec = tower->forward(random_grid(2, 16, 16, 32, 37));
    CHECK(vec.sizes() == torch::IntArrayRef({2, 64}));
    CHECK(torch::isfinite(vec).all().item<bool>());

    Map2Style m2s_mod(enc, m2s);
    auto pyr = random_pyramid(enc, 2, 38);
    auto codes = m2s_mod->forward(pyr);
    CHECK(codes.sizes() == torch::IntArrayRef({2, 10, 64}));
    auto codes2 = m2s_mod->forward(pyr);
    CHECK(torch::equal(codes, codes2));

    // disjoint towers: the module's parameters are exactly the towers' union
    size_t tower_params = 0;
    for (auto& t : m2s_mod->towers) {
        tower_params += t->parameters().size();
    }
    CHECK(m2s_mod->parameters().size() == tower_params);
}

TEST_CASE("map2style block kinds expose the expected parameter names") {
    auto enc = EncoderConfig::toy();
    auto lq_cfg = Map2StyleConfig::for_resolution(64, 32);
    auto wmsa_cfg = lq_cfg;
    wmsa_cfg.block = TowerBlock::SelfAttention;
    auto linear_cfg = lq_cfg;
    linear_cfg.block = TowerBlock::LinearOnly;

    auto names = [&](const Map2StyleConfig& c) {
        Map2Style m(enc, c);
        std::vector<std::string> out;
        for (const auto& p : m->named_parameters()) {
            out.push_back(p.key());
        }
        return out;
    };
    auto has = [](const std::vector<std::string>& v, const std::string& needle) {
        for (const auto& s : v) {
            if (s.find(needle) != std::string::npos) return true;
        }
        return false;
    };
    auto lq_names = names(lq_cfg);
    auto wmsa_names = names(wmsa_cfg);
    auto linear_names = names(linear_cfg);
    CHECK(has(lq_names, "query_bank"));
    CHECK(!has(lq_names, "q_proj"));
    CHECK(has(wmsa_names, "q_proj"));
    CHECK(!has(wmsa_names, "query_bank"));
    CHECK(!has(linear_names, "attn"));
    CHECK(has(linear_names, "merge"));
}

TEST_CASE("mapping network: shape, determinism, empty depth identity") {
    torch::manual_seed(39);
    GeneratorConfig cfg;
    cfg.style_dim = 16;
    Generator gen(cfg);
    auto z = torch::randn({3, 16});
    auto w1 = gen->mapping_forward(z);
    auto w2 = gen->mapping_forward(z);
    CHECK(w1.sizes() == z.sizes());
    CHECK(torch::equal(w1, w2));

    GeneratorConfig flat = cfg;
    flat.mapping_depth = 0;
    Generator identity_gen(flat);
    CHECK(torch::equal(identity_gen->mapping_forward(z), z));
}

TEST_CASE("sample_w is reproducible per seed") {
    torch::manual_seed(40);
    GeneratorConfig cfg;
    cfg.style_dim = 16;
    Generator gen(cfg);
    CHECK(torch::equal(gen->sample_w(4, 123), gen->sample_w(4, 123)));
    CHECK(!torch::equal(gen->sample_w(4, 123), gen->sample_w(4, 124)));
    CHECK(gen->sample_w(1, 9).sizes() == torch::IntArrayRef({1, 16}));
}

TEST_CASE("synthesis consumes exactly n_styles codes and stays in range") {
    torch::manual_seed(41);
    GeneratorConfig cfg;
    cfg.style_dim = 32;
    Generator gen(cfg);
    CHECK(cfg.n_styles() == 10);
    auto codes = torch::randn({2, 10, 32});
    auto img = gen->synthesize(codes);
    CHECK(img.sizes() == torch::IntArrayRef({2, 3, 64, 64}));
    CHECK(img.min().item<float>() >= -1.0f);
    CHECK(img.max().item<float>() <= 1.0f);

    CHECK_THROWS(gen->synthesize(torch::randn({2, 9, 32})));

    // plain-W synthesis through the broadcast helper
    auto w = gen->sample_w(2, 5);
    auto broadcast = gen->broadcast_w(w);
    CHECK(broadcast.sizes() == torch::IntArrayRef({2, 10, 32}));
    auto img_w = gen->synthesize(broadcast);
    CHECK(torch::isfinite(img_w).all().item<bool>());
}

TEST_CASE("changing style k leaves feature maps before block k bit-identical") {
    torch::manual_seed(42);
    GeneratorConfig cfg;
    cfg.style_dim = 16;
    Generator gen(cfg);
    auto a = torch::randn({1, 10, 16});
    auto b = a.clone();
    b.select(1, 3).normal_();

    std::vector<torch::Tensor> fa, fb;
    gen->synthesize_collect(a, &fa);
    gen->synthesize_collect(b, &fb);
    REQUIRE(fa.size() == 10);
    for (int k = 0; k < 3; ++k) {
        CHECK(torch::equal(fa[k], fb[k]));
    }
    CHECK(!torch::equal(fa[3], fb[3]));
}

TEST_CASE("gradients reach every style row") {
    torch::manual_seed(43);
    GeneratorConfig cfg;
    cfg.style_dim = 16;
    Generator gen(cfg);
    auto codes = torch::randn({1, 10, 16}, torch::requires_grad());
    gen->synthesize(codes).sum().backward();
    auto row_norms = codes.grad().abs().sum(-1).squeeze(0);
    for (int64_t k = 0; k < 10; ++k) {
        CHECK(row_norms[k].item<double>() > 0);
    }
}

TEST_CASE("style_mix replaces exactly the listed rows") {
    torch::manual_seed(44);
    auto a = torch::randn({1, 14, 8});
    auto b = torch::randn({1, 14, 8});
    CHECK(torch::equal(style_mix(a, b, {}), a));

    std::vector<int64_t> all(14);
    std::iota(all.begin(), all.end(), 0);
    CHECK(torch::equal(style_mix(a, b, all), b));

    auto mixed = style_mix(a, b, {8, 9, 10, 11, 12, 13});
    for (int64_t k = 0; k < 14; ++k) {
        CHECK(torch::equal(mixed.select(1, k), (k >= 8 ? b : a).select(1, k)));
    }
    CHECK_THROWS(style_mix(a, b, {14}));
}

TEST_CASE("encoder composite produces codes and honors the fusion switch") {
    torch::manual_seed(45);
    auto enc_cfg = EncoderConfig::toy();
    auto m2s = Map2StyleConfig::for_resolution(64, 64);
    Encoder enc(enc_cfg, m2s, /*multi_scale=*/true);
    auto img = torch::randn({2, 3, 64, 64}).clamp(-1, 1);
    auto codes = enc->forward(img);
    CHECK(codes.sizes() == torch::IntArrayRef({2, 10, 64}));

    Encoder flat(enc_cfg, m2s, /*multi_scale=*/false);
    for (const auto& p : flat->named_parameters()) {
        CHECK(p.key().find("fusion") == std::string::npos);
    }
    CHECK(flat->forward(img).sizes() == torch::IntArrayRef({2, 10, 64}));
}
