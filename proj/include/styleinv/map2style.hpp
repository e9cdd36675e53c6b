#pragma once

#include "styleinv/backbone.hpp"

namespace styleinv {

// What sits between merges inside a style tower.
enum class TowerBlock {
    LearnableQuery,  // transformer block with a trainable query bank
    SelfAttention,   // plain projected-query window attention
    LinearOnly,      // no attention blocks at all (all-linear tower)
};

struct Map2StyleConfig {
    int64_t style_dim = 512;
    int64_t n_styles = 10;
    // Styles owned by each pyramid level, coarsest first. Sums to n_styles.
    std::array<int64_t, 4> level_counts{2, 3, 3, 2};
    int64_t lq_window = 2;
    TowerBlock block = TowerBlock::LearnableQuery;

    void validate() const;
    // Pyramid index (0 = finest .. 3 = coarsest) owning style index s.
    int level_of_style(int64_t s) const;

    // n_styles = 2*(log2(output_resolution) - 1); level counts split evenly
    // with the remainder going to the middle levels first (14 -> 3,4,4,3).
    static Map2StyleConfig for_resolution(int64_t output_resolution, int64_t style_dim = 512);
};

int64_t styles_for_resolution(int64_t output_resolution);

// Merge-and-attend until 16 tokens, then linear reductions to a single token,
// then a projection to style_dim. Counts are derived from the input size:
// a side-64 level needs 4 merges, side 8 needs 1, side <= 4 needs none.
struct TowerPlan {
    int64_t merges = 0;      // merge + block repetitions down to 16 tokens
    int64_t reductions = 0;  // 4-to-1 linear token reductions down to 1
    static TowerPlan for_tokens(int64_t token_count);
};

class StyleTowerImpl : public torch::nn::Module {
public:
    StyleTowerImpl(int64_t side, int64_t dim, const Map2StyleConfig& cfg);
    // [B, tokens, dim] level -> [B, style_dim]
    torch::Tensor forward(const TokenGrid& grid);

    std::vector<PatchMerging> merges;
    std::vector<TransformerBlock> blocks;
    std::vector<torch::nn::Linear> reducers;  // 4*d -> d on 2x2 token blocks
    torch::nn::Linear head{nullptr};
    int64_t in_side, in_dim;
};
TORCH_MODULE(StyleTower);

// One independent tower per style index, each reading the fused level that
// owns the index; outputs stack to [B, n_styles, style_dim].
class Map2StyleImpl : public torch::nn::Module {
public:
    Map2StyleImpl(const EncoderConfig& enc, const Map2StyleConfig& cfg);
    torch::Tensor forward(const FeaturePyramid& fused);

    std::vector<StyleTower> towers;
    Map2StyleConfig cfg;
};
TORCH_MODULE(Map2Style);

}  // namespace styleinv
