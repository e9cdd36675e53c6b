#pragma once

#include "styleinv/dataset.hpp"
#include "styleinv/discriminator.hpp"
#include "styleinv/encoder.hpp"
#include "styleinv/generator.hpp"
#include "styleinv/losses.hpp"
#include "styleinv/metrics.hpp"

#include <memory>
#include <optional>
#include <string>

namespace styleinv {

struct TrainConfig {
    // model
    int64_t resolution = 64;
    int64_t style_dim = 512;
    int64_t patch_size = 4;
    std::array<int64_t, 4> stage_dims{32, 64, 128, 256};
    std::array<int64_t, 4> stage_depths{1, 1, 2, 1};
    std::array<int64_t, 4> stage_heads{2, 2, 4, 8};
    std::array<int64_t, 4> window_sizes{2, 2, 8, 8};
    // map2style
    int64_t lq_window = 2;
    std::string map2style_block = "lq";  // lq | wmsa | linear
    std::array<int64_t, 4> level_counts{0, 0, 0, 0};  // all zero = automatic split
    // generator
    int64_t mapping_depth = 8;
    int64_t channel_base = 1024;
    int64_t channel_max = 128;
    int64_t gen_pretrain_steps = 400;
    double gen_pretrain_lr = 1e-3;
    // training
    int64_t batch_size = 4;
    int64_t steps = 200;
    double learning_rate = 1e-4;
    uint64_t seed = 1;
    std::string out_dir = "run";
    std::string resume;  // checkpoint path, empty = fresh start
    int64_t eval_every = 50;
    int64_t checkpoint_every = 200;
    // losses
    LossWeights weights;
    std::string da_mode = "per_vector";  // per_vector | mean
    // ablation switches
    bool multi_scale_connections = true;
    bool use_da_loss = true;
    bool use_inversion_discriminator = true;
    bool plain_discriminator = false;
    // super-resolution training mode
    bool sr_mode = false;
    double sr_weight = 0.005;
    // discriminator details
    int64_t embed_dim = 256;
    double disc_momentum = 0.999;
    AugmentConfig augment;
    // data
    int64_t data_train = 64;
    int64_t data_eval = 16;

    EncoderConfig encoder_config() const;
    Map2StyleConfig map2style_config() const;
    GeneratorConfig generator_config() const;
    DaMode da_mode_enum() const;
    void validate() const;
};

// The model bundle built from one TrainConfig. Construction order is fixed,
// so identical seeds give identical initialization.
struct Pipeline {
    explicit Pipeline(const TrainConfig& cfg);

    bool has_discriminator() const {
        return !inv_disc.is_empty() || !plain_disc.is_empty();
    }
    std::vector<torch::Tensor> discriminator_parameters() const;
    // (name, parameter) pairs across every submodule, names prefixed by role.
    std::vector<std::pair<std::string, torch::Tensor>> named_model_parameters() const;

    Encoder encoder{nullptr};
    Generator generator{nullptr};
    InversionDiscriminator inv_disc{nullptr};
    PlainDiscriminator plain_disc{nullptr};
    RandomFeatureExtractor features{nullptr};
    RandomEmbedder embedder{nullptr};
};

struct LossReport {
    int64_t step = 0;
    double pixel = 0, perceptual = 0, identity = 0, dist_align = 0;
    double adv_g = 0, adv_d = 0, sr_reg = 0, total = 0;
    bool has_da = false, has_adv = false, has_sr = false;
};

// Alternates one encoder update and one discriminator update per step, with
// the momentum update strictly after the discriminator update. The generator
// is pretrained briefly as a decoder on the training set, then frozen.
class Trainer {
public:
    explicit Trainer(const TrainConfig& cfg);

    void pretrain_generator();
    LossReport train_step(const torch::Tensor& batch);
    void fit();

    EvalMetrics evaluate(const torch::Tensor& x, const torch::Tensor& xhat);
    // Mean eval metrics plus distribution gap over the held-out set.
    std::pair<EvalMetrics, double> evaluate_heldout();

    void save(const std::string& path) const;
    void load(const std::string& path);
    static Trainer from_checkpoint(const std::string& path);

    torch::Tensor invert(const torch::Tensor& images);  // codes, no grad
    torch::Tensor synthesize(const torch::Tensor& codes);

    TrainConfig cfg;
    Pipeline model;
    FaceDataset train_data, eval_data;
    std::unique_ptr<torch::optim::Adam> enc_opt, disc_opt;
    torch::Tensor w_ref;  // fixed style-vector sample for distribution diagnostics
    int64_t step = 0;
    bool generator_ready = false;
};

// Downsample by `factor` and resize back, both bilinear; factor 1 is identity.
torch::Tensor degrade_resolution(const torch::Tensor& img, int64_t factor);

std::string loss_report_csv_header();
std::string loss_report_csv_row(const LossReport& r,
                                const std::optional<EvalMetrics>& eval_metrics,
                                const std::optional<double>& dist_gap);

}  // namespace styleinv
