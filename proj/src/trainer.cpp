#include "styleinv/trainer.hpp"

#include "styleinv/checkpoint.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace styleinv {

namespace F = torch::nn::functional;

EncoderConfig TrainConfig::encoder_config() const {
    EncoderConfig e;
    e.patch_size = patch_size;
    e.stage_dims = stage_dims;
    e.stage_depths = stage_depths;
    e.stage_heads = stage_heads;
    e.stage_window = window_sizes;
    e.input_resolution = resolution;
    return e;
}

Map2StyleConfig TrainConfig::map2style_config() const {
    auto m = Map2StyleConfig::for_resolution(resolution, style_dim);
    bool manual = false;
    for (auto c : level_counts) {
        if (c != 0) manual = true;
    }
    if (manual) {
        m.level_counts = level_counts;
    }
    m.lq_window = lq_window;
    if (map2style_block == "lq") {
        m.block = TowerBlock::LearnableQuery;
    } else if (map2style_block == "wmsa") {
        m.block = TowerBlock::SelfAttention;
    } else if (map2style_block == "linear") {
        m.block = TowerBlock::LinearOnly;
    } else {
        TORCH_CHECK(false, "map2style_block must be lq, wmsa or linear, got ",
                    map2style_block);
    }
    m.validate();
    return m;
}

GeneratorConfig TrainConfig::generator_config() const {
    GeneratorConfig g;
    g.style_dim = style_dim;
    g.output_resolution = resolution;
    g.mapping_depth = mapping_depth;
    g.channel_base = channel_base;
    g.channel_max = channel_max;
    return g;
}

DaMode TrainConfig::da_mode_enum() const {
    if (da_mode == "per_vector") return DaMode::PerVector;
    if (da_mode == "mean") return DaMode::Mean;
    TORCH_CHECK(false, "da_mode must be per_vector or mean, got ", da_mode);
}

void TrainConfig::validate() const {
    TORCH_CHECK(batch_size >= 1, "batch_size must be >= 1");
    TORCH_CHECK(steps >= 1, "steps must be >= 1");
    TORCH_CHECK(learning_rate > 0, "learning_rate must be positive");
    TORCH_CHECK(weights.pixel >= 0 && weights.perceptual >= 0 && weights.identity >= 0 &&
                    weights.dist_align >= 0 && weights.adversarial >= 0,
                "loss weights must be nonnegative");
    TORCH_CHECK(sr_weight >= 0, "sr_weight must be nonnegative");
    TORCH_CHECK(data_train >= 1 && data_eval >= 1, "dataset counts must be >= 1");
    TORCH_CHECK(resolution >= 16, "resolution must be >= 16");
    TORCH_CHECK(embed_dim >= 1, "embed_dim must be >= 1");
    TORCH_CHECK(disc_momentum >= 0 && disc_momentum < 1, "disc_momentum must be in [0, 1)");
    TORCH_CHECK(gen_pretrain_steps >= 1, "gen_pretrain_steps must be >= 1");
    encoder_config().validate();
    generator_config().validate();
    map2style_config();
    da_mode_enum();
    TORCH_CHECK(generator_config().n_styles() == map2style_config().n_styles,
                "generator and map2style disagree on n_styles");
}

Pipeline::Pipeline(const TrainConfig& cfg) {
    cfg.validate();
    torch::manual_seed(cfg.seed);
    encoder = Encoder(cfg.encoder_config(), cfg.map2style_config(),
                      cfg.multi_scale_connections);
    generator = Generator(cfg.generator_config());
    if (cfg.use_inversion_discriminator) {
        if (cfg.plain_discriminator) {
            plain_disc = PlainDiscriminator(cfg.resolution, cfg.embed_dim);
        } else {
            inv_disc = InversionDiscriminator(cfg.resolution, cfg.embed_dim,
                                              cfg.disc_momentum);
        }
    }
    features = RandomFeatureExtractor(mix_seed(cfg.seed, 0xFEA7));
    embedder = RandomEmbedder(cfg.resolution, 128, mix_seed(cfg.seed, 0x1DE0));
}

std::vector<torch::Tensor> Pipeline::discriminator_parameters() const {
    if (!inv_disc.is_empty()) {
        // only the query branch trains; the momentum branch is EMA-updated
        return inv_disc->query->parameters();
    }
    if (!plain_disc.is_empty()) {
        return plain_disc->parameters();
    }
    return {};
}

std::vector<std::pair<std::string, torch::Tensor>> Pipeline::named_model_parameters() const {
    std::vector<std::pair<std::string, torch::Tensor>> out;
    auto add = [&out](const std::string& prefix, const torch::nn::Module& m) {
        for (const auto& p : m.named_parameters()) {
            out.emplace_back(prefix + p.key(), p.value());
        }
    };
    add("encoder.", *encoder);
    add("generator.", *generator);
    if (!inv_disc.is_empty()) add("discriminator.", *inv_disc);
    if (!plain_disc.is_empty()) add("plain_discriminator.", *plain_disc);
    return out;
}

Trainer::Trainer(const TrainConfig& cfg_)
    : cfg(cfg_),
      model(cfg_),
      train_data(cfg_.data_train, cfg_.resolution, mix_seed(cfg_.seed, 0xDA7A)),
      eval_data(cfg_.data_eval, cfg_.resolution, mix_seed(cfg_.seed, 0xE7A1)) {
    enc_opt = std::make_unique<torch::optim::Adam>(
        model.encoder->parameters(), torch::optim::AdamOptions(cfg.learning_rate));
    if (model.has_discriminator()) {
        disc_opt = std::make_unique<torch::optim::Adam>(
            model.discriminator_parameters(), torch::optim::AdamOptions(cfg.learning_rate));
    }
}

void Trainer::pretrain_generator() {
    if (generator_ready) {
        return;
    }
    torch::manual_seed(mix_seed(cfg.seed, 0xBEEF));
    torch::optim::Adam opt(model.generator->parameters(),
                           torch::optim::AdamOptions(cfg.gen_pretrain_lr));
    int64_t n = train_data.size();
    std::vector<torch::Tensor> zs;
    zs.reserve(n);
    for (int64_t i = 0; i < n; ++i) {
        auto gen = at::detail::createCPUGenerator(mix_seed(cfg.seed, 0xC0DE + i));
        zs.push_back(torch::randn({cfg.style_dim}, gen,
                                  torch::TensorOptions().dtype(torch::kFloat32)));
    }
    auto z_all = torch::stack(zs, 0);
    for (int64_t s = 0; s < cfg.gen_pretrain_steps; ++s) {
        auto imgs = train_data.batch(s, cfg.batch_size);
        std::vector<int64_t> rows(cfg.batch_size);
        for (int64_t i = 0; i < cfg.batch_size; ++i) {
            rows[i] = (s * cfg.batch_size + i) % n;
        }
        auto z = z_all.index_select(0, torch::tensor(rows, torch::kLong));
        auto w = model.generator->mapping_forward(z);
        auto out = model.generator->synthesize(model.generator->broadcast_w(w));
        auto loss = torch::mse_loss(out, imgs);
        opt.zero_grad();
        loss.backward();
        opt.step();
    }
    model.generator->refresh_w_avg(512, mix_seed(cfg.seed, 0xA55A));
    for (auto& p : model.generator->parameters()) {
        p.set_requires_grad(false);
    }
    generator_ready = true;
}

namespace {

int64_t pick_sr_factor(int64_t resolution, uint64_t seed) {
    constexpr int64_t factors[6] = {1, 2, 4, 8, 16, 32};
    std::vector<int64_t> valid;
    for (auto f : factors) {
        if (resolution / f >= 2) valid.push_back(f);
    }
    return valid[seed % valid.size()];
}

}  // namespace

torch::Tensor degrade_resolution(const torch::Tensor& img, int64_t factor) {
    TORCH_CHECK(factor >= 1, "downsample factor must be >= 1");
    if (factor == 1) {
        return img;
    }
    auto side = img.size(-1);
    TORCH_CHECK(side / factor >= 1, "factor ", factor, " too large for side ", side);
    auto small = F::interpolate(img, F::InterpolateFuncOptions()
                                         .size(std::vector<int64_t>{side / factor, side / factor})
                                         .mode(torch::kBilinear)
                                         .align_corners(false));
    return F::interpolate(small, F::InterpolateFuncOptions()
                                     .size(std::vector<int64_t>{side, side})
                                     .mode(torch::kBilinear)
                                     .align_corners(false));
}

LossReport Trainer::train_step(const torch::Tensor& batch) {
    TORCH_CHECK(generator_ready,
                "generator must be pretrained or loaded before encoder training");
    auto salted = [this](uint64_t salt) {
        return mix_seed(mix_seed(cfg.seed, salt), static_cast<uint64_t>(step));
    };
    auto x = batch;
    auto enc_in = x;
    if (cfg.sr_mode) {
        enc_in = degrade_resolution(x, pick_sr_factor(cfg.resolution, salted(0x55)));
    }

    auto codes = model.encoder->forward(enc_in);
    auto xhat = model.generator->synthesize(codes);

    LossComponents comp;
    comp.pixel = pixel_loss(x, xhat);
    comp.perceptual = perceptual_loss(x, xhat, model.features->fn());
    comp.identity = id_loss(x, xhat, model.embedder->fn());
    if (cfg.use_da_loss) {
        torch::Tensor w_b;
        {
            torch::NoGradGuard guard;
            w_b = model.generator->sample_w(x.size(0), salted(0x11));
        }
        comp.dist_align = da_loss(codes, w_b, cfg.da_mode_enum());
    } else {
        comp.dist_align = torch::zeros({});
    }
    if (!model.inv_disc.is_empty()) {
        auto [fa, fb] = augment_pair(xhat, x, salted(0x22), cfg.augment);
        comp.adversarial = adv_g_loss(model.inv_disc->score(fa, fb));
    } else if (!model.plain_disc.is_empty()) {
        comp.adversarial = adv_g_loss(model.plain_disc->forward(xhat));
    } else {
        comp.adversarial = torch::zeros({});
    }
    auto total = total_loss(comp, cfg.weights);
    torch::Tensor sr_term;
    if (cfg.sr_mode) {
        sr_term = sr_regularization(codes, model.generator->w_avg);
        total = total + cfg.sr_weight * sr_term;
    }

    enc_opt->zero_grad();
    total.backward();
    enc_opt->step();

    LossReport report;
    report.step = step;
    report.pixel = comp.pixel.item<double>();
    report.perceptual = comp.perceptual.item<double>();
    report.identity = comp.identity.item<double>();
    report.has_da = cfg.use_da_loss;
    report.dist_align = cfg.use_da_loss ? comp.dist_align.item<double>() : 0.0;
    report.has_adv = model.has_discriminator();
    report.adv_g = report.has_adv ? comp.adversarial.item<double>() : 0.0;
    report.has_sr = cfg.sr_mode;
    report.sr_reg = cfg.sr_mode ? sr_term.item<double>() : 0.0;
    report.total = total.item<double>();

    if (!model.inv_disc.is_empty()) {
        disc_opt->zero_grad();
        auto [ra, rb] = augment_pair(x, x, salted(0x33), cfg.augment);
        auto [fa, fb] = augment_pair(xhat.detach(), x, salted(0x44), cfg.augment);
        auto d_loss = adv_d_loss(model.inv_disc->score(ra, rb),
                                 model.inv_disc->score(fa, fb));
        d_loss.backward();
        disc_opt->step();
        model.inv_disc->momentum_update();
        report.adv_d = d_loss.item<double>();
    } else if (!model.plain_disc.is_empty()) {
        disc_opt->zero_grad();
        auto d_loss = adv_d_loss(model.plain_disc->forward(x),
                                 model.plain_disc->forward(xhat.detach()));
        d_loss.backward();
        disc_opt->step();
        report.adv_d = d_loss.item<double>();
    }
    return report;
}

EvalMetrics Trainer::evaluate(const torch::Tensor& x, const torch::Tensor& xhat) {
    torch::NoGradGuard guard;
    EvalMetrics m;
    m.mse = mse_metric(x, xhat);
    m.psnr = psnr_metric(x, xhat);
    m.ssim = ssim_metric(x, xhat);
    m.perceptual = perceptual_loss(x, xhat, model.features->fn()).item<double>();
    return m;
}

std::pair<EvalMetrics, double> Trainer::evaluate_heldout() {
    TORCH_CHECK(generator_ready, "evaluate_heldout needs a ready generator");
    torch::NoGradGuard guard;
    if (!w_ref.defined()) {
        w_ref = model.generator->sample_w(256, mix_seed(cfg.seed, 0x5EED));
    }
    auto x = eval_data.all();
    auto codes = model.encoder->forward(x);
    auto xhat = model.generator->synthesize(codes);
    return {evaluate(x, xhat), distribution_gap(codes, w_ref)};
}

torch::Tensor Trainer::invert(const torch::Tensor& images) {
    torch::NoGradGuard guard;
    return model.encoder->forward(images);
}

torch::Tensor Trainer::synthesize(const torch::Tensor& codes) {
    torch::NoGradGuard guard;
    return model.generator->synthesize(codes);
}

void Trainer::save(const std::string& path) const {
    save_checkpoint(path, *this);
}

void Trainer::load(const std::string& path) {
    load_checkpoint_into(path, *this);
}

Trainer Trainer::from_checkpoint(const std::string& path) {
    Trainer t(peek_checkpoint_config(path));
    t.load(path);
    return t;
}

namespace {

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

std::string loss_report_csv_header() {
    return "step,pixel,perceptual,identity,dist_align,adv_g,adv_d,sr_reg,total,"
           "eval_mse,eval_psnr,eval_ssim,eval_perceptual,dist_gap";
}

std::string loss_report_csv_row(const LossReport& r,
                                const std::optional<EvalMetrics>& eval_metrics,
                                const std::optional<double>& dist_gap) {
    std::string row = std::to_string(r.step);
    row += "," + fmt_g(r.pixel) + "," + fmt_g(r.perceptual) + "," + fmt_g(r.identity);
    row += "," + (r.has_da ? fmt_g(r.dist_align) : std::string());
    row += "," + (r.has_adv ? fmt_g(r.adv_g) : std::string());
    row += "," + (r.has_adv ? fmt_g(r.adv_d) : std::string());
    row += "," + (r.has_sr ? fmt_g(r.sr_reg) : std::string());
    row += "," + fmt_g(r.total);
    for (int i = 0; i < 4; ++i) {
        row += ",";
        if (eval_metrics) {
            const double vals[4] = {eval_metrics->mse, eval_metrics->psnr,
                                    eval_metrics->ssim, eval_metrics->perceptual};
            row += fmt_g(vals[i]);
        }
    }
    row += ",";
    if (dist_gap) {
        row += fmt_g(*dist_gap);
    }
    return row;
}

void Trainer::fit() {
    if (!cfg.resume.empty()) {
        load(cfg.resume);
    } else {
        pretrain_generator();
    }
    std::filesystem::create_directories(cfg.out_dir);
    auto log_path = cfg.out_dir + "/metrics.csv";
    bool fresh = !std::filesystem::exists(log_path) ||
                 std::filesystem::file_size(log_path) == 0;
    std::ofstream log(log_path, std::ios::app);
    TORCH_CHECK(log.good(), "cannot open metric log ", log_path);
    if (fresh) {
        log << loss_report_csv_header() << "\n";
    }
    while (step < cfg.steps) {
        auto batch = train_data.batch(step, cfg.batch_size);
        auto report = train_step(batch);
        ++step;
        report.step = step;
        std::optional<EvalMetrics> eval_metrics;
        std::optional<double> gap;
        if (step % cfg.eval_every == 0 || step == cfg.steps) {
            auto [m, g] = evaluate_heldout();
            eval_metrics = m;
            gap = g;
        }
        log << loss_report_csv_row(report, eval_metrics, gap) << "\n";
        log.flush();
        if (step % cfg.checkpoint_every == 0 || step == cfg.steps) {
            save(cfg.out_dir + "/checkpoint.pt");
        }
    }
}

}  // namespace styleinv
