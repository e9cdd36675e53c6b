#include "styleinv/commands.hpp"

#include "styleinv/checkpoint.hpp"
#include "styleinv/config.hpp"
#include "styleinv/image_io.hpp"
#include "styleinv/losses.hpp"
#include "styleinv/metrics.hpp"
#include "styleinv/trainer.hpp"

#include <cstdio>
#include <iostream>
#include <sstream>

namespace styleinv {

namespace {

torch::Tensor load_input_image(const std::string& path, const Trainer& t) {
    auto img = read_png(path);
    TORCH_CHECK(img.size(1) == t.cfg.resolution && img.size(2) == t.cfg.resolution,
                "image ", path, " is ", img.size(1), "x", img.size(2),
                " but the checkpoint expects ", t.cfg.resolution, "x", t.cfg.resolution);
    return img.unsqueeze(0);
}

}  // namespace

std::vector<int64_t> parse_layer_list(const std::string& spec) {
    std::vector<int64_t> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        auto dash = item.find('-');
        if (dash != std::string::npos && dash > 0) {
            int64_t lo = std::stoll(item.substr(0, dash));
            int64_t hi = std::stoll(item.substr(dash + 1));
            TORCH_CHECK(lo <= hi, "bad layer range ", item);
            for (int64_t l = lo; l <= hi; ++l) out.push_back(l);
        } else {
            out.push_back(std::stoll(item));
        }
    }
    return out;
}

int cmd_train(const std::string& config_path, std::optional<uint64_t> seed_override) {
    auto cfg = load_config_file(config_path);
    if (seed_override) {
        cfg.seed = *seed_override;
    }
    Trainer trainer(cfg);
    trainer.fit();
    std::cout << "trained " << trainer.step << " steps; checkpoint at "
              << cfg.out_dir << "/checkpoint.pt\n";
    return 0;
}

int cmd_invert(const std::string& checkpoint, const std::string& image_in,
               const std::string& image_out, const std::string& codes_out) {
    auto t = Trainer::from_checkpoint(checkpoint);
    auto x = load_input_image(image_in, t);
    auto codes = t.invert(x);
    auto xhat = t.synthesize(codes);
    write_png(image_out, xhat);
    if (!codes_out.empty()) {
        write_codes(codes_out, codes);
    }
    return 0;
}

int cmd_edit(const std::string& checkpoint, const std::string& image_in,
             const std::string& direction_file, double alpha, const std::string& image_out) {
    auto t = Trainer::from_checkpoint(checkpoint);
    auto x = load_input_image(image_in, t);
    auto codes = t.invert(x);
    auto direction = read_direction(direction_file, codes.size(1), codes.size(2));
    auto edited = codes + alpha * direction.unsqueeze(0);
    write_png(image_out, t.synthesize(edited));
    return 0;
}

int cmd_mix(const std::string& checkpoint, const std::string& image_a,
            const std::string& image_b, const std::vector<int64_t>& layers,
            const std::string& image_out) {
    auto t = Trainer::from_checkpoint(checkpoint);
    auto codes_a = t.invert(load_input_image(image_a, t));
    auto codes_b = t.invert(load_input_image(image_b, t));
    auto mixed = style_mix(codes_a, codes_b, layers);
    write_png(image_out, t.synthesize(mixed));
    return 0;
}

int cmd_superres(const std::string& checkpoint, const std::string& image_in,
                 int64_t factor, const std::string& image_out) {
    TORCH_CHECK(factor == 1 || factor == 2 || factor == 4 || factor == 8 ||
                    factor == 16 || factor == 32,
                "factor must be one of 1,2,4,8,16,32, got ", factor);
    auto t = Trainer::from_checkpoint(checkpoint);
    auto x = load_input_image(image_in, t);
    auto degraded = degrade_resolution(x, factor);
    auto codes = t.invert(degraded);
    write_png(image_out, t.synthesize(codes));
    return 0;
}

int cmd_diff_heatmap(const std::string& checkpoint, const std::string& image_in,
                     const std::string& heatmap_out, const std::string& attn_out) {
    auto t = Trainer::from_checkpoint(checkpoint);
    auto x = load_input_image(image_in, t);
    auto xhat = t.synthesize(t.invert(x));
    auto diff = (x - xhat).abs().mean(1).squeeze(0);  // [H, W]
    auto lo = diff.min();
    auto hi = diff.max();
    auto span = (hi - lo).item<double>();
    auto heat = span > 0 ? (diff - lo) / (hi - lo) : torch::zeros_like(diff);
    write_png_gray(heatmap_out, heat);

    if (!attn_out.empty()) {
        torch::NoGradGuard guard;
        auto& backbone = t.model.encoder->backbone;
        auto grid = backbone->embed->forward(x);
        auto& block = backbone->stages[0]->blocks[0];
        auto normed = TokenGrid(block->norm1->forward(grid.data), grid.h, grid.w);
        auto weights = block->attn->attention_weights(normed, block->shift);
        auto mean_map = weights.mean(0).mean(0);  // [ws^2, ws^2]
        auto mx = mean_map.max().item<double>();
        write_png_gray(attn_out, mx > 0 ? mean_map / mx : mean_map);
    }
    return 0;
}

int cmd_metrics(const std::string& image_a, const std::string& image_b) {
    auto a = read_png(image_a).unsqueeze(0);
    auto b = read_png(image_b).unsqueeze(0);
    TORCH_CHECK(a.sizes() == b.sizes(), "images differ in size: ", a.sizes(), " vs ", b.sizes());
    RandomFeatureExtractor features(0x5EED);
    double perc = perceptual_loss(a, b, features->fn()).item<double>();
    char line[256];
    std::snprintf(line, sizeof(line), "mse = %.9g\npsnr = %.9g\nssim = %.9g\nperceptual = %.9g\n",
                  mse_metric(a, b), psnr_metric(a, b), ssim_metric(a, b), perc);
    std::cout << line;
    return 0;
}

}  // namespace styleinv
