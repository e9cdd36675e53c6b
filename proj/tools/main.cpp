#include "styleinv/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"styleinv - windowed-transformer GAN inversion toolkit"};
    app.require_subcommand(1);

    std::string config_path, checkpoint, out, codes_out, direction, layers_spec, attn_out;
    std::vector<std::string> inputs;
    double alpha = 1.0;
    int64_t factor = 4;
    uint64_t seed = 0;
    bool seed_set = false;

    auto* train = app.add_subcommand("train", "Train from a config file");
    train->add_option("--config", config_path, "key = value config file")->required();
    train->add_option("--seed", seed, "override the config seed")
        ->each([&seed_set](const std::string&) { seed_set = true; });

    auto* invert = app.add_subcommand("invert", "Invert an image to latent codes");
    invert->add_option("--checkpoint", checkpoint)->required();
    invert->add_option("--in", inputs, "input image")->required()->expected(1);
    invert->add_option("--out", out, "inversion image")->required();
    invert->add_option("--codes-out", codes_out, "latent codes text file");

    auto* edit = app.add_subcommand("edit", "Move latent codes along a direction");
    edit->add_option("--checkpoint", checkpoint)->required();
    edit->add_option("--in", inputs)->required()->expected(1);
    edit->add_option("--direction", direction, "direction text file")->required();
    edit->add_option("--alpha", alpha, "edit strength");
    edit->add_option("--out", out)->required();

    auto* mix = app.add_subcommand("mix", "Style-mix two inverted images");
    mix->add_option("--checkpoint", checkpoint)->required();
    mix->add_option("--in", inputs, "two input images")->required()->expected(2);
    mix->add_option("--layers", layers_spec, "style rows taken from the second image, e.g. 8-13")
        ->required();
    mix->add_option("--out", out)->required();

    auto* superres = app.add_subcommand("superres", "Invert a downsampled image");
    superres->add_option("--checkpoint", checkpoint)->required();
    superres->add_option("--in", inputs)->required()->expected(1);
    superres->add_option("--factor", factor, "downsampling factor (1,2,4,8,16,32)");
    superres->add_option("--out", out)->required();

    auto* heatmap = app.add_subcommand("heatmap", "Inversion-difference heatmap");
    heatmap->add_option("--checkpoint", checkpoint)->required();
    heatmap->add_option("--in", inputs)->required()->expected(1);
    heatmap->add_option("--out", out)->required();
    heatmap->add_option("--attn-out", attn_out, "also dump a first-stage attention raster");

    auto* metrics = app.add_subcommand("metrics", "MSE/PSNR/SSIM/perceptual between two images");
    metrics->add_option("--in", inputs, "two images")->required()->expected(2);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*train) {
            return styleinv::cmd_train(
                config_path, seed_set ? std::optional<uint64_t>(seed) : std::nullopt);
        }
        if (*invert) {
            return styleinv::cmd_invert(checkpoint, inputs[0], out, codes_out);
        }
        if (*edit) {
            return styleinv::cmd_edit(checkpoint, inputs[0], direction, alpha, out);
        }
        if (*mix) {
            return styleinv::cmd_mix(checkpoint, inputs[0], inputs[1],
                                     styleinv::parse_layer_list(layers_spec), out);
        }
        if (*superres) {
            return styleinv::cmd_superres(checkpoint, inputs[0], factor, out);
        }
        if (*heatmap) {
            return styleinv::cmd_diff_heatmap(checkpoint, inputs[0], out, attn_out);
        }
        if (*metrics) {
            return styleinv::cmd_metrics(inputs[0], inputs[1]);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
