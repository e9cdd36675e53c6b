#include "styleinv/checkpoint.hpp"

#include "styleinv/config.hpp"

#include <torch/serialize.h>

namespace styleinv {

namespace {

torch::serialize::InputArchive open_archive(const std::string& path) {
    torch::serialize::InputArchive root;
    try {
        root.load_from(path);
    } catch (const std::exception& e) {
        TORCH_CHECK(false, "cannot read checkpoint ", path, ": ", e.what());
    }
    torch::Tensor version;
    TORCH_CHECK(root.try_read("version", version),
                "checkpoint ", path, " has no version field");
    TORCH_CHECK(version.item<int64_t>() == kCheckpointVersion,
                "checkpoint version ", version.item<int64_t>(),
                " unsupported (expected ", kCheckpointVersion, ")");
    return root;
}

torch::Tensor string_to_tensor(const std::string& s) {
    auto t = torch::empty({static_cast<int64_t>(s.size())}, torch::kUInt8);
    std::memcpy(t.data_ptr<uint8_t>(), s.data(), s.size());
    return t;
}

std::string tensor_to_string(const torch::Tensor& t) {
    auto c = t.contiguous();
    return std::string(reinterpret_cast<const char*>(c.data_ptr<uint8_t>()), c.numel());
}

}  // namespace

void save_checkpoint(const std::string& path, const Trainer& trainer) {
    TORCH_CHECK(trainer.generator_ready,
                "refusing to checkpoint before the generator is pretrained");
    torch::serialize::OutputArchive root;
    root.write("version", torch::tensor(kCheckpointVersion));
    root.write("config", string_to_tensor(config_to_text(trainer.cfg)));
    root.write("step", torch::tensor(trainer.step));
    root.write("rng_state", at::detail::getDefaultCPUGenerator().get_state());

    torch::serialize::OutputArchive enc;
    trainer.model.encoder->save(enc);
    root.write("encoder", enc);

    torch::serialize::OutputArchive gen;
    trainer.model.generator->save(gen);
    root.write("generator", gen);

    if (!trainer.model.inv_disc.is_empty()) {
        torch::serialize::OutputArchive disc;
        trainer.model.inv_disc->save(disc);
        root.write("discriminator", disc);
    }
    if (!trainer.model.plain_disc.is_empty()) {
        torch::serialize::OutputArchive disc;
        trainer.model.plain_disc->save(disc);
        root.write("plain_discriminator", disc);
    }

    torch::serialize::OutputArchive enc_opt;
    trainer.enc_opt->save(enc_opt);
    root.write("opt_encoder", enc_opt);
    if (trainer.disc_opt) {
        torch::serialize::OutputArchive disc_opt;
        trainer.disc_opt->save(disc_opt);
        root.write("opt_discriminator", disc_opt);
    }
    root.save_to(path);
}

TrainConfig peek_checkpoint_config(const std::string& path) {
    auto root = open_archive(path);
    torch::Tensor cfg_blob;
    TORCH_CHECK(root.try_read("config", cfg_blob),
                "checkpoint ", path, " has no config snapshot");
    return config_from_text(tensor_to_string(cfg_blob));
}

void load_checkpoint_into(const std::string& path, Trainer& trainer) {
    auto root = open_archive(path);

    torch::Tensor cfg_blob;
    TORCH_CHECK(root.try_read("config", cfg_blob), "checkpoint has no config snapshot");
    auto saved_cfg = config_from_text(tensor_to_string(cfg_blob));
    TORCH_CHECK(saved_cfg.resolution == trainer.cfg.resolution &&
                    saved_cfg.style_dim == trainer.cfg.style_dim,
                "checkpoint was produced by an incompatible model configuration");

    torch::Tensor step;
    TORCH_CHECK(root.try_read("step", step), "checkpoint has no step counter");
    trainer.step = step.item<int64_t>();

    torch::Tensor rng_state;
    TORCH_CHECK(root.try_read("rng_state", rng_state), "checkpoint has no RNG state");
    auto default_rng = at::detail::getDefaultCPUGenerator();  // copies share the impl
    default_rng.set_state(rng_state);

    torch::serialize::InputArchive enc;
    TORCH_CHECK(root.try_read("encoder", enc), "checkpoint has no encoder blob");
    trainer.model.encoder->load(enc);

    torch::serialize::InputArchive gen;
    TORCH_CHECK(root.try_read("generator", gen), "checkpoint has no generator blob");
    trainer.model.generator->load(gen);

    if (!trainer.model.inv_disc.is_empty()) {
        torch::serialize::InputArchive disc;
        TORCH_CHECK(root.try_read("discriminator", disc),
                    "checkpoint has no discriminator blob but config expects one");
        trainer.model.inv_disc->load(disc);
    }
    if (!trainer.model.plain_disc.is_empty()) {
        torch::serialize::InputArchive disc;
        TORCH_CHECK(root.try_read("plain_discriminator", disc),
                    "checkpoint has no plain-discriminator blob but config expects one");
        trainer.model.plain_disc->load(disc);
    }

    torch::serialize::InputArchive enc_opt;
    TORCH_CHECK(root.try_read("opt_encoder", enc_opt), "checkpoint has no encoder optimizer");
    trainer.enc_opt->load(enc_opt);
    if (trainer.disc_opt) {
        torch::serialize::InputArchive disc_opt;
        TORCH_CHECK(root.try_read("opt_discriminator", disc_opt),
                    "checkpoint has no discriminator optimizer");
        trainer.disc_opt->load(disc_opt);
    }

    // checkpoints are only written after generator pretraining
    for (auto& p : trainer.model.generator->parameters()) {
        p.set_requires_grad(false);
    }
    trainer.generator_ready = true;
}

}  // namespace styleinv
