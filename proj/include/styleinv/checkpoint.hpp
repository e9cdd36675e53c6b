#pragma once

#include "styleinv/trainer.hpp"

#include <string>

namespace styleinv {

inline constexpr int64_t kCheckpointVersion = 1;

// Checkpoint layout: version, config snapshot (key-value text), step counter,
// CPU RNG state, and named parameter/buffer blobs for encoder, generator,
// discriminator and both optimizers. load(save(t)) reproduces every
// parameter bit-exactly.
void save_checkpoint(const std::string& path, const Trainer& trainer);
void load_checkpoint_into(const std::string& path, Trainer& trainer);

// Reads only the config snapshot (validating the version first).
TrainConfig peek_checkpoint_config(const std::string& path);

}  // namespace styleinv
