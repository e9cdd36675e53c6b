#pragma once

#include <torch/torch.h>

namespace styleinv {

// One procedurally drawn face-like composite in [-1, 1]: background, head
// ellipse, eyes, pupils, mouth and hair band, all with seeded jitter of
// geometry and color. Deterministic for a given (resolution, seed).
torch::Tensor make_face_image(int64_t resolution, uint64_t seed);

// Eagerly generated procedural dataset. Image i uses seed mix(seed, i), so
// the set is stable under count changes of other splits.
class FaceDataset {
public:
    FaceDataset(int64_t count, int64_t resolution, uint64_t seed);

    int64_t size() const { return images_.size(0); }
    torch::Tensor all() const { return images_; }
    // Deterministic sequential batch with wraparound: images
    // [step*batch_size, ...) modulo the dataset size.
    torch::Tensor batch(int64_t step, int64_t batch_size) const;

private:
    torch::Tensor images_;  // [N, 3, R, R]
};

// SplitMix64; used everywhere a derived deterministic seed is needed.
uint64_t mix_seed(uint64_t seed, uint64_t salt);

}  // namespace styleinv
