#include "styleinv/dataset.hpp"

#include <cmath>
#include <random>

namespace styleinv {

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

struct Rand {
    explicit Rand(uint64_t seed) : eng(seed) {}
    double uniform() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
    double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::mt19937_64 eng;
};

struct Color {
    double r, g, b;
};

// Soft-edged filled ellipse; coverage fades over roughly one pixel.
void draw_ellipse(float* img, int64_t res, double cx, double cy, double ax, double ay,
                  const Color& color) {
    for (int64_t y = 0; y < res; ++y) {
        for (int64_t x = 0; x < res; ++x) {
            double dx = (x + 0.5 - cx) / ax;
            double dy = (y + 0.5 - cy) / ay;
            double d = std::sqrt(dx * dx + dy * dy);
            double edge = 1.0 / std::min(ax, ay);
            double cover = std::clamp((1.0 - d) / edge + 0.5, 0.0, 1.0);
            if (cover <= 0.0) continue;
            int64_t idx = y * res + x;
            img[0 * res * res + idx] = static_cast<float>(
                (1 - cover) * img[0 * res * res + idx] + cover * color.r);
            img[1 * res * res + idx] = static_cast<float>(
                (1 - cover) * img[1 * res * res + idx] + cover * color.g);
            img[2 * res * res + idx] = static_cast<float>(
                (1 - cover) * img[2 * res * res + idx] + cover * color.b);
        }
    }
}

}  // namespace

torch::Tensor make_face_image(int64_t resolution, uint64_t seed) {
    TORCH_CHECK(resolution >= 16, "face images need resolution >= 16");
    Rand rng(seed);
    auto img = torch::empty({3, resolution, resolution}, torch::kFloat32);
    Color bg{rng.range(-0.9, -0.1), rng.range(-0.9, 0.1), rng.range(-0.5, 0.5)};
    img[0].fill_(bg.r);
    img[1].fill_(bg.g);
    img[2].fill_(bg.b);
    float* p = img.data_ptr<float>();
    double r = static_cast<double>(resolution);

    double cx = r * rng.range(0.44, 0.56);
    double cy = r * rng.range(0.46, 0.58);
    double ax = r * rng.range(0.26, 0.36);
    double ay = r * rng.range(0.32, 0.42);
    Color skin{rng.range(0.3, 0.9), rng.range(0.0, 0.5), rng.range(-0.3, 0.2)};
    draw_ellipse(p, resolution, cx, cy, ax, ay, skin);

    // hair band across the top of the head
    Color hair{rng.range(-1.0, -0.2), rng.range(-1.0, -0.3), rng.range(-1.0, 0.0)};
    draw_ellipse(p, resolution, cx, cy - 0.75 * ay, ax * rng.range(0.8, 1.05),
                 ay * rng.range(0.3, 0.45), hair);

    double eye_dx = ax * rng.range(0.35, 0.5);
    double eye_y = cy - ay * rng.range(0.15, 0.3);
    double eye_r = r * rng.range(0.035, 0.06);
    Color white{0.9, 0.9, 0.9};
    Color pupil{rng.range(-1.0, -0.5), rng.range(-1.0, -0.5), rng.range(-0.6, 0.4)};
    draw_ellipse(p, resolution, cx - eye_dx, eye_y, eye_r * 1.4, eye_r, white);
    draw_ellipse(p, resolution, cx + eye_dx, eye_y, eye_r * 1.4, eye_r, white);
    draw_ellipse(p, resolution, cx - eye_dx, eye_y, eye_r * 0.6, eye_r * 0.6, pupil);
    draw_ellipse(p, resolution, cx + eye_dx, eye_y, eye_r * 0.6, eye_r * 0.6, pupil);

    Color mouth{rng.range(0.2, 0.9), rng.range(-0.9, -0.3), rng.range(-0.8, -0.2)};
    draw_ellipse(p, resolution, cx + r * rng.range(-0.02, 0.02),
                 cy + ay * rng.range(0.4, 0.6), ax * rng.range(0.3, 0.5),
                 eye_r * rng.range(0.5, 1.0), mouth);

    return img.clamp_(-1.0, 1.0);
}

FaceDataset::FaceDataset(int64_t count, int64_t resolution, uint64_t seed) {
    TORCH_CHECK(count >= 1, "dataset needs at least one image");
    std::vector<torch::Tensor> imgs;
    imgs.reserve(count);
    for (int64_t i = 0; i < count; ++i) {
        imgs.push_back(make_face_image(resolution, mix_seed(seed, i)));
    }
    images_ = torch::stack(imgs, 0);
}

torch::Tensor FaceDataset::batch(int64_t step, int64_t batch_size) const {
    TORCH_CHECK(batch_size >= 1, "batch size must be >= 1");
    std::vector<torch::Tensor> picks;
    picks.reserve(batch_size);
    for (int64_t i = 0; i < batch_size; ++i) {
        picks.push_back(images_[(step * batch_size + i) % size()]);
    }
    return torch::stack(picks, 0);
}

}  // namespace styleinv
