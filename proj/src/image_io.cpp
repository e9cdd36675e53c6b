#include "styleinv/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace styleinv {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

uint8_t to_byte(float v) {
    float clamped = std::min(1.0f, std::max(-1.0f, v));
    long b = std::lround((clamped + 1.0f) * 127.5f);
    return static_cast<uint8_t>(std::min(255L, std::max(0L, b)));
}

}  // namespace

torch::Tensor read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    TORCH_CHECK(fp, "cannot open image ", path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    TORCH_CHECK(png, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        TORCH_CHECK(false, "libpng info init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        TORCH_CHECK(false, "failed to decode PNG ", path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    png_read_update_info(png, info);

    auto width = png_get_image_width(png, info);
    auto height = png_get_image_height(png, info);
    TORCH_CHECK(png_get_channels(png, info) == 3, "expected 3-channel data after expansion");

    std::vector<uint8_t> raw(static_cast<size_t>(width) * height * 3);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 y = 0; y < height; ++y) {
        rows[y] = raw.data() + static_cast<size_t>(y) * width * 3;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    auto img = torch::empty({3, height, width}, torch::kFloat32);
    auto acc = img.accessor<float, 3>();
    for (png_uint_32 y = 0; y < height; ++y) {
        for (png_uint_32 x = 0; x < width; ++x) {
            for (int c = 0; c < 3; ++c) {
                acc[c][y][x] = raw[(static_cast<size_t>(y) * width + x) * 3 + c] / 127.5f - 1.0f;
            }
        }
    }
    return img;
}

void write_png(const std::string& path, const torch::Tensor& img_in) {
    auto img = img_in;
    if (img.dim() == 4) {
        TORCH_CHECK(img.size(0) == 1, "write_png takes a single image, got batch ", img.size(0));
        img = img.squeeze(0);
    }
    TORCH_CHECK(img.dim() == 3 && img.size(0) == 3,
                "write_png expects [3, H, W], got ", img.sizes());
    auto x = img.to(torch::kFloat32).contiguous();
    int64_t h = x.size(1), w = x.size(2);

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    TORCH_CHECK(fp, "cannot open ", path, " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    TORCH_CHECK(png, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        TORCH_CHECK(false, "libpng info init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        TORCH_CHECK(false, "failed to encode PNG ", path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    auto acc = x.accessor<float, 3>();
    std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
    for (int64_t y = 0; y < h; ++y) {
        for (int64_t xx = 0; xx < w; ++xx) {
            for (int c = 0; c < 3; ++c) {
                row[xx * 3 + c] = to_byte(acc[c][y][xx]);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_png_gray(const std::string& path, const torch::Tensor& gray) {
    TORCH_CHECK(gray.dim() == 2, "write_png_gray expects [H, W], got ", gray.sizes());
    auto x = gray.to(torch::kFloat32).contiguous();
    int64_t h = x.size(0), w = x.size(1);

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    TORCH_CHECK(fp, "cannot open ", path, " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    TORCH_CHECK(png, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        TORCH_CHECK(false, "libpng info init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        TORCH_CHECK(false, "failed to encode PNG ", path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    auto acc = x.accessor<float, 2>();
    std::vector<uint8_t> row(static_cast<size_t>(w));
    for (int64_t y = 0; y < h; ++y) {
        for (int64_t xx = 0; xx < w; ++xx) {
            float v = std::min(1.0f, std::max(0.0f, acc[y][xx]));
            row[xx] = static_cast<uint8_t>(std::lround(v * 255.0f));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_codes(const std::string& path, const torch::Tensor& codes_in) {
    auto codes = codes_in;
    if (codes.dim() == 3) {
        TORCH_CHECK(codes.size(0) == 1, "write_codes takes one image's codes");
        codes = codes.squeeze(0);
    }
    TORCH_CHECK(codes.dim() == 2, "codes must be [n_styles, style_dim], got ", codes.sizes());
    std::ofstream out(path);
    TORCH_CHECK(out.good(), "cannot open ", path, " for writing");
    auto flat = codes.to(torch::kFloat32).contiguous();
    auto acc = flat.accessor<float, 2>();
    char buf[64];
    for (int64_t r = 0; r < codes.size(0); ++r) {
        for (int64_t c = 0; c < codes.size(1); ++c) {
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(acc[r][c]));
            out << buf << (c + 1 == codes.size(1) ? "" : " ");
        }
        out << "\n";
    }
    TORCH_CHECK(out.good(), "failed writing codes to ", path);
}

namespace {

std::vector<float> read_floats(const std::string& path) {
    std::ifstream in(path);
    TORCH_CHECK(in.good(), "cannot read ", path);
    std::vector<float> values;
    double v;
    while (in >> v) {
        values.push_back(static_cast<float>(v));
    }
    TORCH_CHECK(in.eof(), "non-numeric content in ", path);
    TORCH_CHECK(!values.empty(), "no values in ", path);
    return values;
}

}  // namespace

torch::Tensor read_codes(const std::string& path, int64_t style_dim) {
    auto values = read_floats(path);
    TORCH_CHECK(values.size() % style_dim == 0,
                "codes file ", path, " holds ", values.size(),
                " values, not a multiple of style_dim ", style_dim);
    int64_t rows = static_cast<int64_t>(values.size()) / style_dim;
    return torch::from_blob(values.data(), {rows, style_dim}, torch::kFloat32).clone();
}

torch::Tensor read_direction(const std::string& path, int64_t n_styles, int64_t style_dim) {
    auto values = read_floats(path);
    int64_t n = static_cast<int64_t>(values.size());
    if (n == style_dim) {
        auto one = torch::from_blob(values.data(), {style_dim}, torch::kFloat32).clone();
        return one.unsqueeze(0).expand({n_styles, style_dim}).contiguous();
    }
    TORCH_CHECK(n == n_styles * style_dim,
                "direction file ", path, " holds ", n, " values; expected ",
                style_dim, " (single vector) or ", n_styles * style_dim,
                " (one row per style)");
    return torch::from_blob(values.data(), {n_styles, style_dim}, torch::kFloat32).clone();
}

}  // namespace styleinv
