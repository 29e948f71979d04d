#ifndef BIPHOTON_IMAGE_HPP
#define BIPHOTON_IMAGE_HPP

#include "biphoton/core_model.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace biphoton {

// Pixel index -> physical coordinate:
//   x = c[0] + c[1]*i + c[2]*j
//   y = c[3] + c[4]*i + c[5]*j
// where (i, j) is the column/row index of a pixel centre.
struct Affine2 {
    std::array<double, 6> c{0.0, 1.0, 0.0, 0.0, 0.0, 1.0};

    TransverseVec map(double i, double j) const { return {c[0] + c[1] * i + c[2] * j, c[3] + c[4] * i + c[5] * j}; }
    double det() const { return c[1] * c[5] - c[2] * c[4]; }
    bool invertible() const;
    // Continuous pixel coordinates of a physical point. Requires invertible().
    std::array<double, 2> inverse(TransverseVec p) const;

    // Square pixels of size `step`, origin at the geometric centre of a
    // width x height sensor.
    static Affine2 centered(int width, int height, double step);

    friend bool operator==(const Affine2&, const Affine2&) = default;
};

// Row-major 2D array of doubles with a physical axis calibration.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> values;
    Affine2 axes;

    Image() = default;
    Image(int w, int h, Affine2 a = {}) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0), axes(a) {}

    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return values.size(); }
};

// Deposits every source pixel onto the target grid with bilinear weights at
// its physical position (total mass is kept for points inside the grid).
// With a target step equal to the bin spacing this is the triangle kernel
// that pixel quantization of both photons imposes on a sum coordinate.
Image splat_bilinear(const Image& source, int width, int height, const Affine2& axes);

// Binary PGM (P5), 16-bit big-endian samples. Values are mapped linearly from
// [lo, hi] to [0, 65535]; lo == hi selects the image min/max.
void write_pgm16(const std::filesystem::path& path, const Image& image, double lo = 0.0, double hi = 0.0);
void write_pgm16(const std::filesystem::path& path, int width, int height, std::span<const std::uint16_t> samples);

struct Pgm16 {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> samples;
};
Pgm16 read_pgm16(const std::filesystem::path& path);

// Pearson correlation over entries where `use` is nonzero (all when empty).
double pearson(std::span<const double> a, std::span<const double> b, std::span<const std::uint8_t> use = {});

}  // namespace biphoton

#endif  // BIPHOTON_IMAGE_HPP
