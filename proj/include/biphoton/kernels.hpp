#ifndef BIPHOTON_KERNELS_HPP
#define BIPHOTON_KERNELS_HPP

// Hot loops of the reconstruction: intensity-moment accumulation and the
// projections of the 4D joint distribution.
//
// Every kernel exists twice: `serial` is the straightforward reference used
// by the tests, `parallel` is the OpenMP implementation used in production.
// Both operate on a P x P symmetric matrix held as its packed lower triangle,
// row-major: element (i, j), j <= i, lives at i(i+1)/2 + j.

#include <cstddef>
#include <cstdint>
#include <span>

namespace biphoton::kernels {

constexpr std::size_t tri_index(std::size_t i, std::size_t j)
{
    return i * (i + 1) / 2 + j;
}

constexpr std::size_t tri_size(std::size_t n)
{
    return n * (n + 1) / 2;
}

struct Sensor {
    int width = 0;
    int height = 0;

    std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
};

// How covariance entries enter a projection.
struct ProjectionInput {
    std::span<const double> packed;  // tri_size(pixels)
    Sensor sensor;
    bool include_diagonal = false;
    bool clip_negative = false;
};

// Numerator/denominator pair for the conditional X projections; both are
// height x height, indexed [y1 * height + y2].
struct ConditionalSums {
    std::span<double> numerator;
    std::span<double> denominator;
};

namespace serial {

// sum_i[p] += I_p and sum_ii[(p,q)] += I_p I_q for each of `count` frames.
void accumulate(std::span<double> sum_i, std::span<double> sum_ii, std::span<const std::uint16_t> frames,
                std::size_t pixels, std::size_t count);

// out is (2W-1) x (2H-1), bin (x1+x2, y1+y2). Adds into out.
void project_sum(const ProjectionInput& in, std::span<double> out);
// out is (2W-1) x (2H-1), bin (x1-x2+W-1, y1-y2+H-1). Adds into out.
void project_minus(const ProjectionInput& in, std::span<double> out);
// Photon 2 in column mirror[x1] (negative: no partner column).
void project_xplus(const ProjectionInput& in, std::span<const int> mirror, ConditionalSums out);
// Photon 2 in column x1 + 1.
void project_xminus(const ProjectionInput& in, ConditionalSums out);

}  // namespace serial

namespace parallel {

// Frames are processed in blocks as rank-k updates of the packed triangle.
// Inputs are integers, so every partial sum is exact (below 2^53) and the
// result is bitwise identical to serial::accumulate.
void accumulate(std::span<double> sum_i, std::span<double> sum_ii, std::span<const std::uint16_t> frames,
                std::size_t pixels, std::size_t count);

// Rows of the packed triangle are split into fixed chunks whose partial
// outputs are combined in a fixed order, so results do not depend on the
// thread count.
void project_sum(const ProjectionInput& in, std::span<double> out);
void project_minus(const ProjectionInput& in, std::span<double> out);
void project_xplus(const ProjectionInput& in, std::span<const int> mirror, ConditionalSums out);
void project_xminus(const ProjectionInput& in, ConditionalSums out);

}  // namespace parallel

}  // namespace biphoton::kernels

#endif  // BIPHOTON_KERNELS_HPP
