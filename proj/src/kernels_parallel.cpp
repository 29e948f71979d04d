#include "biphoton/kernels.hpp"

#include "biphoton/errors.hpp"
#include "projection_rows.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace biphoton::kernels::parallel {

namespace {

// Register tile of the rank-k update: R rows of the triangle by C columns.
constexpr std::size_t kTileRows = 6;
constexpr std::size_t kTileCols = 32;
constexpr std::size_t kBatch = 64;

// Adds frames[0..nb) (frame-major, leading dimension ld, zero padded) into
// rows [i0, i0 + kTileRows) of the packed triangle.
void update_row_tile(double* sum_ii, const double* batch, std::size_t nb, std::size_t ld, std::size_t i0,
                     std::size_t pixels)
{
    const std::size_t i_last = std::min(i0 + kTileRows, pixels) - 1;
    for (std::size_t j0 = 0; j0 <= i_last; j0 += kTileCols) {
        alignas(64) double acc[kTileRows][kTileCols] = {};
        for (std::size_t b = 0; b < nb; ++b) {
            const double* f = batch + b * ld;
            const double* fj = f + j0;
            for (std::size_t r = 0; r < kTileRows; ++r) {
                const double a = f[i0 + r];
#pragma omp simd
                for (std::size_t c = 0; c < kTileCols; ++c) {
                    acc[r][c] += a * fj[c];
                }
            }
        }
        for (std::size_t r = 0; r < kTileRows; ++r) {
            const std::size_t i = i0 + r;
            if (i >= pixels) {
                break;
            }
            if (j0 > i) {
                continue;
            }
            const std::size_t n = std::min(kTileCols, i - j0 + 1);
            double* row = sum_ii + tri_index(i, j0);
            for (std::size_t c = 0; c < n; ++c) {
                row[c] += acc[r][c];
            }
        }
    }
}

// Fixed partition of the triangle rows into chunks of roughly equal work.
// The chunk count never depends on the thread count.
constexpr std::size_t kProjectionChunks = 32;

std::vector<std::size_t> row_chunks(std::size_t pixels)
{
    std::vector<std::size_t> bounds{0};
    for (std::size_t k = 1; k < kProjectionChunks; ++k) {
        const auto b = static_cast<std::size_t>(
            std::llround(static_cast<double>(pixels) * std::sqrt(static_cast<double>(k) / kProjectionChunks)));
        if (b > bounds.back() && b < pixels) {
            bounds.push_back(b);
        }
    }
    bounds.push_back(pixels);
    return bounds;
}

// Runs body(row_begin, row_end, buffer) per chunk into private buffers of
// `size` doubles, then adds the pairwise-combined total into out.
template <typename Body>
void chunked(std::size_t pixels, std::size_t size, double* out, Body body)
{
    const std::vector<std::size_t> bounds = row_chunks(pixels);
    const std::size_t n = bounds.size() - 1;
    std::vector<std::vector<double>> parts(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t c = 0; c < n; ++c) {
        parts[c].assign(size, 0.0);
        body(bounds[c], bounds[c + 1], parts[c].data());
    }
    for (std::size_t stride = 1; stride < n; stride *= 2) {
        for (std::size_t c = 0; c + stride < n; c += 2 * stride) {
            double* dst = parts[c].data();
            const double* src = parts[c + stride].data();
            for (std::size_t k = 0; k < size; ++k) {
                dst[k] += src[k];
            }
        }
    }
    for (std::size_t k = 0; k < size; ++k) {
        out[k] += parts[0][k];
    }
}

}  // namespace

void accumulate(std::span<double> sum_i, std::span<double> sum_ii, std::span<const std::uint16_t> frames,
                std::size_t pixels, std::size_t count)
{
    if (sum_i.size() != pixels || sum_ii.size() != tri_size(pixels) || frames.size() < count * pixels) {
        throw UsageError("accumulate: buffer sizes do not match the sensor");
    }
    if (count == 0 || pixels == 0) {
        return;
    }
    // Padding covers the column overhang of the last tile and the row
    // overhang of the last row tile.
    const std::size_t ld = (pixels + kTileCols - 1) / kTileCols * kTileCols + kTileCols;
    std::vector<double> batch(kBatch * ld, 0.0);
    const std::size_t row_tiles = (pixels + kTileRows - 1) / kTileRows;

    for (std::size_t f0 = 0; f0 < count; f0 += kBatch) {
        const std::size_t nb = std::min(kBatch, count - f0);
        for (std::size_t b = 0; b < nb; ++b) {
            const std::uint16_t* src = frames.data() + (f0 + b) * pixels;
            double* dst = batch.data() + b * ld;
            for (std::size_t p = 0; p < pixels; ++p) {
                dst[p] = src[p];
                sum_i[p] += src[p];
            }
        }
        // Largest rows first: their tiles carry the most work.
#pragma omp parallel for schedule(dynamic, 1)
        for (std::size_t t = 0; t < row_tiles; ++t) {
            const std::size_t tile = row_tiles - 1 - t;
            update_row_tile(sum_ii.data(), batch.data(), nb, ld, tile * kTileRows, pixels);
        }
    }
}

void project_sum(const ProjectionInput& in, std::span<double> out)
{
    detail::check_projection(in, out.size(), "project_sum");
    chunked(in.sensor.pixels(), out.size(), out.data(),
            [&](std::size_t r0, std::size_t r1, double* buf) { detail::sum_rows(in, r0, r1, buf); });
}

void project_minus(const ProjectionInput& in, std::span<double> out)
{
    detail::check_projection(in, out.size(), "project_minus");
    chunked(in.sensor.pixels(), out.size(), out.data(),
            [&](std::size_t r0, std::size_t r1, double* buf) { detail::minus_rows(in, r0, r1, buf); });
}

namespace {

template <typename Partner>
void conditional(const ProjectionInput& in, ConditionalSums out, Partner partner)
{
    // Numerator and denominator share one buffer so a single pass fills both.
    const std::size_t hh = out.numerator.size();
    std::vector<double> both(2 * hh, 0.0);
    chunked(in.sensor.pixels(), 2 * hh, both.data(), [&](std::size_t r0, std::size_t r1, double* buf) {
        detail::conditional_rows(in, r0, r1, buf, buf + hh, partner);
    });
    for (std::size_t k = 0; k < hh; ++k) {
        out.numerator[k] += both[k];
        out.denominator[k] += both[hh + k];
    }
}

}  // namespace

void project_xplus(const ProjectionInput& in, std::span<const int> mirror, ConditionalSums out)
{
    detail::check_conditional(in, out, "project_xplus");
    if (mirror.size() != static_cast<std::size_t>(in.sensor.width)) {
        throw UsageError("project_xplus: mirror table does not match the sensor width");
    }
    conditional(in, out, [&](int x1, int x2) { return mirror[x1] == x2; });
}

void project_xminus(const ProjectionInput& in, ConditionalSums out)
{
    detail::check_conditional(in, out, "project_xminus");
    conditional(in, out, [](int x1, int x2) { return x2 == x1 + 1; });
}

}  // namespace biphoton::kernels::parallel
