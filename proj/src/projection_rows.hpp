#ifndef BIPHOTON_PROJECTION_ROWS_HPP
#define BIPHOTON_PROJECTION_ROWS_HPP

// Projection loops over a range of packed-triangle rows [row_begin, row_end).
// The serial kernels run them over all rows; the parallel kernels run them
// per chunk into private buffers.

#include "biphoton/kernels.hpp"

#include <algorithm>

namespace biphoton::kernels::detail {

inline double entry(const ProjectionInput& in, std::size_t i, std::size_t j)
{
    const double v = in.packed[tri_index(i, j)];
    return in.clip_negative ? std::max(v, 0.0) : v;
}

inline void sum_rows(const ProjectionInput& in, std::size_t row_begin, std::size_t row_end, double* out)
{
    const std::size_t w = static_cast<std::size_t>(in.sensor.width);
    const std::size_t ow = 2 * w - 1;
    for (std::size_t i = row_begin; i < row_end; ++i) {
        const std::size_t xi = i % w;
        const std::size_t yi = i / w;
        for (std::size_t j = 0; j < i; ++j) {
            out[(yi + j / w) * ow + (xi + j % w)] += 2.0 * entry(in, i, j);
        }
        if (in.include_diagonal) {
            out[2 * yi * ow + 2 * xi] += entry(in, i, i);
        }
    }
}

inline void minus_rows(const ProjectionInput& in, std::size_t row_begin, std::size_t row_end, double* out)
{
    const long w = in.sensor.width;
    const long h = in.sensor.height;
    const long ow = 2 * w - 1;
    const long centre = (h - 1) * ow + (w - 1);
    for (std::size_t i = row_begin; i < row_end; ++i) {
        const long xi = static_cast<long>(i) % w;
        const long yi = static_cast<long>(i) / w;
        for (std::size_t j = 0; j < i; ++j) {
            const long dx = xi - static_cast<long>(j) % w;
            const long dy = yi - static_cast<long>(j) / w;
            const double v = entry(in, i, j);
            out[centre + dy * ow + dx] += v;
            out[centre - dy * ow - dx] += v;
        }
        if (in.include_diagonal) {
            out[centre] += entry(in, i, i);
        }
    }
}

// partner(x1, x2): does photon 2 in column x2 pair with photon 1 in column x1?
template <typename Partner>
void conditional_rows(const ProjectionInput& in, std::size_t row_begin, std::size_t row_end, double* numerator,
                      double* denominator, Partner partner)
{
    const std::size_t w = static_cast<std::size_t>(in.sensor.width);
    const std::size_t h = static_cast<std::size_t>(in.sensor.height);
    for (std::size_t i = row_begin; i < row_end; ++i) {
        const int xi = static_cast<int>(i % w);
        const std::size_t yi = i / w;
        for (std::size_t j = 0; j < i; ++j) {
            const int xj = static_cast<int>(j % w);
            const std::size_t yj = j / w;
            const double v = entry(in, i, j);
            denominator[yi * h + yj] += v;
            denominator[yj * h + yi] += v;
            if (partner(xi, xj)) {
                numerator[yi * h + yj] += v;
            }
            if (partner(xj, xi)) {
                numerator[yj * h + yi] += v;
            }
        }
        if (in.include_diagonal) {
            const double v = entry(in, i, i);
            denominator[yi * h + yi] += v;
            if (partner(xi, xi)) {
                numerator[yi * h + yi] += v;
            }
        }
    }
}

void check_projection(const ProjectionInput& in, std::size_t out_size, const char* what);
void check_conditional(const ProjectionInput& in, const ConditionalSums& out, const char* what);

}  // namespace biphoton::kernels::detail

#endif  // BIPHOTON_PROJECTION_ROWS_HPP
