#include "biphoton/kernels.hpp"

#include "biphoton/errors.hpp"
#include "projection_rows.hpp"

#include <string>

namespace biphoton::kernels {

namespace detail {

void check_projection(const ProjectionInput& in, std::size_t out_size, const char* what)
{
    const std::size_t w = static_cast<std::size_t>(in.sensor.width);
    const std::size_t h = static_cast<std::size_t>(in.sensor.height);
    if (w == 0 || h == 0 || in.packed.size() != tri_size(w * h) || out_size != (2 * w - 1) * (2 * h - 1)) {
        throw UsageError(std::string(what) + ": buffer sizes do not match the sensor");
    }
}

void check_conditional(const ProjectionInput& in, const ConditionalSums& out, const char* what)
{
    const std::size_t w = static_cast<std::size_t>(in.sensor.width);
    const std::size_t h = static_cast<std::size_t>(in.sensor.height);
    if (w == 0 || h == 0 || in.packed.size() != tri_size(w * h) || out.numerator.size() != h * h ||
        out.denominator.size() != h * h) {
        throw UsageError(std::string(what) + ": buffer sizes do not match the sensor");
    }
}

}  // namespace detail

namespace serial {

void accumulate(std::span<double> sum_i, std::span<double> sum_ii, std::span<const std::uint16_t> frames,
                std::size_t pixels, std::size_t count)
{
    if (sum_i.size() != pixels || sum_ii.size() != tri_size(pixels) || frames.size() < count * pixels) {
        throw UsageError("accumulate: buffer sizes do not match the sensor");
    }
    for (std::size_t f = 0; f < count; ++f) {
        const std::uint16_t* frame = frames.data() + f * pixels;
        for (std::size_t i = 0; i < pixels; ++i) {
            const double a = frame[i];
            sum_i[i] += a;
            double* row = sum_ii.data() + tri_index(i, 0);
            for (std::size_t j = 0; j <= i; ++j) {
                row[j] += a * frame[j];
            }
        }
    }
}

void project_sum(const ProjectionInput& in, std::span<double> out)
{
    detail::check_projection(in, out.size(), "project_sum");
    detail::sum_rows(in, 0, in.sensor.pixels(), out.data());
}

void project_minus(const ProjectionInput& in, std::span<double> out)
{
    detail::check_projection(in, out.size(), "project_minus");
    detail::minus_rows(in, 0, in.sensor.pixels(), out.data());
}

void project_xplus(const ProjectionInput& in, std::span<const int> mirror, ConditionalSums out)
{
    detail::check_conditional(in, out, "project_xplus");
    if (mirror.size() != static_cast<std::size_t>(in.sensor.width)) {
        throw UsageError("project_xplus: mirror table does not match the sensor width");
    }
    detail::conditional_rows(in, 0, in.sensor.pixels(), out.numerator.data(), out.denominator.data(),
                             [&](int x1, int x2) { return mirror[x1] == x2; });
}

void project_xminus(const ProjectionInput& in, ConditionalSums out)
{
    detail::check_conditional(in, out, "project_xminus");
    detail::conditional_rows(in, 0, in.sensor.pixels(), out.numerator.data(), out.denominator.data(),
                             [](int x1, int x2) { return x2 == x1 + 1; });
}

}  // namespace serial

}  // namespace biphoton::kernels
