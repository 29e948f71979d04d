#include "fft.hpp"

#include "biphoton/errors.hpp"

#include <fftw3.h>

#include <mutex>
#include <vector>

namespace biphoton::detail {

namespace {

std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

void shift(std::span<std::complex<double>> data, int width, int height, int sx, int sy)
{
    std::vector<std::complex<double>> tmp(data.begin(), data.end());
    for (int y = 0; y < height; ++y) {
        const int ty = (y + sy) % height;
        for (int x = 0; x < width; ++x) {
            const int tx = (x + sx) % width;
            data[static_cast<std::size_t>(ty) * width + tx] = tmp[static_cast<std::size_t>(y) * width + x];
        }
    }
}

}  // namespace

Fft2d::Fft2d(int width, int height) : width_(width), height_(height)
{
    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::lock_guard lock(planner_mutex());
    auto* scratch = fftw_alloc_complex(n);
    forward_plan_ = fftw_plan_dft_2d(height, width, scratch, scratch, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    inverse_plan_ = fftw_plan_dft_2d(height, width, scratch, scratch, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (forward_plan_ == nullptr || inverse_plan_ == nullptr) {
        throw Error("FFTW planning failed");
    }
}

Fft2d::~Fft2d()
{
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void Fft2d::forward(std::span<std::complex<double>> data) const
{
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), p, p);
}

void Fft2d::inverse(std::span<std::complex<double>> data) const
{
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(static_cast<fftw_plan>(inverse_plan_), p, p);
}

void fftshift(std::span<std::complex<double>> data, int width, int height)
{
    shift(data, width, height, width / 2, height / 2);
}

void ifftshift(std::span<std::complex<double>> data, int width, int height)
{
    shift(data, width, height, width - width / 2, height - height / 2);
}

}  // namespace biphoton::detail
