#include "biphoton/pump.hpp"

#include "biphoton/errors.hpp"
#include "biphoton/rng.hpp"
#include "biphoton/units.hpp"
#include "fft.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace biphoton {

namespace {

constexpr std::size_t kTreeChunk = 8;

// Sums per-item contributions (each of length `size`) in a fixed order that
// does not depend on the thread count: items are summed serially inside
// chunks of kTreeChunk, and the chunk totals are combined pairwise.
std::vector<double> reduce_items(std::size_t count, std::size_t size, Reduction reduction,
                                 const std::function<void(std::size_t, std::vector<double>&)>& add_item)
{
    if (reduction == Reduction::thread_local_) {
        std::vector<double> total(size, 0.0);
#pragma omp parallel
        {
            std::vector<double> local(size, 0.0);
#pragma omp for schedule(dynamic)
            for (std::size_t i = 0; i < count; ++i) {
                add_item(i, local);
            }
#pragma omp critical
            for (std::size_t k = 0; k < size; ++k) {
                total[k] += local[k];
            }
        }
        return total;
    }

    const std::size_t chunks = (count + kTreeChunk - 1) / kTreeChunk;
    std::vector<std::vector<double>> partial(chunks);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t c = 0; c < chunks; ++c) {
        partial[c].assign(size, 0.0);
        const std::size_t end = std::min(count, (c + 1) * kTreeChunk);
        for (std::size_t i = c * kTreeChunk; i < end; ++i) {
            add_item(i, partial[c]);
        }
    }
    for (std::size_t stride = 1; stride < chunks; stride *= 2) {
        for (std::size_t c = 0; c + stride < chunks; c += 2 * stride) {
            auto& dst = partial[c];
            const auto& src = partial[c + stride];
            for (std::size_t k = 0; k < size; ++k) {
                dst[k] += src[k];
            }
        }
    }
    return chunks > 0 ? std::move(partial[0]) : std::vector<double>(size, 0.0);
}

double periodic_offset(int i, int n)
{
    return static_cast<double>(i <= n / 2 ? i : i - n);
}

}  // namespace

void GridSpec::validate() const
{
    if (width < 8 || height < 8) {
        throw ConfigError("field grid must be at least 8x8");
    }
    if (!(pitch > 0.0) || !std::isfinite(pitch)) {
        throw ConfigError("field grid pitch must be > 0");
    }
}

double FieldGrid::total_power() const
{
    double p = 0.0;
    for (const auto& v : values) {
        p += std::norm(v);
    }
    return p;
}

Affine2 FieldGrid::axes() const
{
    Affine2 a;
    a.c = {-pitch * (width / 2), pitch, 0.0, -pitch * (height / 2), 0.0, pitch};
    return a;
}

Image FieldGrid::intensity() const
{
    Image img(width, height, axes());
    std::transform(values.begin(), values.end(), img.values.begin(), [](auto v) { return std::norm(v); });
    return img;
}

void DiffuserSpec::validate(double pitch) const
{
    if (!(screen_correlation > 0.0)) {
        throw ConfigError("diffuser screen correlation must be > 0");
    }
    if (screen_correlation < 2.0 * pitch) {
        throw ConfigError("diffuser screen correlation " + std::to_string(screen_correlation) +
                          " m is below two grid pitches and cannot be resolved");
    }
    if (!(phase_std >= 0.0) || !std::isfinite(phase_std)) {
        throw ConfigError("diffuser phase std must be >= 0");
    }
    if (layers < 1) {
        throw ConfigError("diffuser needs at least one layer");
    }
}

DiffuserSpec diffuser_for_coherence_length(double coherence_length, double phase_std, int layers)
{
    if (!(coherence_length > 0.0) || !(phase_std > 0.0) || layers < 1) {
        throw DomainError("diffuser_for_coherence_length: parameters must be positive");
    }
    return DiffuserSpec{coherence_length * phase_std * std::sqrt(static_cast<double>(layers)) / std::sqrt(2.0),
                        phase_std, layers};
}

FieldGrid make_gaussian_beam(const GridSpec& grid, double waist)
{
    grid.validate();
    const double extent = std::min(grid.width, grid.height) * grid.pitch;
    if (!(waist >= 4.0 * grid.pitch) || !(waist <= extent / 4.0)) {
        throw ConfigError("pump waist " + std::to_string(waist) + " m is not resolvable on this grid");
    }
    FieldGrid f{grid.width, grid.height, grid.pitch, {}};
    f.values.resize(static_cast<std::size_t>(grid.width) * grid.height);
    const double inv_w2 = 1.0 / (waist * waist);
    for (int y = 0; y < grid.height; ++y) {
        const double ry = (y - grid.height / 2) * grid.pitch;
        for (int x = 0; x < grid.width; ++x) {
            const double rx = (x - grid.width / 2) * grid.pitch;
            f.at(x, y) = std::exp(-(rx * rx + ry * ry) * inv_w2);
        }
    }
    return f;
}

FieldGrid pad_field(const FieldGrid& field, int width, int height)
{
    if (width < field.width || height < field.height) {
        throw UsageError("pad_field: target grid is smaller than the field");
    }
    FieldGrid out{width, height, field.pitch, std::vector<std::complex<double>>(static_cast<std::size_t>(width) * height)};
    const int ox = width / 2 - field.width / 2;
    const int oy = height / 2 - field.height / 2;
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            out.at(x + ox, y + oy) = field.at(x, y);
        }
    }
    return out;
}

std::vector<double> make_phase_screen(const GridSpec& grid, const DiffuserSpec& spec, std::uint64_t seed)
{
    grid.validate();
    spec.validate(grid.pitch);
    const std::size_t n = static_cast<std::size_t>(grid.width) * grid.height;
    std::vector<double> phase(n, 0.0);
    if (spec.phase_std == 0.0) {
        return phase;
    }

    // Kernel exp(-2r²/c²) autocorrelates to exp(-r²/c²).
    const detail::Fft2d fft(grid.width, grid.height);
    std::vector<std::complex<double>> kernel(n);
    double kernel_energy = 0.0;
    const double c2 = spec.screen_correlation * spec.screen_correlation;
    for (int y = 0; y < grid.height; ++y) {
        const double ry = periodic_offset(y, grid.height) * grid.pitch;
        for (int x = 0; x < grid.width; ++x) {
            const double rx = periodic_offset(x, grid.width) * grid.pitch;
            const double h = std::exp(-2.0 * (rx * rx + ry * ry) / c2);
            kernel[static_cast<std::size_t>(y) * grid.width + x] = h;
            kernel_energy += h * h;
        }
    }
    fft.forward(kernel);
    const double scale = spec.phase_std / std::sqrt(kernel_energy) / static_cast<double>(n);

    std::vector<std::complex<double>> noise(n);
    for (int layer = 0; layer < spec.layers; ++layer) {
        Rng rng = make_rng(seed, Stream::phase_screen, static_cast<std::uint64_t>(layer));
        std::normal_distribution<double> gauss;
        for (auto& v : noise) {
            v = gauss(rng);
        }
        fft.forward(noise);
        for (std::size_t k = 0; k < n; ++k) {
            noise[k] *= kernel[k];
        }
        fft.inverse(noise);
        for (std::size_t k = 0; k < n; ++k) {
            phase[k] += noise[k].real() * scale;
        }
    }
    return phase;
}

FieldGrid apply_phase_screen(const FieldGrid& field, const DiffuserSpec& spec, std::uint64_t seed)
{
    const auto phase = make_phase_screen({field.width, field.height, field.pitch}, spec, seed);
    FieldGrid out = field;
    for (std::size_t k = 0; k < out.values.size(); ++k) {
        out.values[k] *= std::polar(1.0, phase[k]);
    }
    return out;
}

Image FarField::intensity() const
{
    Image img = field.intensity();
    img.axes.c = {-k_pitch_x * (field.width / 2), k_pitch_x, 0.0, -k_pitch_y * (field.height / 2), 0.0, k_pitch_y};
    return img;
}

FarField far_field(const FieldGrid& field, double wavelength, double focal_length)
{
    if (!(wavelength > 0.0) || !(focal_length > 0.0)) {
        throw DomainError("far_field: wavelength and focal length must be > 0");
    }
    FarField out;
    out.field = field;
    auto& v = out.field.values;
    detail::ifftshift(v, field.width, field.height);
    detail::Fft2d(field.width, field.height).forward(v);
    detail::fftshift(v, field.width, field.height);
    const double norm = 1.0 / std::sqrt(static_cast<double>(v.size()));
    for (auto& x : v) {
        x *= norm;
    }
    out.k_pitch_x = 2.0 * units::pi / (field.width * field.pitch);
    out.k_pitch_y = 2.0 * units::pi / (field.height * field.pitch);
    out.field.pitch = wavelength * focal_length / (field.width * field.pitch);
    return out;
}

PumpEnsemble::PumpEnsemble(FieldGrid base, DiffuserSpec diffuser, PumpMode mode, std::size_t count, std::uint64_t seed)
    : base_(std::move(base)), diffuser_(diffuser), mode_(mode), count_(count), seed_(seed)
{
    GridSpec{base_.width, base_.height, base_.pitch}.validate();
    if (mode_ != PumpMode::coherent) {
        diffuser_.validate(base_.pitch);
    }
}

PumpEnsemble PumpEnsemble::coherent(FieldGrid base)
{
    return PumpEnsemble(std::move(base), DiffuserSpec{}, PumpMode::coherent, 1, 0);
}

PumpEnsemble PumpEnsemble::static_speckle(FieldGrid base, DiffuserSpec diffuser, std::uint64_t seed)
{
    return PumpEnsemble(std::move(base), diffuser, PumpMode::static_speckle, 1, seed);
}

PumpEnsemble PumpEnsemble::rotating(FieldGrid base, DiffuserSpec diffuser, std::size_t realizations, std::uint64_t seed)
{
    if (realizations < kMinRotatingRealizations) {
        throw ConfigError("rotating diffuser ensembles need at least " + std::to_string(kMinRotatingRealizations) +
                          " realizations");
    }
    return PumpEnsemble(std::move(base), diffuser, PumpMode::rotating, realizations, seed);
}

std::vector<std::complex<double>> PumpEnsemble::transmission(std::size_t index) const
{
    if (index >= count_) {
        throw UsageError("realization index out of range");
    }
    const std::size_t n = base_.values.size();
    if (mode_ == PumpMode::coherent) {
        return std::vector<std::complex<double>>(n, 1.0);
    }
    const auto phase = make_phase_screen(grid(), diffuser_, derive_seed(seed_, Stream::phase_screen, index));
    std::vector<std::complex<double>> t(n);
    for (std::size_t k = 0; k < n; ++k) {
        t[k] = std::polar(1.0, phase[k]);
    }
    return t;
}

FieldGrid PumpEnsemble::realization(std::size_t index) const
{
    const auto t = transmission(index);
    FieldGrid f = base_;
    for (std::size_t k = 0; k < t.size(); ++k) {
        f.values[k] *= t[k];
    }
    return f;
}

Image ensemble_farfield_intensity(const PumpEnsemble& ensemble, double wavelength, double focal_length,
                                  Reduction reduction)
{
    if (ensemble.size() == 0) {
        throw UsageError("empty pump ensemble");
    }
    const std::size_t n = ensemble.base().values.size();
    Image axes_template;
    {
        FarField probe = far_field(ensemble.realization(0), wavelength, focal_length);
        axes_template = probe.intensity();
        if (ensemble.size() == 1) {
            return axes_template;
        }
    }
    auto total = reduce_items(ensemble.size(), n, reduction, [&](std::size_t i, std::vector<double>& acc) {
        const FarField ff = far_field(ensemble.realization(i), wavelength, focal_length);
        for (std::size_t k = 0; k < n; ++k) {
            acc[k] += std::norm(ff.field.values[k]);
        }
    });
    const double inv = 1.0 / static_cast<double>(ensemble.size());
    for (std::size_t k = 0; k < n; ++k) {
        axes_template.values[k] = total[k] * inv;
    }
    return axes_template;
}

std::vector<double> coherence_profile(const PumpEnsemble& ensemble)
{
    const int w = ensemble.base().width;
    const int h = ensemble.base().height;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    const int max_lag = std::min(w, h) / 2;
    if (ensemble.mode() == PumpMode::coherent) {
        return std::vector<double>(static_cast<std::size_t>(max_lag) + 1, 1.0);
    }

    const detail::Fft2d fft(w, h);
    // Mean power spectrum of the transmission; its inverse transform is the
    // mean circular autocorrelation.
    auto spectrum = reduce_items(ensemble.size(), n, Reduction::fixed_tree, [&](std::size_t i, std::vector<double>& acc) {
        auto t = ensemble.transmission(i);
        fft.forward(t);
        for (std::size_t k = 0; k < n; ++k) {
            acc[k] += std::norm(t[k]);
        }
    });
    std::vector<std::complex<double>> corr(spectrum.begin(), spectrum.end());
    fft.inverse(corr);
    const double norm = corr[0].real();

    std::vector<double> profile(static_cast<std::size_t>(max_lag) + 1);
    for (int m = 0; m <= max_lag; ++m) {
        const auto idx = [&](int x, int y) {
            return static_cast<std::size_t>((y + h) % h) * w + static_cast<std::size_t>((x + w) % w);
        };
        const double s = corr[idx(m, 0)].real() + corr[idx(-m, 0)].real() + corr[idx(0, m)].real() +
                         corr[idx(0, -m)].real();
        profile[static_cast<std::size_t>(m)] = 0.25 * s / norm;
    }
    return profile;
}

CoherenceLength ground_truth_lc(const PumpEnsemble& ensemble)
{
    if (ensemble.mode() == PumpMode::coherent || ensemble.diffuser().phase_std == 0.0) {
        return CoherenceLength::infinite();
    }
    const auto profile = coherence_profile(ensemble);
    const double pitch = ensemble.base().pitch;
    const double floor_e2 = std::exp(-2.0);
    const double floor_e3 = std::exp(-3.0);

    if (std::none_of(profile.begin() + 1, profile.end(), [&](double mu) { return mu < floor_e2; })) {
        return CoherenceLength::infinite();
    }
    // Least squares of -ln μ = 2Δ²/ℓ² through the origin, over the Gaussian
    // core of the profile.
    double num = 0.0;
    double den = 0.0;
    for (std::size_t m = 1; m < profile.size(); ++m) {
        const double mu = profile[m];
        if (!(mu > floor_e3)) {
            if (den == 0.0 && mu > 0.0) {
                const double d2 = std::pow(m * pitch, 2);
                num += d2 * -std::log(mu);
                den += d2 * d2;
            }
            break;
        }
        const double d2 = std::pow(m * pitch, 2);
        num += d2 * -std::log(mu);
        den += d2 * d2;
    }
    if (!(num > 0.0)) {
        throw Error("ground_truth_lc: coherence is below one grid pitch");
    }
    const double slope = num / den;
    return CoherenceLength::meters(std::sqrt(2.0 / slope));
}

}  // namespace biphoton
