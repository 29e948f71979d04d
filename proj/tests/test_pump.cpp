#include "biphoton/analysis.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/pump.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace biphoton;

namespace {

const GridSpec kGrid{256, 256, 4e-6};

}  // namespace

TEST_CASE("Gaussian beam far field has standard deviation 1/waist")
{
    const double w = 89e-6;
    const FieldGrid beam = make_gaussian_beam(kGrid, w);
    const FarField ff = far_field(beam, 405e-9, 0.5);
    // Unitary transform.
    double p = 0.0;
    for (const auto& v : ff.field.values) {
        p += std::norm(v);
    }
    CHECK(p == doctest::Approx(beam.total_power()).epsilon(1e-12));
    CHECK(ff.k_pitch_x == doctest::Approx(2 * std::numbers::pi / (256 * 4e-6)));
    const WaistEstimate est = estimate_waist(ff.intensity());
    REQUIRE(est.fit.converged);
    CHECK(est.waist == doctest::Approx(w).epsilon(0.01));
    CHECK(est.sigma_p0 == doctest::Approx(1.0 / w).epsilon(0.01));
}

TEST_CASE("beam intensity at the crystal: standard deviation waist/2")
{
    const FieldGrid beam = make_gaussian_beam(kGrid, 100e-6);
    const Image i = beam.intensity();
    double s = 0.0, sxx = 0.0;
    for (int y = 0; y < i.height; ++y) {
        for (int x = 0; x < i.width; ++x) {
            const auto r = i.axes.map(x, y);
            s += i.at(x, y);
            sxx += i.at(x, y) * r.x * r.x;
        }
    }
    CHECK(std::sqrt(sxx / s) == doctest::Approx(50e-6).epsilon(1e-6));
    CHECK_THROWS_AS(make_gaussian_beam(kGrid, 8e-6), ConfigError);
    CHECK_THROWS_AS(make_gaussian_beam(kGrid, 600e-6), ConfigError);
}

TEST_CASE("phase screen statistics")
{
    const DiffuserSpec d{40e-6, 1.5, 1};
    double mean = 0.0, var = 0.0, lag = 0.0;
    const int n_screens = 8;
    const int shift = 10;  // 40 µm: one correlation length
    for (int s = 0; s < n_screens; ++s) {
        const auto phi = make_phase_screen(kGrid, d, s + 1);
        REQUIRE(phi.size() == 256u * 256u);
        for (int y = 0; y < 256; ++y) {
            for (int x = 0; x < 256; ++x) {
                const double v = phi[y * 256 + x];
                mean += v;
                var += v * v;
                lag += v * phi[y * 256 + (x + shift) % 256];
            }
        }
    }
    const double n = n_screens * 256.0 * 256.0;
    mean /= n;
    var /= n;
    lag /= n;
    CHECK(std::abs(mean) < 0.1);
    CHECK(std::sqrt(var) == doctest::Approx(1.5).epsilon(0.05));
    CHECK(lag / var == doctest::Approx(std::exp(-1.0)).epsilon(0.1));
    // Same seed, same screen.
    CHECK(make_phase_screen(kGrid, d, 3) == make_phase_screen(kGrid, d, 3));
    CHECK(make_phase_screen(kGrid, d, 3) != make_phase_screen(kGrid, d, 4));
}

TEST_CASE("screen correlation for a target coherence length")
{
    const DiffuserSpec d = diffuser_for_coherence_length(59e-6, 2.0, 2);
    CHECK(d.layers == 2);
    CHECK(d.phase_std == 2.0);
    // 2Δ²/ℓ² = layers·s²·Δ²/c²
    CHECK(d.screen_correlation == doctest::Approx(59e-6 * 2.0 * std::sqrt(2.0) / std::sqrt(2.0)));
    CHECK_THROWS_AS(diffuser_for_coherence_length(-1.0, 2.0, 1), DomainError);
}

TEST_CASE("rotating diffuser: coherence length of the ensemble")
{
    const FieldGrid beam = make_gaussian_beam(kGrid, 89e-6);
    const auto coherent = PumpEnsemble::coherent(beam);
    CHECK(ground_truth_lc(coherent).is_infinite());

    const double target = 59e-6;
    const auto ens = PumpEnsemble::rotating(beam, diffuser_for_coherence_length(target, 2.0, 1), 64, 5);
    const CoherenceLength lc = ground_truth_lc(ens);
    REQUIRE_FALSE(lc.is_infinite());
    CHECK(lc.value() == doctest::Approx(target).epsilon(0.15));

    // The far-field width grows as sqrt(1/ω² + 4/ℓ²); estimate_lc inverts it.
    const Image i0 = ensemble_farfield_intensity(coherent, 405e-9, 0.5);
    const Image i1 = ensemble_farfield_intensity(ens, 405e-9, 0.5);
    const WaistEstimate w = estimate_waist(i0);
    const CoherenceEstimate c = estimate_lc(i1, w.sigma_p0);
    REQUIRE_FALSE(c.lc.is_infinite());
    CHECK(c.lc.value() == doctest::Approx(lc.value()).epsilon(0.2));

    CHECK_THROWS_AS(PumpEnsemble::rotating(beam, diffuser_for_coherence_length(target, 2.0, 1), 8, 5), ConfigError);
}

TEST_CASE("ensemble reductions: fixed tree is reproducible, thread-local agrees")
{
    const FieldGrid beam = make_gaussian_beam({64, 64, 4e-6}, 40e-6);
    const auto ens = PumpEnsemble::rotating(beam, diffuser_for_coherence_length(30e-6, 2.0, 1), 40, 9);
    const Image a = ensemble_farfield_intensity(ens, 405e-9, 0.5, Reduction::fixed_tree);
    const Image b = ensemble_farfield_intensity(ens, 405e-9, 0.5, Reduction::fixed_tree);
    const Image c = ensemble_farfield_intensity(ens, 405e-9, 0.5, Reduction::thread_local_);
    CHECK(a.values == b.values);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(c.values[k] == doctest::Approx(a.values[k]).epsilon(1e-12));
    }
    // Power is kept per realization, so the mean keeps it too.
    const double pa = std::accumulate(a.values.begin(), a.values.end(), 0.0);
    CHECK(pa == doctest::Approx(beam.total_power()).epsilon(1e-9));
}

TEST_CASE("static speckle is a single fixed realization")
{
    const FieldGrid beam = make_gaussian_beam({64, 64, 4e-6}, 40e-6);
    const auto d = diffuser_for_coherence_length(30e-6, 2.0, 1);
    const auto s = PumpEnsemble::static_speckle(beam, d, 4);
    CHECK(s.size() == 1);
    CHECK(s.mode() == PumpMode::static_speckle);
    const auto t = s.transmission(0);
    for (const auto& v : t) {
        CHECK(std::abs(v) == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(s.transmission(1), UsageError);
    CHECK(PumpEnsemble::static_speckle(beam, d, 4).realization(0).values == s.realization(0).values);
}

TEST_CASE("zero padding keeps the field centred")
{
    const FieldGrid beam = make_gaussian_beam({32, 32, 4e-6}, 20e-6);
    const FieldGrid padded = pad_field(beam, 64, 64);
    CHECK(padded.total_power() == doctest::Approx(beam.total_power()));
    CHECK(padded.at(32, 32) == beam.at(16, 16));
    CHECK_THROWS_AS(pad_field(beam, 16, 16), UsageError);
}
