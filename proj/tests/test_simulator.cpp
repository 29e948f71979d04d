#include "biphoton/camera.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/simulator.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace biphoton;

namespace {

struct Moments {
    double sum_std, diff_std, cross;  // cross: cov(x1, x2)
};

Moments moments(const std::vector<PairSample>& pairs)
{
    double ss = 0, dd = 0, c = 0;
    for (const auto& p : pairs) {
        const double s = p.photon1.x + p.photon2.x;
        const double d = p.photon1.x - p.photon2.x;
        ss += s * s;
        dd += d * d;
        c += p.photon1.x * p.photon2.x;
    }
    const double n = static_cast<double>(pairs.size());
    return {std::sqrt(ss / n), std::sqrt(dd / n), c / n};
}

}  // namespace

TEST_CASE("camera calibration: 3.103 rad/mm per momentum pixel, 4 µm per position pixel")
{
    const CameraSpec m = default_camera(Mode::momentum, 75, 75);
    CHECK(m.pixel_to_coord.c[1] == doctest::Approx(2 * std::numbers::pi * 16e-6 / (810e-9 * 40e-3)));
    CHECK(m.pixel_to_coord.c[1] * 1e-3 == doctest::Approx(3.103).epsilon(1e-3));
    const CameraSpec p = default_camera(Mode::position, 64, 64);
    CHECK(p.pixel_to_coord.c[5] == doctest::Approx(4e-6));
    // The sensor centre maps to zero.
    const auto c = m.pixel_to_coord.map(37, 37);
    CHECK(c.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(m.pixel_of({0.0, 0.0}) == std::optional<std::size_t>(37 * 75 + 37));
    CHECK_FALSE(m.pixel_of({1e9, 0.0}).has_value());
}

TEST_CASE("momentum pairs: sum and difference widths, anti-correlation")
{
    const BiphotonGaussian model{7.9e-6, 9.7e3};
    const auto pairs = sample_pairs_momentum(200000, model, 1);
    const Moments m = moments(pairs);
    CHECK(m.sum_std == doctest::Approx(model.sigma_k).epsilon(0.01));
    CHECK(m.diff_std == doctest::Approx(1.0 / model.sigma_r).epsilon(0.01));
    // cov(k1, k2) = (σ_k² - 1/σ_r²)/4 < 0
    const double expect = (model.sigma_k * model.sigma_k - 1.0 / (model.sigma_r * model.sigma_r)) / 4.0;
    CHECK(m.cross == doctest::Approx(expect).epsilon(0.02));
    CHECK(m.cross < 0.0);
}

TEST_CASE("position pairs: minus width sqrt(beta)·sigma_r, sum width waist")
{
    const CrystalParams crystal{0.9e-3, 405e-9, 0.455};
    const PumpParams pump{89e-6, CoherenceLength::infinite()};
    const Beta beta = Beta::from_alpha(0.455);
    const auto pairs = sample_pairs_position(200000, crystal, pump, beta, 2);
    const Moments m = moments(pairs);
    CHECK(m.diff_std == doctest::Approx(std::sqrt(beta.value) * sigma_r_theory(crystal)).epsilon(0.01));
    CHECK(m.sum_std == doctest::Approx(89e-6).epsilon(0.01));
    CHECK(m.cross > 0.0);
}

TEST_CASE("speckle pairs: sum coordinate follows the pixel weights (chi-square)")
{
    Image w(8, 8, Affine2::centered(8, 8, 1e3));
    for (std::size_t k = 0; k < w.size(); ++k) {
        w.values[k] = 1.0 + static_cast<double>((k * 37) % 11);
    }
    w.values[5] = 0.0;  // never drawn
    const std::size_t n = 100000;
    const auto pairs = sample_pairs_static_speckle(n, w, 5e-6, 3);
    std::vector<double> counts(w.size(), 0.0);
    for (const auto& p : pairs) {
        const TransverseVec s = p.photon1 + p.photon2;
        const auto ij = w.axes.inverse(s);
        const int x = static_cast<int>(std::lround(ij[0]));
        const int y = static_cast<int>(std::lround(ij[1]));
        REQUIRE(std::abs(ij[0] - x) < 1e-6);  // pixel centres exactly
        counts[static_cast<std::size_t>(y) * 8 + x] += 1.0;
    }
    CHECK(counts[5] == 0.0);
    const double total = std::accumulate(w.values.begin(), w.values.end(), 0.0);
    double chi2 = 0.0;
    int dof = -1;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (w.values[k] > 0.0) {
            const double e = n * w.values[k] / total;
            chi2 += (counts[k] - e) * (counts[k] - e) / e;
            ++dof;
        }
    }
    // 62 degrees of freedom; the 99.9% quantile is about 100.9.
    CHECK(dof == 62);
    CHECK(chi2 < 100.9);
    CHECK_THROWS_AS(SpecklePairSource(Image(2, 2), 5e-6), DomainError);
}

TEST_CASE("ideal camera: every detected photon adds one grey level")
{
    CameraSpec spec = default_camera(Mode::momentum, 16, 16);
    spec.quantum_efficiency = 1.0;
    spec.em_gain_mean = 1.0;
    spec.readout_noise_mean = 0.0;
    spec.readout_noise_std = 0.0;
    const auto pairs = sample_pairs_momentum(500, {7.9e-6, 9.7e3}, 4);
    std::vector<std::uint16_t> frame(spec.pixel_count());
    Rng rng = make_rng(1, Stream::test, 0);
    LossStats stats;
    render_frame(pairs, spec, rng, frame, stats);
    std::vector<std::uint16_t> expect(spec.pixel_count(), 0);
    std::uint64_t off = 0;
    for (const auto& p : pairs) {
        for (const auto& ph : {p.photon1, p.photon2}) {
            if (auto pix = spec.pixel_of(ph)) {
                ++expect[*pix];
            }
            else {
                ++off;
            }
        }
    }
    CHECK(frame == expect);
    CHECK(stats.pairs == 500);
    CHECK(stats.off_sensor == off);
    CHECK(stats.undetected == 0);
    CHECK(stats.deposited + stats.dropped() == 1000);
}

TEST_CASE("photon bookkeeping and detection rate")
{
    const CameraSpec spec = default_camera(Mode::momentum, 32, 32);
    auto source = std::make_shared<MomentumPairSource>(BiphotonGaussian{7.9e-6, 9.7e3});
    const FrameSimulator sim(source, spec, 7);
    LossStats stats;
    const FrameStack stack = sim.simulate(400, &stats);
    CHECK(stats.deposited + stats.off_sensor + stats.undetected == 2 * stats.pairs);
    // Poisson mean 50 pairs per frame.
    CHECK(static_cast<double>(stats.pairs) / 400 == doctest::Approx(50.0).epsilon(0.03));
    const double on_sensor = static_cast<double>(stats.deposited + stats.undetected);
    CHECK(stats.deposited / on_sensor == doctest::Approx(0.7).epsilon(0.03));
    // Readout noise sets the background level.
    double mean = 0.0;
    for (auto v : stack.pixels) {
        mean += v;
    }
    mean /= static_cast<double>(stack.pixels.size());
    CHECK(mean > 171.0);
    CHECK(mean < 171.0 + 300.0 * stats.deposited / static_cast<double>(stack.pixels.size()) * 1.1 + 1.0);
}

TEST_CASE("frames are indexed: any split of the range reproduces the same stack")
{
    const CameraSpec spec = default_camera(Mode::position, 20, 20);
    auto source = std::make_shared<PositionPairSource>(7.9e-6, 30e-6, Beta::from_alpha(0.455));
    const FrameSimulator sim(source, spec, 11);
    const FrameStack all = sim.simulate(12);
    std::vector<std::uint16_t> a(5 * spec.pixel_count()), b(7 * spec.pixel_count());
    sim.generate(0, 5, a);
    sim.generate(5, 7, b);
    a.insert(a.end(), b.begin(), b.end());
    CHECK(a == all.pixels);
    const FrameSimulator other(source, spec, 12);
    CHECK(other.simulate(12).pixels != all.pixels);
    CHECK_THROWS_AS(sim.simulate(0), ConfigError);
}

TEST_CASE("fixed pair count")
{
    CameraSpec spec = default_camera(Mode::momentum, 8, 8);
    spec.pairs_per_frame_mean = 3.0;
    auto source = std::make_shared<MomentumPairSource>(BiphotonGaussian{7.9e-6, 9.7e3});
    const FrameSimulator sim(source, spec, 1, true);
    for (std::size_t f = 0; f < 10; ++f) {
        CHECK(sim.frame_pairs(f).size() == 3);
    }
}
