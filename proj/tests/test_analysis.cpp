#include "biphoton/analysis.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace biphoton;

namespace {

Image gaussian(int n, double step, TransverseVec c, double s, double a, double b)
{
    Image img(n, n, Affine2::centered(n, n, step));
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const auto p = img.axes.map(x, y);
            img.at(x, y) = a * std::exp(-((p - c).norm2()) / (2 * s * s)) + b;
        }
    }
    return img;
}

ProjectionImage as_projection(Image img, ProjectionKind kind, Mode mode)
{
    ProjectionImage p;
    p.kind = kind;
    p.mode = mode;
    p.valid.assign(img.size(), 1);
    p.diagonal_affected.assign(img.size(), 0);
    p.image = std::move(img);
    return p;
}

}  // namespace

TEST_CASE("noise-free Gaussian is recovered exactly")
{
    const Image img = gaussian(41, 0.5, {0.7, -1.2}, 2.3, 5.0, 0.4);
    const FitResult f = fit_gaussian_2d(img);
    REQUIRE(f.converged);
    CHECK(f.center.x == doctest::Approx(0.7).epsilon(1e-7));
    CHECK(f.center.y == doctest::Approx(-1.2).epsilon(1e-7));
    CHECK(f.width_sigma == doctest::Approx(2.3).epsilon(1e-7));
    CHECK(f.amplitude == doctest::Approx(5.0).epsilon(1e-7));
    CHECK(f.offset == doctest::Approx(0.4).epsilon(1e-6));
    CHECK(f.residual_rms < 1e-8);
}

TEST_CASE("fit is equivariant under shifts, amplitude scaling and axis scaling")
{
    Rng rng = make_rng(21, Stream::test, 0);
    std::normal_distribution<double> noise(0.0, 0.02);
    Image base = gaussian(35, 1.0, {0.0, 0.0}, 3.0, 1.0, 0.1);
    for (double& v : base.values) {
        v += noise(rng);
    }
    const FitResult f0 = fit_gaussian_2d(base);
    REQUIRE(f0.converged);
    CHECK(f0.width_sigma == doctest::Approx(3.0).epsilon(0.03));

    // Relabelled axes: same pixels, origin moved.
    Image shifted = base;
    shifted.axes.c[0] += 4.0;
    shifted.axes.c[3] -= 2.0;
    const FitResult f1 = fit_gaussian_2d(shifted);
    CHECK(f1.center.x == doctest::Approx(f0.center.x + 4.0).epsilon(1e-6));
    CHECK(f1.center.y == doctest::Approx(f0.center.y - 2.0).epsilon(1e-6));
    CHECK(f1.width_sigma == doctest::Approx(f0.width_sigma).epsilon(1e-6));

    Image scaled = base;
    for (double& v : scaled.values) {
        v *= 1000.0;
    }
    const FitResult f2 = fit_gaussian_2d(scaled);
    CHECK(f2.width_sigma == doctest::Approx(f0.width_sigma).epsilon(1e-6));
    CHECK(f2.amplitude == doctest::Approx(1000.0 * f0.amplitude).epsilon(1e-6));

    Image stretched = base;
    for (double& c : stretched.axes.c) {
        c *= 3.5;
    }
    const FitResult f3 = fit_gaussian_2d(stretched);
    CHECK(f3.width_sigma == doctest::Approx(3.5 * f0.width_sigma).epsilon(1e-6));
    CHECK(f3.width_uncertainty == doctest::Approx(3.5 * f0.width_uncertainty).epsilon(1e-4));
}

TEST_CASE("width uncertainty tracks the scatter of repeated fits")
{
    std::vector<double> widths;
    double reported = 0.0;
    for (int r = 0; r < 60; ++r) {
        Rng rng = make_rng(100 + r, Stream::test, 0);
        std::normal_distribution<double> noise(0.0, 0.05);
        Image img = gaussian(31, 1.0, {0.0, 0.0}, 2.5, 1.0, 0.0);
        for (double& v : img.values) {
            v += noise(rng);
        }
        const FitResult f = fit_gaussian_2d(img);
        widths.push_back(f.width_sigma);
        reported += f.width_uncertainty / 60;
    }
    double m = 0.0, s = 0.0;
    for (double w : widths) {
        m += w / 60;
    }
    for (double w : widths) {
        s += (w - m) * (w - m) / 59;
    }
    CHECK(m == doctest::Approx(2.5).epsilon(0.01));
    CHECK(reported == doctest::Approx(std::sqrt(s)).epsilon(0.35));
}

TEST_CASE("masked pixels do not influence the fit")
{
    Image img = gaussian(31, 1.0, {0.0, 0.0}, 3.0, 2.0, 0.0);
    std::vector<std::uint8_t> mask(img.size(), 1);
    img.at(15, 15) = 1e6;
    mask[15 * 31 + 15] = 0;
    const FitResult f = fit_gaussian_2d(img, mask);
    CHECK(f.width_sigma == doctest::Approx(3.0).epsilon(1e-6));
    std::vector<std::uint8_t> tiny(img.size(), 0);
    std::fill(tiny.begin(), tiny.begin() + 24, 1);
    CHECK_THROWS_AS(fit_gaussian_2d(img, tiny), UsageError);
}

TEST_CASE("a flat image does not converge")
{
    Image flat(20, 20);
    std::fill(flat.values.begin(), flat.values.end(), 3.0);
    const FitResult f = fit_gaussian_2d(flat);
    CHECK_FALSE(f.converged);
    CHECK(std::isnan(f.width_sigma));
    CHECK_FALSE(f.note.empty());
}

TEST_CASE("non-square pixels are rejected")
{
    Image img = gaussian(20, 1.0, {0.0, 0.0}, 3.0, 1.0, 0.0);
    img.axes.c[5] *= 2.0;
    CHECK_THROWS_AS(fit_gaussian_2d(img), UsageError);
}

TEST_CASE("width estimates check projection kind and apply sqrt(beta)")
{
    const Beta beta = Beta::from_alpha(0.455);
    const double sr = 7.9e-6;
    const auto minus = as_projection(gaussian(41, 1e-6, {0.0, 0.0}, std::sqrt(beta.value) * sr, 1.0, 0.0),
                                     ProjectionKind::minus, Mode::position);
    const WidthEstimate e = estimate_sigma_r(minus, beta);
    CHECK(e.value == doctest::Approx(sr).epsilon(1e-6));
    CHECK(e.unmasked_fit.converged);
    CHECK_THROWS_AS(estimate_sigma_k(minus), ModeMismatchError);

    const auto sum = as_projection(gaussian(41, 3e3, {0.0, 0.0}, 9.7e3, 1.0, 0.0), ProjectionKind::sum,
                                   Mode::momentum);
    CHECK(estimate_sigma_k(sum).value == doctest::Approx(9.7e3).epsilon(1e-6));
    CHECK_THROWS_AS(estimate_sigma_r(sum, beta), ModeMismatchError);
}

TEST_CASE("coherence length from far-field widths")
{
    // σ_p² = σ_p0² + 4/ℓ²
    const double w = 89e-6, lc = 59e-6;
    const double sp0 = 1.0 / w;
    const double sp = std::sqrt(sp0 * sp0 + 4.0 / (lc * lc));
    const Image i0 = gaussian(81, 1.2e3, {0, 0}, sp0, 1.0, 0.0);
    const Image i1 = gaussian(81, 1.2e3, {0, 0}, sp, 1.0, 0.0);
    const WaistEstimate we = estimate_waist(i0);
    CHECK(we.waist == doctest::Approx(w).epsilon(1e-6));
    const CoherenceEstimate ce = estimate_lc(i1, we.sigma_p0);
    REQUIRE_FALSE(ce.lc.is_infinite());
    CHECK(ce.lc.value() == doctest::Approx(lc).epsilon(1e-5));
    const CoherenceEstimate none = estimate_lc(i0, we.sigma_p0 * 1.01);
    CHECK(none.lc.is_infinite());
    CHECK_FALSE(none.note.empty());
}

TEST_CASE("regression of sigma_k^2 on 1/lc^2")
{
    const RegressionPoint exact[] = {{0.0, 31.6}, {67.2, 98.8}, {287.3, 318.9}, {594.9, 626.5}};
    const RegressionResult r = regress_sigma_k2_vs_inv_lc2(exact);
    CHECK(r.slope == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.intercept == doctest::Approx(31.6).epsilon(1e-10));
    CHECK(r.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.slope_stderr < 1e-10);

    // Against a separately computed OLS.
    const RegressionPoint noisy[] = {{0.0, 5.76}, {67.2, 94.1}, {287.3, 295.8}, {594.9, 506.3}};
    const RegressionResult q = regress_sigma_k2_vs_inv_lc2(noisy);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto p : noisy) {
        sx += p.inv_lc2;
        sy += p.sigma_k2;
        sxx += p.inv_lc2 * p.inv_lc2;
        sxy += p.inv_lc2 * p.sigma_k2;
    }
    CHECK(q.slope == doctest::Approx((4 * sxy - sx * sy) / (4 * sxx - sx * sx)));
    CHECK(q.r_squared < 1.0);
    CHECK_THROWS_AS(regress_sigma_k2_vs_inv_lc2(std::span(noisy).first(2)), UsageError);
}

TEST_CASE("envelope removal leaves the fine structure")
{
    Image img = gaussian(41, 1.0, {0, 0}, 6.0, 10.0, 0.0);
    const Image flat = remove_envelope(img);
    for (double v : flat.values) {
        CHECK(std::abs(v) < 1e-6);
    }
    Image ripple = img;
    for (int y = 0; y < 41; ++y) {
        for (int x = 0; x < 41; ++x) {
            ripple.at(x, y) += 0.5 * std::cos(2.1 * x) * std::cos(1.7 * y);
        }
    }
    const Image rest = remove_envelope(ripple);
    std::vector<double> r0(img.size());
    for (int y = 0; y < 41; ++y) {
        for (int x = 0; x < 41; ++x) {
            r0[y * 41 + x] = 0.5 * std::cos(2.1 * x) * std::cos(1.7 * y);
        }
    }
    CHECK(pearson(rest.values, r0) > 0.99);
}

TEST_CASE("speckle transfer metric on a perfect copy")
{
    // Pump far field with structure on a k grid; its splat onto the SUM grid
    // is a perfect SUM projection.
    const int n = 64;
    Image pump(n, n, Affine2::centered(n, n, 1.5e3));
    Rng rng = make_rng(31, Stream::test, 0);
    std::exponential_distribution<double> speckle(1.0);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const auto k = pump.axes.map(x, y);
            pump.at(x, y) = speckle(rng) * std::exp(-k.norm2() / (2 * 15e3 * 15e3));
        }
    }
    const int w = 32;
    const Affine2 cam = Affine2::centered(w, w, 3.1e3);
    ProjectionImage sum;
    sum.kind = ProjectionKind::sum;
    sum.mode = Mode::momentum;
    const Affine2 sum_axes{{2 * cam.c[0], cam.c[1], 0.0, 2 * cam.c[3], 0.0, cam.c[5]}};
    sum.image = splat_bilinear(pump, 2 * w - 1, 2 * w - 1, sum_axes);
    sum.valid.assign(sum.image.size(), 1);
    sum.diagonal_affected.assign(sum.image.size(), 0);
    Image mean(w, w, cam);
    std::fill(mean.values.begin(), mean.values.end(), 1.0);
    for (std::size_t k = 0; k < mean.size(); ++k) {
        mean.values[k] += 0.01 * static_cast<double>(k % 7);
    }
    const SpeckleTransfer t = speckle_transfer(sum, mean, pump, 24e3);
    CHECK(t.r_sum > 0.999);
    CHECK(t.r_sum_speckle > 0.99);
    CHECK(std::abs(t.r_direct_speckle) < 0.2);
    CHECK(t.sum_bins > 100);
    CHECK_THROWS_AS(speckle_transfer(sum, mean, pump, -1.0), DomainError);
}

TEST_CASE("Pearson correlation")
{
    const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 4, 6, 8, 10}, c{5, 4, 3, 2, 1};
    CHECK(pearson(a, b) == doctest::Approx(1.0));
    CHECK(pearson(a, c) == doctest::Approx(-1.0));
    const std::vector<std::uint8_t> use{1, 1, 0, 1, 1};
    CHECK(pearson(a, b, use) == doctest::Approx(1.0));
}

TEST_CASE("acceptance correction undoes finite-sensor narrowing of a separable Γ")
{
    const int n = 24;
    JointDistribution g;
    g.spec = default_camera(Mode::momentum, n, n);
    g.mode = Mode::momentum;
    g.frame_count = 2;
    g.values.resize(kernels::tri_size(g.pixels()));
    // Γ = G(p1 + p2) ρ(p1 - p2) in pixel units, centred on the sensor.
    const double ss = 6.0, sd = 9.0, c = n - 1.0;
    for (std::size_t i = 0; i < g.pixels(); ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double sx = double(i % n + j % n) - c, sy = double(i / n + j / n) - c;
            const double dx = double(i % n) - double(j % n), dy = double(i / n) - double(j / n);
            g.values[kernels::tri_index(i, j)] = std::exp(-(sx * sx + sy * sy) / (2 * ss * ss)) *
                                                 std::exp(-(dx * dx + dy * dy) / (2 * sd * sd));
        }
    }
    const ProjectionImage raw = project_sum(g);
    const auto a0 = raw.image.axes.map(0, 0), a1 = raw.image.axes.map(1, 0);
    const double step = std::hypot(a1.x - a0.x, a1.y - a0.y);
    const double expected = ss * step;

    const double narrow = estimate_sigma_k(raw).value;
    CHECK(narrow < 0.97 * expected);

    const AcceptanceCorrected ac = correct_acceptance(g);
    const WidthEstimate fixed = estimate_sigma_k(ac.sum);
    CHECK(fixed.value == doctest::Approx(expected).epsilon(0.005));
    CHECK(*std::max_element(ac.sum_acceptance.begin(), ac.sum_acceptance.end()) == doctest::Approx(1.0));

    // The corrected MINUS recovers ρ just as well.
    const FitResult m = fit_gaussian_2d(ac.minus.image, ac.minus.valid);
    CHECK(m.width_sigma == doctest::Approx(sd * step).epsilon(0.005));

    CHECK_THROWS_AS(correct_acceptance(raw, raw), ModeMismatchError);
    CHECK_THROWS_AS(correct_acceptance(raw, project_minus(g), 0), DomainError);
}
