#include "biphoton/analysis.hpp"

#include "biphoton/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace biphoton {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Length of one pixel step in axis units; the calibration must map pixels to
// squares.
double similarity_scale(const Affine2& a)
{
    const double n1 = std::hypot(a.c[1], a.c[4]);
    const double n2 = std::hypot(a.c[2], a.c[5]);
    const double dot = a.c[1] * a.c[2] + a.c[4] * a.c[5];
    if (n1 == 0.0 || std::abs(n1 - n2) > 1e-9 * n1 || std::abs(dot) > 1e-9 * n1 * n2) {
        throw UsageError("Gaussian fit needs square, orthogonal pixel axes");
    }
    return n1;
}

struct Samples {
    std::vector<double> x, y, v;
};

// Parameters in pixel units: A, cx, cy, s, B.
using Params = Eigen::Matrix<double, 5, 1>;

double cost(const Samples& d, const Params& p, Eigen::VectorXd* residual = nullptr)
{
    double sum = 0.0;
    const double inv = 1.0 / (2.0 * p[3] * p[3]);
    for (std::size_t k = 0; k < d.v.size(); ++k) {
        const double dx = d.x[k] - p[1];
        const double dy = d.y[k] - p[2];
        const double r = p[0] * std::exp(-(dx * dx + dy * dy) * inv) + p[4] - d.v[k];
        if (residual) {
            (*residual)[static_cast<Eigen::Index>(k)] = r;
        }
        sum += r * r;
    }
    return sum;
}

void jacobian(const Samples& d, const Params& p, Eigen::MatrixXd& j)
{
    const double s2 = p[3] * p[3];
    for (std::size_t k = 0; k < d.v.size(); ++k) {
        const double dx = d.x[k] - p[1];
        const double dy = d.y[k] - p[2];
        const double r2 = dx * dx + dy * dy;
        const double e = std::exp(-r2 / (2.0 * s2));
        const auto row = static_cast<Eigen::Index>(k);
        j(row, 0) = e;
        j(row, 1) = p[0] * e * dx / s2;
        j(row, 2) = p[0] * e * dy / s2;
        j(row, 3) = p[0] * e * r2 / (s2 * p[3]);
        j(row, 4) = 1.0;
    }
}

// Start from the half-maximum region: its centroid and area give centre and
// width of an isotropic Gaussian above a flat floor.
std::optional<Params> initial_guess(const Samples& d)
{
    const auto [lo, hi] = std::minmax_element(d.v.begin(), d.v.end());
    const double amp = *hi - *lo;
    if (!(amp > 0.0) || !std::isfinite(amp)) {
        return std::nullopt;
    }
    const double half = *lo + 0.5 * amp;
    double w = 0.0, cx = 0.0, cy = 0.0;
    std::size_t area = 0;
    for (std::size_t k = 0; k < d.v.size(); ++k) {
        if (d.v[k] >= half) {
            const double wk = d.v[k] - half;
            w += wk;
            cx += wk * d.x[k];
            cy += wk * d.y[k];
            ++area;
        }
    }
    Params p;
    p[0] = amp;
    p[1] = w > 0.0 ? cx / w : d.x[static_cast<std::size_t>(hi - d.v.begin())];
    p[2] = w > 0.0 ? cy / w : d.y[static_cast<std::size_t>(hi - d.v.begin())];
    p[3] = std::max(0.5, std::sqrt(static_cast<double>(area) / (std::numbers::pi * 2.0 * std::log(2.0))));
    p[4] = *lo;
    return p;
}

bool step_small(const Params& step, const Params& p, double tol)
{
    // Scales below which a parameter counts as zero: centres in pixels, the
    // offset relative to the amplitude.
    const double scale[5] = {std::abs(p[0]), std::max(1.0, std::abs(p[1])), std::max(1.0, std::abs(p[2])),
                             std::abs(p[3]), std::max(std::abs(p[4]), std::abs(p[0]))};
    for (int i = 0; i < 5; ++i) {
        if (std::abs(step[i]) > tol * scale[i]) {
            return false;
        }
    }
    return true;
}

}  // namespace

FitResult fit_gaussian_2d(const Image& image, std::span<const std::uint8_t> mask, const FitOptions& options)
{
    if (!mask.empty() && mask.size() != image.size()) {
        throw UsageError("fit mask size does not match the image");
    }
    const double scale = similarity_scale(image.axes);
    Samples d;
    for (int j = 0; j < image.height; ++j) {
        for (int i = 0; i < image.width; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * image.width + i;
            if (!mask.empty() && !mask[k]) {
                continue;
            }
            if (!std::isfinite(image.values[k])) {
                throw UsageError("fit input contains non-finite values");
            }
            d.x.push_back(i);
            d.y.push_back(j);
            d.v.push_back(image.values[k]);
        }
    }
    if (d.v.size() < 25) {
        throw UsageError("fit mask covers " + std::to_string(d.v.size()) + " pixels, need at least 25");
    }

    FitResult out;
    const auto guess = initial_guess(d);
    if (!guess) {
        out.note = "constant image";
        out.width_sigma = kNaN;
        out.width_uncertainty = kNaN;
        out.center = {kNaN, kNaN};
        return out;
    }
    Params p = *guess;
    const auto n = static_cast<Eigen::Index>(d.v.size());
    Eigen::VectorXd r(n);
    Eigen::MatrixXd jac(n, 5);
    double c = cost(d, p, &r);
    double lambda = 1e-3;
    bool done = false;
    int it = 0;
    for (; it < options.max_iterations && !done; ++it) {
        jacobian(d, p, jac);
        const Eigen::Matrix<double, 5, 5> jtj = jac.transpose() * jac;
        const Params g = jac.transpose() * r;
        // Raise the damping until a step lowers the cost.
        for (;;) {
            Eigen::Matrix<double, 5, 5> a = jtj;
            a.diagonal() *= 1.0 + lambda;
            const Params step = a.ldlt().solve(-g);
            const Params trial = p + step;
            const double tc = trial[3] > 0.0 && step.allFinite() ? cost(d, trial) : std::numeric_limits<double>::infinity();
            if (tc <= c) {
                const bool small = step_small(step, p, options.tolerance);
                p = trial;
                c = cost(d, p, &r);
                lambda = std::max(lambda * 0.1, 1e-12);
                done = small;
                break;
            }
            lambda *= 10.0;
            if (lambda > 1e12 || step_small(step, p, options.tolerance)) {
                // No downhill step exists at working precision.
                out.note = "stalled at numerical minimum";
                done = true;
                break;
            }
        }
    }
    out.iterations = it;
    out.converged = done;
    if (!done) {
        out.note = "no convergence in " + std::to_string(options.max_iterations) + " iterations";
    }

    jacobian(d, p, jac);
    const Eigen::Matrix<double, 5, 5> jtj = jac.transpose() * jac;
    const double dof = static_cast<double>(n) - 5.0;
    const Eigen::Matrix<double, 5, 5> cov = jtj.inverse() * (c / dof);
    out.amplitude = p[0];
    out.center = image.axes.map(p[1], p[2]);
    out.width_sigma = std::abs(p[3]) * scale;
    out.offset = p[4];
    out.residual_rms = std::sqrt(c / static_cast<double>(n));
    out.width_uncertainty = std::sqrt(std::max(cov(3, 3), 0.0)) * scale;
    return out;
}

namespace {

std::vector<std::uint8_t> fit_mask(const ProjectionImage& p, bool mask_diagonal)
{
    std::vector<std::uint8_t> m(p.valid.size());
    for (std::size_t k = 0; k < m.size(); ++k) {
        m[k] = p.valid[k] && !(mask_diagonal && p.diagonal_affected[k]);
    }
    return m;
}

WidthEstimate width_of(const ProjectionImage& p, const FitOptions& options)
{
    WidthEstimate e;
    e.fit = fit_gaussian_2d(p.image, fit_mask(p, true), options);
    e.unmasked_fit = fit_gaussian_2d(p.image, fit_mask(p, false), options);
    e.value = e.fit.width_sigma;
    e.uncertainty = e.fit.width_uncertainty;
    return e;
}

}  // namespace

WidthEstimate estimate_sigma_k(const ProjectionImage& sum_projection, const FitOptions& options)
{
    if (sum_projection.kind != ProjectionKind::sum || sum_projection.mode != Mode::momentum) {
        throw ModeMismatchError("σ_k needs the SUM projection of a momentum-mode Γ");
    }
    return width_of(sum_projection, options);
}

WidthEstimate estimate_sigma_r(const ProjectionImage& minus_projection, Beta beta, const FitOptions& options)
{
    if (minus_projection.kind != ProjectionKind::minus || minus_projection.mode != Mode::position) {
        throw ModeMismatchError("σ_r needs the MINUS projection of a position-mode Γ");
    }
    if (!(beta.value > 0.0)) {
        throw DomainError("β must be positive");
    }
    WidthEstimate e = width_of(minus_projection, options);
    const double root = std::sqrt(beta.value);
    e.value /= root;
    e.uncertainty /= root;
    return e;
}

AcceptanceCorrected correct_acceptance(const ProjectionImage& sum, const ProjectionImage& minus, int passes,
                                       double floor)
{
    if (sum.kind != ProjectionKind::sum || minus.kind != ProjectionKind::minus || sum.mode != minus.mode ||
        sum.image.width != minus.image.width || sum.image.height != minus.image.height) {
        throw ModeMismatchError("acceptance correction needs SUM and MINUS of the same Γ");
    }
    if (passes < 1 || !(floor > 0.0 && floor < 1.0)) {
        throw DomainError("acceptance correction needs passes >= 1 and 0 < floor < 1");
    }
    const int sw = sum.image.width, sh = sum.image.height;
    const int w = (sw + 1) / 2, h = (sh + 1) / 2;
    const std::size_t n = static_cast<std::size_t>(sw) * sh;

    // Accumulate `from` (indexed by the other coordinate) into `to` over all
    // distinct pixel pairs.
    const auto spread = [&](const std::vector<double>& from, std::vector<double>& to, bool into_sum) {
        std::fill(to.begin(), to.end(), 0.0);
        for (int y1 = 0; y1 < h; ++y1) {
            for (int y2 = 0; y2 < h; ++y2) {
                const int sy = y1 + y2, dy = y1 - y2 + h - 1;
                for (int x1 = 0; x1 < w; ++x1) {
                    for (int x2 = 0; x2 < w; ++x2) {
                        if (x1 == x2 && y1 == y2) {
                            continue;
                        }
                        const std::size_t si = static_cast<std::size_t>(sy) * sw + x1 + x2;
                        const std::size_t di = static_cast<std::size_t>(dy) * sw + x1 - x2 + w - 1;
                        if (into_sum) {
                            to[si] += from[di];
                        }
                        else {
                            to[di] += from[si];
                        }
                    }
                }
            }
        }
    };
    // factor = max(data, 0) / acceptance where the acceptance is usable.
    const auto divide = [&](const ProjectionImage& data, const std::vector<double>& acc, std::vector<double>& factor) {
        const double top = *std::max_element(acc.begin(), acc.end());
        for (std::size_t k = 0; k < n; ++k) {
            factor[k] = data.valid[k] && acc[k] > floor * top ? std::max(data.image.values[k], 0.0) / acc[k] : 0.0;
        }
    };

    std::vector<double> g(n), rho(n), a(n), b(n, 1.0);
    divide(minus, b, rho);
    for (int pass = 0; pass < passes; ++pass) {
        spread(rho, a, true);
        divide(sum, a, g);
        spread(g, b, false);
        divide(minus, b, rho);
    }

    AcceptanceCorrected out{sum, minus, a, b};
    const auto finish = [&](ProjectionImage& p, std::vector<double>& acc) {
        const double top = *std::max_element(acc.begin(), acc.end());
        for (std::size_t k = 0; k < n; ++k) {
            acc[k] /= top;
            if (p.valid[k] && acc[k] > floor) {
                p.image.values[k] /= acc[k];
            }
            else {
                p.image.values[k] = 0.0;
                p.valid[k] = 0;
            }
        }
    };
    finish(out.sum, out.sum_acceptance);
    finish(out.minus, out.minus_acceptance);
    return out;
}

AcceptanceCorrected correct_acceptance(const JointDistribution& gamma, const ProjectionOptions& options, int passes,
                                       double floor)
{
    return correct_acceptance(project_sum(gamma, options), project_minus(gamma, options), passes, floor);
}

WaistEstimate estimate_waist(const Image& coherent_farfield, const FitOptions& options)
{
    WaistEstimate e;
    e.fit = fit_gaussian_2d(coherent_farfield, {}, options);
    e.sigma_p0 = e.fit.width_sigma;
    e.waist = 1.0 / e.sigma_p0;
    return e;
}

CoherenceEstimate estimate_lc(const Image& partial_farfield, double sigma_p0, const FitOptions& options)
{
    if (!(sigma_p0 > 0.0)) {
        throw DomainError("σ_p0 must be positive");
    }
    CoherenceEstimate e;
    e.fit = fit_gaussian_2d(partial_farfield, {}, options);
    e.sigma_p = e.fit.width_sigma;
    if (!(e.sigma_p > sigma_p0)) {
        e.note = "far-field width does not exceed the coherent width; coherence length taken as infinite";
        return e;
    }
    e.lc = CoherenceLength::meters(2.0 / std::sqrt(e.sigma_p * e.sigma_p - sigma_p0 * sigma_p0));
    return e;
}

Image remove_envelope(const Image& image, std::span<const std::uint8_t> mask)
{
    const FitResult f = fit_gaussian_2d(image, mask);
    if (!f.converged) {
        throw UsageError("remove_envelope: envelope fit failed (" + f.note + ")");
    }
    Image out = image;
    const double s2 = f.width_sigma * f.width_sigma;
    for (int j = 0; j < image.height; ++j) {
        for (int i = 0; i < image.width; ++i) {
            const double d2 = (image.axes.map(i, j) - f.center).norm2();
            out.at(i, j) -= f.amplitude * std::exp(-d2 / (2.0 * s2)) + f.offset;
        }
    }
    return out;
}

namespace {

// Envelope removal for correlation purposes: an image with no Gaussian
// envelope to fit is already flat up to an offset, which Pearson ignores.
Image detrend(const Image& image, std::span<const std::uint8_t> mask = {})
{
    if (!fit_gaussian_2d(image, mask).converged) {
        return image;
    }
    return remove_envelope(image, mask);
}

}  // namespace

SpeckleTransfer speckle_transfer(const ProjectionImage& sum, const Image& mean_frame, const Image& pump,
                                 double radius)
{
    if (sum.kind != ProjectionKind::sum || sum.mode != Mode::momentum) {
        throw ModeMismatchError("speckle transfer needs the SUM projection of a momentum-mode Γ");
    }
    if (!(radius > 0.0)) {
        throw DomainError("comparison radius must be positive");
    }
    const double r2 = radius * radius;
    auto disc = [&](const Image& img, const std::vector<std::uint8_t>* base) {
        std::vector<std::uint8_t> m(img.size(), 0);
        for (int j = 0; j < img.height; ++j) {
            for (int i = 0; i < img.width; ++i) {
                const std::size_t k = static_cast<std::size_t>(j) * img.width + i;
                m[k] = (!base || (*base)[k]) && img.axes.map(i, j).norm2() <= r2;
            }
        }
        return m;
    };

    SpeckleTransfer t;
    std::vector<std::uint8_t> fit_bins(sum.valid.size());
    for (std::size_t k = 0; k < fit_bins.size(); ++k) {
        fit_bins[k] = sum.valid[k] && !sum.diagonal_affected[k];
    }
    const Image pump_sum = splat_bilinear(pump, sum.image.width, sum.image.height, sum.image.axes);
    const auto sum_use = disc(sum.image, &fit_bins);
    t.sum_bins = static_cast<std::size_t>(std::count(sum_use.begin(), sum_use.end(), 1));
    t.r_sum = pearson(sum.image.values, pump_sum.values, sum_use);
    t.r_sum_speckle = pearson(detrend(sum.image, fit_bins).values, detrend(pump_sum).values, sum_use);

    const Image pump_direct = splat_bilinear(pump, mean_frame.width, mean_frame.height, mean_frame.axes);
    const auto direct_use = disc(mean_frame, nullptr);
    t.direct_pixels = static_cast<std::size_t>(std::count(direct_use.begin(), direct_use.end(), 1));
    t.r_direct = pearson(mean_frame.values, pump_direct.values, direct_use);
    t.r_direct_speckle =
        pearson(detrend(mean_frame).values, detrend(pump_direct).values, direct_use);
    return t;
}

SchmidtEstimate schmidt_from_widths(double sigma_r, double sigma_k, double sigma_r_err, double sigma_k_err)
{
    if (!(sigma_r > 0.0) || !(sigma_k > 0.0)) {
        throw DomainError("Schmidt number needs positive widths");
    }
    const double x = sigma_r * sigma_k;
    const double q = 1.0 / x + x;
    SchmidtEstimate s;
    s.k_value = 0.25 * q * q;
    const double rel = std::hypot(sigma_r_err / sigma_r, sigma_k_err / sigma_k);
    const double dk_dx = 0.5 * q * (1.0 - 1.0 / (x * x));
    s.k_uncertainty = std::abs(dk_dx) * x * rel;
    return s;
}

RegressionResult regress_sigma_k2_vs_inv_lc2(std::span<const RegressionPoint> points)
{
    if (points.size() < 3) {
        throw UsageError("regression needs at least 3 points");
    }
    const double n = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (const auto& p : points) {
        mx += p.inv_lc2;
        my += p.sigma_k2;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& p : points) {
        sxx += (p.inv_lc2 - mx) * (p.inv_lc2 - mx);
        sxy += (p.inv_lc2 - mx) * (p.sigma_k2 - my);
        syy += (p.sigma_k2 - my) * (p.sigma_k2 - my);
    }
    if (!(sxx > 0.0)) {
        throw UsageError("regression needs at least two distinct 1/ℓ_c² values");
    }
    RegressionResult r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    double rss = 0.0;
    for (const auto& p : points) {
        const double e = p.sigma_k2 - (r.intercept + r.slope * p.inv_lc2);
        rss += e * e;
    }
    r.r_squared = syy > 0.0 ? std::clamp(1.0 - rss / syy, 0.0, 1.0) : 1.0;
    r.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
    return r;
}

}  // namespace biphoton
