#ifndef BIPHOTON_ANALYSIS_HPP
#define BIPHOTON_ANALYSIS_HPP

// Gaussian fits of projections and pump images, and the quantities derived
// from them: σ_k, σ_r, ω, ℓ_c, Schmidt numbers and the σ_k² vs 1/ℓ_c²
// regression.

#include "biphoton/core_model.hpp"
#include "biphoton/image.hpp"
#include "biphoton/reconstruction.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace biphoton {

// A·exp(-|u-c|²/(2s²)) + B in the image's axis units.
struct FitResult {
    TransverseVec center;
    double width_sigma = 0.0;
    double amplitude = 0.0;
    double offset = 0.0;
    double residual_rms = 0.0;
    double width_uncertainty = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string note;  // set when not converged or when the fit stalled
};

struct FitOptions {
    int max_iterations = 200;
    double tolerance = 1e-8;  // relative parameter step
};

// Damped Gauss-Newton fit over pixels with mask != 0 (all when empty),
// started from half-maximum moments. The axis calibration must be a
// similarity (square pixels). A constant image is reported as not converged
// with a NaN width.
FitResult fit_gaussian_2d(const Image& image, std::span<const std::uint8_t> mask = {}, const FitOptions& options = {});

struct WidthEstimate {
    double value = 0.0;  // axis units (rad/m or m)
    double uncertainty = 0.0;
    FitResult fit;
    FitResult unmasked_fit;  // same fit keeping the diagonal-affected bins
};

// Width of the SUM spot of a momentum-mode projection; bins touched by the
// Γ diagonal are masked.
WidthEstimate estimate_sigma_k(const ProjectionImage& sum_projection, const FitOptions& options = {});

// Finite-sensor pair acceptance. On the sensor Γ ≈ G(s) ρ(d) with s and d
// the SUM and MINUS bins, but a pair only counts when both photons land, so
// SUM(s) = G(s) A(s) and MINUS(d) = ρ(d) B(d) with A, B sums of the other
// factor over the pixel pairs reaching that bin. Alternating G = SUM/A and
// ρ = MINUS/B converges in a few passes. Without it wide SUM spots come out
// several percent narrow on a 75x75 sensor. Bins whose acceptance is below
// `floor` of its maximum are marked invalid. Same-pixel pairs are skipped.
struct AcceptanceCorrected {
    ProjectionImage sum;
    ProjectionImage minus;
    std::vector<double> sum_acceptance;    // A, normalised to max 1
    std::vector<double> minus_acceptance;  // B, normalised to max 1
};
AcceptanceCorrected correct_acceptance(const ProjectionImage& sum, const ProjectionImage& minus, int passes = 4,
                                       double floor = 0.05);
AcceptanceCorrected correct_acceptance(const JointDistribution& gamma, const ProjectionOptions& options = {},
                                       int passes = 4, double floor = 0.05);

// σ_r = fitted MINUS width / √β for a position-mode projection, with the
// centre bin masked.
WidthEstimate estimate_sigma_r(const ProjectionImage& minus_projection, Beta beta, const FitOptions& options = {});

// ω = 1/σ_p0 from the far-field intensity of the coherent pump.
struct WaistEstimate {
    double waist = 0.0;
    double sigma_p0 = 0.0;
    FitResult fit;
};
WaistEstimate estimate_waist(const Image& coherent_farfield, const FitOptions& options = {});

// ℓ_c = 2/sqrt(σ_p² - σ_p0²); infinite, with a note, when σ_p <= σ_p0.
struct CoherenceEstimate {
    CoherenceLength lc = CoherenceLength::infinite();
    double sigma_p = 0.0;
    std::string note;
    FitResult fit;
};
CoherenceEstimate estimate_lc(const Image& partial_farfield, double sigma_p0, const FitOptions& options = {});

// image - fitted isotropic Gaussian envelope (fit over mask), leaving the
// fine structure.
Image remove_envelope(const Image& image, std::span<const std::uint8_t> mask = {});

// Transfer of pump structure into the coincidences. The pump far-field
// intensity is splatted onto the SUM grid (k+ = k1 + k2) and onto the camera
// grid at the photon wavevector, and compared inside a disc of radius
// `radius` around k = 0.
//   r_sum           plain Pearson r, SUM projection vs pump
//   r_sum_speckle   same after removing each image's Gaussian envelope
//   r_direct        plain r, mean frame vs pump (reported only: its
//                   noise-free limit is set by the smooth envelope alone)
//   r_direct_speckle  envelope-removed r, mean frame vs pump
struct SpeckleTransfer {
    double r_sum = 0.0;
    double r_sum_speckle = 0.0;
    double r_direct = 0.0;
    double r_direct_speckle = 0.0;
    std::size_t sum_bins = 0;
    std::size_t direct_pixels = 0;
};
SpeckleTransfer speckle_transfer(const ProjectionImage& sum_projection, const Image& mean_frame,
                                 const Image& pump_farfield, double radius);

struct SchmidtEstimate {
    double k_value = 1.0;
    double k_uncertainty = 0.0;
};

// K = ¼(1/(σ_r σ_k) + σ_r σ_k)², uncertainty by first-order propagation of
// independent width uncertainties.
SchmidtEstimate schmidt_from_widths(double sigma_r, double sigma_k, double sigma_r_err = 0.0,
                                    double sigma_k_err = 0.0);

struct RegressionPoint {
    double inv_lc2 = 0.0;  // 1/ℓ_c², 0 for the coherent pump
    double sigma_k2 = 0.0;
};

struct RegressionResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_stderr = 0.0;
};

// Ordinary least squares of σ_k² on 1/ℓ_c². Needs at least 3 points.
RegressionResult regress_sigma_k2_vs_inv_lc2(std::span<const RegressionPoint> points);

}  // namespace biphoton

#endif  // BIPHOTON_ANALYSIS_HPP
