#ifndef BIPHOTON_PUMP_HPP
#define BIPHOTON_PUMP_HPP

// Pump field synthesis at the crystal plane: coherent Gaussian beams, thin
// random phase screens (static or rotating diffusers), and far-field
// (Fourier-plane) intensity.
//
// Field grids use the FFT-centred convention: pixel (i, j) sits at
// ((i - width/2)·pitch, (j - height/2)·pitch), so the origin is a pixel centre.

#include "biphoton/core_model.hpp"
#include "biphoton/image.hpp"

#include <complex>
#include <numbers>
#include <cstdint>
#include <vector>

namespace biphoton {

struct GridSpec {
    int width = 512;
    int height = 512;
    double pitch = 4e-6;  // [m]

    void validate() const;
};

struct FieldGrid {
    int width = 0;
    int height = 0;
    double pitch = 0.0;
    std::vector<std::complex<double>> values;

    std::complex<double>& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    const std::complex<double>& at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    // Σ|E|² over pixels.
    double total_power() const;
    Image intensity() const;
    Affine2 axes() const;
};

struct DiffuserSpec {
    double screen_correlation = 0.0;  // 1/e length of the phase autocorrelation [m]
    double phase_std = 2.0 * std::numbers::pi;
    int layers = 1;

    void validate(double pitch) const;
};

// Screen correlation that gives a target coherence length ℓ_c, from the
// small-lag expansion μ(Δ) ≈ exp(-layers·phase_std²·Δ²/c²) = exp(-2Δ²/ℓ_c²).
DiffuserSpec diffuser_for_coherence_length(double coherence_length, double phase_std, int layers);

// Amplitude exp(-|r|²/ω²) (ω is the 1/e² intensity radius, equal to twice
// the intensity standard deviation per axis). Requires 4·pitch <= ω <= extent/4.
FieldGrid make_gaussian_beam(const GridSpec& grid, double waist);

// Centred zero padding to a larger grid with the same pitch.
FieldGrid pad_field(const FieldGrid& field, int width, int height);

// Gaussian random phase: white noise filtered to autocorrelation
// exp(-Δ²/c²), scaled to standard deviation phase_std; `layers` independent
// screens are summed.
std::vector<double> make_phase_screen(const GridSpec& grid, const DiffuserSpec& spec, std::uint64_t seed);

// field · exp(iφ) with φ from make_phase_screen.
FieldGrid apply_phase_screen(const FieldGrid& field, const DiffuserSpec& spec, std::uint64_t seed);

struct FarField {
    FieldGrid field;          // field.pitch is the camera-plane pitch λf/(N·pitch)
    double k_pitch_x = 0.0;   // 2π/(width·pitch) [rad/m]
    double k_pitch_y = 0.0;

    // |field|² on k-space axes [rad/m].
    Image intensity() const;
};

// Centred, unitary DFT (power conserving). A lens of focal length f maps
// transverse wavevector k to camera position u = kλf/(2π), so the camera
// pitch and the k pitch are related by k_pitch = 2π·pitch_cam/(λ·f).
FarField far_field(const FieldGrid& field, double wavelength, double focal_length);

enum class PumpMode { coherent, static_speckle, rotating };

// Pump fields at the crystal plane. Realizations are materialized on demand
// from (seed, index) so large rotating ensembles stay cheap to hold.
class PumpEnsemble {
  public:
    static constexpr std::size_t kMinRotatingRealizations = 32;

    static PumpEnsemble coherent(FieldGrid base);
    static PumpEnsemble static_speckle(FieldGrid base, DiffuserSpec diffuser, std::uint64_t seed);
    static PumpEnsemble rotating(FieldGrid base, DiffuserSpec diffuser, std::size_t realizations, std::uint64_t seed);

    PumpMode mode() const { return mode_; }
    std::size_t size() const { return count_; }
    const FieldGrid& base() const { return base_; }
    const DiffuserSpec& diffuser() const { return diffuser_; }
    GridSpec grid() const { return {base_.width, base_.height, base_.pitch}; }

    FieldGrid realization(std::size_t index) const;
    // Diffuser transmission exp(iφ) of a realization (all ones when coherent).
    std::vector<std::complex<double>> transmission(std::size_t index) const;

  private:
    PumpEnsemble(FieldGrid base, DiffuserSpec diffuser, PumpMode mode, std::size_t count, std::uint64_t seed);

    FieldGrid base_;
    DiffuserSpec diffuser_;
    PumpMode mode_;
    std::size_t count_;
    std::uint64_t seed_;
};

enum class Reduction {
    fixed_tree,    // fixed chunking and pairwise combination; bitwise reproducible
    thread_local_  // per-thread partial sums; order depends on scheduling
};

// Mean far-field intensity over all realizations.
Image ensemble_farfield_intensity(const PumpEnsemble& ensemble, double wavelength, double focal_length,
                                  Reduction reduction = Reduction::fixed_tree);

// Ensemble-averaged degree of coherence μ(Δ) at the crystal plane along the
// grid axes, for lags 0..width/2 (in pixels).
std::vector<double> coherence_profile(const PumpEnsemble& ensemble);

// Coherence length of the ensemble, as the 1/e² half-width ℓ of a Gaussian
// μ(Δ) = exp(-2Δ²/ℓ²) fitted to coherence_profile; the same ℓ_c that appears
// in σ_k² = 1/ℓ_c² + 1/(4ω²). INFINITE for a coherent pump or when μ never
// drops below e⁻² inside the grid.
CoherenceLength ground_truth_lc(const PumpEnsemble& ensemble);

}  // namespace biphoton

#endif  // BIPHOTON_PUMP_HPP
