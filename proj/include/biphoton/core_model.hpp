#ifndef BIPHOTON_CORE_MODEL_HPP
#define BIPHOTON_CORE_MODEL_HPP

// Closed-form double-Gaussian biphoton model for SPDC pumped by a
// Gaussian-Schell beam. All densities are unnormalized (peak value 1).

#include <cmath>
#include <limits>

namespace biphoton {

inline constexpr double kDefaultAlpha = 0.455;

// Transverse 2-vector; metres in position mode, rad/m in momentum mode.
struct TransverseVec {
    double x = 0.0;
    double y = 0.0;

    constexpr TransverseVec operator+(TransverseVec o) const { return {x + o.x, y + o.y}; }
    constexpr TransverseVec operator-(TransverseVec o) const { return {x - o.x, y - o.y}; }
    constexpr TransverseVec operator*(double s) const { return {x * s, y * s}; }
    constexpr double norm2() const { return x * x + y * y; }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

// Pump transverse coherence length. Infinity (a fully coherent pump) is a
// distinct state rather than a large number, so formulas can take the exact
// limit.
class CoherenceLength {
  public:
    static constexpr CoherenceLength infinite() { return CoherenceLength(); }
    static CoherenceLength meters(double value);

    constexpr bool is_infinite() const { return infinite_; }
    // Throws UsageError when infinite.
    double value() const;
    // 1/ℓ², exactly 0 for an infinite length.
    constexpr double inverse_square() const { return infinite_ ? 0.0 : 1.0 / (value_ * value_); }

    friend constexpr bool operator==(const CoherenceLength&, const CoherenceLength&) = default;

  private:
    constexpr CoherenceLength() = default;
    bool infinite_ = true;
    double value_ = std::numeric_limits<double>::infinity();
};

struct CrystalParams {
    double length = 0.0;           // L [m]
    double pump_wavelength = 0.0;  // λ_p [m]
    double alpha = kDefaultAlpha;

    void validate() const;
};

struct PumpParams {
    // 1/e² intensity radius [m]; the pump amplitude is exp(-|r|²/ω²) and its
    // coherent far-field intensity has standard deviation 1/ω.
    double waist = 0.0;
    CoherenceLength coherence_length = CoherenceLength::infinite();

    void validate() const;
};

struct BiphotonGaussian {
    double sigma_r = 0.0;  // position-correlation width [m]
    double sigma_k = 0.0;  // momentum-correlation width [rad/m]

    void validate() const;
};

// β = (α + 1/α)/α, the widening of the minus-coordinate peak in the crystal
// image plane.
struct Beta {
    double value = 0.0;

    static Beta from_alpha(double alpha);
};

// σ_r = sqrt(α L λ_p / 2π).
double sigma_r_theory(const CrystalParams& crystal);

// σ_k = sqrt(1/ℓ_c² + 1/(4ω²)); 1/(2ω) for an infinite coherence length.
double sigma_k_theory(const PumpParams& pump);

// Schmidt number computed directly from crystal and pump parameters, in the
// expanded form that never forms σ_r·σ_k explicitly. Always >= 1.
double schmidt_theory(const CrystalParams& crystal, const PumpParams& pump);

BiphotonGaussian biphoton_from_params(const CrystalParams& crystal, const PumpParams& pump);

// Γ(k1,k2) = exp(-σ_r²|k1-k2|²/2) · exp(-|k1+k2|²/(2σ_k²)).
double gamma_momentum(TransverseVec k1, TransverseVec k2, const BiphotonGaussian& model);

// Γ(r1,r2) = exp(-|r1-r2|²/(2βσ_r²)) · exp(-|r1+r2|²/(2ω²)).
// The pair midpoint follows the pump intensity exp(-2|r|²/ω²), which puts
// the sum coordinate at standard deviation ω.
double gamma_position(TransverseVec r1, TransverseVec r2, const CrystalParams& crystal,
                      const PumpParams& pump, Beta beta);

// Marginal of gamma_momentum at fixed k1+k2: exp(-|k+|²/(2σ_k²)).
double analytic_sum_projection(TransverseVec k_plus, const BiphotonGaussian& model);

// Marginal of gamma_position at fixed r1-r2: exp(-|r-|²/(2βσ_r²)).
double analytic_minus_projection(TransverseVec r_minus, const CrystalParams& crystal, Beta beta);

// Gaussian-Schell cross-spectral density of the pump in momentum space,
// exp(-ω²|k-k'|²/2 - |k+k'|²/(8σ_k²)).
double pump_csd_momentum(TransverseVec k, TransverseVec kp, const PumpParams& pump);

}  // namespace biphoton

#endif  // BIPHOTON_CORE_MODEL_HPP
