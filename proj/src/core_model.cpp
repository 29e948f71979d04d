#include "biphoton/core_model.hpp"

#include "biphoton/errors.hpp"
#include "biphoton/units.hpp"

#include <cmath>
#include <string>

namespace biphoton {

namespace {

void require_positive(double v, const char* name)
{
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError(std::string(name) + " must be finite and > 0, got " + std::to_string(v));
    }
}

}  // namespace

CoherenceLength CoherenceLength::meters(double value)
{
    if (std::isinf(value) && value > 0.0) {
        return infinite();
    }
    require_positive(value, "coherence length");
    CoherenceLength lc;
    lc.infinite_ = false;
    lc.value_ = value;
    return lc;
}

double CoherenceLength::value() const
{
    if (infinite_) {
        throw UsageError("coherence length is infinite");
    }
    return value_;
}

void CrystalParams::validate() const
{
    require_positive(length, "crystal length");
    require_positive(pump_wavelength, "pump wavelength");
    require_positive(alpha, "alpha");
}

void PumpParams::validate() const
{
    require_positive(waist, "pump waist");
}

void BiphotonGaussian::validate() const
{
    require_positive(sigma_r, "sigma_r");
    require_positive(sigma_k, "sigma_k");
}

Beta Beta::from_alpha(double alpha)
{
    require_positive(alpha, "alpha");
    return Beta{(alpha + 1.0 / alpha) / alpha};
}

double sigma_r_theory(const CrystalParams& crystal)
{
    crystal.validate();
    return std::sqrt(crystal.alpha * crystal.length * crystal.pump_wavelength / (2.0 * units::pi));
}

double sigma_k_theory(const PumpParams& pump)
{
    pump.validate();
    const double w = pump.waist;
    return std::sqrt(pump.coherence_length.inverse_square() + 1.0 / (4.0 * w * w));
}

double schmidt_theory(const CrystalParams& crystal, const PumpParams& pump)
{
    crystal.validate();
    pump.validate();
    const double w = pump.waist;
    const double a_l_lambda = crystal.alpha * crystal.length * crystal.pump_wavelength;
    const double root_2pi = std::sqrt(2.0 * units::pi);

    double first;
    double second;
    if (pump.coherence_length.is_infinite()) {
        // ℓ/sqrt(ℓ² + 4ω²) -> 1
        first = 2.0 * w * root_2pi / std::sqrt(a_l_lambda);
        second = std::sqrt(a_l_lambda) / (2.0 * w * root_2pi);
    }
    else {
        const double lc = pump.coherence_length.value();
        const double spread = lc * lc + 4.0 * w * w;
        first = 2.0 * w * lc * root_2pi / std::sqrt(a_l_lambda * spread);
        second = std::sqrt(a_l_lambda * spread) / (2.0 * w * lc * root_2pi);
    }
    const double bracket = first + second;
    return 0.25 * bracket * bracket;
}

BiphotonGaussian biphoton_from_params(const CrystalParams& crystal, const PumpParams& pump)
{
    return BiphotonGaussian{sigma_r_theory(crystal), sigma_k_theory(pump)};
}

double gamma_momentum(TransverseVec k1, TransverseVec k2, const BiphotonGaussian& model)
{
    const double sr2 = model.sigma_r * model.sigma_r;
    const double sk2 = model.sigma_k * model.sigma_k;
    return std::exp(-0.5 * sr2 * (k1 - k2).norm2()) * std::exp(-(k1 + k2).norm2() / (2.0 * sk2));
}

double gamma_position(TransverseVec r1, TransverseVec r2, const CrystalParams& crystal,
                      const PumpParams& pump, Beta beta)
{
    const double sr = sigma_r_theory(crystal);
    const double w2 = pump.waist * pump.waist;
    return std::exp(-(r1 - r2).norm2() / (2.0 * beta.value * sr * sr)) *
           std::exp(-(r1 + r2).norm2() / (2.0 * w2));
}

double analytic_sum_projection(TransverseVec k_plus, const BiphotonGaussian& model)
{
    return std::exp(-k_plus.norm2() / (2.0 * model.sigma_k * model.sigma_k));
}

double analytic_minus_projection(TransverseVec r_minus, const CrystalParams& crystal, Beta beta)
{
    const double sr = sigma_r_theory(crystal);
    return std::exp(-r_minus.norm2() / (2.0 * beta.value * sr * sr));
}

double pump_csd_momentum(TransverseVec k, TransverseVec kp, const PumpParams& pump)
{
    const double sk = sigma_k_theory(pump);
    const double w2 = pump.waist * pump.waist;
    return std::exp(-0.5 * w2 * (k - kp).norm2() - (k + kp).norm2() / (8.0 * sk * sk));
}

}  // namespace biphoton
