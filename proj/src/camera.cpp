#include "biphoton/camera.hpp"

#include "biphoton/errors.hpp"
#include "biphoton/units.hpp"

#include <cmath>

namespace biphoton {

std::string_view to_string(Mode mode)
{
    return mode == Mode::momentum ? "momentum" : "position";
}

Affine2 momentum_calibration(int width, int height, double pixel_pitch, double wavelength, double focal_length)
{
    return Affine2::centered(width, height, 2.0 * units::pi * pixel_pitch / (wavelength * focal_length));
}

Affine2 position_calibration(int width, int height, double pixel_pitch, double magnification)
{
    return Affine2::centered(width, height, pixel_pitch / magnification);
}

void CameraSpec::validate() const
{
    if (width < 2 || height < 2 || width > 65535 || height > 65535) {
        throw ConfigError("camera dimensions must be in [2, 65535]");
    }
    if (!pixel_to_coord.invertible()) {
        throw ConfigError("camera calibration is not invertible");
    }
    if (!(quantum_efficiency >= 0.0 && quantum_efficiency <= 1.0)) {
        throw ConfigError("quantum efficiency must lie in [0, 1]");
    }
    if (!(em_gain_mean >= 1.0) || !std::isfinite(em_gain_mean)) {
        throw ConfigError("EM gain must be >= 1");
    }
    if (!(readout_noise_std >= 0.0) || !std::isfinite(readout_noise_mean)) {
        throw ConfigError("readout noise parameters must be finite, std >= 0");
    }
    if (!(pairs_per_frame_mean >= 0.0) || !std::isfinite(pairs_per_frame_mean)) {
        throw ConfigError("pairs per frame must be >= 0");
    }
}

std::optional<std::size_t> CameraSpec::pixel_of(TransverseVec p) const
{
    const auto uv = pixel_to_coord.inverse(p);
    const double fx = std::floor(uv[0] + 0.5);
    const double fy = std::floor(uv[1] + 0.5);
    if (!(fx >= 0.0 && fx < width && fy >= 0.0 && fy < height)) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(fy) * static_cast<std::size_t>(width) + static_cast<std::size_t>(fx);
}

CameraSpec default_camera(Mode mode, int width, int height)
{
    CameraSpec spec;
    spec.width = width;
    spec.height = height;
    spec.pixel_to_coord = mode == Mode::momentum ? momentum_calibration(width, height)
                                                 : position_calibration(width, height);
    return spec;
}

}  // namespace biphoton
