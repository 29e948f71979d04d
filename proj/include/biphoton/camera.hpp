#ifndef BIPHOTON_CAMERA_HPP
#define BIPHOTON_CAMERA_HPP

#include "biphoton/core_model.hpp"
#include "biphoton/image.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace biphoton {

enum class Mode : std::uint8_t { momentum = 0, position = 1 };

std::string_view to_string(Mode mode);

// Default optics: 16 µm EMCCD pixels, f3 = 40 mm Fourier lens at 810 nm for
// momentum imaging, and 4x magnification of the crystal output face for
// position imaging.
inline constexpr double kCameraPixelPitch = 16e-6;
inline constexpr double kFourierFocalLength = 40e-3;
inline constexpr double kDownConvertedWavelength = 810e-9;
inline constexpr double kPositionMagnification = 4.0;

// k per pixel = 2π·pixel/(λ·f).
Affine2 momentum_calibration(int width, int height, double pixel_pitch = kCameraPixelPitch,
                             double wavelength = kDownConvertedWavelength, double focal_length = kFourierFocalLength);
Affine2 position_calibration(int width, int height, double pixel_pitch = kCameraPixelPitch,
                             double magnification = kPositionMagnification);

struct CameraSpec {
    int width = 75;
    int height = 75;
    Affine2 pixel_to_coord = momentum_calibration(75, 75);
    double quantum_efficiency = 0.7;
    // Mean grey values per photoelectron. Above 1 each photoelectron draws an
    // exponential grey value (high-gain EM register); exactly 1 deposits one
    // grey level per photoelectron.
    double em_gain_mean = 300.0;
    double readout_noise_mean = 171.0;
    double readout_noise_std = 20.0;
    double pairs_per_frame_mean = 50.0;

    void validate() const;
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    // Row-major pixel index containing the point, if on the sensor.
    std::optional<std::size_t> pixel_of(TransverseVec p) const;
};

CameraSpec default_camera(Mode mode, int width = 75, int height = 75);

}  // namespace biphoton

#endif  // BIPHOTON_CAMERA_HPP
