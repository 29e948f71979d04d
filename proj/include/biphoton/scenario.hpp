#ifndef BIPHOTON_SCENARIO_HPP
#define BIPHOTON_SCENARIO_HPP

// A fully resolved simulation run: physics, optics, camera and statistics.

#include "biphoton/camera.hpp"
#include "biphoton/config.hpp"
#include "biphoton/core_model.hpp"
#include "biphoton/pump.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace biphoton {

enum class ScenarioMode { momentum, position, static_speckle };

std::string_view to_string(ScenarioMode mode);
std::optional<ScenarioMode> parse_scenario_mode(std::string_view text);

struct Scenario {
    std::string name = "scenario";
    ScenarioMode mode = ScenarioMode::momentum;
    CrystalParams crystal{0.9e-3, 405e-9, kDefaultAlpha};
    PumpParams pump{89e-6, CoherenceLength::infinite()};
    // Generator widths; the closed-form values from crystal and pump apply
    // when unset.
    std::optional<double> sigma_r;  // [m]
    std::optional<double> sigma_k;  // [rad/m]

    // Static speckle only. The screen correlation follows from the pump
    // coherence length unless given explicitly.
    double phase_std = 2.0;
    int layers = 1;
    std::optional<double> screen_correlation;  // [m]
    GridSpec grid;
    double compare_radius = 24e3;  // speckle comparison disc in k [rad/m]

    int camera_width = 75;
    int camera_height = 75;
    double pixel_pitch = kCameraPixelPitch;
    double focal_length = kFourierFocalLength;
    double dc_wavelength = kDownConvertedWavelength;
    double magnification = kPositionMagnification;
    double quantum_efficiency = 0.7;
    double em_gain = 300.0;
    double readout_noise_mean = 171.0;
    double readout_noise_std = 20.0;
    double pairs_per_frame = 50.0;

    std::size_t frames = 20000;
    std::uint64_t seed = 1;
    bool fixed_pair_count = false;

    Mode camera_mode() const { return mode == ScenarioMode::position ? Mode::position : Mode::momentum; }
    CameraSpec camera() const;
    BiphotonGaussian model() const;
    Beta beta() const { return Beta::from_alpha(crystal.alpha); }
    DiffuserSpec diffuser() const;

    // Throws ConfigError.
    void validate() const;
};

Scenario scenario_from_config(const Config& config);
Scenario load_scenario(const std::filesystem::path& path);
// Config text that parses back to the same scenario.
std::string scenario_to_config(const Scenario& scenario);
std::span<const std::string_view> scenario_keys();

// Coherent pump and the three diffuser settings (ℓ_c = 122, 59, 41 µm), as
// momentum-mode runs on the 75x75 sensor.
std::vector<Scenario> table1_scenarios();
// Position-mode run paired with a momentum row; seed + 1.
Scenario position_twin(const Scenario& momentum_row);

}  // namespace biphoton

#endif  // BIPHOTON_SCENARIO_HPP
