#include "biphoton/scenario.hpp"

#include "biphoton/errors.hpp"
#include "biphoton/units.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace biphoton {

std::string_view to_string(ScenarioMode mode)
{
    switch (mode) {
    case ScenarioMode::momentum:
        return "momentum";
    case ScenarioMode::position:
        return "position";
    case ScenarioMode::static_speckle:
        return "static_speckle";
    }
    return "unknown";
}

std::optional<ScenarioMode> parse_scenario_mode(std::string_view text)
{
    for (auto m : {ScenarioMode::momentum, ScenarioMode::position, ScenarioMode::static_speckle}) {
        if (text == to_string(m)) {
            return m;
        }
    }
    return std::nullopt;
}

CameraSpec Scenario::camera() const
{
    CameraSpec spec;
    spec.width = camera_width;
    spec.height = camera_height;
    spec.pixel_to_coord = camera_mode() == Mode::momentum
                              ? momentum_calibration(camera_width, camera_height, pixel_pitch, dc_wavelength,
                                                     focal_length)
                              : position_calibration(camera_width, camera_height, pixel_pitch, magnification);
    spec.quantum_efficiency = quantum_efficiency;
    spec.em_gain_mean = em_gain;
    spec.readout_noise_mean = readout_noise_mean;
    spec.readout_noise_std = readout_noise_std;
    spec.pairs_per_frame_mean = pairs_per_frame;
    return spec;
}

BiphotonGaussian Scenario::model() const
{
    return {sigma_r.value_or(sigma_r_theory(crystal)), sigma_k.value_or(sigma_k_theory(pump))};
}

DiffuserSpec Scenario::diffuser() const
{
    if (screen_correlation) {
        return {*screen_correlation, phase_std, layers};
    }
    if (pump.coherence_length.is_infinite()) {
        throw ConfigError("static speckle needs a finite pump.coherence_length_um or diffuser.screen_correlation_um");
    }
    return diffuser_for_coherence_length(pump.coherence_length.value(), phase_std, layers);
}

void Scenario::validate() const
{
    auto check = [](bool ok, const std::string& what) {
        if (!ok) {
            throw ConfigError(what);
        }
    };
    check(!name.empty(), "name must not be empty");
    try {
        crystal.validate();
        pump.validate();
        model().validate();
    }
    catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    check(frames > 0, "frames must be at least 1");
    check(camera_width >= 2 && camera_height >= 2 && camera_width <= 4096 && camera_height <= 4096,
          "camera dimensions must be in [2, 4096]");
    check(pixel_pitch > 0.0 && focal_length > 0.0 && dc_wavelength > 0.0 && magnification > 0.0,
          "camera optics must be positive");
    camera().validate();
    if (mode == ScenarioMode::static_speckle) {
        grid.validate();
        check(phase_std >= 0.0 && layers >= 1, "diffuser needs phase_std >= 0 and layers >= 1");
        check(compare_radius > 0.0, "speckle.compare_radius_rad_per_mm must be positive");
        diffuser().validate(grid.pitch);
    }
}

namespace {

constexpr std::array<std::string_view, 32> kKeys = {
    "name",
    "mode",
    "frames",
    "seed",
    "fixed_pair_count",
    "crystal.length_mm",
    "crystal.pump_wavelength_nm",
    "crystal.alpha",
    "pump.waist_um",
    "pump.coherence_length_um",
    "biphoton.sigma_r_um",
    "biphoton.sigma_k_rad_per_mm",
    "diffuser.phase_std_rad",
    "diffuser.layers",
    "diffuser.screen_correlation_um",
    "grid.width",
    "grid.height",
    "grid.pitch_um",
    "speckle.compare_radius_rad_per_mm",
    "camera.width",
    "camera.height",
    "camera.pixel_pitch_um",
    "camera.focal_length_mm",
    "camera.wavelength_nm",
    "camera.magnification",
    "camera.quantum_efficiency",
    "camera.em_gain",
    "camera.readout_noise_mean",
    "camera.readout_noise_std",
    "camera.pairs_per_frame",
    "camera.size",  // shorthand for square sensors
    "grid.size",    // shorthand for square grids
};

}  // namespace

std::span<const std::string_view> scenario_keys()
{
    return kKeys;
}

Scenario scenario_from_config(const Config& cfg)
{
    cfg.reject_unknown(kKeys);
    Scenario s;
    auto line_error = [&](std::string_view key, const std::string& what) {
        return ConfigError(std::string(key) + ": " + what, cfg.line_of(key));
    };
    auto positive = [&](std::string_view key, int shift, double& out) {
        if (const auto v = cfg.number(key, shift)) {
            if (!(*v > 0.0)) {
                throw line_error(key, "must be positive");
            }
            out = *v;
        }
    };
    auto non_negative = [&](std::string_view key, double& out) {
        if (const auto v = cfg.number(key)) {
            if (*v < 0.0) {
                throw line_error(key, "must not be negative");
            }
            out = *v;
        }
    };
    auto dimension = [&](std::string_view key, int& out) {
        if (const auto v = cfg.integer(key)) {
            if (*v < 2 || *v > 4096) {
                throw line_error(key, "must be in [2, 4096]");
            }
            out = static_cast<int>(*v);
        }
    };

    if (auto v = cfg.text("name")) {
        s.name = *v;
    }
    if (auto v = cfg.text("mode")) {
        const auto m = parse_scenario_mode(*v);
        if (!m) {
            throw line_error("mode", "expected momentum, position or static_speckle, got '" + *v + "'");
        }
        s.mode = *m;
    }
    if (auto v = cfg.integer("frames")) {
        if (*v < 1) {
            throw line_error("frames", "must be at least 1");
        }
        s.frames = static_cast<std::size_t>(*v);
    }
    if (auto v = cfg.integer("seed")) {
        if (*v < 0) {
            throw line_error("seed", "must not be negative");
        }
        s.seed = static_cast<std::uint64_t>(*v);
    }
    if (auto v = cfg.boolean("fixed_pair_count")) {
        s.fixed_pair_count = *v;
    }

    positive("crystal.length_mm", -3, s.crystal.length);
    positive("crystal.pump_wavelength_nm", -9, s.crystal.pump_wavelength);
    positive("crystal.alpha", 0, s.crystal.alpha);
    positive("pump.waist_um", -6, s.pump.waist);
    if (auto v = cfg.number_or_inf("pump.coherence_length_um", -6)) {
        if (!(*v > 0.0)) {
            throw line_error("pump.coherence_length_um", "must be positive or inf");
        }
        s.pump.coherence_length = CoherenceLength::meters(*v);
    }
    double tmp = 0.0;
    if (cfg.has("biphoton.sigma_r_um")) {
        positive("biphoton.sigma_r_um", -6, tmp);
        s.sigma_r = tmp;
    }
    if (cfg.has("biphoton.sigma_k_rad_per_mm")) {
        positive("biphoton.sigma_k_rad_per_mm", 3, tmp);
        s.sigma_k = tmp;
    }

    non_negative("diffuser.phase_std_rad", s.phase_std);
    if (auto v = cfg.integer("diffuser.layers")) {
        if (*v < 1 || *v > 64) {
            throw line_error("diffuser.layers", "must be in [1, 64]");
        }
        s.layers = static_cast<int>(*v);
    }
    if (cfg.has("diffuser.screen_correlation_um")) {
        positive("diffuser.screen_correlation_um", -6, tmp);
        s.screen_correlation = tmp;
    }
    dimension("grid.size", s.grid.width);
    if (cfg.has("grid.size")) {
        s.grid.height = s.grid.width;
    }
    dimension("grid.width", s.grid.width);
    dimension("grid.height", s.grid.height);
    positive("grid.pitch_um", -6, s.grid.pitch);
    positive("speckle.compare_radius_rad_per_mm", 3, s.compare_radius);

    dimension("camera.size", s.camera_width);
    if (cfg.has("camera.size")) {
        s.camera_height = s.camera_width;
    }
    dimension("camera.width", s.camera_width);
    dimension("camera.height", s.camera_height);
    positive("camera.pixel_pitch_um", -6, s.pixel_pitch);
    positive("camera.focal_length_mm", -3, s.focal_length);
    positive("camera.wavelength_nm", -9, s.dc_wavelength);
    positive("camera.magnification", 0, s.magnification);
    non_negative("camera.quantum_efficiency", s.quantum_efficiency);
    positive("camera.em_gain", 0, s.em_gain);
    non_negative("camera.readout_noise_mean", s.readout_noise_mean);
    non_negative("camera.readout_noise_std", s.readout_noise_std);
    non_negative("camera.pairs_per_frame", s.pairs_per_frame);

    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    const Config cfg = Config::load(path);
    try {
        return scenario_from_config(cfg);
    }
    catch (const ConfigError& e) {
        throw ConfigError(path.string(), e);
    }
}


std::string scenario_to_config(const Scenario& s)
{
    std::ostringstream out;
    out << "name = " << s.name << '\n';
    out << "mode = " << to_string(s.mode) << '\n';
    out << "frames = " << s.frames << '\n';
    out << "seed = " << s.seed << '\n';
    out << "fixed_pair_count = " << (s.fixed_pair_count ? "true" : "false") << '\n';
    out << "crystal.length_mm = " << decimal_text(s.crystal.length, 3) << '\n';
    out << "crystal.pump_wavelength_nm = " << decimal_text(s.crystal.pump_wavelength, 9) << '\n';
    out << "crystal.alpha = " << decimal_text(s.crystal.alpha) << '\n';
    out << "pump.waist_um = " << decimal_text(s.pump.waist, 6) << '\n';
    if (s.pump.coherence_length.is_infinite()) {
        out << "pump.coherence_length_um = inf\n";
    }
    else {
        out << "pump.coherence_length_um = " << decimal_text(s.pump.coherence_length.value(), 6) << '\n';
    }
    if (s.sigma_r) {
        out << "biphoton.sigma_r_um = " << decimal_text(*s.sigma_r, 6) << '\n';
    }
    if (s.sigma_k) {
        out << "biphoton.sigma_k_rad_per_mm = " << decimal_text(*s.sigma_k, -3) << '\n';
    }
    out << "diffuser.phase_std_rad = " << decimal_text(s.phase_std) << '\n';
    out << "diffuser.layers = " << s.layers << '\n';
    if (s.screen_correlation) {
        out << "diffuser.screen_correlation_um = " << decimal_text(*s.screen_correlation, 6) << '\n';
    }
    out << "grid.width = " << s.grid.width << '\n';
    out << "grid.height = " << s.grid.height << '\n';
    out << "grid.pitch_um = " << decimal_text(s.grid.pitch, 6) << '\n';
    out << "speckle.compare_radius_rad_per_mm = " << decimal_text(s.compare_radius, -3) << '\n';
    out << "camera.width = " << s.camera_width << '\n';
    out << "camera.height = " << s.camera_height << '\n';
    out << "camera.pixel_pitch_um = " << decimal_text(s.pixel_pitch, 6) << '\n';
    out << "camera.focal_length_mm = " << decimal_text(s.focal_length, 3) << '\n';
    out << "camera.wavelength_nm = " << decimal_text(s.dc_wavelength, 9) << '\n';
    out << "camera.magnification = " << decimal_text(s.magnification) << '\n';
    out << "camera.quantum_efficiency = " << decimal_text(s.quantum_efficiency) << '\n';
    out << "camera.em_gain = " << decimal_text(s.em_gain) << '\n';
    out << "camera.readout_noise_mean = " << decimal_text(s.readout_noise_mean) << '\n';
    out << "camera.readout_noise_std = " << decimal_text(s.readout_noise_std) << '\n';
    out << "camera.pairs_per_frame = " << decimal_text(s.pairs_per_frame) << '\n';
    return out.str();
}

std::vector<Scenario> table1_scenarios()
{
    const std::array<double, 4> lc = {std::numeric_limits<double>::infinity(), 122e-6, 59e-6, 41e-6};
    std::vector<Scenario> rows;
    for (std::size_t i = 0; i < lc.size(); ++i) {
        Scenario s;
        s.name = "table1_row" + std::to_string(i + 1);
        s.mode = ScenarioMode::momentum;
        s.pump.coherence_length = CoherenceLength::meters(lc[i]);
        s.seed = 1000 * (i + 1) + 1;
        rows.push_back(s);
    }
    return rows;
}

Scenario position_twin(const Scenario& row)
{
    Scenario s = row;
    s.name = row.name + "_position";
    s.mode = ScenarioMode::position;
    s.sigma_k.reset();
    s.seed = row.seed + 1;
    return s;
}

}  // namespace biphoton
