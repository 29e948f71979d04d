#include "biphoton/pipeline.hpp"

#include "biphoton/errors.hpp"
#include "biphoton/frame_stack.hpp"

#include <chrono>

namespace biphoton {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Image static_speckle_farfield(const Scenario& s, Reduction reduction)
{
    const FieldGrid beam = make_gaussian_beam(s.grid, s.pump.waist);
    const PumpEnsemble ensemble = PumpEnsemble::static_speckle(beam, s.diffuser(), s.seed);
    // The focal length only sets the camera-plane pitch; k axes are fixed by
    // the crystal-plane grid.
    return ensemble_farfield_intensity(ensemble, s.crystal.pump_wavelength, s.focal_length, reduction);
}

std::shared_ptr<const PairSource> make_pair_source(const Scenario& s, Image* farfield, Reduction reduction)
{
    const BiphotonGaussian model = s.model();
    switch (s.mode) {
    case ScenarioMode::momentum:
        return std::make_shared<MomentumPairSource>(model);
    case ScenarioMode::position:
        return std::make_shared<PositionPairSource>(model.sigma_r, s.pump.waist, s.beta());
    case ScenarioMode::static_speckle: {
        Image ff = static_speckle_farfield(s, reduction);
        auto source = std::make_shared<SpecklePairSource>(ff, model.sigma_r);
        if (farfield) {
            *farfield = std::move(ff);
        }
        return source;
    }
    }
    throw UsageError("unknown scenario mode");
}

RunResult run_scenario(const Scenario& s, const RunOptions& options)
{
    s.validate();
    const CameraSpec spec = s.camera();
    RunResult result{s, GammaAccumulator(spec, s.camera_mode()), {}, std::nullopt, 0.0, 0.0};
    Image farfield;
    const auto source = make_pair_source(s, &farfield, options.reduction);
    if (s.mode == ScenarioMode::static_speckle) {
        result.pump_farfield = std::move(farfield);
    }
    const FrameSimulator sim(source, spec, s.seed, s.fixed_pair_count);

    std::optional<FrameStackWriter> writer;
    if (options.stack_path) {
        writer.emplace(*options.stack_path, spec, s.camera_mode());
    }
    const std::size_t batch = std::max<std::size_t>(1, options.batch_frames);
    std::vector<std::uint16_t> frames;
    for (std::size_t f0 = 0; f0 < s.frames; f0 += batch) {
        const std::size_t n = std::min(batch, s.frames - f0);
        frames.resize(n * spec.pixel_count());
        auto t0 = std::chrono::steady_clock::now();
        sim.generate(f0, n, frames, &result.stats);
        result.simulate_seconds += seconds_since(t0);
        if (writer) {
            writer->append(frames);
        }
        t0 = std::chrono::steady_clock::now();
        result.accumulator.accumulate_batch(frames, n, options.path);
        result.accumulate_seconds += seconds_since(t0);
    }
    if (writer) {
        writer->close();
    }
    return result;
}

GammaAccumulator accumulate_stack_file(const std::filesystem::path& path, std::size_t batch_frames,
                                       KernelPath kernel)
{
    FrameStackReader reader(path);
    GammaAccumulator acc(reader.spec(), reader.mode());
    std::vector<std::uint16_t> frames;
    while (reader.frames_remaining() > 0) {
        const std::size_t n = reader.read(std::max<std::size_t>(1, batch_frames), frames);
        acc.accumulate_batch(frames, n, kernel);
    }
    return acc;
}

Image mean_frame(const GammaAccumulator& acc)
{
    if (acc.frame_count() == 0) {
        throw UsageError("mean frame of an empty accumulator");
    }
    Image img(acc.spec().width, acc.spec().height, acc.spec().pixel_to_coord);
    const double n = static_cast<double>(acc.frame_count());
    for (std::size_t k = 0; k < img.size(); ++k) {
        img.values[k] = acc.sum_i()[k] / n;
    }
    return img;
}

}  // namespace biphoton
