#ifndef BIPHOTON_PIPELINE_HPP
#define BIPHOTON_PIPELINE_HPP

// Streaming simulate -> accumulate for one scenario, and the fits that turn
// a reconstruction into widths.

#include "biphoton/analysis.hpp"
#include "biphoton/pump.hpp"
#include "biphoton/reconstruction.hpp"
#include "biphoton/scenario.hpp"
#include "biphoton/simulator.hpp"

#include <filesystem>
#include <memory>
#include <optional>

namespace biphoton {

struct RunOptions {
    std::size_t batch_frames = 256;
    KernelPath path = KernelPath::parallel;
    Reduction reduction = Reduction::fixed_tree;
    // Also write the frames as a BPFS stack.
    std::optional<std::filesystem::path> stack_path;
};

struct RunResult {
    Scenario scenario;
    GammaAccumulator accumulator;
    LossStats stats;
    std::optional<Image> pump_farfield;  // static speckle only
    double simulate_seconds = 0.0;
    double accumulate_seconds = 0.0;
};

// Mean far-field intensity of the speckled pump, on k axes.
Image static_speckle_farfield(const Scenario& scenario, Reduction reduction = Reduction::fixed_tree);

// Pair source for a scenario; for static speckle the pump far field is
// returned through `farfield` when given.
std::shared_ptr<const PairSource> make_pair_source(const Scenario& scenario, Image* farfield = nullptr,
                                                   Reduction reduction = Reduction::fixed_tree);

RunResult run_scenario(const Scenario& scenario, const RunOptions& options = {});

// Streams a BPFS file through an accumulator.
GammaAccumulator accumulate_stack_file(const std::filesystem::path& path, std::size_t batch_frames = 256,
                                       KernelPath kernel = KernelPath::parallel);

// Mean frame on the camera axes.
Image mean_frame(const GammaAccumulator& acc);

}  // namespace biphoton

#endif  // BIPHOTON_PIPELINE_HPP
