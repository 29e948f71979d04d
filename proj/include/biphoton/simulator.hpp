#ifndef BIPHOTON_SIMULATOR_HPP
#define BIPHOTON_SIMULATOR_HPP

// Photon-pair sampling from the biphoton model and EMCCD frame rendering.

#include "biphoton/camera.hpp"
#include "biphoton/core_model.hpp"
#include "biphoton/frame_stack.hpp"
#include "biphoton/image.hpp"
#include "biphoton/rng.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

namespace biphoton {

struct PairSample {
    TransverseVec photon1;
    TransverseVec photon2;
};

// Draws pairs in sum/difference coordinates: x1 = (s + d)/2, x2 = (s - d)/2.
class PairSource {
  public:
    virtual ~PairSource() = default;
    virtual Mode mode() const = 0;
    virtual void sample(std::size_t n, Rng& rng, std::vector<PairSample>& out) const = 0;
};

// k1 + k2 ~ N(0, σ_k²), k1 - k2 ~ N(0, 1/σ_r²) per component.
class MomentumPairSource final : public PairSource {
  public:
    explicit MomentumPairSource(const BiphotonGaussian& model);
    Mode mode() const override { return Mode::momentum; }
    void sample(std::size_t n, Rng& rng, std::vector<PairSample>& out) const override;

  private:
    double sum_std_;
    double diff_std_;
};

// r1 - r2 ~ N(0, βσ_r²), r1 + r2 ~ N(0, ω²) per component.
class PositionPairSource final : public PairSource {
  public:
    PositionPairSource(double sigma_r, double waist, Beta beta);
    PositionPairSource(const CrystalParams& crystal, const PumpParams& pump, Beta beta);
    Mode mode() const override { return Mode::position; }
    void sample(std::size_t n, Rng& rng, std::vector<PairSample>& out) const override;

  private:
    double sum_std_;
    double diff_std_;
};

// k1 + k2 drawn from the pixels of a fixed pump far-field intensity (pixel
// centre coordinates, no sub-pixel jitter); k1 - k2 ~ N(0, 1/σ_r²).
class SpecklePairSource final : public PairSource {
  public:
    SpecklePairSource(const Image& farfield_intensity, double sigma_r);
    Mode mode() const override { return Mode::momentum; }
    void sample(std::size_t n, Rng& rng, std::vector<PairSample>& out) const override;

  private:
    Image image_;
    std::vector<double> cdf_;  // normalized cumulative pixel weights
    double diff_std_;
};

std::vector<PairSample> sample_pairs_momentum(std::size_t n, const BiphotonGaussian& model, std::uint64_t seed);
std::vector<PairSample> sample_pairs_position(std::size_t n, const CrystalParams& crystal, const PumpParams& pump,
                                              Beta beta, std::uint64_t seed);
std::vector<PairSample> sample_pairs_static_speckle(std::size_t n, const Image& speckle_farfield_intensity,
                                                    double sigma_r, std::uint64_t seed);

// Photon bookkeeping: every sampled photon ends up in exactly one bucket.
struct LossStats {
    std::uint64_t pairs = 0;
    std::uint64_t deposited = 0;
    std::uint64_t off_sensor = 0;
    std::uint64_t undetected = 0;

    std::uint64_t dropped() const { return off_sensor + undetected; }
    LossStats& operator+=(const LossStats& o);
};

// One frame: Bernoulli(QE) detection, EM gain, readout noise on every pixel,
// rounding and clamping to [0, 65535].
void render_frame(std::span<const PairSample> pairs, const CameraSpec& spec, Rng& rng,
                  std::span<std::uint16_t> frame, LossStats& stats);

struct RenderResult {
    FrameStack stack;
    LossStats stats;
};

// Renders pre-partitioned pairs; frame f uses the stream (seed, render, f).
RenderResult render_frames(const std::vector<std::vector<PairSample>>& pairs_by_frame, const CameraSpec& spec,
                           Mode mode, std::uint64_t seed);

// Frame-indexed simulation: frame f draws its pair count, its pairs and its
// noise from streams keyed by f, so any range of frames can be produced
// independently and in parallel with identical results.
class FrameSimulator {
  public:
    FrameSimulator(std::shared_ptr<const PairSource> source, CameraSpec spec, std::uint64_t seed,
                   bool fixed_pair_count = false);

    Mode mode() const { return source_->mode(); }
    const CameraSpec& spec() const { return spec_; }

    // Pairs of frame f.
    std::vector<PairSample> frame_pairs(std::size_t frame) const;
    // Writes `count` frames starting at `first` into out (count x pixels).
    void generate(std::size_t first, std::size_t count, std::span<std::uint16_t> out, LossStats* stats = nullptr) const;
    FrameStack simulate(std::size_t frames, LossStats* stats = nullptr) const;

  private:
    std::shared_ptr<const PairSource> source_;
    CameraSpec spec_;
    std::uint64_t seed_;
    bool fixed_pair_count_;
};

}  // namespace biphoton

#endif  // BIPHOTON_SIMULATOR_HPP
