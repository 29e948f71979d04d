#include "biphoton/simulator.hpp"

#include "biphoton/errors.hpp"

#include <algorithm>
#include <cmath>

namespace biphoton {

namespace {

void sample_sum_diff(std::size_t n, Rng& rng, double sum_std, double diff_std, std::vector<PairSample>& out)
{
    std::normal_distribution<double> gauss;
    out.resize(n);
    for (auto& p : out) {
        const TransverseVec s{sum_std * gauss(rng), sum_std * gauss(rng)};
        const TransverseVec d{diff_std * gauss(rng), diff_std * gauss(rng)};
        p.photon1 = (s + d) * 0.5;
        p.photon2 = (s - d) * 0.5;
    }
}

}  // namespace

MomentumPairSource::MomentumPairSource(const BiphotonGaussian& model)
{
    model.validate();
    sum_std_ = model.sigma_k;
    diff_std_ = 1.0 / model.sigma_r;
}

void MomentumPairSource::sample(std::size_t n, Rng& rng, std::vector<PairSample>& out) const
{
    sample_sum_diff(n, rng, sum_std_, diff_std_, out);
}

PositionPairSource::PositionPairSource(double sigma_r, double waist, Beta beta)
{
    if (!(sigma_r > 0.0) || !(waist > 0.0) || !(beta.value > 0.0)) {
        throw DomainError("position source needs sigma_r, waist and beta > 0");
    }
    sum_std_ = waist;
    diff_std_ = std::sqrt(beta.value) * sigma_r;
}

PositionPairSource::PositionPairSource(const CrystalParams& crystal, const PumpParams& pump, Beta beta)
    : PositionPairSource(sigma_r_theory(crystal), pump.waist, beta)
{
}

void PositionPairSource::sample(std::size_t n, Rng& rng, std::vector<PairSample>& out) const
{
    sample_sum_diff(n, rng, sum_std_, diff_std_, out);
}

SpecklePairSource::SpecklePairSource(const Image& farfield_intensity, double sigma_r) : image_(farfield_intensity)
{
    if (!(sigma_r > 0.0)) {
        throw DomainError("speckle source needs sigma_r > 0");
    }
    double total = 0.0;
    for (double v : image_.values) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw DomainError("speckle intensity must be finite and non-negative");
        }
        total += v;
    }
    if (!(total > 0.0)) {
        throw DomainError("speckle intensity is identically zero");
    }
    cdf_.resize(image_.values.size());
    double run = 0.0;
    for (std::size_t i = 0; i < cdf_.size(); ++i) {
        run += image_.values[i];
        cdf_[i] = run / total;
    }
    cdf_.back() = 1.0;
    diff_std_ = 1.0 / sigma_r;
}

void SpecklePairSource::sample(std::size_t n, Rng& rng, std::vector<PairSample>& out) const
{
    std::normal_distribution<double> gauss;
    out.resize(n);
    for (auto& p : out) {
        const double u = std::generate_canonical<double, 53>(rng);
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        const auto idx = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(), cdf_.size() - 1));
        const auto ix = static_cast<double>(idx % static_cast<std::size_t>(image_.width));
        const auto iy = static_cast<double>(idx / static_cast<std::size_t>(image_.width));
        const TransverseVec s = image_.axes.map(ix, iy);
        const TransverseVec d{diff_std_ * gauss(rng), diff_std_ * gauss(rng)};
        p.photon1 = (s + d) * 0.5;
        p.photon2 = (s - d) * 0.5;
    }
}

std::vector<PairSample> sample_pairs_momentum(std::size_t n, const BiphotonGaussian& model, std::uint64_t seed)
{
    std::vector<PairSample> out;
    Rng rng = make_rng(seed, Stream::pairs, 0);
    MomentumPairSource(model).sample(n, rng, out);
    return out;
}

std::vector<PairSample> sample_pairs_position(std::size_t n, const CrystalParams& crystal, const PumpParams& pump,
                                              Beta beta, std::uint64_t seed)
{
    std::vector<PairSample> out;
    Rng rng = make_rng(seed, Stream::pairs, 0);
    PositionPairSource(crystal, pump, beta).sample(n, rng, out);
    return out;
}

std::vector<PairSample> sample_pairs_static_speckle(std::size_t n, const Image& speckle_farfield_intensity,
                                                    double sigma_r, std::uint64_t seed)
{
    std::vector<PairSample> out;
    Rng rng = make_rng(seed, Stream::pairs, 0);
    SpecklePairSource(speckle_farfield_intensity, sigma_r).sample(n, rng, out);
    return out;
}

LossStats& LossStats::operator+=(const LossStats& o)
{
    pairs += o.pairs;
    deposited += o.deposited;
    off_sensor += o.off_sensor;
    undetected += o.undetected;
    return *this;
}

void render_frame(std::span<const PairSample> pairs, const CameraSpec& spec, Rng& rng,
                  std::span<std::uint16_t> frame, LossStats& stats)
{
    const std::size_t npix = spec.pixel_count();
    if (frame.size() != npix) {
        throw UsageError("render_frame: output buffer does not match the sensor");
    }
    std::vector<double> grey(npix, 0.0);
    std::bernoulli_distribution detect(spec.quantum_efficiency);
    std::exponential_distribution<double> gain(1.0 / spec.em_gain_mean);
    const bool unity_gain = spec.em_gain_mean == 1.0;

    stats.pairs += pairs.size();
    for (const auto& pair : pairs) {
        for (const TransverseVec& photon : {pair.photon1, pair.photon2}) {
            const auto pix = spec.pixel_of(photon);
            if (!pix) {
                ++stats.off_sensor;
                continue;
            }
            if (!detect(rng)) {
                ++stats.undetected;
                continue;
            }
            ++stats.deposited;
            grey[*pix] += unity_gain ? 1.0 : gain(rng);
        }
    }

    std::normal_distribution<double> noise(spec.readout_noise_mean, spec.readout_noise_std);
    const bool noiseless = spec.readout_noise_std == 0.0;
    for (std::size_t i = 0; i < npix; ++i) {
        const double v = grey[i] + (noiseless ? spec.readout_noise_mean : noise(rng));
        frame[i] = static_cast<std::uint16_t>(std::clamp(std::nearbyint(v), 0.0, 65535.0));
    }
}

RenderResult render_frames(const std::vector<std::vector<PairSample>>& pairs_by_frame, const CameraSpec& spec,
                           Mode mode, std::uint64_t seed)
{
    spec.validate();
    RenderResult result;
    result.stack.spec = spec;
    result.stack.mode = mode;
    result.stack.frame_count = pairs_by_frame.size();
    if (pairs_by_frame.empty()) {
        throw UsageError("render_frames: no frames");
    }
    const std::size_t npix = spec.pixel_count();
    result.stack.pixels.resize(pairs_by_frame.size() * npix);
    std::vector<LossStats> per_frame(pairs_by_frame.size());
    const auto nframes = static_cast<std::int64_t>(pairs_by_frame.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t f = 0; f < nframes; ++f) {
        Rng rng = make_rng(seed, Stream::render, static_cast<std::uint64_t>(f));
        render_frame(pairs_by_frame[f], spec, rng,
                     std::span(result.stack.pixels).subspan(static_cast<std::size_t>(f) * npix, npix),
                     per_frame[f]);
    }
    for (const auto& s : per_frame) {
        result.stats += s;
    }
    return result;
}

FrameSimulator::FrameSimulator(std::shared_ptr<const PairSource> source, CameraSpec spec, std::uint64_t seed,
                               bool fixed_pair_count)
    : source_(std::move(source)), spec_(spec), seed_(seed), fixed_pair_count_(fixed_pair_count)
{
    if (!source_) {
        throw UsageError("FrameSimulator needs a pair source");
    }
    spec_.validate();
}

std::vector<PairSample> FrameSimulator::frame_pairs(std::size_t frame) const
{
    std::size_t count;
    if (fixed_pair_count_) {
        count = static_cast<std::size_t>(std::llround(spec_.pairs_per_frame_mean));
    }
    else {
        Rng count_rng = make_rng(seed_, Stream::pair_count, frame);
        count = spec_.pairs_per_frame_mean > 0.0
                    ? static_cast<std::size_t>(std::poisson_distribution<long long>(spec_.pairs_per_frame_mean)(count_rng))
                    : 0;
    }
    std::vector<PairSample> pairs;
    Rng rng = make_rng(seed_, Stream::pairs, frame);
    source_->sample(count, rng, pairs);
    return pairs;
}

void FrameSimulator::generate(std::size_t first, std::size_t count, std::span<std::uint16_t> out,
                              LossStats* stats) const
{
    const std::size_t npix = spec_.pixel_count();
    if (out.size() < count * npix) {
        throw UsageError("FrameSimulator::generate: output buffer too small");
    }
    std::vector<LossStats> per_frame(count);
    const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t i = 0; i < n; ++i) {
        const std::size_t f = first + static_cast<std::size_t>(i);
        const auto pairs = frame_pairs(f);
        Rng rng = make_rng(seed_, Stream::render, f);
        render_frame(pairs, spec_, rng, out.subspan(static_cast<std::size_t>(i) * npix, npix), per_frame[i]);
    }
    if (stats != nullptr) {
        for (const auto& s : per_frame) {
            *stats += s;
        }
    }
}

FrameStack FrameSimulator::simulate(std::size_t frames, LossStats* stats) const
{
    if (frames == 0) {
        throw ConfigError("frame count must be >= 1");
    }
    FrameStack stack;
    stack.spec = spec_;
    stack.mode = mode();
    stack.frame_count = frames;
    stack.pixels.resize(frames * spec_.pixel_count());
    generate(0, frames, stack.pixels, stats);
    return stack;
}

}  // namespace biphoton
