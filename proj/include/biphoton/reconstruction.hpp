#ifndef BIPHOTON_RECONSTRUCTION_HPP
#define BIPHOTON_RECONSTRUCTION_HPP

// Estimation of the joint probability distribution Γ from camera frames by
// intensity covariance, and its four projections.
//
// Γ(i, j) = <I_i I_j> - <I_i><I_j> over the frame stack, stored as the
// packed lower triangle (see kernels.hpp).

#include "biphoton/camera.hpp"
#include "biphoton/frame_stack.hpp"
#include "biphoton/image.hpp"
#include "biphoton/kernels.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace biphoton {

enum class KernelPath { serial, parallel };

// Running sums of I and I·Iᵀ. Single writer; accumulators over disjoint
// frame subsets merge exactly because all partial sums are integers.
class GammaAccumulator {
  public:
    GammaAccumulator(const CameraSpec& spec, Mode mode);

    void accumulate(std::span<const std::uint16_t> frame);
    // `frames` holds `count` consecutive frames.
    void accumulate_batch(std::span<const std::uint16_t> frames, std::size_t count,
                          KernelPath path = KernelPath::parallel);
    void accumulate(const FrameStack& stack, KernelPath path = KernelPath::parallel);
    void merge(const GammaAccumulator& other);

    const CameraSpec& spec() const { return spec_; }
    Mode mode() const { return mode_; }
    std::size_t frame_count() const { return frame_count_; }
    std::span<const double> sum_i() const { return sum_i_; }
    std::span<const double> sum_ii() const { return sum_ii_; }

    friend bool operator==(const GammaAccumulator&, const GammaAccumulator&);

  private:
    CameraSpec spec_;
    Mode mode_;
    std::size_t frame_count_ = 0;
    std::vector<double> sum_i_;
    std::vector<double> sum_ii_;
};

struct JointDistribution {
    CameraSpec spec;
    Mode mode = Mode::momentum;
    std::size_t frame_count = 0;
    // Packed covariance. Unclipped unless `clipped` (set when read back from
    // a file that stored the clipped export).
    std::vector<double> values;
    bool clipped = false;

    std::size_t pixels() const { return spec.pixel_count(); }
    double at(std::size_t i, std::size_t j) const
    {
        return i >= j ? values[kernels::tri_index(i, j)] : values[kernels::tri_index(j, i)];
    }
    double clipped_at(std::size_t i, std::size_t j) const;
    // Export form: negative entries set to zero.
    std::vector<double> clipped_values() const;
};

// Requires frame_count >= 2.
JointDistribution finalize(const GammaAccumulator& acc);

enum class ProjectionKind : std::uint8_t { sum = 0, minus = 1, xplus = 2, xminus = 3 };

std::string_view to_string(ProjectionKind kind);
std::optional<ProjectionKind> parse_projection_kind(std::string_view text);

struct ProjectionOptions {
    // Include same-pixel (i == j) entries, which carry the intensity variance.
    bool include_diagonal = false;
    bool clip_negative = false;
    KernelPath path = KernelPath::parallel;
};

struct ProjectionImage {
    ProjectionKind kind = ProjectionKind::sum;
    Mode mode = Mode::momentum;
    Image image;
    // 1 where the bin received at least one pixel pair (SUM/MINUS) or has a
    // nonzero denominator (XPLUS/XMINUS).
    std::vector<std::uint8_t> valid;
    // 1 where same-pixel entries of Γ land (or would land if included).
    std::vector<std::uint8_t> diagonal_affected;
};

// SUM: (2W-1) x (2H-1), bin (x1+x2, y1+y2), axes in units of k1+k2.
ProjectionImage project_sum(const JointDistribution& gamma, const ProjectionOptions& options = {});
// MINUS: (2W-1) x (2H-1), bin (x1-x2, y1-y2) shifted to the centre.
ProjectionImage project_minus(const JointDistribution& gamma, const ProjectionOptions& options = {});
// XPLUS (momentum only): H x H conditional on photon 2 in the column
// mirrored through k_x = 0. Image column is y2, row is y1.
ProjectionImage project_xplus(const JointDistribution& gamma, const ProjectionOptions& options = {});
// XMINUS (position only): H x H conditional on photon 2 one column right.
ProjectionImage project_xminus(const JointDistribution& gamma, const ProjectionOptions& options = {});
ProjectionImage project(const JointDistribution& gamma, ProjectionKind kind, const ProjectionOptions& options = {});

// Column holding k_x = -k_x(x) for each column x, or -1 when it falls off
// the sensor. Requires an axis-aligned calibration.
std::vector<int> mirror_columns(const CameraSpec& spec);

// BPGM layout (all little-endian):
//   "BPGM"  magic
//   u16     version (1)
//   u8      mode
//   u16     width
//   u16     height
//   u8      flags (bit 0: negative entries clipped)
//   u32     frame_count
//   6 x f64 calibration
//   P(P+1)/2 x f64 packed lower triangle, row-major
inline constexpr std::uint16_t kBpgmVersion = 1;
inline constexpr std::size_t kBpgmHeaderSize = 64;

void write_gamma(const std::filesystem::path& path, const JointDistribution& gamma, bool clip = true);
JointDistribution read_gamma(const std::filesystem::path& path);

// CSV with a metadata comment line followed by
//   ix,iy,x,y,value,valid,diagonal_affected
void write_projection_csv(const std::filesystem::path& path, const ProjectionImage& projection);
ProjectionImage read_projection_csv(const std::filesystem::path& path);

}  // namespace biphoton

#endif  // BIPHOTON_RECONSTRUCTION_HPP
