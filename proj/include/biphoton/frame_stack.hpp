#ifndef BIPHOTON_FRAME_STACK_HPP
#define BIPHOTON_FRAME_STACK_HPP

// Stack of 16-bit camera frames and its binary container.
//
// BPFS layout (all little-endian):
//   "BPFS"  magic
//   u16     version (1)
//   u8      mode (0 = momentum, 1 = position)
//   u16     width
//   u16     height
//   u32     frame_count
//   6 x f64 pixel -> coordinate affine calibration
//   frame_count x height x width u16, row-major
//
// Only geometry and calibration are persisted; gain/noise settings of a
// CameraSpec read back from a file are defaults.

#include "biphoton/camera.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

namespace biphoton {

struct FrameStack {
    CameraSpec spec;
    Mode mode = Mode::momentum;
    std::size_t frame_count = 0;
    std::vector<std::uint16_t> pixels;

    std::span<const std::uint16_t> frame(std::size_t index) const
    {
        return std::span(pixels).subspan(index * spec.pixel_count(), spec.pixel_count());
    }
};

inline constexpr std::uint16_t kBpfsVersion = 1;
inline constexpr std::size_t kBpfsHeaderSize = 63;

void write_frame_stack(const std::filesystem::path& path, const FrameStack& stack);
FrameStack read_frame_stack(const std::filesystem::path& path);

// Incremental writer; the frame count in the header is patched by close().
class FrameStackWriter {
  public:
    FrameStackWriter(const std::filesystem::path& path, const CameraSpec& spec, Mode mode);
    ~FrameStackWriter();
    FrameStackWriter(const FrameStackWriter&) = delete;
    FrameStackWriter& operator=(const FrameStackWriter&) = delete;

    void append(std::span<const std::uint16_t> frames);
    void close();
    std::size_t frames_written() const { return frames_; }

  private:
    std::ofstream out_;
    std::size_t pixels_;
    std::size_t frames_ = 0;
};

// Incremental reader for stacks too large to hold in memory.
class FrameStackReader {
  public:
    explicit FrameStackReader(const std::filesystem::path& path);

    const CameraSpec& spec() const { return spec_; }
    Mode mode() const { return mode_; }
    std::size_t frame_count() const { return frame_count_; }
    std::size_t frames_remaining() const { return frame_count_ - consumed_; }

    // Reads up to max_frames frames into `out` (resized); returns the count.
    std::size_t read(std::size_t max_frames, std::vector<std::uint16_t>& out);

  private:
    std::ifstream in_;
    CameraSpec spec_;
    Mode mode_ = Mode::momentum;
    std::size_t frame_count_ = 0;
    std::size_t consumed_ = 0;
};

}  // namespace biphoton

#endif  // BIPHOTON_FRAME_STACK_HPP
