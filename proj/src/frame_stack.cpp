#include "biphoton/frame_stack.hpp"

#include "biphoton/errors.hpp"
#include "binary_io.hpp"

#include <limits>

namespace biphoton {

namespace {

void write_header(std::ostream& out, const CameraSpec& spec, Mode mode, std::uint32_t frames)
{
    out.write("BPFS", 4);
    detail::put_le<std::uint16_t>(out, kBpfsVersion);
    detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(mode));
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(spec.width));
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(spec.height));
    detail::put_le<std::uint32_t>(out, frames);
    for (double c : spec.pixel_to_coord.c) {
        detail::put_f64(out, c);
    }
}

void write_pixels(std::ostream& out, std::span<const std::uint16_t> pixels)
{
    std::vector<char> buf(pixels.size() * 2);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        buf[2 * i] = static_cast<char>(pixels[i] & 0xff);
        buf[2 * i + 1] = static_cast<char>(pixels[i] >> 8);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void read_pixels(std::istream& in, std::span<std::uint16_t> pixels)
{
    std::vector<unsigned char> buf(pixels.size() * 2);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
        throw FormatError("BPFS: truncated frame data");
    }
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        pixels[i] = static_cast<std::uint16_t>(buf[2 * i] | (buf[2 * i + 1] << 8));
    }
}

std::uint32_t checked_count(std::size_t frames)
{
    if (frames > std::numeric_limits<std::uint32_t>::max()) {
        throw FormatError("BPFS: frame count exceeds u32");
    }
    return static_cast<std::uint32_t>(frames);
}

}  // namespace

void write_frame_stack(const std::filesystem::path& path, const FrameStack& stack)
{
    if (stack.pixels.size() != stack.frame_count * stack.spec.pixel_count()) {
        throw UsageError("frame stack pixel buffer does not match its frame count");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot open " + path.string() + " for writing");
    }
    write_header(out, stack.spec, stack.mode, checked_count(stack.frame_count));
    write_pixels(out, stack.pixels);
    if (!out) {
        throw FormatError("write failed: " + path.string());
    }
}

FrameStack read_frame_stack(const std::filesystem::path& path)
{
    FrameStackReader reader(path);
    FrameStack stack;
    stack.spec = reader.spec();
    stack.mode = reader.mode();
    stack.frame_count = reader.read(reader.frame_count(), stack.pixels);
    return stack;
}

FrameStackWriter::FrameStackWriter(const std::filesystem::path& path, const CameraSpec& spec, Mode mode)
    : out_(path, std::ios::binary), pixels_(spec.pixel_count())
{
    if (!out_) {
        throw FormatError("cannot open " + path.string() + " for writing");
    }
    write_header(out_, spec, mode, 0);
}

FrameStackWriter::~FrameStackWriter()
{
    if (out_.is_open()) {
        try {
            close();
        }
        catch (...) {
        }
    }
}

void FrameStackWriter::append(std::span<const std::uint16_t> frames)
{
    if (frames.size() % pixels_ != 0) {
        throw UsageError("append: buffer is not a whole number of frames");
    }
    write_pixels(out_, frames);
    frames_ += frames.size() / pixels_;
}

void FrameStackWriter::close()
{
    out_.seekp(4 + 2 + 1 + 2 + 2);
    detail::put_le<std::uint32_t>(out_, checked_count(frames_));
    out_.close();
    if (out_.fail()) {
        throw FormatError("BPFS: failed to finalize file");
    }
}

FrameStackReader::FrameStackReader(const std::filesystem::path& path) : in_(path, std::ios::binary)
{
    if (!in_) {
        throw FormatError("cannot open " + path.string());
    }
    detail::expect_magic(in_, "BPFS", path.string());
    const auto version = detail::get_le<std::uint16_t>(in_, "version");
    if (version != kBpfsVersion) {
        throw FormatError(path.string() + ": unsupported BPFS version " + std::to_string(version));
    }
    const auto mode = detail::get_le<std::uint8_t>(in_, "mode");
    if (mode > 1) {
        throw FormatError(path.string() + ": invalid mode byte");
    }
    mode_ = static_cast<Mode>(mode);
    spec_.width = detail::get_le<std::uint16_t>(in_, "width");
    spec_.height = detail::get_le<std::uint16_t>(in_, "height");
    frame_count_ = detail::get_le<std::uint32_t>(in_, "frame count");
    for (double& c : spec_.pixel_to_coord.c) {
        c = detail::get_f64(in_, "calibration");
    }
    if (spec_.width == 0 || spec_.height == 0) {
        throw FormatError(path.string() + ": zero-sized frames");
    }
}

std::size_t FrameStackReader::read(std::size_t max_frames, std::vector<std::uint16_t>& out)
{
    const std::size_t n = std::min(max_frames, frames_remaining());
    out.resize(n * spec_.pixel_count());
    read_pixels(in_, out);
    consumed_ += n;
    return n;
}

}  // namespace biphoton
