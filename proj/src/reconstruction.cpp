#include "biphoton/reconstruction.hpp"

#include "biphoton/errors.hpp"
#include "binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace biphoton {

GammaAccumulator::GammaAccumulator(const CameraSpec& spec, Mode mode)
    : spec_(spec), mode_(mode), sum_i_(spec.pixel_count(), 0.0), sum_ii_(kernels::tri_size(spec.pixel_count()), 0.0)
{
    if (spec.width <= 0 || spec.height <= 0) {
        throw UsageError("accumulator needs a non-empty sensor");
    }
}

void GammaAccumulator::accumulate(std::span<const std::uint16_t> frame)
{
    if (frame.size() != spec_.pixel_count()) {
        throw UsageError("accumulate: frame has " + std::to_string(frame.size()) + " pixels, expected " +
                         std::to_string(spec_.pixel_count()));
    }
    kernels::serial::accumulate(sum_i_, sum_ii_, frame, frame.size(), 1);
    ++frame_count_;
}

void GammaAccumulator::accumulate_batch(std::span<const std::uint16_t> frames, std::size_t count, KernelPath path)
{
    const std::size_t p = spec_.pixel_count();
    if (frames.size() != count * p) {
        throw UsageError("accumulate_batch: buffer is not " + std::to_string(count) + " frames of " +
                         std::to_string(p) + " pixels");
    }
    if (path == KernelPath::serial) {
        kernels::serial::accumulate(sum_i_, sum_ii_, frames, p, count);
    }
    else {
        kernels::parallel::accumulate(sum_i_, sum_ii_, frames, p, count);
    }
    frame_count_ += count;
}

void GammaAccumulator::accumulate(const FrameStack& stack, KernelPath path)
{
    if (stack.spec.width != spec_.width || stack.spec.height != spec_.height) {
        throw UsageError("accumulate: frame stack geometry differs from the accumulator");
    }
    if (stack.mode != mode_) {
        throw ModeMismatchError("accumulate: frame stack mode differs from the accumulator");
    }
    accumulate_batch(stack.pixels, stack.frame_count, path);
}

void GammaAccumulator::merge(const GammaAccumulator& other)
{
    if (other.spec_.width != spec_.width || other.spec_.height != spec_.height) {
        throw UsageError("merge: accumulators have different sensor geometry");
    }
    if (other.mode_ != mode_) {
        throw ModeMismatchError("merge: accumulators have different modes");
    }
    for (std::size_t k = 0; k < sum_i_.size(); ++k) {
        sum_i_[k] += other.sum_i_[k];
    }
    const std::size_t n = sum_ii_.size();
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < n; ++k) {
        sum_ii_[k] += other.sum_ii_[k];
    }
    frame_count_ += other.frame_count_;
}

bool operator==(const GammaAccumulator& a, const GammaAccumulator& b)
{
    return a.spec_.width == b.spec_.width && a.spec_.height == b.spec_.height && a.mode_ == b.mode_ &&
           a.frame_count_ == b.frame_count_ && a.sum_i_ == b.sum_i_ && a.sum_ii_ == b.sum_ii_;
}

double JointDistribution::clipped_at(std::size_t i, std::size_t j) const
{
    return std::max(at(i, j), 0.0);
}

std::vector<double> JointDistribution::clipped_values() const
{
    std::vector<double> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(), [](double v) { return std::max(v, 0.0); });
    return out;
}

JointDistribution finalize(const GammaAccumulator& acc)
{
    if (acc.frame_count() < 2) {
        throw UsageError("finalize needs at least 2 frames, have " + std::to_string(acc.frame_count()));
    }
    JointDistribution g;
    g.spec = acc.spec();
    g.mode = acc.mode();
    g.frame_count = acc.frame_count();
    const std::size_t p = acc.spec().pixel_count();
    const double n = static_cast<double>(acc.frame_count());
    std::vector<double> mean(p);
    for (std::size_t i = 0; i < p; ++i) {
        mean[i] = acc.sum_i()[i] / n;
    }
    g.values.resize(acc.sum_ii().size());
    const auto sum_ii = acc.sum_ii();
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < p; ++i) {
        const std::size_t base = kernels::tri_index(i, 0);
        for (std::size_t j = 0; j <= i; ++j) {
            g.values[base + j] = sum_ii[base + j] / n - mean[i] * mean[j];
        }
    }
    return g;
}

std::string_view to_string(ProjectionKind kind)
{
    switch (kind) {
    case ProjectionKind::sum:
        return "sum";
    case ProjectionKind::minus:
        return "minus";
    case ProjectionKind::xplus:
        return "xplus";
    case ProjectionKind::xminus:
        return "xminus";
    }
    return "unknown";
}

std::optional<ProjectionKind> parse_projection_kind(std::string_view text)
{
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (auto k : {ProjectionKind::sum, ProjectionKind::minus, ProjectionKind::xplus, ProjectionKind::xminus}) {
        if (lower == to_string(k)) {
            return k;
        }
    }
    return std::nullopt;
}

namespace {

kernels::ProjectionInput input_of(const JointDistribution& g, const ProjectionOptions& o)
{
    if (g.values.size() != kernels::tri_size(g.pixels())) {
        throw UsageError("joint distribution storage does not match its sensor");
    }
    return {g.values, {g.spec.width, g.spec.height}, o.include_diagonal, o.clip_negative};
}

// Pixel pairs landing in a bin along one axis: x1 + x2 = b (sum) or
// x1 - x2 = b - (n - 1) (minus); both give n - |b - (n - 1)|.
int pairs_along(int b, int n)
{
    return n - std::abs(b - (n - 1));
}

ProjectionImage make_sum_or_minus(const JointDistribution& g, const ProjectionOptions& o, ProjectionKind kind)
{
    const int w = g.spec.width;
    const int h = g.spec.height;
    const auto& c = g.spec.pixel_to_coord.c;
    Affine2 axes;
    if (kind == ProjectionKind::sum) {
        axes.c = {2 * c[0], c[1], c[2], 2 * c[3], c[4], c[5]};
    }
    else {
        axes.c = {-c[1] * (w - 1) - c[2] * (h - 1), c[1], c[2], -c[4] * (w - 1) - c[5] * (h - 1), c[4], c[5]};
    }
    ProjectionImage out;
    out.kind = kind;
    out.mode = g.mode;
    out.image = Image(2 * w - 1, 2 * h - 1, axes);
    const auto in = input_of(g, o);
    const bool par = o.path == KernelPath::parallel;
    if (kind == ProjectionKind::sum) {
        par ? kernels::parallel::project_sum(in, out.image.values) : kernels::serial::project_sum(in, out.image.values);
    }
    else {
        par ? kernels::parallel::project_minus(in, out.image.values)
            : kernels::serial::project_minus(in, out.image.values);
    }
    const int ow = 2 * w - 1;
    out.valid.assign(out.image.size(), 0);
    out.diagonal_affected.assign(out.image.size(), 0);
    for (int by = 0; by < 2 * h - 1; ++by) {
        for (int bx = 0; bx < ow; ++bx) {
            const std::size_t k = static_cast<std::size_t>(by) * ow + bx;
            bool diag = false;
            if (kind == ProjectionKind::sum) {
                diag = bx % 2 == 0 && by % 2 == 0;
            }
            else {
                diag = bx == w - 1 && by == h - 1;
            }
            // Ordered pairs; the diagonal contributes one (sum) or w*h
            // (minus centre) pairs, all of them same-pixel.
            long pairs = static_cast<long>(pairs_along(bx, w)) * pairs_along(by, h);
            if (diag && !o.include_diagonal) {
                pairs -= kind == ProjectionKind::sum ? 1 : static_cast<long>(w) * h;
            }
            out.valid[k] = pairs > 0;
            out.diagonal_affected[k] = diag;
        }
    }
    return out;
}

ProjectionImage make_conditional(const JointDistribution& g, const ProjectionOptions& o, ProjectionKind kind)
{
    const int h = g.spec.height;
    const auto& c = g.spec.pixel_to_coord.c;
    ProjectionImage out;
    out.kind = kind;
    out.mode = g.mode;
    // Column index is y2, row index is y1; both axes carry the y coordinate.
    out.image = Image(h, h, Affine2{{c[3], c[5], 0.0, c[3], 0.0, c[5]}});
    const std::size_t hh = static_cast<std::size_t>(h) * h;
    std::vector<double> num(hh, 0.0);
    std::vector<double> den(hh, 0.0);
    const auto in = input_of(g, o);
    const bool par = o.path == KernelPath::parallel;
    if (kind == ProjectionKind::xplus) {
        const std::vector<int> mirror = mirror_columns(g.spec);
        par ? kernels::parallel::project_xplus(in, mirror, {num, den})
            : kernels::serial::project_xplus(in, mirror, {num, den});
    }
    else {
        par ? kernels::parallel::project_xminus(in, {num, den}) : kernels::serial::project_xminus(in, {num, den});
    }
    out.valid.assign(hh, 0);
    out.diagonal_affected.assign(hh, 0);
    for (int y1 = 0; y1 < h; ++y1) {
        for (int y2 = 0; y2 < h; ++y2) {
            const std::size_t k = static_cast<std::size_t>(y1) * h + y2;
            out.diagonal_affected[k] = y1 == y2;
            if (den[k] != 0.0) {
                out.image.values[k] = num[k] / den[k];
                out.valid[k] = 1;
            }
        }
    }
    return out;
}

}  // namespace

std::vector<int> mirror_columns(const CameraSpec& spec)
{
    const auto& c = spec.pixel_to_coord.c;
    if (c[2] != 0.0 || c[4] != 0.0 || c[1] == 0.0) {
        throw UsageError("mirror columns need an axis-aligned calibration");
    }
    const double x0 = -c[0] / c[1];
    std::vector<int> mirror(static_cast<std::size_t>(spec.width));
    for (int x = 0; x < spec.width; ++x) {
        const double m = std::nearbyint(2.0 * x0 - x);
        mirror[x] = m >= 0 && m < spec.width ? static_cast<int>(m) : -1;
    }
    return mirror;
}

ProjectionImage project_sum(const JointDistribution& gamma, const ProjectionOptions& options)
{
    return make_sum_or_minus(gamma, options, ProjectionKind::sum);
}

ProjectionImage project_minus(const JointDistribution& gamma, const ProjectionOptions& options)
{
    return make_sum_or_minus(gamma, options, ProjectionKind::minus);
}

ProjectionImage project_xplus(const JointDistribution& gamma, const ProjectionOptions& options)
{
    if (gamma.mode != Mode::momentum) {
        throw ModeMismatchError("XPLUS projection needs a momentum-mode Γ");
    }
    return make_conditional(gamma, options, ProjectionKind::xplus);
}

ProjectionImage project_xminus(const JointDistribution& gamma, const ProjectionOptions& options)
{
    if (gamma.mode != Mode::position) {
        throw ModeMismatchError("XMINUS projection needs a position-mode Γ");
    }
    return make_conditional(gamma, options, ProjectionKind::xminus);
}

ProjectionImage project(const JointDistribution& gamma, ProjectionKind kind, const ProjectionOptions& options)
{
    switch (kind) {
    case ProjectionKind::sum:
        return project_sum(gamma, options);
    case ProjectionKind::minus:
        return project_minus(gamma, options);
    case ProjectionKind::xplus:
        return project_xplus(gamma, options);
    case ProjectionKind::xminus:
        return project_xminus(gamma, options);
    }
    throw UsageError("unknown projection kind");
}

void write_gamma(const std::filesystem::path& path, const JointDistribution& gamma, bool clip)
{
    if (gamma.frame_count > std::numeric_limits<std::uint32_t>::max()) {
        throw FormatError("BPGM: frame count exceeds u32");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot open " + path.string() + " for writing");
    }
    out.write("BPGM", 4);
    detail::put_le<std::uint16_t>(out, kBpgmVersion);
    detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(gamma.mode));
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(gamma.spec.width));
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(gamma.spec.height));
    detail::put_le<std::uint8_t>(out, clip || gamma.clipped ? 1 : 0);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(gamma.frame_count));
    for (double c : gamma.spec.pixel_to_coord.c) {
        detail::put_f64(out, c);
    }
    std::vector<char> buf;
    constexpr std::size_t kChunk = 1 << 16;
    for (std::size_t k0 = 0; k0 < gamma.values.size(); k0 += kChunk) {
        const std::size_t n = std::min(kChunk, gamma.values.size() - k0);
        buf.resize(n * 8);
        for (std::size_t k = 0; k < n; ++k) {
            const double v = clip ? std::max(gamma.values[k0 + k], 0.0) : gamma.values[k0 + k];
            const auto bits = std::bit_cast<std::uint64_t>(v);
            for (int b = 0; b < 8; ++b) {
                buf[8 * k + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
            }
        }
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    if (!out) {
        throw FormatError("write failed: " + path.string());
    }
}

JointDistribution read_gamma(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    detail::expect_magic(in, "BPGM", path.string());
    const auto version = detail::get_le<std::uint16_t>(in, "version");
    if (version != kBpgmVersion) {
        throw FormatError(path.string() + ": unsupported BPGM version " + std::to_string(version));
    }
    JointDistribution g;
    const auto mode = detail::get_le<std::uint8_t>(in, "mode");
    if (mode > 1) {
        throw FormatError(path.string() + ": invalid mode byte");
    }
    g.mode = static_cast<Mode>(mode);
    const int w = detail::get_le<std::uint16_t>(in, "width");
    const int h = detail::get_le<std::uint16_t>(in, "height");
    if (w == 0 || h == 0) {
        throw FormatError(path.string() + ": zero-sized sensor");
    }
    g.spec = default_camera(g.mode, w, h);
    g.clipped = (detail::get_le<std::uint8_t>(in, "flags") & 1) != 0;
    g.frame_count = detail::get_le<std::uint32_t>(in, "frame count");
    for (double& c : g.spec.pixel_to_coord.c) {
        c = detail::get_f64(in, "calibration");
    }
    g.values.resize(kernels::tri_size(g.spec.pixel_count()));
    std::vector<unsigned char> buf(g.values.size() * 8);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
        throw FormatError(path.string() + ": truncated BPGM payload");
    }
    for (std::size_t k = 0; k < g.values.size(); ++k) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            bits |= static_cast<std::uint64_t>(buf[8 * k + b]) << (8 * b);
        }
        g.values[k] = std::bit_cast<double>(bits);
    }
    return g;
}

void write_projection_csv(const std::filesystem::path& path, const ProjectionImage& p)
{
    std::ofstream out(path);
    if (!out) {
        throw FormatError("cannot open " + path.string() + " for writing");
    }
    out << std::setprecision(17);
    out << "# kind=" << to_string(p.kind) << " mode=" << to_string(p.mode) << " width=" << p.image.width
        << " height=" << p.image.height << " axes=";
    for (std::size_t k = 0; k < 6; ++k) {
        out << (k ? "," : "") << p.image.axes.c[k];
    }
    out << "\nix,iy,x,y,value,valid,diagonal_affected\n";
    for (int iy = 0; iy < p.image.height; ++iy) {
        for (int ix = 0; ix < p.image.width; ++ix) {
            const std::size_t k = static_cast<std::size_t>(iy) * p.image.width + ix;
            const TransverseVec u = p.image.axes.map(ix, iy);
            out << ix << ',' << iy << ',' << u.x << ',' << u.y << ',' << p.image.values[k] << ','
                << int(p.valid[k]) << ',' << int(p.diagonal_affected[k]) << '\n';
        }
    }
    if (!out) {
        throw FormatError("write failed: " + path.string());
    }
}

ProjectionImage read_projection_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    const std::string where = path.string() + ": ";
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
        throw FormatError(where + "missing projection metadata line");
    }
    ProjectionImage p;
    int w = 0;
    int h = 0;
    bool have_kind = false;
    bool have_mode = false;
    bool have_axes = false;
    std::istringstream meta(line.substr(2));
    std::string field;
    while (meta >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) {
            throw FormatError(where + "bad metadata field '" + field + "'");
        }
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        try {
            if (key == "kind") {
                const auto kind = parse_projection_kind(value);
                if (!kind) {
                    throw FormatError(where + "unknown projection kind '" + value + "'");
                }
                p.kind = *kind;
                have_kind = true;
            }
            else if (key == "mode") {
                if (value != "momentum" && value != "position") {
                    throw FormatError(where + "unknown mode '" + value + "'");
                }
                p.mode = value == "momentum" ? Mode::momentum : Mode::position;
                have_mode = true;
            }
            else if (key == "width") {
                w = std::stoi(value);
            }
            else if (key == "height") {
                h = std::stoi(value);
            }
            else if (key == "axes") {
                std::istringstream vs(value);
                std::string part;
                for (std::size_t k = 0; k < 6; ++k) {
                    if (!std::getline(vs, part, ',')) {
                        throw FormatError(where + "axes needs 6 values");
                    }
                    p.image.axes.c[k] = std::stod(part);
                }
                have_axes = true;
            }
        }
        catch (const std::logic_error&) {
            throw FormatError(where + "bad metadata value '" + field + "'");
        }
    }
    if (!have_kind || !have_mode || !have_axes || w <= 0 || h <= 0) {
        throw FormatError(where + "incomplete projection metadata");
    }
    const Affine2 axes = p.image.axes;
    p.image = Image(w, h, axes);
    p.valid.assign(p.image.size(), 0);
    p.diagonal_affected.assign(p.image.size(), 0);
    std::getline(in, line);  // column header
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string cell[7];
        for (auto& s : cell) {
            if (!std::getline(row, s, ',')) {
                throw FormatError(where + "short CSV row");
            }
        }
        try {
            const int ix = std::stoi(cell[0]);
            const int iy = std::stoi(cell[1]);
            if (ix < 0 || ix >= w || iy < 0 || iy >= h) {
                throw FormatError(where + "bin index out of range");
            }
            const std::size_t k = static_cast<std::size_t>(iy) * w + ix;
            p.image.values[k] = std::stod(cell[4]);
            p.valid[k] = static_cast<std::uint8_t>(std::stoi(cell[5]) != 0);
            p.diagonal_affected[k] = static_cast<std::uint8_t>(std::stoi(cell[6]) != 0);
        }
        catch (const std::logic_error&) {
            throw FormatError(where + "bad CSV row '" + line + "'");
        }
        ++rows;
    }
    if (rows != p.image.size()) {
        throw FormatError(where + "expected " + std::to_string(p.image.size()) + " rows, found " +
                          std::to_string(rows));
    }
    return p;
}

}  // namespace biphoton
