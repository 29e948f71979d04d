#include "biphoton/image.hpp"

#include "biphoton/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace biphoton {

bool Affine2::invertible() const
{
    const double d = det();
    return std::isfinite(d) && d != 0.0;
}

std::array<double, 2> Affine2::inverse(TransverseVec p) const
{
    const double d = det();
    const double dx = p.x - c[0];
    const double dy = p.y - c[3];
    return {(c[5] * dx - c[2] * dy) / d, (-c[4] * dx + c[1] * dy) / d};
}

Affine2 Affine2::centered(int width, int height, double step)
{
    Affine2 a;
    a.c = {-step * 0.5 * (width - 1), step, 0.0, -step * 0.5 * (height - 1), 0.0, step};
    return a;
}

void write_pgm16(const std::filesystem::path& path, const Image& image, double lo, double hi)
{
    if (lo == hi && !image.values.empty()) {
        const auto [mn, mx] = std::minmax_element(image.values.begin(), image.values.end());
        lo = *mn;
        hi = *mx;
    }
    const double scale = hi > lo ? 65535.0 / (hi - lo) : 0.0;
    std::vector<std::uint16_t> samples(image.values.size());
    std::transform(image.values.begin(), image.values.end(), samples.begin(), [&](double v) {
        const double s = std::clamp((v - lo) * scale, 0.0, 65535.0);
        return static_cast<std::uint16_t>(std::lround(s));
    });
    write_pgm16(path, image.width, image.height, samples);
}

void write_pgm16(const std::filesystem::path& path, int width, int height, std::span<const std::uint16_t> samples)
{
    if (samples.size() != static_cast<std::size_t>(width) * height) {
        throw UsageError("PGM sample count does not match dimensions");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot open " + path.string() + " for writing");
    }
    out << "P5\n" << width << ' ' << height << "\n65535\n";
    for (std::uint16_t s : samples) {
        const char bytes[2] = {static_cast<char>(s >> 8), static_cast<char>(s & 0xff)};
        out.write(bytes, 2);
    }
}

Pgm16 read_pgm16(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::string magic;
    Pgm16 pgm;
    int maxval = 0;
    in >> magic >> pgm.width >> pgm.height >> maxval;
    if (!in || magic != "P5" || maxval != 65535 || pgm.width <= 0 || pgm.height <= 0) {
        throw FormatError("not a 16-bit binary PGM: " + path.string());
    }
    in.get();
    pgm.samples.resize(static_cast<std::size_t>(pgm.width) * pgm.height);
    for (auto& s : pgm.samples) {
        unsigned char b[2];
        if (!in.read(reinterpret_cast<char*>(b), 2)) {
            throw FormatError("truncated PGM: " + path.string());
        }
        s = static_cast<std::uint16_t>((b[0] << 8) | b[1]);
    }
    return pgm;
}

Image splat_bilinear(const Image& source, int width, int height, const Affine2& axes)
{
    if (!axes.invertible()) {
        throw UsageError("splat_bilinear: target calibration is singular");
    }
    Image out(width, height, axes);
    for (int j = 0; j < source.height; ++j) {
        for (int i = 0; i < source.width; ++i) {
            const double v = source.at(i, j);
            if (v == 0.0) {
                continue;
            }
            const auto p = axes.inverse(source.axes.map(i, j));
            const double fx0 = std::floor(p[0]);
            const double fy0 = std::floor(p[1]);
            if (fx0 < -1.0 || fy0 < -1.0 || fx0 > width || fy0 > height) {
                continue;
            }
            const int x0 = static_cast<int>(fx0);
            const int y0 = static_cast<int>(fy0);
            const double tx = p[0] - fx0;
            const double ty = p[1] - fy0;
            for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                    const int x = x0 + dx;
                    const int y = y0 + dy;
                    if (x < 0 || y < 0 || x >= width || y >= height) {
                        continue;
                    }
                    out.at(x, y) += v * (dx ? tx : 1.0 - tx) * (dy ? ty : 1.0 - ty);
                }
            }
        }
    }
    return out;
}

double pearson(std::span<const double> a, std::span<const double> b, std::span<const std::uint8_t> use)
{
    if (a.size() != b.size() || (!use.empty() && use.size() != a.size())) {
        throw UsageError("pearson: size mismatch");
    }
    double n = 0, sa = 0, sb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (use.empty() || use[i]) {
            n += 1;
            sa += a[i];
            sb += b[i];
        }
    }
    if (n < 2) {
        return 0.0;
    }
    const double ma = sa / n;
    const double mb = sb / n;
    double saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (use.empty() || use[i]) {
            const double da = a[i] - ma;
            const double db = b[i] - mb;
            saa += da * da;
            sbb += db * db;
            sab += da * db;
        }
    }
    if (saa == 0.0 || sbb == 0.0) {
        return 0.0;
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace biphoton
