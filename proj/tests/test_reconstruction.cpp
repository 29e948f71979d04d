#include "biphoton/camera.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/frame_stack.hpp"
#include "biphoton/reconstruction.hpp"
#include "biphoton/rng.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace biphoton;

namespace {

// Integer-valued Γ so every summation order gives the same double.
JointDistribution integer_gamma(int w, int h, Mode mode, std::uint64_t seed)
{
    JointDistribution g;
    g.spec = default_camera(mode, w, h);
    g.mode = mode;
    g.frame_count = 100;
    Rng rng = make_rng(seed, Stream::test, 0);
    std::uniform_int_distribution<int> v(-40, 60);
    g.values.resize(kernels::tri_size(g.pixels()));
    for (auto& x : g.values) {
        x = v(rng);
    }
    return g;
}

double oracle_entry(const JointDistribution& g, std::size_t i, std::size_t j, const ProjectionOptions& o)
{
    const double v = g.at(i, j);
    return o.clip_negative ? std::max(v, 0.0) : v;
}

// Straight 4-index loops over (x1, y1, x2, y2).
std::vector<double> oracle(const JointDistribution& g, ProjectionKind kind, const ProjectionOptions& o)
{
    const int w = g.spec.width, h = g.spec.height, ow = 2 * w - 1;
    std::vector<double> out;
    std::vector<double> num(h * h, 0.0), den(h * h, 0.0);
    std::vector<int> mirror;
    if (kind == ProjectionKind::sum || kind == ProjectionKind::minus) {
        out.assign(static_cast<std::size_t>(ow) * (2 * h - 1), 0.0);
    }
    if (kind == ProjectionKind::xplus) {
        mirror = mirror_columns(g.spec);
    }
    for (int y1 = 0; y1 < h; ++y1) {
        for (int x1 = 0; x1 < w; ++x1) {
            for (int y2 = 0; y2 < h; ++y2) {
                for (int x2 = 0; x2 < w; ++x2) {
                    const std::size_t i = y1 * w + x1, j = y2 * w + x2;
                    if (i == j && !o.include_diagonal) {
                        continue;
                    }
                    const double v = oracle_entry(g, i, j, o);
                    switch (kind) {
                    case ProjectionKind::sum:
                        out[(y1 + y2) * ow + x1 + x2] += v;
                        break;
                    case ProjectionKind::minus:
                        out[(y1 - y2 + h - 1) * ow + x1 - x2 + w - 1] += v;
                        break;
                    case ProjectionKind::xplus:
                    case ProjectionKind::xminus: {
                        den[y1 * h + y2] += v;
                        const bool partner = kind == ProjectionKind::xplus ? mirror[x1] == x2 : x2 == x1 + 1;
                        if (partner) {
                            num[y1 * h + y2] += v;
                        }
                        break;
                    }
                    }
                }
            }
        }
    }
    if (kind == ProjectionKind::xplus || kind == ProjectionKind::xminus) {
        out.assign(h * h, 0.0);
        for (int k = 0; k < h * h; ++k) {
            out[k] = den[k] != 0.0 ? num[k] / den[k] : 0.0;
        }
    }
    return out;
}

std::vector<std::uint16_t> random_frames(std::size_t pixels, std::size_t count, std::uint64_t seed, int max = 65535)
{
    Rng rng = make_rng(seed, Stream::test, 1);
    std::uniform_int_distribution<int> v(0, max);
    std::vector<std::uint16_t> f(pixels * count);
    for (auto& x : f) {
        x = static_cast<std::uint16_t>(v(rng));
    }
    return f;
}

std::filesystem::path temp_file(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("biphoton_test_" + name);
}

}  // namespace

TEST_CASE("projections equal 4-index loops element for element")
{
    const std::pair<int, int> sizes[] = {{1, 1}, {2, 3}, {5, 4}, {7, 7}, {12, 12}, {12, 9}};
    for (auto [w, h] : sizes) {
        for (Mode mode : {Mode::momentum, Mode::position}) {
            const auto g = integer_gamma(w, h, mode, 100 * w + h);
            const ProjectionKind conditional = mode == Mode::momentum ? ProjectionKind::xplus : ProjectionKind::xminus;
            for (ProjectionKind kind : {ProjectionKind::sum, ProjectionKind::minus, conditional}) {
                for (bool diag : {false, true}) {
                    for (bool clip : {false, true}) {
                        CAPTURE(w);
                        CAPTURE(h);
                        CAPTURE(to_string(kind));
                        CAPTURE(diag);
                        CAPTURE(clip);
                        const auto expect = oracle(g, kind, {diag, clip});
                        for (KernelPath path : {KernelPath::serial, KernelPath::parallel}) {
                            const auto got = project(g, kind, {diag, clip, path});
                            REQUIRE(got.image.values.size() == expect.size());
                            CHECK(got.image.values == expect);
                        }
                    }
                }
            }
        }
    }
}

TEST_CASE("mirror columns reflect through k_x = 0")
{
    // Odd width: the centre column is its own mirror.
    const auto m5 = mirror_columns(default_camera(Mode::momentum, 5, 5));
    CHECK(m5 == std::vector<int>{4, 3, 2, 1, 0});
    const auto m4 = mirror_columns(default_camera(Mode::momentum, 4, 4));
    CHECK(m4 == std::vector<int>{3, 2, 1, 0});
}

TEST_CASE("projection bookkeeping: valid and diagonal-affected bins")
{
    const auto g = integer_gamma(4, 3, Mode::momentum, 5);
    const auto s = project_sum(g);
    CHECK(s.image.width == 7);
    CHECK(s.image.height == 5);
    // Corner bins of SUM only receive the same-pixel pair.
    CHECK(s.valid[0] == 0);
    CHECK(s.diagonal_affected[0] == 1);
    CHECK(s.valid[1] == 1);
    const auto sd = project_sum(g, {.include_diagonal = true});
    CHECK(sd.valid[0] == 1);
    const auto m = project_minus(g);
    CHECK(m.diagonal_affected[2 * 7 + 3] == 1);
    CHECK(m.valid[2 * 7 + 3] == 0);
    // SUM axes: k1 + k2 at bin (x1 + x2).
    const auto c = g.spec.pixel_to_coord;
    const auto p = s.image.axes.map(3, 2);
    CHECK(p.x == doctest::Approx(c.map(1, 1).x + c.map(2, 1).x));
    CHECK(p.y == doctest::Approx(c.map(1, 1).y + c.map(2, 1).y));
}

TEST_CASE("mode guards on the conditional projections")
{
    const auto mom = integer_gamma(4, 4, Mode::momentum, 1);
    const auto pos = integer_gamma(4, 4, Mode::position, 2);
    CHECK_THROWS_AS(project_xminus(mom), ModeMismatchError);
    CHECK_THROWS_AS(project_xplus(pos), ModeMismatchError);
    CHECK_NOTHROW(project_xplus(mom));
    CHECK_NOTHROW(project_xminus(pos));
}

TEST_CASE("serial and parallel accumulation agree exactly")
{
    for (int side : {1, 3, 8, 13, 21}) {
        const CameraSpec spec = default_camera(Mode::momentum, side, side);
        const auto frames = random_frames(spec.pixel_count(), 77, side);
        GammaAccumulator a(spec, Mode::momentum), b(spec, Mode::momentum), c(spec, Mode::momentum);
        for (std::size_t f = 0; f < 77; ++f) {
            a.accumulate(std::span(frames).subspan(f * spec.pixel_count(), spec.pixel_count()));
        }
        b.accumulate_batch(frames, 77, KernelPath::serial);
        c.accumulate_batch(frames, 77, KernelPath::parallel);
        CHECK(a == b);
        CHECK(a == c);
    }
}

TEST_CASE("accumulated sums match a direct double loop")
{
    const CameraSpec spec = default_camera(Mode::momentum, 6, 5);
    const std::size_t p = spec.pixel_count();
    const auto frames = random_frames(p, 40, 3);
    GammaAccumulator acc(spec, Mode::momentum);
    acc.accumulate_batch(frames, 40);
    for (std::size_t i = 0; i < p; ++i) {
        double si = 0.0;
        for (std::size_t f = 0; f < 40; ++f) {
            si += frames[f * p + i];
        }
        CHECK(acc.sum_i()[i] == si);
        for (std::size_t j = 0; j <= i; ++j) {
            double sij = 0.0;
            for (std::size_t f = 0; f < 40; ++f) {
                sij += double(frames[f * p + i]) * frames[f * p + j];
            }
            CHECK(acc.sum_ii()[kernels::tri_index(i, j)] == sij);
        }
    }
}

TEST_CASE("accumulator merge is exact and associative")
{
    const CameraSpec spec = default_camera(Mode::position, 9, 7);
    const std::size_t p = spec.pixel_count();
    const auto frames = random_frames(p, 90, 17);
    const auto part = [&](std::size_t a, std::size_t b) {
        GammaAccumulator acc(spec, Mode::position);
        acc.accumulate_batch(std::span(frames).subspan(a * p, (b - a) * p), b - a);
        return acc;
    };
    const GammaAccumulator whole = part(0, 90);
    GammaAccumulator x = part(0, 20), y = part(20, 55), z = part(55, 90);

    GammaAccumulator left = x;  // (x + y) + z
    left.merge(y);
    left.merge(z);
    GammaAccumulator yz = y;  // x + (y + z)
    yz.merge(z);
    GammaAccumulator right = x;
    right.merge(yz);
    GammaAccumulator swapped = z;  // z + y + x
    swapped.merge(y);
    swapped.merge(x);
    CHECK(left == whole);
    CHECK(right == whole);
    CHECK(swapped == whole);

    GammaAccumulator other_mode(spec, Mode::momentum);
    CHECK_THROWS(left.merge(other_mode));
}

TEST_CASE("covariance of identical frames is zero")
{
    const CameraSpec spec = default_camera(Mode::momentum, 5, 5);
    auto f = random_frames(spec.pixel_count(), 1, 4);
    std::vector<std::uint16_t> two(f);
    two.insert(two.end(), f.begin(), f.end());
    GammaAccumulator acc(spec, Mode::momentum);
    acc.accumulate_batch(two, 2);
    const auto g = finalize(acc);
    for (double v : g.values) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("finalize computes the sample covariance")
{
    const CameraSpec spec = default_camera(Mode::momentum, 3, 2);
    const std::size_t p = spec.pixel_count();
    const auto frames = random_frames(p, 500, 8, 1000);
    GammaAccumulator acc(spec, Mode::momentum);
    acc.accumulate_batch(frames, 500);
    const auto g = finalize(acc);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double mi = 0, mj = 0, mij = 0;
            for (std::size_t f = 0; f < 500; ++f) {
                mi += frames[f * p + i];
                mj += frames[f * p + j];
            }
            mi /= 500;
            mj /= 500;
            for (std::size_t f = 0; f < 500; ++f) {
                mij += (frames[f * p + i] - mi) * (frames[f * p + j] - mj);
            }
            CHECK(g.at(i, j) == doctest::Approx(mij / 500).epsilon(1e-9));
        }
    }
    GammaAccumulator one(spec, Mode::momentum);
    one.accumulate(std::span(frames).subspan(0, p));
    CHECK_THROWS_AS(finalize(one), UsageError);
}

TEST_CASE("BPGM round trip, clipped and raw")
{
    auto g = integer_gamma(6, 5, Mode::position, 9);
    g.values[3] = -0.125;
    const auto raw_path = temp_file("raw.bpgm");
    const auto clip_path = temp_file("clip.bpgm");
    write_gamma(raw_path, g, false);
    write_gamma(clip_path, g, true);
    CHECK(std::filesystem::file_size(raw_path) == kBpgmHeaderSize + 8 * g.values.size());

    const auto raw = read_gamma(raw_path);
    CHECK(raw.values == g.values);
    CHECK(raw.mode == Mode::position);
    CHECK(raw.frame_count == g.frame_count);
    CHECK(raw.spec.pixel_to_coord == g.spec.pixel_to_coord);
    CHECK_FALSE(raw.clipped);

    const auto clipped = read_gamma(clip_path);
    CHECK(clipped.clipped);
    CHECK(clipped.values == g.clipped_values());
    for (double v : clipped.values) {
        CHECK(v >= 0.0);
    }

    std::ofstream(temp_file("bad.bpgm"), std::ios::binary) << "BPFS-not-a-gamma-file";
    CHECK_THROWS_AS(read_gamma(temp_file("bad.bpgm")), FormatError);
    // Truncated payload.
    std::filesystem::resize_file(raw_path, kBpgmHeaderSize + 16);
    CHECK_THROWS_AS(read_gamma(raw_path), FormatError);
}

TEST_CASE("projection CSV round trip")
{
    const auto g = integer_gamma(5, 4, Mode::momentum, 12);
    for (ProjectionKind kind : {ProjectionKind::sum, ProjectionKind::minus, ProjectionKind::xplus}) {
        const auto p = project(g, kind);
        const auto path = temp_file("proj.csv");
        write_projection_csv(path, p);
        const auto q = read_projection_csv(path);
        CHECK(q.kind == p.kind);
        CHECK(q.mode == p.mode);
        CHECK(q.image.width == p.image.width);
        CHECK(q.image.axes == p.image.axes);
        CHECK(q.image.values == p.image.values);
        CHECK(q.valid == p.valid);
        CHECK(q.diagonal_affected == p.diagonal_affected);
    }
    std::ofstream(temp_file("junk.csv")) << "ix,iy\n1,2\n";
    CHECK_THROWS_AS(read_projection_csv(temp_file("junk.csv")), FormatError);
}

TEST_CASE("projection kind names")
{
    for (ProjectionKind k : {ProjectionKind::sum, ProjectionKind::minus, ProjectionKind::xplus, ProjectionKind::xminus}) {
        CHECK(parse_projection_kind(to_string(k)) == k);
    }
    CHECK_FALSE(parse_projection_kind("diagonal").has_value());
}
