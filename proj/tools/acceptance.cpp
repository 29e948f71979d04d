// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// when a hard criterion fails; the throughput floor (10) is reported only.
//
//   acceptance [criterion numbers...]

#include "biphoton/analysis.hpp"
#include "biphoton/campaign.hpp"
#include "biphoton/core_model.hpp"
#include "biphoton/pipeline.hpp"
#include "biphoton/reconstruction.hpp"
#include "biphoton/rng.hpp"
#include "biphoton/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace biphoton;

namespace {

const std::filesystem::path kScenarios = std::filesystem::path(BIPHOTON_SOURCE_DIR) / "scenarios";
const CrystalParams kBbo{0.9e-3, 405e-9, 0.455};

struct Verdict {
    bool pass = false;
    std::string detail;
    bool soft = false;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string f(double v, int digits = 4)
{
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

PumpParams pump_lc(double lc_um)
{
    return {89e-6, std::isinf(lc_um) ? CoherenceLength::infinite() : CoherenceLength::meters(lc_um * 1e-6)};
}

Verdict c1_identity()
{
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng = make_rng(2024, Stream::test, 1);
    std::uniform_real_distribution<double> len(0.1e-3, 5e-3), lam(300e-9, 900e-9), alpha(0.2, 1.0),
        waist(10e-6, 2e-3), lc(5e-6, 1e-3);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const CrystalParams c{len(rng), lam(rng), alpha(rng)};
        const PumpParams p{waist(rng), i % 5 == 0 ? CoherenceLength::infinite() : CoherenceLength::meters(lc(rng))};
        const double a = schmidt_theory(c, p);
        const double b = schmidt_from_widths(sigma_r_theory(c), sigma_k_theory(p)).k_value;
        worst = std::max(worst, std::abs(a - b) / a);
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-12 && t < 1.0, "max rel diff " + f(worst, 3) + " over 100 sets, " + f(t * 1e3, 3) + " ms"};
}

Verdict c2_table_kexp()
{
    struct Row {
        double sk, sr, k_table, err, k_expected;
    };
    const Row rows[] = {{2.4, 7.9, 727, 74, 695}, {9.7, 8.4, 38, 4, 38.1}, {17.2, 7.1, 17, 1, 17.3},
                        {22.5, 7.1, 10, 1, 10.3}};
    bool ok = true;
    std::string d;
    for (const auto& r : rows) {
        const double k = schmidt_from_widths(r.sr * 1e-6, r.sk * 1e3).k_value;
        const bool in_bar = std::abs(k - r.k_table) <= r.err;
        const bool rounds = std::abs(k - r.k_expected) <= 0.05 * r.k_expected;
        ok = ok && in_bar && rounds;
        d += f(k) + (in_bar ? " " : "(out) ");
    }
    return {ok, "K = " + d + "vs 727±74, 38±4, 17±1, 10±1"};
}

Verdict c3_eq3()
{
    const double lcs[] = {INFINITY, 122.0, 59.0, 41.0};
    const double tabulated[] = {591, 115, 32, 16};
    bool ok = true;
    std::string d;
    for (int i = 0; i < 4; ++i) {
        const double k = schmidt_theory(kBbo, pump_lc(lcs[i]));
        const double rel = (k - tabulated[i]) / tabulated[i];
        if (i >= 2) {
            ok = ok && std::abs(rel) <= 0.10;
            d += "lc=" + f(lcs[i]) + ": " + f(k) + " vs " + f(tabulated[i]) + " (" + f(100 * rel, 2) + "%); ";
        }
        else {
            d += "lc=" + f(lcs[i]) + ": " + f(k) + " vs " + f(tabulated[i]) + " [DISCREPANCY, documented]; ";
        }
    }
    return {ok, d};
}

Verdict c4_eq2()
{
    const double lcs[] = {INFINITY, 122.0, 59.0, 41.0};
    const double expect[] = {5.62, 9.94, 17.9, 25.0};
    const double measured[] = {2.4, 9.7, 17.2, 22.5};
    bool ok = true;
    std::string d;
    for (int i = 0; i < 4; ++i) {
        const double sk = sigma_k_theory(pump_lc(lcs[i])) * 1e-3;
        ok = ok && std::abs(sk - expect[i]) <= 0.05 + 1e-3 * expect[i];
        d += f(sk);
        if (i > 0) {
            const double rel = (sk - measured[i]) / measured[i];
            ok = ok && std::abs(rel) <= 0.15;
            d += " (" + f(100 * rel, 2) + "% vs " + f(measured[i]) + ")";
        }
        d += i < 3 ? ", " : " rad/mm";
    }
    return {ok, d};
}

Verdict c5_momentum()
{
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario s = load_scenario(kScenarios / "momentum_64.cfg");
    const RunResult run = run_scenario(s);
    const WidthEstimate w = estimate_sigma_k(correct_acceptance(finalize(run.accumulator)).sum);
    const double t = seconds_since(t0);
    const double target = s.model().sigma_k;
    const double rel = (w.value - target) / target;
    return {w.fit.converged && std::abs(rel) <= 0.05 && t < 180.0,
            "sigma_k " + f(w.value * 1e-3) + " ± " + f(w.uncertainty * 1e-3, 2) + " rad/mm vs " +
                f(target * 1e-3) + " (" + f(100 * rel, 2) + "%), " + std::to_string(s.frames) + " frames " +
                std::to_string(s.camera_width) + "x" + std::to_string(s.camera_height) + ", " + f(t, 3) + " s"};
}

Verdict c6_position()
{
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario s = load_scenario(kScenarios / "position_64.cfg");
    const RunResult run = run_scenario(s);
    const WidthEstimate w = estimate_sigma_r(correct_acceptance(finalize(run.accumulator)).minus, s.beta());
    const double t = seconds_since(t0);
    const double target = s.model().sigma_r;
    const double rel = (w.value - target) / target;
    return {w.fit.converged && std::abs(rel) <= 0.05 && t < 180.0,
            "sigma_r " + f(w.value * 1e6) + " ± " + f(w.uncertainty * 1e6, 2) + " um vs " + f(target * 1e6) +
                " (" + f(100 * rel, 2) + "%), sqrt(beta) " + f(std::sqrt(s.beta().value)) + ", " + f(t, 3) + " s"};
}

Verdict c7_regression()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<RegressionPoint> pts;
    std::string d;
    for (const Scenario& s : table1_scenarios()) {
        const RunResult run = run_scenario(s);
        const WidthEstimate w = estimate_sigma_k(correct_acceptance(finalize(run.accumulator)).sum);
        if (!w.fit.converged) {
            return {false, s.name + ": SUM fit did not converge"};
        }
        const double k = w.value * 1e-3;
        pts.push_back({s.pump.coherence_length.inverse_square() * 1e-6, k * k});
        d += f(k) + " ";
    }
    const RegressionResult r = regress_sigma_k2_vs_inv_lc2(pts);
    const bool ok = r.slope >= 0.9 && r.slope <= 1.1 && r.r_squared > 0.99;
    const bool measured_band = std::abs(r.slope - 0.82) <= 0.3;
    return {ok, "sigma_k " + d + "rad/mm; slope " + f(r.slope) + " ± " + f(r.slope_stderr, 2) + ", r^2 " +
                    f(r.r_squared, 5) + (measured_band ? ", within 0.82 ± 0.3" : ", outside 0.82 ± 0.3") + ", " +
                    f(seconds_since(t0), 3) + " s"};
}

Verdict c8_speckle()
{
    const Scenario s = load_scenario(kScenarios / "static_speckle.cfg");
    const RunResult run = run_scenario(s);
    const ProjectionImage sum = project_sum(finalize(run.accumulator));
    const SpeckleTransfer t = speckle_transfer(sum, mean_frame(run.accumulator), *run.pump_farfield, s.compare_radius);
    const bool ok = t.r_sum > 0.9 && t.r_sum_speckle > 0.9 && std::abs(t.r_direct_speckle) < 0.2;
    return {ok, "SUM vs pump r " + f(t.r_sum, 3) + " (envelope removed " + f(t.r_sum_speckle, 3) +
                    "); direct vs pump envelope removed r " + f(t.r_direct_speckle, 3) + " (plain " +
                    f(t.r_direct, 3) + ", envelope only)"};
}

// Brute force over (x1, y1, x2, y2) on an integer Γ.
std::vector<double> brute(const JointDistribution& g, ProjectionKind kind)
{
    const int w = g.spec.width, h = g.spec.height, ow = 2 * w - 1;
    std::vector<double> out(kind == ProjectionKind::sum || kind == ProjectionKind::minus ? ow * (2 * h - 1) : h * h);
    std::vector<double> num(h * h), den(h * h);
    const std::vector<int> mirror = kind == ProjectionKind::xplus ? mirror_columns(g.spec) : std::vector<int>{};
    for (int y1 = 0; y1 < h; ++y1)
        for (int x1 = 0; x1 < w; ++x1)
            for (int y2 = 0; y2 < h; ++y2)
                for (int x2 = 0; x2 < w; ++x2) {
                    const std::size_t i = y1 * w + x1, j = y2 * w + x2;
                    if (i == j) {
                        continue;
                    }
                    const double v = g.at(i, j);
                    if (kind == ProjectionKind::sum) {
                        out[(y1 + y2) * ow + x1 + x2] += v;
                    }
                    else if (kind == ProjectionKind::minus) {
                        out[(y1 - y2 + h - 1) * ow + x1 - x2 + w - 1] += v;
                    }
                    else {
                        den[y1 * h + y2] += v;
                        if (kind == ProjectionKind::xplus ? mirror[x1] == x2 : x2 == x1 + 1) {
                            num[y1 * h + y2] += v;
                        }
                    }
                }
    if (kind == ProjectionKind::xplus || kind == ProjectionKind::xminus) {
        for (int k = 0; k < h * h; ++k) {
            out[k] = den[k] != 0.0 ? num[k] / den[k] : 0.0;
        }
    }
    return out;
}

Verdict c9_oracle()
{
    const auto t0 = std::chrono::steady_clock::now();
    int compared = 0;
    bool ok = true;
    for (int w : {3, 8, 12}) {
        for (int h : {4, 12}) {
            for (Mode mode : {Mode::momentum, Mode::position}) {
                JointDistribution g;
                g.spec = default_camera(mode, w, h);
                g.mode = mode;
                g.frame_count = 10;
                Rng rng = make_rng(w * 31 + h, Stream::test, 9);
                std::uniform_int_distribution<int> u(-100, 200);
                g.values.resize(kernels::tri_size(g.pixels()));
                for (auto& v : g.values) {
                    v = u(rng);
                }
                const ProjectionKind xk = mode == Mode::momentum ? ProjectionKind::xplus : ProjectionKind::xminus;
                for (ProjectionKind k : {ProjectionKind::sum, ProjectionKind::minus, xk}) {
                    const auto ref = brute(g, k);
                    for (KernelPath p : {KernelPath::serial, KernelPath::parallel}) {
                        ok = ok && project(g, k, {.path = p}).image.values == ref;
                        ++compared;
                    }
                }
            }
        }
    }
    // Merge associativity on real frames.
    const CameraSpec spec = default_camera(Mode::momentum, 12, 12);
    Rng rng = make_rng(5, Stream::test, 10);
    std::uniform_int_distribution<int> u(0, 65535);
    std::vector<std::uint16_t> frames(spec.pixel_count() * 300);
    for (auto& v : frames) {
        v = static_cast<std::uint16_t>(u(rng));
    }
    auto part = [&](std::size_t a, std::size_t b) {
        GammaAccumulator acc(spec, Mode::momentum);
        acc.accumulate_batch(std::span(frames).subspan(a * spec.pixel_count(), (b - a) * spec.pixel_count()), b - a);
        return acc;
    };
    GammaAccumulator whole = part(0, 300), x = part(0, 100), y = part(100, 170), z = part(170, 300);
    GammaAccumulator l = x;
    l.merge(y);
    l.merge(z);
    GammaAccumulator r = y;
    r.merge(z);
    GammaAccumulator xr = x;
    xr.merge(r);
    const bool merge_ok = l == whole && xr == whole;
    const double t = seconds_since(t0);
    return {ok && merge_ok && t < 30.0, std::to_string(compared) + " projections element-exact vs 4-index loops" +
                                            (ok ? "" : " (MISMATCH)") + ", merge " +
                                            (merge_ok ? "exact" : "NOT exact") + ", " + f(t, 3) + " s"};
}

Verdict c10_throughput()
{
    Scenario s = load_scenario(kScenarios / "table1_row2.cfg");
    s.frames = 2000;
    RunOptions o;
    const RunResult run = run_scenario(s, o);
    const double fps = static_cast<double>(s.frames) / run.accumulate_seconds;
    Verdict v{fps >= 50.0, "accumulation " + f(fps, 4) + " frames/s at " + std::to_string(s.camera_width) + "x" +
                               std::to_string(s.camera_height) + " (floor 50; simulation " +
                               f(s.frames / run.simulate_seconds, 4) + " frames/s)"};
    v.soft = true;
    return v;
}

}  // namespace

int main(int argc, char** argv)
{
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        only.insert(std::atoi(argv[i]));
    }
    const std::pair<const char*, std::function<Verdict()>> criteria[] = {
        {"formula identity", c1_identity},
        {"Table 1 K(exp) from measured widths", c2_table_kexp},
        {"closed-form K(theory)", c3_eq3},
        {"sigma_k from coherence length", c4_eq2},
        {"end-to-end momentum pipeline", c5_momentum},
        {"end-to-end position pipeline", c6_position},
        {"sigma_k^2 vs 1/lc^2 regression", c7_regression},
        {"coherence transfer (static speckle)", c8_speckle},
        {"projection oracle and merge", c9_oracle},
        {"accumulation throughput (soft)", c10_throughput},
    };
    int hard_failures = 0;
    for (int i = 0; i < 10; ++i) {
        if (!only.empty() && !only.count(i + 1)) {
            continue;
        }
        Verdict v;
        try {
            v = criteria[i].second();
        }
        catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.pass && !v.soft) {
            ++hard_failures;
        }
        std::printf("%s %2d %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
        std::fflush(stdout);
    }
    return hard_failures == 0 ? 0 : 1;
}
