// Serial reference vs OpenMP kernels: covariance accumulation and SUM
// projection on a square sensor.

#include "biphoton/kernels.hpp"
#include "biphoton/rng.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

using namespace biphoton;

std::vector<std::uint16_t> noisy_frames(std::size_t pixels, std::size_t count)
{
    Rng rng = make_rng(7, Stream::test, 0);
    std::normal_distribution<double> noise(171.0, 20.0);
    std::vector<std::uint16_t> f(pixels * count);
    for (auto& v : f) {
        v = static_cast<std::uint16_t>(std::max(0.0, noise(rng)));
    }
    return f;
}

template <bool Parallel>
void accumulate(benchmark::State& state)
{
    const int side = static_cast<int>(state.range(0));
    const std::size_t p = static_cast<std::size_t>(side) * side;
    const std::size_t batch = 64;
    const auto frames = noisy_frames(p, batch);
    std::vector<double> sum_i(p), sum_ii(kernels::tri_size(p));
    for (auto _ : state) {
        if constexpr (Parallel) {
            kernels::parallel::accumulate(sum_i, sum_ii, frames, p, batch);
        }
        else {
            kernels::serial::accumulate(sum_i, sum_ii, frames, p, batch);
        }
        benchmark::DoNotOptimize(sum_ii.data());
    }
    state.counters["frames/s"] = benchmark::Counter(static_cast<double>(state.iterations() * batch),
                                                    benchmark::Counter::kIsRate);
}

template <bool Parallel>
void project_sum(benchmark::State& state)
{
    const int side = static_cast<int>(state.range(0));
    const std::size_t p = static_cast<std::size_t>(side) * side;
    std::vector<double> gamma(kernels::tri_size(p));
    Rng rng = make_rng(8, Stream::test, 0);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& g : gamma) {
        g = u(rng);
    }
    std::vector<double> out(static_cast<std::size_t>(2 * side - 1) * (2 * side - 1));
    const kernels::ProjectionInput in{gamma, {side, side}, false, false};
    for (auto _ : state) {
        std::fill(out.begin(), out.end(), 0.0);
        if constexpr (Parallel) {
            kernels::parallel::project_sum(in, out);
        }
        else {
            kernels::serial::project_sum(in, out);
        }
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK(accumulate<false>)->Name("accumulate/serial")->Arg(32)->Arg(64)->Arg(75)->Unit(benchmark::kMillisecond);
BENCHMARK(accumulate<true>)->Name("accumulate/parallel")->Arg(32)->Arg(64)->Arg(75)->Unit(benchmark::kMillisecond);
BENCHMARK(project_sum<false>)->Name("project_sum/serial")->Arg(32)->Arg(75)->Unit(benchmark::kMillisecond);
BENCHMARK(project_sum<true>)->Name("project_sum/parallel")->Arg(32)->Arg(75)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
