#include <benchmark/benchmark.h>

#include "speckle/costvol.hpp"
#include "speckle/optics.hpp"
#include "speckle/parallel.hpp"
#include "speckle/phase.hpp"
#include "speckle/synth.hpp"
#include "speckle/track.hpp"

#include <complex>

using namespace speckle;

namespace {

struct TrackingPair {
    Image2D ref;
    Image2D sample;
};

// Pitch-1 speckle reference warped by the smooth test field; the amplitude
// is 5 px at 512 px and scales with the image size.
TrackingPair make_tracking_pair(int size) {
    TrackingPair p;
    p.ref = render_reference(generate_coded_mask(size, 1, SeedContext(31)), OpticsConfig{}, kDefaultPixelPitch);
    const VectorField2D field = smooth_displacement_field(size, size, 5.0 * size / 512.0);
    p.sample = warp_apply(p.ref, field, Image2D(size, size, kDefaultPixelPitch, 1.0));
    return p;
}

const TrackingPair& tracking_pair(int size) {
    static const TrackingPair p256 = make_tracking_pair(256);
    static const TrackingPair p512 = make_tracking_pair(512);
    return size == 256 ? p256 : p512;
}

// Timings are single-thread unless the benchmark names a thread count.
class ThreadScope {
public:
    explicit ThreadScope(int threads) : saved_(num_threads()) { set_num_threads(threads); }
    ~ThreadScope() { set_num_threads(saved_); }

private:
    int saved_;
};

void BM_DicFull(benchmark::State& state) {
    const TrackingPair& p = tracking_pair(static_cast<int>(state.range(0)));
    const ThreadScope threads(static_cast<int>(state.range(1)));
    for (auto _ : state) {
        MatchResult m = dic_track_full(p.ref, p.sample, TrackConfig{});
        benchmark::DoNotOptimize(m.displacement.dx().data().data());
    }
}

void BM_DicPyramid(benchmark::State& state) {
    const TrackingPair& p = tracking_pair(static_cast<int>(state.range(0)));
    const ThreadScope threads(static_cast<int>(state.range(1)));
    for (auto _ : state) {
        MatchResult m = dic_track_pyramid(p.ref, p.sample, TrackConfig{});
        benchmark::DoNotOptimize(m.displacement.dx().data().data());
    }
}

void BM_CostvolMultiscale(benchmark::State& state) {
    const TrackingPair& p = tracking_pair(static_cast<int>(state.range(0)));
    const ThreadScope threads(static_cast<int>(state.range(1)));
    for (auto _ : state) {
        MultiscaleResult r = multiscale_costvol_track(p.ref, p.sample, 4, 3);
        benchmark::DoNotOptimize(r.displacement.dx().data().data());
    }
}

void BM_BuildCostVolume(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const int range = static_cast<int>(state.range(1));
    const Image2D& img = tracking_pair(size).ref;
    const FeatureStack f = patch_features(img, 3);
    const ThreadScope threads(1);
    for (auto _ : state) {
        CostVolume c = build_cost_volume(f, f, range);
        benchmark::DoNotOptimize(c.plane(0).data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(size) * size * (2 * range + 1) *
                            (2 * range + 1));
}

void BM_FresnelPropagate(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const auto kernel = static_cast<FresnelKernel>(state.range(1));
    ComplexField2D u0(size, size);
    auto rng = SeedContext(5).stream("bench-field");
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) u0(x, y) = std::polar(rng.uniform(0.2, 1.0), rng.uniform(-3.0, 3.0));
    }
    const ThreadScope threads(1);
    for (auto _ : state) {
        ComplexField2D out = fresnel_propagate(u0, 0.06e-9, 0.3, kDefaultPixelPitch, kernel);
        benchmark::DoNotOptimize(out(0, 0));
    }
}

void BM_IntegrateGradients(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const VectorField2D d = smooth_displacement_field(size, size, 3.0);
    const auto [gx, gy] = displacement_to_gradient(d, GeometryConfig::beamline());
    const ThreadScope threads(1);
    for (auto _ : state) {
        Image2D phi = integrate_gradients(gx, gy);
        benchmark::DoNotOptimize(phi.data().data());
    }
}

}  // namespace

BENCHMARK(BM_DicFull)->Args({256, 1})->Args({512, 1})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_DicPyramid)->Args({256, 1})->Args({512, 1})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CostvolMultiscale)->Args({256, 1})->Args({512, 1})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BuildCostVolume)->Args({256, 3})->Args({256, 4})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FresnelPropagate)
    ->Args({256, static_cast<int>(FresnelKernel::TransferFunction)})
    ->Args({256, static_cast<int>(FresnelKernel::ImpulseResponse)})
    ->Args({512, static_cast<int>(FresnelKernel::TransferFunction)})
    ->Args({512, static_cast<int>(FresnelKernel::PeriodicTransferFunction)})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IntegrateGradients)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
