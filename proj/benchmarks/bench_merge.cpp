#include <benchmark/benchmark.h>

#include <vector>

#include "taskforge/merge.hpp"
#include "taskforge/rng.hpp"
#include "taskforge/stats.hpp"

using namespace taskforge;

namespace {

std::vector<TaskVector> make_vectors(int n, int64_t d) {
    std::vector<TaskVector> tvs;
    for (int v = 0; v < n; ++v) {
        TaskVector tv;
        tv.specialist_id = "bench-" + std::to_string(v);
        tv.base_hash = "bench";
        CounterRng rng(derive_stream_key(17, tv.specialist_id, "w"));
        Tensor t;
        t.shape = {d};
        t.data.resize(static_cast<size_t>(d));
        for (size_t i = 0; i < t.data.size(); ++i) {
            t.data[i] = static_cast<float>(rng.gaussian(i));
        }
        tv.delta.set("w", std::move(t));
        tvs.push_back(std::move(tv));
    }
    return tvs;
}

std::vector<const TaskVector*> ptrs(const std::vector<TaskVector>& tvs) {
    std::vector<const TaskVector*> p;
    for (const auto& tv : tvs) p.push_back(&tv);
    return p;
}

void BM_SimpleAverage(benchmark::State& state) {
    auto tvs = make_vectors(5, state.range(0));
    auto p = ptrs(tvs);
    for (auto _ : state) {
        benchmark::DoNotOptimize(merge_simple_average(p));
    }
    state.SetItemsProcessed(state.iterations() * 5 * state.range(0));
}
BENCHMARK(BM_SimpleAverage)->Arg(1 << 16)->Arg(1 << 20);

void BM_Dare(benchmark::State& state) {
    auto tvs = make_vectors(5, state.range(0));
    auto p = ptrs(tvs);
    for (auto _ : state) {
        benchmark::DoNotOptimize(merge_dare(p, 0.9, 42));
    }
    state.SetItemsProcessed(state.iterations() * 5 * state.range(0));
}
BENCHMARK(BM_Dare)->Arg(1 << 16)->Arg(1 << 20);

void BM_Ties(benchmark::State& state) {
    auto tvs = make_vectors(5, state.range(0));
    auto p = ptrs(tvs);
    for (auto _ : state) {
        benchmark::DoNotOptimize(merge_ties(p, 0.5));
    }
    state.SetItemsProcessed(state.iterations() * 5 * state.range(0));
}
BENCHMARK(BM_Ties)->Arg(1 << 16)->Arg(1 << 20);

void BM_Della(benchmark::State& state) {
    auto tvs = make_vectors(5, state.range(0));
    auto p = ptrs(tvs);
    for (auto _ : state) {
        benchmark::DoNotOptimize(merge_della(p, 0.5, 0.2, 42));
    }
    state.SetItemsProcessed(state.iterations() * 5 * state.range(0));
}
BENCHMARK(BM_Della)->Arg(1 << 16)->Arg(1 << 20);

void BM_PermutationTest(benchmark::State& state) {
    PairedSeries s;
    CounterRng rng(derive_stream_key(3, "perm", "x"));
    for (int i = 0; i < 50; ++i) {
        s.x.push_back(rng.gaussian(static_cast<uint64_t>(2 * i)));
        s.y.push_back(rng.gaussian(static_cast<uint64_t>(2 * i + 1)));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(permutation_test(s, state.range(0), 42));
    }
}
BENCHMARK(BM_PermutationTest)->Arg(10000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
