// Serial reference kernels against the OpenMP versions.

#include "sslstm/kernels.hpp"
#include "sslstm/neural.hpp"
#include "sslstm/rng.hpp"
#include "sslstm/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace sslstm;
using kernels::Trans;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

template <bool Parallel>
void BM_gemm(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_vec(n * n, 1), b = random_vec(n * n, 2);
    std::vector<double> c(n * n);
    for (auto _ : state) {
        if constexpr (Parallel) {
            kernels::gemm(Trans::No, Trans::No, n, n, n, a, b, c);
        } else {
            kernels::reference::gemm(Trans::No, Trans::No, n, n, n, a, b, c);
        }
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}

template <bool Parallel>
void BM_conv1d(benchmark::State& state)
{
    const std::size_t c_in = 32, c_out = 86, w = 3;
    const auto len = static_cast<std::size_t>(state.range(0));
    const auto in = random_vec(c_in * len, 3), f = random_vec(c_out * c_in * w, 4);
    std::vector<double> out(c_out * len);
    for (auto _ : state) {
        if constexpr (Parallel) {
            kernels::conv1d_forward(in, f, out, c_in, c_out, w, len);
        } else {
            kernels::reference::conv1d_forward(in, f, out, c_in, c_out, w, len);
        }
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * len));
}

void BM_inference(benchmark::State& state)
{
    static const SyntheticCorpus corpus = make_synthetic_corpus({.n_train = 300, .n_valid = 0, .n_test = 0});
    static const SsLstmModel model = SsLstmModel::create(NeuralModelSpec{}, corpus.train, &corpus.embeddings, 7);
    const auto batch = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        auto p = model.predict_proba(corpus.train.tweets, batch);
        benchmark::DoNotOptimize(p.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * corpus.train.tweets.size()));
}

} // namespace

BENCHMARK(BM_gemm<false>)->Name("gemm/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_gemm<true>)->Name("gemm/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_conv1d<false>)->Name("conv1d/serial")->Arg(256)->Arg(4096);
BENCHMARK(BM_conv1d<true>)->Name("conv1d/parallel")->Arg(256)->Arg(4096);
BENCHMARK(BM_inference)->Name("inference/batch")->Arg(1)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
