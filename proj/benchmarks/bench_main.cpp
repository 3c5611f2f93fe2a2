#include <benchmark/benchmark.h>

#include "gcl/contrastive.hpp"
#include "gcl/evalmetrics.hpp"
#include "gcl/fastica.hpp"
#include "gcl/generators.hpp"
#include "gcl/model.hpp"

using namespace gcl;

namespace {

ContrastiveSet make_set(int n, int T) {
    SegmentedParams p;
    p.n = n;
    p.T = T;
    p.segments = 16;
    SeededRng rng(1, 0);
    SourceDataset ds = gen_segmented_sources(p, rng);
    attach_mixing(ds, MixingParams{}, rng.split(2));
    SeededRng prng(1, 1);
    return build_pairs(ds, AuxStrategy::segment_label(), prng);
}

DiscriminatorModel make_general(int n, int segment_count) {
    SeededRng rng(7, 2);
    FeatureNet net(n, rng);
    GeneralHead head(n, 1, 32, rng);
    (void)segment_count;
    return DiscriminatorModel(std::move(net), std::move(head));
}

void BM_ModelForward(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    ContrastiveSet cs = make_set(n, 4096);
    DiscriminatorModel model = make_general(n, cs.segment_count);
    for (auto _ : state) {
        Vector r = model.regression(cs.x, cs.u);
        benchmark::DoNotOptimize(r.sum());
    }
    state.SetItemsProcessed(state.iterations() * cs.x.rows());
}
BENCHMARK(BM_ModelForward)->Arg(5)->Arg(10);

void BM_ModelLossAndGrad(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    ContrastiveSet cs = make_set(n, 512);
    DiscriminatorModel model = make_general(n, cs.segment_count);
    Vector grad;
    for (auto _ : state) {
        double loss = model.loss_and_grad(cs.x, cs.u, cs.labels, 1e-4, grad);
        benchmark::DoNotOptimize(loss);
        benchmark::DoNotOptimize(grad.sum());
    }
    state.SetItemsProcessed(state.iterations() * cs.x.rows());
}
BENCHMARK(BM_ModelLossAndGrad)->Arg(5)->Arg(10);

void BM_BuildPairs(benchmark::State& state) {
    SegmentedParams p;
    p.n = 5;
    p.T = static_cast<int>(state.range(0));
    p.segments = 16;
    SeededRng rng(1, 0);
    SourceDataset ds = gen_segmented_sources(p, rng);
    attach_mixing(ds, MixingParams{}, rng.split(2));
    for (auto _ : state) {
        SeededRng prng(1, 1);
        ContrastiveSet cs = build_pairs(ds, AuxStrategy::segment_label(), prng);
        benchmark::DoNotOptimize(cs.x.data());
    }
    state.SetItemsProcessed(state.iterations() * p.T);
}
BENCHMARK(BM_BuildPairs)->Arg(1 << 12)->Arg(1 << 15);

void BM_FastIca(benchmark::State& state) {
    const Eigen::Index T = state.range(0);
    SeededRng rng(3, 0);
    Matrix s(T, 5);
    for (Eigen::Index j = 0; j < 5; ++j)
        for (Eigen::Index t = 0; t < T; ++t) s(t, j) = rng.laplace_unit();
    Matrix g(5, 5);
    for (Eigen::Index i = 0; i < 5; ++i)
        for (Eigen::Index j = 0; j < 5; ++j) g(i, j) = rng.normal();
    Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
    Matrix x = s * q.transpose();
    FastIcaConfig cfg;
    cfg.seed = 5;
    for (auto _ : state) {
        UnmixResult res = fastica(x, cfg);
        benchmark::DoNotOptimize(res.components.data());
    }
    state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_FastIca)->Arg(1 << 13)->Arg(1 << 15);

void BM_Mcc(benchmark::State& state) {
    const Eigen::Index T = state.range(0);
    SeededRng rng(9, 0);
    Matrix a(T, 5), b(T, 5);
    for (Eigen::Index j = 0; j < 5; ++j)
        for (Eigen::Index t = 0; t < T; ++t) {
            a(t, j) = rng.normal();
            b(t, j) = 0.7 * a(t, j) + 0.3 * rng.normal();
        }
    for (auto _ : state) {
        EvalReport rep = mcc(a, b, MccVariant::AbsoluteValue);
        benchmark::DoNotOptimize(rep.mcc);
    }
    state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_Mcc)->Arg(1 << 13)->Arg(1 << 16);

}  // namespace

BENCHMARK_MAIN();
