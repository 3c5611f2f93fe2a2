#include "gcl/contrastive.hpp"

#include "gcl/errors.hpp"

#include <algorithm>

namespace gcl {

namespace {

std::vector<Eigen::Index> random_permutation(Eigen::Index count, SeededRng& rng) {
    std::vector<Eigen::Index> pi(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i) pi[static_cast<std::size_t>(i)] = i;
    // Fisher-Yates with the project rng; fixed points allowed.
    for (Eigen::Index i = count - 1; i > 0; --i) {
        auto j = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
        std::swap(pi[static_cast<std::size_t>(i)], pi[static_cast<std::size_t>(j)]);
    }
    return pi;
}

Matrix one_hot_encode(const Eigen::Ref<const Vector>& index_col, int classes) {
    Matrix out = Matrix::Zero(index_col.size(), classes);
    for (Eigen::Index t = 0; t < index_col.size(); ++t) {
        int k = static_cast<int>(index_col(t));
        if (k < 0 || k >= classes)
            throw StrategyMismatchError("one-hot encoding: index out of range");
        out(t, k) = 1.0;
    }
    return out;
}

void apply_negative_permutation(ContrastiveSet& cs) {
    const Eigen::Index tp = cs.positives;
    if (cs.permutation2.empty()) {
        for (Eigen::Index t = 0; t < tp; ++t)
            cs.u.row(tp + t) = cs.u.row(cs.permutation[static_cast<std::size_t>(t)]);
    } else {
        // Combined strategy with separate randomization of the time column.
        const Eigen::Index last = cs.u.cols() - 1;
        for (Eigen::Index t = 0; t < tp; ++t) {
            cs.u.block(tp + t, 0, 1, last) =
                cs.u.block(cs.permutation[static_cast<std::size_t>(t)], 0, 1, last);
            cs.u(tp + t, last) = cs.u(cs.permutation2[static_cast<std::size_t>(t)], last);
        }
    }
}

}  // namespace

ContrastiveSet build_pairs(const SourceDataset& ds, const AuxStrategy& strategy,
                           SeededRng& rng) {
    using Kind = AuxStrategy::Kind;
    const Eigen::Index T = ds.rows();
    if (ds.X.size() == 0)
        throw StrategyMismatchError("build_pairs: dataset has no observations X");

    Eigen::Index start = 0;
    if (strategy.kind == Kind::History || strategy.kind == Kind::Combined) {
        if (strategy.lag < 1) throw InvalidInputError("build_pairs: lag must be >= 1");
        start = strategy.lag;
    }
    const Eigen::Index tp = T - start;
    if (tp < 1) throw StrategyMismatchError("build_pairs: no usable rows after lag exclusion");

    const std::string gen_type =
        ds.generator_spec.value("type", std::string(""));
    int segments = ds.generator_spec.value("segments", 0);

    // Positive-class auxiliary rows.
    Matrix u_pos;
    int segment_count = 0;
    switch (strategy.kind) {
        case Kind::TimeIndex: {
            u_pos.resize(tp, 1);
            for (Eigen::Index t = 0; t < tp; ++t)
                u_pos(t, 0) = static_cast<double>(start + t + 1) / static_cast<double>(T);
            break;
        }
        case Kind::SegmentLabel:
        case Kind::ClassLabel: {
            if (gen_type != "segmented" || segments < 1)
                throw StrategyMismatchError(
                    "build_pairs: segment/class-label strategy needs a segmented dataset");
            Vector idx = ds.U.col(0);
            if (strategy.one_hot) {
                u_pos = one_hot_encode(idx, segments);
            } else {
                u_pos = idx;
                segment_count = segments;
            }
            break;
        }
        case Kind::History: {
            u_pos.resize(tp, ds.n);
            for (Eigen::Index t = 0; t < tp; ++t)
                u_pos.row(t) = ds.X.row(start + t - strategy.lag);
            break;
        }
        case Kind::Combined: {
            u_pos.resize(tp, ds.n + 1);
            for (Eigen::Index t = 0; t < tp; ++t) {
                u_pos.block(t, 0, 1, ds.n) = ds.X.row(start + t - strategy.lag);
                u_pos(t, ds.n) =
                    static_cast<double>(start + t + 1) / static_cast<double>(T);
            }
            break;
        }
        case Kind::SpatialGrid: {
            if (gen_type != "grid")
                throw StrategyMismatchError("build_pairs: spatial-grid strategy needs a grid dataset");
            u_pos = ds.U;
            break;
        }
    }

    ContrastiveSet cs;
    cs.positives = tp;
    cs.segment_count = segment_count;
    cs.degenerate = tp == 1;
    cs.x.resize(2 * tp, ds.n);
    cs.u.resize(2 * tp, u_pos.cols());
    cs.labels.assign(static_cast<std::size_t>(2 * tp), 0);
    for (Eigen::Index t = 0; t < tp; ++t) {
        cs.x.row(t) = ds.X.row(start + t);
        cs.x.row(tp + t) = ds.X.row(start + t);
        cs.u.row(t) = u_pos.row(t);
        cs.labels[static_cast<std::size_t>(t)] = 1;
    }

    cs.permutation = random_permutation(tp, rng);
    if (strategy.kind == Kind::Combined && strategy.separate_permutation)
        cs.permutation2 = random_permutation(tp, rng);
    apply_negative_permutation(cs);
    return cs;
}

void resample_negatives(ContrastiveSet& cs, SeededRng& rng) {
    cs.permutation = random_permutation(cs.positives, rng);
    if (!cs.permutation2.empty()) cs.permutation2 = random_permutation(cs.positives, rng);
    apply_negative_permutation(cs);
}

std::vector<std::vector<Eigen::Index>> minibatches(const ContrastiveSet& cs,
                                                   Eigen::Index batch, SeededRng& rng) {
    const Eigen::Index total = 2 * cs.positives;
    if (batch < 1 || batch > total)
        throw InvalidInputError("minibatches: batch size out of range");

    std::vector<Eigen::Index> pos, neg;
    pos.reserve(static_cast<std::size_t>(cs.positives));
    neg.reserve(static_cast<std::size_t>(cs.positives));
    for (Eigen::Index i = 0; i < total; ++i)
        (cs.labels[static_cast<std::size_t>(i)] ? pos : neg).push_back(i);
    auto shuffle = [&rng](std::vector<Eigen::Index>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[rng.uniform_index(i)]);
    };
    shuffle(pos);
    shuffle(neg);

    std::vector<std::vector<Eigen::Index>> batches;
    std::size_t pi = 0, ni = 0;
    while (pi < pos.size() || ni < neg.size()) {
        std::vector<Eigen::Index> b;
        b.reserve(static_cast<std::size_t>(batch));
        Eigen::Index half = batch / 2;
        for (Eigen::Index i = 0; i < half && pi < pos.size(); ++i) b.push_back(pos[pi++]);
        for (Eigen::Index i = 0; i < batch - half && ni < neg.size(); ++i)
            b.push_back(neg[ni++]);
        // Top up from whichever class remains so no index is dropped.
        while (static_cast<Eigen::Index>(b.size()) < batch && pi < pos.size())
            b.push_back(pos[pi++]);
        while (static_cast<Eigen::Index>(b.size()) < batch && ni < neg.size())
            b.push_back(neg[ni++]);
        batches.push_back(std::move(b));
    }
    return batches;
}

}  // namespace gcl
