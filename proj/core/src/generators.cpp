#include "gcl/generators.hpp"

#include "gcl/errors.hpp"

#include <cmath>

namespace gcl {

namespace {

SeededRng fresh(const SeededRng& rng) { return SeededRng(rng.seed(), rng.stream()); }

nlohmann::json rng_identity(const SeededRng& rng) {
    return {{"seed", rng.seed()}, {"stream", rng.stream()}};
}

}  // namespace

int segment_of_row(Eigen::Index t, Eigen::Index T, int segments) {
    Eigen::Index seg_len = T / segments;
    int k = static_cast<int>(t / seg_len);
    return k < segments ? k : segments - 1;
}

SourceDataset gen_grid_scale_mixture(const GridParams& p, const SeededRng& rng_in) {
    if (p.n < 2) throw InvalidInputError("gen_grid_scale_mixture: n must be >= 2");
    if (p.grid_side < 1) throw InvalidInputError("gen_grid_scale_mixture: grid_side must be >= 1");
    if (p.blobs_per_source < 1)
        throw InvalidInputError("gen_grid_scale_mixture: blobs_per_source must be >= 1");

    SeededRng rng = fresh(rng_in);
    const Eigen::Index T = static_cast<Eigen::Index>(p.grid_side) * p.grid_side;

    // Blob geometry per source: center, width, amplitude.
    nlohmann::json blob_record = nlohmann::json::array();
    struct Blob {
        double cx, cy, width, amp;
    };
    std::vector<std::vector<Blob>> blobs(static_cast<std::size_t>(p.n));
    for (int i = 0; i < p.n; ++i) {
        nlohmann::json source_blobs = nlohmann::json::array();
        for (int b = 0; b < p.blobs_per_source; ++b) {
            Blob blob;
            blob.cx = rng.uniform();
            blob.cy = rng.uniform();
            blob.width = rng.uniform(p.width_lo, p.width_hi);
            blob.amp = rng.uniform(p.amp_lo, p.amp_hi);
            blobs[static_cast<std::size_t>(i)].push_back(blob);
            source_blobs.push_back({{"cx", blob.cx},
                                    {"cy", blob.cy},
                                    {"width", blob.width},
                                    {"amp", blob.amp}});
        }
        blob_record.push_back(source_blobs);
    }

    SourceDataset ds;
    ds.n = p.n;
    ds.m = 2;
    ds.S.resize(T, p.n);
    ds.U.resize(T, 2);
    for (Eigen::Index t = 0; t < T; ++t) {
        double xi = (static_cast<double>(t % p.grid_side) + 0.5) / p.grid_side;
        double eta = (static_cast<double>(t / p.grid_side) + 0.5) / p.grid_side;
        ds.U(t, 0) = xi;
        ds.U(t, 1) = eta;
        for (int i = 0; i < p.n; ++i) {
            double sigma = p.floor;
            for (const Blob& b : blobs[static_cast<std::size_t>(i)]) {
                double dx = xi - b.cx;
                double dy = eta - b.cy;
                sigma += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.width * b.width));
            }
            ds.S(t, i) = sigma * rng.laplace_unit();
        }
    }

    ds.generator_spec = {{"type", "grid"},
                         {"n", p.n},
                         {"grid_side", p.grid_side},
                         {"blobs_per_source", p.blobs_per_source},
                         {"floor", p.floor},
                         {"amp_lo", p.amp_lo},
                         {"amp_hi", p.amp_hi},
                         {"width_lo", p.width_lo},
                         {"width_hi", p.width_hi},
                         {"rng", rng_identity(rng_in)},
                         {"blobs", blob_record}};
    return ds;
}

Matrix segment_sigma_table(const SegmentedParams& p, const SeededRng& rng_in) {
    SeededRng rng = fresh(rng_in);
    // One-hidden-layer random network on a random Gaussian embedding of the
    // segment index. The embedding (rather than the raw scalar index) keeps
    // the per-segment modulation vectors spread over all components instead
    // of tracing a one-dimensional curve.
    constexpr int kHidden = 16;
    constexpr int kEmbed = 8;
    Matrix w1(kHidden, kEmbed);
    Vector b1(kHidden);
    Matrix w2(p.n, kHidden);
    for (int j = 0; j < kHidden; ++j)
        for (int e = 0; e < kEmbed; ++e) w1(j, e) = rng.normal() / std::sqrt(double(kEmbed));
    for (int j = 0; j < kHidden; ++j) b1(j) = 0.5 * rng.normal();
    for (int i = 0; i < p.n; ++i)
        for (int j = 0; j < kHidden; ++j) w2(i, j) = rng.normal() / std::sqrt(double(kHidden));

    Matrix sigma(p.segments, p.n);
    for (int k = 0; k < p.segments; ++k) {
        Vector embed(kEmbed);
        for (int e = 0; e < kEmbed; ++e) embed(e) = rng.normal();
        Vector h = (w1 * embed + b1).array().tanh();
        Vector out = w2 * h;
        // Hidden activations land mostly in (-1, 1), so scale the output to
        // cover the clamp interval instead of saturating one end of it.
        const double scale = 2.0 * (p.sigma_hi - p.sigma_lo);
        for (int i = 0; i < p.n; ++i)
            sigma(k, i) = std::clamp(std::abs(scale * out(i)), p.sigma_lo, p.sigma_hi);
    }
    return sigma;
}

SourceDataset gen_segmented_sources(const SegmentedParams& p, const SeededRng& rng_in) {
    if (p.n < 1) throw InvalidInputError("gen_segmented_sources: n must be >= 1");
    if (p.segments < 1) throw InvalidInputError("gen_segmented_sources: segments must be >= 1");
    if (p.segments > p.T)
        throw InvalidInputError("gen_segmented_sources: more segments than samples");

    SeededRng rng = fresh(rng_in);
    Matrix sigma = segment_sigma_table(p, rng.split(1));

    SourceDataset ds;
    ds.n = p.n;
    ds.m = 1;
    ds.S.resize(p.T, p.n);
    ds.U.resize(p.T, 1);
    for (Eigen::Index t = 0; t < p.T; ++t) {
        int k = segment_of_row(t, p.T, p.segments);
        ds.U(t, 0) = static_cast<double>(k);
        for (int i = 0; i < p.n; ++i)
            ds.S(t, i) = sigma(k, i) * rng.laplace_unit();
    }

    nlohmann::json sigma_record = nlohmann::json::array();
    for (int k = 0; k < p.segments; ++k) {
        nlohmann::json row = nlohmann::json::array();
        for (int i = 0; i < p.n; ++i) row.push_back(sigma(k, i));
        sigma_record.push_back(row);
    }
    ds.generator_spec = {{"type", "segmented"},
                         {"n", p.n},
                         {"T", p.T},
                         {"segments", p.segments},
                         {"sigma_lo", p.sigma_lo},
                         {"sigma_hi", p.sigma_hi},
                         {"rng", rng_identity(rng_in)},
                         {"sigma", sigma_record}};
    return ds;
}

SourceDataset gen_ar_sources(const ArParams& p, const SeededRng& rng_in) {
    if (p.T < 2) throw InvalidInputError("gen_ar_sources: T must be >= 2");
    if (p.n < 1) throw InvalidInputError("gen_ar_sources: n must be >= 1");

    SeededRng rng = fresh(rng_in);
    Vector rho(p.n);
    for (int i = 0; i < p.n; ++i) rho(i) = rng.uniform(p.rho_lo, p.rho_hi);

    SourceDataset ds;
    ds.n = p.n;
    ds.m = 1;
    ds.S.resize(p.T, p.n);
    ds.U.resize(p.T, 1);
    for (int i = 0; i < p.n; ++i) ds.S(0, i) = rng.laplace_unit();
    ds.U(0, 0) = 0.5 / p.T;
    for (Eigen::Index t = 1; t < p.T; ++t) {
        ds.U(t, 0) = (static_cast<double>(t) + 0.5) / p.T;
        for (int i = 0; i < p.n; ++i) {
            double prev = ds.S(t - 1, i);
            double g = p.g == ArNonlinearity::Tanh ? std::tanh(prev) : prev;
            ds.S(t, i) = rho(i) * g + rng.laplace_unit();
        }
    }

    nlohmann::json rho_record = nlohmann::json::array();
    for (int i = 0; i < p.n; ++i) rho_record.push_back(rho(i));
    ds.generator_spec = {{"type", "ar"},
                         {"n", p.n},
                         {"T", p.T},
                         {"rho_lo", p.rho_lo},
                         {"rho_hi", p.rho_hi},
                         {"g", p.g == ArNonlinearity::Tanh ? "tanh" : "identity"},
                         {"rng", rng_identity(rng_in)},
                         {"rho", rho_record}};
    return ds;
}

void attach_mixing(SourceDataset& ds, const MixingParams& params, const SeededRng& rng_in) {
    SeededRng rng = fresh(rng_in);
    MixingNet net = gen_mixing_net(ds.n, params, rng);
    ds.X = net.forward(ds.S);
    ds.generator_spec["mixing"] = {{"layers", params.layers},
                                   {"condition_bound", params.condition_bound},
                                   {"leaky_slope", params.leaky_slope},
                                   {"max_retries", params.max_retries},
                                   {"rng", rng_identity(rng_in)}};
}

SourceDataset generate_from_spec(const nlohmann::json& spec) {
    const std::string type = spec.at("type").get<std::string>();
    SeededRng rng(spec.at("rng").at("seed").get<std::uint64_t>(),
                  spec.at("rng").at("stream").get<std::uint64_t>());
    SourceDataset ds;
    if (type == "grid") {
        GridParams p;
        p.n = spec.at("n").get<int>();
        p.grid_side = spec.at("grid_side").get<int>();
        p.blobs_per_source = spec.at("blobs_per_source").get<int>();
        p.floor = spec.at("floor").get<double>();
        p.amp_lo = spec.at("amp_lo").get<double>();
        p.amp_hi = spec.at("amp_hi").get<double>();
        p.width_lo = spec.at("width_lo").get<double>();
        p.width_hi = spec.at("width_hi").get<double>();
        ds = gen_grid_scale_mixture(p, rng);
    } else if (type == "segmented") {
        SegmentedParams p;
        p.n = spec.at("n").get<int>();
        p.T = spec.at("T").get<int>();
        p.segments = spec.at("segments").get<int>();
        p.sigma_lo = spec.at("sigma_lo").get<double>();
        p.sigma_hi = spec.at("sigma_hi").get<double>();
        ds = gen_segmented_sources(p, rng);
    } else if (type == "ar") {
        ArParams p;
        p.n = spec.at("n").get<int>();
        p.T = spec.at("T").get<int>();
        p.rho_lo = spec.at("rho_lo").get<double>();
        p.rho_hi = spec.at("rho_hi").get<double>();
        p.g = spec.at("g").get<std::string>() == "tanh" ? ArNonlinearity::Tanh
                                                        : ArNonlinearity::Identity;
        ds = gen_ar_sources(p, rng);
    } else {
        throw InvalidInputError("generate_from_spec: unknown generator type " + type);
    }

    if (spec.contains("mixing")) {
        const auto& m = spec.at("mixing");
        MixingParams p;
        p.layers = m.at("layers").get<int>();
        p.condition_bound = m.at("condition_bound").get<double>();
        p.leaky_slope = m.at("leaky_slope").get<double>();
        p.max_retries = m.at("max_retries").get<int>();
        SeededRng mrng(m.at("rng").at("seed").get<std::uint64_t>(),
                       m.at("rng").at("stream").get<std::uint64_t>());
        attach_mixing(ds, p, mrng);
    }
    return ds;
}

}  // namespace gcl
