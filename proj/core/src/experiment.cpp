#include "gcl/experiment.hpp"

#include "gcl/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace gcl {

namespace {

std::string strategy_name(const AuxStrategy& s) {
    using Kind = AuxStrategy::Kind;
    switch (s.kind) {
        case Kind::TimeIndex: return "time-index";
        case Kind::SegmentLabel: return "segment-label";
        case Kind::History: return "history";
        case Kind::Combined: return "combined";
        case Kind::ClassLabel: return "class-label";
        case Kind::SpatialGrid: return "spatial-grid";
    }
    return "?";
}

AuxStrategy strategy_from_name(const std::string& name, const nlohmann::json& j) {
    AuxStrategy s;
    using Kind = AuxStrategy::Kind;
    if (name == "time-index") s.kind = Kind::TimeIndex;
    else if (name == "segment-label") s.kind = Kind::SegmentLabel;
    else if (name == "history") s.kind = Kind::History;
    else if (name == "combined") s.kind = Kind::Combined;
    else if (name == "class-label") s.kind = Kind::ClassLabel;
    else if (name == "spatial-grid") s.kind = Kind::SpatialGrid;
    else throw InvalidInputError("config: unknown strategy.type '" + name + "'");
    s.one_hot = j.value("one_hot", false);
    s.lag = j.value("lag", 1);
    s.separate_permutation = j.value("separate_permutation", false);
    return s;
}

std::uint64_t fnv1a_str(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json gen;
    if (generator_type == "grid") {
        gen = {{"type", "grid"},
               {"n", grid.n},
               {"grid_side", grid.grid_side},
               {"blobs_per_source", grid.blobs_per_source},
               {"floor", grid.floor},
               {"amp_lo", grid.amp_lo},
               {"amp_hi", grid.amp_hi},
               {"width_lo", grid.width_lo},
               {"width_hi", grid.width_hi}};
    } else if (generator_type == "segmented") {
        gen = {{"type", "segmented"},
               {"n", segmented.n},
               {"T", segmented.T},
               {"segments", segmented.segments},
               {"sigma_lo", segmented.sigma_lo},
               {"sigma_hi", segmented.sigma_hi}};
    } else {
        gen = {{"type", "ar"},
               {"n", ar.n},
               {"T", ar.T},
               {"rho_lo", ar.rho_lo},
               {"rho_hi", ar.rho_hi},
               {"g", ar.g == ArNonlinearity::Tanh ? "tanh" : "identity"}};
    }

    nlohmann::json j = {
        {"generator", gen},
        {"mixing",
         {{"apply", apply_mixing},
          {"layers", mixing.layers},
          {"condition_bound", mixing.condition_bound},
          {"leaky_slope", mixing.leaky_slope},
          {"max_retries", mixing.max_retries}}},
        {"strategy",
         {{"type", strategy_name(strategy)},
          {"one_hot", strategy.one_hot},
          {"lag", strategy.lag},
          {"separate_permutation", strategy.separate_permutation}}},
        {"model",
         {{"head", head == HeadKind::General ? "general" : "expfam"},
          {"psi_width", psi_width},
          {"k", expfam_k},
          {"a_width", a_width}}},
        {"train",
         {{"epochs", train.epochs},
          {"batch", train.batch},
          {"learning_rate", train.learning_rate},
          {"l2", train.l2},
          {"optimizer", train.optimizer == Optimizer::PlainSgd ? "plain-sgd"
                                                               : "adaptive-moment"},
          {"beta1", train.beta1},
          {"beta2", train.beta2},
          {"adam_eps", train.adam_eps},
          {"resample_negatives", train.resample_negatives_each_epoch}}},
        {"eval",
         {{"variant", variant == MccVariant::Raw ? "raw" : "absolute-value"},
          {"apply_fastica", apply_fastica},
          {"ica_contrast", ica.contrast == IcaContrast::Tanh ? "tanh" : "cube"},
          {"ica_max_iters", ica.max_iters},
          {"ica_tol", ica.tol}}},
        {"seeds", seeds},
        {"output_dir", output_dir}};
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    const auto& gen = j.at("generator");
    cfg.generator_type = gen.at("type").get<std::string>();
    if (cfg.generator_type == "grid") {
        cfg.grid.n = gen.at("n").get<int>();
        if (cfg.grid.n < 2) throw InvalidInputError("config: generator.n must be >= 2");
        cfg.grid.grid_side = gen.value("grid_side", 256);
        cfg.grid.blobs_per_source = gen.value("blobs_per_source", 3);
        cfg.grid.floor = gen.value("floor", 0.3);
        cfg.grid.amp_lo = gen.value("amp_lo", 0.5);
        cfg.grid.amp_hi = gen.value("amp_hi", 2.0);
        cfg.grid.width_lo = gen.value("width_lo", 0.05);
        cfg.grid.width_hi = gen.value("width_hi", 0.2);
    } else if (cfg.generator_type == "segmented") {
        cfg.segmented.n = gen.at("n").get<int>();
        if (cfg.segmented.n < 1) throw InvalidInputError("config: generator.n must be >= 1");
        cfg.segmented.T = gen.value("T", 1 << 16);
        cfg.segmented.segments = gen.value("segments", 64);
        cfg.segmented.sigma_lo = gen.value("sigma_lo", 0.2);
        cfg.segmented.sigma_hi = gen.value("sigma_hi", 3.0);
    } else if (cfg.generator_type == "ar") {
        cfg.ar.n = gen.at("n").get<int>();
        cfg.ar.T = gen.value("T", 1 << 16);
        cfg.ar.rho_lo = gen.value("rho_lo", 0.5);
        cfg.ar.rho_hi = gen.value("rho_hi", 0.9);
        cfg.ar.g = gen.value("g", std::string("identity")) == "tanh"
                       ? ArNonlinearity::Tanh
                       : ArNonlinearity::Identity;
    } else {
        throw InvalidInputError("config: unknown generator.type '" + cfg.generator_type + "'");
    }

    if (j.contains("mixing")) {
        const auto& m = j.at("mixing");
        cfg.apply_mixing = m.value("apply", true);
        cfg.mixing.layers = m.value("layers", 3);
        cfg.mixing.condition_bound = m.value("condition_bound", 10.0);
        cfg.mixing.leaky_slope = m.value("leaky_slope", 0.2);
        cfg.mixing.max_retries = m.value("max_retries", 1000);
    }
    if (j.contains("strategy")) {
        const auto& s = j.at("strategy");
        cfg.strategy = strategy_from_name(s.at("type").get<std::string>(), s);
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        std::string head = m.value("head", std::string("expfam"));
        if (head == "general") cfg.head = HeadKind::General;
        else if (head == "expfam") cfg.head = HeadKind::ExpFam;
        else throw InvalidInputError("config: unknown model.head '" + head + "'");
        cfg.psi_width = m.value("psi_width", 32);
        cfg.expfam_k = m.value("k", 1);
        cfg.a_width = m.value("a_width", 32);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        cfg.train.epochs = t.value("epochs", 60);
        cfg.train.batch = t.value("batch", Eigen::Index(512));
        cfg.train.learning_rate = t.value("learning_rate", 1e-3);
        cfg.train.l2 = t.value("l2", 1e-4);
        cfg.train.optimizer = t.value("optimizer", std::string("adaptive-moment")) ==
                                      "plain-sgd"
                                  ? Optimizer::PlainSgd
                                  : Optimizer::AdaptiveMoment;
        cfg.train.beta1 = t.value("beta1", 0.9);
        cfg.train.beta2 = t.value("beta2", 0.999);
        cfg.train.adam_eps = t.value("adam_eps", 1e-8);
        cfg.train.resample_negatives_each_epoch = t.value("resample_negatives", true);
    }
    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        cfg.variant = e.value("variant", std::string("absolute-value")) == "raw"
                          ? MccVariant::Raw
                          : MccVariant::AbsoluteValue;
        cfg.apply_fastica = e.value("apply_fastica", true);
        cfg.ica.contrast = e.value("ica_contrast", std::string("tanh")) == "cube"
                               ? IcaContrast::Cube
                               : IcaContrast::Tanh;
        cfg.ica.max_iters = e.value("ica_max_iters", 500);
        cfg.ica.tol = e.value("ica_tol", 1e-6);
    }
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    return cfg;
}

std::string run_id(const ExperimentConfig& cfg, std::uint64_t seed) {
    nlohmann::json j = cfg.to_json();
    j["seed"] = seed;
    std::uint64_t h = fnv1a_str(j.dump());
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

SourceDataset synthesize(const ExperimentConfig& cfg, std::uint64_t seed) {
    SeededRng root(seed, 0);
    SeededRng data_rng = root.split(1);
    SourceDataset ds;
    if (cfg.generator_type == "grid") ds = gen_grid_scale_mixture(cfg.grid, data_rng);
    else if (cfg.generator_type == "segmented")
        ds = gen_segmented_sources(cfg.segmented, data_rng);
    else ds = gen_ar_sources(cfg.ar, data_rng);
    if (cfg.apply_mixing) attach_mixing(ds, cfg.mixing, root.split(2));
    return ds;
}

DiscriminatorModel make_model(const ExperimentConfig& cfg, const ContrastiveSet& cs,
                              std::uint64_t seed) {
    SeededRng root(seed, 0);
    SeededRng init_rng = root.split(4);
    const int n = static_cast<int>(cs.x.cols());
    FeatureNet net(n, init_rng);
    if (cfg.head == HeadKind::General) {
        return DiscriminatorModel(std::move(net),
                                  GeneralHead(n, static_cast<int>(cs.u.cols()),
                                              cfg.psi_width, init_rng));
    }
    if (cs.segment_count < 1)
        throw StrategyMismatchError(
            "make_model: exponential-family head needs an integral segment index "
            "(segment-label strategy without one-hot)");
    return DiscriminatorModel(std::move(net),
                              ExpFamHead(n, cs.segment_count, cfg.expfam_k, cfg.a_width,
                                         init_rng));
}

RunResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                         const SourceDataset* dataset) {
    auto t0 = std::chrono::steady_clock::now();
    SeededRng root(seed, 0);

    SourceDataset local;
    const SourceDataset* ds = dataset;
    if (!ds) {
        local = synthesize(cfg, seed);
        ds = &local;
    }

    SeededRng pairs_rng = root.split(3);
    ContrastiveSet cs = build_pairs(*ds, cfg.strategy, pairs_rng);
    DiscriminatorModel model = make_model(cfg, cs, seed);

    TrainConfig tc = cfg.train;
    tc.seed = splitmix64(seed ^ 0x74726169ULL);

    RunResult res;
    res.id = run_id(cfg, seed);
    res.seed = seed;
    res.trace = train(model, cs, tc);
    res.final_accuracy = discrimination_accuracy(model, cs);

    Matrix features = model.features(ds->X);
    res.report_raw = mcc(features, ds->S, cfg.variant);
    if (cfg.apply_fastica) {
        FastIcaConfig ic = cfg.ica;
        ic.seed = splitmix64(seed ^ 0x696361ULL);
        UnmixResult unmix = fastica(features, ic);
        res.report_ica = mcc(unmix.components, ds->S, cfg.variant);
    }
    res.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

nlohmann::json RunResult::eval_json(const ExperimentConfig& cfg) const {
    nlohmann::json j = {{"run_id", id},
                        {"seed", seed},
                        {"config_hash", run_id(cfg, seed)},
                        {"final_accuracy", final_accuracy},
                        {"proposed", report_raw.to_json()}};
    if (report_ica) j["proposed_with_ica"] = report_ica->to_json();
    return j;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {
constexpr char kModelMagic[10] = "GCLMODEL1";
}

void save_model(const DiscriminatorModel& model, const nlohmann::json& meta,
                const std::string& path) {
    nlohmann::json header = meta;
    header["n"] = model.n();
    if (model.head_kind() == HeadKind::General) {
        const auto& h = model.general_head();
        header["head"] = "general";
        header["u_dim"] = h.u_dim();
        header["psi_width"] = h.width();
    } else {
        const auto& h = model.expfam_head();
        header["head"] = "expfam";
        header["segments"] = h.segments();
        header["k"] = h.k();
        header["a_width"] = h.a_width();
    }

    Vector params = model.params();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("save_model: cannot open " + path);
    os.write(kModelMagic, 9);
    std::string hs = header.dump();
    std::uint64_t len = hs.size();
    os.write(reinterpret_cast<const char*>(&len), 8);
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    std::uint64_t count = static_cast<std::uint64_t>(params.size());
    os.write(reinterpret_cast<const char*>(&count), 8);
    os.write(reinterpret_cast<const char*>(params.data()),
             static_cast<std::streamsize>(sizeof(double) * params.size()));
    if (!os) throw IoError("save_model: write failed for " + path);
}

std::pair<DiscriminatorModel, nlohmann::json> load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("load_model: cannot open " + path);
    char magic[9];
    is.read(magic, 9);
    if (!is || std::string(magic, 9) != std::string(kModelMagic, 9))
        throw IoError("load_model: bad magic in " + path);
    std::uint64_t len = 0;
    is.read(reinterpret_cast<char*>(&len), 8);
    std::string hs(len, '\0');
    is.read(hs.data(), static_cast<std::streamsize>(len));
    nlohmann::json header = nlohmann::json::parse(hs);

    std::uint64_t count = 0;
    is.read(reinterpret_cast<char*>(&count), 8);
    Vector params(static_cast<Eigen::Index>(count));
    is.read(reinterpret_cast<char*>(params.data()),
            static_cast<std::streamsize>(sizeof(double) * count));
    if (!is) throw IoError("load_model: truncated file " + path);

    SeededRng dummy(0, 0);
    int n = header.at("n").get<int>();
    FeatureNet net(n, dummy);
    if (header.at("head").get<std::string>() == "general") {
        DiscriminatorModel model(std::move(net),
                                 GeneralHead(n, header.at("u_dim").get<int>(),
                                             header.at("psi_width").get<int>(), dummy));
        model.set_params(params);
        return {std::move(model), header};
    }
    DiscriminatorModel model(
        std::move(net),
        ExpFamHead(n, header.at("segments").get<int>(), header.at("k").get<int>(),
                   header.value("a_width", 32), dummy));
    model.set_params(params);
    return {std::move(model), header};
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

SweepResult sweep_segments(const ExperimentConfig& cfg, const std::vector<int>& segments,
                           int jobs) {
    if (const char* det = std::getenv("GCL_DETERMINISTIC"); det && det[0] == '1') jobs = 1;
    jobs = std::max(jobs, 1);

    SweepResult result;
    for (int seg : segments)
        for (std::uint64_t seed : cfg.seeds) {
            SweepCell cell;
            cell.segments = seg;
            cell.seed = seed;
            result.cells.push_back(cell);
        }
    // Aggregation is order-stable regardless of the axis/seed input order.
    std::sort(result.cells.begin(), result.cells.end(),
              [](const SweepCell& a, const SweepCell& b) {
                  return a.segments != b.segments ? a.segments < b.segments
                                                  : a.seed < b.seed;
              });

    auto run_cell = [&](SweepCell& cell) {
        try {
            ExperimentConfig local = cfg;
            local.segmented.segments = cell.segments;
            RunResult rr = run_experiment(local, cell.seed);
            cell.mcc_raw = rr.report_raw.mcc;
            cell.mcc_ica = rr.report_ica ? rr.report_ica->mcc : rr.report_raw.mcc;
        } catch (const std::exception& e) {
            cell.failed = true;
            cell.error = e.what();
        }
    };

    if (jobs == 1) {
        for (auto& cell : result.cells) run_cell(cell);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= result.cells.size()) return;
                run_cell(result.cells[i]);
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return result;
}

std::string SweepResult::csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "method,segments,seed,mcc\n";
    for (const auto& c : cells) {
        if (c.failed) {
            os << "failed," << c.segments << ',' << c.seed << ",nan\n";
            continue;
        }
        os << "proposed," << c.segments << ',' << c.seed << ',' << c.mcc_raw << '\n';
        os << "proposed_with_ica," << c.segments << ',' << c.seed << ',' << c.mcc_ica
           << '\n';
    }
    return os.str();
}

std::string SweepResult::plot_data(const ExperimentConfig& cfg) const {
    // gnuplot columns: segments, mean mcc, std over seeds (ICA variant).
    std::ostringstream os;
    os.precision(17);
    os << "# config " << run_id(cfg, 0) << "\n";
    os << "# segments mean_mcc std_mcc n_seeds\n";
    std::vector<int> segs;
    for (const auto& c : cells)
        if (std::find(segs.begin(), segs.end(), c.segments) == segs.end())
            segs.push_back(c.segments);
    std::sort(segs.begin(), segs.end());
    for (int seg : segs) {
        double sum = 0.0, sum2 = 0.0;
        int count = 0;
        for (const auto& c : cells) {
            if (c.segments != seg || c.failed) continue;
            sum += c.mcc_ica;
            sum2 += c.mcc_ica * c.mcc_ica;
            ++count;
        }
        if (count == 0) continue;
        double mean = sum / count;
        double var = std::max(0.0, sum2 / count - mean * mean);
        os << seg << ' ' << mean << ' ' << std::sqrt(var) << ' ' << count << '\n';
    }
    return os.str();
}

}  // namespace gcl
