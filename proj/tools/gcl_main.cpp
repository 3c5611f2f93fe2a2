// gcl: synthesize identifiable nonlinear-ICA data, train the contrastive
// discriminator, evaluate recovered components, and check identifiability
// conditions for conditionally exponential source families.

#include <CLI11.hpp>
#include <json.hpp>

#include "gcl/dataset.hpp"
#include "gcl/errors.hpp"
#include "gcl/experiment.hpp"
#include "gcl/theory.hpp"
#include "gcl/trainer.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;
constexpr int kExitEvalDegenerate = 5;

struct CliError {
    int code;
    std::string message;
};

json load_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw CliError{kExitConfig, "cannot open config file: " + path};
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw CliError{kExitConfig, std::string("config parse error: ") + e.what()};
    }
}

gcl::ExperimentConfig parse_config(const std::string& path) {
    try {
        return gcl::ExperimentConfig::from_json(load_json_file(path));
    } catch (const gcl::InvalidInputError& e) {
        throw CliError{kExitConfig, e.what()};
    } catch (const json::exception& e) {
        throw CliError{kExitConfig, std::string("config: ") + e.what()};
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CliError{kExitData, "cannot write " + path.string()};
    os << text;
}

int effective_jobs(int jobs) {
    if (const char* det = std::getenv("GCL_DETERMINISTIC"); det && det[0] == '1') return 1;
    return std::max(jobs, 1);
}

std::vector<std::uint64_t> effective_seeds(const gcl::ExperimentConfig& cfg,
                                           std::optional<std::uint64_t> seed_override) {
    if (seed_override) return {*seed_override};
    if (cfg.seeds.empty()) throw CliError{kExitConfig, "config: seeds list is empty"};
    return cfg.seeds;
}

int cmd_synth(const std::string& config_path, std::optional<std::uint64_t> seed_override,
              const std::string& out_dir) {
    gcl::ExperimentConfig cfg = parse_config(config_path);
    fs::create_directories(out_dir);
    for (std::uint64_t seed : effective_seeds(cfg, seed_override)) {
        gcl::SourceDataset ds;
        try {
            ds = gcl::synthesize(cfg, seed);
        } catch (const gcl::InvalidInputError& e) {
            throw CliError{kExitConfig, e.what()};
        } catch (const gcl::GenerationFailureError& e) {
            throw CliError{kExitData, e.what()};
        }
        fs::path path = fs::path(out_dir) /
                        ("dataset-" + gcl::run_id(cfg, seed) + ".gcldata");
        try {
            gcl::save_dataset(ds, path.string());
        } catch (const gcl::IoError& e) {
            throw CliError{kExitData, e.what()};
        }
        std::cout << path.string() << "\n";
    }
    return kExitOk;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed_override,
            const std::string& out_dir, const std::string& format) {
    gcl::ExperimentConfig cfg = parse_config(config_path);
    fs::create_directories(out_dir);
    std::vector<std::uint64_t> seeds = effective_seeds(cfg, seed_override);

    std::ostringstream agg;
    agg.precision(17);

    for (std::uint64_t seed : seeds) {
        gcl::RunResult rr;
        try {
            rr = gcl::run_experiment(cfg, seed);
        } catch (const gcl::InvalidInputError& e) {
            throw CliError{kExitConfig, e.what()};
        } catch (const gcl::StrategyMismatchError& e) {
            throw CliError{kExitConfig, e.what()};
        } catch (const gcl::GenerationFailureError& e) {
            throw CliError{kExitData, e.what()};
        } catch (const gcl::TrainingDivergenceError& e) {
            throw CliError{kExitDivergence,
                           std::string(e.what()) + " (epoch " + std::to_string(e.epoch) + ")"};
        } catch (const gcl::DegenerateDataError& e) {
            throw CliError{kExitEvalDegenerate, e.what()};
        }

        fs::path base = fs::path(out_dir) / ("run-" + rr.id);
        write_text(base.string() + ".trace.csv",
                   "# config " + rr.id + "\n" + rr.trace.to_csv());
        write_text(base.string() + ".eval.json", rr.eval_json(cfg).dump(2) + "\n");

        json record = {{"run_id", rr.id},
                       {"seed", seed},
                       {"config", cfg.to_json()},
                       {"trace", base.filename().string() + ".trace.csv"},
                       {"eval", base.filename().string() + ".eval.json"},
                       {"final_accuracy", rr.final_accuracy},
                       {"seconds", rr.seconds}};
        write_text(base.string() + ".record.json", record.dump(2) + "\n");

        double mcc_ica = rr.report_ica ? rr.report_ica->mcc : rr.report_raw.mcc;
        if (format == "json") {
            std::cout << rr.eval_json(cfg).dump(2) << "\n";
        } else {
            agg << rr.id << ',' << seed << ',' << rr.report_raw.mcc << ',' << mcc_ica
                << ',' << rr.final_accuracy << '\n';
        }
    }
    if (format == "csv") {
        std::string header = "run_id,seed,mcc_raw,mcc_ica,accuracy\n";
        std::cout << header << agg.str();
        write_text(fs::path(out_dir) / ("aggregate-" + gcl::run_id(cfg, seeds.front()) + ".csv"),
                   "# config " + gcl::run_id(cfg, seeds.front()) + "\n" + header + agg.str());
    }
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::vector<int>& segments,
              const std::string& out_dir, int jobs, const std::string& format) {
    gcl::ExperimentConfig cfg = parse_config(config_path);
    if (segments.empty())
        throw CliError{kExitConfig, "sweep: --segments needs at least one value"};
    for (int s : segments)
        if (s < 1) throw CliError{kExitConfig, "sweep: segment counts must be >= 1"};
    fs::create_directories(out_dir);

    gcl::SweepResult result = gcl::sweep_segments(cfg, segments, effective_jobs(jobs));
    std::string hash = gcl::run_id(cfg, 0);
    std::string csv = "# config " + hash + "\n" + result.csv();
    write_text(fs::path(out_dir) / ("sweep-" + hash + ".csv"), csv);
    write_text(fs::path(out_dir) / ("sweep-" + hash + ".plot.dat"), result.plot_data(cfg));
    if (format == "json") {
        json cells = json::array();
        for (const auto& c : result.cells) {
            cells.push_back({{"segments", c.segments},
                             {"seed", c.seed},
                             {"failed", c.failed},
                             {"error", c.error},
                             {"mcc_raw", c.mcc_raw},
                             {"mcc_ica", c.mcc_ica}});
        }
        std::cout << json{{"config_hash", hash}, {"cells", cells}}.dump(2) << "\n";
    } else {
        std::cout << csv;
    }
    return kExitOk;
}

int cmd_theory(const std::string& config_path, const std::string& check,
               std::uint64_t seed, const std::string& out_dir) {
    json spec = load_json_file(config_path);
    std::optional<gcl::ConditionalFamily> fam;
    try {
        fam.emplace(gcl::ConditionalFamily::from_json(spec));
    } catch (const gcl::InvalidInputError& e) {
        throw CliError{kExitConfig, e.what()};
    } catch (const json::exception& e) {
        throw CliError{kExitConfig, std::string("family spec: ") + e.what()};
    }

    gcl::SeededRng rng(seed, 0x7468656FULL);
    gcl::Vector y = gcl::Vector::Zero(fam->n());
    if (spec.contains("y")) {
        auto yv = spec.at("y").get<std::vector<double>>();
        if (static_cast<int>(yv.size()) != fam->n())
            throw CliError{kExitConfig, "family spec: y has wrong length"};
        y = Eigen::Map<const gcl::Vector>(yv.data(), fam->n());
    }

    json verdict;
    try {
        if (check == "variability") {
            verdict = gcl::check_variability(*fam, y, 100, rng).to_json();
        } else if (check == "alt-variability") {
            verdict = gcl::check_alt_variability(*fam, y, 0, 100, rng).to_json();
        } else if (check == "consistency") {
            verdict = gcl::check_expfam_consistency_form(*fam, 1000, seed).to_json();
        } else if (check == "lambda-bar") {
            const int points = fam->n() * fam->order() + 1;
            std::vector<gcl::Vector> us;
            us.reserve(static_cast<std::size_t>(points));
            for (int i = 0; i < points; ++i) us.push_back(fam->sample_u(rng));
            gcl::Matrix lb = gcl::lambda_bar(*fam, us);
            double cond = gcl::condition_number(lb);
            verdict = {{"check", "lambda-bar"},
                       {"rows", lb.rows()},
                       {"condition_number",
                        cond == gcl::kInfiniteCondition ? json("inf") : json(cond)},
                       {"invertible", cond != gcl::kInfiniteCondition}};
        } else {
            throw CliError{kExitConfig, "theory: unknown check '" + check + "'"};
        }
    } catch (const gcl::StrategyMismatchError& e) {
        throw CliError{kExitConfig, e.what()};
    }
    verdict["check"] = check;
    verdict["seed"] = seed;
    std::cout << verdict.dump(2) << "\n";
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text(fs::path(out_dir) / ("theory-" + check + ".json"),
                   verdict.dump(2) + "\n");
    }
    return kExitOk;
}

int cmd_grad_check(const std::string& config_path, std::uint64_t seed, int points,
                   double eps, const std::string& format) {
    gcl::ExperimentConfig cfg = parse_config(config_path);
    gcl::SourceDataset ds;
    gcl::ContrastiveSet cs;
    try {
        ds = gcl::synthesize(cfg, seed);
        gcl::SeededRng rng(seed, 3);
        cs = gcl::build_pairs(ds, cfg.strategy, rng);
    } catch (const gcl::InvalidInputError& e) {
        throw CliError{kExitConfig, e.what()};
    } catch (const gcl::StrategyMismatchError& e) {
        throw CliError{kExitConfig, e.what()};
    } catch (const gcl::GenerationFailureError& e) {
        throw CliError{kExitData, e.what()};
    }
    gcl::DiscriminatorModel model = gcl::make_model(cfg, cs, seed);
    gcl::GradCheckReport rep = gcl::grad_check(model, cs, points, eps, seed);
    if (format == "csv") {
        std::cout << "max_rel_error,checked,excluded\n"
                  << rep.max_rel_error << ',' << rep.checked << ',' << rep.excluded << "\n";
    } else {
        std::cout << json{{"max_rel_error", rep.max_rel_error},
                          {"checked", rep.checked},
                          {"excluded", rep.excluded}}
                         .dump(2)
                  << "\n";
    }
    return kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& variant_name, const std::string& out_dir) {
    gcl::SourceDataset ds;
    try {
        ds = gcl::load_dataset(data_path);
    } catch (const gcl::IoError& e) {
        throw CliError{kExitData, e.what()};
    }
    gcl::DiscriminatorModel model = [&] {
        try {
            auto [m, header] = gcl::load_model(model_path);
            return m;
        } catch (const gcl::IoError& e) {
            throw CliError{kExitData, e.what()};
        }
    }();

    const gcl::Matrix& obs = ds.X.size() > 0 ? ds.X : ds.S;
    gcl::MccVariant variant = variant_name == "raw" ? gcl::MccVariant::Raw
                                                    : gcl::MccVariant::AbsoluteValue;
    try {
        gcl::Matrix features = model.features(obs);
        gcl::EvalReport report = gcl::mcc(features, ds.S, variant);
        std::cout << report.to_json().dump(2) << "\n";
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            write_text(fs::path(out_dir) / "eval.json", report.to_json().dump(2) + "\n");
        }
    } catch (const gcl::DegenerateDataError& e) {
        throw CliError{kExitEvalDegenerate, e.what()};
    } catch (const gcl::InvalidInputError& e) {
        throw CliError{kExitData, e.what()};
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlinear ICA via generalized contrastive learning"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "runs", format = "csv";
    std::optional<std::uint64_t> seed_override;
    std::uint64_t seed_value = 1;
    int jobs = 1;

    auto add_common = [&](CLI::App* sub, bool needs_config = true) {
        auto* opt = sub->add_option("--config", config_path, "JSON config file");
        if (needs_config) opt->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--format", format, "output format")
            ->check(CLI::IsMember({"csv", "json"}));
    };

    auto* synth = app.add_subcommand("synth", "synthesize a dataset (GCLDATA1)");
    add_common(synth);
    synth->add_option("--seed", seed_override, "seed override (single run)");

    auto* run = app.add_subcommand("run", "full train/eval pipeline");
    add_common(run);
    run->add_option("--seed", seed_override, "seed override (single run)");

    auto* sweep = app.add_subcommand("sweep", "segment-count sweep");
    add_common(sweep);
    std::vector<int> segments = {10, 50, 100, 300};
    sweep->add_option("--segments", segments, "segment counts to sweep");
    sweep->add_option("--jobs", jobs, "worker pool size");

    auto* theory = app.add_subcommand("theory", "identifiability checks on a family spec");
    add_common(theory);
    std::string check = "variability";
    theory->add_option("--check", check,
                       "variability | alt-variability | lambda-bar | consistency");
    theory->add_option("--seed", seed_value, "rng seed");

    auto* gc = app.add_subcommand("grad-check", "finite-difference gradient audit");
    add_common(gc);
    int gc_points = 100;
    double gc_eps = 1e-5;
    gc->add_option("--seed", seed_value, "rng seed");
    gc->add_option("--points", gc_points, "random coordinates to test");
    gc->add_option("--eps", gc_eps, "finite-difference step");

    auto* eval = app.add_subcommand("eval", "re-evaluate a checkpoint on a dataset");
    std::string model_path, data_path, variant_name = "absolute-value";
    eval->add_option("--model", model_path, "GCLMODEL1 checkpoint")->required();
    eval->add_option("--data", data_path, "GCLDATA1 dataset")->required();
    eval->add_option("--variant", variant_name, "mcc variant")
        ->check(CLI::IsMember({"raw", "absolute-value"}));
    eval->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(config_path, seed_override, out_dir);
        if (run->parsed()) return cmd_run(config_path, seed_override, out_dir, format);
        if (sweep->parsed()) return cmd_sweep(config_path, segments, out_dir, jobs, format);
        if (theory->parsed()) return cmd_theory(config_path, check, seed_value, out_dir);
        if (gc->parsed())
            return cmd_grad_check(config_path, seed_value, gc_points, gc_eps, format);
        if (eval->parsed()) return cmd_eval(model_path, data_path, variant_name, out_dir);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
