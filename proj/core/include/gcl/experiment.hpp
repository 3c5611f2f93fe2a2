#pragma once

#include "gcl/contrastive.hpp"
#include "gcl/evalmetrics.hpp"
#include "gcl/fastica.hpp"
#include "gcl/generators.hpp"
#include "gcl/model.hpp"
#include "gcl/trainer.hpp"

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace gcl {

// Fully determines a run together with one seed; the run id is a hash of the
// canonical config JSON plus the seed.
struct ExperimentConfig {
    std::string generator_type = "segmented";  // grid | segmented | ar
    GridParams grid;
    SegmentedParams segmented;
    ArParams ar;
    bool apply_mixing = true;
    MixingParams mixing;

    AuxStrategy strategy = AuxStrategy::segment_label();
    HeadKind head = HeadKind::ExpFam;
    int psi_width = 32;
    int expfam_k = 1;
    int a_width = 32;

    TrainConfig train;
    MccVariant variant = MccVariant::AbsoluteValue;
    bool apply_fastica = true;
    FastIcaConfig ica;

    std::vector<std::uint64_t> seeds = {1};
    std::string output_dir = "runs";

    // Canonical JSON form (sorted keys; hashing and persistence input).
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
};

std::string run_id(const ExperimentConfig& cfg, std::uint64_t seed);

struct RunResult {
    std::string id;
    std::uint64_t seed = 0;
    TrainTrace trace;
    EvalReport report_raw;                 // features straight from the network
    std::optional<EvalReport> report_ica;  // after final linear ICA
    double final_accuracy = 0.0;
    double seconds = 0.0;

    nlohmann::json eval_json(const ExperimentConfig& cfg) const;
};

// Synthesize (or reuse) the dataset, build contrastive pairs, train, extract
// features, optionally run FastICA, and score against the ground truth.
// A pre-generated dataset can be supplied to amortize synthesis across seeds.
RunResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                         const SourceDataset* dataset = nullptr);

// Dataset synthesis as configured (generator + optional mixing).
SourceDataset synthesize(const ExperimentConfig& cfg, std::uint64_t seed);

// Build the discriminator for this config/contrastive-set pair.
DiscriminatorModel make_model(const ExperimentConfig& cfg, const ContrastiveSet& cs,
                              std::uint64_t seed);

// Model checkpoint: "GCLMODEL1" magic, uint64 JSON header length, JSON header,
// float64 parameter block.
void save_model(const DiscriminatorModel& model, const nlohmann::json& meta,
                const std::string& path);
std::pair<DiscriminatorModel, nlohmann::json> load_model(const std::string& path);

struct SweepCell {
    int segments = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    double mcc_raw = 0.0;
    double mcc_ica = 0.0;
};

struct SweepResult {
    std::vector<SweepCell> cells;  // sorted by (segments, seed)
    std::string csv() const;       // method,strategy,segments,seed,mcc
    std::string plot_data(const ExperimentConfig& cfg) const;  // gnuplot columns
};

// One run per (segments value, seed); failures are recorded per cell and the
// sweep continues. jobs > 1 runs cells on a worker pool; results are
// aggregated in sorted cell order either way.
SweepResult sweep_segments(const ExperimentConfig& cfg, const std::vector<int>& segments,
                           int jobs = 1);

}  // namespace gcl
