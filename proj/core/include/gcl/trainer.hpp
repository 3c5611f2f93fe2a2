#pragma once

#include "gcl/contrastive.hpp"
#include "gcl/model.hpp"

#include <string>
#include <vector>

namespace gcl {

enum class Optimizer { PlainSgd, AdaptiveMoment };

struct TrainConfig {
    int epochs = 60;
    Eigen::Index batch = 512;
    double learning_rate = 1e-3;
    double l2 = 1e-4;
    Optimizer optimizer = Optimizer::AdaptiveMoment;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    bool resample_negatives_each_epoch = true;
    std::uint64_t seed = 0;
    // Abort when the loss is non-finite or exceeds divergence_factor times the
    // initial loss.
    double divergence_factor = 10.0;
};

struct EpochRecord {
    int epoch;
    double loss;
    double accuracy;
    double param_norm;
    double seconds;
};

struct TrainTrace {
    std::vector<EpochRecord> epochs;
    double initial_loss = 0.0;
    double initial_accuracy = 0.0;
    bool loss_increased_warning = false;

    void write_csv(const std::string& path) const;
    std::string to_csv() const;
};

// Stochastic gradient training of the discriminator on the contrastive set.
// Deterministic given (model init, cs, cfg). Throws TrainingDivergenceError
// with the offending epoch index when the loss diverges.
TrainTrace train(DiscriminatorModel& model, ContrastiveSet& cs, const TrainConfig& cfg);

// Full-set discrimination accuracy at threshold r = 0.
double discrimination_accuracy(const DiscriminatorModel& model, const ContrastiveSet& cs);

struct GradCheckReport {
    double max_rel_error = 0.0;
    int checked = 0;
    int excluded = 0;  // coordinates within a maxout/abs tie neighborhood
};

// Compares analytic gradients against central differences at n_points random
// parameter coordinates on a small batch from cs. Coordinates whose +-eps
// perturbation changes an activation branch are excluded and counted.
GradCheckReport grad_check(const DiscriminatorModel& model, const ContrastiveSet& cs,
                           int n_points, double eps, std::uint64_t seed = 0,
                           Eigen::Index batch = 32);

}  // namespace gcl
