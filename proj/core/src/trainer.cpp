#include "gcl/trainer.hpp"

#include "gcl/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gcl {

namespace {

void gather_batch(const ContrastiveSet& cs, const std::vector<Eigen::Index>& idx,
                  Matrix& x, Matrix& u, std::vector<int>& labels) {
    const auto B = static_cast<Eigen::Index>(idx.size());
    x.resize(B, cs.x.cols());
    u.resize(B, cs.u.cols());
    labels.resize(idx.size());
    for (Eigen::Index b = 0; b < B; ++b) {
        x.row(b) = cs.x.row(idx[static_cast<std::size_t>(b)]);
        u.row(b) = cs.u.row(idx[static_cast<std::size_t>(b)]);
        labels[static_cast<std::size_t>(b)] =
            cs.labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(b)])];
    }
}

double full_loss(const DiscriminatorModel& model, const ContrastiveSet& cs, double l2) {
    return model.loss(cs.x, cs.u, cs.labels, l2);
}

}  // namespace

double discrimination_accuracy(const DiscriminatorModel& model, const ContrastiveSet& cs) {
    Vector r = model.regression(cs.x, cs.u);
    Eigen::Index correct = 0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        int predicted = r(i) > 0.0 ? 1 : 0;
        if (predicted == cs.labels[static_cast<std::size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(r.size());
}

TrainTrace train(DiscriminatorModel& model, ContrastiveSet& cs, const TrainConfig& cfg) {
    if (!(cfg.learning_rate >= 0.0))
        throw InvalidInputError("train: learning rate must be nonnegative");
    if (cfg.batch < 2 || cfg.batch % 2 != 0)
        throw InvalidInputError("train: batch must be even and >= 2");
    if (cs.x.cols() != model.n())
        throw InvalidInputError("train: contrastive set and model dimensions differ");

    SeededRng rng(cfg.seed, 0x7261696EULL);
    SeededRng batch_rng = rng.split(1);
    SeededRng negative_rng = rng.split(2);

    TrainTrace trace;
    trace.initial_loss = full_loss(model, cs, cfg.l2);
    trace.initial_accuracy = discrimination_accuracy(model, cs);

    Vector theta = model.params();
    Vector grad;
    Vector m_adam = Vector::Zero(theta.size());
    Vector v_adam = Vector::Zero(theta.size());
    std::int64_t step = 0;

    Matrix xb, ub;
    std::vector<int> yb;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        if (cfg.resample_negatives_each_epoch && epoch > 0)
            resample_negatives(cs, negative_rng);

        auto batches = minibatches(cs, std::min<Eigen::Index>(cfg.batch, 2 * cs.positives),
                                   batch_rng);
        double epoch_loss = 0.0;
        for (const auto& idx : batches) {
            gather_batch(cs, idx, xb, ub, yb);
            double loss = model.loss_and_grad(xb, ub, yb, cfg.l2, grad);
            epoch_loss += loss * static_cast<double>(idx.size());
            if (!std::isfinite(loss) || loss > cfg.divergence_factor *
                                                   std::max(trace.initial_loss, 1.0))
                throw TrainingDivergenceError("train: loss diverged", epoch);

            ++step;
            if (cfg.optimizer == Optimizer::PlainSgd) {
                theta -= cfg.learning_rate * grad;
            } else {
                m_adam = cfg.beta1 * m_adam + (1.0 - cfg.beta1) * grad;
                v_adam = cfg.beta2 * v_adam + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
                double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
                double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
                theta -= (cfg.learning_rate / bias1) *
                         m_adam.cwiseQuotient(
                             ((v_adam / bias2).cwiseSqrt().array() + cfg.adam_eps).matrix());
            }
            model.set_params(theta);
        }
        epoch_loss /= static_cast<double>(2 * cs.positives);

        auto t1 = std::chrono::steady_clock::now();
        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = epoch_loss;
        rec.accuracy = discrimination_accuracy(model, cs);
        rec.param_norm = theta.norm();
        rec.seconds = std::chrono::duration<double>(t1 - t0).count();
        trace.epochs.push_back(rec);
    }

    if (cfg.epochs > 0) {
        double final_loss = full_loss(model, cs, cfg.l2);
        if (final_loss > trace.initial_loss) trace.loss_increased_warning = true;
    }
    return trace;
}

std::string TrainTrace::to_csv() const {
    std::ostringstream os;
    os << "epoch,loss,accuracy,param_norm,seconds\n";
    os.precision(17);
    for (const auto& r : epochs)
        os << r.epoch << ',' << r.loss << ',' << r.accuracy << ',' << r.param_norm << ','
           << r.seconds << '\n';
    return os.str();
}

void TrainTrace::write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw IoError("TrainTrace::write_csv: cannot open " + path);
    os << to_csv();
}

GradCheckReport grad_check(const DiscriminatorModel& model, const ContrastiveSet& cs,
                           int n_points, double eps, std::uint64_t seed,
                           Eigen::Index batch) {
    if (n_points < 1) throw InvalidInputError("grad_check: n_points must be >= 1");
    SeededRng rng(seed, 0x67636865636BULL);

    const Eigen::Index total = 2 * cs.positives;
    batch = std::min(batch, total);
    std::vector<Eigen::Index> idx;
    idx.reserve(static_cast<std::size_t>(batch));
    for (Eigen::Index b = 0; b < batch; ++b)
        idx.push_back(static_cast<Eigen::Index>(rng.uniform_index(
            static_cast<std::uint64_t>(total))));
    Matrix xb, ub;
    std::vector<int> yb;
    gather_batch(cs, idx, xb, ub, yb);

    DiscriminatorModel probe = model;
    Vector theta = probe.params();
    Vector grad;
    double l2 = 1e-4;
    probe.loss_and_grad(xb, ub, yb, l2, grad);
    std::uint64_t base_branches = probe.branch_hash(xb);

    GradCheckReport report;
    for (int p = 0; p < n_points; ++p) {
        auto coord = static_cast<Eigen::Index>(
            rng.uniform_index(static_cast<std::uint64_t>(theta.size())));
        double saved = theta(coord);

        theta(coord) = saved + eps;
        probe.set_params(theta);
        double fp = probe.loss(xb, ub, yb, l2);
        std::uint64_t hp = probe.branch_hash(xb);

        theta(coord) = saved - eps;
        probe.set_params(theta);
        double fm = probe.loss(xb, ub, yb, l2);
        std::uint64_t hm = probe.branch_hash(xb);

        theta(coord) = saved;
        probe.set_params(theta);

        if (hp != base_branches || hm != base_branches) {
            ++report.excluded;
            continue;
        }
        double fd = (fp - fm) / (2.0 * eps);
        double analytic = grad(coord);
        // Mixed relative/absolute metric: coordinates with gradients below the
        // 1e-4 floor are compared absolutely at the same tolerance.
        double denom = std::max({std::abs(fd), std::abs(analytic), 1e-4});
        report.max_rel_error = std::max(report.max_rel_error, std::abs(fd - analytic) / denom);
        ++report.checked;
    }
    return report;
}

}  // namespace gcl
