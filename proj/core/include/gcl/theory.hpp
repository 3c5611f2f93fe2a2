#pragma once

#include "gcl/linalg.hpp"
#include "gcl/rng.hpp"

#include <functional>
#include <json.hpp>
#include <memory>
#include <vector>

namespace gcl {

// Sufficient statistic from the fixed catalog; value and first/second
// derivatives in s are analytic.
struct Statistic {
    enum class Tag { Poly, Abs, Tanh, LogCosh };
    Tag tag = Tag::Poly;
    int power = 1;       // Poly only
    double coeff = 1.0;  // multiplies the statistic

    double value(double s) const;
    double d1(double s) const;
    double d2(double s) const;
};

// Modulator lambda(u): per-segment table (discrete u) or a smooth expression.
struct Modulator {
    enum class Tag { Constant, SegmentTable, Affine, Sin };
    Tag tag = Tag::Constant;
    double constant = 0.0;
    std::vector<double> table;  // SegmentTable: indexed by u(0)
    Vector weights;             // Affine / Sin: inner product with u
    double offset = 0.0;        // Affine
    double amplitude = 1.0, frequency = 1.0, phase = 0.0;  // Sin

    double value(const Vector& u) const;
    // d lambda / d u_j; SegmentTable is not differentiable in u.
    double du(const Vector& u, int j) const;
};

// Derivative interface shared by the closed-form and black-box paths.
class FamilyEvaluator {
public:
    virtual ~FamilyEvaluator() = default;
    virtual int n() const = 0;
    virtual int u_dim() const = 0;
    virtual bool continuous_u() const = 0;
    virtual double dq_ds(int i, double s, const Vector& u) const = 0;
    virtual double d2q_ds2(int i, double s, const Vector& u) const = 0;
    virtual Vector sample_u(SeededRng& rng) const = 0;
    // Mixed derivatives in u_j; default numeric central differences.
    virtual double d2q_dsdu(int i, double s, const Vector& u, int j) const;
    virtual double d3q_ds2du(int i, double s, const Vector& u, int j) const;
};

// Closed-form conditionally exponential spec: for each component, base log Q,
// k sufficient statistics and k modulators. The log-partition never enters;
// only s-derivatives of q are evaluated.
class ConditionalFamily : public FamilyEvaluator {
public:
    enum class Base { None, Gaussian };
    struct Component {
        Base base = Base::None;
        std::vector<Statistic> stats;
        std::vector<Modulator> mods;
    };
    struct UDomain {
        bool segmented = false;
        int segments = 0;  // segmented: u = (segment index)
        Vector lo, hi;     // box: uniform sampling bounds
    };

    // Validates equal order across components and spot-checks linear
    // independence of each component's statistics via a sampled Gram matrix.
    ConditionalFamily(std::vector<Component> components, UDomain domain);

    static ConditionalFamily from_json(const nlohmann::json& spec);
    nlohmann::json to_json() const;

    int n() const override { return static_cast<int>(components_.size()); }
    int u_dim() const override { return domain_.segmented ? 1 : static_cast<int>(domain_.lo.size()); }
    int order() const { return k_; }
    bool continuous_u() const override { return !domain_.segmented; }
    const Component& component(int i) const { return components_[static_cast<std::size_t>(i)]; }
    const UDomain& domain() const { return domain_; }

    double q(int i, double s, const Vector& u) const;  // up to the log-partition
    double dq_ds(int i, double s, const Vector& u) const override;
    double d2q_ds2(int i, double s, const Vector& u) const override;
    double d2q_dsdu(int i, double s, const Vector& u, int j) const override;
    double d3q_ds2du(int i, double s, const Vector& u, int j) const override;
    Vector sample_u(SeededRng& rng) const override;

private:
    std::vector<Component> components_;
    UDomain domain_;
    int k_ = 0;
};

// Black-box conditional log-density with numeric differentiation in s
// (central stencils, steps 1e-4 and 1e-3).
class BlackBoxFamily : public FamilyEvaluator {
public:
    using Evaluator = std::function<double(int i, double s, const Vector& u)>;
    BlackBoxFamily(int n, Evaluator q, std::function<Vector(SeededRng&)> sample_u,
                   int u_dim, bool continuous);

    int n() const override { return n_; }
    int u_dim() const override { return u_dim_; }
    bool continuous_u() const override { return continuous_; }
    double dq_ds(int i, double s, const Vector& u) const override;
    double d2q_ds2(int i, double s, const Vector& u) const override;
    Vector sample_u(SeededRng& rng) const override;

private:
    int n_, u_dim_;
    bool continuous_;
    Evaluator q_;
    std::function<Vector(SeededRng&)> sample_u_;
};

// First n entries dq_i/ds_i, last n entries d2q_i/ds_i^2 at (y, u).
Vector w_vector(const FamilyEvaluator& fam, const Vector& y, const Vector& u);

struct VariabilityVerdict {
    int rank_required = 0;
    int n_trials = 0;
    int successes = 0;
    int best_rank = 0;
    std::vector<Vector> witness;  // u values achieving full rank, if any

    bool exists() const { return successes > 0; }
    nlohmann::json to_json() const;
};

// Monte-Carlo witness search for 2n+1 u-values whose difference vectors
// w(y,u_j) - w(y,u_0) reach rank 2n. One success certifies existence;
// zero successes is "not found in N trials", not a proof.
VariabilityVerdict check_variability(const FamilyEvaluator& fam, const Vector& y,
                                     int n_trials, SeededRng& rng,
                                     double rank_rel_tol = 1e-6);

// Mixed-derivative variant: 2n u-values, columns built from
// d2q/(ds du_j) and d3q/(ds^2 du_j), no baseline subtraction. Throws
// StrategyMismatchError for discrete-u families.
VariabilityVerdict check_alt_variability(const FamilyEvaluator& fam, const Vector& y,
                                         int aux_coordinate, int n_trials, SeededRng& rng,
                                         double rank_rel_tol = 1e-6);

// Modulator-difference matrix: row (i,j), column l holds
// lambda_ij(u_l) - lambda_ij(u_0); requires exactly n*k + 1 points.
Matrix lambda_bar(const ConditionalFamily& fam, const std::vector<Vector>& u_points);

struct ExpFamConsistencyReport {
    int order = 0;
    bool order_one_impossible = false;
    std::vector<bool> component_pass;  // non-proportional at >= 99% of samples
    bool overall = false;
    nlohmann::json to_json() const;
};

// Tests, per component, whether the statistic derivative pairs
// (d q~_ij/ds, d^2 q~_ij/ds^2) are pairwise non-proportional at sampled s.
ExpFamConsistencyReport check_expfam_consistency_form(const ConditionalFamily& fam,
                                                      int n_samples = 1000,
                                                      std::uint64_t seed = 0);

}  // namespace gcl
