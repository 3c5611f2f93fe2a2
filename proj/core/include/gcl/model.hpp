#pragma once

#include "gcl/linalg.hpp"
#include "gcl/rng.hpp"

#include <cstdint>
#include <variant>
#include <vector>

namespace gcl {

// Three-layer feature extractor h: R^n -> R^n. Hidden layers have width 2n
// after a group-2 maxout over 4n pre-activations; the final layer is linear
// followed by an absolute value. Parameters live in one flat vector; the
// W*/b* accessors are views into it, and gradients use the same layout.
class FeatureNet {
public:
    FeatureNet(int n, SeededRng& rng);

    int n() const { return n_; }
    Eigen::Index param_count() const { return theta_.size(); }
    const Vector& params() const { return theta_; }
    void set_params(const Vector& theta);

    struct Cache {
        Matrix x, h1, h2, y;
        Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> arg1, arg2, sign3;
    };

    // Batch forward; rows of x are samples. Outputs are nonnegative.
    Matrix forward(const Matrix& x, Cache* cache = nullptr) const;

    // Accumulates d loss / d theta into grad (size param_count) given
    // d loss / d y; returns d loss / d x when dx is non-null.
    void backward(const Cache& cache, const Matrix& dy, double* grad,
                  Matrix* dx = nullptr) const;

    // Adds the L2 penalty l2 * sum(w^2) over weight blocks (biases excluded)
    // and its gradient.
    double l2_penalty(double l2, double* grad) const;

    // Hash of the maxout argmax and abs sign branches taken on this batch;
    // used to exclude tie-crossing coordinates from finite-difference checks.
    std::uint64_t branch_hash(const Matrix& x) const;

    // Views into the flat parameter vector.
    Eigen::Map<const Matrix> W1() const { return {theta_.data() + o_[0], 4 * n_, n_}; }
    Eigen::Map<const Vector> b1() const { return {theta_.data() + o_[1], 4 * n_}; }
    Eigen::Map<const Matrix> W2() const { return {theta_.data() + o_[2], 4 * n_, 2 * n_}; }
    Eigen::Map<const Vector> b2() const { return {theta_.data() + o_[3], 4 * n_}; }
    Eigen::Map<const Matrix> W3() const { return {theta_.data() + o_[4], n_, 2 * n_}; }
    Eigen::Map<const Vector> b3() const { return {theta_.data() + o_[5], n_}; }
    Eigen::Map<Matrix> W1() { return {theta_.data() + o_[0], 4 * n_, n_}; }
    Eigen::Map<Matrix> W3() { return {theta_.data() + o_[4], n_, 2 * n_}; }

private:
    int n_;
    Eigen::Index o_[6];
    Vector theta_;
    friend class GeneralHead;  // shares the map-offset idiom
};

// Additive regression head r(x,u) = sum_i psi_i(h_i(x), u) with one small
// MLP per component; there are no cross-component weights by construction.
class GeneralHead {
public:
    GeneralHead(int n, int u_dim, int width, SeededRng& rng);

    int n() const { return n_; }
    int u_dim() const { return u_dim_; }
    int width() const { return width_; }
    Eigen::Index param_count() const { return theta_.size(); }
    const Vector& params() const { return theta_; }
    void set_params(const Vector& theta);

    struct Cache {
        Matrix h, u;
        std::vector<Matrix> a0, z1, a1, z2, a2;  // per component
    };

    Vector forward(const Matrix& h, const Matrix& u, Cache* cache = nullptr) const;
    // dh accumulates d loss / d h for feature backprop.
    void backward(const Cache& cache, const Vector& dr, double* grad, Matrix* dh) const;
    double l2_penalty(double l2, double* grad) const;

    // Contribution of component i to r, for the additivity invariant.
    Vector component_value(int i, const Matrix& h, const Matrix& u) const;
    // Parameter range [begin, end) of component i in the flat layout.
    std::pair<Eigen::Index, Eigen::Index> component_span(int i) const;

private:
    int n_, u_dim_, width_;
    Eigen::Index per_psi_;
    Vector theta_;
};

// Exponential-family head r(x,u) = htilde(x)^T v(u) + a(x) + b(u) with
// per-segment v and b tables and an MLP for a. The feature expander uses k
// per-component powers, htilde_(i,j) = h_i^j; k = 1 gives htilde = h.
class ExpFamHead {
public:
    ExpFamHead(int n, int segments, int k, int a_width, SeededRng& rng);

    int n() const { return n_; }
    int k() const { return k_; }
    int segments() const { return segments_; }
    int a_width() const { return a_width_; }
    Eigen::Index param_count() const { return theta_.size(); }
    const Vector& params() const { return theta_; }
    void set_params(const Vector& theta);

    struct Cache {
        Matrix h, htil;
        std::vector<int> seg;
        Matrix az1, aa1, az2, aa2;
    };

    // u must carry the integral segment index in column 0. Throws
    // InvalidInputError when an index falls outside the v-table.
    Vector forward(const Matrix& h, const Matrix& u, Cache* cache = nullptr) const;
    void backward(const Cache& cache, const Vector& dr, double* grad, Matrix* dh) const;
    double l2_penalty(double l2, double* grad) const;

    Eigen::Map<const Matrix> v_table() const { return {theta_.data() + o_[0], segments_, n_ * k_}; }
    Eigen::Map<const Vector> b_table() const { return {theta_.data() + o_[1], segments_}; }

private:
    int n_, segments_, k_, a_width_;
    Eigen::Index o_[9];
    Vector theta_;
};

enum class HeadKind { General, ExpFam };

// Feature network plus regression head; the posterior of the true-pair class
// is 1 / (1 + exp(-r)).
class DiscriminatorModel {
public:
    DiscriminatorModel(FeatureNet net, GeneralHead head);
    DiscriminatorModel(FeatureNet net, ExpFamHead head);

    HeadKind head_kind() const;
    int n() const { return net_.n(); }
    Eigen::Index param_count() const;
    Vector params() const;
    void set_params(const Vector& theta);

    const FeatureNet& feature_net() const { return net_; }
    FeatureNet& feature_net() { return net_; }
    const GeneralHead& general_head() const { return std::get<GeneralHead>(head_); }
    const ExpFamHead& expfam_head() const { return std::get<ExpFamHead>(head_); }

    // r values for a batch.
    Vector regression(const Matrix& x, const Matrix& u) const;
    // h(x) for a batch of observations.
    Matrix features(const Matrix& x) const;

    // Mean binary cross-entropy of the posterior against labels plus the L2
    // penalty; exact analytic gradient in the flat layout (features first,
    // then head).
    double loss_and_grad(const Matrix& x, const Matrix& u, const std::vector<int>& labels,
                         double l2, Vector& grad) const;
    // Loss only (used by finite-difference checks).
    double loss(const Matrix& x, const Matrix& u, const std::vector<int>& labels,
                double l2) const;

    std::uint64_t branch_hash(const Matrix& x) const { return net_.branch_hash(x); }

private:
    FeatureNet net_;
    std::variant<GeneralHead, ExpFamHead> head_;
};

// Numerically stable log(1 + exp(z)).
double softplus(double z);
double sigmoid(double z);

}  // namespace gcl
