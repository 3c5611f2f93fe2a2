#include "gcl/model.hpp"

#include "gcl/errors.hpp"

#include <cmath>

namespace gcl {

double softplus(double z) {
    if (z > 30.0) return z;
    if (z < -30.0) return std::exp(z);
    return std::log1p(std::exp(z));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

using MapM = Eigen::Map<Matrix>;
using MapV = Eigen::Map<Vector>;
using CMapM = Eigen::Map<const Matrix>;
using CMapV = Eigen::Map<const Vector>;

void fill_normal(double* p, Eigen::Index count, double std_dev, SeededRng& rng) {
    for (Eigen::Index i = 0; i < count; ++i) p[i] = std_dev * rng.normal();
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

// Group-2 maxout over adjacent pre-activation pairs.
void maxout2(const Matrix& z, Matrix& h,
             Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>& arg) {
    const Eigen::Index rows = z.rows();
    const Eigen::Index groups = z.cols() / 2;
    h.resize(rows, groups);
    arg.resize(rows, groups);
    for (Eigen::Index j = 0; j < groups; ++j)
        for (Eigen::Index b = 0; b < rows; ++b) {
            double a = z(b, 2 * j), c = z(b, 2 * j + 1);
            // Tie goes to the lower index for determinism.
            if (a >= c) {
                h(b, j) = a;
                arg(b, j) = 0;
            } else {
                h(b, j) = c;
                arg(b, j) = 1;
            }
        }
}

void maxout2_backward(const Matrix& dh,
                      const Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>& arg,
                      Matrix& dz) {
    dz = Matrix::Zero(dh.rows(), 2 * dh.cols());
    for (Eigen::Index j = 0; j < dh.cols(); ++j)
        for (Eigen::Index b = 0; b < dh.rows(); ++b)
            dz(b, 2 * j + arg(b, j)) = dh(b, j);
}

Matrix softplus_m(const Matrix& z) {
    return z.unaryExpr([](double v) { return softplus(v); });
}

Matrix sigmoid_m(const Matrix& z) {
    return z.unaryExpr([](double v) { return sigmoid(v); });
}

}  // namespace

// ---------------------------------------------------------------------------
// FeatureNet
// ---------------------------------------------------------------------------

FeatureNet::FeatureNet(int n, SeededRng& rng) : n_(n) {
    const Eigen::Index n4 = 4 * static_cast<Eigen::Index>(n);
    const Eigen::Index sizes[6] = {n4 * n, n4, n4 * 2 * n, n4, 2LL * n * n,
                                   static_cast<Eigen::Index>(n)};
    Eigen::Index off = 0;
    for (int i = 0; i < 6; ++i) {
        o_[i] = off;
        off += sizes[i];
    }
    theta_ = Vector::Zero(off);
    fill_normal(theta_.data() + o_[0], sizes[0], std::sqrt(2.0 / n), rng);
    fill_normal(theta_.data() + o_[2], sizes[2], std::sqrt(2.0 / (2.0 * n)), rng);
    fill_normal(theta_.data() + o_[4], sizes[4], std::sqrt(1.0 / (2.0 * n)), rng);
}

void FeatureNet::set_params(const Vector& theta) {
    if (theta.size() != theta_.size())
        throw InvalidInputError("FeatureNet::set_params: size mismatch");
    theta_ = theta;
}

Matrix FeatureNet::forward(const Matrix& x, Cache* cache) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    Matrix z1 = (x * W1().transpose()).rowwise() + b1().transpose();
    maxout2(z1, c.h1, c.arg1);
    Matrix z2 = (c.h1 * W2().transpose()).rowwise() + b2().transpose();
    maxout2(z2, c.h2, c.arg2);
    Matrix z3 = (c.h2 * W3().transpose()).rowwise() + b3().transpose();
    c.sign3.resize(z3.rows(), z3.cols());
    c.y.resize(z3.rows(), z3.cols());
    for (Eigen::Index j = 0; j < z3.cols(); ++j)
        for (Eigen::Index b = 0; b < z3.rows(); ++b) {
            // sign(0) mapped to +1 so the subgradient is fixed.
            std::int8_t s = z3(b, j) >= 0.0 ? 1 : -1;
            c.sign3(b, j) = s;
            c.y(b, j) = s * z3(b, j);
        }
    if (cache) c.x = x;
    return c.y;
}

void FeatureNet::backward(const Cache& c, const Matrix& dy, double* grad, Matrix* dx) const {
    const Eigen::Index n4 = 4 * static_cast<Eigen::Index>(n_);
    MapM gW3(grad + o_[4], n_, 2 * n_);
    MapV gb3(grad + o_[5], n_);
    MapM gW2(grad + o_[2], n4, 2 * n_);
    MapV gb2(grad + o_[3], n4);
    MapM gW1(grad + o_[0], n4, n_);
    MapV gb1(grad + o_[1], n4);

    Matrix dz3 = dy.cwiseProduct(c.sign3.cast<double>());
    gW3 += dz3.transpose() * c.h2;
    gb3 += dz3.colwise().sum();
    Matrix dh2 = dz3 * W3();

    Matrix dz2;
    maxout2_backward(dh2, c.arg2, dz2);
    gW2 += dz2.transpose() * c.h1;
    gb2 += dz2.colwise().sum();
    Matrix dh1 = dz2 * W2();

    Matrix dz1;
    maxout2_backward(dh1, c.arg1, dz1);
    gW1 += dz1.transpose() * c.x;
    gb1 += dz1.colwise().sum();
    if (dx) *dx = dz1 * W1();
}

double FeatureNet::l2_penalty(double l2, double* grad) const {
    double penalty = 0.0;
    const int weight_blocks[3] = {0, 2, 4};
    const Eigen::Index ends[3] = {o_[1], o_[3], o_[5]};
    for (int b = 0; b < 3; ++b) {
        Eigen::Index begin = o_[weight_blocks[b]];
        Eigen::Index count = ends[b] - begin;
        CMapV w(theta_.data() + begin, count);
        penalty += l2 * w.squaredNorm();
        if (grad) MapV(grad + begin, count) += 2.0 * l2 * w;
    }
    return penalty;
}

std::uint64_t FeatureNet::branch_hash(const Matrix& x) const {
    Cache c;
    forward(x, &c);
    std::uint64_t h = 1469598103934665603ULL;
    h = fnv1a(h, c.arg1.data(), static_cast<std::size_t>(c.arg1.size()));
    h = fnv1a(h, c.arg2.data(), static_cast<std::size_t>(c.arg2.size()));
    h = fnv1a(h, c.sign3.data(), static_cast<std::size_t>(c.sign3.size()));
    return h;
}

// ---------------------------------------------------------------------------
// GeneralHead
// ---------------------------------------------------------------------------

GeneralHead::GeneralHead(int n, int u_dim, int width, SeededRng& rng)
    : n_(n), u_dim_(u_dim), width_(width) {
    const Eigen::Index w = width, in = 1 + u_dim;
    per_psi_ = w * in + w + w * w + w + w + 1;
    theta_ = Vector::Zero(per_psi_ * n);
    for (int i = 0; i < n; ++i) {
        double* base = theta_.data() + i * per_psi_;
        fill_normal(base, w * in, std::sqrt(2.0 / in), rng);
        fill_normal(base + w * in + w, w * w, std::sqrt(2.0 / w), rng);
        fill_normal(base + w * in + w + w * w + w, w, std::sqrt(1.0 / w), rng);
    }
}

void GeneralHead::set_params(const Vector& theta) {
    if (theta.size() != theta_.size())
        throw InvalidInputError("GeneralHead::set_params: size mismatch");
    theta_ = theta;
}

std::pair<Eigen::Index, Eigen::Index> GeneralHead::component_span(int i) const {
    return {i * per_psi_, (i + 1) * per_psi_};
}

Vector GeneralHead::forward(const Matrix& h, const Matrix& u, Cache* cache) const {
    if (h.cols() != n_ || u.cols() != u_dim_)
        throw InvalidInputError("GeneralHead::forward: shape mismatch");
    const Eigen::Index B = h.rows(), w = width_, in = 1 + u_dim_;
    Cache local;
    Cache& c = cache ? *cache : local;
    c.a0.resize(static_cast<std::size_t>(n_));
    c.z1.resize(static_cast<std::size_t>(n_));
    c.a1.resize(static_cast<std::size_t>(n_));
    c.z2.resize(static_cast<std::size_t>(n_));
    c.a2.resize(static_cast<std::size_t>(n_));

    Vector r = Vector::Zero(B);
    for (int i = 0; i < n_; ++i) {
        const double* base = theta_.data() + i * per_psi_;
        CMapM W1(base, w, in);
        CMapV b1(base + w * in, w);
        CMapM W2(base + w * in + w, w, w);
        CMapV b2(base + w * in + w + w * w, w);
        CMapV w3(base + w * in + w + w * w + w, w);
        double b3 = base[per_psi_ - 1];

        auto& a0 = c.a0[static_cast<std::size_t>(i)];
        a0.resize(B, in);
        a0.col(0) = h.col(i);
        a0.rightCols(u_dim_) = u;
        auto& z1 = c.z1[static_cast<std::size_t>(i)];
        z1 = (a0 * W1.transpose()).rowwise() + b1.transpose();
        auto& a1 = c.a1[static_cast<std::size_t>(i)];
        a1 = softplus_m(z1);
        auto& z2 = c.z2[static_cast<std::size_t>(i)];
        z2 = (a1 * W2.transpose()).rowwise() + b2.transpose();
        auto& a2 = c.a2[static_cast<std::size_t>(i)];
        a2 = softplus_m(z2);
        r += a2 * w3 + Vector::Constant(B, b3);
    }
    if (cache) {
        c.h = h;
        c.u = u;
    }
    return r;
}

Vector GeneralHead::component_value(int i, const Matrix& h, const Matrix& u) const {
    const Eigen::Index B = h.rows(), w = width_, in = 1 + u_dim_;
    const double* base = theta_.data() + i * per_psi_;
    CMapM W1(base, w, in);
    CMapV b1(base + w * in, w);
    CMapM W2(base + w * in + w, w, w);
    CMapV b2(base + w * in + w + w * w, w);
    CMapV w3(base + w * in + w + w * w + w, w);
    double b3 = base[per_psi_ - 1];
    Matrix a0(B, in);
    a0.col(0) = h.col(i);
    a0.rightCols(u_dim_) = u;
    Matrix a1 = softplus_m(((a0 * W1.transpose()).rowwise() + b1.transpose()));
    Matrix a2 = softplus_m(((a1 * W2.transpose()).rowwise() + b2.transpose()));
    return a2 * w3 + Vector::Constant(B, b3);
}

void GeneralHead::backward(const Cache& c, const Vector& dr, double* grad, Matrix* dh) const {
    const Eigen::Index B = dr.size(), w = width_, in = 1 + u_dim_;
    if (dh) *dh = Matrix::Zero(B, n_);
    for (int i = 0; i < n_; ++i) {
        const double* base = theta_.data() + i * per_psi_;
        double* gbase = grad + i * per_psi_;
        CMapM W1(base, w, in);
        CMapM W2(base + w * in + w, w, w);
        CMapV w3(base + w * in + w + w * w + w, w);
        MapM gW1(gbase, w, in);
        MapV gb1(gbase + w * in, w);
        MapM gW2(gbase + w * in + w, w, w);
        MapV gb2(gbase + w * in + w + w * w, w);
        MapV gw3(gbase + w * in + w + w * w + w, w);

        const auto& a0 = c.a0[static_cast<std::size_t>(i)];
        const auto& a1 = c.a1[static_cast<std::size_t>(i)];
        const auto& a2 = c.a2[static_cast<std::size_t>(i)];

        gw3 += a2.transpose() * dr;
        gbase[per_psi_ - 1] += dr.sum();
        Matrix da2 = dr * w3.transpose();
        Matrix dz2 = da2.cwiseProduct(sigmoid_m(c.z2[static_cast<std::size_t>(i)]));
        gW2 += dz2.transpose() * a1;
        gb2 += dz2.colwise().sum();
        Matrix da1 = dz2 * W2;
        Matrix dz1 = da1.cwiseProduct(sigmoid_m(c.z1[static_cast<std::size_t>(i)]));
        gW1 += dz1.transpose() * a0;
        gb1 += dz1.colwise().sum();
        if (dh) dh->col(i) = (dz1 * W1).col(0);
    }
}

double GeneralHead::l2_penalty(double l2, double* grad) const {
    const Eigen::Index w = width_, in = 1 + u_dim_;
    double penalty = 0.0;
    for (int i = 0; i < n_; ++i) {
        const double* base = theta_.data() + i * per_psi_;
        double* gbase = grad ? grad + i * per_psi_ : nullptr;
        const Eigen::Index spans[3][2] = {{0, w * in},
                                          {w * in + w, w * w},
                                          {w * in + w + w * w + w, w}};
        for (const auto& s : spans) {
            CMapV wv(base + s[0], s[1]);
            penalty += l2 * wv.squaredNorm();
            if (gbase) MapV(gbase + s[0], s[1]) += 2.0 * l2 * wv;
        }
    }
    return penalty;
}

// ---------------------------------------------------------------------------
// ExpFamHead
// ---------------------------------------------------------------------------

ExpFamHead::ExpFamHead(int n, int segments, int k, int a_width, SeededRng& rng)
    : n_(n), segments_(segments), k_(k), a_width_(a_width) {
    if (segments < 1) throw InvalidInputError("ExpFamHead: segments must be >= 1");
    if (k < 1) throw InvalidInputError("ExpFamHead: k must be >= 1");
    const Eigen::Index w = a_width;
    const Eigen::Index sizes[8] = {static_cast<Eigen::Index>(segments) * n * k,
                                   static_cast<Eigen::Index>(segments),
                                   w * n,
                                   w,
                                   w * w,
                                   w,
                                   w,
                                   1};
    Eigen::Index off = 0;
    for (int i = 0; i < 8; ++i) {
        o_[i] = off;
        off += sizes[i];
    }
    o_[8] = off;
    theta_ = Vector::Zero(off);
    fill_normal(theta_.data() + o_[0], sizes[0], 0.1, rng);
    fill_normal(theta_.data() + o_[2], sizes[2], std::sqrt(2.0 / n), rng);
    fill_normal(theta_.data() + o_[4], sizes[4], std::sqrt(2.0 / w), rng);
    fill_normal(theta_.data() + o_[6], sizes[6], std::sqrt(1.0 / w), rng);
}

void ExpFamHead::set_params(const Vector& theta) {
    if (theta.size() != theta_.size())
        throw InvalidInputError("ExpFamHead::set_params: size mismatch");
    theta_ = theta;
}

Vector ExpFamHead::forward(const Matrix& h, const Matrix& u, Cache* cache) const {
    if (h.cols() != n_ || u.cols() < 1)
        throw InvalidInputError("ExpFamHead::forward: shape mismatch");
    const Eigen::Index B = h.rows(), w = a_width_;
    Cache local;
    Cache& c = cache ? *cache : local;

    c.seg.resize(static_cast<std::size_t>(B));
    for (Eigen::Index b = 0; b < B; ++b) {
        int s = static_cast<int>(u(b, 0));
        if (s < 0 || s >= segments_)
            throw InvalidInputError("ExpFamHead::forward: segment index outside v-table");
        c.seg[static_cast<std::size_t>(b)] = s;
    }

    // Power expansion htilde_(i,j) = h_i^j, column index i*k + (j-1).
    c.htil.resize(B, static_cast<Eigen::Index>(n_) * k_);
    for (int i = 0; i < n_; ++i) {
        c.htil.col(static_cast<Eigen::Index>(i) * k_) = h.col(i);
        for (int j = 2; j <= k_; ++j)
            c.htil.col(static_cast<Eigen::Index>(i) * k_ + j - 1) =
                c.htil.col(static_cast<Eigen::Index>(i) * k_ + j - 2).cwiseProduct(h.col(i));
    }

    CMapM vt(theta_.data() + o_[0], segments_, static_cast<Eigen::Index>(n_) * k_);
    CMapV bt(theta_.data() + o_[1], segments_);
    CMapM aW1(theta_.data() + o_[2], w, n_);
    CMapV ab1(theta_.data() + o_[3], w);
    CMapM aW2(theta_.data() + o_[4], w, w);
    CMapV ab2(theta_.data() + o_[5], w);
    CMapV aw3(theta_.data() + o_[6], w);
    double ab3 = theta_(o_[7]);

    c.az1 = (h * aW1.transpose()).rowwise() + ab1.transpose();
    c.aa1 = softplus_m(c.az1);
    c.az2 = (c.aa1 * aW2.transpose()).rowwise() + ab2.transpose();
    c.aa2 = softplus_m(c.az2);
    Vector a_val = c.aa2 * aw3 + Vector::Constant(B, ab3);

    Vector r(B);
    for (Eigen::Index b = 0; b < B; ++b) {
        int s = c.seg[static_cast<std::size_t>(b)];
        r(b) = c.htil.row(b).dot(vt.row(s)) + a_val(b) + bt(s);
    }
    if (cache) c.h = h;
    return r;
}

void ExpFamHead::backward(const Cache& c, const Vector& dr, double* grad, Matrix* dh) const {
    const Eigen::Index B = dr.size(), w = a_width_;
    CMapM vt(theta_.data() + o_[0], segments_, static_cast<Eigen::Index>(n_) * k_);
    CMapM aW1(theta_.data() + o_[2], w, n_);
    CMapM aW2(theta_.data() + o_[4], w, w);
    CMapV aw3(theta_.data() + o_[6], w);
    MapM gv(grad + o_[0], segments_, static_cast<Eigen::Index>(n_) * k_);
    MapV gb(grad + o_[1], segments_);
    MapM gaW1(grad + o_[2], w, n_);
    MapV gab1(grad + o_[3], w);
    MapM gaW2(grad + o_[4], w, w);
    MapV gab2(grad + o_[5], w);
    MapV gaw3(grad + o_[6], w);

    Matrix dhtil(B, static_cast<Eigen::Index>(n_) * k_);
    for (Eigen::Index b = 0; b < B; ++b) {
        int s = c.seg[static_cast<std::size_t>(b)];
        gv.row(s) += dr(b) * c.htil.row(b);
        gb(s) += dr(b);
        dhtil.row(b) = dr(b) * vt.row(s);
    }

    if (dh) *dh = Matrix::Zero(B, n_);
    if (dh) {
        for (int i = 0; i < n_; ++i) {
            dh->col(i) += dhtil.col(static_cast<Eigen::Index>(i) * k_);
            for (int j = 2; j <= k_; ++j)
                dh->col(i) += static_cast<double>(j) *
                              dhtil.col(static_cast<Eigen::Index>(i) * k_ + j - 1)
                                  .cwiseProduct(
                                      c.htil.col(static_cast<Eigen::Index>(i) * k_ + j - 2));
        }
    }

    // a-net backward.
    gaw3 += c.aa2.transpose() * dr;
    grad[o_[7]] += dr.sum();
    Matrix da2 = dr * aw3.transpose();
    Matrix dz2 = da2.cwiseProduct(sigmoid_m(c.az2));
    gaW2 += dz2.transpose() * c.aa1;
    gab2 += dz2.colwise().sum();
    Matrix da1 = dz2 * aW2;
    Matrix dz1 = da1.cwiseProduct(sigmoid_m(c.az1));
    gaW1 += dz1.transpose() * c.h;
    gab1 += dz1.colwise().sum();
    if (dh) *dh += dz1 * aW1;
}

double ExpFamHead::l2_penalty(double l2, double* grad) const {
    // v-table and a-net weight blocks; b-table and biases excluded.
    const int blocks[4] = {0, 2, 4, 6};
    double penalty = 0.0;
    for (int bi : blocks) {
        Eigen::Index begin = o_[bi], count = o_[bi + 1] - o_[bi];
        CMapV wv(theta_.data() + begin, count);
        penalty += l2 * wv.squaredNorm();
        if (grad) MapV(grad + begin, count) += 2.0 * l2 * wv;
    }
    return penalty;
}

// ---------------------------------------------------------------------------
// DiscriminatorModel
// ---------------------------------------------------------------------------

DiscriminatorModel::DiscriminatorModel(FeatureNet net, GeneralHead head)
    : net_(std::move(net)), head_(std::move(head)) {}

DiscriminatorModel::DiscriminatorModel(FeatureNet net, ExpFamHead head)
    : net_(std::move(net)), head_(std::move(head)) {}

HeadKind DiscriminatorModel::head_kind() const {
    return std::holds_alternative<GeneralHead>(head_) ? HeadKind::General : HeadKind::ExpFam;
}

Eigen::Index DiscriminatorModel::param_count() const {
    return net_.param_count() +
           std::visit([](const auto& h) { return h.param_count(); }, head_);
}

Vector DiscriminatorModel::params() const {
    Vector out(param_count());
    out.head(net_.param_count()) = net_.params();
    std::visit([&](const auto& h) { out.tail(h.param_count()) = h.params(); }, head_);
    return out;
}

void DiscriminatorModel::set_params(const Vector& theta) {
    if (theta.size() != param_count())
        throw InvalidInputError("DiscriminatorModel::set_params: size mismatch");
    net_.set_params(theta.head(net_.param_count()));
    std::visit([&](auto& h) { h.set_params(theta.tail(h.param_count())); }, head_);
}

Vector DiscriminatorModel::regression(const Matrix& x, const Matrix& u) const {
    Matrix h = net_.forward(x);
    return std::visit([&](const auto& hd) { return hd.forward(h, u); }, head_);
}

Matrix DiscriminatorModel::features(const Matrix& x) const { return net_.forward(x); }

double DiscriminatorModel::loss_and_grad(const Matrix& x, const Matrix& u,
                                         const std::vector<int>& labels, double l2,
                                         Vector& grad) const {
    const Eigen::Index B = x.rows();
    if (B == 0) throw InvalidInputError("loss_and_grad: empty batch");
    FeatureNet::Cache nc;
    Matrix h = net_.forward(x, &nc);

    grad = Vector::Zero(param_count());
    double* head_grad = grad.data() + net_.param_count();

    double loss = 0.0;
    Vector dr(B);
    Matrix dh;
    std::visit(
        [&](const auto& hd) {
            typename std::decay_t<decltype(hd)>::Cache hc;
            Vector r = hd.forward(h, u, &hc);
            for (Eigen::Index b = 0; b < B; ++b) {
                double y = labels[static_cast<std::size_t>(b)];
                loss += softplus(r(b)) - y * r(b);
                dr(b) = (sigmoid(r(b)) - y) / static_cast<double>(B);
            }
            loss /= static_cast<double>(B);
            hd.backward(hc, dr, head_grad, &dh);
        },
        head_);

    net_.backward(nc, dh, grad.data());
    loss += net_.l2_penalty(l2, grad.data());
    loss += std::visit([&](const auto& hd) { return hd.l2_penalty(l2, head_grad); }, head_);
    return loss;
}

double DiscriminatorModel::loss(const Matrix& x, const Matrix& u,
                                const std::vector<int>& labels, double l2) const {
    const Eigen::Index B = x.rows();
    Vector r = regression(x, u);
    double loss = 0.0;
    for (Eigen::Index b = 0; b < B; ++b)
        loss += softplus(r(b)) - labels[static_cast<std::size_t>(b)] * r(b);
    loss /= static_cast<double>(B);
    loss += net_.l2_penalty(l2, nullptr);
    loss += std::visit([&](const auto& hd) { return hd.l2_penalty(l2, nullptr); }, head_);
    return loss;
}

}  // namespace gcl
