#include "gcl/theory.hpp"

#include "gcl/errors.hpp"

#include <cmath>

namespace gcl {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kStepFirst = 1e-4;   // central step, first derivatives
constexpr double kStepSecond = 1e-3;  // central step, second derivatives

}  // namespace

// ---------------------------------------------------------------------------
// Statistic / Modulator catalogs
// ---------------------------------------------------------------------------

double Statistic::value(double s) const {
    switch (tag) {
        case Tag::Poly: return coeff * std::pow(s, power);
        case Tag::Abs: return coeff * std::abs(s);
        case Tag::Tanh: return coeff * std::tanh(s);
        case Tag::LogCosh: return coeff * std::log(std::cosh(s));
    }
    return 0.0;
}

double Statistic::d1(double s) const {
    switch (tag) {
        case Tag::Poly:
            return power == 0 ? 0.0 : coeff * power * std::pow(s, power - 1);
        case Tag::Abs: return coeff * (s >= 0.0 ? 1.0 : -1.0);  // sign(0) = +1
        case Tag::Tanh: {
            double t = std::tanh(s);
            return coeff * (1.0 - t * t);
        }
        case Tag::LogCosh: return coeff * std::tanh(s);
    }
    return 0.0;
}

double Statistic::d2(double s) const {
    switch (tag) {
        case Tag::Poly:
            return power < 2 ? 0.0
                             : coeff * power * (power - 1) * std::pow(s, power - 2);
        case Tag::Abs: return 0.0;  // a.e.
        case Tag::Tanh: {
            double t = std::tanh(s);
            return coeff * (-2.0 * t * (1.0 - t * t));
        }
        case Tag::LogCosh: {
            double t = std::tanh(s);
            return coeff * (1.0 - t * t);
        }
    }
    return 0.0;
}

double Modulator::value(const Vector& u) const {
    switch (tag) {
        case Tag::Constant: return constant;
        case Tag::SegmentTable: {
            int k = static_cast<int>(u(0));
            if (k < 0 || k >= static_cast<int>(table.size()))
                throw InvalidInputError("Modulator: segment index outside table");
            return table[static_cast<std::size_t>(k)];
        }
        case Tag::Affine: return weights.dot(u) + offset;
        case Tag::Sin:
            return amplitude * std::sin(2.0 * kPi * frequency * weights.dot(u) + phase);
    }
    return 0.0;
}

double Modulator::du(const Vector& u, int j) const {
    switch (tag) {
        case Tag::Constant: return 0.0;
        case Tag::SegmentTable:
            throw StrategyMismatchError("Modulator: segment table has no u-derivative");
        case Tag::Affine: return weights(j);
        case Tag::Sin:
            return amplitude * 2.0 * kPi * frequency * weights(j) *
                   std::cos(2.0 * kPi * frequency * weights.dot(u) + phase);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// FamilyEvaluator defaults (numeric mixed derivatives)
// ---------------------------------------------------------------------------

double FamilyEvaluator::d2q_dsdu(int i, double s, const Vector& u, int j) const {
    Vector up = u, um = u;
    up(j) += kStepFirst;
    um(j) -= kStepFirst;
    return (dq_ds(i, s, up) - dq_ds(i, s, um)) / (2.0 * kStepFirst);
}

double FamilyEvaluator::d3q_ds2du(int i, double s, const Vector& u, int j) const {
    Vector up = u, um = u;
    up(j) += kStepFirst;
    um(j) -= kStepFirst;
    return (d2q_ds2(i, s, up) - d2q_ds2(i, s, um)) / (2.0 * kStepFirst);
}

// ---------------------------------------------------------------------------
// ConditionalFamily
// ---------------------------------------------------------------------------

ConditionalFamily::ConditionalFamily(std::vector<Component> components, UDomain domain)
    : components_(std::move(components)), domain_(std::move(domain)) {
    if (components_.empty())
        throw InvalidInputError("ConditionalFamily: need at least one component");
    k_ = static_cast<int>(components_[0].stats.size());
    if (k_ < 1) throw InvalidInputError("ConditionalFamily: order k must be >= 1");

    SeededRng rng(0xFA171, 0);
    for (std::size_t i = 0; i < components_.size(); ++i) {
        const auto& c = components_[i];
        if (static_cast<int>(c.stats.size()) != k_ || c.mods.size() != c.stats.size())
            throw InvalidInputError(
                "ConditionalFamily: components must share order k with one modulator "
                "per statistic");
        // Linear-independence spot check of the statistics: Gram matrix of
        // values at 10k sampled points must have full numerical rank.
        constexpr int kSamples = 10000;
        Matrix vals(kSamples, k_);
        for (int t = 0; t < kSamples; ++t) {
            double s = rng.uniform(-3.0, 3.0);
            for (int j = 0; j < k_; ++j)
                vals(t, j) = c.stats[static_cast<std::size_t>(j)].value(s);
        }
        Matrix gram = vals.transpose() * vals / static_cast<double>(kSamples);
        if (numerical_rank(gram, 1e-6) < k_)
            throw InvalidInputError(
                "ConditionalFamily: statistics of component " + std::to_string(i) +
                " are numerically linearly dependent");
    }
}

double ConditionalFamily::q(int i, double s, const Vector& u) const {
    const auto& c = components_[static_cast<std::size_t>(i)];
    double out = c.base == Base::Gaussian ? -0.5 * s * s : 0.0;
    for (std::size_t j = 0; j < c.stats.size(); ++j)
        out += c.stats[j].value(s) * c.mods[j].value(u);
    return out;
}

double ConditionalFamily::dq_ds(int i, double s, const Vector& u) const {
    const auto& c = components_[static_cast<std::size_t>(i)];
    double out = c.base == Base::Gaussian ? -s : 0.0;
    for (std::size_t j = 0; j < c.stats.size(); ++j)
        out += c.stats[j].d1(s) * c.mods[j].value(u);
    return out;
}

double ConditionalFamily::d2q_ds2(int i, double s, const Vector& u) const {
    const auto& c = components_[static_cast<std::size_t>(i)];
    double out = c.base == Base::Gaussian ? -1.0 : 0.0;
    for (std::size_t j = 0; j < c.stats.size(); ++j)
        out += c.stats[j].d2(s) * c.mods[j].value(u);
    return out;
}

double ConditionalFamily::d2q_dsdu(int i, double s, const Vector& u, int j) const {
    const auto& c = components_[static_cast<std::size_t>(i)];
    double out = 0.0;
    for (std::size_t l = 0; l < c.stats.size(); ++l)
        out += c.stats[l].d1(s) * c.mods[l].du(u, j);
    return out;
}

double ConditionalFamily::d3q_ds2du(int i, double s, const Vector& u, int j) const {
    const auto& c = components_[static_cast<std::size_t>(i)];
    double out = 0.0;
    for (std::size_t l = 0; l < c.stats.size(); ++l)
        out += c.stats[l].d2(s) * c.mods[l].du(u, j);
    return out;
}

Vector ConditionalFamily::sample_u(SeededRng& rng) const {
    if (domain_.segmented) {
        Vector u(1);
        u(0) = static_cast<double>(
            rng.uniform_index(static_cast<std::uint64_t>(domain_.segments)));
        return u;
    }
    Vector u(domain_.lo.size());
    for (Eigen::Index j = 0; j < u.size(); ++j)
        u(j) = rng.uniform(domain_.lo(j), domain_.hi(j));
    return u;
}

// ---------------------------------------------------------------------------
// JSON spec
// ---------------------------------------------------------------------------

namespace {

Statistic statistic_from_json(const nlohmann::json& j) {
    Statistic s;
    const std::string tag = j.at("tag").get<std::string>();
    if (tag == "poly") {
        s.tag = Statistic::Tag::Poly;
        s.power = j.at("p").get<int>();
    } else if (tag == "abs") {
        s.tag = Statistic::Tag::Abs;
    } else if (tag == "tanh") {
        s.tag = Statistic::Tag::Tanh;
    } else if (tag == "log-cosh") {
        s.tag = Statistic::Tag::LogCosh;
    } else {
        throw InvalidInputError("family spec: unknown statistic tag '" + tag + "'");
    }
    s.coeff = j.value("coeff", 1.0);
    return s;
}

nlohmann::json statistic_to_json(const Statistic& s) {
    switch (s.tag) {
        case Statistic::Tag::Poly:
            return {{"tag", "poly"}, {"p", s.power}, {"coeff", s.coeff}};
        case Statistic::Tag::Abs: return {{"tag", "abs"}, {"coeff", s.coeff}};
        case Statistic::Tag::Tanh: return {{"tag", "tanh"}, {"coeff", s.coeff}};
        case Statistic::Tag::LogCosh: return {{"tag", "log-cosh"}, {"coeff", s.coeff}};
    }
    return {};
}

Modulator modulator_from_json(const nlohmann::json& j) {
    Modulator m;
    const std::string tag = j.at("tag").get<std::string>();
    if (tag == "constant") {
        m.tag = Modulator::Tag::Constant;
        m.constant = j.at("value").get<double>();
    } else if (tag == "segment-table") {
        m.tag = Modulator::Tag::SegmentTable;
        m.table = j.at("values").get<std::vector<double>>();
    } else if (tag == "affine") {
        m.tag = Modulator::Tag::Affine;
        auto w = j.at("weights").get<std::vector<double>>();
        m.weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
        m.offset = j.value("offset", 0.0);
    } else if (tag == "sin") {
        m.tag = Modulator::Tag::Sin;
        auto w = j.at("weights").get<std::vector<double>>();
        m.weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
        m.amplitude = j.value("amplitude", 1.0);
        m.frequency = j.value("frequency", 1.0);
        m.phase = j.value("phase", 0.0);
    } else {
        throw InvalidInputError("family spec: unknown modulator tag '" + tag + "'");
    }
    return m;
}

nlohmann::json modulator_to_json(const Modulator& m) {
    switch (m.tag) {
        case Modulator::Tag::Constant:
            return {{"tag", "constant"}, {"value", m.constant}};
        case Modulator::Tag::SegmentTable:
            return {{"tag", "segment-table"}, {"values", m.table}};
        case Modulator::Tag::Affine: {
            std::vector<double> w(m.weights.data(), m.weights.data() + m.weights.size());
            return {{"tag", "affine"}, {"weights", w}, {"offset", m.offset}};
        }
        case Modulator::Tag::Sin: {
            std::vector<double> w(m.weights.data(), m.weights.data() + m.weights.size());
            return {{"tag", "sin"},
                    {"weights", w},
                    {"amplitude", m.amplitude},
                    {"frequency", m.frequency},
                    {"phase", m.phase}};
        }
    }
    return {};
}

}  // namespace

ConditionalFamily ConditionalFamily::from_json(const nlohmann::json& spec) {
    UDomain domain;
    const auto& dj = spec.at("u_domain");
    const std::string dtype = dj.at("type").get<std::string>();
    if (dtype == "segments") {
        domain.segmented = true;
        domain.segments = dj.at("count").get<int>();
        if (domain.segments < 1)
            throw InvalidInputError("family spec: u_domain.count must be >= 1");
    } else if (dtype == "box") {
        auto lo = dj.at("low").get<std::vector<double>>();
        auto hi = dj.at("high").get<std::vector<double>>();
        if (lo.size() != hi.size() || lo.empty())
            throw InvalidInputError("family spec: u_domain low/high mismatch");
        domain.lo = Eigen::Map<const Vector>(lo.data(), static_cast<Eigen::Index>(lo.size()));
        domain.hi = Eigen::Map<const Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()));
    } else {
        throw InvalidInputError("family spec: unknown u_domain.type '" + dtype + "'");
    }

    std::vector<Component> comps;
    for (const auto& cj : spec.at("components")) {
        Component c;
        const std::string base = cj.value("base", std::string("none"));
        if (base == "gaussian") c.base = Base::Gaussian;
        else if (base != "none")
            throw InvalidInputError("family spec: unknown base '" + base + "'");
        for (const auto& sj : cj.at("statistics")) c.stats.push_back(statistic_from_json(sj));
        for (const auto& mj : cj.at("modulators")) c.mods.push_back(modulator_from_json(mj));
        comps.push_back(std::move(c));
    }
    return ConditionalFamily(std::move(comps), std::move(domain));
}

nlohmann::json ConditionalFamily::to_json() const {
    nlohmann::json dj;
    if (domain_.segmented) {
        dj = {{"type", "segments"}, {"count", domain_.segments}};
    } else {
        std::vector<double> lo(domain_.lo.data(), domain_.lo.data() + domain_.lo.size());
        std::vector<double> hi(domain_.hi.data(), domain_.hi.data() + domain_.hi.size());
        dj = {{"type", "box"}, {"low", lo}, {"high", hi}};
    }
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : components_) {
        nlohmann::json stats = nlohmann::json::array();
        nlohmann::json mods = nlohmann::json::array();
        for (const auto& s : c.stats) stats.push_back(statistic_to_json(s));
        for (const auto& m : c.mods) mods.push_back(modulator_to_json(m));
        comps.push_back({{"base", c.base == Base::Gaussian ? "gaussian" : "none"},
                         {"statistics", stats},
                         {"modulators", mods}});
    }
    return {{"u_domain", dj}, {"components", comps}};
}

// ---------------------------------------------------------------------------
// BlackBoxFamily
// ---------------------------------------------------------------------------

BlackBoxFamily::BlackBoxFamily(int n, Evaluator q, std::function<Vector(SeededRng&)> sample_u,
                               int u_dim, bool continuous)
    : n_(n), u_dim_(u_dim), continuous_(continuous), q_(std::move(q)),
      sample_u_(std::move(sample_u)) {}

double BlackBoxFamily::dq_ds(int i, double s, const Vector& u) const {
    double v = (q_(i, s + kStepFirst, u) - q_(i, s - kStepFirst, u)) / (2.0 * kStepFirst);
    if (!std::isfinite(v)) throw InvalidInputError("BlackBoxFamily: non-finite derivative");
    return v;
}

double BlackBoxFamily::d2q_ds2(int i, double s, const Vector& u) const {
    double v = (q_(i, s + kStepSecond, u) - 2.0 * q_(i, s, u) + q_(i, s - kStepSecond, u)) /
               (kStepSecond * kStepSecond);
    if (!std::isfinite(v)) throw InvalidInputError("BlackBoxFamily: non-finite derivative");
    return v;
}

Vector BlackBoxFamily::sample_u(SeededRng& rng) const { return sample_u_(rng); }

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

Vector w_vector(const FamilyEvaluator& fam, const Vector& y, const Vector& u) {
    const int n = fam.n();
    if (y.size() != n) throw InvalidInputError("w_vector: y size mismatch");
    Vector w(2 * n);
    for (int i = 0; i < n; ++i) {
        w(i) = fam.dq_ds(i, y(i), u);
        w(n + i) = fam.d2q_ds2(i, y(i), u);
        if (!std::isfinite(w(i)) || !std::isfinite(w(n + i)))
            throw InvalidInputError("w_vector: non-finite derivative");
    }
    return w;
}

VariabilityVerdict check_variability(const FamilyEvaluator& fam, const Vector& y,
                                     int n_trials, SeededRng& rng, double rank_rel_tol) {
    if (n_trials < 1) throw InvalidInputError("check_variability: n_trials must be >= 1");
    const int n = fam.n();
    VariabilityVerdict verdict;
    verdict.rank_required = 2 * n;
    verdict.n_trials = n_trials;

    for (int trial = 0; trial < n_trials; ++trial) {
        // The condition quantifies over 2n+1 distinct auxiliary values, so a
        // trial draws without replacement (bounded retries; duplicates would
        // only waste the trial on a zero column).
        std::vector<Vector> us;
        us.reserve(static_cast<std::size_t>(2 * n + 1));
        for (int j = 0; j <= 2 * n; ++j) {
            Vector u = fam.sample_u(rng);
            for (int retry = 0; retry < 64; ++retry) {
                bool seen = false;
                for (const auto& prev : us)
                    if (prev.size() == u.size() && prev == u) { seen = true; break; }
                if (!seen) break;
                u = fam.sample_u(rng);
            }
            us.push_back(u);
        }
        Vector w0 = w_vector(fam, y, us[0]);
        Matrix diff(2 * n, 2 * n);
        for (int j = 1; j <= 2 * n; ++j)
            diff.col(j - 1) = w_vector(fam, y, us[static_cast<std::size_t>(j)]) - w0;
        int rank = diff.isZero(0.0) ? 0 : numerical_rank(diff, rank_rel_tol);
        verdict.best_rank = std::max(verdict.best_rank, rank);
        if (rank == 2 * n) {
            ++verdict.successes;
            if (verdict.witness.empty()) verdict.witness = us;
        }
    }
    return verdict;
}

VariabilityVerdict check_alt_variability(const FamilyEvaluator& fam, const Vector& y,
                                         int aux_coordinate, int n_trials, SeededRng& rng,
                                         double rank_rel_tol) {
    if (!fam.continuous_u())
        throw StrategyMismatchError(
            "check_alt_variability: requires a continuous-valued auxiliary variable");
    if (n_trials < 1) throw InvalidInputError("check_alt_variability: n_trials must be >= 1");
    const int n = fam.n();
    VariabilityVerdict verdict;
    verdict.rank_required = 2 * n;
    verdict.n_trials = n_trials;

    for (int trial = 0; trial < n_trials; ++trial) {
        std::vector<Vector> us;
        us.reserve(static_cast<std::size_t>(2 * n));
        Matrix cols(2 * n, 2 * n);
        for (int c = 0; c < 2 * n; ++c) {
            Vector u = fam.sample_u(rng);
            us.push_back(u);
            for (int i = 0; i < n; ++i) {
                cols(i, c) = fam.d2q_dsdu(i, y(i), u, aux_coordinate);
                cols(n + i, c) = fam.d3q_ds2du(i, y(i), u, aux_coordinate);
            }
        }
        int rank = cols.isZero(0.0) ? 0 : numerical_rank(cols, rank_rel_tol);
        verdict.best_rank = std::max(verdict.best_rank, rank);
        if (rank == 2 * n) {
            ++verdict.successes;
            if (verdict.witness.empty()) verdict.witness = us;
        }
    }
    return verdict;
}

Matrix lambda_bar(const ConditionalFamily& fam, const std::vector<Vector>& u_points) {
    const int n = fam.n();
    const int k = fam.order();
    const int nk = n * k;
    if (static_cast<int>(u_points.size()) != nk + 1)
        throw InvalidInputError("lambda_bar: need exactly n*k + 1 u points");

    Matrix lb(nk, nk);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) {
            const Modulator& mod = fam.component(i).mods[static_cast<std::size_t>(j)];
            double base = mod.value(u_points[0]);
            for (int l = 1; l <= nk; ++l)
                lb(i * k + j, l - 1) = mod.value(u_points[static_cast<std::size_t>(l)]) - base;
        }
    return lb;
}

ExpFamConsistencyReport check_expfam_consistency_form(const ConditionalFamily& fam,
                                                      int n_samples, std::uint64_t seed) {
    ExpFamConsistencyReport report;
    report.order = fam.order();
    if (fam.order() == 1) {
        // Order-1 families cannot satisfy the variability rank requirement.
        report.order_one_impossible = true;
        report.component_pass.assign(static_cast<std::size_t>(fam.n()), false);
        report.overall = false;
        return report;
    }

    SeededRng rng(seed, 0xC0A5157ULL);
    const int k = fam.order();
    for (int i = 0; i < fam.n(); ++i) {
        int non_proportional = 0;
        for (int t = 0; t < n_samples; ++t) {
            double s = rng.uniform(-3.0, 3.0);
            bool all_pairs_ok = true;
            for (int j = 0; j < k && all_pairs_ok; ++j)
                for (int j2 = j + 1; j2 < k && all_pairs_ok; ++j2) {
                    const auto& sa = fam.component(i).stats[static_cast<std::size_t>(j)];
                    const auto& sb = fam.component(i).stats[static_cast<std::size_t>(j2)];
                    double a1 = sa.d1(s), a2 = sa.d2(s);
                    double b1 = sb.d1(s), b2 = sb.d2(s);
                    double cross = std::abs(a1 * b2 - a2 * b1);
                    double scale = std::hypot(a1, a2) * std::hypot(b1, b2);
                    if (cross <= 1e-9 * std::max(scale, 1e-12)) all_pairs_ok = false;
                }
            if (all_pairs_ok) ++non_proportional;
        }
        report.component_pass.push_back(non_proportional >= (99 * n_samples) / 100);
    }
    report.overall = true;
    for (bool b : report.component_pass) report.overall = report.overall && b;
    return report;
}

// ---------------------------------------------------------------------------
// Verdict serialization
// ---------------------------------------------------------------------------

nlohmann::json VariabilityVerdict::to_json() const {
    nlohmann::json wit = nlohmann::json::array();
    for (const auto& u : witness) {
        std::vector<double> v(u.data(), u.data() + u.size());
        wit.push_back(v);
    }
    return {{"rank_required", rank_required},
            {"n_trials", n_trials},
            {"successes", successes},
            {"best_rank", best_rank},
            {"exists", exists()},
            {"witness", wit}};
}

nlohmann::json ExpFamConsistencyReport::to_json() const {
    return {{"order", order},
            {"order_one_impossible", order_one_impossible},
            {"component_pass", component_pass},
            {"overall", overall}};
}

}  // namespace gcl
