// Acceptance gate: runs the ten release criteria end to end and prints one
// pass/fail line per criterion. Exits nonzero when any criterion fails.

#include "gcl/experiment.hpp"
#include "gcl/theory.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#ifndef GCL_CLI_PATH
#error "GCL_CLI_PATH must be defined"
#endif
#ifndef GCL_CONFIG_DIR
#error "GCL_CONFIG_DIR must be defined"
#endif

using namespace gcl;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what,
            const std::string& detail, double seconds) {
    std::ostringstream os;
    os.precision(4);
    os << "criterion " << criterion << ": " << (pass ? "PASS" : "FAIL") << " - " << what
       << " (" << detail << "; " << seconds << "s)";
    std::cout << os.str() << std::endl;
    if (!pass) ++g_failures;
}

class Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

ExperimentConfig load_config(const std::string& name) {
    std::ifstream is(fs::path(GCL_CONFIG_DIR) / name);
    if (!is) throw std::runtime_error("cannot open config " + name);
    return ExperimentConfig::from_json(nlohmann::json::parse(is));
}

double mcc_of(const RunResult& r) {
    return r.report_ica ? r.report_ica->mcc : r.report_raw.mcc;
}

// Mean MCC over the config's seed list; set epochs=0 for the untrained control.
double mean_mcc(ExperimentConfig cfg, bool untrained) {
    if (untrained) cfg.train.epochs = 0;
    double sum = 0.0;
    for (std::uint64_t seed : cfg.seeds) sum += mcc_of(run_experiment(cfg, seed));
    return sum / static_cast<double>(cfg.seeds.size());
}

// --- criterion 1: gradient correctness ------------------------------------

void criterion_1() {
    Timer timer;
    ExperimentConfig cfg = load_config("linear-sanity.json");
    cfg.segmented.T = 4096;
    SourceDataset ds = synthesize(cfg, 1);
    SeededRng prng(1, 3);
    ContrastiveSet cs = build_pairs(ds, cfg.strategy, prng);

    DiscriminatorModel expfam = make_model(cfg, cs, 1);
    GradCheckReport re = grad_check(expfam, cs, 100, 1e-5, 1);

    ExperimentConfig gcfg = cfg;
    gcfg.head = HeadKind::General;
    DiscriminatorModel general = make_model(gcfg, cs, 1);
    GradCheckReport rg = grad_check(general, cs, 100, 1e-5, 1);

    bool pass = re.max_rel_error <= 1e-4 && rg.max_rel_error <= 1e-4;
    std::ostringstream d;
    d << "expfam max_rel_err " << re.max_rel_error << " (excluded " << re.excluded
      << "), general max_rel_err " << rg.max_rel_error << " (excluded " << rg.excluded
      << ")";
    report(1, pass, "gradient check, both heads, 100 coordinates, eps 1e-5", d.str(),
           timer.seconds());
}

// --- criterion 2: order dichotomy -----------------------------------------

ConditionalFamily variance_family(int n, int segments, std::uint64_t seed, bool order2) {
    SeededRng rng(seed, 0);
    std::vector<ConditionalFamily::Component> comps;
    for (int i = 0; i < n; ++i) {
        ConditionalFamily::Component c;
        Statistic s2;
        s2.tag = Statistic::Tag::Poly;
        s2.power = 2;
        s2.coeff = -0.5;
        if (order2) {
            Statistic s1;
            s1.tag = Statistic::Tag::Poly;
            s1.power = 1;
            c.stats = {s1, s2};
        } else {
            c.stats = {s2};
        }
        for (std::size_t j = 0; j < c.stats.size(); ++j) {
            Modulator m;
            m.tag = Modulator::Tag::SegmentTable;
            for (int k = 0; k < segments; ++k)
                m.table.push_back(j == 0 && order2 ? rng.uniform(-2.0, 2.0)
                                                   : rng.uniform(0.3, 3.0));
            c.mods.push_back(std::move(m));
        }
        comps.push_back(std::move(c));
    }
    ConditionalFamily::UDomain dom;
    dom.segmented = true;
    dom.segments = segments;
    return ConditionalFamily(std::move(comps), dom);
}

void criterion_2() {
    Timer timer;
    Vector y(2);
    y << 0.6, -1.1;
    bool k1_ok = true;
    int worst_successes = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ConditionalFamily fam = variance_family(2, 20, seed, false);
        SeededRng rng(seed, 7);
        VariabilityVerdict v = check_variability(fam, y, 100, rng);
        worst_successes = std::max(worst_successes, v.successes);
        if (v.successes != 0) k1_ok = false;
    }
    ConditionalFamily fam2 = variance_family(2, 20, 3, true);
    SeededRng rng2(3, 7);
    VariabilityVerdict v2 = check_variability(fam2, y, 100, rng2);
    bool pass = k1_ok && v2.successes >= 99;
    std::ostringstream d;
    d << "k=1 max successes over 10 seeds " << worst_successes << "/100, k=2 successes "
      << v2.successes << "/100";
    report(2, pass, "order dichotomy in the variability rank check", d.str(),
           timer.seconds());
}

// --- criterion 3: modulator-difference condition number -------------------

void criterion_3() {
    Timer timer;
    int finite = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        ConditionalFamily fam = variance_family(2, 8, seed, true);  // n*k+1 = 5
        SeededRng rng(seed, 3);
        std::vector<int> segs(8);
        std::iota(segs.begin(), segs.end(), 0);
        for (std::size_t a = segs.size(); a > 1; --a)
            std::swap(segs[a - 1], segs[static_cast<std::size_t>(rng.uniform_index(a))]);
        std::vector<Vector> pts;
        for (int i = 0; i < 5; ++i) {
            Vector u(1);
            u << double(segs[static_cast<std::size_t>(i)]);
            pts.push_back(u);
        }
        if (std::isfinite(condition_number(lambda_bar(fam, pts)))) ++finite;
    }

    int infinite = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        std::vector<ConditionalFamily::Component> comps(1);
        Statistic s1, s2;
        s1.tag = Statistic::Tag::Poly;
        s1.power = 1;
        s2.tag = Statistic::Tag::Poly;
        s2.power = 2;
        s2.coeff = -0.5;
        comps[0].stats = {s1, s2};
        SeededRng crng(seed, 1);
        for (int j = 0; j < 2; ++j) {
            Modulator m;
            m.tag = Modulator::Tag::Constant;
            m.constant = crng.uniform(0.3, 2.0);
            comps[0].mods.push_back(m);
        }
        ConditionalFamily::UDomain dom;
        dom.segmented = true;
        dom.segments = 4;
        ConditionalFamily fam(std::move(comps), dom);
        std::vector<Vector> pts;
        for (int i = 0; i < 3; ++i) {
            Vector u(1);
            u << double(i);
            pts.push_back(u);
        }
        if (std::isinf(condition_number(lambda_bar(fam, pts)))) ++infinite;
    }
    bool pass = finite >= 99 && infinite == 100;
    std::ostringstream d;
    d << "random tables finite " << finite << "/100, constant tables infinite "
      << infinite << "/100";
    report(3, pass, "modulator-difference matrix condition", d.str(), timer.seconds());
}

// --- criterion 4: linear sanity pipeline ----------------------------------

void criterion_4() {
    Timer timer;
    ExperimentConfig cfg = load_config("linear-sanity.json");
    RunResult r = run_experiment(cfg, cfg.seeds.front());
    double m = mcc_of(r);
    std::ostringstream d;
    d << "abs MCC " << m << " (threshold 0.95), accuracy " << r.final_accuracy;
    report(4, m >= 0.95, "linear mixing sanity run", d.str(), timer.seconds());
}

// --- criterion 5: segment-count sweep -------------------------------------

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = 0; j < v.size(); ++j)
                if (v[j] < v[i] || (v[j] == v[i] && j < i)) r[i] += 1.0;
        return r;
    };
    std::vector<double> rx = ranks(x), ry = ranks(y);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= double(rx.size());
    my /= double(ry.size());
    double num = 0, dx = 0, dy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    return num / std::sqrt(dx * dy);
}

void criterion_5() {
    Timer timer;
    ExperimentConfig cfg = load_config("segment-sweep.json");
    std::vector<int> axis = {10, 50, 100, 300};
    SweepResult sweep = sweep_segments(cfg, axis);

    std::vector<double> means;
    for (int seg : axis) {
        double sum = 0;
        int count = 0;
        for (const auto& c : sweep.cells)
            if (c.segments == seg && !c.failed) {
                sum += c.mcc_ica;
                ++count;
            }
        means.push_back(count ? sum / count : 0.0);
    }
    double at100 = means[2];

    ExperimentConfig control = cfg;
    control.segmented.segments = 100;
    double control_mcc = mean_mcc(control, /*untrained=*/true);

    std::vector<double> seg_values(axis.begin(), axis.end());
    double rho = spearman(seg_values, means);

    bool pass = at100 >= 0.70 && (at100 - control_mcc) >= 0.30 && rho >= 0.0;
    std::ostringstream d;
    d << "mean MCC by segments {";
    for (std::size_t i = 0; i < means.size(); ++i)
        d << axis[i] << ":" << means[i] << (i + 1 < means.size() ? ", " : "");
    d << "}, untrained control at 100 " << control_mcc << ", spearman " << rho;
    report(5, pass, "segment-count sweep against the untrained control", d.str(),
           timer.seconds());
}

// --- criterion 6: grid scale-mixture case ---------------------------------

void criterion_6() {
    Timer timer;
    ExperimentConfig cfg = load_config("grid-spatial.json");
    double trained = mean_mcc(cfg, false);
    double control = mean_mcc(cfg, true);
    bool pass = trained >= 0.60 && (trained - control) >= 0.25;
    std::ostringstream d;
    d << "mean MCC " << trained << " (threshold 0.60), untrained control " << control;
    report(6, pass, "grid scale-mixture with the general head and spatial u", d.str(),
           timer.seconds());
}

// --- criterion 7: null anchor ---------------------------------------------

void criterion_7() {
    Timer timer;
    ExperimentConfig cfg = load_config("null-anchor.json");
    RunResult trained = run_experiment(cfg, cfg.seeds.front());
    ExperimentConfig ccfg = cfg;
    ccfg.train.epochs = 0;
    RunResult control = run_experiment(ccfg, ccfg.seeds.front());
    double diff = std::abs(mcc_of(trained) - mcc_of(control));
    bool pass = std::abs(trained.final_accuracy - 0.5) <= 0.02 && diff <= 0.05;
    std::ostringstream d;
    d << "accuracy " << trained.final_accuracy << " (band 0.5+-0.02), MCC trained "
      << mcc_of(trained) << " vs control " << mcc_of(control) << " (diff " << diff
      << ")";
    report(7, pass, "i.i.d. sources with a time auxiliary stay at chance", d.str(),
           timer.seconds());
}

// --- criterion 8: metric properties ---------------------------------------

void criterion_8() {
    Timer timer;
    SeededRng rng(1, 0);
    Matrix s(2000, 5);
    for (Eigen::Index j = 0; j < 5; ++j)
        for (Eigen::Index t = 0; t < 2000; ++t) s(t, j) = rng.normal();

    bool pass = true;
    std::ostringstream d;

    EvalReport self = mcc(s, s);
    if (self.mcc != 1.0) {
        pass = false;
        d << "self-mcc " << self.mcc << " != 1; ";
    }

    Matrix perm(2000, 5);
    int order[5] = {4, 2, 0, 3, 1};
    for (int j = 0; j < 5; ++j) perm.col(j) = s.col(order[j]);
    Matrix flipped = perm;
    flipped.col(0) *= -1.0;
    Matrix affine = flipped;
    for (int j = 0; j < 5; ++j) affine.col(j) = 1.7 * affine.col(j).array() + 0.3 * j;
    if (std::abs(mcc(perm, s).mcc - 1.0) > 1e-12 ||
        std::abs(mcc(flipped, s).mcc - 1.0) > 1e-12 ||
        std::abs(mcc(affine, s).mcc - 1.0) > 1e-12) {
        pass = false;
        d << "invariance violated; ";
    }

    // assignment vs n! brute force for n <= 6
    int mismatches = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
        for (int n = 2; n <= 6; ++n) {
            SeededRng r(seed, static_cast<std::uint64_t>(n));
            Matrix score(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) score(i, j) = r.uniform();
            std::vector<int> got = max_sum_assignment(score);
            std::vector<int> best(static_cast<std::size_t>(n));
            std::iota(best.begin(), best.end(), 0);
            std::vector<int> p = best;
            double best_val = -1e300;
            do {
                double val = 0;
                for (int i = 0; i < n; ++i) val += score(i, p[static_cast<std::size_t>(i)]);
                if (val > best_val) {
                    best_val = val;
                    best = p;
                }
            } while (std::next_permutation(p.begin(), p.end()));
            double got_val = 0;
            for (int i = 0; i < n; ++i) got_val += score(i, got[static_cast<std::size_t>(i)]);
            if (std::abs(got_val - best_val) > 1e-12) ++mismatches;
        }
    if (mismatches > 0) {
        pass = false;
        d << mismatches << " assignment mismatches; ";
    }
    if (pass) d << "self-mcc exact, invariances exact, 100 assignment instances match";
    report(8, pass, "metric invariances and exact assignment", d.str(), timer.seconds());
}

// --- criterion 9: FastICA oracle ------------------------------------------

void criterion_9() {
    Timer timer;
    SeededRng rng(7, 0);
    Matrix s(100000, 5);
    for (Eigen::Index j = 0; j < 5; ++j)
        for (Eigen::Index t = 0; t < 100000; ++t) s(t, j) = rng.laplace_unit();
    Matrix g(5, 5);
    for (Eigen::Index i = 0; i < 5; ++i)
        for (Eigen::Index j = 0; j < 5; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();

    FastIcaConfig cfg;
    cfg.seed = 11;
    UnmixResult res = fastica(s * q.transpose(), cfg);
    Matrix c = corr_matrix(res.components, s);
    std::vector<int> assign = max_sum_assignment(c.cwiseAbs());
    double worst = 1.0;
    for (Eigen::Index i = 0; i < 5; ++i)
        worst = std::min(worst, std::abs(c(i, assign[static_cast<std::size_t>(i)])));
    std::ostringstream d;
    d << "min matched |corr| " << worst << " (threshold 0.99), converged "
      << res.converged;
    report(9, worst >= 0.99 && res.converged, "FastICA on an orthogonal Laplace mixture",
           d.str(), timer.seconds());
}

// --- criterion 10: byte-identical reruns through the CLI ------------------

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void criterion_10() {
    Timer timer;
    fs::path tmp = fs::temp_directory_path() /
                   ("gcl_accept_" + std::to_string(::getpid()));
    fs::create_directories(tmp);
    fs::path cfg_path = tmp / "cfg.json";
    {
        ExperimentConfig cfg = load_config("linear-sanity.json");
        cfg.segmented.T = 4096;
        cfg.segmented.segments = 16;
        cfg.train.epochs = 5;
        std::ofstream os(cfg_path);
        os << cfg.to_json().dump(2);
    }
    auto run_once = [&](const fs::path& out) {
        std::string cmd = std::string(GCL_CLI_PATH) + " run --config " +
                          cfg_path.string() + " --out " + out.string() + " > " +
                          (out.string() + ".log") + " 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    int rc1 = run_once(tmp / "a");
    int rc2 = run_once(tmp / "b");

    std::string ja, jb;
    if (rc1 == 0 && rc2 == 0) {
        for (const auto& e : fs::directory_iterator(tmp / "a"))
            if (e.path().string().ends_with(".eval.json")) ja = slurp(e.path());
        for (const auto& e : fs::directory_iterator(tmp / "b"))
            if (e.path().string().ends_with(".eval.json")) jb = slurp(e.path());
    }
    bool pass = rc1 == 0 && rc2 == 0 && !ja.empty() && ja == jb;
    std::ostringstream d;
    d << "exit codes " << rc1 << "/" << rc2 << ", eval JSON bytes "
      << (ja == jb ? "identical" : "differ") << " (" << ja.size() << " bytes)";
    report(10, pass, "CLI rerun determinism", d.str(), timer.seconds());
    fs::remove_all(tmp);
}

}  // namespace

int main() {
    std::cout << "acceptance gate: 10 criteria\n";
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_7();
    criterion_4();
    criterion_5();
    criterion_6();
    std::cout << (g_failures == 0 ? "acceptance: ALL PASS"
                                  : "acceptance: " + std::to_string(g_failures) +
                                        " criteria FAILED")
              << std::endl;
    return g_failures == 0 ? 0 : 1;
}
