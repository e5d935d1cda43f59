#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "capacity_mft.hpp"
#include "capacity_sim.hpp"
#include "errors.hpp"
#include "report.hpp"
#include "svm.hpp"
#include "../support/oracles.hpp"
#include "../support/synthetic.hpp"

using namespace mg;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

// Every simulation run in this binary, for the bisection contract.
std::vector<SimCapacityResult> g_sim_runs;
std::vector<SimConfig> g_sim_configs;

SimCapacityResult sim(const ManifoldSet& ms, const SimConfig& cfg) {
    SimCapacityResult r = simulation_capacity(ms, cfg);
    g_sim_runs.push_back(r);
    g_sim_configs.push_back(cfg);
    return r;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

std::string list(const std::vector<double>& v) {
    std::ostringstream os;
    os.precision(4);
    os << "[";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << "]";
    return os.str();
}

void point_capacity(Outcome& o) {
    // Cover: C(2N, N) / 2^(2N) = 1/2 for P = 2N
    const double cover = testing::cover_count(20, 10) / std::pow(2.0, 20);
    o.expect(cover == 0.5, "Cover fraction at P=2N is 1/2");

    const auto ms = testing::point_manifolds(20, 768, 11);
    SimConfig sc;
    sc.homogeneous = true;
    sc.center_global = false;
    sc.seed = 1;
    const auto rs = sim(ms, sc);
    MftConfig mc;
    mc.kappa = 1e-8;
    mc.center_global = false;
    mc.seed = 1;
    const auto rm = mftma(ms, mc);
    o.detail << "alpha_SIM=" << rs.alpha_sim << " alpha_M=" << rm.alpha_m;
    o.expect(std::abs(rs.alpha_sim - 2.0) <= 0.3, "alpha_SIM in 2 +- 0.3");
    o.expect(std::abs(rm.alpha_m - 2.0) <= 0.3, "alpha_M in 2 +- 0.3");
}

void mft_sim_agreement(Outcome& o) {
    struct Geometry {
        double radius;
        std::size_t dim;
    };
    const std::vector<Geometry> suite{{0.0, 1}, {0.1, 1}, {0.25, 2}, {0.4, 3}, {0.5, 5},
                                      {0.6, 4}, {0.75, 6}, {0.9, 8}, {1.0, 10}, {1.0, 2}};
    double worst = 0.0;
    for (std::size_t i = 0; i < suite.size(); ++i) {
        const auto ms = testing::synthetic_manifolds(30, 20, 200, suite[i].radius, suite[i].dim, 100 + i);
        SimConfig sc;
        sc.homogeneous = true;
        sc.seed = 200 + i;
        MftConfig mc;
        mc.seed = 300 + i;
        const double a_sim = sim(ms, sc).alpha_sim;
        const double a_m = mftma(ms, mc).alpha_m;
        const double err = rel(a_m, a_sim);
        worst = std::max(worst, err);
        if (err > 0.15) {
            std::ostringstream w;
            w << "set R=" << suite[i].radius << " D=" << suite[i].dim << ": alpha_M=" << a_m << " alpha_SIM=" << a_sim;
            o.expect(false, w.str());
        }
    }
    o.detail << "max |alpha_M - alpha_SIM|/alpha_SIM=" << worst;
}

void baselines(Outcome& o) {
    const std::vector<std::size_t> sizes(10, 20);
    const double lb = lower_bound_capacity(sizes);
    o.expect(lb == 0.1, "lower bound of ten 20-point manifolds is exactly 0.1");

    const auto ms = testing::synthetic_manifolds(10, 20, 300, 1.0, 19, 9);
    const auto shuffled = shuffle_labels(ms, 3);
    SimConfig sc;
    sc.seed = 4;
    const double a = sim(shuffled, sc).alpha_sim;
    o.detail << "LB=" << lb << " shuffled alpha_SIM=" << a;
    o.expect(rel(a, lb) <= 0.2, "shuffled capacity within 20% of LB");
}

void monotonicity(Outcome& o) {
    MftConfig mc;
    mc.seed = 17;
    const std::uint64_t data_seed = 5;
    std::vector<double> by_radius, by_dim, by_rho;
    for (double r : {0.2, 0.4, 0.6, 0.8, 1.0})
        by_radius.push_back(mftma(testing::synthetic_manifolds(20, 20, 200, r, 5, data_seed), mc).alpha_m);
    for (std::size_t d : {1, 2, 3, 5, 8})
        by_dim.push_back(mftma(testing::synthetic_manifolds(20, 20, 200, 0.5, d, data_seed), mc).alpha_m);
    for (double rho : {0.0, 0.2, 0.4, 0.6, 0.8})
        by_rho.push_back(mftma(testing::synthetic_manifolds(20, 20, 200, 0.5, 5, data_seed, rho), mc).alpha_m);
    o.detail << "radius " << list(by_radius) << " dimension " << list(by_dim) << " correlation " << list(by_rho);
    o.expect(strictly_decreasing(by_radius), "radius sweep decreasing");
    o.expect(strictly_decreasing(by_dim), "dimension sweep decreasing");
    o.expect(strictly_decreasing(by_rho), "correlation sweep decreasing");
}

void invariance(Outcome& o) {
    const auto ms = testing::synthetic_manifolds(12, 15, 60, 0.5, 4, 21);
    const auto rotated = testing::transformed(ms, testing::random_rotation(60, 22));
    const auto scaled = testing::transformed(ms, Eigen::MatrixXd::Identity(60, 60), 3.7);

    MftConfig mc;
    mc.seed = 23;
    const auto base = mftma(ms, mc);
    double worst_mft = 0.0;
    for (const auto* other : {&rotated, &scaled}) {
        const auto r = mftma(*other, mc);
        worst_mft = std::max({worst_mft, std::abs(r.alpha_m - base.alpha_m), std::abs(r.mean_radius - base.mean_radius),
                              std::abs(r.mean_dimension - base.mean_dimension),
                              std::abs(r.rho_center - base.rho_center)});
    }

    SimConfig sc;
    sc.seed = 24;
    const double a = sim(ms, sc).alpha_sim;
    const double a_rot = sim(rotated, sc).alpha_sim;
    const double a_scaled = sim(scaled, sc).alpha_sim;
    const double worst_sim = std::max(rel(a_rot, a), rel(a_scaled, a));
    o.detail << "max MFT deviation=" << worst_mft << " max sim relative deviation=" << worst_sim;
    o.expect(worst_mft <= 1e-6, "MFT outputs within 1e-6");
    o.expect(worst_sim <= 0.10, "alpha_SIM within 10%");
}

void svm_fields(Outcome& o) {
    const auto ms = testing::synthetic_manifolds(5, 30, 40, 0.1, 3, 31);
    FieldOptions fo;
    fo.seed = 32;
    const auto fd = fields_one_vs_rest(ms, Split{}, fo);
    bool all_positive = !fd.normalized_fields.empty();
    for (double f : fd.normalized_fields) all_positive = all_positive && f > 0.0;
    o.expect(fd.tpr == 1.0, "tpr is 1 on separable data");
    o.expect(all_positive, "all normalised fields positive");

    std::size_t sign_violations = 0, checked = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto data = testing::synthetic_manifolds(3 + s % 3, 12, 6, 0.8, 3, 1000 + s);
        FieldOptions f;
        f.seed = s;
        const auto d = fields_one_vs_rest(data, Split{}, f);
        for (std::size_t i = 0; i < d.raw_fields.size(); ++i) {
            if (std::isnan(d.normalized_fields[i])) continue;
            ++checked;
            if ((d.normalized_fields[i] > 0.0) != (d.raw_fields[i] > 0.0)) ++sign_violations;
        }
    }
    o.expect(sign_violations == 0, "normalisation preserves sign");

    double worst = 0.0;
    Rng rng = make_rng(33);
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::MatrixXd x = gaussian_matrix(rng, 6, 2);
        Eigen::VectorXi y(6);
        y << 1, -1, 1, -1, 1, -1;
        const double c = trial % 3 == 0 ? 0.1 : (trial % 3 == 1 ? 1.0 : 10.0);
        const double oracle = testing::brute_force_svm_objective(x, y, c);
        const auto h = train_linear_svm(x, y, c);
        worst = std::max(worst, std::abs(h.primal_objective - oracle) / std::max(1.0, std::abs(oracle)));
    }
    o.detail << "tpr=" << fd.tpr << " sign checks=" << checked << " violations=" << sign_violations
             << " max objective error=" << worst;
    o.expect(worst <= 1e-5, "SVM objective matches brute-force dual to 1e-5");
}

void report_math(Outcome& o) {
    const std::vector<double> alphas{1.0, 3.0};
    const double agg = capacity_contribution_aggregate(alphas);
    const double ratio = ratio_metric(0.2, 0.3);
    const std::vector<double> capacity{0.0903, 0.0915, 0.0998, 0.1362, 0.2361};
    const std::vector<double> f1{0.04, 0.11, 0.34, 0.55, 0.87};
    const double r = correlate(capacity, f1);
    o.detail.precision(6);
    o.detail << "aggregate=" << agg << " ratio=" << ratio << " pearson=" << r;
    o.expect(std::abs(agg - 1.5) <= 1e-12, "aggregate of {1,3} is 1.5");
    o.expect(std::abs(ratio - 0.5) <= 1e-12, "ratio(0.2, 0.3) is 0.5");
    o.expect(std::abs(r - 0.9334) <= 1e-4, "pearson 0.9334 +- 1e-4");
}

void bisection_contract(Outcome& o) {
    // add a set that cannot reach the band, to exercise the flag
    const auto ms = testing::point_manifolds(40, 8, 41);
    SimConfig sc;
    sc.seed = 42;
    sim(ms, sc);

    std::size_t converged = 0, flagged = 0;
    for (std::size_t i = 0; i < g_sim_runs.size(); ++i) {
        const auto& r = g_sim_runs[i];
        const auto& cfg = g_sim_configs[i];
        if (r.converged) {
            double f = -1.0;
            for (const auto& s : r.trace)
                if (s.n_dims == r.n_critical) f = s.separable_fraction;
            const bool ok = r.iterations <= 100 && std::abs(f - 0.5) <= cfg.epsilon && cfg.epsilon <= 0.05;
            o.expect(ok, "converged run outside the band or over 100 iterations");
            ++converged;
        } else {
            o.expect(!r.warnings.empty(), "unconverged run without a warning");
            ++flagged;
        }
    }
    o.detail << g_sim_runs.size() << " runs: " << converged << " converged, " << flagged << " flagged unconverged";
    o.expect(flagged >= 1, "the impossible set is flagged");
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double time_limit_s; // 0: none
        std::function<void(Outcome&)> run;
    };
    const std::vector<Criterion> criteria{
        {1, "point capacity", 60.0, point_capacity},
        {2, "MFT-simulation agreement", 600.0, mft_sim_agreement},
        {3, "baselines", 0.0, baselines},
        {4, "geometry monotonicity", 0.0, monotonicity},
        {5, "invariance", 0.0, invariance},
        {6, "SVM fields", 0.0, svm_fields},
        {7, "aggregation and report math", 0.0, report_math},
        {8, "bisection contract", 0.0, bisection_contract},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.expect(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit_s > 0.0) o.expect(secs <= c.time_limit_s, "runtime limit");
        std::printf("%s %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.str().c_str(), secs);
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
