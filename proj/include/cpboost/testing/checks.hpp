#pragma once

// Property and oracle checks shared by the acceptance binary and `cpboost selftest`.
// `quick` shrinks instance counts so the whole set runs in a few seconds.

#include <chrono>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "cpboost/testing/oracles.hpp"

namespace cpboost::check {

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    std::function<Outcome(bool)> run;
};

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(4) << v;
    return s.str();
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g;
    for (std::size_t k = 0; k < n; ++k) g.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / static_cast<double>(n - 1)));
    return g;
}

inline void strip_times(std::vector<ExperimentRecord>& rs) {
    for (auto& r : rs) r.wall_time = 0.0;
}

} // namespace detail

inline Outcome dual_has_no_lambda(bool quick) {
    std::mt19937_64 rng(1);
    const std::size_t vectors = quick ? 10 : 50;
    std::size_t done = 0, tries = 0;
    while (done < vectors && tries < 100 * vectors) {
        ++tries;
        auto inst = oracle::random_instance(12, 3, rng());
        std::uniform_real_distribution<double> U(0.0, 1.0);
        std::vector<double> w(3);
        for (auto& v : w) v = U(rng);
        auto u = dual_weights(margins(inst.columns, w, inst.labels));
        if (!check_dual_constraints(inst.columns, u, inst.labels, 2.0, 0.0).empty()) continue;
        double ref = dual_objective(u, 0.0);
        for (double lambda : {0.1, 1.0, 100.0})
            if (dual_objective(u, lambda) != ref) return {false, "dual value moved with lambda"};
        ++done;
    }
    if (done < vectors) return {false, "only " + std::to_string(done) + " feasible dual vectors found"};
    return {true, std::to_string(done) + " feasible u, exact equality"};
}

inline Outcome gradient_matches_differences(bool quick) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> U(0.0, 1.5);
    std::uniform_int_distribution<std::size_t> M(2, 50), N(1, 5);
    const std::size_t count = quick ? 20 : 100;
    double worst = 0.0;
    for (std::size_t t = 0; t < count; ++t) {
        auto inst = oracle::random_instance(M(rng), N(rng), rng());
        std::vector<double> w(inst.columns.size());
        for (auto& v : w) v = U(rng);
        auto g = l1_risk_gradient(inst.columns, w, inst.labels, 0.01);
        auto fd = oracle::central_difference_gradient(inst.responses, inst.labels, w, 0.01, 1e-6);
        for (std::size_t j = 0; j < w.size(); ++j) worst = std::max(worst, std::abs(g[j] - fd[j]) / std::max(1.0, std::abs(fd[j])));
    }
    return {worst <= 1e-5, std::to_string(count) + " instances, worst relative error " + detail::fmt(worst)};
}

inline Outcome convex_matches_grid(bool quick) {
    const std::size_t count = quick ? 2 : 12;
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t interior = 0;
    for (std::size_t s = 0; s < count; ++s) {
        auto inst = oracle::random_instance(6 + 2 * (s % 6), 3, 300 + s);
        const double nu = s % 2 ? 0.01 : 0.1;
        std::vector<double> w0(3, 0.0);
        auto r = minimize_l1_risk(inst.columns, inst.labels, nu, w0);
        double grid = oracle::grid_search_l1(inst.responses, inst.labels, nu);
        worst = std::max(worst, r.objective - grid);
        interior += cardinality(r.w_tilde) > 0;
    }
    return {worst <= 1e-4, std::to_string(count) + " three-column instances (" + std::to_string(interior) +
                               " with nonzero optimum), max(solver - grid) = " + detail::fmt(worst)};
}

inline Outcome discrete_matches_brute_force(bool quick) {
    struct Class {
        std::size_t m, n;
        unsigned bits;
        double lambda;
    };
    std::vector<Class> classes{{10, 2, 5, 0.0}, {12, 2, 6, 0.5}, {16, 3, 4, 0.3}, {20, 2, 7, 1.0}, {15, 4, 3, 0.2}, {25, 2, 6, 0.05}};
    if (quick) classes.resize(2);
    const std::size_t per_class = quick ? 2 : 4;
    const std::size_t seeds = quick ? 5 : 20;
    std::ostringstream note;
    bool ok = true;
    double worst_rate = 1.0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const auto& k = classes[c];
        std::size_t hits = 0, trials = 0;
        for (std::size_t i = 0; i < per_class; ++i) {
            auto inst = oracle::random_instance(k.m, k.n, 1000 * c + i);
            FixedPointCodec codec(k.bits, 2.0, k.n);
            BoostingRmp rmp(inst.columns, inst.labels, 0.01, k.lambda, codec);
            auto bf = brute_force_pbo(rmp);
            auto grid = oracle::decoded_grid_search(inst.responses, inst.labels, 0.01, k.lambda, codec);
            if (std::abs(bf.best_value - grid.value) > 1e-9 * std::max(1.0, std::abs(grid.value))) {
                ok = false;
                note << "brute force " << bf.best_value << " vs grid " << grid.value << "; ";
            }
            for (std::size_t s = 0; s < seeds; ++s) {
                TabuParams p;
                p.seed = s;
                auto tb = tabu_search(rmp, p);
                hits += tb.best_value <= bf.best_value + 1e-9 * std::max(1.0, std::abs(bf.best_value));
                ++trials;
            }
        }
        double rate = static_cast<double>(hits) / static_cast<double>(trials);
        worst_rate = std::min(worst_rate, rate);
        if (rate < 0.95) ok = false;
    }
    note << classes.size() << " classes, worst tabu hit rate " << detail::fmt(100.0 * worst_rate) << "%";
    return {ok, note.str()};
}

inline Outcome incremental_evaluation(bool quick) {
    auto inst = oracle::random_instance(50, 4, 77);
    FixedPointCodec codec(6, 3.0, 4);
    BoostingRmp rmp(inst.columns, inst.labels, 0.01, 0.4, codec);
    auto st = rmp.make_state();
    Bits bits(rmp.size(), 0);
    st.reset(bits);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> K(0, rmp.size() - 1);
    const std::size_t flips = quick ? 1000 : 10000;
    double worst = 0.0;
    for (std::size_t t = 0; t < flips; ++t) {
        std::size_t k = K(rng);
        double predicted = st.value() + st.delta(k);
        st.flip(k);
        auto w = codec.decode(st.bits());
        double scratch = oracle::scalar_cp_objective(inst.responses, inst.labels, w, 0.01, 0.4);
        worst = std::max({worst, std::abs(st.value() - scratch), std::abs(predicted - scratch)});
    }
    return {worst < 1e-9, std::to_string(flips) + " flips, max divergence " + detail::fmt(worst)};
}

inline Outcome total_q_boost_matches_support_oracle(bool quick) {
    const std::size_t want = quick ? 3 : 20;
    auto lambdas = detail::log_grid(0.01, 5.0, 60);
    std::size_t done = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 0; done < want && seed < 200; ++seed) {
        auto inst = oracle::small_boost_instance(12 + seed % 9, 5, seed);
        const double nu = 0.01;
        auto table = oracle::support_objectives(inst.dict.columns(), inst.data.labels(), nu);
        auto pick = oracle::separated_lambda(table, lambdas, 1, 4);
        if (!pick) continue;
        BoostConfig c;
        c.nu = nu;
        c.lambda = pick->lambda;
        c.T = 10;
        c.solver = DiscreteSolver::brute_force;
        auto res = total_q_boost(inst.data, inst.dict, c);
        double got = res.active.objective(inst.data.labels(), nu, pick->lambda).total;
        worst = std::max(worst, std::abs(got - oracle::best_support(table, pick->lambda).total));
        ++done;
    }
    if (done < want) return {false, "only " + std::to_string(done) + " instances"};
    return {worst <= 1e-6, std::to_string(done) + " instances, max |refined - oracle| = " + detail::fmt(worst)};
}

inline Outcome duality_gap_dichotomy(bool quick) {
    const std::size_t want = quick ? 2 : 5;
    std::size_t weak = 0, strong = 0;
    double weak_err = 0.0, strong_excess = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 200 && (weak < want || strong < want); ++seed) {
        auto inst = oracle::small_boost_instance(20, 4, 500 + seed);
        BoostConfig c;
        c.nu = 0.05;
        c.epsilon = 1e-6;
        c.solver = DiscreteSolver::exhaustive_support;
        auto table = oracle::support_objectives(inst.dict.columns(), inst.data.labels(), c.nu, 1e-10);
        auto l1 = oracle::best_support(table, 0.0);
        for (double lambda : {1e-3, 1.5}) {
            bool is_weak = lambda < 0.01;
            if ((is_weak ? weak : strong) >= want) continue;
            bool same = oracle::best_support(table, lambda).mask == l1.mask;
            if (same != is_weak) continue;
            c.lambda = lambda;
            auto res = total_q_boost(inst.data, inst.dict, c);
            auto gap = compute_duality_gap(res.ensemble, inst.data, inst.dict, c);
            double lc = lambda * static_cast<double>(res.ensemble.cardinality());
            if (is_weak) {
                weak_err = std::max(weak_err, std::abs(gap.gap - lc));
                if (!gap.dual_feasible || std::abs(gap.gap - lc) > 1e-6) ok = false;
                ++weak;
            } else {
                strong_excess = std::min(strong_excess, gap.gap - lc);
                if (!gap.valid || gap.gap <= lc + 1e-6) ok = false;
                ++strong;
            }
        }
    }
    if (weak < want || strong < want) return {false, "could not construct enough instances"};
    return {ok, std::to_string(weak) + " weak (max |gap - lambda card| " + detail::fmt(weak_err) + "), " + std::to_string(strong) +
                    " strong (min excess " + detail::fmt(strong_excess) + ")"};
}

inline SuiteConfig desk_suite(std::size_t T, std::size_t T_prime) {
    SuiteConfig s;
    s.nu_grid = {1e-3, 1e-2, 1e-1};
    s.lambda_grid = {1.0, 5.0, 15.0, 40.0};
    s.T = T;
    s.T_prime = T_prime;
    s.cp_solver = DiscreteSolver::tabu;
    s.subset_solver = DiscreteSolver::exhaustive_support;
    s.base.tabu.deterministic = true;
    s.base.tabu.restarts = 8;
    s.base.tabu.iters_per_restart = 400;
    return s;
}

inline Outcome early_stopping_is_suboptimal(bool quick) {
    auto data = make_synthetic_two_gaussians(quick ? 60 : 200, 5, 3.0, 0);
    auto split = split_80_20(data, 0);
    auto cfg = desk_suite(quick ? 8 : 30, quick ? 6 : 12);
    cfg.run_A = cfg.run_C = cfg.run_D = false;
    cfg.lambda_grid = detail::log_grid(1e-3, 8.0, quick ? 6 : 16);
    auto res = run_suite(data, split, cfg);
    std::vector<ExperimentRecord> e, b;
    for (const auto& r : res.records) {
        if (r.variant == Variant::E_SUBSET) e.push_back(r);
        // B snapshots built only from the columns E chooses among
        if (r.variant == Variant::B_UCG && r.iteration <= cfg.T_prime) b.push_back(r);
    }
    if (e.empty() || b.empty()) return {false, "no records"};
    auto s = suboptimality_comparison(e, b);
    if (!s.loss_rate_risk) return {false, "no coinciding cardinalities"};
    bool ok = *s.loss_rate_risk == 0.0 && *s.loss_rate_train_error == 0.0;
    return {ok, std::to_string(s.coinciding) + " coinciding pairs, loss rates risk " + detail::fmt(*s.loss_rate_risk) + " train error " +
                    detail::fmt(*s.loss_rate_train_error)};
}

inline Outcome edge_stop_audit(bool quick) {
    std::size_t runs = 0;
    double worst = -std::numeric_limits<double>::infinity();
    const std::uint64_t seeds = quick ? 3 : 10;
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        auto d = make_synthetic_two_gaussians(40 + 10 * seed, 3, 1.0 + 0.2 * static_cast<double>(seed), seed);
        auto dict = enumerate_candidates(d);
        for (double nu : {0.01, 0.1, 0.3}) {
            BoostConfig c;
            c.nu = nu;
            c.T = 1000;
            auto res = l1_cg(d, dict, c);
            if (res.termination != Termination::converged) continue;
            auto u = res.log.empty() ? std::vector<double>(d.size(), 1.0 / static_cast<double>(d.size()))
                                     : dual_weights(res.active.training_margins(d.labels()));
            auto v = check_dual_constraints(dict.columns(), u, d.labels(), -1e300, 0.0);
            double top = v.empty() ? 0.0 : v.front().edge;
            worst = std::max(worst, top - nu - c.epsilon);
            ++runs;
        }
    }
    if (runs == 0) return {false, "no eps-terminated run"};
    return {worst <= 0.0, std::to_string(runs) + " terminated runs, max(edge - nu - eps) = " + detail::fmt(worst)};
}

inline Outcome metric_arithmetic(bool) {
    struct Row {
        std::size_t cp, base;
        double pct;
    };
    std::vector<Row> rows{{12, 37, 67.57}, {31, 38, 18.42}, {28, 73, 61.64}, {51, 74, 31.08}, {34, 43, 20.93}};
    double worst = 0.0;
    for (auto r : rows) {
        std::vector<ParetoPoint> base{{r.base, 0.25, 0}};
        auto g = sparsity_gain({r.cp, 0.25, 1}, base, 0.0);
        if (!g) return {false, "gain undefined"};
        worst = std::max(worst, std::abs(100.0 * *g - r.pct));
    }
    std::vector<ParetoPoint> flare{{4, 0.28, 0}};
    auto gen = generalization_gain({3, 0.21, 1}, flare);
    bool ok = worst < 5e-3 && gen && std::abs(*gen - 0.25) < 1e-12;
    return {ok, std::to_string(rows.size()) + " published triples, max deviation " + detail::fmt(worst) + " points"};
}

inline Outcome end_to_end(bool quick) {
    auto data = make_synthetic_two_gaussians(quick ? 60 : 200, 5, 3.0, 0);
    auto split = split_80_20(data, 0);
    auto cfg = desk_suite(quick ? 8 : 30, quick ? 6 : 12);
    auto a = run_suite(data, split, cfg).records;
    auto b = run_suite(data, split, cfg).records;
    detail::strip_times(a);
    detail::strip_times(b);
    if (a != b) return {false, "two runs differ"};
    for (const auto& r : a)
        if (!r.ok()) return {false, "record " + std::to_string(r.id) + ": " + r.status};
    auto base = pareto_frontier(a, Group::baseline);
    auto cp = pareto_frontier(a, Group::cp);
    std::size_t compared = 0;
    for (const auto& p : cp) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : base)
            if (q.cardinality <= p.cardinality) best = std::min(best, q.val_error);
        if (std::isinf(best)) continue;
        ++compared;
        if (p.val_error > best)
            return {false, "CP point (" + std::to_string(p.cardinality) + ", " + detail::fmt(p.val_error) +
                               ") worse than baseline " + detail::fmt(best)};
    }
    return {true, std::to_string(a.size()) + " records, deterministic, " + std::to_string(cp.size()) + " CP frontier points (" +
                      std::to_string(compared) + " with a baseline at or below their cardinality)"};
}

inline std::vector<Criterion> all_criteria() {
    return {
        {1, "dual objective has no lambda dependence", dual_has_no_lambda},
        {2, "analytic gradient vs central differences", gradient_matches_differences},
        {3, "convex solver vs lattice grid search", convex_matches_grid},
        {4, "brute force vs decoded grid; tabu hit rate", discrete_matches_brute_force},
        {5, "incremental vs from-scratch objective", incremental_evaluation},
        {6, "total_q_boost vs exhaustive support oracle", total_q_boost_matches_support_oracle},
        {7, "duality gap dichotomy", duality_gap_dichotomy},
        {8, "subset selection never loses to early stopping", early_stopping_is_suboptimal},
        {9, "eps-termination audit", edge_stop_audit},
        {10, "gain arithmetic on published triples", metric_arithmetic},
        {11, "end-to-end suite smoke", end_to_end},
    };
}

/// Runs every criterion, one PASS/FAIL line each; returns the number of failures.
inline int run_all(std::ostream& out, bool quick) {
    int failures = 0;
    for (const auto& c : all_criteria()) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run(quick);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !o.pass;
        out << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << " (" << std::fixed << std::setprecision(2) << dt
            << " s) " << std::defaultfloat << o.detail << std::endl;
    }
    return failures;
}

} // namespace cpboost::check
