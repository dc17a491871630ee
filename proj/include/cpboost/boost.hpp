#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cpboost/convex_opt.hpp"
#include "cpboost/core.hpp"
#include "cpboost/dataset.hpp"
#include "cpboost/discrete_opt.hpp"
#include "cpboost/hypotheses.hpp"
#include "cpboost/loss.hpp"

namespace cpboost {

enum class DiscreteSolver {
    tabu,
    brute_force,
    /// Enumerates every support of the restricted problem and refines each with the convex
    /// solver; exact for the continuous cardinality-penalized problem, limited to 20 columns.
    exhaustive_support,
};

enum class EdgeStopMode { automatic, on, off };

inline std::string to_string(DiscreteSolver s) {
    switch (s) {
    case DiscreteSolver::tabu: return "tabu";
    case DiscreteSolver::brute_force: return "brute";
    case DiscreteSolver::exhaustive_support: return "exhaustive";
    }
    return "?";
}

inline DiscreteSolver parse_solver(const std::string& s) {
    if (s == "tabu") return DiscreteSolver::tabu;
    if (s == "brute" || s == "brute_force") return DiscreteSolver::brute_force;
    if (s == "exhaustive" || s == "exhaustive_support") return DiscreteSolver::exhaustive_support;
    throw std::invalid_argument("unknown discrete solver '" + s + "'");
}

inline constexpr std::size_t kExhaustiveMaxColumns = 20;

struct BoostConfig {
    double nu = 1e-6;
    double lambda = 0.0;
    double epsilon = kDefaultTolerance;
    std::size_t T = 100;
    std::size_t convex_max_iters = 500;

    unsigned bit_depth = 6;
    unsigned bit_depth_max = 10;
    double range_floor = 1.0;
    bool escalate_bit_depth = true;

    DiscreteSolver solver = DiscreteSolver::tabu;
    TabuParams tabu;
    EdgeStopMode edge_stop = EdgeStopMode::automatic;

    std::optional<std::size_t> hot_start_T_prime;
    /// l1 coefficient of the unregularized prefix run used for hot starts.
    double ucg_nu = 1e-6;
    double zero_tol = kZeroTol;
    std::uint64_t seed = 0;

    void validate() const {
        require(nu > 0.0, "nu must be positive");
        require(lambda >= 0.0, "lambda must be nonnegative");
        require(epsilon > 0.0, "epsilon must be positive");
        require(T >= 1, "T must be at least 1");
        require(bit_depth >= 1 && bit_depth <= bit_depth_max && bit_depth_max <= 30, "bit depths out of range");
        require(range_floor > 0.0, "range floor must be positive");
        require(ucg_nu > 0.0, "ucg_nu must be positive");
    }

    bool edge_stop_enabled() const {
        switch (edge_stop) {
        case EdgeStopMode::on: return true;
        case EdgeStopMode::off: return false;
        case EdgeStopMode::automatic: return lambda == 0.0;
        }
        return true;
    }

    ConvexSolveOptions convex() const {
        ConvexSolveOptions o;
        o.tolerance = epsilon;
        o.max_iters = convex_max_iters;
        return o;
    }
};

/// Weighted vote of stumps; sign(0) is +1, so an empty ensemble predicts +1 everywhere.
struct Ensemble {
    std::vector<HypothesisColumn> columns;
    std::vector<double> weights;

    std::size_t size() const { return columns.size(); }
    std::size_t cardinality() const {
        return static_cast<std::size_t>(std::count_if(weights.begin(), weights.end(), [](double w) { return w > 0.0; }));
    }

    Ensemble stripped() const {
        Ensemble e;
        for (std::size_t j = 0; j < columns.size(); ++j)
            if (weights[j] > 0.0) {
                e.columns.push_back(columns[j]);
                e.weights.push_back(weights[j]);
            }
        return e;
    }

    double decision(std::span<const double> x) const {
        double f = 0.0;
        for (std::size_t j = 0; j < columns.size(); ++j)
            if (weights[j] != 0.0) f += weights[j] * columns[j].stump(x);
        return f;
    }

    int predict(std::span<const double> x) const { return decision(x) >= 0.0 ? 1 : -1; }

    double error_rate(const Dataset& data) const {
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < data.size(); ++i)
            if (predict(data.row(i)) != data.y(i)) ++wrong;
        return static_cast<double>(wrong) / static_cast<double>(data.size());
    }

    /// Margins on the training set the columns were built on.
    std::vector<double> training_margins(std::span<const int> labels) const { return margins(columns, weights, labels); }

    PrimalObjective objective(std::span<const int> labels, double nu, double lambda, double zero_tol = kZeroTol) const {
        return primal_objective(columns, weights, labels, nu, lambda, zero_tol);
    }

    double empirical_risk(std::span<const int> labels) const { return cpboost::empirical_risk(training_margins(labels)); }
};

struct IterationRecord {
    std::size_t t = 0;
    std::size_t column_index = 0;
    Stump stump;
    double edge = 0.0;
    double discrete_objective = 0.0;
    double refined_objective = 0.0;
    std::size_t cardinality = 0;
    std::uint64_t u_digest = 0;
    /// primal - dual at the iterate's own dual point; NaN when that point violates a dual constraint.
    double duality_gap = std::numeric_limits<double>::quiet_NaN();
    unsigned bit_depth = 0;
    double range = 0.0;
    bool kept_previous = false;
    unsigned escalations = 0;
    bool refine_converged = true;

    bool operator==(const IterationRecord&) const = default;
};

using IterationLog = std::vector<IterationRecord>;

inline void write_iteration_log(std::ostream& out, const IterationLog& log) {
    auto old = out.precision(std::numeric_limits<double>::max_digits10);
    out << "t,column,feature,threshold,polarity,edge,discrete_objective,refined_objective,cardinality,u_digest,"
           "duality_gap,bit_depth,range,kept_previous,escalations,refine_converged\n";
    for (const auto& r : log) {
        out << r.t << ',' << r.column_index << ',' << r.stump.feature << ',' << r.stump.threshold << ',' << r.stump.polarity
            << ',' << r.edge << ',' << r.discrete_objective << ',' << r.refined_objective << ',' << r.cardinality << ','
            << to_hex(r.u_digest) << ',';
        if (std::isnan(r.duality_gap)) out << "infeasible";
        else out << r.duality_gap;
        out << ',' << r.bit_depth << ',' << r.range << ',' << r.kept_previous << ',' << r.escalations << ','
            << r.refine_converged << '\n';
    }
    out.precision(old);
}

enum class Termination { exhausted, converged, max_iterations };

inline std::string to_string(Termination t) {
    switch (t) {
    case Termination::exhausted: return "exhausted";
    case Termination::converged: return "converged";
    case Termination::max_iterations: return "max_iterations";
    }
    return "?";
}

struct BoostResult {
    /// Strictly positive weights only.
    Ensemble ensemble;
    /// Every generated column with its final weight (zeros included), in generation order.
    Ensemble active;
    IterationLog log;
    Termination termination = Termination::max_iterations;
};

/// Snapshot after iteration t of an early-stopped run; holds all t generated columns.
struct Snapshot {
    std::size_t t = 0;
    Ensemble ensemble;
};

struct UcgResult {
    std::vector<Snapshot> snapshots;
    IterationLog log;
    Dictionary dictionary;
};

namespace detail {

/// Working state of a column generation run.
struct CgState {
    std::vector<HypothesisColumn> active;
    std::vector<std::size_t> dict_index;
    std::vector<double> w;
    std::vector<double> u;
    std::size_t t = 0;

    Ensemble ensemble() const { return {active, w}; }
};

inline std::vector<double> uniform_weights(std::size_t m) { return std::vector<double>(m, 1.0 / static_cast<double>(m)); }

inline void snap_small(std::vector<double>& w, double zero_tol) {
    for (auto& v : w)
        if (v <= zero_tol) v = 0.0;
}

/// Continuous refinement of the weights on `support`; everything else stays zero.
inline std::vector<double> refine_support(const std::vector<HypothesisColumn>& cols, std::span<const int> labels,
                                          std::span<const double> start, const BoostConfig& cfg, bool* converged = nullptr) {
    std::vector<double> w(cols.size(), 0.0);
    std::vector<HypothesisColumn> sub;
    std::vector<double> w0;
    std::vector<std::size_t> where;
    for (std::size_t j = 0; j < cols.size(); ++j)
        if (start[j] > 0.0) {
            sub.push_back(cols[j]);
            w0.push_back(start[j]);
            where.push_back(j);
        }
    if (converged) *converged = true;
    if (sub.empty()) return w;
    auto res = minimize_l1_risk(sub, labels, cfg.nu, w0, cfg.convex());
    if (converged) *converged = res.converged;
    for (std::size_t k = 0; k < where.size(); ++k) w[where[k]] = res.w_tilde[k];
    snap_small(w, cfg.zero_tol);
    return w;
}

inline std::optional<double> iterate_gap(const Dictionary& dict, const std::vector<HypothesisColumn>& active,
                                         std::span<const double> w, std::span<const double> u, std::span<const int> labels,
                                         double nu, double lambda, double eps, double zero_tol) {
    if (!check_dual_constraints(dict.columns(), u, labels, nu, eps).empty()) return std::nullopt;
    return primal_objective(active, w, labels, nu, lambda, zero_tol).total - dual_objective(u);
}

} // namespace detail

/// Best (support, weights) over every subset of `cols`, each subset refined by the convex solver.
/// Refined objectives are computed once and shared by all lambda values.
class SupportTable {
public:
    SupportTable(const std::vector<HypothesisColumn>& cols, std::span<const int> labels, const BoostConfig& cfg)
        : cols_(cols), labels_(labels.begin(), labels.end()), nu_(cfg.nu), zero_tol_(cfg.zero_tol) {
        require(cols.size() <= kExhaustiveMaxColumns, "exhaustive support search limited to " +
                                                          std::to_string(kExhaustiveMaxColumns) + " columns");
        const std::size_t n = cols.size();
        const std::size_t masks = std::size_t{1} << n;
        weights_.resize(masks);
        l1obj_.resize(masks);
        weights_[0].assign(n, 0.0);
        l1obj_[0] = primal_objective(cols_, weights_[0], labels_, nu_, 0.0, zero_tol_).total;
        for (std::size_t mask = 1; mask < masks; ++mask) {
            // warm start from the solution without the highest column
            std::size_t top = static_cast<std::size_t>(std::bit_width(mask)) - 1;
            std::vector<double> start = weights_[mask & ~(std::size_t{1} << top)];
            for (std::size_t j = 0; j < n; ++j)
                if ((mask >> j) & 1U) start[j] = std::max(start[j], 1e-3);
                else start[j] = 0.0;
            auto w = detail::refine_support(cols_, labels_, start, cfg);
            l1obj_[mask] = primal_objective(cols_, w, labels_, nu_, 0.0, zero_tol_).total;
            weights_[mask] = std::move(w);
        }
    }

    struct Best {
        std::size_t mask;
        std::vector<double> w;
        double total;
    };

    Best best(double lambda) const {
        Best b{0, weights_[0], std::numeric_limits<double>::infinity()};
        for (std::size_t mask = 0; mask < weights_.size(); ++mask) {
            double total = l1obj_[mask] + lambda * static_cast<double>(cardinality(weights_[mask], zero_tol_));
            if (total < b.total) b = {mask, weights_[mask], total};
        }
        return b;
    }

    double l1_objective(std::size_t mask) const { return l1obj_[mask]; }
    const std::vector<double>& weights(std::size_t mask) const { return weights_[mask]; }
    std::size_t masks() const { return weights_.size(); }

private:
    std::vector<HypothesisColumn> cols_;
    Labels labels_;
    double nu_;
    double zero_tol_;
    std::vector<std::vector<double>> weights_;
    std::vector<double> l1obj_;
};

struct RmpSolution {
    std::vector<double> w;
    double value = 0.0;
    unsigned bit_depth = 0;
    double range = 0.0;
    bool kept_previous = false;
    unsigned escalations = 0;
};

/// Solves the cardinality-penalized restricted master problem over `cols` with the configured
/// discrete solver. `bit_depth` carries grid escalations across iterations. `previous` (the last
/// refined weights, zero-extended) is kept when it beats the discrete solution.
inline RmpSolution solve_cp_rmp(const std::vector<HypothesisColumn>& cols, std::span<const int> labels,
                                std::span<const double> previous, const BoostConfig& cfg, unsigned& bit_depth,
                                std::uint64_t seed) {
    const std::size_t n = cols.size();
    RmpSolution sol;
    const double prev_total = primal_objective(cols, previous, labels, cfg.nu, cfg.lambda, cfg.zero_tol).total;

    if (cfg.solver == DiscreteSolver::exhaustive_support && n <= kExhaustiveMaxColumns) {
        SupportTable table(cols, labels, cfg);
        auto b = table.best(cfg.lambda);
        sol.w = b.w;
        sol.value = b.total;
    } else {
        std::vector<double> seed_w(previous.begin(), previous.end());
        double cont_value = std::numeric_limits<double>::infinity();
        if (cfg.escalate_bit_depth) {
            std::vector<double> w0(previous.begin(), previous.end());
            auto cont = minimize_l1_risk(cols, labels, cfg.nu, w0, cfg.convex());
            cont_value = cont.objective;
            for (std::size_t j = 0; j < n; ++j) seed_w[j] = std::max(seed_w[j], cont.w_tilde[j]);
        }
        sol.range = adapt_range(seed_w, cfg.range_floor);

        DiscreteSolver solver = cfg.solver == DiscreteSolver::exhaustive_support ? DiscreteSolver::tabu : cfg.solver;
        unsigned cap = cfg.bit_depth_max;
        if (solver == DiscreteSolver::brute_force) {
            cap = std::min<unsigned>(cap, static_cast<unsigned>(std::max<std::size_t>(1, kBruteForceMaxBits / n)));
            if (n > kBruteForceMaxBits) {
                log::warn("brute force infeasible for " + std::to_string(n) + " columns; using tabu search");
                solver = DiscreteSolver::tabu;
                cap = cfg.bit_depth_max;
            }
        }
        auto run = [&](const BoostingRmp& problem) {
            if (solver == DiscreteSolver::brute_force) return brute_force_pbo(problem);
            TabuParams tp = cfg.tabu;
            tp.seed = seed;
            return tabu_search(problem, tp);
        };

        unsigned depth = std::min(bit_depth, cap);
        for (;;) {
            FixedPointCodec codec(depth, sol.range, n);
            if (!cfg.escalate_bit_depth || depth >= cap) break;
            BoostingRmp unpenalized(cols, labels, cfg.nu, 0.0, codec);
            const double target = cont_value + 10.0 * cfg.epsilon;
            std::vector<double> cont_w(seed_w);
            if (unpenalized.evaluate(codec.encode_nearest(cont_w)) <= target) break;
            if (run(unpenalized).best_value <= target) break;
            ++depth;
            ++sol.escalations;
            log::debug("bit depth escalated to " + std::to_string(depth));
        }
        if (depth > bit_depth) bit_depth = depth;
        sol.bit_depth = depth;

        FixedPointCodec codec(depth, sol.range, n);
        BoostingRmp problem(cols, labels, cfg.nu, cfg.lambda, codec);
        auto res = run(problem);
        sol.w = codec.decode(res.best_bits);
        sol.value = primal_objective(cols, sol.w, labels, cfg.nu, cfg.lambda, cfg.zero_tol).total;
    }

    if (prev_total < sol.value) {
        log::debug("discrete solution worse than previous iterate; keeping previous");
        sol.w.assign(previous.begin(), previous.end());
        sol.value = prev_total;
        sol.kept_previous = true;
    }
    return sol;
}

namespace detail {

inline void record_iteration(IterationLog& log, const CgState& st, std::size_t dict_index, const HypothesisColumn& col,
                             double edge_value, double discrete_obj, const Dictionary& dict, std::span<const int> labels,
                             const BoostConfig& cfg, double lambda, const RmpSolution* sol, bool refine_converged) {
    IterationRecord r;
    r.t = st.t;
    r.column_index = dict_index;
    r.stump = col.stump;
    r.edge = edge_value;
    r.discrete_objective = discrete_obj;
    r.refined_objective = primal_objective(st.active, st.w, labels, cfg.nu, lambda, cfg.zero_tol).total;
    r.cardinality = cardinality(st.w, cfg.zero_tol);
    r.u_digest = digest(st.u);
    if (auto gap = iterate_gap(dict, st.active, st.w, st.u, labels, cfg.nu, lambda, cfg.epsilon, cfg.zero_tol)) r.duality_gap = *gap;
    if (sol) {
        r.bit_depth = sol->bit_depth;
        r.range = sol->range;
        r.kept_previous = sol->kept_previous;
        r.escalations = sol->escalations;
    }
    r.refine_converged = refine_converged;
    log.push_back(r);
}

inline void update_dual(CgState& st, std::span<const int> labels) { st.u = dual_weights(margins(st.active, st.w, labels)); }

inline void add_column(CgState& st, Dictionary& dict, std::size_t index) {
    st.active.push_back(dict[index]);
    st.dict_index.push_back(index);
    st.w.push_back(0.0);
    dict.blacklist(dict[index]);
}

/// Cardinality-penalized column generation from an arbitrary starting state. When
/// `solve_initial` is set the restricted problem over the starting columns is solved first.
inline BoostResult run_cpcg(const Dataset& train, Dictionary& dict, const BoostConfig& cfg, CgState st, bool solve_initial) {
    const auto& y = train.labels();
    BoostResult out;
    unsigned depth = cfg.bit_depth;

    auto solve_and_refine = [&](std::size_t dict_index, const HypothesisColumn& col, double edge_value) {
        auto sol = solve_cp_rmp(st.active, y, st.w, cfg, depth, cfg.seed + st.t);
        bool conv = true;
        st.w = refine_support(st.active, y, sol.w, cfg, &conv);
        update_dual(st, y);
        ++st.t;
        record_iteration(out.log, st, dict_index, col, edge_value, sol.value, dict, y, cfg, cfg.lambda, &sol, conv);
    };

    if (solve_initial && !st.active.empty()) {
        // Counted as part of the prefix run, so t is not advanced here.
        auto sol = solve_cp_rmp(st.active, y, st.w, cfg, depth, cfg.seed + st.t);
        st.w = refine_support(st.active, y, sol.w, cfg);
        update_dual(st, y);
    }

    out.termination = Termination::max_iterations;
    while (st.t < cfg.T) {
        auto choice = oracle_best_index(dict, st.u, y);
        if (!choice) {
            out.termination = Termination::exhausted;
            break;
        }
        if (cfg.edge_stop_enabled() && choice->edge <= cfg.nu + cfg.epsilon) {
            out.termination = Termination::converged;
            break;
        }
        add_column(st, dict, choice->index);
        solve_and_refine(choice->index, st.active.back(), choice->edge);
    }
    out.active = st.ensemble();
    out.ensemble = out.active.stripped();
    if (out.ensemble.size() == 0) log::warn("cardinality-penalized run ended with an empty ensemble");
    return out;
}

inline BoostResult run_l1cg(const Dataset& train, Dictionary& dict, const BoostConfig& cfg, bool use_edge_stop,
                            std::vector<Snapshot>* snapshots) {
    const auto& y = train.labels();
    CgState st;
    st.u = uniform_weights(train.size());
    BoostResult out;
    out.termination = Termination::max_iterations;
    while (st.t < cfg.T) {
        auto choice = oracle_best_index(dict, st.u, y);
        if (!choice) {
            out.termination = Termination::exhausted;
            break;
        }
        if (use_edge_stop && choice->edge <= cfg.nu + cfg.epsilon) {
            out.termination = Termination::converged;
            break;
        }
        add_column(st, dict, choice->index);
        auto res = minimize_l1_risk(st.active, y, cfg.nu, st.w, cfg.convex());
        st.w = res.w_tilde;
        snap_small(st.w, cfg.zero_tol);
        update_dual(st, y);
        ++st.t;
        record_iteration(out.log, st, choice->index, st.active.back(), choice->edge, res.trace.front(), dict, y, cfg, 0.0,
                         nullptr, res.converged);
        if (snapshots) snapshots->push_back({st.t, st.ensemble()});
    }
    out.active = st.ensemble();
    out.ensemble = out.active.stripped();
    return out;
}

} // namespace detail

/// Totally corrective boosting with a cardinality penalty: column generation whose restricted
/// problems are solved over fixed-point weights and then refined on the selected support.
/// The dictionary is taken by value; its blacklist records every column the run generated.
inline BoostResult total_q_boost(const Dataset& train, Dictionary dict, const BoostConfig& cfg) {
    cfg.validate();
    require(train.size() > 0, "training set is empty");
    detail::CgState st;
    st.u = detail::uniform_weights(train.size());
    return detail::run_cpcg(train, dict, cfg, std::move(st), false);
}

/// l1-regularized column generation run to eps-convergence (or T / dictionary exhaustion).
inline BoostResult l1_cg(const Dataset& train, Dictionary dict, const BoostConfig& cfg) {
    cfg.validate();
    return detail::run_l1cg(train, dict, cfg, true, nullptr);
}

/// Unregularized (negligible nu) column generation to T iterations, keeping every intermediate ensemble.
inline UcgResult ucg_early_stopping(const Dataset& train, Dictionary dict, const BoostConfig& cfg) {
    cfg.validate();
    UcgResult out;
    auto res = detail::run_l1cg(train, dict, cfg, false, &out.snapshots);
    out.log = std::move(res.log);
    out.dictionary = std::move(dict);
    return out;
}

/// Early-stopped unregularized prefix of T' columns, then cardinality-penalized column
/// generation starting from those columns.
inline BoostResult hot_started_cpcg(const Dataset& train, Dictionary dict, const BoostConfig& cfg) {
    cfg.validate();
    require(cfg.hot_start_T_prime.has_value(), "hot start needs T'");
    std::size_t tp = *cfg.hot_start_T_prime;
    if (tp > dict.size()) {
        log::warn("T' = " + std::to_string(tp) + " exceeds dictionary size; truncated to " + std::to_string(dict.size()));
        tp = dict.size();
    }
    if (tp > cfg.T) tp = cfg.T;
    detail::CgState st;
    st.u = detail::uniform_weights(train.size());
    if (tp > 0) {
        BoostConfig pre = cfg;
        pre.nu = cfg.ucg_nu;
        pre.T = tp;
        auto phase1 = detail::run_l1cg(train, dict, pre, false, nullptr);
        st.active = phase1.active.columns;
        st.w = phase1.active.weights;
        for (const auto& c : st.active) st.dict_index.push_back(*dict.find(c.responses));
        st.t = st.active.size();
        detail::update_dual(st, train.labels());
    }
    return detail::run_cpcg(train, dict, cfg, std::move(st), tp > 0);
}

struct SubsetSelection {
    double lambda = 0.0;
    Ensemble ensemble;
    /// Every input column with its weight, zeros included.
    Ensemble full;
    double discrete_objective = 0.0;
};

/// One cardinality-penalized solve per lambda over a fixed column set, followed by refinement
/// of the selected support. No new columns are generated.
inline std::vector<SubsetSelection> subset_selection(const std::vector<HypothesisColumn>& columns, const Dataset& train,
                                                     const BoostConfig& cfg, std::span<const double> lambdas) {
    cfg.validate();
    require(!columns.empty(), "subset selection needs columns");
    const auto& y = train.labels();
    std::vector<SubsetSelection> out;

    std::optional<SupportTable> table;
    if (cfg.solver == DiscreteSolver::exhaustive_support && columns.size() <= kExhaustiveMaxColumns)
        table.emplace(columns, y, cfg);

    std::vector<double> zeros(columns.size(), 0.0);
    unsigned depth = cfg.bit_depth;
    for (double lambda : lambdas) {
        BoostConfig c = cfg;
        c.lambda = lambda;
        c.validate();
        SubsetSelection s;
        s.lambda = lambda;
        std::vector<double> w;
        if (table) {
            auto b = table->best(lambda);
            w = b.w;
            s.discrete_objective = b.total;
        } else {
            unsigned d = depth;
            auto sol = solve_cp_rmp(columns, y, zeros, c, d, cfg.seed);
            w = sol.w;
            s.discrete_objective = sol.value;
        }
        w = detail::refine_support(columns, y, w, c);
        s.full = {columns, w};
        s.ensemble = s.full.stripped();
        out.push_back(std::move(s));
    }
    return out;
}

struct DualityGap {
    double gap = 0.0;
    double lower_bound = 0.0;
    double primal = 0.0;
    /// Whether the ensemble's own dual point u_i = -l'(gamma_i) satisfies every dictionary constraint.
    bool dual_feasible = false;
    std::size_t violations = 0;
    /// Set when the lower bound comes from the dual point of the l1-regularized optimum over the
    /// dictionary because the ensemble's own dual point is infeasible.
    bool from_l1_optimum = false;
    bool valid = false;
};

/// Primal (cardinality-penalized) value of the ensemble minus a Lagrange dual lower bound.
inline DualityGap compute_duality_gap(const Ensemble& ensemble, const Dataset& train, const Dictionary& dict,
                                      const BoostConfig& cfg) {
    for (double v : ensemble.weights) require(v >= 0.0, "weights must be nonnegative");
    const auto& y = train.labels();
    DualityGap g;
    g.primal = ensemble.objective(y, cfg.nu, cfg.lambda, cfg.zero_tol).total;
    auto u = dual_weights(ensemble.training_margins(y));
    auto viol = check_dual_constraints(dict.columns(), u, y, cfg.nu, cfg.epsilon);
    g.violations = viol.size();
    g.dual_feasible = viol.empty();
    if (g.dual_feasible) {
        g.lower_bound = dual_objective(u);
        g.valid = true;
    } else {
        BoostConfig l1 = cfg;
        l1.lambda = 0.0;
        l1.T = std::max<std::size_t>(cfg.T, dict.size());
        Dictionary fresh(dict.columns());
        auto res = l1_cg(train, fresh, l1);
        auto u1 = dual_weights(res.active.training_margins(y));
        g.from_l1_optimum = true;
        g.lower_bound = dual_objective(u1);
        g.valid = check_dual_constraints(dict.columns(), u1, y, cfg.nu, cfg.epsilon).empty();
        if (!g.valid) log::warn("no eps-feasible dual point found; duality gap lower bound is not certified");
    }
    g.gap = g.primal - g.lower_bound;
    return g;
}

// Model files: header "m d nu lambda loss", then "feature threshold polarity weight" per column.

struct Model {
    std::size_t m = 0;
    std::size_t d = 0;
    double nu = 0.0;
    double lambda = 0.0;
    std::string loss = "exponential";
    Ensemble ensemble;

    bool operator==(const Model& o) const {
        if (m != o.m || d != o.d || nu != o.nu || lambda != o.lambda || loss != o.loss) return false;
        if (ensemble.weights != o.ensemble.weights || ensemble.size() != o.ensemble.size()) return false;
        for (std::size_t j = 0; j < ensemble.size(); ++j)
            if (!(ensemble.columns[j].stump == o.ensemble.columns[j].stump)) return false;
        return true;
    }
};

inline void write_model(std::ostream& out, const Model& model) {
    auto old = out.precision(std::numeric_limits<double>::max_digits10);
    out << model.m << ' ' << model.d << ' ' << model.nu << ' ' << model.lambda << ' ' << model.loss << '\n';
    for (std::size_t j = 0; j < model.ensemble.size(); ++j) {
        const auto& s = model.ensemble.columns[j].stump;
        out << s.feature << ' ' << s.threshold << ' ' << s.polarity << ' ' << model.ensemble.weights[j] << '\n';
    }
    out.precision(old);
}

inline Model read_model(std::istream& in) {
    Model model;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty model file", 1, 0);
    {
        std::istringstream hs(line);
        if (!(hs >> model.m >> model.d >> model.nu >> model.lambda >> model.loss)) throw ParseError("bad model header", 1, 0);
    }
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        Stump s;
        double w = 0.0;
        if (!(ls >> s.feature >> s.threshold >> s.polarity >> w)) throw ParseError("bad model line", row, 0);
        if (s.polarity != 1 && s.polarity != -1) throw ParseError("polarity must be -1 or +1", row, 2);
        if (s.feature >= model.d) throw ParseError("feature index out of range", row, 0);
        model.ensemble.columns.push_back({s, {}});
        model.ensemble.weights.push_back(w);
    }
    return model;
}

} // namespace cpboost
