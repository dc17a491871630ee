#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cpboost/boost.hpp"
#include "cpboost/core.hpp"
#include "cpboost/dataset.hpp"
#include "cpboost/hypotheses.hpp"

namespace cpboost {

enum class Variant { A_L1CG, B_UCG, C_CPCG, D_HOT, E_SUBSET };

inline std::string to_string(Variant v) {
    switch (v) {
    case Variant::A_L1CG: return "A_L1CG";
    case Variant::B_UCG: return "B_UCG";
    case Variant::C_CPCG: return "C_CPCG";
    case Variant::D_HOT: return "D_HOT";
    case Variant::E_SUBSET: return "E_SUBSET";
    }
    return "?";
}

inline Variant parse_variant(const std::string& s) {
    for (auto v : {Variant::A_L1CG, Variant::B_UCG, Variant::C_CPCG, Variant::D_HOT, Variant::E_SUBSET})
        if (to_string(v) == s) return v;
    throw std::invalid_argument("unknown variant '" + s + "'");
}

inline bool is_baseline(Variant v) { return v == Variant::A_L1CG || v == Variant::B_UCG; }

struct ExperimentRecord {
    std::size_t id = 0;
    Variant variant = Variant::A_L1CG;
    double nu = 0.0;
    double lambda = 0.0;
    std::size_t T = 0;
    std::size_t T_prime = 0;
    std::uint64_t seed = 0;
    /// Snapshot index for early-stopped runs, final iteration count otherwise.
    std::size_t iteration = 0;
    std::size_t cardinality = 0;
    double train_error = 0.0;
    double val_error = 0.0;
    double empirical_risk = 0.0;
    double total_objective = 0.0;
    double wall_time = 0.0;
    std::string status = "ok";

    bool ok() const { return status == "ok"; }
    bool operator==(const ExperimentRecord&) const = default;
};

struct SuiteConfig {
    BoostConfig base;
    std::vector<double> nu_grid{1e-3, 1e-2, 1e-1};
    std::vector<double> lambda_grid{0.1, 0.5, 1.0, 2.0};
    std::size_t T = 100;
    std::size_t T_prime = 50;
    double nu_negligible = 1e-6;
    DiscreteSolver cp_solver = DiscreteSolver::tabu;
    DiscreteSolver subset_solver = DiscreteSolver::exhaustive_support;
    bool run_A = true, run_B = true, run_C = true, run_D = true, run_E = true;
};

struct SuiteResult {
    std::vector<ExperimentRecord> records;
    /// Columns generated by the early-stopped run, in generation order.
    std::vector<HypothesisColumn> ucg_columns;
};

namespace detail {

inline ExperimentRecord describe(const Ensemble& e, const Dataset& train, const Dataset& val, double nu, double lambda) {
    ExperimentRecord r;
    r.nu = nu;
    r.lambda = lambda;
    r.cardinality = e.cardinality();
    r.train_error = e.error_rate(train);
    r.val_error = e.error_rate(val);
    const auto& y = train.labels();
    r.empirical_risk = e.empirical_risk(y);
    r.total_objective = e.objective(y, nu, lambda).total;
    return r;
}

template <class F>
void timed(std::vector<ExperimentRecord>& out, ExperimentRecord proto, F&& body) {
    auto t0 = std::chrono::steady_clock::now();
    try {
        auto recs = body();
        double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (auto& r : recs) {
            r.wall_time = dt;
            r.id = out.size();
            out.push_back(std::move(r));
        }
    } catch (const std::exception& ex) {
        proto.status = std::string("error: ") + ex.what();
        std::replace(proto.status.begin(), proto.status.end(), ',', ';');
        std::replace(proto.status.begin(), proto.status.end(), '\n', ' ');
        proto.id = out.size();
        log::warn("suite run failed: " + proto.status);
        out.push_back(std::move(proto));
    }
}

} // namespace detail

/// Experiments A-E on one train/validation split.
inline SuiteResult run_suite(const Dataset& train, const Dataset& val, const SuiteConfig& cfg) {
    require(!cfg.nu_grid.empty() || !cfg.lambda_grid.empty(), "config grid is empty");
    SuiteResult out;
    auto& recs = out.records;
    const Dictionary dict = enumerate_candidates(train);
    const std::size_t t_prime = std::min({cfg.T_prime, cfg.T, dict.size()});

    BoostConfig base = cfg.base;
    base.T = cfg.T;

    if (cfg.run_A) {
        for (double nu : cfg.nu_grid) {
            ExperimentRecord proto;
            proto.variant = Variant::A_L1CG;
            proto.nu = nu;
            proto.T = cfg.T;
            detail::timed(recs, proto, [&] {
                BoostConfig c = base;
                c.nu = nu;
                c.lambda = 0.0;
                auto res = l1_cg(train, dict, c);
                auto r = detail::describe(res.ensemble, train, val, nu, 0.0);
                r.variant = Variant::A_L1CG;
                r.T = cfg.T;
                r.iteration = res.log.size();
                return std::vector{r};
            });
        }
    }

    std::optional<UcgResult> ucg;
    if (cfg.run_B || cfg.run_E) {
        BoostConfig c = base;
        c.nu = cfg.nu_negligible;
        c.lambda = 0.0;
        if (!cfg.run_B) c.T = t_prime;
        ExperimentRecord proto;
        proto.variant = Variant::B_UCG;
        proto.nu = c.nu;
        proto.T = c.T;
        std::vector<ExperimentRecord> tmp;
        detail::timed(tmp, proto, [&] {
            ucg = ucg_early_stopping(train, dict, c);
            std::vector<ExperimentRecord> snaps;
            for (const auto& s : ucg->snapshots) {
                auto r = detail::describe(s.ensemble, train, val, c.nu, 0.0);
                r.variant = Variant::B_UCG;
                r.T = c.T;
                r.iteration = s.t;
                snaps.push_back(r);
            }
            return snaps;
        });
        if (ucg) out.ucg_columns = ucg->snapshots.empty() ? std::vector<HypothesisColumn>{} : ucg->snapshots.back().ensemble.columns;
        if (cfg.run_B)
            for (auto& r : tmp) {
                r.id = recs.size();
                recs.push_back(std::move(r));
            }
    }

    for (auto [run, variant] : {std::pair{cfg.run_C, Variant::C_CPCG}, std::pair{cfg.run_D, Variant::D_HOT}}) {
        if (!run) continue;
        for (double lambda : cfg.lambda_grid) {
            ExperimentRecord proto;
            proto.variant = variant;
            proto.nu = cfg.nu_negligible;
            proto.lambda = lambda;
            proto.T = cfg.T;
            proto.T_prime = variant == Variant::D_HOT ? t_prime : 0;
            proto.seed = base.seed;
            detail::timed(recs, proto, [&] {
                BoostConfig c = base;
                c.nu = cfg.nu_negligible;
                c.ucg_nu = cfg.nu_negligible;
                c.lambda = lambda;
                c.solver = cfg.cp_solver;
                if (variant == Variant::D_HOT) c.hot_start_T_prime = t_prime;
                auto res = variant == Variant::C_CPCG ? total_q_boost(train, dict, c) : hot_started_cpcg(train, dict, c);
                auto r = detail::describe(res.ensemble, train, val, c.nu, lambda);
                r.variant = variant;
                r.T = cfg.T;
                r.T_prime = proto.T_prime;
                r.seed = base.seed;
                r.iteration = res.log.empty() ? t_prime : res.log.back().t;
                return std::vector{r};
            });
        }
    }

    if (cfg.run_E && ucg) {
        std::vector<HypothesisColumn> cols(out.ucg_columns.begin(),
                                           out.ucg_columns.begin() + static_cast<long>(std::min(t_prime, out.ucg_columns.size())));
        ExperimentRecord proto;
        proto.variant = Variant::E_SUBSET;
        proto.nu = cfg.nu_negligible;
        proto.T = cfg.T;
        proto.T_prime = cols.size();
        detail::timed(recs, proto, [&] {
            BoostConfig c = base;
            c.nu = cfg.nu_negligible;
            c.solver = cfg.subset_solver;
            auto sel = subset_selection(cols, train, c, cfg.lambda_grid);
            std::vector<ExperimentRecord> rs;
            for (const auto& s : sel) {
                auto r = detail::describe(s.ensemble, train, val, c.nu, s.lambda);
                r.variant = Variant::E_SUBSET;
                r.T = cfg.T;
                r.T_prime = cols.size();
                r.seed = base.seed;
                rs.push_back(r);
            }
            return rs;
        });
    }
    return out;
}

inline SuiteResult run_suite(const Dataset& data, const Split& split, const SuiteConfig& cfg) {
    return run_suite(data.subset(split.train_indices), data.subset(split.val_indices), cfg);
}

struct ParetoPoint {
    std::size_t cardinality = 0;
    double val_error = 0.0;
    std::size_t record_id = 0;

    bool operator==(const ParetoPoint&) const = default;
};

enum class Group { baseline, cp };

inline std::string to_string(Group g) { return g == Group::baseline ? "baseline" : "cp"; }

inline bool in_group(const ExperimentRecord& r, Group g) { return r.ok() && is_baseline(r.variant) == (g == Group::baseline); }

/// Non-dominated (cardinality, val_error) points, by increasing cardinality. Records sharing a
/// cardinality are represented by their lowest validation error (earliest record on ties).
inline std::vector<ParetoPoint> pareto_frontier(std::span<const ExperimentRecord> records) {
    std::map<std::size_t, ParetoPoint> best;
    for (const auto& r : records) {
        auto it = best.find(r.cardinality);
        if (it == best.end() || r.val_error < it->second.val_error) best[r.cardinality] = {r.cardinality, r.val_error, r.id};
    }
    std::vector<ParetoPoint> front;
    for (const auto& [card, p] : best)
        if (front.empty() || p.val_error < front.back().val_error) front.push_back(p);
    return front;
}

inline std::vector<ParetoPoint> pareto_frontier(std::span<const ExperimentRecord> records, Group group) {
    std::vector<ExperimentRecord> members;
    for (const auto& r : records)
        if (in_group(r, group)) members.push_back(r);
    return pareto_frontier(members);
}

/// (card_q - card_cp) / card_q for the sparsest baseline point q whose validation error is within
/// `tol` of the CP point; none when no baseline point is comparable.
inline std::optional<double> sparsity_gain(const ParetoPoint& cp, std::span<const ParetoPoint> baseline, double tol) {
    require(tol >= 0.0, "tolerance must be nonnegative");
    std::optional<std::size_t> q;
    for (const auto& b : baseline)
        if (b.val_error <= cp.val_error + tol && (!q || b.cardinality < *q)) q = b.cardinality;
    if (!q || *q == 0) return std::nullopt;
    return (static_cast<double>(*q) - static_cast<double>(cp.cardinality)) / static_cast<double>(*q);
}

/// Relative validation error improvement over the best baseline point at any cardinality;
/// none when that best error is zero.
inline std::optional<double> generalization_gain(const ParetoPoint& cp, std::span<const ParetoPoint> baseline) {
    require(!baseline.empty(), "baseline frontier is empty");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : baseline) best = std::min(best, b.val_error);
    if (best == 0.0) return std::nullopt;
    return (best - cp.val_error) / best;
}

struct Suboptimality {
    std::optional<double> loss_rate_risk;
    std::optional<double> loss_rate_train_error;
    std::size_t coinciding = 0;
};

/// Over all (E, B) record pairs sharing a cardinality, the fraction where E's empirical risk
/// (resp. training error) exceeds B's by more than 1e-9. Undefined when no pair coincides.
inline Suboptimality suboptimality_comparison(std::span<const ExperimentRecord> e_records,
                                              std::span<const ExperimentRecord> b_records) {
    require(!e_records.empty() && !b_records.empty(), "both record lists must be nonempty");
    Suboptimality s;
    std::size_t worse_risk = 0, worse_err = 0;
    for (const auto& e : e_records) {
        if (!e.ok()) continue;
        for (const auto& b : b_records) {
            if (!b.ok() || b.cardinality != e.cardinality) continue;
            ++s.coinciding;
            if (e.empirical_risk > b.empirical_risk + 1e-9) ++worse_risk;
            if (e.train_error > b.train_error + 1e-9) ++worse_err;
        }
    }
    if (s.coinciding > 0) {
        s.loss_rate_risk = static_cast<double>(worse_risk) / static_cast<double>(s.coinciding);
        s.loss_rate_train_error = static_cast<double>(worse_err) / static_cast<double>(s.coinciding);
    }
    return s;
}

// ---- CSV I/O ---------------------------------------------------------------------------------

inline constexpr const char* kRecordsHeader =
    "id,variant,nu,lambda,T,T_prime,seed,iteration,cardinality,train_error,val_error,empirical_risk,total_objective,"
    "wall_time,status";

inline void write_records_csv(std::ostream& out, std::span<const ExperimentRecord> records) {
    auto old = out.precision(std::numeric_limits<double>::max_digits10);
    out << "# one row per experiment run; errors are fractions in [0,1]; risk is the summed exponential loss on train\n";
    out << kRecordsHeader << '\n';
    for (const auto& r : records)
        out << r.id << ',' << to_string(r.variant) << ',' << r.nu << ',' << r.lambda << ',' << r.T << ',' << r.T_prime << ','
            << r.seed << ',' << r.iteration << ',' << r.cardinality << ',' << r.train_error << ',' << r.val_error << ','
            << r.empirical_risk << ',' << r.total_objective << ',' << r.wall_time << ',' << r.status << '\n';
    out.precision(old);
}

inline std::vector<ExperimentRecord> read_records_csv(std::istream& in) {
    std::vector<ExperimentRecord> out;
    std::string line;
    std::size_t row = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (line != kRecordsHeader) throw ParseError("unexpected records header", row, 0);
            header_seen = true;
            continue;
        }
        auto f = detail::split_fields(line, ',');
        if (f.size() != 15) throw ParseError("expected 15 fields", row, f.size());
        auto num = [&](std::size_t k) {
            auto v = detail::parse_double(f[k]);
            if (!v) throw ParseError("bad number", row, k);
            return *v;
        };
        auto integer = [&](std::size_t k) {
            std::uint64_t v = 0;
            auto [p, ec] = std::from_chars(f[k].data(), f[k].data() + f[k].size(), v);
            if (ec != std::errc{} || p != f[k].data() + f[k].size()) throw ParseError("bad integer", row, k);
            return v;
        };
        ExperimentRecord r;
        r.id = integer(0);
        r.variant = parse_variant(std::string(f[1]));
        r.nu = num(2);
        r.lambda = num(3);
        r.T = integer(4);
        r.T_prime = integer(5);
        r.seed = integer(6);
        r.iteration = integer(7);
        r.cardinality = integer(8);
        r.train_error = num(9);
        r.val_error = num(10);
        r.empirical_risk = num(11);
        r.total_objective = num(12);
        r.wall_time = num(13);
        r.status = std::string(f[14]);
        out.push_back(std::move(r));
    }
    return out;
}

struct GainRow {
    ParetoPoint cp;
    std::optional<double> sparsity;
    std::optional<std::size_t> baseline_cardinality;
    std::optional<double> generalization;
};

inline std::vector<GainRow> compute_gains(std::span<const ParetoPoint> cp_front, std::span<const ParetoPoint> base_front,
                                          double tol) {
    std::vector<GainRow> rows;
    for (const auto& p : cp_front) {
        GainRow g;
        g.cp = p;
        g.sparsity = base_front.empty() ? std::nullopt : sparsity_gain(p, base_front, tol);
        if (g.sparsity) {
            for (const auto& b : base_front)
                if (b.val_error <= p.val_error + tol && (!g.baseline_cardinality || b.cardinality < *g.baseline_cardinality))
                    g.baseline_cardinality = b.cardinality;
        }
        if (!base_front.empty()) g.generalization = generalization_gain(p, base_front);
        rows.push_back(g);
    }
    return rows;
}

struct Report {
    std::vector<ParetoPoint> baseline_front;
    std::vector<ParetoPoint> cp_front;
    std::vector<GainRow> gains;
    std::vector<std::filesystem::path> files;
};

/// Writes records.csv, frontiers.csv, gains.csv and scatter_<dataset>.csv into `out_dir`.
inline Report emit_report(std::span<const ExperimentRecord> records, const std::filesystem::path& out_dir, double tol,
                          const std::string& dataset = "data") {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

    Report rep;
    rep.baseline_front = pareto_frontier(records, Group::baseline);
    rep.cp_front = pareto_frontier(records, Group::cp);
    rep.gains = compute_gains(rep.cp_front, rep.baseline_front, tol);

    auto open = [&](const std::string& name) {
        auto p = out_dir / name;
        std::ofstream f(p);
        if (!f) throw std::runtime_error("cannot write " + p.string());
        f.precision(std::numeric_limits<double>::max_digits10);
        rep.files.push_back(p);
        return f;
    };
    auto check = [](std::ofstream& f, const fs::path& p) {
        f.flush();
        if (!f) throw std::runtime_error("write failed for " + p.string());
    };

    {
        auto f = open("records.csv");
        write_records_csv(f, records);
        check(f, rep.files.back());
    }
    {
        auto f = open("frontiers.csv");
        f << "# Pareto-minimal (cardinality, val_error) points per group\n";
        f << "group,cardinality,val_error,record_id\n";
        for (auto g : {Group::baseline, Group::cp})
            for (const auto& p : g == Group::baseline ? rep.baseline_front : rep.cp_front)
                f << to_string(g) << ',' << p.cardinality << ',' << p.val_error << ',' << p.record_id << '\n';
        check(f, rep.files.back());
    }
    {
        auto f = open("gains.csv");
        f << "# one row per CP frontier point; gains are fractions, NA when undefined; comparable_tol=" << tol << '\n';
        f << "cp_cardinality,cp_val_error,record_id,sparsity_gain,baseline_cardinality,generalization_gain\n";
        for (const auto& g : rep.gains) {
            f << g.cp.cardinality << ',' << g.cp.val_error << ',' << g.cp.record_id << ',';
            if (g.sparsity) f << *g.sparsity; else f << "NA";
            f << ',';
            if (g.baseline_cardinality) f << *g.baseline_cardinality; else f << "NA";
            f << ',';
            if (g.generalization) f << *g.generalization; else f << "NA";
            f << '\n';
        }
        check(f, rep.files.back());
    }
    {
        auto f = open("scatter_" + dataset + ".csv");
        f << "# plot data: cardinality vs validation error, one row per successful record\n";
        f << "variant,cardinality,val_error,record_id\n";
        for (auto v : {Variant::A_L1CG, Variant::B_UCG, Variant::C_CPCG, Variant::D_HOT, Variant::E_SUBSET})
            for (const auto& r : records)
                if (r.ok() && r.variant == v) f << to_string(v) << ',' << r.cardinality << ',' << r.val_error << ',' << r.id << '\n';
        check(f, rep.files.back());
    }
    return rep;
}

/// Half an example of validation resolution.
inline double comparable_tolerance(std::size_t m_val) { return m_val == 0 ? 0.0 : 1.0 / (2.0 * static_cast<double>(m_val)); }

} // namespace cpboost
