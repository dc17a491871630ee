#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "cpboost/config.hpp"
#include "cpboost/testing/checks.hpp"

using namespace cpboost;
namespace fs = std::filesystem;

namespace {

struct RunArgs {
    std::string data_path;
    std::string synthetic;
    std::string config_path;
    std::string out_dir = "cpboost_out";
    int label_column = -1;
    bool fit_model = false;
    bool verbose = false;
};

Dataset load_data(const DataSource& src) {
    if (src.synthetic) return make_synthetic_two_gaussians(src.synthetic_m, src.synthetic_d, src.synthetic_separation, src.synthetic_seed);
    if (src.path.empty()) throw std::invalid_argument("no dataset: give --data, --synthetic or data.path in the config");
    return load_delimited(src.path, src.label_column, src.delimiter);
}

void write_file(const fs::path& p, const std::function<void(std::ostream&)>& body) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    body(f);
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + p.string());
}

int cmd_run(const RunArgs& a) {
    RunConfig rc;
    if (!a.config_path.empty()) rc = load_config(a.config_path);
    if (!a.data_path.empty()) {
        rc.data.path = a.data_path;
        rc.data.synthetic = false;
        if (a.label_column != -1) rc.data.label_column = a.label_column;
    }
    if (!a.synthetic.empty()) apply_config_value(rc, "synthetic", a.synthetic);
    if (rc.data.synthetic && rc.data.name == "data") rc.data.name = "synthetic";

    auto data = load_data(rc.data);
    auto split = split_80_20(data, rc.data.split_seed);
    auto train = data.subset(split.train_indices);
    auto val = data.subset(split.val_indices);
    log::info("train " + std::to_string(train.size()) + ", validation " + std::to_string(val.size()));

    auto result = run_suite(train, val, rc.suite);
    double tol = rc.comparable_tol.value_or(comparable_tolerance(val.size()));
    auto rep = emit_report(result.records, a.out_dir, tol, rc.data.name);

    if (a.fit_model) {
        auto cfg = rc.suite.base;
        auto res = total_q_boost(train, enumerate_candidates(train), cfg);
        Model m{train.size(), train.dimension(), cfg.nu, cfg.lambda, "exponential", res.ensemble};
        write_file(fs::path(a.out_dir) / "model.txt", [&](std::ostream& o) { write_model(o, m); });
        write_file(fs::path(a.out_dir) / "iteration_log.csv", [&](std::ostream& o) { write_iteration_log(o, res.log); });
        std::cout << "model: cardinality " << res.ensemble.cardinality() << ", validation error " << res.ensemble.error_rate(val)
                  << ", termination " << to_string(res.termination) << '\n';
    }

    std::size_t failed = 0;
    for (const auto& r : result.records) failed += !r.ok();
    std::cout << result.records.size() << " records (" << failed << " failed), baseline front " << rep.baseline_front.size()
              << " points, CP front " << rep.cp_front.size() << " points\n";
    for (const auto& g : rep.gains) {
        std::cout << "  cp card " << g.cp.cardinality << " val_error " << g.cp.val_error << "  sparsity gain ";
        if (g.sparsity) std::cout << 100.0 * *g.sparsity << "%"; else std::cout << "NA";
        std::cout << "  generalization gain ";
        if (g.generalization) std::cout << 100.0 * *g.generalization << "%"; else std::cout << "NA";
        std::cout << '\n';
    }
    std::cout << "wrote " << a.out_dir << '\n';
    return 0;
}

int cmd_frontier(const std::string& records_path, const std::string& out_dir, std::optional<double> tol, std::size_t m_val,
                 const std::string& name) {
    std::ifstream in(records_path);
    if (!in) throw std::runtime_error("cannot open " + records_path);
    auto records = read_records_csv(in);
    double t = tol ? *tol : comparable_tolerance(m_val);
    if (!tol && m_val == 0) log::warn("no --tol or --m-val given; comparable tolerance is 0");
    auto rep = emit_report(records, out_dir, t, name);
    std::cout << records.size() << " records; baseline front:";
    for (const auto& p : rep.baseline_front) std::cout << " (" << p.cardinality << ", " << p.val_error << ")";
    std::cout << "\ncp front:";
    for (const auto& p : rep.cp_front) std::cout << " (" << p.cardinality << ", " << p.val_error << ")";
    std::cout << "\nwrote " << out_dir << '\n';
    return 0;
}

struct PboArgs {
    std::size_t m = 20, n = 3;
    unsigned bits = 5;
    double nu = 0.01, lambda = 0.0, range = 2.0;
    std::uint64_t seed = 0;
    bool brute = false;
    std::size_t restarts = 16, iters = 2000;
    bool trace = false;
};

int cmd_solve_pbo(const PboArgs& a) {
    std::mt19937_64 rng(a.seed);
    std::bernoulli_distribution coin(0.5);
    Labels y(a.m);
    for (auto& v : y) v = coin(rng) ? 1 : -1;
    std::vector<HypothesisColumn> cols;
    for (std::size_t j = 0; j < a.n; ++j) {
        Response r(a.m);
        for (auto& v : r) v = coin(rng) ? 1 : -1;
        cols.push_back({Stump{j, 0.0, 1}, r});
    }
    FixedPointCodec codec(a.bits, a.range, a.n);
    BoostingRmp rmp(cols, y, a.nu, a.lambda, codec);
    std::cout << "instance: m=" << a.m << " n=" << a.n << " bits/weight=" << a.bits << " total bits=" << rmp.size()
              << " nu=" << a.nu << " lambda=" << a.lambda << " range=" << a.range << '\n';
    TabuResult res;
    if (a.brute) {
        res = brute_force_pbo(rmp);
    } else {
        TabuParams p;
        p.seed = a.seed;
        p.restarts = a.restarts;
        p.iters_per_restart = a.iters;
        if (a.trace) p.trace = &std::cout;
        res = tabu_search(rmp, p);
    }
    std::cout << (a.brute ? "brute force" : "tabu") << " value " << std::setprecision(17) << res.best_value << std::setprecision(6)
              << " evaluations " << res.evaluations << "\nbits ";
    for (auto b : res.best_bits) std::cout << int(b);
    std::cout << "\nweights";
    for (double w : codec.decode(res.best_bits)) std::cout << ' ' << w;
    std::cout << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cardinality-penalized totally corrective boosting"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "info-level logging");

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "run experiments A-E on one split and write records and report CSVs");
    auto* data_opt = run_cmd->add_option("--data", run.data_path, "delimited data file");
    run_cmd->add_option("--synthetic", run.synthetic, "two-Gaussian data as m,d,separation,seed")->excludes(data_opt);
    run_cmd->add_option("--label-column", run.label_column, "label column (-1 = last)");
    run_cmd->add_option("--config", run.config_path, "key = value config file")->check(CLI::ExistingFile);
    run_cmd->add_option("--out", run.out_dir, "output directory");
    run_cmd->add_flag("--model", run.fit_model, "also fit the base config and write model.txt and iteration_log.csv");

    std::string records_path, frontier_out = "cpboost_frontier", name = "data";
    std::optional<double> tol;
    std::size_t m_val = 0;
    auto* fr_cmd = app.add_subcommand("frontier", "recompute frontiers and gains from a records.csv");
    fr_cmd->add_option("--records", records_path, "records.csv")->required()->check(CLI::ExistingFile);
    fr_cmd->add_option("--out", frontier_out, "output directory");
    auto* tol_opt = fr_cmd->add_option("--tol", tol, "comparable-generalization tolerance");
    fr_cmd->add_option("--m-val", m_val, "validation size; tolerance becomes 1/(2 m_val)")->excludes(tol_opt);
    fr_cmd->add_option("--name", name, "dataset name for the scatter file");

    PboArgs pbo;
    auto* pbo_cmd = app.add_subcommand("solve-pbo", "solve a random restricted master problem with tabu or brute force");
    pbo_cmd->add_option("--m", pbo.m, "examples");
    pbo_cmd->add_option("--n", pbo.n, "columns");
    pbo_cmd->add_option("--bits", pbo.bits, "bits per weight");
    pbo_cmd->add_option("--nu", pbo.nu, "l1 coefficient");
    pbo_cmd->add_option("--lambda", pbo.lambda, "cardinality penalty");
    pbo_cmd->add_option("--range", pbo.range, "weight range r");
    pbo_cmd->add_option("--seed", pbo.seed, "instance and search seed");
    pbo_cmd->add_flag("--brute", pbo.brute, "exhaustive search instead of tabu");
    pbo_cmd->add_option("--restarts", pbo.restarts, "tabu restarts");
    pbo_cmd->add_option("--iters", pbo.iters, "tabu iterations per restart");
    pbo_cmd->add_flag("--trace", pbo.trace, "print each improvement of the best value");

    bool full = false;
    auto* self_cmd = app.add_subcommand("selftest", "run the oracle checks at reduced size");
    self_cmd->add_flag("--full", full, "full-size checks (minutes)");

    CLI11_PARSE(app, argc, argv);
    if (verbose) log::sink().threshold = log::Level::info;

    try {
        if (*run_cmd) return cmd_run(run);
        if (*fr_cmd) return cmd_frontier(records_path, frontier_out, tol, m_val, name);
        if (*pbo_cmd) return cmd_solve_pbo(pbo);
        if (*self_cmd) return check::run_all(std::cout, !full) ? 1 : 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
