#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cpboost/experiments.hpp"

namespace cpboost {

/// Where the suite's data comes from: a delimited file or the two-Gaussian generator.
struct DataSource {
    std::string path;
    int label_column = -1;
    char delimiter = ',';

    bool synthetic = false;
    std::size_t synthetic_m = 200;
    std::size_t synthetic_d = 5;
    double synthetic_separation = 3.0;
    std::uint64_t synthetic_seed = 0;

    std::uint64_t split_seed = 0;
    std::string name = "data";
};

struct RunConfig {
    DataSource data;
    SuiteConfig suite;
    /// Comparable-generalization tolerance; defaults to half an example of validation resolution.
    std::optional<double> comparable_tol;
};

// Plain-text config: one `key = value` per line, `#` starts a comment. Lists are comma separated.
//
//   data.path, data.label_column, data.delimiter (comma|space|tab), data.name
//   synthetic = m,d,separation,seed         split_seed
//   nu, lambda, epsilon, T, T_prime, convex_max_iters
//   bit_depth, bit_depth_max, range_floor, escalate_bit_depth
//   solver, cp_solver, subset_solver        (tabu | brute | exhaustive)
//   edge_stop                               (auto | on | off)
//   tabu.restarts, tabu.iters, tabu.tenure (0 = auto), tabu.deterministic, tabu.threads
//   seed, ucg_nu, nu_negligible, zero_tol
//   nu_grid, lambda_grid, variants (any of A,B,C,D,E), comparable_tol

namespace detail {

inline std::string trim(std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    auto d = parse_double(v);
    if (!d) throw std::invalid_argument("config key '" + key + "': '" + v + "' is not a number");
    return *d;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
    double d = to_double(key, v);
    if (d < 0 || d != std::floor(d)) throw std::invalid_argument("config key '" + key + "': expected a nonnegative integer");
    return static_cast<std::uint64_t>(d);
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw std::invalid_argument("config key '" + key + "': expected a boolean");
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (auto f : split_fields(v, ',')) out.push_back(to_double(key, std::string(f)));
    return out;
}

} // namespace detail

inline void apply_config_value(RunConfig& rc, const std::string& key, const std::string& value) {
    using namespace detail;
    auto& s = rc.suite;
    auto& b = s.base;
    if (key == "data.path") rc.data.path = value;
    else if (key == "data.label_column") rc.data.label_column = static_cast<int>(to_double(key, value));
    else if (key == "data.delimiter") {
        if (value == "comma" || value == ",") rc.data.delimiter = ',';
        else if (value == "space" || value == "whitespace") rc.data.delimiter = ' ';
        else if (value == "tab") rc.data.delimiter = '\t';
        else if (value.size() == 1) rc.data.delimiter = value[0];
        else throw std::invalid_argument("config key 'data.delimiter': unknown delimiter '" + value + "'");
    } else if (key == "data.name") rc.data.name = value;
    else if (key == "synthetic") {
        auto v = to_list(key, value);
        if (v.size() != 4) throw std::invalid_argument("config key 'synthetic': expected m,d,separation,seed");
        rc.data.synthetic = true;
        rc.data.synthetic_m = static_cast<std::size_t>(v[0]);
        rc.data.synthetic_d = static_cast<std::size_t>(v[1]);
        rc.data.synthetic_separation = v[2];
        rc.data.synthetic_seed = static_cast<std::uint64_t>(v[3]);
    } else if (key == "split_seed") rc.data.split_seed = to_uint(key, value);
    else if (key == "nu") b.nu = to_double(key, value);
    else if (key == "lambda") b.lambda = to_double(key, value);
    else if (key == "epsilon") b.epsilon = to_double(key, value);
    else if (key == "T") s.T = b.T = to_uint(key, value);
    else if (key == "T_prime") s.T_prime = to_uint(key, value);
    else if (key == "convex_max_iters") b.convex_max_iters = to_uint(key, value);
    else if (key == "bit_depth") b.bit_depth = static_cast<unsigned>(to_uint(key, value));
    else if (key == "bit_depth_max") b.bit_depth_max = static_cast<unsigned>(to_uint(key, value));
    else if (key == "range_floor") b.range_floor = to_double(key, value);
    else if (key == "escalate_bit_depth") b.escalate_bit_depth = to_bool(key, value);
    else if (key == "solver") b.solver = parse_solver(value);
    else if (key == "cp_solver") s.cp_solver = parse_solver(value);
    else if (key == "subset_solver") s.subset_solver = parse_solver(value);
    else if (key == "edge_stop") {
        if (value == "auto") b.edge_stop = EdgeStopMode::automatic;
        else if (value == "on") b.edge_stop = EdgeStopMode::on;
        else if (value == "off") b.edge_stop = EdgeStopMode::off;
        else throw std::invalid_argument("config key 'edge_stop': expected auto, on or off");
    } else if (key == "tabu.restarts") b.tabu.restarts = to_uint(key, value);
    else if (key == "tabu.iters") b.tabu.iters_per_restart = to_uint(key, value);
    else if (key == "tabu.tenure") b.tabu.tenure = to_uint(key, value);
    else if (key == "tabu.deterministic") b.tabu.deterministic = to_bool(key, value);
    else if (key == "tabu.threads") b.tabu.threads = to_uint(key, value);
    else if (key == "seed") b.seed = to_uint(key, value);
    else if (key == "ucg_nu") b.ucg_nu = to_double(key, value);
    else if (key == "nu_negligible") s.nu_negligible = to_double(key, value);
    else if (key == "zero_tol") b.zero_tol = to_double(key, value);
    else if (key == "nu_grid") s.nu_grid = to_list(key, value);
    else if (key == "lambda_grid") s.lambda_grid = to_list(key, value);
    else if (key == "comparable_tol") rc.comparable_tol = to_double(key, value);
    else if (key == "variants") {
        s.run_A = s.run_B = s.run_C = s.run_D = s.run_E = false;
        for (auto f : split_fields(value, ',')) {
            if (f == "A") s.run_A = true;
            else if (f == "B") s.run_B = true;
            else if (f == "C") s.run_C = true;
            else if (f == "D") s.run_D = true;
            else if (f == "E") s.run_E = true;
            else throw std::invalid_argument("config key 'variants': unknown variant '" + std::string(f) + "'");
        }
    } else {
        throw std::invalid_argument("unknown config key '" + key + "'");
    }
}

inline RunConfig parse_config(std::istream& in, RunConfig rc = {}) {
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", row, 0);
        try {
            apply_config_value(rc, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what(), row, eq);
        }
    }
    rc.suite.base.T = rc.suite.T;
    rc.suite.base.validate();
    return rc;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    return parse_config(in);
}

} // namespace cpboost
