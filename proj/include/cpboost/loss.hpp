#pragma once

#include <atomic>
#include <cmath>
#include <ranges>
#include <vector>

#include "cpboost/core.hpp"
#include "cpboost/hypotheses.hpp"

namespace cpboost {

/// Margins below this are clamped before exponentiation; exp(500) is near the double limit.
inline constexpr double kMarginFloor = -500.0;
inline constexpr double kZeroTol = 1e-9;

namespace detail {
inline std::atomic<bool>& clamp_reported() {
    static std::atomic<bool> flag{false};
    return flag;
}
} // namespace detail

inline double clamp_margin(double gamma) {
    if (gamma < kMarginFloor) {
        if (!detail::clamp_reported().exchange(true))
            log::warn("margin below " + std::to_string(kMarginFloor) + " clamped before exponentiation");
        return kMarginFloor;
    }
    return gamma;
}

inline double exp_loss(double gamma) { return std::exp(-clamp_margin(gamma)); }

inline double exp_loss_derivative(double gamma) { return -std::exp(-clamp_margin(gamma)); }

/// l*(-u) for l(g) = exp(-g): u ln u - u, with 0 ln 0 = 0.
inline double exp_loss_conjugate(double u) {
    require(u >= 0.0, "conjugate argument must be nonnegative");
    if (u == 0.0) return 0.0;
    return u * std::log(u) - u;
}

inline std::size_t cardinality(std::span<const double> w, double zero_tol = kZeroTol) {
    require(zero_tol >= 0.0, "zero tolerance must be nonnegative");
    std::size_t n = 0;
    for (double v : w)
        if (v > zero_tol) ++n;
    return n;
}

/// gamma_i = y_i sum_j w_j H_ij
template <std::ranges::random_access_range Cols>
std::vector<double> margins(const Cols& columns, std::span<const double> w, std::span<const int> labels) {
    std::vector<double> gamma(labels.size(), 0.0);
    std::size_t j = 0;
    for (const auto& c : columns) {
        const double wj = w[j++];
        if (wj == 0.0) continue;
        const auto& h = responses_of(c);
        for (std::size_t i = 0; i < gamma.size(); ++i) gamma[i] += wj * h[i];
    }
    for (std::size_t i = 0; i < gamma.size(); ++i) gamma[i] *= labels[i];
    return gamma;
}

/// u_i = -l'(gamma_i) = exp(-gamma_i)
inline std::vector<double> dual_weights(std::span<const double> gamma) {
    std::vector<double> u(gamma.size());
    for (std::size_t i = 0; i < gamma.size(); ++i) u[i] = -exp_loss_derivative(gamma[i]);
    return u;
}

inline double empirical_risk(std::span<const double> gamma) {
    double r = 0.0;
    for (double g : gamma) r += exp_loss(g);
    return r;
}

struct PrimalObjective {
    double risk = 0.0;
    double l1 = 0.0;
    double card_term = 0.0;
    double total = 0.0;
};

/// sum_i exp(-y_i H_i: w) + nu * 1'w + lambda * card(w)
template <std::ranges::random_access_range Cols>
PrimalObjective primal_objective(const Cols& columns, std::span<const double> w, std::span<const int> labels, double nu,
                                 double lambda, double zero_tol = kZeroTol) {
    require(static_cast<std::size_t>(std::ranges::size(columns)) == w.size(), "weight count does not match columns");
    require(lambda >= 0.0, "lambda must be nonnegative");
    double l1 = 0.0;
    for (double v : w) {
        require(v >= 0.0, "weights must be nonnegative");
        l1 += v;
    }
    PrimalObjective o;
    o.risk = empirical_risk(margins(columns, w, labels));
    o.l1 = nu * l1;
    o.card_term = lambda * static_cast<double>(cardinality(w, zero_tol));
    o.total = o.risk + o.l1 + o.card_term;
    return o;
}

/// Lagrange dual value -sum_i l*(-u_i). The cardinality term contributes nothing to the dual, so
/// there is no lambda argument.
inline double dual_objective(std::span<const double> u) {
    double s = 0.0;
    for (double v : u) s += exp_loss_conjugate(v);
    return -s;
}

inline double dual_objective(std::span<const double> u, double /*lambda*/) { return dual_objective(u); }

/// Gradient of sum_i exp(-gamma_i) + nu 1'w with respect to w.
template <std::ranges::random_access_range Cols>
std::vector<double> l1_risk_gradient(const Cols& columns, std::span<const double> w, std::span<const int> labels,
                                     double nu) {
    auto u = dual_weights(margins(columns, w, labels));
    std::vector<double> g;
    g.reserve(w.size());
    for (const auto& c : columns) g.push_back(nu - edge(c, u, labels));
    return g;
}

} // namespace cpboost
