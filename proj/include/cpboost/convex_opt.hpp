#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "cpboost/core.hpp"
#include "cpboost/hypotheses.hpp"
#include "cpboost/loss.hpp"

namespace cpboost {

inline constexpr double kDefaultTolerance = 5e-4;

struct ConvexSolveOptions {
    double tolerance = kDefaultTolerance;
    std::size_t max_iters = 500;
    /// Extra Newton steps taken after the tolerance is met, stopping once progress stalls.
    std::size_t polish_iters = 8;
};

struct ConvexSolveResult {
    std::vector<double> w_tilde;
    double objective = 0.0;
    double projected_gradient_infnorm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    /// Objective after each accepted step, starting with the initial point.
    std::vector<double> trace;
};

namespace detail {

/// sum_i exp(-(A w)_i) + nu 1'w for A with entries y_i H_ij.
struct L1ExpRisk {
    Eigen::MatrixXd a;
    double nu;

    double value(const Eigen::VectorXd& w, Eigen::VectorXd* e_out = nullptr) const {
        Eigen::VectorXd gamma = a * w;
        Eigen::VectorXd e(gamma.size());
        double risk = 0.0;
        for (Eigen::Index i = 0; i < gamma.size(); ++i) {
            e[i] = exp_loss(gamma[i]);
            risk += e[i];
        }
        if (e_out) *e_out = std::move(e);
        return risk + nu * w.sum();
    }
};

inline double projected_gradient_norm(const Eigen::VectorXd& w, const Eigen::VectorXd& g) {
    double pg = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) pg = std::max(pg, w[j] > 0.0 ? std::abs(g[j]) : std::max(0.0, -g[j]));
    return pg;
}

} // namespace detail

/// min over w >= 0 of sum_i exp(-y_i H_i: w) + nu sum_j w_j, by projected Newton with an
/// Armijo search along the projection arc. Iterates stay in the nonnegative orthant exactly.
template <std::ranges::random_access_range Cols>
ConvexSolveResult minimize_l1_risk(const Cols& columns, std::span<const int> labels, double nu,
                                   std::span<const double> w0, const ConvexSolveOptions& opt = {}) {
    const auto n = static_cast<Eigen::Index>(std::ranges::size(columns));
    const auto m = static_cast<Eigen::Index>(labels.size());
    require(n > 0, "convex solve needs at least one column");
    require(nu > 0.0, "nu must be positive");
    require(opt.tolerance > 0.0, "tolerance must be positive");
    require(static_cast<Eigen::Index>(w0.size()) == n, "initial weight count does not match columns");

    detail::L1ExpRisk f{Eigen::MatrixXd(m, n), nu};
    {
        Eigen::Index j = 0;
        for (const auto& c : columns) {
            const auto& h = responses_of(c);
            for (Eigen::Index i = 0; i < m; ++i) f.a(i, j) = static_cast<double>(labels[i] * h[i]);
            ++j;
        }
    }

    Eigen::VectorXd w(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        require(w0[j] >= 0.0, "initial weights must be nonnegative");
        w[j] = w0[j];
    }

    Eigen::VectorXd e;
    double fx = f.value(w, &e);
    if (!std::isfinite(fx)) throw std::runtime_error("objective is not finite at the initial point");
    Eigen::VectorXd g = Eigen::VectorXd::Constant(n, nu) - f.a.transpose() * e;

    ConvexSolveResult res;
    res.trace.push_back(fx);
    constexpr double sigma = 1e-4;
    std::size_t polish = 0;

    for (;;) {
        double pg = detail::projected_gradient_norm(w, g);
        if (pg <= opt.tolerance) {
            if (polish >= opt.polish_iters || pg == 0.0) break;
            ++polish;
        }
        if (res.iterations >= opt.max_iters) break;

        // Bertsekas active set: variables at (or within eps_k of) the bound whose gradient pushes outward.
        Eigen::VectorXd proj_step = (w - g).cwiseMax(0.0) - w;
        const double eps_k = std::min(1e-3, proj_step.norm());
        std::vector<Eigen::Index> free_idx, active_idx;
        for (Eigen::Index j = 0; j < n; ++j) (w[j] <= eps_k && g[j] > 0.0 ? active_idx : free_idx).push_back(j);

        Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
        if (!free_idx.empty()) {
            const auto nf = static_cast<Eigen::Index>(free_idx.size());
            Eigen::MatrixXd af(m, nf);
            Eigen::VectorXd gf(nf);
            for (Eigen::Index k = 0; k < nf; ++k) {
                af.col(k) = f.a.col(free_idx[k]);
                gf[k] = g[free_idx[k]];
            }
            Eigen::MatrixXd hess = af.transpose() * e.asDiagonal() * af;
            double mu = 1e-12 * std::max(1.0, hess.trace() / static_cast<double>(nf));
            Eigen::VectorXd df;
            for (int attempt = 0; attempt < 24; ++attempt) {
                Eigen::LLT<Eigen::MatrixXd> llt(hess + mu * Eigen::MatrixXd::Identity(nf, nf));
                if (llt.info() == Eigen::Success) {
                    df = llt.solve(-gf);
                    if (df.allFinite()) break;
                }
                mu *= 100.0;
                df.resize(0);
            }
            if (df.size() == 0) df = -gf;
            for (Eigen::Index k = 0; k < nf; ++k) d[free_idx[k]] = df[k];
        }
        for (auto j : active_idx) {
            double hjj = (f.a.col(j).array().square() * e.array()).sum();
            d[j] = -g[j] / std::max(hjj, 1e-12);
        }

        auto try_direction = [&](const Eigen::VectorXd& dir, bool newton) -> bool {
            double alpha = 1.0;
            for (int k = 0; k < 60; ++k, alpha *= 0.5) {
                Eigen::VectorXd wn = (w + alpha * dir).cwiseMax(0.0);
                Eigen::VectorXd en;
                double fn = f.value(wn, &en);
                if (std::isnan(fn)) throw std::runtime_error("objective became NaN during convex solve");
                double required = 0.0;
                if (newton) {
                    for (auto j : free_idx) required -= alpha * g[j] * dir[j];
                    for (auto j : active_idx) required += g[j] * (w[j] - wn[j]);
                } else {
                    required = g.dot(w - wn);
                }
                if (fn < fx && fx - fn >= sigma * required) {
                    w = std::move(wn);
                    e = std::move(en);
                    fx = fn;
                    return true;
                }
            }
            return false;
        };

        if (!try_direction(d, true) && !try_direction(-g, false)) break;
        g = Eigen::VectorXd::Constant(n, nu) - f.a.transpose() * e;
        ++res.iterations;
        res.trace.push_back(fx);
    }

    res.projected_gradient_infnorm = detail::projected_gradient_norm(w, g);
    res.converged = res.projected_gradient_infnorm <= opt.tolerance;
    res.objective = fx;
    res.w_tilde.assign(w.data(), w.data() + n);
    return res;
}

template <std::ranges::random_access_range Cols>
ConvexSolveResult minimize_l1_risk(const Cols& columns, std::span<const int> labels, double nu,
                                   std::span<const double> w0, double tolerance, std::size_t max_iters = 500) {
    ConvexSolveOptions opt;
    opt.tolerance = tolerance;
    opt.max_iters = max_iters;
    return minimize_l1_risk(columns, labels, nu, w0, opt);
}

struct Violation {
    std::size_t index;
    double edge;
};

/// Columns whose dual constraint u' diag(y) H_:j <= nu + eps is violated, most violated first.
template <std::ranges::random_access_range Cols>
std::vector<Violation> check_dual_constraints(const Cols& columns, std::span<const double> u, std::span<const int> labels,
                                              double nu, double eps) {
    for (double v : u) require(v >= 0.0, "dual weights must be nonnegative");
    std::vector<Violation> out;
    std::size_t j = 0;
    for (const auto& c : columns) {
        double e = edge(c, u, labels);
        if (e > nu + eps) out.push_back({j, e});
        ++j;
    }
    std::stable_sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) { return a.edge > b.edge; });
    return out;
}

} // namespace cpboost
