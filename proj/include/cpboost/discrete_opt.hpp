#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <thread>
#include <vector>

#include "cpboost/core.hpp"
#include "cpboost/hypotheses.hpp"
#include "cpboost/loss.hpp"

namespace cpboost {

/// Fixed-point weights: B bits per weight, LSB first and contiguous per weight, mapped onto
/// the uniform grid {0, r/(2^B-1), ..., r}.
struct FixedPointCodec {
    unsigned bit_depth = 6;
    double range = 1.0;
    std::size_t n_weights = 0;

    FixedPointCodec() = default;
    FixedPointCodec(unsigned bit_depth, double range, std::size_t n_weights)
        : bit_depth(bit_depth), range(range), n_weights(n_weights) {
        require(bit_depth >= 1 && bit_depth <= 30, "bit depth must be in [1, 30]");
        require(range > 0.0 && std::isfinite(range), "codec range must be positive");
    }

    std::size_t n_bits() const { return n_weights * bit_depth; }
    std::uint32_t max_level() const { return (std::uint32_t{1} << bit_depth) - 1; }
    double step() const { return range / static_cast<double>(max_level()); }
    double value_of(std::uint32_t level) const {
        return level == max_level() ? range : range * static_cast<double>(level) / static_cast<double>(max_level());
    }

    std::uint32_t level(std::span<const std::uint8_t> bits, std::size_t j) const {
        std::uint32_t q = 0;
        for (unsigned k = 0; k < bit_depth; ++k)
            if (bits[j * bit_depth + k]) q |= std::uint32_t{1} << k;
        return q;
    }

    std::vector<std::uint32_t> levels(std::span<const std::uint8_t> bits) const {
        require(bits.size() == n_bits(), "bit string length does not match codec");
        std::vector<std::uint32_t> q(n_weights);
        for (std::size_t j = 0; j < n_weights; ++j) q[j] = level(bits, j);
        return q;
    }

    std::vector<double> decode(std::span<const std::uint8_t> bits) const {
        auto q = levels(bits);
        std::vector<double> w(n_weights);
        for (std::size_t j = 0; j < n_weights; ++j) w[j] = value_of(q[j]);
        return w;
    }

    Bits encode_levels(std::span<const std::uint32_t> q) const {
        require(q.size() == n_weights, "level count does not match codec");
        Bits bits(n_bits(), 0);
        for (std::size_t j = 0; j < n_weights; ++j) {
            require(q[j] <= max_level(), "level exceeds bit depth");
            for (unsigned k = 0; k < bit_depth; ++k) bits[j * bit_depth + k] = (q[j] >> k) & 1U;
        }
        return bits;
    }

    /// Nearest grid point per weight, clamped to [0, r].
    Bits encode_nearest(std::span<const double> w) const {
        std::vector<std::uint32_t> q(w.size());
        for (std::size_t j = 0; j < w.size(); ++j) {
            double l = std::round(std::clamp(w[j], 0.0, range) / step());
            q[j] = static_cast<std::uint32_t>(std::clamp(l, 0.0, static_cast<double>(max_level())));
        }
        return encode_levels(q);
    }
};

inline std::vector<double> encode_decode(const FixedPointCodec& codec, std::span<const std::uint8_t> bits) {
    return codec.decode(bits);
}

/// r = max(floor, 2 * max previous weight)
inline double adapt_range(std::span<const double> previous, double floor = 1.0) {
    double mx = 0.0;
    for (double v : previous) {
        require(v >= 0.0, "previous weights must be nonnegative");
        mx = std::max(mx, v);
    }
    return std::max(floor, 2.0 * mx);
}

/// A pseudo-Boolean minimization problem exposes its size, a from-scratch evaluation, and a
/// search state supporting single-bit flips.
template <class S>
concept FlipState = requires(S s, const S cs, std::size_t k, std::span<const std::uint8_t> bits) {
    s.reset(bits);
    { cs.value() } -> std::convertible_to<double>;
    { s.delta(k) } -> std::convertible_to<double>;
    s.flip(k);
    { cs.bits() } -> std::convertible_to<const Bits&>;
};

template <class P>
concept PseudoBooleanProblem = requires(const P p, std::span<const std::uint8_t> bits) {
    { p.size() } -> std::convertible_to<std::size_t>;
    { p.evaluate(bits) } -> std::convertible_to<double>;
    { p.make_state() } -> FlipState;
};

/// Arbitrary objective over N bits; each flip is scored by full re-evaluation.
class BlackBoxProblem {
public:
    BlackBoxProblem(std::size_t n, std::function<double(std::span<const std::uint8_t>)> f) : n_(n), f_(std::move(f)) {}

    std::size_t size() const { return n_; }
    double evaluate(std::span<const std::uint8_t> bits) const { return f_(bits); }

    class State {
    public:
        explicit State(const BlackBoxProblem* p) : p_(p) {}
        void reset(std::span<const std::uint8_t> bits) {
            bits_.assign(bits.begin(), bits.end());
            value_ = p_->evaluate(bits_);
        }
        double value() const { return value_; }
        double delta(std::size_t k) {
            bits_[k] ^= 1U;
            double v = p_->evaluate(bits_);
            bits_[k] ^= 1U;
            return v - value_;
        }
        void flip(std::size_t k) {
            bits_[k] ^= 1U;
            value_ = p_->evaluate(bits_);
        }
        const Bits& bits() const { return bits_; }

    private:
        const BlackBoxProblem* p_;
        Bits bits_;
        double value_ = 0.0;
    };

    State make_state() const { return State(this); }

private:
    std::size_t n_;
    std::function<double(std::span<const std::uint8_t>)> f_;
};

/// Cardinality-penalized restricted master problem over fixed-point weights:
///   sum_i exp(-gamma_i) + nu 1'w + lambda card(w),  w = decode(bits).
/// Margins are tracked as exact integers z_i = sum_j y_i H_ij q_j, so gamma_i = step * z_i and
/// incremental and from-scratch evaluation produce identical values.
class BoostingRmp {
public:
    template <std::ranges::random_access_range Cols>
    BoostingRmp(const Cols& columns, std::span<const int> labels, double nu, double lambda, FixedPointCodec codec)
        : m_(labels.size()), nu_(nu), lambda_(lambda), codec_(codec) {
        require(lambda >= 0.0, "lambda must be nonnegative");
        require(nu >= 0.0, "nu must be nonnegative");
        n_ = static_cast<std::size_t>(std::ranges::size(columns));
        require(codec_.n_weights == n_, "codec weight count does not match columns");
        a_.resize(n_ * m_);
        std::size_t j = 0;
        for (const auto& c : columns) {
            const auto& h = responses_of(c);
            require(h.size() == m_, "column length does not match labels");
            for (std::size_t i = 0; i < m_; ++i) a_[j * m_ + i] = static_cast<std::int8_t>(labels[i] * h[i]);
            ++j;
        }
        zmax_ = static_cast<std::int64_t>(n_) * codec_.max_level();
        exp_table_.resize(static_cast<std::size_t>(2 * zmax_ + 1));
        for (std::int64_t z = -zmax_; z <= zmax_; ++z)
            exp_table_[static_cast<std::size_t>(z + zmax_)] = exp_loss(codec_.step() * static_cast<double>(z));
        for (unsigned k = 0; k < codec_.bit_depth; ++k) {
            double dw = codec_.step() * static_cast<double>(std::uint32_t{1} << k);
            up_.push_back(std::exp(-dw) - 1.0);
            down_.push_back(std::exp(dw) - 1.0);
        }
    }

    std::size_t size() const { return codec_.n_bits(); }
    std::size_t n_weights() const { return n_; }
    std::size_t n_examples() const { return m_; }
    const FixedPointCodec& codec() const { return codec_; }
    double nu() const { return nu_; }
    double lambda() const { return lambda_; }

    double evaluate(std::span<const std::uint8_t> bits) const { return evaluate_levels(codec_.levels(bits)); }

    double evaluate_levels(std::span<const std::uint32_t> q) const {
        std::vector<std::int64_t> z(m_, 0);
        for (std::size_t j = 0; j < n_; ++j)
            if (q[j]) add_column(z, j, static_cast<std::int64_t>(q[j]));
        return value_from(z, q);
    }

    double value_from(std::span<const std::int64_t> z, std::span<const std::uint32_t> q) const {
        double risk = 0.0;
        for (auto zi : z) risk += exp_of(zi);
        std::uint64_t total_level = 0;
        std::size_t nnz = 0;
        for (auto l : q) {
            total_level += l;
            nnz += l != 0;
        }
        return risk + nu_ * codec_.step() * static_cast<double>(total_level) + lambda_ * static_cast<double>(nnz);
    }

    double exp_of(std::int64_t z) const { return exp_table_[static_cast<std::size_t>(z + zmax_)]; }

    void add_column(std::vector<std::int64_t>& z, std::size_t j, std::int64_t times) const {
        const std::int8_t* a = &a_[j * m_];
        for (std::size_t i = 0; i < m_; ++i) z[i] += times * a[i];
    }

    /// Incremental evaluation state. A flip updates the integer margins in O(m); the per-column
    /// exponential sums used to score candidate flips in O(1) are rebuilt lazily in O(mn).
    class State {
    public:
        explicit State(const BoostingRmp* p) : p_(p) {}

        void reset(std::span<const std::uint8_t> bits) {
            bits_.assign(bits.begin(), bits.end());
            q_ = p_->codec_.levels(bits_);
            z_.assign(p_->m_, 0);
            for (std::size_t j = 0; j < p_->n_; ++j)
                if (q_[j]) p_->add_column(z_, j, static_cast<std::int64_t>(q_[j]));
            refresh_value();
            sums_valid_ = false;
        }

        double value() const { return value_; }
        const Bits& bits() const { return bits_; }
        std::span<const std::int64_t> integer_margins() const { return z_; }
        std::span<const std::uint32_t> levels() const { return q_; }

        /// Margins gamma_i as doubles.
        std::vector<double> margins() const {
            std::vector<double> g(z_.size());
            for (std::size_t i = 0; i < z_.size(); ++i) g[i] = p_->codec_.step() * static_cast<double>(z_[i]);
            return g;
        }

        double delta(std::size_t k) {
            if (!sums_valid_) rebuild_sums();
            const unsigned B = p_->codec_.bit_depth;
            const std::size_t j = k / B;
            const unsigned b = static_cast<unsigned>(k % B);
            const bool setting = bits_[k] == 0;
            const double plus = 0.5 * (total_ + edge_[j]);   // sum of e_i over examples with y_i H_ij = +1
            const double minus = 0.5 * (total_ - edge_[j]);  // and over y_i H_ij = -1
            double d_risk = setting ? plus * p_->up_[b] + minus * p_->down_[b] : plus * p_->down_[b] + minus * p_->up_[b];
            double dw = p_->codec_.step() * static_cast<double>(std::uint32_t{1} << b);
            double d_l1 = p_->nu_ * (setting ? dw : -dw);
            std::uint32_t new_level = q_[j] ^ (std::uint32_t{1} << b);
            double d_card = 0.0;
            if (q_[j] == 0 && new_level != 0) d_card = p_->lambda_;
            if (q_[j] != 0 && new_level == 0) d_card = -p_->lambda_;
            return d_risk + d_l1 + d_card;
        }

        void flip(std::size_t k) {
            const unsigned B = p_->codec_.bit_depth;
            const std::size_t j = k / B;
            const unsigned b = static_cast<unsigned>(k % B);
            const std::int64_t change = bits_[k] ? -(std::int64_t{1} << b) : (std::int64_t{1} << b);
            bits_[k] ^= 1U;
            q_[j] ^= std::uint32_t{1} << b;
            p_->add_column(z_, j, change);
            refresh_value();
            sums_valid_ = false;
        }

    private:
        void refresh_value() { value_ = p_->value_from(z_, q_); }

        void rebuild_sums() {
            e_.resize(z_.size());
            total_ = 0.0;
            for (std::size_t i = 0; i < z_.size(); ++i) {
                e_[i] = p_->exp_of(z_[i]);
                total_ += e_[i];
            }
            edge_.assign(p_->n_, 0.0);
            for (std::size_t j = 0; j < p_->n_; ++j) {
                const std::int8_t* a = &p_->a_[j * p_->m_];
                double s = 0.0;
                for (std::size_t i = 0; i < p_->m_; ++i) s += a[i] * e_[i];
                edge_[j] = s;
            }
            sums_valid_ = true;
        }

        const BoostingRmp* p_;
        Bits bits_;
        std::vector<std::uint32_t> q_;
        std::vector<std::int64_t> z_;
        std::vector<double> e_;
        std::vector<double> edge_;
        double total_ = 0.0;
        double value_ = 0.0;
        bool sums_valid_ = false;
    };

    State make_state() const { return State(this); }

private:
    std::size_t m_ = 0;
    std::size_t n_ = 0;
    double nu_ = 0.0;
    double lambda_ = 0.0;
    FixedPointCodec codec_;
    std::vector<std::int8_t> a_;
    std::int64_t zmax_ = 0;
    std::vector<double> exp_table_;
    std::vector<double> up_;
    std::vector<double> down_;
};

struct TabuParams {
    std::size_t restarts = 16;
    std::size_t iters_per_restart = 2000;
    /// 0 selects min(20, ceil(N/4)).
    std::size_t tenure = 0;
    std::uint64_t seed = 0;
    /// Run restarts one after another in seed order.
    bool deterministic = true;
    std::size_t threads = 0;
    /// One line per improvement of the best-so-far value: restart, iteration, value.
    std::ostream* trace = nullptr;

    std::size_t effective_tenure(std::size_t n_bits) const {
        if (tenure > 0) return tenure;
        return std::min<std::size_t>(20, (n_bits + 3) / 4);
    }
};

struct TabuResult {
    Bits best_bits;
    double best_value = 0.0;
    std::size_t restarts_used = 0;
    std::size_t evaluations = 0;
    std::uint64_t seed = 0;
};

namespace detail {

struct SharedBest {
    std::mutex mutex;
    double value;
    Bits bits;
    std::size_t restart = 0;
};

inline bool lex_less(const Bits& a, const Bits& b) { return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end()); }

template <PseudoBooleanProblem P>
std::size_t tabu_restart(const P& problem, const TabuParams& params, std::size_t r, SharedBest& shared, bool lock) {
    const std::size_t n = problem.size();
    const std::size_t tenure = params.effective_tenure(n);
    std::mt19937_64 rng(params.seed * 0x9E3779B97F4A7C15ULL + r);
    Bits start(n, 0);
    if (r > 0) {
        std::bernoulli_distribution coin(0.5);
        for (auto& b : start) b = coin(rng) ? 1 : 0;
    }
    auto state = problem.make_state();
    state.reset(start);
    std::size_t evaluations = 1;

    auto read_best = [&] {
        if (!lock) return shared.value;
        std::scoped_lock g(shared.mutex);
        return shared.value;
    };
    auto offer = [&](std::size_t it) {
        auto update = [&] {
            if (state.value() < shared.value) {
                shared.value = state.value();
                shared.bits = state.bits();
                shared.restart = r;
                if (params.trace) *params.trace << r << ' ' << it << ' ' << shared.value << '\n';
            }
        };
        if (lock) {
            std::scoped_lock g(shared.mutex);
            update();
        } else {
            update();
        }
    };
    offer(0);

    std::vector<std::size_t> tabu_until(n, 0);
    for (std::size_t it = 1; it <= params.iters_per_restart; ++it) {
        const double global_best = read_best();
        const double current = state.value();
        std::optional<std::size_t> move;
        double move_value = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double v = current + state.delta(k);
            ++evaluations;
            bool allowed = tabu_until[k] <= it || v < global_best;
            if (allowed && (!move || v < move_value)) {
                move = k;
                move_value = v;
            }
        }
        if (!move) continue;
        state.flip(*move);
        tabu_until[*move] = it + tenure;
        if (state.value() < global_best) offer(it);
    }
    return evaluations;
}

} // namespace detail

/// Multistart tabu search over single-bit flips. Restart 0 starts from all zeros, the others from
/// independent uniform random bit strings. A flipped bit stays tabu for `tenure` iterations unless
/// the move improves on the best value found so far.
template <PseudoBooleanProblem P>
TabuResult tabu_search(const P& problem, const TabuParams& params = {}) {
    const std::size_t n = problem.size();
    require(n >= 1, "tabu search needs at least one bit");
    require(params.restarts >= 1 && params.iters_per_restart >= 1, "tabu parameters must be positive");

    detail::SharedBest shared;
    shared.bits.assign(n, 0);
    shared.value = problem.evaluate(shared.bits);
    std::size_t evaluations = 1;

    const std::size_t threads = params.deterministic ? 1 : std::max<std::size_t>(1, params.threads ? params.threads : std::thread::hardware_concurrency());
    if (threads <= 1) {
        for (std::size_t r = 0; r < params.restarts; ++r) evaluations += detail::tabu_restart(problem, params, r, shared, false);
    } else {
        std::mutex count_mutex;
        std::size_t next = 0;
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t r;
                    {
                        std::scoped_lock g(count_mutex);
                        if (next >= params.restarts) return;
                        r = next++;
                    }
                    std::size_t ev = detail::tabu_restart(problem, params, r, shared, true);
                    std::scoped_lock g(count_mutex);
                    evaluations += ev;
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    TabuResult res;
    res.best_bits = shared.bits;
    res.best_value = problem.evaluate(res.best_bits);
    res.restarts_used = params.restarts;
    res.evaluations = evaluations;
    res.seed = params.seed;
    return res;
}

inline constexpr std::size_t kBruteForceMaxBits = 24;

/// Exhaustive minimization over all 2^N bit strings (Gray-code order, one flip per step).
/// Ties go to the lexicographically smallest bit string.
template <PseudoBooleanProblem P>
TabuResult brute_force_pbo(const P& problem) {
    const std::size_t n = problem.size();
    require(n >= 1, "brute force needs at least one bit");
    require(n <= kBruteForceMaxBits, "brute force limited to " + std::to_string(kBruteForceMaxBits) + " bits");
    auto state = problem.make_state();
    Bits bits(n, 0);
    state.reset(bits);
    Bits best = bits;
    double best_value = state.value();
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t g = 1; g < total; ++g) {
        // Gray code step: flip the bit at the position of the lowest set bit of g.
        std::size_t k = static_cast<std::size_t>(std::countr_zero(g));
        state.flip(k);
        double v = state.value();
        if (v < best_value || (v == best_value && detail::lex_less(state.bits(), best))) {
            best_value = v;
            best = state.bits();
        }
    }
    TabuResult res;
    res.best_bits = std::move(best);
    res.best_value = problem.evaluate(res.best_bits);
    res.restarts_used = 0;
    res.evaluations = static_cast<std::size_t>(total);
    return res;
}

} // namespace cpboost
