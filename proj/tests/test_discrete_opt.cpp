#include <gtest/gtest.h>

#include <bit>
#include <random>
#include <sstream>

#include "cpboost/discrete_opt.hpp"
#include "cpboost/testing/oracles.hpp"

using namespace cpboost;

namespace {

Bits from_string(const std::string& s) {
    Bits b;
    for (char c : s) b.push_back(c == '1' ? 1 : 0);
    return b;
}

Bits random_bits(std::size_t n, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(0.5);
    Bits b(n);
    for (auto& v : b) v = coin(rng) ? 1 : 0;
    return b;
}

BoostingRmp make_rmp(const oracle::RandomInstance& inst, unsigned B, double r, double nu, double lambda) {
    return BoostingRmp(inst.columns, inst.labels, nu, lambda, FixedPointCodec(B, r, inst.columns.size()));
}

} // namespace

TEST(Codec, Examples) {
    FixedPointCodec c(6, 6.3, 1);
    EXPECT_EQ(encode_decode(c, from_string("000000"))[0], 0.0);
    EXPECT_EQ(encode_decode(c, from_string("111111"))[0], 6.3);
    EXPECT_DOUBLE_EQ(encode_decode(c, from_string("100000"))[0], 0.1);
}

TEST(Codec, LengthMismatchRejected) {
    FixedPointCodec c(6, 1.0, 2);
    EXPECT_THROW(c.decode(from_string("111")), std::invalid_argument);
    EXPECT_THROW(FixedPointCodec(0, 1.0, 1), std::invalid_argument);
    EXPECT_THROW(FixedPointCodec(4, 0.0, 1), std::invalid_argument);
}

TEST(Codec, MonotoneAndInjectivePerWeight) {
    for (unsigned B : {1u, 3u, 6u, 10u}) {
        FixedPointCodec c(B, 2.7, 1);
        double prev = -1.0;
        for (std::uint32_t q = 0; q <= c.max_level(); ++q) {
            std::vector<std::uint32_t> lv{q};
            auto w = c.decode(c.encode_levels(lv));
            EXPECT_GT(w[0], prev);
            EXPECT_EQ(c.levels(c.encode_levels(lv))[0], q);
            prev = w[0];
        }
        EXPECT_EQ(prev, 2.7);
    }
}

TEST(Codec, LayoutIsContiguousLsbFirst) {
    FixedPointCodec c(3, 7.0, 2);
    auto w = c.decode(from_string("110001"));
    EXPECT_DOUBLE_EQ(w[0], 3.0);
    EXPECT_DOUBLE_EQ(w[1], 4.0);
    std::vector<double> target{3.2, 6.9};
    EXPECT_EQ(c.encode_nearest(target), from_string("110111"));
}

TEST(AdaptRange, Examples) {
    EXPECT_DOUBLE_EQ(adapt_range(std::vector<double>{1.0, 3.1}), 6.2);
    EXPECT_EQ(adapt_range(std::vector<double>{0.0, 0.0}), 1.0);
    EXPECT_EQ(adapt_range(std::vector<double>{0.2}, 1.0), 1.0);
    EXPECT_THROW(adapt_range(std::vector<double>{-1.0}), std::invalid_argument);
}

TEST(Tabu, PopcountObjective) {
    BlackBoxProblem p(4, [](std::span<const std::uint8_t> b) {
        return static_cast<double>(std::count(b.begin(), b.end(), 1));
    });
    auto r = tabu_search(p);
    EXPECT_EQ(r.best_value, 0.0);
    EXPECT_EQ(r.best_bits, Bits(4, 0));
}

TEST(Tabu, MatchesBruteForceOnTenBits) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto inst = oracle::random_instance(15, 2, seed);
        auto rmp = make_rmp(inst, 5, 4.0, 0.01, 0.5);
        ASSERT_EQ(rmp.size(), 10u);
        TabuParams tp;
        tp.seed = seed;
        EXPECT_EQ(tabu_search(rmp, tp).best_value, brute_force_pbo(rmp).best_value) << "seed " << seed;
    }
}

TEST(Tabu, Deterministic) {
    auto inst = oracle::random_instance(20, 3, 5);
    auto rmp = make_rmp(inst, 4, 3.0, 0.01, 0.3);
    TabuParams tp;
    tp.seed = 17;
    tp.restarts = 4;
    tp.iters_per_restart = 200;
    auto a = tabu_search(rmp, tp);
    auto b = tabu_search(rmp, tp);
    EXPECT_EQ(a.best_bits, b.best_bits);
    EXPECT_EQ(a.best_value, b.best_value);
    EXPECT_EQ(a.evaluations, b.evaluations);
    EXPECT_EQ(a.seed, 17u);
}

TEST(Tabu, ThreadedNeverWorseThanZeroStart) {
    auto inst = oracle::random_instance(30, 4, 8);
    auto rmp = make_rmp(inst, 4, 4.0, 0.01, 0.2);
    TabuParams tp;
    tp.deterministic = false;
    tp.threads = 4;
    tp.iters_per_restart = 300;
    auto r = tabu_search(rmp, tp);
    EXPECT_LE(r.best_value, rmp.evaluate(Bits(rmp.size(), 0)));
    EXPECT_EQ(r.best_value, rmp.evaluate(r.best_bits));
    EXPECT_EQ(r.restarts_used, tp.restarts);
}

TEST(Tabu, ResultIsReevaluatedExactly) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto inst = oracle::random_instance(25, 3, seed + 40);
        auto rmp = make_rmp(inst, 4, 5.0, 0.001, 1.0);
        TabuParams tp;
        tp.seed = seed;
        tp.iters_per_restart = 100;
        auto r = tabu_search(rmp, tp);
        EXPECT_EQ(r.best_value, rmp.evaluate(r.best_bits));
        EXPECT_LE(r.best_value, rmp.evaluate(Bits(rmp.size(), 0)));
    }
}

TEST(Tabu, TraceOneLinePerImprovement) {
    auto inst = oracle::random_instance(12, 2, 1);
    auto rmp = make_rmp(inst, 4, 3.0, 0.01, 0.1);
    std::ostringstream trace;
    trace.precision(17);
    TabuParams tp;
    tp.trace = &trace;
    tp.restarts = 3;
    tp.iters_per_restart = 50;
    auto r = tabu_search(rmp, tp);
    std::istringstream in(trace.str());
    std::size_t restart, it;
    double v, last = std::numeric_limits<double>::infinity();
    std::size_t lines = 0;
    while (in >> restart >> it >> v) {
        EXPECT_LT(v, last);
        last = v;
        ++lines;
    }
    EXPECT_GT(lines, 0u);
    EXPECT_EQ(last, r.best_value);
}

TEST(Tabu, TenureDefault) {
    TabuParams tp;
    EXPECT_EQ(tp.effective_tenure(10), 3u);
    EXPECT_EQ(tp.effective_tenure(12), 3u);
    EXPECT_EQ(tp.effective_tenure(200), 20u);
    tp.tenure = 7;
    EXPECT_EQ(tp.effective_tenure(200), 7u);
}

TEST(BruteForce, LexicographicTieBreak) {
    BlackBoxProblem p(2, [](std::span<const std::uint8_t> b) {
        static const double table[2][2] = {{3.0, 1.0}, {1.0, 2.0}};
        return table[b[0]][b[1]];
    });
    auto r = brute_force_pbo(p);
    EXPECT_EQ(r.best_bits, from_string("01"));
    EXPECT_EQ(r.best_value, 1.0);
}

TEST(BruteForce, TooLargeRejected) {
    BlackBoxProblem p(25, [](std::span<const std::uint8_t>) { return 0.0; });
    EXPECT_THROW(brute_force_pbo(p), std::invalid_argument);
}

TEST(BruteForce, NeverWorseThanTabu) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        auto inst = oracle::random_instance(18, 3, seed + 3);
        auto rmp = make_rmp(inst, 4, 4.0, 0.01, 0.4);
        TabuParams tp;
        tp.seed = seed;
        tp.restarts = 2;
        tp.iters_per_restart = 30;
        EXPECT_LE(brute_force_pbo(rmp).best_value, tabu_search(rmp, tp).best_value);
    }
}

TEST(BruteForce, MatchesDecodedGridOnTwelveBits) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto inst = oracle::random_instance(20, 2, seed + 11);
        const double nu = 0.01, lambda = 0.7;
        FixedPointCodec codec(6, 5.0, 2);
        BoostingRmp rmp(inst.columns, inst.labels, nu, lambda, codec);
        auto bf = brute_force_pbo(rmp);
        auto grid = oracle::decoded_grid_search(inst.responses, inst.labels, nu, lambda, codec);
        EXPECT_NEAR(bf.best_value, grid.value, 1e-9 * grid.value);
        EXPECT_EQ(codec.levels(bf.best_bits), grid.levels);
    }
}

TEST(BruteForce, BlackBoxMatchesEnumeration) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<double> table(1 << 9);
    for (auto& v : table) v = U(rng);
    BlackBoxProblem p(9, [&](std::span<const std::uint8_t> b) {
        std::size_t idx = 0;
        for (std::size_t k = 0; k < b.size(); ++k) idx |= static_cast<std::size_t>(b[k]) << k;
        return table[idx];
    });
    auto best = std::min_element(table.begin(), table.end());
    auto r = brute_force_pbo(p);
    EXPECT_EQ(r.best_value, *best);
    std::size_t idx = 0;
    for (std::size_t k = 0; k < 9; ++k) idx |= static_cast<std::size_t>(r.best_bits[k]) << k;
    EXPECT_EQ(idx, static_cast<std::size_t>(best - table.begin()));
}

TEST(Rmp, EvaluateMatchesScalarFormula) {
    std::mt19937_64 rng(6);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto inst = oracle::random_instance(10 + seed, 3, seed);
        FixedPointCodec codec(5, 3.5, 3);
        BoostingRmp rmp(inst.columns, inst.labels, 0.02, 0.25, codec);
        auto bits = random_bits(rmp.size(), rng);
        double ref = oracle::scalar_cp_objective(inst.responses, inst.labels, codec.decode(bits), 0.02, 0.25);
        EXPECT_NEAR(rmp.evaluate(bits), ref, 1e-13 * ref);
    }
}

TEST(Rmp, IncrementalMatchesFromScratch) {
    std::mt19937_64 rng(7);
    auto inst = oracle::random_instance(50, 4, 1);
    auto rmp = make_rmp(inst, 6, 4.0, 0.01, 0.3);
    auto state = rmp.make_state();
    state.reset(random_bits(rmp.size(), rng));
    std::uniform_int_distribution<std::size_t> pick(0, rmp.size() - 1);
    for (int f = 0; f < 100; ++f) {
        std::size_t k = pick(rng);
        double predicted = state.value() + state.delta(k);
        state.flip(k);
        double scratch = rmp.evaluate(state.bits());
        EXPECT_NEAR(state.value(), scratch, 1e-9);
        EXPECT_NEAR(predicted, scratch, 1e-9);
        auto g = state.margins();
        auto ref = margins(inst.columns, rmp.codec().decode(state.bits()), inst.labels);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], ref[i], 1e-12);
    }
}

TEST(Rmp, FlipUnflipIsInvolution) {
    std::mt19937_64 rng(8);
    auto inst = oracle::random_instance(30, 3, 2);
    auto rmp = make_rmp(inst, 6, 2.0, 0.05, 0.5);
    auto state = rmp.make_state();
    state.reset(random_bits(rmp.size(), rng));
    double v0 = state.value();
    for (std::size_t k = 0; k < rmp.size(); ++k) {
        state.flip(k);
        state.flip(k);
        EXPECT_NEAR(state.value(), v0, 1e-12);
    }
}

TEST(Rmp, CardinalityStep) {
    auto inst = oracle::random_instance(20, 3, 3);
    const double lambda = 0.75;
    auto with = make_rmp(inst, 4, 2.0, 0.01, lambda);
    auto without = make_rmp(inst, 4, 2.0, 0.01, 0.0);
    Bits bits(with.size(), 0);
    bits[0] = 1;  // weight 0 nonzero, weight 1 zero
    for (std::size_t k = 4; k < 8; ++k) {
        auto s1 = with.make_state();
        auto s0 = without.make_state();
        s1.reset(bits);
        s0.reset(bits);
        EXPECT_NEAR(s1.delta(k) - s0.delta(k), lambda, 1e-12);
        s1.flip(k);
        s0.flip(k);
        EXPECT_NEAR((s1.value() - s0.value()) - (with.evaluate(bits) - without.evaluate(bits)), lambda, 1e-12);
    }
}

TEST(Rmp, RejectsMismatchedCodec) {
    auto inst = oracle::random_instance(5, 2, 0);
    EXPECT_THROW(BoostingRmp(inst.columns, inst.labels, 0.1, 0.0, FixedPointCodec(4, 1.0, 3)), std::invalid_argument);
    EXPECT_THROW(BoostingRmp(inst.columns, inst.labels, 0.1, -1.0, FixedPointCodec(4, 1.0, 2)), std::invalid_argument);
}
