#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "cpboost/core.hpp"
#include "cpboost/dataset.hpp"

namespace cpboost {

/// Single-feature threshold classifier: polarity * sign(x[feature] - threshold), sign(0) = +1.
struct Stump {
    std::size_t feature = 0;
    double threshold = 0.0;
    int polarity = 1;

    int operator()(std::span<const double> x) const { return x[feature] >= threshold ? polarity : -polarity; }

    auto key() const { return std::tuple(feature, threshold, polarity); }
    bool operator==(const Stump&) const = default;
};

struct HypothesisColumn {
    Stump stump;
    Response responses;

    bool operator==(const HypothesisColumn&) const = default;
};

inline const Response& responses_of(const Response& r) { return r; }
inline const Response& responses_of(const HypothesisColumn& c) { return c.responses; }

template <class T>
concept ColumnLike = requires(const T& c) {
    { responses_of(c) } -> std::convertible_to<const Response&>;
};

inline Response evaluate_stump(const Stump& s, const Dataset& data) {
    Response r(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) r[i] = static_cast<std::int8_t>(s(data.row(i)));
    return r;
}

/// Edge of a column under sample weights u: sum_i u_i y_i h_i.
template <ColumnLike Col>
double edge(const Col& col, std::span<const double> u, std::span<const int> labels) {
    const auto& h = responses_of(col);
    double e = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) e += u[i] * labels[i] * h[i];
    return e;
}

/// Finite set of decision stumps over the training set, deduplicated by response vector,
/// together with the set of columns already handed out by the oracle.
class Dictionary {
public:
    Dictionary() = default;

    /// Builds a dictionary from explicit columns (first occurrence of each response vector wins).
    explicit Dictionary(std::vector<HypothesisColumn> columns) {
        for (auto& c : columns) add(std::move(c));
    }

    std::size_t size() const { return columns_.size(); }
    const HypothesisColumn& operator[](std::size_t k) const { return columns_[k]; }
    const std::vector<HypothesisColumn>& columns() const { return columns_; }
    std::size_t raw_candidates() const { return raw_candidates_; }

    std::optional<std::size_t> find(const Response& r) const {
        auto it = index_.find(key_of(r));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    bool is_blacklisted(std::size_t k) const { return blacklisted_[k]; }
    std::size_t blacklisted_count() const { return static_cast<std::size_t>(std::count(blacklisted_.begin(), blacklisted_.end(), true)); }
    bool exhausted() const { return blacklisted_count() == size(); }

    void blacklist(const HypothesisColumn& col) {
        auto k = find(col.responses);
        require(k.has_value(), "cannot blacklist a column that is not in the dictionary");
        blacklisted_[*k] = true;
    }

    void clear_blacklist() { std::fill(blacklisted_.begin(), blacklisted_.end(), false); }

    bool add(HypothesisColumn col) {
        auto key = key_of(col.responses);
        if (index_.contains(key)) return false;
        index_.emplace(std::move(key), columns_.size());
        columns_.push_back(std::move(col));
        blacklisted_.push_back(false);
        return true;
    }

    void set_raw_candidates(std::size_t n) { raw_candidates_ = n; }

private:
    static std::string key_of(const Response& r) {
        std::string k(r.size(), '\0');
        for (std::size_t i = 0; i < r.size(); ++i) k[i] = r[i] > 0 ? '+' : '-';
        return k;
    }

    std::vector<HypothesisColumn> columns_;
    std::vector<bool> blacklisted_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t raw_candidates_ = 0;
};

/// Sorted distinct values of one feature, midpoints between neighbours, plus one sentinel
/// half a minimal gap below the minimum and one above the maximum.
inline std::vector<double> candidate_thresholds(const Dataset& train, std::size_t feature) {
    std::vector<double> v(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) v[i] = train.x(i, feature);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < v.size(); ++k) gap = std::min(gap, v[k] - v[k - 1]);
    double half = std::isfinite(gap) ? gap / 2.0 : 0.5;
    std::vector<double> t;
    t.reserve(v.size() + 1);
    t.push_back(v.front() - half);
    for (std::size_t k = 1; k < v.size(); ++k) t.push_back(v[k - 1] + (v[k] - v[k - 1]) / 2.0);
    t.push_back(v.back() + half);
    return t;
}

/// All stumps in (feature, threshold, polarity) lexicographic order, collapsed by response vector.
inline Dictionary enumerate_candidates(const Dataset& train) {
    require(train.size() > 0, "training set is empty");
    Dictionary dict;
    std::size_t raw = 0;
    for (std::size_t j = 0; j < train.dimension(); ++j) {
        for (double t : candidate_thresholds(train, j)) {
            for (int polarity : {-1, 1}) {
                Stump s{j, t, polarity};
                dict.add({s, evaluate_stump(s, train)});
                ++raw;
            }
        }
    }
    dict.set_raw_candidates(raw);
    return dict;
}

struct OracleChoice {
    std::size_t index;
    double edge;
};

/// Most violated dual constraint among the columns not yet blacklisted; ties go to the
/// earliest entry, which is the lexicographically smallest stump.
inline std::optional<OracleChoice> oracle_best_index(const Dictionary& dict, std::span<const double> u,
                                                     std::span<const int> labels) {
    bool nonzero = false;
    for (double v : u) {
        require(v >= 0.0, "oracle weights must be nonnegative");
        nonzero = nonzero || v > 0.0;
    }
    require(nonzero, "oracle weights must not be all zero");
    std::optional<OracleChoice> best;
    for (std::size_t k = 0; k < dict.size(); ++k) {
        if (dict.is_blacklisted(k)) continue;
        double e = edge(dict[k], u, labels);
        if (!best || e > best->edge) best = OracleChoice{k, e};
    }
    return best;
}

inline std::optional<HypothesisColumn> oracle_best_column(const Dictionary& dict, std::span<const double> u,
                                                          std::span<const int> labels) {
    auto c = oracle_best_index(dict, u, labels);
    if (!c) return std::nullopt;
    return dict[c->index];
}

inline Dictionary& blacklist(Dictionary& dict, const HypothesisColumn& col) {
    dict.blacklist(col);
    return dict;
}

} // namespace cpboost
