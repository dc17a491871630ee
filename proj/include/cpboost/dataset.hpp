#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cpboost/core.hpp"

namespace cpboost {

/// Binary classification data: an m x d row-major feature matrix with +1/-1 labels.
class Dataset {
public:
    Dataset() = default;

    Dataset(std::size_t m, std::size_t d, std::vector<double> features, Labels labels,
            std::vector<std::string> feature_names = {})
        : m_(m), d_(d), features_(std::move(features)), labels_(std::move(labels)), names_(std::move(feature_names)) {
        validate();
    }

    std::size_t size() const { return m_; }
    std::size_t dimension() const { return d_; }

    double x(std::size_t i, std::size_t j) const { return features_[i * d_ + j]; }
    std::span<const double> row(std::size_t i) const { return {features_.data() + i * d_, d_}; }
    int y(std::size_t i) const { return labels_[i]; }

    const Labels& labels() const { return labels_; }
    const std::vector<double>& features() const { return features_; }
    const std::vector<std::string>& feature_names() const { return names_; }

    std::size_t count(int label) const {
        return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
    }

    /// Rows selected by `indices`, in the given order.
    Dataset subset(std::span<const std::size_t> indices) const {
        std::vector<double> f;
        f.reserve(indices.size() * d_);
        Labels l;
        l.reserve(indices.size());
        for (auto i : indices) {
            require(i < m_, "subset index out of range");
            auto r = row(i);
            f.insert(f.end(), r.begin(), r.end());
            l.push_back(labels_[i]);
        }
        Dataset out;
        out.m_ = indices.size();
        out.d_ = d_;
        out.features_ = std::move(f);
        out.labels_ = std::move(l);
        out.names_ = names_;
        return out;
    }

    bool operator==(const Dataset&) const = default;

private:
    void validate() const {
        require(features_.size() == m_ * d_, "feature matrix size does not match m x d");
        require(labels_.size() == m_, "label vector length does not match m");
        require(names_.empty() || names_.size() == d_, "feature name count does not match d");
        require(m_ >= 2, "dataset needs at least two examples");
        require(d_ >= 1, "dataset needs at least one feature");
        for (int l : labels_) require(l == 1 || l == -1, "labels must be -1 or +1");
        require(count(1) > 0 && count(-1) > 0, "dataset must contain both classes");
        for (std::size_t j = 0; j < d_; ++j) {
            bool any_finite = false;
            for (std::size_t i = 0; i < m_ && !any_finite; ++i) any_finite = std::isfinite(x(i, j));
            require(any_finite, "feature column " + std::to_string(j) + " has no finite value");
        }
    }

    std::size_t m_ = 0;
    std::size_t d_ = 0;
    std::vector<double> features_;
    Labels labels_;
    std::vector<std::string> names_;
};

struct Split {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> val_indices;
    std::uint64_t seed = 0;

    bool operator==(const Split&) const = default;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, char delimiter) {
    std::vector<std::string_view> out;
    if (delimiter == ' ' || delimiter == '\t') {
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
            if (i >= line.size()) break;
            std::size_t j = i;
            while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
            out.push_back(line.substr(i, j - i));
            i = j;
        }
        return out;
    }
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(delimiter, start);
        auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front()))) field.remove_prefix(1);
        while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) field.remove_suffix(1);
        out.push_back(field);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        // from_chars rejects "inf"/"nan" spellings on some libraries; fall back to strtod for those
        std::string tmp(s);
        char* end = nullptr;
        v = std::strtod(tmp.c_str(), &end);
        if (tmp.empty() || end != tmp.c_str() + tmp.size()) return std::nullopt;
    }
    return v;
}

} // namespace detail

/// Reads one example per row. `label_column` may be negative to count from the end (-1 = last field).
/// A leading row whose feature fields are not numeric is taken as a header of feature names.
inline Dataset load_delimited_stream(std::istream& in, int label_column = -1, char delimiter = ',') {
    std::vector<double> features;
    std::vector<double> raw_labels;
    std::vector<std::string> names;
    std::size_t fields_per_row = 0;
    std::size_t label_idx = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string_view sv(line);
        if (sv.find_first_not_of(" \t") == std::string_view::npos) continue;
        if (sv.front() == '#') continue;
        auto fields = detail::split_fields(sv, delimiter);
        if (fields_per_row == 0) {
            fields_per_row = fields.size();
            if (fields_per_row < 2) throw ParseError("need at least one feature and one label field", line_no, fields.size());
            long idx = label_column < 0 ? static_cast<long>(fields_per_row) + label_column : label_column;
            if (idx < 0 || idx >= static_cast<long>(fields_per_row))
                throw ParseError("label column out of range", line_no, static_cast<std::size_t>(label_column < 0 ? 0 : label_column));
            label_idx = static_cast<std::size_t>(idx);
            bool numeric = true;
            for (std::size_t j = 0; j < fields.size(); ++j)
                if (j != label_idx && !detail::parse_double(fields[j])) numeric = false;
            if (!numeric) {
                for (std::size_t j = 0; j < fields.size(); ++j)
                    if (j != label_idx) names.emplace_back(fields[j]);
                continue;
            }
        } else if (fields.size() != fields_per_row) {
            throw ParseError("row has " + std::to_string(fields.size()) + " fields, expected " + std::to_string(fields_per_row),
                             line_no, fields.size());
        }
        for (std::size_t j = 0; j < fields.size(); ++j) {
            auto v = detail::parse_double(fields[j]);
            if (!v) throw ParseError("cannot parse '" + std::string(fields[j]) + "' as a number", line_no, j);
            if (j == label_idx) {
                raw_labels.push_back(*v);
            } else {
                if (!std::isfinite(*v)) throw ParseError("non-finite feature value", line_no, j);
                features.push_back(*v);
            }
        }
        ++rows;
    }
    if (rows == 0) throw ParseError("no data rows", line_no, 0);

    bool has_zero = false, has_minus = false;
    for (std::size_t i = 0; i < raw_labels.size(); ++i) {
        double v = raw_labels[i];
        if (v == 0.0) has_zero = true;
        else if (v == -1.0) has_minus = true;
        else if (v != 1.0) throw ParseError("label must be -1/+1 or 0/1", i + 1, label_idx);
    }
    if (has_zero && has_minus) throw ParseError("labels mix 0 and -1 encodings", 0, label_idx);
    if (has_zero) log::info("labels encoded as {0,1}; remapping 0 -> -1");
    Labels labels;
    labels.reserve(raw_labels.size());
    for (double v : raw_labels) labels.push_back(v == 1.0 ? 1 : -1);

    if (std::count(labels.begin(), labels.end(), 1) == 0 || std::count(labels.begin(), labels.end(), -1) == 0)
        throw std::invalid_argument("dataset contains a single class");
    return Dataset(rows, fields_per_row - 1, std::move(features), std::move(labels), std::move(names));
}

inline Dataset load_delimited(const std::string& path, int label_column = -1, char delimiter = ',') {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_delimited_stream(in, label_column, delimiter);
}

/// Writes features followed by the label as the last field, with round-trip precision.
inline void write_delimited(std::ostream& out, const Dataset& data, char delimiter = ',') {
    auto old = out.precision(std::numeric_limits<double>::max_digits10);
    if (!data.feature_names().empty()) {
        for (const auto& n : data.feature_names()) out << n << delimiter;
        out << "label\n";
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < data.dimension(); ++j) out << data.x(i, j) << delimiter;
        out << data.y(i) << '\n';
    }
    out.precision(old);
}

/// Stratified, seeded 80/20 split. Each class lands in both parts whenever it has two or more examples.
inline Split split_80_20(const Dataset& data, std::uint64_t seed) {
    const std::size_t m = data.size();
    require(m >= 5, "split needs at least 5 examples");
    const std::size_t n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(m)));
    const std::size_t n_val = m - n_train;

    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < m; ++i) (data.y(i) == 1 ? pos : neg).push_back(i);

    auto clamp_share = [](long want, std::size_t n) {
        long lo = n >= 2 ? 1 : 0;
        long hi = n >= 2 ? static_cast<long>(n) - 1 : static_cast<long>(n);
        return std::clamp(want, lo, hi);
    };
    long val_pos = clamp_share(std::lround(static_cast<double>(n_val) * static_cast<double>(pos.size()) / static_cast<double>(m)), pos.size());
    long val_neg = static_cast<long>(n_val) - val_pos;
    long val_neg_clamped = clamp_share(val_neg, neg.size());
    if (val_neg_clamped != val_neg) {
        val_pos += val_neg - val_neg_clamped;
        val_neg = val_neg_clamped;
        val_pos = std::clamp(val_pos, 0L, static_cast<long>(pos.size()));
    }

    std::mt19937_64 rng(seed);
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);

    Split s;
    s.seed = seed;
    s.val_indices.assign(pos.begin(), pos.begin() + val_pos);
    s.val_indices.insert(s.val_indices.end(), neg.begin(), neg.begin() + val_neg);
    s.train_indices.assign(pos.begin() + val_pos, pos.end());
    s.train_indices.insert(s.train_indices.end(), neg.begin() + val_neg, neg.end());
    std::sort(s.train_indices.begin(), s.train_indices.end());
    std::sort(s.val_indices.begin(), s.val_indices.end());
    return s;
}

/// Two unit-variance isotropic Gaussian clusters centred at +/-(separation/2) e_1.
/// Even rows belong to the positive cluster, odd rows to the negative one.
inline Dataset make_synthetic_two_gaussians(std::size_t m, std::size_t d, double separation, std::uint64_t seed) {
    require(m >= 4 && m % 2 == 0, "synthetic data needs an even m >= 4");
    require(d >= 1, "synthetic data needs d >= 1");
    require(separation > 0.0, "separation must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> f(m * d);
    Labels y(m);
    for (std::size_t i = 0; i < m; ++i) {
        y[i] = (i % 2 == 0) ? 1 : -1;
        for (std::size_t j = 0; j < d; ++j) f[i * d + j] = noise(rng);
        f[i * d] += y[i] * separation / 2.0;
    }
    return Dataset(m, d, std::move(f), std::move(y));
}

} // namespace cpboost
