#pragma once

#include <cstdint>
#include <cstring>
#include <functional>
#include <iostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpboost {

/// Responses of a {-1, +1}-valued hypothesis on the training examples.
using Response = std::vector<std::int8_t>;

/// Labels are stored as +1 / -1.
using Labels = std::vector<int>;

/// Bit patterns for the discrete solvers, one byte (0 or 1) per bit.
using Bits = std::vector<std::uint8_t>;

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t row, std::size_t column)
        : std::runtime_error(what + " (row " + std::to_string(row) + ", column " + std::to_string(column) + ")"),
          row(row),
          column(column) {}

    std::size_t row;
    std::size_t column;
};

namespace log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

struct Sink {
    Level threshold = Level::warn;
    std::function<void(Level, const std::string&)> write = [](Level level, const std::string& msg) {
        static constexpr const char* names[] = {"debug", "info", "warn", "error"};
        std::clog << "[cpboost " << names[static_cast<int>(level)] << "] " << msg << '\n';
    };
};

inline Sink& sink() {
    static Sink s;
    return s;
}

inline void emit(Level level, const std::string& msg) {
    auto& s = sink();
    if (level >= s.threshold && s.write) s.write(level, msg);
}

inline void debug(const std::string& msg) { emit(Level::debug, msg); }
inline void info(const std::string& msg) { emit(Level::info, msg); }
inline void warn(const std::string& msg) { emit(Level::warn, msg); }

} // namespace log

/// FNV-1a over the raw bytes of a double vector; used to fingerprint dual weights in iteration logs.
inline std::uint64_t digest(std::span<const double> values) {
    std::uint64_t h = 1469598103934665603ULL;
    for (double v : values) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

inline std::string to_hex(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

} // namespace cpboost
