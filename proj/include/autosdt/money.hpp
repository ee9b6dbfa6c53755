#pragma once

#include <autosdt/errors.hpp>

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>

namespace autosdt {

// Exact USD amounts as a nano-dollar fixed point. All ledger arithmetic is
// integer arithmetic, so per-stage sums and totals are exact; floating point
// never touches money.
struct Usd {
    static constexpr std::int64_t kNanosPerDollar = 1'000'000'000;

    std::int64_t nanos = 0;

    static Usd zero() { return Usd{0}; }
    static Usd from_nanos(std::int64_t n) { return Usd{n}; }

    // Parses a non-negative decimal string ("2955", "0.07", "2.50") exactly.
    // At most nine fraction digits are representable.
    static Usd from_decimal(std::string_view text) {
        std::string s{text};
        if (s.empty()) throw ConfigError("empty money literal");
        size_t dot = s.find('.');
        std::string whole = dot == std::string::npos ? s : s.substr(0, dot);
        std::string frac = dot == std::string::npos ? "" : s.substr(dot + 1);
        if (whole.empty() && frac.empty()) throw ConfigError("malformed money literal: " + s);
        if (frac.size() > 9) throw ConfigError("money literal finer than nano-dollars: " + s);
        std::int64_t n = 0;
        for (char c : whole) {
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw ConfigError("malformed money literal: " + s);
            n = n * 10 + (c - '0');
            if (n > 9'000'000'000) throw ConfigError("money literal out of range: " + s);
        }
        n *= kNanosPerDollar;
        std::int64_t scale = kNanosPerDollar / 10;
        for (char c : frac) {
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw ConfigError("malformed money literal: " + s);
            n += (c - '0') * scale;
            scale /= 10;
        }
        return Usd{n};
    }

    Usd& operator+=(Usd other) {
        nanos += other.nanos;
        return *this;
    }
    friend Usd operator+(Usd a, Usd b) { return Usd{a.nanos + b.nanos}; }
    friend bool operator==(Usd a, Usd b) { return a.nanos == b.nanos; }
    friend bool operator!=(Usd a, Usd b) { return a.nanos != b.nanos; }
    friend bool operator<(Usd a, Usd b) { return a.nanos < b.nanos; }

    // Full-precision decimal string, trailing fraction zeros trimmed but at
    // least two places kept ("2955.00", "0.07, "1.2345").
    std::string to_string() const {
        std::int64_t whole = nanos / kNanosPerDollar;
        std::int64_t frac = nanos % kNanosPerDollar;
        std::string f = std::to_string(frac);
        f.insert(f.begin(), 9 - f.size(), '0');
        while (f.size() > 2 && f.back() == '0') f.pop_back();
        return std::to_string(whole) + "." + f;
    }

    // Rounded to cents, half away from zero. Used for per-task cost display.
    std::string to_string_cents() const {
        std::int64_t cents = (nanos + kNanosPerDollar / 200) / (kNanosPerDollar / 100);
        std::string f = std::to_string(cents % 100);
        if (f.size() < 2) f.insert(f.begin(), '0');
        return std::to_string(cents / 100) + "." + f;
    }

    // Exact division by a positive count, rounding half up at the nano level.
    Usd divided_by(std::int64_t count) const {
        if (count <= 0) throw Error("division of money by non-positive count");
        return Usd{(nanos + count / 2) / count};
    }
};

// Per-token price. Configured as "USD per million tokens"; a decimal with at
// most three fraction digits maps exactly onto integer nanos per token.
struct TokenRate {
    std::int64_t nanos_per_token = 0;

    static TokenRate from_usd_per_mtok(std::string_view text) {
        Usd per_mtok = Usd::from_decimal(text);
        if (per_mtok.nanos % 1'000'000 != 0)
            throw ConfigError("token rate finer than representable: " + std::string(text));
        return TokenRate{per_mtok.nanos / 1'000'000};
    }

    Usd cost(std::int64_t tokens) const {
        if (tokens < 0) throw Error("negative token count");
        return Usd{tokens * nanos_per_token};
    }
};

} // namespace autosdt
