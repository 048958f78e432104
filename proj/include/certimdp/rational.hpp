#ifndef CERTIMDP_RATIONAL_HPP
#define CERTIMDP_RATIONAL_HPP

#include <boost/multiprecision/gmp.hpp>

#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>

namespace certimdp {

using Int = boost::multiprecision::mpz_int;
using Rational = boost::multiprecision::mpq_rational;

class rational_error : public std::runtime_error {
public:
    explicit rational_error(const std::string& what) : std::runtime_error(what) {}
};

/// Builds a canonical rational. Handles negative denominators; the GMP-backed
/// constructor must never see one.
inline Rational make_rational(Int num, Int den) {
    if (den == 0) throw rational_error("zero denominator");
    if (den < 0) { num = -num; den = -den; }
    Rational r(num, den);  // canonicalizes
    return r;
}

inline Int num(const Rational& r) { return numerator(r); }
inline Int den(const Rational& r) { return denominator(r); }

/// Canonical "num/den" form, always with an explicit denominator.
inline std::string rational_to_string(const Rational& r) {
    return numerator(r).str() + "/" + denominator(r).str();
}

namespace detail {

inline bool parse_int(const std::string& s, Int& out) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) return false;
    for (std::size_t j = i; j < s.size(); ++j)
        if (s[j] < '0' || s[j] > '9') return false;
    // GMP would read a leading zero as octal; strip it.
    std::size_t first = i;
    while (first + 1 < s.size() && s[first] == '0') ++first;
    out = Int(s.substr(first));
    if (s[0] == '-') out = -out;
    return true;
}

}  // namespace detail

/// Parses "num", "num/den" or a decimal like "0.25". With strict=true the
/// input must be exactly "num/den" in lowest terms with a positive
/// denominator (the certificate wire format).
inline Rational parse_rational(const std::string& text, bool strict = false) {
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        Int n, d;
        if (!detail::parse_int(text.substr(0, slash), n) ||
            !detail::parse_int(text.substr(slash + 1), d))
            throw rational_error("malformed rational: " + text);
        if (d <= 0) throw rational_error("non-positive denominator: " + text);
        if (strict && gcd(abs(n), d) != 1)
            throw rational_error("rational not in lowest terms: " + text);
        return make_rational(n, d);
    }
    if (strict) throw rational_error("expected num/den form: " + text);
    auto dot = text.find('.');
    if (dot != std::string::npos) {
        std::string digits = text.substr(0, dot) + text.substr(dot + 1);
        std::size_t frac_len = text.size() - dot - 1;
        if (frac_len == 0) throw rational_error("malformed decimal: " + text);
        Int n;
        if (!detail::parse_int(digits, n)) throw rational_error("malformed decimal: " + text);
        Int d = 1;
        for (std::size_t i = 0; i < frac_len; ++i) d *= 10;
        return make_rational(n, d);
    }
    Int n;
    if (!detail::parse_int(text, n)) throw rational_error("malformed rational: " + text);
    return Rational(n);
}

/// Denominator blow-up guard. CERTIMDP_MAX_DENOM_BITS, when set, bounds the
/// bit length of denominators on every serialization path. Errors out, never
/// rounds.
inline std::optional<unsigned> max_denom_bits() {
    const char* env = std::getenv("CERTIMDP_MAX_DENOM_BITS");
    if (!env || !*env) return std::nullopt;
    long v = std::strtol(env, nullptr, 10);
    if (v <= 0) return std::nullopt;
    return static_cast<unsigned>(v);
}

inline void check_denom_bits(const Rational& r) {
    auto limit = max_denom_bits();
    if (!limit) return;
    std::size_t bits = mpz_sizeinbase(denominator(r).backend().data(), 2);
    if (bits > *limit)
        throw rational_error("denominator exceeds CERTIMDP_MAX_DENOM_BITS (" +
                             std::to_string(bits) + " > " + std::to_string(*limit) + " bits)");
}

}  // namespace certimdp

#endif
