#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace qidiv {

// c = num/den
struct RationalC {
    std::uint64_t num = 2;
    std::uint64_t den = 1;
    bool operator==(const RationalC&) const = default;
};

// c = (num/den)^(1/root), root >= 2, num/den not a perfect power dividing root
struct RationalRootC {
    std::uint64_t num = 2;
    std::uint64_t den = 1;
    unsigned root = 2;
    bool operator==(const RationalRootC&) const = default;
};

// c with c^j irrational for every j >= 1, on the caller's word
struct GenericC {
    std::string text;
    long double value = 0;
    bool operator==(const GenericC& o) const { return text == o.text; }
};

using CBase = std::variant<RationalC, RationalRootC, GenericC>;

enum class DivisibilityClass { ID, ID0, ID00 };

enum class Target { Rho, Mu };

inline const char* to_string(DivisibilityClass d) {
    switch (d) {
        case DivisibilityClass::ID: return "ID";
        case DivisibilityClass::ID0: return "ID0";
        case DivisibilityClass::ID00: return "ID00";
    }
    return "?";
}

inline DivisibilityClass parse_class(std::string_view s) {
    if (s == "ID") return DivisibilityClass::ID;
    if (s == "ID0") return DivisibilityClass::ID0;
    if (s == "ID00") return DivisibilityClass::ID00;
    throw std::invalid_argument("unknown divisibility class: " + std::string(s));
}

struct ModelParams {
    CBase c;
    mpq_class p, q, r;
    int k = 0;

    bool operator==(const ModelParams& o) const {
        return c == o.c && p == o.p && q == o.q && r == o.r && k == o.k;
    }
};

// Textual record prior to validation.
struct RawParams {
    std::string c, p, q, r;
    long long k = 0;
};

class ParamError : public std::invalid_argument {
public:
    enum class Code { Parse, SumNotOne, DegenerateProcess, CNotGreaterOne, KOutOfRange };
    ParamError(Code code, const std::string& what) : std::invalid_argument(what), code_(code) {}
    Code code() const noexcept { return code_; }

private:
    Code code_;
};

inline const char* to_string(ParamError::Code c) {
    switch (c) {
        case ParamError::Code::Parse: return "ParseError";
        case ParamError::Code::SumNotOne: return "SumNotOne";
        case ParamError::Code::DegenerateProcess: return "DegenerateProcess";
        case ParamError::Code::CNotGreaterOne: return "CNotGreaterOne";
        case ParamError::Code::KOutOfRange: return "KOutOfRange";
    }
    return "?";
}

inline constexpr int default_k_guard = 64;

namespace detail {

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char ch : s)
        if (ch < '0' || ch > '9') return false;
    return true;
}

[[noreturn]] inline void parse_fail(std::string_view what, std::string_view text) {
    throw ParamError(ParamError::Code::Parse,
                     std::string("cannot parse ") + std::string(what) + " '" + std::string(text) + "'");
}

inline std::uint64_t to_u64(const mpz_class& z, std::string_view text) {
    if (sgn(z) < 0 || mpz_sizeinbase(z.get_mpz_t(), 2) > 63) parse_fail("integer (out of range)", text);
    std::uint64_t v = 0;
    mpz_export(&v, nullptr, -1, sizeof v, 0, 0, z.get_mpz_t());
    return v;
}

inline mpz_class from_u64(std::uint64_t v) {
    mpz_class z;
    mpz_import(z.get_mpz_t(), 1, -1, sizeof v, 0, 0, &v);
    return z;
}

// Integer d-th root if x is a perfect d-th power.
inline std::optional<std::uint64_t> exact_root(std::uint64_t x, unsigned d) {
    mpz_class z = from_u64(x), root;
    if (mpz_root(root.get_mpz_t(), z.get_mpz_t(), d) == 0) return std::nullopt;
    return mpz_get_ui(root.get_mpz_t());
}

}  // namespace detail

// Accepts "a", "a/b", "0.35", "-1/2"; exponent notation is rejected.
inline mpq_class parse_rational(std::string_view text) {
    std::string s = detail::trim(text);
    bool neg = false;
    std::string body = s;
    if (!body.empty() && (body[0] == '-' || body[0] == '+')) {
        neg = body[0] == '-';
        body.erase(0, 1);
    }
    mpq_class out;
    auto slash = body.find('/');
    auto dot = body.find('.');
    if (slash != std::string::npos) {
        std::string a = body.substr(0, slash), b = body.substr(slash + 1);
        if (!detail::all_digits(a) || !detail::all_digits(b)) detail::parse_fail("rational", text);
        mpz_class den(b, 10);
        if (den == 0) detail::parse_fail("rational (zero denominator)", text);
        out = mpq_class(mpz_class(a, 10), den);
    } else if (dot != std::string::npos) {
        std::string ip = body.substr(0, dot), fp = body.substr(dot + 1);
        if (ip.empty() && fp.empty()) detail::parse_fail("decimal", text);
        if (ip.empty()) ip = "0";
        if (!detail::all_digits(ip) || (!fp.empty() && !detail::all_digits(fp))) detail::parse_fail("decimal", text);
        mpz_class scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 10, fp.size());
        out = mpq_class(mpz_class(ip + fp, 10), scale);
    } else {
        if (!detail::all_digits(body)) detail::parse_fail("rational", text);
        out = mpq_class(mpz_class(body, 10));
    }
    out.canonicalize();
    return neg ? mpq_class(-out) : out;
}

inline std::string format_rational(const mpq_class& x) {
    return x.get_den() == 1 ? x.get_num().get_str() : x.get_str();
}

inline long double c_value(const CBase& c) {
    return std::visit(
        [](const auto& v) -> long double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, RationalC>) {
                return static_cast<long double>(v.num) / static_cast<long double>(v.den);
            } else if constexpr (std::is_same_v<T, RationalRootC>) {
                return std::pow(static_cast<long double>(v.num) / static_cast<long double>(v.den),
                                1.0L / static_cast<long double>(v.root));
            } else {
                return v.value;
            }
        },
        c);
}

inline long double log_c(const CBase& c) {
    return std::visit(
        [](const auto& v) -> long double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, RationalC>) {
                return std::log(static_cast<long double>(v.num)) - std::log(static_cast<long double>(v.den));
            } else if constexpr (std::is_same_v<T, RationalRootC>) {
                return (std::log(static_cast<long double>(v.num)) - std::log(static_cast<long double>(v.den))) /
                       static_cast<long double>(v.root);
            } else {
                return std::log(v.value);
            }
        },
        c);
}

// Reduce num/den and collapse RationalRoot to the smallest admissible root.
inline CBase normalize(CBase c) {
    if (auto* rc = std::get_if<RationalC>(&c)) {
        if (rc->den == 0) throw ParamError(ParamError::Code::Parse, "c has zero denominator");
        auto g = std::gcd(rc->num, rc->den);
        rc->num /= g;
        rc->den /= g;
        if (rc->num <= rc->den) throw ParamError(ParamError::Code::CNotGreaterOne, "c must exceed 1");
        return c;
    }
    if (auto* rr = std::get_if<RationalRootC>(&c)) {
        if (rr->den == 0 || rr->root == 0) throw ParamError(ParamError::Code::Parse, "malformed root form of c");
        auto g = std::gcd(rr->num, rr->den);
        rr->num /= g;
        rr->den /= g;
        if (rr->num <= rr->den) throw ParamError(ParamError::Code::CNotGreaterOne, "c must exceed 1");
        bool changed = true;
        while (changed && rr->root > 1) {
            changed = false;
            for (unsigned d = rr->root; d >= 2; --d) {
                if (rr->root % d) continue;
                auto a = detail::exact_root(rr->num, d);
                auto b = detail::exact_root(rr->den, d);
                if (a && b) {
                    rr->num = *a;
                    rr->den = *b;
                    rr->root /= d;
                    changed = true;
                    break;
                }
            }
        }
        if (rr->root == 1) return RationalC{rr->num, rr->den};
        return c;
    }
    auto& gc = std::get<GenericC>(c);
    if (!(gc.value > 1)) throw ParamError(ParamError::Code::CNotGreaterOne, "c must exceed 1");
    return c;
}

// "2", "3/2", "1.5", "2^(1/2)", "(3/2)^(1/3)", "generic:1.4142135623"
inline CBase parse_c(std::string_view text) {
    std::string s = detail::trim(text);
    if (s.rfind("generic:", 0) == 0) {
        std::string v = detail::trim(s.substr(8));
        mpq_class exact = parse_rational(v);
        return normalize(GenericC{v, static_cast<long double>(exact.get_d())});
    }
    auto caret = s.find('^');
    std::string base = s, expo;
    if (caret != std::string::npos) {
        base = s.substr(0, caret);
        expo = s.substr(caret + 1);
        if (base.size() >= 2 && base.front() == '(' && base.back() == ')') base = base.substr(1, base.size() - 2);
        if (expo.size() >= 2 && expo.front() == '(' && expo.back() == ')') expo = expo.substr(1, expo.size() - 2);
        if (expo.rfind("1/", 0) != 0 || !detail::all_digits(expo.substr(2))) detail::parse_fail("c", text);
    }
    mpq_class b = parse_rational(base);
    if (sgn(b) <= 0) detail::parse_fail("c", text);
    auto num = detail::to_u64(b.get_num(), text);
    auto den = detail::to_u64(b.get_den(), text);
    if (caret == std::string::npos) return normalize(RationalC{num, den});
    unsigned long root = std::stoul(expo.substr(2));
    if (root == 0 || root > 64) detail::parse_fail("c (root out of range)", text);
    return normalize(RationalRootC{num, den, static_cast<unsigned>(root)});
}

inline std::string format_c(const CBase& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, RationalC>) {
                return v.den == 1 ? std::to_string(v.num) : std::to_string(v.num) + "/" + std::to_string(v.den);
            } else if constexpr (std::is_same_v<T, RationalRootC>) {
                std::string b = v.den == 1 ? std::to_string(v.num)
                                           : "(" + std::to_string(v.num) + "/" + std::to_string(v.den) + ")";
                return b + "^(1/" + std::to_string(v.root) + ")";
            } else {
                return "generic:" + v.text;
            }
        },
        c);
}

inline bool is_generic(const CBase& c) { return std::holds_alternative<GenericC>(c); }

inline ModelParams validate(const CBase& c_in, mpq_class p, mpq_class q, mpq_class r, long long k,
                            int k_guard = default_k_guard) {
    CBase c = normalize(c_in);
    p.canonicalize();
    q.canonicalize();
    r.canonicalize();
    if (sgn(p) < 0 || sgn(q) < 0 || sgn(r) < 0)
        throw ParamError(ParamError::Code::Parse, "p, q, r must be nonnegative");
    if (p + q + r != 1) throw ParamError(ParamError::Code::SumNotOne, "p + q + r must equal 1");
    if (sgn(p + r) == 0 || sgn(q + r) == 0)
        throw ParamError(ParamError::Code::DegenerateProcess, "need p + r > 0 and q + r > 0");
    if (k_guard > 0 && (k > k_guard || k < -k_guard))
        throw ParamError(ParamError::Code::KOutOfRange, "|k| exceeds guard " + std::to_string(k_guard));
    return ModelParams{std::move(c), std::move(p), std::move(q), std::move(r), static_cast<int>(k)};
}

inline ModelParams validate(const RawParams& raw, int k_guard = default_k_guard) {
    return validate(parse_c(raw.c), parse_rational(raw.p), parse_rational(raw.q), parse_rational(raw.r), raw.k,
                    k_guard);
}

inline ModelParams validate(const ModelParams& m, int k_guard = default_k_guard) {
    return validate(m.c, m.p, m.q, m.r, m.k, k_guard);
}

inline RawParams to_raw(const ModelParams& m) {
    return RawParams{format_c(m.c), format_rational(m.p), format_rational(m.q), format_rational(m.r), m.k};
}

inline ModelParams with_k(const ModelParams& m, int k) {
    ModelParams out = m;
    out.k = k;
    return out;
}

// (c, p, q, r) -> (c, r, q, p)
inline ModelParams swapped(const ModelParams& m) {
    ModelParams out = m;
    out.p = m.r;
    out.r = m.p;
    return out;
}

inline std::string describe(const ModelParams& m) {
    return "c=" + format_c(m.c) + " p=" + format_rational(m.p) + " q=" + format_rational(m.q) +
           " r=" + format_rational(m.r) + " k=" + std::to_string(m.k);
}

}  // namespace qidiv
