#pragma once

// Exact scalars: arbitrary-precision rationals and the extended line Q ∪ {+inf}.

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cms {

/// Arithmetic on values outside their domain (division by zero, inf - inf, ...).
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed textual input; carries the offending text.
class parse_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Rational {
public:
    using value_type = boost::multiprecision::cpp_rational;
    using integer_type = boost::multiprecision::cpp_int;

    Rational() = default;
    Rational(std::int64_t n) : v_(n) {}  // NOLINT: implicit from integers is intended
    Rational(std::int64_t n, std::int64_t d) {
        if (d == 0) throw domain_error("zero denominator");
        v_ = value_type(integer_type(n), integer_type(d));
    }
    explicit Rational(value_type v) : v_(std::move(v)) {}

    /// Parses "p", "-p" or "p/q" with q != 0.
    static Rational parse(std::string_view text) {
        auto digits = [&](std::string_view s) {
            if (s.empty()) return false;
            std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
            if (i == s.size()) return false;
            for (; i < s.size(); ++i)
                if (s[i] < '0' || s[i] > '9') return false;
            return true;
        };
        auto slash = text.find('/');
        std::string_view num = text.substr(0, slash);
        if (!digits(num)) throw parse_error("malformed rational '" + std::string(text) + "'");
        integer_type n(std::string(num[0] == '+' ? num.substr(1) : num));
        integer_type d = 1;
        if (slash != std::string_view::npos) {
            std::string_view den = text.substr(slash + 1);
            if (!digits(den) || den[0] == '-' || den[0] == '+')
                throw parse_error("malformed rational '" + std::string(text) + "'");
            d = integer_type(std::string(den));
            if (d == 0) throw parse_error("zero denominator in '" + std::string(text) + "'");
        }
        return Rational(value_type(n, d));
    }

    const value_type& raw() const { return v_; }
    integer_type numerator() const { return boost::multiprecision::numerator(v_); }
    integer_type denominator() const { return boost::multiprecision::denominator(v_); }

    bool is_zero() const { return v_ == 0; }
    bool is_integer() const { return denominator() == 1; }
    int sign() const { return v_.sign(); }

    /// Largest integer not exceeding the value.
    integer_type floor() const {
        integer_type n = numerator(), d = denominator();
        integer_type q = n / d;
        if (n < 0 && q * d != n) q -= 1;
        return q;
    }

    /// Canonical text: "p" for integers, "p/q" otherwise.
    std::string str() const {
        if (is_integer()) return numerator().str();
        return numerator().str() + "/" + denominator().str();
    }

    Rational operator-() const { return Rational(value_type(-v_)); }
    Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
    Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
    Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }
    Rational& operator/=(const Rational& o) {
        if (o.is_zero()) throw domain_error("division by zero");
        v_ /= o.v_;
        return *this;
    }
    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.v_ == b.v_; }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        if (a.v_ < b.v_) return std::strong_ordering::less;
        if (b.v_ < a.v_) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

private:
    value_type v_{0};
};

inline Rational abs(const Rational& r) { return r.sign() < 0 ? -r : r; }

/// 2^n as a rational.
inline Rational pow2(int n) {
    Rational::integer_type p = 1;
    p <<= (n < 0 ? -n : n);
    return n >= 0 ? Rational(Rational::value_type(p)) : Rational(Rational::value_type(1, p));
}

/// Element of Q ∪ {+inf} with 0*inf = inf*0 = 0, a + inf = inf; inf - inf is an error.
class ExtRational {
public:
    ExtRational() = default;
    ExtRational(Rational r) : finite_(std::move(r)) {}  // NOLINT
    ExtRational(std::int64_t n) : finite_(n) {}        // NOLINT

    static ExtRational infinity() {
        ExtRational e;
        e.inf_ = true;
        return e;
    }

    /// Parses "inf" or a rational.
    static ExtRational parse(std::string_view text) {
        if (text == "inf") return infinity();
        return ExtRational(Rational::parse(text));
    }

    bool is_infinite() const { return inf_; }
    bool is_finite() const { return !inf_; }
    bool is_zero() const { return !inf_ && finite_.is_zero(); }
    bool is_nonnegative() const { return inf_ || finite_.sign() >= 0; }

    const Rational& value() const {
        if (inf_) throw domain_error("infinite value has no finite representative");
        return finite_;
    }

    std::string str() const { return inf_ ? "inf" : finite_.str(); }

    friend ExtRational operator+(const ExtRational& a, const ExtRational& b) {
        if (a.inf_ || b.inf_) return infinity();
        return ExtRational(a.finite_ + b.finite_);
    }
    friend ExtRational operator-(const ExtRational& a, const ExtRational& b) {
        if (b.inf_) throw domain_error("subtraction of infinity");
        if (a.inf_) return infinity();
        return ExtRational(a.finite_ - b.finite_);
    }
    friend ExtRational operator*(const ExtRational& a, const ExtRational& b) {
        if (a.is_zero() || b.is_zero()) return ExtRational(0);
        if (a.inf_ || b.inf_) {
            if ((!a.inf_ && a.finite_.sign() < 0) || (!b.inf_ && b.finite_.sign() < 0))
                throw domain_error("negative times infinity");
            return infinity();
        }
        return ExtRational(a.finite_ * b.finite_);
    }
    ExtRational& operator+=(const ExtRational& o) { return *this = *this + o; }

    friend bool operator==(const ExtRational& a, const ExtRational& b) {
        return a.inf_ == b.inf_ && (a.inf_ || a.finite_ == b.finite_);
    }
    friend std::strong_ordering operator<=>(const ExtRational& a, const ExtRational& b) {
        if (a.inf_ || b.inf_) return a.inf_ <=> b.inf_;
        return a.finite_ <=> b.finite_;
    }

    friend std::ostream& operator<<(std::ostream& os, const ExtRational& r) { return os << r.str(); }

private:
    Rational finite_{};
    bool inf_ = false;
};

}  // namespace cms

template <>
struct std::hash<cms::Rational> {
    std::size_t operator()(const cms::Rational& r) const noexcept {
        return std::hash<std::string>{}(r.str());
    }
};
