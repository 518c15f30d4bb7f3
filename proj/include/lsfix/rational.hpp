#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lsfix {

using BigInt = boost::multiprecision::cpp_int;

/// Exact rational number, always kept in lowest terms with a positive
/// denominator. Used for attribute weights and square distances, which must
/// compare exactly (no floating point anywhere in the repair pipeline).
class Rational {
public:
    Rational() : value_(0) {}
    Rational(std::int64_t n) : value_(n) {}  // NOLINT: implicit by design
    Rational(const BigInt& n) : value_(n) {}
    Rational(std::int64_t num, std::int64_t den) : Rational(BigInt(num), BigInt(den)) {}
    Rational(const BigInt& num, const BigInt& den) {
        if (den == 0) throw std::domain_error("Rational: zero denominator");
        BigInt n = den < 0 ? BigInt(-num) : num;
        BigInt d = den < 0 ? BigInt(-den) : den;
        BigInt g = boost::multiprecision::gcd(n, d);
        if (g > 1) {
            n /= g;
            d /= g;
        }
        value_ = boost::multiprecision::cpp_rational(n, d);
    }

    BigInt numerator() const { return boost::multiprecision::numerator(value_); }
    BigInt denominator() const { return boost::multiprecision::denominator(value_); }

    bool is_zero() const { return value_ == 0; }
    bool is_integer() const { return denominator() == 1; }

    Rational operator-() const { return Rational(-value_); }
    Rational& operator+=(const Rational& o) { value_ += o.value_; return *this; }
    Rational& operator-=(const Rational& o) { value_ -= o.value_; return *this; }
    Rational& operator*=(const Rational& o) { value_ *= o.value_; return *this; }
    Rational& operator/=(const Rational& o) {
        if (o.is_zero()) throw std::domain_error("Rational: division by zero");
        value_ /= o.value_;
        return *this;
    }

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.value_ == b.value_; }
    friend bool operator!=(const Rational& a, const Rational& b) { return a.value_ != b.value_; }
    friend bool operator<(const Rational& a, const Rational& b) { return a.value_ < b.value_; }
    friend bool operator<=(const Rational& a, const Rational& b) { return a.value_ <= b.value_; }
    friend bool operator>(const Rational& a, const Rational& b) { return a.value_ > b.value_; }
    friend bool operator>=(const Rational& a, const Rational& b) { return a.value_ >= b.value_; }

    /// Serialized form is always "num/den", e.g. "10/1" or "-1/10".
    std::string str() const {
        return numerator().str() + "/" + denominator().str();
    }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) {
        return os << r.str();
    }

    /// Accepts "a/b", plain integers, and decimal literals ("0.00001" parses
    /// exactly to 1/100000).
    static Rational parse(std::string_view text);

private:
    explicit Rational(boost::multiprecision::cpp_rational v) : value_(std::move(v)) {}
    boost::multiprecision::cpp_rational value_;
};

inline Rational Rational::parse(std::string_view text) {
    auto fail = [&] {
        throw std::invalid_argument("not a rational literal: '" + std::string(text) + "'");
    };
    if (text.empty()) fail();
    std::string s(text);
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        try {
            return Rational(BigInt(s.substr(0, slash)), BigInt(s.substr(slash + 1)));
        } catch (const std::exception&) {
            fail();
        }
    }
    auto dot = s.find('.');
    if (dot == std::string::npos) {
        try {
            return Rational(BigInt(s));
        } catch (const std::exception&) {
            fail();
        }
    }
    std::string intpart = s.substr(0, dot);
    std::string frac = s.substr(dot + 1);
    if (frac.empty()) fail();
    bool negative = !intpart.empty() && intpart[0] == '-';
    if (intpart.empty() || intpart == "-" || intpart == "+") intpart += '0';
    try {
        BigInt scale = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
        BigInt num = BigInt(intpart) * scale;
        BigInt fracval = BigInt(frac);
        num += negative ? -fracval : fracval;
        return Rational(num, scale);
    } catch (const std::exception&) {
        fail();
    }
    return Rational();  // unreachable
}

}  // namespace lsfix
