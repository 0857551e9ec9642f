#pragma once

#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

namespace loopforge {

// Exact nonnegative-friendly rational on int64 with __int128 intermediates.
// Frequencies, iteration totals and timing results stay exact; only report
// rendering rounds.
class Rational {
public:
    Rational() = default;
    Rational(long long n) : num_(n), den_(1) {} // NOLINT: implicit by design
    Rational(long long n, long long d) : num_(n), den_(d) {
        if (d == 0) throw std::domain_error("rational with zero denominator");
        normalize();
    }

    long long num() const { return num_; }
    long long den() const { return den_; }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return make((__int128)a.num_ * b.den_ + (__int128)b.num_ * a.den_, (__int128)a.den_ * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return make((__int128)a.num_ * b.den_ - (__int128)b.num_ * a.den_, (__int128)a.den_ * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return make((__int128)a.num_ * b.num_, (__int128)a.den_ * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw std::domain_error("rational division by zero");
        return make((__int128)a.num_ * b.den_, (__int128)a.den_ * b.num_);
    }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return (__int128)a.num_ * b.den_ < (__int128)b.num_ * a.den_;
    }
    friend bool operator<=(const Rational& a, const Rational& b) { return a < b || a == b; }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator>=(const Rational& a, const Rational& b) { return b <= a; }

    double to_double() const { return (double)num_ / (double)den_; }

    // "123", "123/7", or decimal "0.49" (exact as printed).
    static Rational parse(const std::string& s);

    std::string str() const {
        std::ostringstream os;
        os << num_;
        if (den_ != 1) os << "/" << den_;
        return os.str();
    }

private:
    static Rational make(__int128 n, __int128 d) {
        if (d < 0) { n = -n; d = -d; }
        __int128 g = gcd128(n < 0 ? -n : n, d);
        if (g > 1) { n /= g; d /= g; }
        Rational r;
        if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
            throw std::overflow_error("rational overflow");
        r.num_ = (long long)n;
        r.den_ = (long long)d;
        return r;
    }
    static __int128 gcd128(__int128 a, __int128 b) {
        while (b) { __int128 t = a % b; a = b; b = t; }
        return a ? a : 1;
    }
    void normalize() {
        *this = make(num_, den_);
    }

    long long num_ = 0;
    long long den_ = 1;
};

inline Rational Rational::parse(const std::string& s) {
    auto slash = s.find('/');
    if (slash != std::string::npos)
        return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
    auto dot = s.find('.');
    if (dot == std::string::npos) return Rational(std::stoll(s));
    std::string whole = s.substr(0, dot), frac = s.substr(dot + 1);
    long long den = 1;
    for (size_t i = 0; i < frac.size(); ++i) den *= 10;
    long long w = whole.empty() || whole == "-" ? 0 : std::stoll(whole);
    long long f = frac.empty() ? 0 : std::stoll(frac);
    bool neg = !whole.empty() && whole[0] == '-';
    long long n = (neg ? -1 : 1) * ((w < 0 ? -w : w) * den + f);
    return Rational(n, den);
}

} // namespace loopforge
