#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>

#include <gmpxx.h>

namespace gridtree {

// Exact rational arithmetic for all solver paths. Backed by GMP's mpq_class,
// always canonical (lowest terms, positive denominator). Every arithmetic
// operation bumps a thread-local counter so benchmarks can report exact
// operation counts.

namespace detail {
inline uint64_t& rational_op_counter() {
    thread_local uint64_t count = 0;
    return count;
}
}  // namespace detail

inline uint64_t rational_op_count() { return detail::rational_op_counter(); }
inline void reset_rational_op_count() { detail::rational_op_counter() = 0; }

class Rational {
public:
    Rational() : q_(0) {}
    Rational(long n) : q_(n) {}  // NOLINT: implicit by design, mirrors int literals
    Rational(long num, long den) : q_(num, den) {
        if (den == 0) throw std::invalid_argument("Rational: zero denominator");
        q_.canonicalize();
    }
    explicit Rational(const mpz_class& n) : q_(n) {}
    Rational(const mpz_class& num, const mpz_class& den) : q_(num, den) {
        if (den == 0) throw std::invalid_argument("Rational: zero denominator");
        q_.canonicalize();
    }
    explicit Rational(const mpq_class& q) : q_(q) { q_.canonicalize(); }

    // Accepts "num/den", "num", with optional leading '-'.
    static Rational parse(const std::string& text) {
        mpq_class q;
        if (q.set_str(text, 10) != 0)
            throw std::invalid_argument("Rational: cannot parse '" + text + "'");
        if (q.get_den() == 0)
            throw std::invalid_argument("Rational: zero denominator in '" + text + "'");
        q.canonicalize();
        return Rational(q);
    }

    const mpz_class& num() const { return q_.get_num(); }
    const mpz_class& den() const { return q_.get_den(); }
    const mpq_class& raw() const { return q_; }

    bool is_zero() const { return sgn(q_) == 0; }
    bool is_negative() const { return sgn(q_) < 0; }
    bool is_positive() const { return sgn(q_) > 0; }
    bool is_integer() const { return q_.get_den() == 1; }
    int sign() const { return sgn(q_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        ++detail::rational_op_counter();
        return Rational(mpq_class(a.q_ + b.q_));
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        ++detail::rational_op_counter();
        return Rational(mpq_class(a.q_ - b.q_));
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        ++detail::rational_op_counter();
        return Rational(mpq_class(a.q_ * b.q_));
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.is_zero()) throw std::domain_error("Rational: division by zero");
        ++detail::rational_op_counter();
        return Rational(mpq_class(a.q_ / b.q_));
    }
    Rational operator-() const { return Rational(mpq_class(-q_)); }

    Rational& operator+=(const Rational& b) { return *this = *this + b; }
    Rational& operator-=(const Rational& b) { return *this = *this - b; }
    Rational& operator*=(const Rational& b) { return *this = *this * b; }
    Rational& operator/=(const Rational& b) { return *this = *this / b; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.q_ == b.q_; }
    friend bool operator!=(const Rational& a, const Rational& b) { return a.q_ != b.q_; }
    friend bool operator<(const Rational& a, const Rational& b) {
        ++detail::rational_op_counter();
        return a.q_ < b.q_;
    }
    friend bool operator<=(const Rational& a, const Rational& b) {
        ++detail::rational_op_counter();
        return a.q_ <= b.q_;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator>=(const Rational& a, const Rational& b) { return b <= a; }

    // floor(num/den) as an exact integer.
    mpz_class floor() const {
        mpz_class r;
        mpz_fdiv_q(r.get_mpz_t(), num().get_mpz_t(), den().get_mpz_t());
        return r;
    }

    // Largest integer i with 2^i <= *this. Requires a positive value.
    long floor_log2() const {
        if (!is_positive()) throw std::domain_error("floor_log2: value must be positive");
        long bn = static_cast<long>(mpz_sizeinbase(num().get_mpz_t(), 2));
        long bd = static_cast<long>(mpz_sizeinbase(den().get_mpz_t(), 2));
        long k = bn - bd;  // value is in (2^(k-1), 2^(k+1))
        mpz_class shifted;
        if (k >= 0) {
            mpz_mul_2exp(shifted.get_mpz_t(), den().get_mpz_t(), static_cast<unsigned long>(k));
            return num() >= shifted ? k : k - 1;
        }
        mpz_mul_2exp(shifted.get_mpz_t(), num().get_mpz_t(), static_cast<unsigned long>(-k));
        return shifted >= den() ? k : k - 1;
    }

    // 2^i for any integer i (negative exponents give exact fractions).
    static Rational pow2(long i) {
        mpz_class p;
        mpz_ui_pow_ui(p.get_mpz_t(), 2, static_cast<unsigned long>(i >= 0 ? i : -i));
        return i >= 0 ? Rational(p) : Rational(mpz_class(1), p);
    }

    // Exact form: "num/den", or just "num" for integers.
    std::string to_string() const {
        return is_integer() ? num().get_str() : num().get_str() + "/" + den().get_str();
    }

    // 6 significant digits; display only, never used in solver paths.
    double to_double() const { return q_.get_d(); }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) {
        return os << r.to_string();
    }

private:
    mpq_class q_;
};

inline Rational abs(const Rational& r) { return r.is_negative() ? -r : r; }

inline const Rational& min(const Rational& a, const Rational& b) { return b < a ? b : a; }
inline const Rational& max(const Rational& a, const Rational& b) { return a < b ? b : a; }

// "0.7"-style rendering with 6 significant digits; exact strings stay authoritative.
inline std::string approx_decimal(const Rational& r) {
    if (r.is_zero()) return "0";
    mpz_class n = ::abs(r.num());
    const mpz_class& d = r.den();
    // Scale so that the quotient has exactly 6 significant digits, then round
    // to nearest (ties away from zero) on the last digit.
    long digits_n = static_cast<long>(mpz_sizeinbase(n.get_mpz_t(), 10));
    long digits_d = static_cast<long>(mpz_sizeinbase(d.get_mpz_t(), 10));
    // mpz_sizeinbase may overcount by one; pin down the true decimal exponent
    // of n/d via comparison.
    long shift = 6 - (digits_n - digits_d);
    auto scaled_quotient = [&](long s) {
        mpz_class nn = n, dd = d, pow;
        if (s >= 0) {
            mpz_ui_pow_ui(pow.get_mpz_t(), 10, static_cast<unsigned long>(s));
            nn *= pow;
        } else {
            mpz_ui_pow_ui(pow.get_mpz_t(), 10, static_cast<unsigned long>(-s));
            dd *= pow;
        }
        mpz_class quot, rem;
        mpz_fdiv_qr(quot.get_mpz_t(), rem.get_mpz_t(), nn.get_mpz_t(), dd.get_mpz_t());
        // round half up
        if (mpz_class(rem * 2) >= dd) quot += 1;
        return quot;
    };
    mpz_class q6 = scaled_quotient(shift);
    // Renormalize: rounding may push to 7 digits, undercount to 5.
    while (q6 >= 1000000) {
        --shift;
        q6 = scaled_quotient(shift);
    }
    while (q6 < 100000) {
        ++shift;
        q6 = scaled_quotient(shift);
    }
    std::string mant = q6.get_str();
    long point = 6 - shift;  // digits before the decimal point
    std::string out;
    if (point <= 0) {
        out = "0." + std::string(static_cast<size_t>(-point), '0') + mant;
    } else if (point >= 6) {
        out = mant + std::string(static_cast<size_t>(point - 6), '0');
    } else {
        out = mant.substr(0, static_cast<size_t>(point)) + "." + mant.substr(static_cast<size_t>(point));
    }
    // Trim trailing zeros after a decimal point.
    if (out.find('.') != std::string::npos) {
        size_t last = out.find_last_not_of('0');
        if (out[last] == '.') --last;
        out.erase(last + 1);
    }
    return (r.is_negative() ? "-" : "") + out;
}

}  // namespace gridtree
