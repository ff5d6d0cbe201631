// SPDX-License-Identifier: Apache-2.0
#include "moescale/wide.hpp"

#include <algorithm>
#include <stdexcept>

namespace moescale {

namespace {
constexpr u128 kU128Max = ~static_cast<u128>(0);
}

std::string to_decimal(u128 v) {
    if (v == 0) {
        return "0";
    }
    std::string out;
    while (v != 0) {
        out.push_back(static_cast<char>('0' + static_cast<unsigned>(v % 10)));
        v /= 10;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

double to_double(u128 v) {
    const u128 hi = v >> 64;
    const u128 lo = v & ~static_cast<std::uint64_t>(0);
    return static_cast<double>(static_cast<std::uint64_t>(hi)) * 18446744073709551616.0 +
           static_cast<double>(static_cast<std::uint64_t>(lo));
}

u128 gcd128(u128 a, u128 b) {
    while (b != 0) {
        const u128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

u128 checked_mul(u128 a, u128 b) {
    if (a != 0 && b > kU128Max / a) {
        throw std::overflow_error("128-bit multiply overflow in FLOPs accounting");
    }
    return a * b;
}

u128 checked_add(u128 a, u128 b) {
    if (a > kU128Max - b) {
        throw std::overflow_error("128-bit add overflow in FLOPs accounting");
    }
    return a + b;
}

void Rational::reduce() {
    if (den == 0) {
        throw std::domain_error("rational with zero denominator");
    }
    const u128 g = gcd128(num == 0 ? den : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
}

double Rational::approx() const {
    return to_double(num) / to_double(den);
}

Rational make_rational(u128 num, u128 den) {
    Rational r{num, den};
    r.reduce();
    return r;
}

}  // namespace moescale
