// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

namespace moescale {

// 128-bit unsigned arithmetic for exact FLOPs accounting. All counts are
// integers end to end; doubles appear only at API boundaries.
using u128 = unsigned __int128;

std::string to_decimal(u128 v);
double to_double(u128 v);
u128 gcd128(u128 a, u128 b);

// Throw std::overflow_error instead of wrapping.
u128 checked_mul(u128 a, u128 b);
u128 checked_add(u128 a, u128 b);

// Exact nonnegative rational, kept reduced. den is never zero.
struct Rational {
    u128 num = 0;
    u128 den = 1;

    void reduce();
    double approx() const;
};

Rational make_rational(u128 num, u128 den);

}  // namespace moescale
