#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

namespace critdim {

/// Configurable-precision real. The working precision is the thread default
/// set through PrecisionScope; arithmetic keeps the widest operand precision.
using Real = boost::multiprecision::mpfr_float;

/// Arbitrary-size integer (GMP backed).
using Integer = boost::multiprecision::mpz_int;

inline constexpr unsigned kDefaultPrecisionBits = 256;
inline constexpr unsigned kMinPrecisionBits = 64;

unsigned digits10_for_bits(unsigned bits);

/// Significand bits actually carried by a value.
unsigned precision_of(const Real& x);

/// Sets the thread default precision for the lifetime of the object.
class PrecisionScope {
public:
    explicit PrecisionScope(unsigned bits);
    ~PrecisionScope();
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

private:
    unsigned saved_digits10_;
};

/// Parses a decimal string at the current default precision.
Real parse_real(std::string_view text);

Real to_real(const Integer& n);
Real pi();
Real two_pi();

/// x - floor(x), in [0, 1).
Real frac(const Real& x);

/// Signed distance on the circle, in [-1/2, 1/2).
Real circle_offset(const Real& from, const Real& to);

/// Decimal rendering with a fixed number of significant digits. The output
/// depends only on the value and the digit count.
std::string to_decimal(const Real& x, int significant_digits);
std::string to_decimal(const Integer& n);

/// Significant decimal digits reported for a given working precision.
int report_digits(unsigned bits);

double to_double(const Real& x);

/// Natural logarithm of a positive big integer, accurate to double precision.
double log_integer(const Integer& n);

/// log2(2^a + 2^b) without overflow.
double log2_add(double a, double b);

}  // namespace critdim
