#include "critdim/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/constants/constants.hpp>

#include "critdim/errors.hpp"

namespace critdim {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_input: return "invalid_input";
        case ErrorKind::invalid_family: return "invalid_family";
        case ErrorKind::domain: return "domain";
        case ErrorKind::precision: return "precision";
        case ErrorKind::resolution: return "resolution";
        case ErrorKind::geometry: return "geometry";
        case ErrorKind::tuning: return "tuning";
        case ErrorKind::depth_exceeded: return "depth_exceeded";
    }
    return "unknown";
}

unsigned digits10_for_bits(unsigned bits) {
    // Boost converts digits10 back to bits with a small safety margin, so the
    // floor keeps the carried precision at or just above the request.
    return std::max(1u, static_cast<unsigned>(std::floor(bits * 0.30102999566398120)));
}

unsigned precision_of(const Real& x) {
    return static_cast<unsigned>(mpfr_get_prec(x.backend().data()));
}

PrecisionScope::PrecisionScope(unsigned bits) : saved_digits10_(Real::default_precision()) {
    if (bits < kMinPrecisionBits) {
        throw InvalidInputError("precision_bits must be at least " +
                                std::to_string(kMinPrecisionBits));
    }
    Real::default_precision(digits10_for_bits(bits));
}

PrecisionScope::~PrecisionScope() { Real::default_precision(saved_digits10_); }

Real parse_real(std::string_view text) {
    try {
        return Real(std::string(text));
    } catch (const std::exception&) {
        throw InvalidInputError("not a decimal number: '" + std::string(text) + "'");
    }
}

Real to_real(const Integer& n) {
    Real r;
    mpfr_set_z(r.backend().data(), n.backend().data(), MPFR_RNDN);
    return r;
}

Real pi() { return boost::math::constants::pi<Real>(); }

Real two_pi() { return 2 * pi(); }

Real frac(const Real& x) { return Real(x - floor(x)); }

Real circle_offset(const Real& from, const Real& to) {
    Real d = frac(Real(to - from));
    if (d >= Real(0.5)) d -= 1;
    return d;
}

std::string to_decimal(const Real& x, int significant_digits) {
    if (x == 0) return "0";
    return x.str(significant_digits, std::ios_base::scientific);
}

std::string to_decimal(const Integer& n) { return n.str(); }

int report_digits(unsigned bits) {
    return std::max(6, static_cast<int>(bits * 0.30102999566398120) - 6);
}

double to_double(const Real& x) { return x.convert_to<double>(); }

double log_integer(const Integer& n) {
    if (n <= 0) return -std::numeric_limits<double>::infinity();
    long exp2 = 0;
    const double mant = mpz_get_d_2exp(&exp2, n.backend().data());
    return std::log(mant) + static_cast<double>(exp2) * std::log(2.0);
}

double log2_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    return hi + std::log2(1.0 + std::exp2(lo - hi));
}

}  // namespace critdim
