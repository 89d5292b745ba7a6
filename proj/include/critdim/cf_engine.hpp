#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "critdim/numeric.hpp"

namespace critdim {

/// An element c + k*alpha of the module Z + Z*alpha. Best-approximation
/// distances live here exactly, whatever alpha is.
struct LinearForm {
    Integer constant{0};
    Integer alpha_coeff{0};

    Real evaluate(const Real& alpha) const;
    bool is_integer(const Integer& value) const { return alpha_coeff == 0 && constant == value; }

    friend bool operator==(const LinearForm&, const LinearForm&) = default;
    friend LinearForm operator+(const LinearForm& a, const LinearForm& b);
    friend LinearForm operator-(const LinearForm& a, const LinearForm& b);
    friend LinearForm operator*(const Integer& k, const LinearForm& f);
};

/// Convergents, return times and best-approximation distances of
/// alpha = [a_1, a_2, ...] truncated at a finite depth.
///
/// Index conventions: q_{-1} = 0, q_0 = 1, p_{-1} = 1, p_0 = 0,
/// delta_{-1} = 1, delta_0 = alpha and delta_n = |q_n alpha - p_n|.
class ContinuedFraction {
public:
    std::size_t depth() const { return quotients_.size(); }
    std::span<const Integer> quotients() const { return quotients_; }

    /// Partial quotient a_n, 1 <= n <= depth.
    const Integer& a(std::size_t n) const;
    /// Denominator q_n, -1 <= n <= depth.
    const Integer& q(long n) const;
    const Integer& p(long n) const;
    /// Exact delta_n as an element of Z + Z*alpha, -1 <= n <= depth.
    const LinearForm& delta_form(long n) const;
    /// delta_n evaluated at the stored alpha, rounded to the working precision.
    const Real& delta(long n) const;

    /// q_n as a machine integer; throws DepthExceededError when it does not fit.
    std::int64_t q_small(long n) const;

    /// alpha carried at an elevated precision (working bits plus room for
    /// the cancellation in q_n*alpha - p_n).
    const Real& alpha() const { return alpha_; }
    unsigned precision_bits() const { return bits_; }

private:
    friend ContinuedFraction convergents(std::span<const Integer>, std::size_t,
                                         const std::optional<Real>&, unsigned);
    std::size_t check_index(long n, long lowest) const;

    std::vector<Integer> quotients_;
    std::vector<Integer> p_;  // offset by one: p_[n + 1] = p_n
    std::vector<Integer> q_;
    std::vector<LinearForm> delta_forms_;
    std::vector<Real> delta_values_;
    Real alpha_;
    unsigned bits_ = kDefaultPrecisionBits;
};

/// Builds the convergent tables for the first `depth` quotients. When no
/// alpha is given, alpha is the number whose expansion is the full quotient
/// list followed by an all-ones tail.
ContinuedFraction convergents(std::span<const Integer> quotients, std::size_t depth,
                              const std::optional<Real>& alpha = std::nullopt,
                              unsigned precision_bits = kDefaultPrecisionBits);

/// Value of [a_1, ..., a_L, 1, 1, 1, ...] at the current default precision.
Real continued_fraction_value(std::span<const Integer> quotients);

/// Finite-depth Diophantine data. Every verdict is "at the tested depth".
struct DiophantineProfile {
    double tau = 0.0;
    /// The gamma of D(gamma, tau); kept for completeness, never estimated.
    std::optional<double> dio_gamma;
    /// max over tested n of a_{n+1} / q_n^tau, and its logarithm.
    double Gamma = 0.0;
    double log_Gamma = 0.0;
    std::size_t Gamma_argmax = 0;
    /// 2 log(a_1...a_n) / log q_n and n / log q_n for n >= nu_first_index.
    std::vector<double> nu1_seq;
    std::vector<double> nu2_seq;
    std::size_t nu_first_index = 0;
    bool bounded_type_at_depth = false;
    std::size_t depth = 0;

    double nu1() const { return nu1_seq.empty() ? 0.0 : nu1_seq.back(); }
    double nu2() const { return nu2_seq.empty() ? 0.0 : nu2_seq.back(); }
};

DiophantineProfile diophantine_profile(const ContinuedFraction& cf, double tau);

namespace quotient_kind {
struct Golden {};
struct Periodic {
    std::vector<Integer> word;
};
/// a_{n+1} = ceil(q_n^tau), built alongside the q recurrence.
struct PrescribedGrowth {
    double tau = 1.0;
};
struct RandomBounded {
    std::uint64_t max_a = 2;
    std::uint64_t seed = 0;
};
}  // namespace quotient_kind

using QuotientKind = std::variant<quotient_kind::Golden, quotient_kind::Periodic,
                                  quotient_kind::PrescribedGrowth, quotient_kind::RandomBounded>;

std::vector<Integer> generate_quotients(const QuotientKind& kind, std::size_t depth);

struct DimensionBounds {
    double lower = 0.0;      // clamped to 1
    double lower_raw = 0.0;  // formula value before clamping
    bool lower_clamped = false;
    double upper = 1.0;
};

/// lower = 1/(2 tau + nu1 + nu2 log M), upper = 1/(tau + 1).
DimensionBounds dimension_bounds(double tau, double nu1, double nu2, double M);

}  // namespace critdim
