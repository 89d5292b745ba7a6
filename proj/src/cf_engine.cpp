#include "critdim/cf_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "critdim/errors.hpp"

namespace critdim {

Real LinearForm::evaluate(const Real& alpha) const {
    return Real(to_real(constant) + to_real(alpha_coeff) * alpha);
}

LinearForm operator+(const LinearForm& a, const LinearForm& b) {
    return {a.constant + b.constant, a.alpha_coeff + b.alpha_coeff};
}

LinearForm operator-(const LinearForm& a, const LinearForm& b) {
    return {a.constant - b.constant, a.alpha_coeff - b.alpha_coeff};
}

LinearForm operator*(const Integer& k, const LinearForm& f) {
    return {k * f.constant, k * f.alpha_coeff};
}

namespace {

unsigned bit_length(const Integer& n) {
    return n == 0 ? 0u : static_cast<unsigned>(mpz_sizeinbase(n.backend().data(), 2));
}

struct Recurrence {
    std::vector<Integer> p;  // p[n + 1] = p_n
    std::vector<Integer> q;
};

Recurrence run_recurrence(std::span<const Integer> quotients) {
    Recurrence r;
    r.p = {Integer(1), Integer(0)};
    r.q = {Integer(0), Integer(1)};
    for (const Integer& a : quotients) {
        const std::size_t k = r.q.size();
        r.p.push_back(a * r.p[k - 1] + r.p[k - 2]);
        r.q.push_back(a * r.q[k - 1] + r.q[k - 2]);
    }
    return r;
}

}  // namespace

Real continued_fraction_value(std::span<const Integer> quotients) {
    const Recurrence r = run_recurrence(quotients);
    const std::size_t k = r.q.size();
    const Real phi = (1 + sqrt(Real(5))) / 2;
    return Real((to_real(r.p[k - 1]) * phi + to_real(r.p[k - 2])) /
                (to_real(r.q[k - 1]) * phi + to_real(r.q[k - 2])));
}

ContinuedFraction convergents(std::span<const Integer> quotients, std::size_t depth,
                              const std::optional<Real>& alpha, unsigned precision_bits) {
    if (depth > quotients.size()) {
        throw InvalidInputError("depth " + std::to_string(depth) + " exceeds the " +
                                std::to_string(quotients.size()) + " available quotients");
    }
    for (std::size_t n = 0; n < quotients.size(); ++n) {
        if (quotients[n] < 1) {
            throw InvalidInputError("partial quotient a_" + std::to_string(n + 1) +
                                    " = " + quotients[n].str() + " is not positive");
        }
    }

    ContinuedFraction cf;
    cf.bits_ = precision_bits;
    cf.quotients_.assign(quotients.begin(), quotients.begin() + static_cast<long>(depth));
    const Recurrence full = run_recurrence(quotients);
    cf.p_.assign(full.p.begin(), full.p.begin() + static_cast<long>(depth) + 2);
    cf.q_.assign(full.q.begin(), full.q.begin() + static_cast<long>(depth) + 2);

    cf.delta_forms_.push_back({Integer(1), Integer(0)});
    cf.delta_forms_.push_back({Integer(0), Integer(1)});
    for (std::size_t n = 1; n <= depth; ++n) {
        const LinearForm& prev2 = cf.delta_forms_[n - 1];
        const LinearForm& prev1 = cf.delta_forms_[n];
        cf.delta_forms_.push_back(prev2 - cf.quotients_[n - 1] * prev1);
    }

    // delta_n = |q_n alpha - p_n| cancels about 2 log2(q_n) bits.
    const unsigned elevated =
        precision_bits + 2 * bit_length(full.q.back()) + 64;
    {
        PrecisionScope scope(elevated);
        if (alpha) {
            cf.alpha_ = Real(*alpha);
        } else {
            cf.alpha_ = continued_fraction_value(quotients);
        }
    }
    if (!(cf.alpha_ > 0 && cf.alpha_ < 1)) {
        throw InvalidInputError("alpha must lie in (0, 1)");
    }

    cf.delta_values_.reserve(depth + 2);
    for (std::size_t k = 0; k < cf.delta_forms_.size(); ++k) {
        Real value;
        {
            PrecisionScope scope(elevated);
            value = cf.delta_forms_[k].evaluate(cf.alpha_);
        }
        PrecisionScope scope(precision_bits);
        Real rounded(value, digits10_for_bits(precision_bits));
        cf.delta_values_.push_back(std::move(rounded));
    }
    for (std::size_t k = 1; k < cf.delta_values_.size(); ++k) {
        if (!(cf.delta_values_[k] > 0 && cf.delta_values_[k] < cf.delta_values_[k - 1])) {
            throw InvalidInputError("alpha is inconsistent with the quotients: delta_" +
                                    std::to_string(static_cast<long>(k) - 1) +
                                    " is not positive and decreasing");
        }
    }
    return cf;
}

std::size_t ContinuedFraction::check_index(long n, long lowest) const {
    if (n < lowest || n > static_cast<long>(depth())) {
        throw DepthExceededError("index " + std::to_string(n) + " outside [" +
                                 std::to_string(lowest) + ", " + std::to_string(depth()) + "]");
    }
    return static_cast<std::size_t>(n + 1);
}

const Integer& ContinuedFraction::a(std::size_t n) const {
    if (n < 1 || n > depth()) {
        throw DepthExceededError("partial quotient a_" + std::to_string(n) + " not available");
    }
    return quotients_[n - 1];
}

const Integer& ContinuedFraction::q(long n) const { return q_[check_index(n, -1)]; }
const Integer& ContinuedFraction::p(long n) const { return p_[check_index(n, -1)]; }

const LinearForm& ContinuedFraction::delta_form(long n) const {
    return delta_forms_[check_index(n, -1)];
}

const Real& ContinuedFraction::delta(long n) const { return delta_values_[check_index(n, -1)]; }

std::int64_t ContinuedFraction::q_small(long n) const {
    const Integer& v = q(n);
    if (v > Integer(std::numeric_limits<std::int64_t>::max() / 4)) {
        throw DepthExceededError("q_" + std::to_string(n) + " = " + v.str() +
                                 " is too large for orbit bookkeeping");
    }
    return v.convert_to<std::int64_t>();
}

DiophantineProfile diophantine_profile(const ContinuedFraction& cf, double tau) {
    if (cf.depth() < 3) {
        throw InvalidInputError("diophantine_profile needs depth >= 3");
    }
    if (tau < 0) throw InvalidInputError("tau must be non-negative");

    DiophantineProfile prof;
    prof.tau = tau;
    prof.depth = cf.depth();

    // Gamma over n = 0..N-1 uses a_{n+1} and q_n.
    prof.log_Gamma = -std::numeric_limits<double>::infinity();
    Integer max_a = 0;
    std::size_t max_a_at = 0;
    for (std::size_t n = 0; n < cf.depth(); ++n) {
        const Integer& a_next = cf.a(n + 1);
        const double value = log_integer(a_next) - tau * log_integer(cf.q(static_cast<long>(n)));
        if (value > prof.log_Gamma) {
            prof.log_Gamma = value;
            prof.Gamma_argmax = n;
        }
        if (a_next > max_a) {
            max_a = a_next;
            max_a_at = n;
        }
    }
    prof.Gamma = std::exp(prof.log_Gamma);
    // Bounded type at this depth: the largest quotient already shows up in
    // the first half of the tested range, i.e. the sup has stopped growing.
    prof.bounded_type_at_depth = 2 * max_a_at < cf.depth();

    double log_product = 0.0;
    bool first = true;
    for (std::size_t n = 1; n <= cf.depth(); ++n) {
        log_product += log_integer(cf.a(n));
        const double log_q = log_integer(cf.q(static_cast<long>(n)));
        if (log_q <= 0.0) continue;
        if (first) {
            prof.nu_first_index = n;
            first = false;
        }
        prof.nu1_seq.push_back(2.0 * log_product / log_q);
        prof.nu2_seq.push_back(static_cast<double>(n) / log_q);
    }
    return prof;
}

std::vector<Integer> generate_quotients(const QuotientKind& kind, std::size_t depth) {
    if (depth == 0) throw InvalidInputError("depth must be at least 1");
    std::vector<Integer> out;
    out.reserve(depth);

    if (std::holds_alternative<quotient_kind::Golden>(kind)) {
        out.assign(depth, Integer(1));
    } else if (const auto* per = std::get_if<quotient_kind::Periodic>(&kind)) {
        if (per->word.empty()) throw InvalidInputError("periodic word is empty");
        for (const Integer& a : per->word) {
            if (a < 1) throw InvalidInputError("periodic word has a non-positive entry");
        }
        for (std::size_t n = 0; n < depth; ++n) out.push_back(per->word[n % per->word.size()]);
    } else if (const auto* growth = std::get_if<quotient_kind::PrescribedGrowth>(&kind)) {
        if (!(growth->tau >= 0)) throw InvalidInputError("growth exponent must be non-negative");
        const bool integral = growth->tau == std::floor(growth->tau) && growth->tau < 64;
        Integer q_prev = 0, q_cur = 1;
        for (std::size_t n = 0; n < depth; ++n) {
            Integer a;
            if (integral) {
                a = boost::multiprecision::pow(q_cur, static_cast<unsigned>(growth->tau));
            } else {
                const unsigned bits =
                    static_cast<unsigned>(mpz_sizeinbase(q_cur.backend().data(), 2) *
                                          (growth->tau + 1.0)) + 128;
                PrecisionScope scope(bits);
                const Real power = pow(to_real(q_cur), Real(growth->tau));
                const Real up = ceil(power);
                mpz_t z;
                mpz_init(z);
                mpfr_get_z(z, up.backend().data(), MPFR_RNDN);
                a = Integer(z);
                mpz_clear(z);
            }
            if (a < 1) a = 1;
            out.push_back(a);
            Integer q_next = a * q_cur + q_prev;
            q_prev = q_cur;
            q_cur = q_next;
        }
    } else {
        const auto& rnd = std::get<quotient_kind::RandomBounded>(kind);
        if (rnd.max_a < 1) throw InvalidInputError("max_a must be at least 1");
        std::mt19937_64 engine(rnd.seed);
        std::uniform_int_distribution<std::uint64_t> dist(1, rnd.max_a);
        for (std::size_t n = 0; n < depth; ++n) out.push_back(Integer(dist(engine)));
    }
    return out;
}

DimensionBounds dimension_bounds(double tau, double nu1, double nu2, double M) {
    if (!(tau >= 0)) throw InvalidInputError("tau must be non-negative");
    if (!(nu2 > 0)) throw InvalidInputError("nu2 must be positive");
    if (!(M > 1)) throw InvalidInputError("M must exceed 1 (log M must be positive)");
    DimensionBounds b;
    const double denom = 2.0 * tau + nu1 + nu2 * std::log(M);
    b.lower_raw = denom > 0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
    b.lower_clamped = b.lower_raw > 1.0;
    b.lower = std::min(1.0, b.lower_raw);
    b.upper = 1.0 / (tau + 1.0);
    return b;
}

}  // namespace critdim
