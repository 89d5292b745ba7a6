#include "critdim/rotation.hpp"

#include <cmath>
#include <limits>

#include "critdim/cf_engine.hpp"
#include "critdim/errors.hpp"

namespace critdim {

namespace {

Real lock_threshold(unsigned bits) { return ldexp(Real(1), -static_cast<int>(bits - 32)); }

Integer to_integer(const Real& x) {
    mpz_t z;
    mpz_init(z);
    mpfr_get_z(z, x.backend().data(), MPFR_RNDN);
    Integer out(z);
    mpz_clear(z);
    return out;
}

RationalLock reduced(Integer p, Integer q) {
    const Integer g = gcd(p, q);
    if (g > 1) {
        p /= g;
        q /= g;
    }
    return {p, q};
}

Real ratio(const Integer& p, const Integer& q) { return Real(to_real(p) / to_real(q)); }

struct SideRecord {
    Real displacement;  // frac(x_m - x_0)
    Real position;      // lift value x_m
    std::size_t time = 0;
};

}  // namespace

RotationReading birkhoff_estimate(const MapSpec& spec, std::size_t n_iterations) {
    if (n_iterations < 10) throw InvalidInputError("birkhoff_estimate needs at least 10 iterations");
    const unsigned bits = spec.precision_bits();
    check_orbit_budget(bits, n_iterations);
    PrecisionScope scope(bits);
    const Real thr = lock_threshold(bits);

    OrbitStepper stepper(spec, Real(0));
    RotationReading r;
    bool have_bracket = false;
    for (std::size_t m = 1; m <= n_iterations; ++m) {
        stepper.step();
        r.iterations = m;
        const Real& x = stepper.position();
        const Real nearest = round(x);
        const Real gap = abs(Real(x - nearest));
        const Real err = ldexp(Real(1), static_cast<int>(std::ceil(stepper.log2_error())));
        if (gap <= err && err >= thr) {
            throw ResolutionError("F^" + std::to_string(m) + "(0) is within the error bound of " +
                                  "an integer; increase precision_bits");
        }
        if (gap < thr) {
            r.rational_lock = reduced(to_integer(nearest), Integer(m));
            r.rho_lo = r.rho_hi = ratio(r.rational_lock->p, r.rational_lock->q);
            return r;
        }
        const Real fl = floor(x);
        const Real lo = fl / m;
        const Real hi = (fl + 1) / m;
        if (!have_bracket) {
            r.rho_lo = lo;
            r.rho_hi = hi;
            have_bracket = true;
        } else {
            if (lo > r.rho_lo) r.rho_lo = lo;
            if (hi < r.rho_hi) r.rho_hi = hi;
        }
    }
    return r;
}

RotationReading closest_return_quotients(const MapSpec& spec, const Real& base, std::size_t depth,
                                         const ClosestReturnOptions& options) {
    if (depth < 1) throw InvalidInputError("closest-return depth must be at least 1");
    const unsigned bits = spec.precision_bits();
    PrecisionScope scope(bits);
    const Real thr = lock_threshold(bits);

    OrbitStepper stepper(spec, frac(base));
    const Real x0 = stepper.position();
    const double e0 = std::log2(2.0 + std::abs(to_double(x0))) - bits;

    RotationReading r;
    SideRecord right, left;
    int current_side = 0;
    std::size_t run_length = 0;
    Integer q_prev2 = 0, q_prev1 = 1;

    auto close_run = [&]() {
        const SideRecord& rec = current_side > 0 ? right : left;
        const Integer q(rec.time);
        const Integer a(run_length);
        if (q != a * q_prev1 + q_prev2) {
            throw ResolutionError("closest-return time " + q.str() +
                                  " breaks the return-time recurrence; increase precision_bits");
        }
        const Integer p = to_integer(floor(Real(rec.position - x0))) + (current_side > 0 ? 0 : 1);
        r.quotients.push_back(a);
        r.return_times.push_back(q);
        r.return_numerators.push_back(p);
        r.return_distances.push_back(current_side > 0 ? rec.displacement
                                                      : Real(1 - rec.displacement));
        q_prev2 = q_prev1;
        q_prev1 = q;
    };

    auto set_lock = [&](const Integer& p, const Integer& q) {
        r.rational_lock = reduced(p, q);
        r.rho_lo = r.rho_hi = ratio(r.rational_lock->p, r.rational_lock->q);
    };

    for (std::size_t m = 1;; ++m) {
        if (m > options.max_iterations) {
            r.complete = false;
            break;
        }
        stepper.step();
        r.iterations = m;
        const Real& x = stepper.position();
        const Real diff = x - x0;
        const Real fl = floor(diff);
        const Real d = diff - fl;
        const Real err = ldexp(Real(1), static_cast<int>(std::ceil(log2_add(stepper.log2_error(), e0))));

        if (d < thr || 1 - d < thr) {
            set_lock(to_integer(round(diff)), Integer(m));
            return r;
        }
        int side = 0;
        if (m == 1) {
            right = left = {d, x, m};
            side = -1;
        } else {
            for (const SideRecord* rec : {&right, &left}) {
                const Real gap = abs(Real(d - rec->displacement));
                if (gap <= err) {
                    throw ResolutionError("closest return at time " + std::to_string(m) +
                                          " is within the error bound of the record at time " +
                                          std::to_string(rec->time) + "; increase precision_bits");
                }
                if (gap < thr) {
                    set_lock(to_integer(round(Real(x - rec->position))), Integer(m - rec->time));
                    return r;
                }
            }
            if (d < right.displacement) {
                right = {d, x, m};
                side = 1;
            } else if (d > left.displacement) {
                left = {d, x, m};
                side = -1;
            }
        }
        if (side == 0) continue;
        if (side == current_side) {
            ++run_length;
            continue;
        }
        if (current_side != 0) {
            close_run();
            if (r.quotients.size() == depth) break;
        }
        current_side = side;
        run_length = 1;
    }

    const std::size_t k = r.return_times.size();
    if (k == 0) {
        r.rho_lo = 0;
        r.rho_hi = 1;
    } else {
        const Real last = ratio(r.return_numerators[k - 1], r.return_times[k - 1]);
        const Real before = k >= 2 ? ratio(r.return_numerators[k - 2], r.return_times[k - 2])
                                   : Real(to_real(r.return_numerators[0]) - 1);
        r.rho_lo = min(last, before);
        r.rho_hi = max(last, before);
    }
    return r;
}

TuneResult tune_parameter(const MapSpec& family, std::span<const Integer> target,
                          std::size_t depth, const TuneOptions& options) {
    if (depth < 1) throw InvalidInputError("tuning depth must be at least 1");
    if (target.size() < depth) {
        throw InvalidInputError("target has " + std::to_string(target.size()) +
                                " quotients, fewer than the depth " + std::to_string(depth));
    }
    const std::size_t levels = depth + options.extra_levels;
    std::vector<Integer> ext(target.begin(), target.begin() + static_cast<long>(std::min(levels, target.size())));
    while (ext.size() < levels) ext.emplace_back(1);
    const unsigned bits = family.precision_bits();
    const ContinuedFraction cf = convergents(ext, levels, std::nullopt, bits);
    const std::size_t longest = static_cast<std::size_t>(cf.q_small(static_cast<long>(levels)));
    check_orbit_budget(bits, longest);
    const std::size_t max_steps = options.max_steps ? options.max_steps : bits - 16;

    PrecisionScope scope(bits);
    Real lo = 0, hi = 1;
    enum class Verdict { too_small, too_large, inside, ambiguous };

    auto judge = [&](const MapSpec& spec) {
        OrbitStepper stepper(spec, Real(0));
        std::size_t m = 0;
        for (std::size_t k = 1; k <= levels; ++k) {
            const std::size_t qk = static_cast<std::size_t>(cf.q_small(static_cast<long>(k)));
            while (m < qk) {
                stepper.step();
                ++m;
            }
            const Real gap = stepper.position() - to_real(cf.p(static_cast<long>(k)));
            const Real err = ldexp(Real(1), static_cast<int>(std::ceil(stepper.log2_error())) + 1);
            if (abs(gap) <= err) return Verdict::ambiguous;
            if (k % 2 == 1 && gap >= 0) return Verdict::too_large;
            if (k % 2 == 0 && gap < 0) return Verdict::too_small;
        }
        return Verdict::inside;
    };

    TuneResult result;
    for (std::size_t step = 0; step < max_steps; ++step) {
        // An exact hit F^q(0) = p (e.g. at a dyadic omega with symmetric
        // orbit) cannot be ordered; shift the split point slightly instead.
        Real mid = (lo + hi) / 2;
        Verdict v = Verdict::ambiguous;
        MapSpec spec = family;
        for (int attempt = 0; attempt < 8 && v == Verdict::ambiguous; ++attempt) {
            if (attempt > 0) mid = lo + (hi - lo) * (Real(1) / 2 + Real(attempt) / 1024);
            spec = family.with_omega(mid);
            v = judge(spec);
        }
        result.steps = step + 1;
        if (v == Verdict::ambiguous) {
            throw TuningError("order test stays ambiguous near omega = " + to_decimal(mid, 20) +
                              "; bracket [" + to_decimal(lo, 20) + ", " + to_decimal(hi, 20) + "]");
        }
        if (v == Verdict::too_large) {
            hi = mid;
        } else if (v == Verdict::too_small) {
            lo = mid;
        } else {
            result.omega = mid;
            result.omega_lo = lo;
            result.omega_hi = hi;
            result.reading = closest_return_quotients(spec, Real(0), depth);
            if (result.reading.quotients.size() < depth ||
                !std::equal(result.reading.quotients.begin(), result.reading.quotients.end(),
                            ext.begin())) {
                throw TuningError("re-extraction at omega = " + to_decimal(mid, 30) +
                                  " does not reproduce the target prefix");
            }
            return result;
        }
    }
    throw TuningError("no convergence within " + std::to_string(max_steps) +
                      " bisection steps; best bracket [" + to_decimal(lo, 30) + ", " +
                      to_decimal(hi, 30) + "]");
}

}  // namespace critdim
