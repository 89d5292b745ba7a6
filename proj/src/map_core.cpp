#include "critdim/map_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "critdim/errors.hpp"

namespace critdim {

const char* to_string(Family family) {
    switch (family) {
        case Family::rigid_rotation: return "rigid_rotation";
        case Family::arnold_cubic: return "arnold_cubic";
        case Family::mfold_cubic: return "mfold_cubic";
        case Family::perturbed_bicritical: return "perturbed_bicritical";
    }
    return "unknown";
}

Family family_from_string(std::string_view name) {
    if (name == "rigid_rotation") return Family::rigid_rotation;
    if (name == "arnold_cubic") return Family::arnold_cubic;
    if (name == "mfold_cubic") return Family::mfold_cubic;
    if (name == "perturbed_bicritical") return Family::perturbed_bicritical;
    throw InvalidInputError("unknown map family '" + std::string(name) + "'");
}

namespace {

Real at_precision(const Real& x, unsigned bits) { return Real(x, digits10_for_bits(bits)); }

Real guard_threshold(unsigned bits) {
    return Real(ldexp(Real(1), -static_cast<int>(bits / 2)));
}

}  // namespace

MapSpec MapSpec::rigid_rotation(const Real& omega, unsigned bits) {
    PrecisionScope scope(bits);
    MapSpec s;
    s.family_ = Family::rigid_rotation;
    s.bits_ = bits;
    s.omega_ = at_precision(omega, bits);
    s.a1_ = 0;
    s.a2_ = 0;
    s.declare_critical_points();
    return s;
}

MapSpec MapSpec::arnold_cubic(const Real& omega, unsigned bits) {
    MapSpec s = mfold_cubic(1, omega, bits);
    s.family_ = Family::arnold_cubic;
    return s;
}

MapSpec MapSpec::mfold_cubic(int m, const Real& omega, unsigned bits) {
    if (m < 1) throw InvalidInputError("mfold_cubic needs m >= 1");
    PrecisionScope scope(bits);
    MapSpec s;
    s.family_ = Family::mfold_cubic;
    s.bits_ = bits;
    s.m_ = m;
    s.omega_ = at_precision(omega, bits);
    s.a1_ = 0;
    s.a2_ = 0;
    s.declare_critical_points();
    return s;
}

MapSpec MapSpec::perturbed_bicritical(const Real& a1, const Real& a2, const Real& omega,
                                      unsigned bits) {
    PrecisionScope scope(bits);
    MapSpec s;
    s.family_ = Family::perturbed_bicritical;
    s.bits_ = bits;
    s.omega_ = at_precision(omega, bits);
    s.a1_ = at_precision(a1, bits);
    s.a2_ = at_precision(a2, bits);
    s.declare_critical_points();
    return s;
}

MapSpec MapSpec::bicritical_from_cosine(const Real& u_star, const Real& omega, unsigned bits) {
    PrecisionScope scope(bits);
    const Real u = at_precision(u_star, bits);
    if (!(u > -1 && u < 1)) throw InvalidInputError("u* must lie in (-1, 1)");
    const Real b2 = 1 / (1 + 2 * u * u);
    const Real b1 = -4 * u * b2;
    return perturbed_bicritical(Real(b1 / two_pi()), Real(b2 / (2 * two_pi())), omega, bits);
}

void MapSpec::declare_critical_points() {
    critical_.clear();
    switch (family_) {
        case Family::rigid_rotation:
            return;
        case Family::arnold_cubic:
        case Family::mfold_cubic:
            for (int j = 0; j < m_; ++j) {
                critical_.push_back({Real(Real(j) / m_), 3.0});
            }
            return;
        case Family::perturbed_bicritical: {
            // F' = g(cos 2 pi x) with g(u) = 2 b2 u^2 + b1 u + (1 - b2).
            const Real b1 = two_pi() * a1_;
            const Real b2 = 2 * two_pi() * a2_;
            const Real tol = guard_threshold(bits_);
            auto g = [&](const Real& u) { return Real(2 * b2 * u * u + b1 * u + 1 - b2); };
            Real u_min = -1;
            Real g_min = g(Real(-1));
            if (g(Real(1)) < g_min) {
                u_min = 1;
                g_min = g(Real(1));
            }
            if (b2 > 0) {
                const Real vertex = -b1 / (4 * b2);
                if (vertex > -1 && vertex < 1 && g(vertex) < g_min) {
                    u_min = vertex;
                    g_min = g(vertex);
                }
            }
            if (abs(g_min) > tol) return;  // diffeomorphism, or invalid (see validate_map)
            if (u_min == 1) {
                critical_.push_back({Real(0), 3.0});
            } else if (u_min == -1) {
                critical_.push_back({Real(0.5), 3.0});
            } else {
                const Real theta = acos(u_min) / two_pi();
                critical_.push_back({theta, 3.0});
                critical_.push_back({Real(1 - theta), 3.0});
            }
            return;
        }
    }
}

double MapSpec::derivative_sup() const {
    switch (family_) {
        case Family::rigid_rotation: return 1.0;
        case Family::arnold_cubic:
        case Family::mfold_cubic: return 2.0;
        case Family::perturbed_bicritical:
            return 1.0 + 2 * M_PI * std::abs(to_double(a1_)) + 4 * M_PI * std::abs(to_double(a2_));
    }
    return 0.0;
}

double MapSpec::second_derivative_sup() const {
    switch (family_) {
        case Family::rigid_rotation: return 0.0;
        case Family::arnold_cubic:
        case Family::mfold_cubic: return 2 * M_PI * m_;
        case Family::perturbed_bicritical:
            return 4 * M_PI * M_PI * std::abs(to_double(a1_)) +
                   16 * M_PI * M_PI * std::abs(to_double(a2_));
    }
    return 0.0;
}

MapSpec MapSpec::with_omega(const Real& omega) const {
    PrecisionScope scope(bits_);
    MapSpec s = *this;
    s.omega_ = at_precision(omega, bits_);
    return s;
}

MapSpec MapSpec::with_precision(unsigned bits) const {
    PrecisionScope scope(bits);
    MapSpec s = *this;
    s.bits_ = bits;
    s.omega_ = at_precision(omega_, bits);
    s.a1_ = at_precision(a1_, bits);
    s.a2_ = at_precision(a2_, bits);
    s.declare_critical_points();
    return s;
}

LiftEvaluator::LiftEvaluator(const MapSpec& spec)
    : family_(spec.family()), omega_(spec.omega()), a1_(spec.a1()), a2_(spec.a2()) {
    PrecisionScope scope(spec.precision_bits());
    two_pi_ = two_pi();
    freq_ = two_pi_ * spec.m();
}

Real LiftEvaluator::value(const Real& x) const {
    switch (family_) {
        case Family::rigid_rotation:
            return Real(x + omega_);
        case Family::arnold_cubic:
        case Family::mfold_cubic: {
            const Real t = freq_ * frac(x);
            return Real(x + omega_ - sin(t) / freq_);
        }
        case Family::perturbed_bicritical: {
            const Real t = two_pi_ * frac(x);
            return Real(x + omega_ + a1_ * sin(t) + a2_ * sin(Real(2 * t)));
        }
    }
    return x;
}

Real LiftEvaluator::derivative(const Real& x, int order) const {
    if (order < 1 || order > 3) throw InvalidInputError("derivative order must be 1, 2 or 3");
    switch (family_) {
        case Family::rigid_rotation:
            return Real(order == 1 ? 1 : 0);
        case Family::arnold_cubic:
        case Family::mfold_cubic: {
            const Real t = freq_ * frac(x);
            if (order == 1) return Real(1 - cos(t));
            if (order == 2) return Real(freq_ * sin(t));
            return Real(freq_ * freq_ * cos(t));
        }
        case Family::perturbed_bicritical: {
            const Real t = two_pi_ * frac(x);
            const Real t2 = 2 * t;
            if (order == 1) return Real(1 + two_pi_ * a1_ * cos(t) + 2 * two_pi_ * a2_ * cos(t2));
            const Real w2 = two_pi_ * two_pi_;
            if (order == 2) return Real(-w2 * a1_ * sin(t) - 4 * w2 * a2_ * sin(t2));
            const Real w3 = w2 * two_pi_;
            return Real(-w3 * a1_ * cos(t) - 8 * w3 * a2_ * cos(t2));
        }
    }
    return Real(0);
}

double LiftEvaluator::derivative_double(const Real& x) const {
    const double t = 2 * M_PI * to_double(frac(x));
    switch (family_) {
        case Family::rigid_rotation: return 1.0;
        case Family::arnold_cubic:
        case Family::mfold_cubic:
            return 1.0 - std::cos(to_double(freq_) / (2 * M_PI) * t);
        case Family::perturbed_bicritical:
            return 1.0 + 2 * M_PI * to_double(a1_) * std::cos(t) +
                   4 * M_PI * to_double(a2_) * std::cos(2 * t);
    }
    return 1.0;
}

Real eval_lift(const MapSpec& spec, const Real& x) {
    PrecisionScope scope(spec.precision_bits());
    return LiftEvaluator(spec).value(x);
}

Real derivatives(const MapSpec& spec, const Real& x, int order) {
    PrecisionScope scope(spec.precision_bits());
    return LiftEvaluator(spec).derivative(x, order);
}

Real schwarzian(const MapSpec& spec, const Real& x) {
    PrecisionScope scope(spec.precision_bits());
    const LiftEvaluator eval(spec);
    const Real d1 = eval.derivative(x, 1);
    if (abs(d1) <= guard_threshold(spec.precision_bits())) {
        std::string where = "x = " + to_decimal(x, 12);
        Real best = 2;
        for (std::size_t i = 0; i < spec.critical_points().size(); ++i) {
            const Real dist = abs(circle_offset(spec.critical_points()[i].position, x));
            if (dist < best) {
                best = dist;
                where = "critical point c_" + std::to_string(i) + " = " +
                        to_decimal(spec.critical_points()[i].position, 12);
            }
        }
        throw DomainError("Schwarzian undefined within the guard distance of " + where);
    }
    const Real d2 = eval.derivative(x, 2);
    const Real d3 = eval.derivative(x, 3);
    const Real ratio = d2 / d1;
    return Real(d3 / d1 - Real(1.5) * ratio * ratio);
}

ValidationReport validate_map(const MapSpec& spec) {
    const unsigned bits = spec.precision_bits();
    PrecisionScope scope(bits);
    const LiftEvaluator eval(spec);
    ValidationReport rep;
    rep.family = spec.family();
    rep.grid_size = 4096;
    rep.min_derivative = std::numeric_limits<double>::infinity();

    for (std::size_t k = 0; k < rep.grid_size; ++k) {
        const Real x = Real(k) / rep.grid_size;
        const double d = to_double(eval.derivative(x, 1));
        if (d < rep.min_derivative) {
            rep.min_derivative = d;
            rep.min_derivative_at = to_double(x);
        }
        const Real shifted = x + Real(0.3719);
        const Real defect = abs(eval.value(Real(shifted + 1)) - eval.value(shifted) - 1);
        rep.periodicity_defect = std::max(rep.periodicity_defect, to_double(defect));
    }
    for (const CriticalPoint& c : spec.critical_points()) {
        rep.min_derivative = std::min(rep.min_derivative, to_double(eval.derivative(c.position, 1)));
    }
    const double tol = std::ldexp(1.0, -static_cast<int>(bits / 2));
    rep.monotone = rep.min_derivative >= -tol;
    if (!rep.monotone) {
        throw InvalidFamilyError("F' = " + std::to_string(rep.min_derivative) + " < 0 near x = " +
                                 std::to_string(rep.min_derivative_at) +
                                 ": parameters leave the homeomorphism class");
    }

    for (const CriticalPoint& c : spec.critical_points()) {
        CriticalPointCheck chk;
        chk.position = c.position;
        chk.declared_criticality = c.criticality;
        chk.derivative_abs = to_double(abs(eval.derivative(c.position, 1)));
        chk.second_derivative_abs = to_double(abs(eval.derivative(c.position, 2)));
        const double third = to_double(abs(eval.derivative(c.position, 3)));
        chk.vanishes = chk.derivative_abs <= tol;
        chk.even_order = chk.second_derivative_abs <= std::sqrt(tol) && third > std::sqrt(tol);

        // log-log slope of |F(c +- h) - F(c)| against h = 2^-k.
        const Real fc = eval.value(c.position);
        std::vector<double> xs, ys;
        for (unsigned k = 8; k <= bits / 4; ++k) {
            const Real h = ldexp(Real(1), -static_cast<int>(k));
            for (int side : {-1, 1}) {
                const Real diff = abs(eval.value(Real(c.position + side * h)) - fc);
                if (diff <= 0) continue;
                xs.push_back(-static_cast<double>(k) * std::log(2.0));
                ys.push_back(std::log(to_double(diff)));
            }
        }
        chk.scales_used = static_cast<int>(xs.size() / 2);
        if (xs.size() >= 2) {
            const double n = static_cast<double>(xs.size());
            double mx = 0, my = 0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                mx += xs[i];
                my += ys[i];
            }
            mx /= n;
            my /= n;
            double sxx = 0, sxy = 0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                sxx += (xs[i] - mx) * (xs[i] - mx);
                sxy += (xs[i] - mx) * (ys[i] - my);
            }
            chk.fitted_exponent = sxy / sxx;
            double ss = 0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                const double r = ys[i] - (my + chk.fitted_exponent * (xs[i] - mx));
                ss += r * r;
            }
            chk.fit_residual = std::sqrt(ss / n);
        }
        rep.critical.push_back(std::move(chk));
    }
    return rep;
}

std::int64_t OrbitSegment::winding(std::size_t k) const {
    return floor(positions[k]).convert_to<std::int64_t>();
}

double OrbitSegment::error_bound(std::size_t k) const { return std::exp2(log2_error[k]); }

OrbitStepper::OrbitStepper(const MapSpec& spec, const Real& x0)
    : spec_(spec),
      eval_(spec),
      log2_err_(-std::numeric_limits<double>::infinity()),
      second_sup_(spec.second_derivative_sup()) {
    PrecisionScope scope(spec.precision_bits());
    x_ = at_precision(x0, spec.precision_bits());
}

void OrbitStepper::step() {
    const unsigned bits = spec_.precision_bits();
    PrecisionScope scope(bits);
    // e' = sup |F'| over [x - e, x + e] * e + rounding of the new point.
    double propagated = -std::numeric_limits<double>::infinity();
    if (std::isfinite(log2_err_)) {
        const double lip = eval_.derivative_double(x_) + 1e-15 + second_sup_ * std::exp2(log2_err_);
        propagated = log2_err_ + std::log2(lip);
    }
    x_ = eval_.value(x_);
    const double rounding = std::log2(std::abs(to_double(x_)) + 4.0) - static_cast<double>(bits);
    log2_err_ = log2_add(propagated, rounding);
    ++steps_;
    if (log2_err_ > -64.0) {
        throw PrecisionError("orbit error bound 2^" + std::to_string(log2_err_) + " after " +
                             std::to_string(steps_) + " steps exceeds the budget at " +
                             std::to_string(bits) + " bits; increase precision_bits");
    }
}

void check_orbit_budget(unsigned precision_bits, std::size_t count) {
    const double needed = std::log2(static_cast<double>(count) + 1.0) + 1.0;
    if (needed > static_cast<double>(precision_bits) - 64.0) {
        throw PrecisionError("an orbit of " + std::to_string(count) + " steps needs more than " +
                             std::to_string(precision_bits) + " bits; suggest precision_bits >= " +
                             std::to_string(static_cast<unsigned>(std::ceil(needed)) + 64 + 32));
    }
    if (count > 200'000'000) {
        throw PrecisionError("orbit of " + std::to_string(count) + " steps exceeds the storage cap");
    }
}

OrbitSegment iterate_orbit(const MapSpec& spec, const Real& x0, std::size_t count) {
    if (count < 1) throw InvalidInputError("orbit count must be at least 1");
    check_orbit_budget(spec.precision_bits(), count);
    PrecisionScope scope(spec.precision_bits());
    OrbitSegment orbit;
    orbit.precision_bits = spec.precision_bits();
    OrbitStepper stepper(spec, x0);
    orbit.x0 = stepper.position();
    orbit.positions.reserve(count + 1);
    orbit.log2_error.reserve(count + 1);
    orbit.positions.push_back(stepper.position());
    orbit.log2_error.push_back(std::log2(std::abs(to_double(stepper.position())) + 4.0) -
                               static_cast<double>(spec.precision_bits()));
    for (std::size_t k = 0; k < count; ++k) {
        stepper.step();
        orbit.positions.push_back(stepper.position());
        orbit.log2_error.push_back(stepper.log2_error());
    }
    return orbit;
}

}  // namespace critdim
