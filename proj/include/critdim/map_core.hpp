#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "critdim/numeric.hpp"

namespace critdim {

enum class Family {
    rigid_rotation,        // F(x) = x + omega (control case, no critical points)
    arnold_cubic,          // F(x) = x + omega - sin(2 pi x) / (2 pi)
    mfold_cubic,           // F(x) = x + omega - sin(2 pi m x) / (2 pi m)
    perturbed_bicritical,  // F(x) = x + omega + a1 sin(2 pi x) + a2 sin(4 pi x)
};

const char* to_string(Family family);
Family family_from_string(std::string_view name);

struct CriticalPoint {
    Real position;  // in [0, 1)
    double criticality = 3.0;
};

/// One member of a parametric circle-map family. Immutable once built.
class MapSpec {
public:
    static MapSpec rigid_rotation(const Real& omega, unsigned bits = kDefaultPrecisionBits);
    static MapSpec arnold_cubic(const Real& omega, unsigned bits = kDefaultPrecisionBits);
    static MapSpec mfold_cubic(int m, const Real& omega, unsigned bits = kDefaultPrecisionBits);
    static MapSpec perturbed_bicritical(const Real& a1, const Real& a2, const Real& omega,
                                        unsigned bits = kDefaultPrecisionBits);
    /// Amplitudes giving F' = 2 b2 (cos 2 pi x - u*)^2 with b2 = 1 / (1 + 2 u*^2):
    /// two cubic critical points at cos(2 pi x) = u*.
    static MapSpec bicritical_from_cosine(const Real& u_star, const Real& omega,
                                          unsigned bits = kDefaultPrecisionBits);

    Family family() const { return family_; }
    const Real& omega() const { return omega_; }
    int m() const { return m_; }
    const Real& a1() const { return a1_; }
    const Real& a2() const { return a2_; }
    unsigned precision_bits() const { return bits_; }

    /// Critical points in increasing order, declared analytically.
    const std::vector<CriticalPoint>& critical_points() const { return critical_; }

    /// Upper bounds for sup |F'| and sup |F''| over the circle.
    double derivative_sup() const;
    double second_derivative_sup() const;

    MapSpec with_omega(const Real& omega) const;
    MapSpec with_precision(unsigned bits) const;

private:
    MapSpec() = default;
    void declare_critical_points();

    Family family_ = Family::rigid_rotation;
    Real omega_;
    int m_ = 1;
    Real a1_;
    Real a2_;
    unsigned bits_ = kDefaultPrecisionBits;
    std::vector<CriticalPoint> critical_;
};

/// Evaluates a lift and its derivatives with constants hoisted out of the
/// per-point work. Must be used under the map's working precision.
class LiftEvaluator {
public:
    explicit LiftEvaluator(const MapSpec& spec);

    Real value(const Real& x) const;
    Real derivative(const Real& x, int order) const;
    /// F'(x) in double precision, good to ~1e-15 absolute.
    double derivative_double(const Real& x) const;

private:
    Family family_;
    Real omega_;
    Real a1_;
    Real a2_;
    Real two_pi_;
    Real freq_;  // 2 pi m
};

Real eval_lift(const MapSpec& spec, const Real& x);

/// Analytic derivative of order 1..3.
Real derivatives(const MapSpec& spec, const Real& x, int order);

/// S f = F'''/F' - (3/2) (F''/F')^2. Throws DomainError within the guard
/// |F'(x)| <= 2^{-precision_bits/2} of a critical point.
Real schwarzian(const MapSpec& spec, const Real& x);

struct CriticalPointCheck {
    Real position;
    double declared_criticality = 3.0;
    double derivative_abs = 0.0;         // |F'(c)|
    double second_derivative_abs = 0.0;  // |F''(c)|, zero for an even-order zero of F'
    bool vanishes = false;
    bool even_order = false;
    double fitted_exponent = 0.0;
    double fit_residual = 0.0;
    int scales_used = 0;
};

struct ValidationReport {
    Family family = Family::rigid_rotation;
    std::size_t grid_size = 0;
    double min_derivative = 0.0;
    double min_derivative_at = 0.0;
    bool monotone = false;
    double periodicity_defect = 0.0;  // max |F(x+1) - F(x) - 1| on the grid
    std::vector<CriticalPointCheck> critical;
};

/// Checks monotonicity, vanishing at the declared critical points and the
/// local power law. Throws InvalidFamilyError when F' < 0 somewhere.
ValidationReport validate_map(const MapSpec& spec);

/// Forward orbit x_0, ..., x_count stored as lift values.
struct OrbitSegment {
    Real x0;
    std::vector<Real> positions;
    /// log2 of the propagated bound on |computed - exact| for each point.
    std::vector<double> log2_error;
    unsigned precision_bits = kDefaultPrecisionBits;

    std::size_t size() const { return positions.size(); }
    const Real& operator[](std::size_t k) const { return positions[k]; }
    Real circle_position(std::size_t k) const { return frac(positions[k]); }
    std::int64_t winding(std::size_t k) const;
    double error_bound(std::size_t k) const;
};

/// Streaming orbit with the same error bookkeeping as iterate_orbit, for
/// orbits too long to store.
class OrbitStepper {
public:
    OrbitStepper(const MapSpec& spec, const Real& x0);

    const Real& position() const { return x_; }
    double log2_error() const { return log2_err_; }
    std::size_t steps() const { return steps_; }
    const MapSpec& spec() const { return spec_; }

    /// Advances one step; throws PrecisionError once the error bound exceeds
    /// 2^{-64} (more than precision_bits - 64 bits lost).
    void step();

private:
    MapSpec spec_;
    LiftEvaluator eval_;
    Real x_;
    double log2_err_;
    double second_sup_;
    std::size_t steps_ = 0;
};

/// A-priori budget: the orbit needs at least log2(count) spare bits above
/// the 64-bit reserve.
void check_orbit_budget(unsigned precision_bits, std::size_t count);

OrbitSegment iterate_orbit(const MapSpec& spec, const Real& x0, std::size_t count);

}  // namespace critdim
