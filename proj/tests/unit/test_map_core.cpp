#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "critdim/errors.hpp"
#include "critdim/map_core.hpp"

using namespace critdim;

namespace {

// Five-point central differences of the lift at step h.
struct FiniteDifferences {
    double d1, d2, d3;
};

FiniteDifferences finite_differences(const MapSpec& spec, const Real& x, const Real& h) {
    PrecisionScope scope(spec.precision_bits());
    const Real fm2 = eval_lift(spec, Real(x - 2 * h));
    const Real fm1 = eval_lift(spec, Real(x - h));
    const Real f0 = eval_lift(spec, x);
    const Real fp1 = eval_lift(spec, Real(x + h));
    const Real fp2 = eval_lift(spec, Real(x + 2 * h));
    return {to_double((fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)),
            to_double((-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)),
            to_double((-fm2 + 2 * fm1 - 2 * fp1 + fp2) / (2 * h * h * h))};
}

}  // namespace

TEST_CASE("lift values") {
    CHECK(to_double(eval_lift(MapSpec::rigid_rotation(Real(0.25)), Real(0))) == 0.25);
    const MapSpec arnold = MapSpec::arnold_cubic(Real(0.25));
    CHECK(to_double(eval_lift(arnold, Real(0))) == 0.25);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const MapSpec specs[] = {arnold, MapSpec::mfold_cubic(3, Real(0.1)),
                             MapSpec::bicritical_from_cosine(Real(0.3), Real(0.4))};
    for (const MapSpec& s : specs) {
        PrecisionScope scope(s.precision_bits());
        for (int k = 0; k < 100; ++k) {
            const Real x = u(rng);
            const Real defect = eval_lift(s, Real(x + 1)) - eval_lift(s, x) - 1;
            CHECK(abs(defect) < ldexp(Real(1), -240));
        }
    }
    const MapSpec three = MapSpec::mfold_cubic(3, Real(0.1));
    PrecisionScope scope(256);
    const Real third = Real(1) / 3;
    for (double x : {0.05, 0.41, 0.77}) {
        const Real d = eval_lift(three, Real(x + third)) - eval_lift(three, Real(x)) - third;
        CHECK(abs(d) < ldexp(Real(1), -240));
    }
}

TEST_CASE("monotone in the rotation parameter") {
    const MapSpec lo = MapSpec::arnold_cubic(Real(0.3));
    const MapSpec hi = MapSpec::arnold_cubic(Real(0.30001));
    for (double x : {0.0, 0.2, 0.5, 0.9}) CHECK(eval_lift(hi, Real(x)) > eval_lift(lo, Real(x)));
}

TEST_CASE("analytic derivatives") {
    const MapSpec arnold = MapSpec::arnold_cubic(Real(0.25));
    CHECK(to_double(derivatives(arnold, Real(0), 1)) == 0.0);
    CHECK(to_double(derivatives(arnold, Real(0), 3)) == doctest::Approx(4 * M_PI * M_PI));
    CHECK(to_double(derivatives(MapSpec::rigid_rotation(Real(0.1)), Real(0.3), 2)) == 0.0);
    CHECK_THROWS_AS(derivatives(arnold, Real(0), 4), InvalidInputError);

    const MapSpec specs[] = {arnold, MapSpec::mfold_cubic(3, Real(0.1)),
                             MapSpec::bicritical_from_cosine(Real(-0.2), Real(0.7)),
                             MapSpec::perturbed_bicritical(Real(-0.05), Real(0.02), Real(0.3))};
    PrecisionScope scope(256);
    const Real h = ldexp(Real(1), -40);
    for (const MapSpec& s : specs) {
        for (double x : {0.13, 0.37, 0.61, 0.88}) {
            const FiniteDifferences fd = finite_differences(s, Real(x), h);
            CHECK(to_double(derivatives(s, Real(x), 1)) == doctest::Approx(fd.d1).epsilon(1e-6));
            CHECK(to_double(derivatives(s, Real(x), 2)) == doctest::Approx(fd.d2).epsilon(1e-6));
            CHECK(to_double(derivatives(s, Real(x), 3)) == doctest::Approx(fd.d3).epsilon(1e-6));
        }
    }
}

TEST_CASE("Schwarzian derivative") {
    CHECK(to_double(schwarzian(MapSpec::rigid_rotation(Real(0.2)), Real(0.4))) == 0.0);
    const MapSpec arnold = MapSpec::arnold_cubic(Real(0.25));
    PrecisionScope scope(256);
    const Real h = ldexp(Real(1), -40);
    const FiniteDifferences fd = finite_differences(arnold, Real(0.5), h);
    const double oracle = fd.d3 / fd.d1 - 1.5 * (fd.d2 / fd.d1) * (fd.d2 / fd.d1);
    CHECK(to_double(schwarzian(arnold, Real(0.5))) == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(to_double(schwarzian(arnold, Real(0.3))) < 0);

    const MapSpec coarse = MapSpec::arnold_cubic(Real(0.25), 128);
    PrecisionScope fine(128);
    CHECK_THROWS_AS(schwarzian(coarse, Real("1e-40")), DomainError);
}

TEST_CASE("validation of families") {
    const ValidationReport arnold = validate_map(MapSpec::arnold_cubic(Real(0.4)));
    CHECK(arnold.monotone);
    REQUIRE(arnold.critical.size() == 1);
    CHECK(to_double(arnold.critical[0].position) == 0.0);
    CHECK(arnold.critical[0].vanishes);
    CHECK(arnold.critical[0].even_order);
    CHECK(arnold.critical[0].fitted_exponent == doctest::Approx(3.0).epsilon(0.05 / 3));
    CHECK(arnold.periodicity_defect < 1e-60);

    const ValidationReport three = validate_map(MapSpec::mfold_cubic(3, Real(0.2)));
    REQUIRE(three.critical.size() == 3);
    const double expected[] = {0.0, 1.0 / 3, 2.0 / 3};
    for (int i = 0; i < 3; ++i) {
        CHECK(to_double(three.critical[i].position) == doctest::Approx(expected[i]));
        CHECK(three.critical[i].fitted_exponent == doctest::Approx(3.0).epsilon(0.05 / 3));
    }

    const ValidationReport bi = validate_map(MapSpec::bicritical_from_cosine(Real(0.25), Real(0.1)));
    REQUIRE(bi.critical.size() == 2);
    for (const auto& c : bi.critical) {
        CHECK(c.vanishes);
        CHECK(c.fitted_exponent == doctest::Approx(3.0).epsilon(0.05 / 3));
    }
    CHECK(bi.min_derivative > -1e-30);

    CHECK_THROWS_AS(validate_map(MapSpec::perturbed_bicritical(Real(-0.3), Real(0.1), Real(0.1))),
                    InvalidFamilyError);
    const ValidationReport diffeo =
        validate_map(MapSpec::perturbed_bicritical(Real(0.02), Real(0.01), Real(0.1)));
    CHECK(diffeo.critical.empty());
    CHECK(diffeo.min_derivative > 0);
}

TEST_CASE("orbits") {
    const MapSpec rot = MapSpec::rigid_rotation(Real(0.6180339887498948482045868343656381177203));
    const OrbitSegment orbit = iterate_orbit(rot, Real(0), 10000);
    REQUIRE(orbit.size() == 10001);
    PrecisionScope scope(256);
    Real worst = 0;
    for (std::size_t k = 0; k < orbit.size(); k += 97) {
        const Real r = orbit[k] - orbit.x0 - k * rot.omega();
        worst = max(worst, abs(Real(r - round(r))));
    }
    CHECK(worst < ldexp(Real(1), -200));
    CHECK(orbit.error_bound(10000) < std::ldexp(1.0, -200));
    CHECK(orbit.winding(10000) == 6180);

    const MapSpec arnold = MapSpec::arnold_cubic(Real(0.3));
    const OrbitSegment a = iterate_orbit(arnold, Real(0), 610);
    const LiftEvaluator eval(arnold);
    for (std::size_t k = 0; k + 1 < a.size(); ++k) CHECK(eval.value(a[k]) == a[k + 1]);
    CHECK(a.error_bound(610) < 1e-30);

    CHECK_THROWS_AS(iterate_orbit(MapSpec::arnold_cubic(Real(0.3), 64), Real(0), 10),
                    PrecisionError);
    CHECK_THROWS_AS(check_orbit_budget(128, std::size_t(1) << 62), PrecisionError);
    OrbitStepper stepper(arnold, Real(0));
    for (int k = 0; k < 610; ++k) stepper.step();
    CHECK(stepper.position() == a[610]);
}
