#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "critdim/bounds_lab.hpp"
#include "critdim/errors.hpp"
#include "critdim/rotation.hpp"
#include "oracles.hpp"

using namespace critdim;

namespace {

std::vector<Integer> forty_pattern(std::size_t count) {
    std::vector<Integer> out;
    for (std::size_t i = 0; i < count; ++i) out.emplace_back(i % 4 == 3 ? 40 : 1);
    return out;
}

struct Setup {
    std::unique_ptr<PartitionHierarchy> tuned;
    std::unique_ptr<PartitionHierarchy> control;
};

const Setup& forty() {
    static const Setup s = [] {
        PrecisionScope scope(256);
        const auto target = forty_pattern(14);
        const auto cf = convergents(target, target.size(), std::nullopt, 256);
        const auto family = MapSpec::arnold_cubic(Real(0), 256);
        const auto t = tune_parameter(family, target, 9);
        Setup out;
        out.tuned = std::make_unique<PartitionHierarchy>(family.with_omega(t.omega), cf, 0, 8);
        out.control = std::make_unique<PartitionHierarchy>(MapSpec::rigid_rotation(cf.alpha(), 256), cf, 0, 8);
        return out;
    }();
    return s;
}

const PartitionHierarchy& golden_tuned() {
    static const std::unique_ptr<PartitionHierarchy> h = [] {
        PrecisionScope scope(256);
        const std::vector<Integer> ones(20, Integer(1));
        const auto cf = convergents(ones, ones.size(), std::nullopt, 256);
        const auto family = MapSpec::arnold_cubic(Real(0), 256);
        const auto t = tune_parameter(family, ones, 12);
        return std::make_unique<PartitionHierarchy>(family.with_omega(t.omega), cf, 0, 11);
    }();
    return *h;
}

}  // namespace

TEST_CASE("ratio statistics never drop below one") {
    RatioStat r;
    CHECK(r.vacuous());
    CHECK(r.add(2.0, 1.0));
    CHECK(r.max_ratio == doctest::Approx(2.0));
    CHECK_FALSE(r.add(1.0, 1.5));
    CHECK(r.add(1.0, 4.0));
    CHECK(r.max_ratio == doctest::Approx(4.0));
    CHECK(r.count == 3);
}

TEST_CASE("golden rotation adjacency is 1/alpha") {
    PrecisionScope scope(256);
    const std::vector<Integer> ones(30, Integer(1));
    const auto cf = convergents(ones, ones.size(), std::nullopt, 256);
    PartitionHierarchy h(MapSpec::rigid_rotation(cf.alpha(), 256), cf, 0, 10);
    for (int n = 2; n <= 10; ++n) {
        const auto a = adjacency_ratios(h.partition(n));
        CHECK(a.max_ratio == doctest::Approx(1.0 / oracle::kGoldenAlpha).epsilon(1e-12));
        std::size_t total = 0;
        for (auto c : a.histogram) total += c;
        CHECK(total == h.partition(n).size());
    }
}

TEST_CASE("synthetic quadratic law") {
    const std::int64_t a = 41;
    std::vector<double> lengths;
    for (std::int64_t j = 2; j <= a - 3; ++j) {
        const double d = static_cast<double>(std::min(j, a - 1 - j));
        lengths.push_back(0.37 / (d * d));
    }
    const auto rec = yoccoz_regression(lengths, 2, 0, a - 1);
    REQUIRE_FALSE(rec.skipped);
    CHECK(rec.left.slope == doctest::Approx(-2.0).epsilon(1e-6));
    CHECK(rec.right.slope == doctest::Approx(-2.0).epsilon(1e-6));
    CHECK(std::abs(rec.left.slope - rec.right.slope) < 0.3);
    CHECK(rec.split == 20);

    const std::vector<double> short_run{1.0, 0.5, 0.5, 1.0};
    CHECK(yoccoz_regression(short_run, 1, 0, 5).skipped);
}

TEST_CASE("forty-quotient map against its rotation control") {
    const auto& s = forty();
    const auto big_tuned = real_bounds_level(*s.tuned, 3);
    const auto big_control = real_bounds_level(*s.control, 3);
    CHECK(big_control.item1.max_ratio > 40.0);
    CHECK(big_tuned.item1.max_ratio < big_control.item1.max_ratio * 10);
    CHECK(big_tuned.items23.bridges.max_ratio >= 1.0);
    CHECK(big_tuned.items23.spots.max_ratio >= 1.0);
    CHECK_FALSE(big_tuned.items23.bridges.vacuous());
    REQUIRE(big_tuned.item4.regressions.size() == 1);

    const auto flat = yoccoz_fit(*s.control, 3, 0);
    CHECK(flat.control);
    CHECK(std::abs(flat.left.slope) < 1e-9);
    CHECK(std::abs(flat.right.slope) < 1e-9);

    for (int n : {3, 7}) {
        const auto y = yoccoz_fit(*s.tuned, n, 0);
        REQUIRE_FALSE(y.skipped);
        CHECK(y.split > 2);
        CHECK(y.split < 37);
        CHECK(y.left.slope < 0);
        CHECK(y.right.slope < 0);
        CHECK(y.right.slope >= -2.5);
        CHECK(y.right.slope <= -1.5);
    }
    CHECK(yoccoz_fit(*s.tuned, 4, 0).skipped);

    const auto ap = almost_parabolic_check(*s.tuned, 3, 0, 128);
    CHECK(ap.samples + ap.skipped == 128);
    CHECK(ap.samples >= 100);
    CHECK(ap.fraction_negative == 1.0);
    const auto ap_control = almost_parabolic_check(*s.control, 3, 0, 128);
    CHECK(ap_control.control);
    CHECK(ap_control.negative == 0);
    CHECK(ap_control.max_schwarzian == 0.0);
    CHECK(almost_parabolic_check(*s.tuned, 4, 0).empty);
}

TEST_CASE("empirical M") {
    const auto& h = golden_tuned();
    std::vector<RealBoundsLevel> reports;
    for (int n = 5; n <= 11; ++n) reports.push_back(real_bounds_level(h, n));
    const auto m = empirical_M(reports);
    CHECK(std::isfinite(m.M));
    CHECK(m.M >= 1.0);
    CHECK(m.item5_holds);
    for (const auto& c : m.item5) CHECK(c.slack > 0);
    CHECK(m.n0 >= 5);

    std::vector<RealBoundsLevel> growing(reports.begin(), reports.begin() + 3);
    double prev = empirical_M(growing).M;
    for (std::size_t k = 3; k < reports.size(); ++k) {
        growing.push_back(reports[k]);
        const double next = empirical_M(growing).M;
        CHECK(next >= prev);
        prev = next;
    }
    CHECK_THROWS_AS(empirical_M(std::span<const RealBoundsLevel>(reports.data(), 2)), InvalidInputError);

    const auto& s = forty();
    std::vector<RealBoundsLevel> control;
    for (int n = 2; n <= 8; ++n) control.push_back(real_bounds_level(*s.control, n));
    const auto mc = empirical_M(control, true);
    CHECK(mc.control);
    CHECK(mc.M > 40.0);
}
