#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>
#include <random>
#include <set>
#include <vector>

#include "critdim/errors.hpp"
#include "critdim/partition.hpp"
#include "critdim/rotation.hpp"
#include "oracles.hpp"

using namespace critdim;

namespace {

std::vector<Integer> ones(std::size_t n) { return std::vector<Integer>(n, Integer(1)); }

std::vector<Integer> forty_pattern(std::size_t count) {
    std::vector<Integer> out;
    for (std::size_t i = 0; i < count; ++i) out.emplace_back(i % 4 == 3 ? 40 : 1);
    return out;
}

struct Fixture {
    ContinuedFraction cf;
    MapSpec spec;
};

const Fixture& golden_rotation() {
    static const Fixture f = [] {
        PrecisionScope scope(256);
        auto cf = convergents(ones(40), 40, std::nullopt, 256);
        return Fixture{cf, MapSpec::rigid_rotation(cf.alpha(), 256)};
    }();
    return f;
}

const Fixture& tuned(const std::vector<Integer>& target, std::size_t depth, MapSpec family) {
    static std::vector<std::unique_ptr<Fixture>> cache;
    PrecisionScope scope(256);
    const auto t = tune_parameter(family, target, depth);
    cache.push_back(std::make_unique<Fixture>(
        Fixture{convergents(target, target.size(), std::nullopt, 256), family.with_omega(t.omega)}));
    return *cache.back();
}

const Fixture& tuned_golden() {
    static const Fixture& f = tuned(ones(20), 12, MapSpec::arnold_cubic(Real(0), 256));
    return f;
}

const Fixture& tuned_forty() {
    static const Fixture& f = tuned(forty_pattern(14), 8, MapSpec::arnold_cubic(Real(0), 256));
    return f;
}

// Exhaustive scan: the atom whose half-open arc [left, right) contains x.
AtomLabel brute_force_locate(const DynamicalPartition& p, const Real& x) {
    PrecisionScope scope(p.orbit().precision_bits);
    for (const Atom& a : p.atoms()) {
        const Real off = frac(x - p.left(a));
        if (off < p.length(a)) return a.label;
    }
    FAIL("no atom contains the point");
    return {};
}

}  // namespace

TEST_CASE("index map tiles the next block") {
    for (const auto& quotients :
         {ones(20), forty_pattern(16), generate_quotients(quotient_kind::RandomBounded{9, 3}, 16)}) {
        const auto cf = convergents(quotients, quotients.size());
        for (long n = 1; n + 1 < static_cast<long>(quotients.size()) && cf.q_small(n + 1) < 200000; ++n) {
            const std::int64_t q = cf.q_small(n), qp = cf.q_small(n - 1), qn = cf.q_small(n + 1);
            const std::int64_t a = cf.a(static_cast<std::size_t>(n) + 1).convert_to<std::int64_t>();
            std::vector<char> seen(static_cast<std::size_t>(qn - qp), 0);
            BridgeDecomposition b;
            b.q = q;
            b.q_prev = qp;
            bool injective = true;
            for (std::int64_t i = 0; i < q; ++i) {
                for (std::int64_t j = 0; j < a; ++j) {
                    const std::int64_t k = b.atom_index(i, j);
                    REQUIRE(k >= qp);
                    REQUIRE(k < qn);
                    injective = injective && seen[static_cast<std::size_t>(k - qp)] == 0;
                    seen[static_cast<std::size_t>(k - qp)] = 1;
                }
            }
            CHECK(injective);
            CHECK(std::count(seen.begin(), seen.end(), 1) == qn - qp);
        }
    }
}

TEST_CASE("golden rotation atoms have lengths delta") {
    const auto& f = golden_rotation();
    PrecisionScope scope(256);
    PartitionHierarchy h(f.spec, f.cf, 0, 8);
    const auto& p4 = h.partition(4);
    CHECK(p4.size() == 8);
    CHECK(p4.long_count() == 5);
    CHECK(p4.short_count() == 3);
    const auto [u4, v4] = oracle::golden_power(4);
    const auto [u5, v5] = oracle::golden_power(5);
    const Real alpha4 = Real(u4) + Real(v4) * f.cf.alpha();
    const Real alpha5 = Real(u5) + Real(v5) * f.cf.alpha();
    for (const Atom& a : p4.atoms()) {
        const Real expected = a.label.generation == 3 ? alpha4 : alpha5;
        CHECK(abs(p4.length(a) - expected) < ldexp(Real(1), -200));
    }
    CHECK(abs(p4.tiling_residual()) < ldexp(Real(1), -200));
    for (int n = 3; n <= 8; ++n) {
        const auto rep = refine_check(h.partition(n), h.partition(n + 1), f.cf);
        CHECK(rep.structure_ok);
        CHECK(rep.contained);
        CHECK(rep.worst_violation < 1e-60);
    }
}

TEST_CASE("locate agrees with an exhaustive scan") {
    PrecisionScope scope(256);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto& g = golden_rotation();
    PartitionHierarchy hr(g.spec, g.cf, 0, 6);
    const auto& t = tuned_golden();
    PartitionHierarchy ht(t.spec, t.cf, 0, 8);
    for (const PartitionHierarchy* h : {&hr, &ht}) {
        for (int n : {3, 6}) {
            const auto& p = h->partition(n);
            for (int trial = 0; trial < 200; ++trial) {
                const Real x(u(rng));
                const LocateResult r = p.locate(x);
                CHECK_FALSE(r.ambiguous);
                CHECK(r.atom == brute_force_locate(p, x));
            }
            CHECK(hr.partition(3).locate(Real(0.5)).atom == brute_force_locate(hr.partition(3), Real(0.5)));
        }
    }
    const auto& p = ht.partition(5);
    const LocateResult at_base = p.locate(ht.orbit().circle_position(0));
    CHECK(at_base.atom == p.atoms().front().label);
    CHECK(at_base.ambiguous);
    const Atom& second = p.atoms()[1];
    const LocateResult at_end = p.locate(p.left(second));
    CHECK(at_end.ambiguous);
    CHECK(at_end.atom == second.label);
    REQUIRE(at_end.neighbour.has_value());
    CHECK(*at_end.neighbour == p.atoms()[0].label);
}

TEST_CASE("tuned golden partitions") {
    const auto& t = tuned_golden();
    PrecisionScope scope(256);
    PartitionHierarchy h(t.spec, t.cf, 0, 11);
    const auto& p8 = h.partition(8);
    CHECK(p8.size() == 55);
    CHECK(abs(p8.tiling_residual()) < Real(1e-30));
    for (int n = 3; n <= 11; ++n) {
        const auto rep = refine_check(h.partition(n), h.partition(n + 1), t.cf);
        CHECK(rep.structure_ok);
        CHECK(rep.min_pieces == 2);
        CHECK(rep.max_pieces == 2);
    }
    for (int n = 2; n <= 10; ++n) {
        const auto& pn = h.partition(n + 1);
        const std::int64_t q = t.cf.q_small(n);
        bool nested = true;
        for (std::int64_t i = 0; i < q; ++i) {
            const Atom& outer = h.partition(n).atom({n - 1, i});
            const Atom& inner = pn.atom({n + 1, i});
            const Real rel = circle_offset(h.partition(n).left(outer), pn.left(inner));
            nested = nested && rel + pn.length(inner) <= h.partition(n).length(outer) + pn.tolerance();
        }
        CHECK(nested);
        const auto& b = h.bridges(n);
        CHECK(b.degenerate);
        CHECK(b.bridges.empty());
    }
}

TEST_CASE("corrupted orbit is rejected") {
    const auto& t = tuned_golden();
    PrecisionScope scope(256);
    PartitionHierarchy h(t.spec, t.cf, 0, 6);
    auto bad = std::make_shared<OrbitSegment>(h.orbit());
    bad->positions[5] += Real(0.37);
    CHECK_THROWS_AS(DynamicalPartition(bad, t.cf, 6), GeometryError);
    CHECK_THROWS_AS(PartitionHierarchy(t.spec, t.cf, 0, 40), DepthExceededError);
}

TEST_CASE("bridges") {
    PrecisionScope scope(256);
    SUBCASE("rotation control keeps only the forced times") {
        const auto q = forty_pattern(14);
        const auto cf = convergents(q, q.size(), std::nullopt, 256);
        PartitionHierarchy h(MapSpec::rigid_rotation(cf.alpha(), 256), cf, 0, 8);
        const auto& b = h.bridges(3);
        CHECK(b.r == 1);
        CHECK(b.critical_times == std::vector<std::int64_t>{0, 39});
        REQUIRE(b.bridges.size() == 1);
        CHECK(b.bridges[0].first == 1);
        CHECK(b.bridges[0].last == 38);
        CHECK(b.reduced_bridges[0].first == 2);
        CHECK(b.reduced_bridges[0].last == 37);
        CHECK(h.bridges(4).degenerate);
    }
    SUBCASE("unicritical map") {
        const auto& t = tuned_forty();
        PartitionHierarchy h(t.spec, t.cf, 0, 8);
        for (int n : {3, 7}) {
            const auto& b = h.bridges(n);
            CHECK(b.r >= 1);
            CHECK(b.r <= 3);
            std::set<std::int64_t> all(b.critical_times.begin(), b.critical_times.end());
            for (const auto& g : b.bridges) {
                for (std::int64_t j = g.first; j <= g.last; ++j) CHECK(all.insert(j).second);
            }
            CHECK(all.size() == 40);
            CHECK(*all.begin() == 0);
            CHECK(*all.rbegin() == 39);
        }
    }
    SUBCASE("three critical points, stable under doubled precision") {
        const auto target = forty_pattern(12);
        const auto family = MapSpec::mfold_cubic(3, Real(0), 256);
        const auto tr = tune_parameter(family, target, 8);
        const auto cf = convergents(target, target.size(), std::nullopt, 256);
        PartitionHierarchy h(family.with_omega(tr.omega), cf, 0, 5);
        const auto& b = h.bridges(3);
        CHECK(b.r <= 7);
        PrecisionScope wide(512);
        const auto cf2 = convergents(target, target.size(), std::nullopt, 512);
        PartitionHierarchy h2(family.with_omega(tr.omega).with_precision(512), cf2, 0, 5);
        CHECK(h2.bridges(3).critical_times == b.critical_times);
    }
}
