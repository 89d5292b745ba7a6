#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "critdim/partition.hpp"
#include "critdim/stats.hpp"

namespace critdim {

/// max(x/y, y/x) over a family of comparisons, with the worst case named.
struct RatioStat {
    double max_ratio = 1.0;
    std::string where;
    std::size_t count = 0;
    bool vacuous() const { return count == 0; }
    /// True when this comparison is the new worst case.
    bool add(double x, double y);
};

struct AdjacencyStats {
    double max_ratio = 1.0;
    AtomLabel first;
    AtomLabel second;
    /// bin b counts adjacent pairs with floor(log2 ratio) = b, the last bin open.
    std::vector<std::size_t> histogram;
};

/// Ratios of neighbouring atom lengths around the circle.
AdjacencyStats adjacency_ratios(const DynamicalPartition& partition);

struct Comparability {
    RatioStat bridges;  // |I_{n-1}^i| against |G_{i,s}|
    RatioStat spots;    // |I_{n-1}^i| against |Delta_{i,k_s}|
};

Comparability bridge_and_spot_comparability(const PartitionHierarchy& hierarchy, int n);

struct BridgeRegression {
    int bridge = 0;
    bool skipped = true;
    LinearFit fit;
};

/// |Delta_{i,j}| min(j - k_s, k_{s+1} - j)^2 / |I_{n-1}^i| and its reciprocal,
/// plus the whole-bridge log-log regression for i = 0.
struct QuadraticLaw {
    RatioStat ratio;
    std::vector<BridgeRegression> regressions;
};

QuadraticLaw quadratic_law(const PartitionHierarchy& hierarchy, int n);

struct YoccozRecord {
    int level = 0;
    int bridge = 0;
    std::int64_t orbit_shift = 0;  // i
    bool skipped = false;
    std::string reason;
    std::int64_t split = 0;  // j of the shortest atom, shared by both halves
    LinearFit left;
    LinearFit right;
    bool control = false;
};

/// Regression of log |Delta_j| against log of the distance to the nearest
/// spot, separately on each monotone half. `lengths[t]` belongs to
/// j = first + t; the spots sit at `spot_left` and `spot_right`.
YoccozRecord yoccoz_regression(std::span<const double> lengths, std::int64_t first,
                               std::int64_t spot_left, std::int64_t spot_right);

/// Same on the reduced bridge s of level n, shifted by i along the orbit.
YoccozRecord yoccoz_fit(const PartitionHierarchy& hierarchy, int n, int s, std::int64_t i = 0);

struct AlmostParabolicRecord {
    int level = 0;
    int bridge = 0;
    bool empty = false;
    std::size_t samples = 0;
    std::size_t negative = 0;
    std::size_t skipped = 0;  // too close to a critical orbit
    double fraction_negative = 0.0;
    double max_schwarzian = 0.0;  // largest S(f^{q_n}) seen
    bool control = false;
};

/// Schwarzian of f^{q_n} on the reduced bridge via the chain rule
/// S(g o f) = (Sg o f) (f')^2 + Sf accumulated along the orbit.
AlmostParabolicRecord almost_parabolic_check(const PartitionHierarchy& hierarchy, int n, int s,
                                             std::size_t samples = 128);

struct RealBoundsLevel {
    int level = 0;
    AdjacencyStats item1;
    Comparability items23;
    QuadraticLaw item4;
    double log_min_atom = 0.0;         // log of the smallest atom of P_n
    double log_quotient_product = 0.0;  // log(a_1 ... a_n)
    double M_level = 1.0;
    std::string M_attribution;
};

RealBoundsLevel real_bounds_level(const PartitionHierarchy& hierarchy, int n);

struct SmallestAtomCheck {
    int level = 0;
    double log_min_atom = 0.0;
    double log_bound = 0.0;  // -n log M - 2 log(a_1 ... a_n)
    double slack = 0.0;      // log_min_atom - log_bound
    bool holds = false;
};

struct EmpiricalM {
    double M = 1.0;
    int n0 = 0;
    bool stabilized = false;
    std::vector<int> levels;
    std::vector<double> M_by_level;
    std::vector<std::string> attribution;
    std::vector<SmallestAtomCheck> item5;
    bool item5_holds = false;
    bool control = false;
};

/// Smallest M satisfying items 1-4 at every level from n0 on, where n0 is the
/// first level whose removal moves M by less than 5%.
EmpiricalM empirical_M(std::span<const RealBoundsLevel> reports, bool control = false);

}  // namespace critdim
