#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "critdim/partition.hpp"

namespace critdim {

/// mu(I_g^i) = delta_g for every i, as an element of Z + Z*alpha.
const LinearForm& atom_measure_form(const ContinuedFraction& cf, int generation);
Real atom_measure(const ContinuedFraction& cf, int generation, std::int64_t index = 0);

struct MeasureBracket {
    LinearForm lo_form;
    LinearForm hi_form;
    Real lo;
    Real hi;
    int level = 0;
    bool tolerance_met = true;
    Real midpoint() const { return (lo + hi) / 2; }
};

/// Invariant measure of the counter-clockwise arc from x to y, bracketed by
/// the atoms of the deepest partition lying inside it (lo) and meeting it
/// (hi). x == y means the whole circle.
class MeasureIndex {
public:
    explicit MeasureIndex(const PartitionHierarchy& hierarchy, int level = 0);

    int level() const { return level_; }
    MeasureBracket measure(const Real& x, const Real& y) const;
    /// Bracket for an arc of the given length starting at x, clamped to the circle.
    MeasureBracket measure_length(const Real& x, const Real& length) const;

private:
    struct Counts {
        std::int64_t long_inside = 0;
        std::int64_t short_inside = 0;
        std::int64_t long_partial = 0;
        std::int64_t short_partial = 0;
    };
    void count_range(const Real& u, const Real& v, bool to_end, Counts& out) const;
    MeasureBracket finish(const Counts& c) const;

    const PartitionHierarchy* hierarchy_;
    const DynamicalPartition* partition_;
    int level_;
    Real x0_;
    std::vector<std::int64_t> long_prefix_;  // long atoms among positions < p
};

MeasureBracket arc_measure(const PartitionHierarchy& hierarchy, const Real& x, const Real& y,
                           std::optional<double> tolerance = std::nullopt);

/// Central part of bridge s: k_s + trim < j < k_{s+1} + 1 - trim, inside the bridge.
struct KeptRange {
    int bridge = 0;
    std::int64_t first = 0;
    std::int64_t last = -1;
    std::int64_t size() const { return last < first ? 0 : last - first + 1; }
};

struct CoverSpec {
    int level = 0;
    double gamma = 0.0;
    std::int64_t a_next = 0;
    std::int64_t trim = 0;  // floor(a_{n+1}^gamma)
    std::int64_t q = 0;
    std::int64_t q_prev = 0;
    std::vector<KeptRange> kept;
    std::int64_t kept_count = 0;  // per orbit shift i

    bool empty() const { return kept_count == 0; }
    /// Indices k of the atoms I_n^k making up the piece for shift i.
    std::vector<std::int64_t> atom_indices(std::int64_t i) const;
};

std::int64_t cover_trim(std::int64_t a_next, double gamma);

CoverSpec build_cover(const BridgeDecomposition& bridges, double gamma);

struct InequalityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;  // positive when the inequality holds
    bool pass = false;
    bool vacuous = false;
};

struct CoverReport {
    int level = 0;
    double gamma = 0.0;
    int critical_count = 0;
    double M = 0.0;
    std::int64_t trim = 0;
    std::int64_t kept_count = 0;
    bool empty = true;
    LinearForm piece_measure_form;  // mu of the shift-0 piece
    LinearForm total_measure_form;  // summed over all shifts
    Real piece_measure;
    Real total_measure;
    bool measures_agree = false;  // total equals q_n times the shift-0 piece
    double piece_length_max = 0.0;
    std::int64_t piece_length_argmax = 0;
    double total_length = 0.0;
    InequalityCheck piece_measure_bound;   // (1)
    InequalityCheck total_measure_bound;   // (2)
    InequalityCheck piece_length_bound;    // (3), worst shift
    InequalityCheck total_length_bound;    // (4)
    bool all_pass() const {
        return piece_measure_bound.pass && total_measure_bound.pass && piece_length_bound.pass &&
               total_length_bound.pass;
    }
};

CoverReport cover_report(const CoverSpec& cover, const PartitionHierarchy& hierarchy,
                         int critical_count, double M);

struct SingularityCandidate {
    int level = 0;
    std::int64_t a_next = 0;
    std::int64_t trim = 0;
    double gamma = 0.0;
    double measure = 0.0;
    double length = 0.0;
};

struct SingularityWitness {
    bool found = false;
    bool control = false;
    double eps = 0.0;
    std::string reason;
    SingularityCandidate witness;
    std::vector<SingularityCandidate> best_per_level;
    LinearForm measure_form;
    Real measure;
};

/// Looks for a cover with mu >= 1 - eps and length <= eps over every level
/// and every trim.
SingularityWitness singularity_certificate(const PartitionHierarchy& hierarchy, double eps);

/// Levels n <= max_level with a_{n+1} >= q_n^tau.
std::vector<int> qualifying_levels(const ContinuedFraction& cf, double tau, int max_level);

struct ContentSums {
    double d = 0.0;
    double gamma = 0.0;
    double tau = 0.0;
    std::vector<int> levels;
    std::vector<double> terms;  // sum_i |A_i^{n_k}|^d
    std::vector<double> tails;  // S_K = sum of terms after the K-th, K = 0..levels-1
    std::vector<bool> nonempty;
    double majorant_exponent = 0.0;  // 1 - d (gamma tau + 1)
    std::vector<double> majorant_terms;
    double majorant_factor = 0.0;  // M^d (4N+2)^d
    bool majorant_divergent = false;
    bool tails_decreasing = false;
};

ContentSums hausdorff_content_sum(const PartitionHierarchy& hierarchy, std::span<const int> levels,
                                  double gamma, double d, double tau, int critical_count, double M);

struct LocalDimensionOptions {
    std::size_t samples = 200;
    std::uint64_t seed = 0;
    bool ball_variant = true;
};

struct SampleExponents {
    std::int64_t orbit_index = 0;
    double position = 0.0;
    std::vector<double> exponents;       // d_k for k = 1..deepest
    std::vector<double> ball_exponents;  // log mu(B) / log |B| for B = (x - eps, x + eps), eps = |P_k(x)|
};

struct DimensionEstimate {
    std::vector<int> levels;
    std::vector<SampleExponents> samples;
    std::vector<double> level_medians;
    std::vector<double> level_means;
    std::vector<double> ball_medians;
    double estimate = 0.0;  // median at the deepest level
    double iqr = 0.0;
    double frostman_lower = 0.0;  // 10th percentile
    double frostman_upper = 0.0;  // 90th percentile
    double extrapolated = 0.0;    // intercept of medians against 1/log q_k
    bool low_confidence = false;
    bool control = false;
};

/// Samples x_m on the continued orbit of the base point, past every atom
/// endpoint, at indices spread by a golden-ratio rotation.
DimensionEstimate local_dimension_samples(const PartitionHierarchy& hierarchy,
                                          const LocalDimensionOptions& options = {});

struct SignatureReport {
    std::size_t critical_count = 0;
    std::vector<Integer> rotation_prefix;
    std::vector<double> criticalities;
    std::vector<MeasureBracket> masses;  // between consecutive critical points
    Real midpoint_sum;
};

SignatureReport signature(const PartitionHierarchy& hierarchy);

}  // namespace critdim
