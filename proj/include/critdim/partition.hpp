#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "critdim/cf_engine.hpp"
#include "critdim/map_core.hpp"

namespace critdim {

/// Atom I_g^index: generation g is n-1 (long) or n (short) inside P_n.
struct AtomLabel {
    int generation = 0;
    std::int64_t index = 0;
    friend bool operator==(const AtomLabel&, const AtomLabel&) = default;
};

/// An oriented arc [x_left, x_right) whose endpoints are orbit points,
/// kept as orbit indices so that neighbouring atoms share endpoints exactly.
struct Atom {
    AtomLabel label;
    std::int64_t left = 0;
    std::int64_t right = 0;
};

struct LocateResult {
    AtomLabel atom;
    /// Set when x is within the endpoint tolerance of a boundary; `atom` is
    /// then the one starting at that boundary.
    std::optional<AtomLabel> neighbour;
    bool ambiguous = false;
};

/// Endpoints of I_g^k as orbit indices, following the orientation rule
/// I_g = [x_0, x_{q_g}) for even g and [x_{q_g}, x_0) for odd g.
std::pair<std::int64_t, std::int64_t> atom_endpoints(int generation, std::int64_t index,
                                                     std::int64_t q_generation);

/// Length of the arc from x_left to x_right on the circle.
Real arc_length(const OrbitSegment& orbit, std::int64_t left, std::int64_t right);

/// The level-n dynamical partition of a fixed base point: q_n long atoms
/// I_{n-1}^i and q_{n-1} short atoms I_n^i.
class DynamicalPartition {
public:
    /// Checks that the atoms sit side by side around the circle and that
    /// their lengths add up to 1; throws GeometryError otherwise.
    DynamicalPartition(std::shared_ptr<const OrbitSegment> orbit, const ContinuedFraction& cf,
                       int level);

    int level() const { return level_; }
    std::int64_t long_count() const { return q_; }
    std::int64_t short_count() const { return q_prev_; }
    std::size_t size() const { return atoms_.size(); }

    /// Atoms in circle order starting with the one whose left end is x_0.
    const std::vector<Atom>& atoms() const { return atoms_; }
    const Atom& atom(const AtomLabel& label) const;
    /// Position of an atom in atoms().
    std::size_t position(const AtomLabel& label) const;

    Real left(const Atom& a) const { return orbit_->circle_position(static_cast<std::size_t>(a.left)); }
    Real right(const Atom& a) const { return orbit_->circle_position(static_cast<std::size_t>(a.right)); }
    Real length(const Atom& a) const { return arc_length(*orbit_, a.left, a.right); }
    /// Counter-clockwise offset of the atom's left end from x_0.
    const Real& offset(std::size_t pos) const { return offsets_[pos]; }

    const Real& tiling_residual() const { return residual_; }
    const Real& tolerance() const { return tolerance_; }

    LocateResult locate(const Real& x) const;

    const OrbitSegment& orbit() const { return *orbit_; }
    const std::shared_ptr<const OrbitSegment>& orbit_ptr() const { return orbit_; }

private:
    std::shared_ptr<const OrbitSegment> orbit_;
    int level_;
    std::int64_t q_;
    std::int64_t q_prev_;
    std::vector<Atom> atoms_;
    std::vector<Real> offsets_;
    std::vector<std::size_t> long_pos_;
    std::vector<std::size_t> short_pos_;
    Real residual_;
    Real tolerance_;
};

struct RefinementReport {
    int level = 0;  // the coarse level n
    std::size_t min_pieces = 0;
    std::size_t max_pieces = 0;
    double worst_violation = 0.0;
    bool contained = false;
    /// Each I_{n-1}^i splits into I_n^{i + q_{n-1} + j q_n}, j < a_{n+1}, and I_{n+1}^i.
    bool structure_ok = false;
};

/// Throws GeometryError when an atom of `fine` sticks out of its parent by
/// more than the tiling tolerance.
RefinementReport refine_check(const DynamicalPartition& coarse, const DynamicalPartition& fine,
                              const ContinuedFraction& cf);

/// One maximal run of non-critical Delta_j between consecutive critical times.
struct Bridge {
    std::int64_t first = 0;  // first j, inclusive
    std::int64_t last = -1;  // last j, inclusive
    bool empty() const { return last < first; }
    std::int64_t size() const { return empty() ? 0 : last - first + 1; }
};

struct CriticalHit {
    std::size_t critical_index = 0;
    std::int64_t atom_index = -1;  // k with c in closure(I_n^k), -1 if none in P_{n+1}
    std::optional<std::int64_t> time;  // j = (k - q_{n-1}) div q_n when k is in the block
    bool on_endpoint = false;
};

/// Critical times, spots and bridges of level n.
struct BridgeDecomposition {
    int level = 0;
    std::int64_t q = 0;       // q_n
    std::int64_t q_prev = 0;  // q_{n-1}
    std::int64_t a_next = 0;  // a_{n+1}
    int r = 0;
    std::vector<std::int64_t> critical_times;  // k_0 = 0 < ... < k_r = a_{n+1} - 1
    std::vector<CriticalHit> hits;
    std::vector<Bridge> bridges;          // G_s between k_s and k_{s+1}, s < r
    std::vector<Bridge> reduced_bridges;  // G_s minus one atom per side
    bool degenerate = false;              // a_{n+1} <= 2

    /// Orbit index of Delta_{i,j} = I_n^{i + q_{n-1} + j q_n}.
    std::int64_t atom_index(std::int64_t i, std::int64_t j) const { return i + q_prev + j * q; }
};

/// Needs the level-(n+1) partition, whose long atoms are the I_n^k.
BridgeDecomposition bridge_decomposition(const DynamicalPartition& next_level,
                                         const ContinuedFraction& cf,
                                         const std::vector<CriticalPoint>& critical_points);

/// One orbit of a base critical point, long enough for partitions and
/// bridges up to `max_level`, with partitions built on demand.
class PartitionHierarchy {
public:
    PartitionHierarchy(const MapSpec& spec, const ContinuedFraction& cf, std::size_t base_index,
                       int max_level);

    const MapSpec& spec() const { return spec_; }
    const ContinuedFraction& cf() const { return cf_; }
    int max_level() const { return max_level_; }
    std::size_t base_index() const { return base_index_; }
    const OrbitSegment& orbit() const { return *orbit_; }

    /// Levels 1..max_level + 1.
    const DynamicalPartition& partition(int n) const;
    /// Levels 1..max_level.
    const BridgeDecomposition& bridges(int n) const;

    /// |I_g^k| straight from the orbit.
    Real atom_length(int generation, std::int64_t index) const;

private:
    MapSpec spec_;
    ContinuedFraction cf_;
    std::size_t base_index_;
    int max_level_;
    std::shared_ptr<const OrbitSegment> orbit_;
    mutable std::mutex mutex_;
    mutable std::map<int, std::unique_ptr<DynamicalPartition>> partitions_;
    mutable std::map<int, std::unique_ptr<BridgeDecomposition>> bridges_;
};

}  // namespace critdim
