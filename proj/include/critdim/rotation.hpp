#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "critdim/map_core.hpp"

namespace critdim {

struct RationalLock {
    Integer p;
    Integer q;
};

/// What an orbit tells us about rho(f).
struct RotationReading {
    Real rho_lo;
    Real rho_hi;
    /// a_1..a_K and q_1..q_K recovered from closest returns.
    std::vector<Integer> quotients;
    std::vector<Integer> return_times;
    std::vector<Integer> return_numerators;
    /// |x_{q_k} - x_0| on the circle for each observed q_k.
    std::vector<Real> return_distances;
    std::optional<RationalLock> rational_lock;
    std::size_t iterations = 0;
    /// False when the iteration cap stopped the scan before the requested depth.
    bool complete = true;
};

/// Brackets rho from F^m(0) - 0 in [p, p + 1), intersected over m <= n.
RotationReading birkhoff_estimate(const MapSpec& spec, std::size_t n_iterations);

struct ClosestReturnOptions {
    std::size_t max_iterations = std::size_t(1) << 24;
};

/// Closest-return scan of the orbit of `base`. Records on the right of the
/// base come at even levels, on the left at odd ones; each maximal run of
/// same-side records has length a_k and ends at q_k.
RotationReading closest_return_quotients(const MapSpec& spec, const Real& base, std::size_t depth,
                                         const ClosestReturnOptions& options = {});

struct TuneOptions {
    /// Convergents of the target used beyond `depth` by the order test.
    std::size_t extra_levels = 2;
    /// Bisection steps before giving up; 0 means precision_bits - 16.
    std::size_t max_steps = 0;
};

struct TuneResult {
    Real omega;
    Real omega_lo;
    Real omega_hi;
    std::size_t steps = 0;
    RotationReading reading;
};

/// Bisection on omega for the family of `family` (its own omega is ignored)
/// so that rho(f_omega) = [target, 1, 1, ...] to the first `depth` quotients.
TuneResult tune_parameter(const MapSpec& family, std::span<const Integer> target,
                          std::size_t depth, const TuneOptions& options = {});

}  // namespace critdim
