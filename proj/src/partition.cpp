#include "critdim/partition.hpp"

#include <algorithm>
#include <numeric>

#include "critdim/errors.hpp"

namespace critdim {

std::pair<std::int64_t, std::int64_t> atom_endpoints(int generation, std::int64_t index,
                                                     std::int64_t q_generation) {
    if (generation % 2 == 0) return {index, index + q_generation};
    return {index + q_generation, index};
}

Real arc_length(const OrbitSegment& orbit, std::int64_t left, std::int64_t right) {
    return frac(Real(orbit[static_cast<std::size_t>(right)] - orbit[static_cast<std::size_t>(left)]));
}

DynamicalPartition::DynamicalPartition(std::shared_ptr<const OrbitSegment> orbit,
                                       const ContinuedFraction& cf, int level)
    : orbit_(std::move(orbit)), level_(level) {
    if (level < 1) throw InvalidInputError("partition level must be at least 1");
    if (static_cast<std::size_t>(level) > cf.depth()) {
        throw DepthExceededError("partition level " + std::to_string(level) +
                                 " exceeds the continued-fraction depth " +
                                 std::to_string(cf.depth()));
    }
    q_ = cf.q_small(level);
    q_prev_ = cf.q_small(level - 1);
    const std::size_t needed = static_cast<std::size_t>(q_ + q_prev_);
    if (orbit_->size() < needed) {
        throw DepthExceededError("level " + std::to_string(level) + " needs " +
                                 std::to_string(needed) + " orbit points, have " +
                                 std::to_string(orbit_->size()));
    }
    PrecisionScope scope(orbit_->precision_bits);

    std::vector<Atom> raw;
    raw.reserve(needed);
    for (std::int64_t i = 0; i < q_; ++i) {
        const auto [l, r] = atom_endpoints(level - 1, i, q_prev_);
        raw.push_back({{level - 1, i}, l, r});
    }
    for (std::int64_t i = 0; i < q_prev_; ++i) {
        const auto [l, r] = atom_endpoints(level, i, q_);
        raw.push_back({{level, i}, l, r});
    }
    const Real& x0 = (*orbit_)[0];
    std::vector<Real> offs;
    offs.reserve(raw.size());
    for (const Atom& a : raw) offs.push_back(frac(Real((*orbit_)[static_cast<std::size_t>(a.left)] - x0)));
    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return offs[a] < offs[b]; });

    atoms_.reserve(raw.size());
    offsets_.reserve(raw.size());
    long_pos_.assign(static_cast<std::size_t>(q_), 0);
    short_pos_.assign(static_cast<std::size_t>(q_prev_), 0);
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Atom& a = raw[order[k]];
        atoms_.push_back(a);
        offsets_.push_back(std::move(offs[order[k]]));
        (a.label.generation == level - 1 ? long_pos_ : short_pos_)[static_cast<std::size_t>(a.label.index)] = k;
    }

    if (atoms_.front().left != 0) {
        throw GeometryError("level " + std::to_string(level) + ": no atom starts at x_0");
    }
    for (std::size_t k = 0; k < atoms_.size(); ++k) {
        const Atom& a = atoms_[k];
        const Atom& b = atoms_[(k + 1) % atoms_.size()];
        if (a.right != b.left) {
            throw GeometryError("level " + std::to_string(level) + ": atom I_" +
                                std::to_string(a.label.generation) + "^" +
                                std::to_string(a.label.index) + " ends at x_" +
                                std::to_string(a.right) + " but its neighbour starts at x_" +
                                std::to_string(b.left) +
                                "; the orbit does not follow the given return times");
        }
    }

    Real total = 0;
    for (const Atom& a : atoms_) total += length(a);
    residual_ = abs(Real(total - 1));
    tolerance_ = ldexp(Real(1), -static_cast<int>(orbit_->precision_bits - 32)) * Real(atoms_.size());
    if (residual_ > tolerance_) {
        throw GeometryError("level " + std::to_string(level) + ": atom lengths sum to 1 + " +
                            to_decimal(Real(total - 1), 6) + ", beyond the tiling tolerance");
    }
}

std::size_t DynamicalPartition::position(const AtomLabel& label) const {
    if (label.generation == level_ - 1 && label.index >= 0 && label.index < q_) {
        return long_pos_[static_cast<std::size_t>(label.index)];
    }
    if (label.generation == level_ && label.index >= 0 && label.index < q_prev_) {
        return short_pos_[static_cast<std::size_t>(label.index)];
    }
    throw InvalidInputError("no atom I_" + std::to_string(label.generation) + "^" +
                            std::to_string(label.index) + " in P_" + std::to_string(level_));
}

const Atom& DynamicalPartition::atom(const AtomLabel& label) const { return atoms_[position(label)]; }

LocateResult DynamicalPartition::locate(const Real& x) const {
    PrecisionScope scope(orbit_->precision_bits);
    const Real d = frac(Real(x - (*orbit_)[0]));
    const std::size_t n = atoms_.size();
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), d);
    const std::size_t pos = static_cast<std::size_t>(it - offsets_.begin()) - 1;
    const std::size_t next = (pos + 1) % n;
    const Real next_offset = next == 0 ? Real(1) : offsets_[next];

    LocateResult out;
    out.atom = atoms_[pos].label;
    if (d - offsets_[pos] < tolerance_) {
        out.ambiguous = true;
        out.neighbour = atoms_[(pos + n - 1) % n].label;
    } else if (next_offset - d < tolerance_) {
        out.ambiguous = true;
        out.atom = atoms_[next].label;
        out.neighbour = atoms_[pos].label;
    }
    return out;
}

RefinementReport refine_check(const DynamicalPartition& coarse, const DynamicalPartition& fine,
                              const ContinuedFraction& cf) {
    const int n = coarse.level();
    if (fine.level() != n + 1) throw InvalidInputError("refine_check needs levels n and n + 1");
    if (coarse.orbit()[0] != fine.orbit()[0]) {
        throw InvalidInputError("refine_check needs partitions of the same base point");
    }
    PrecisionScope scope(coarse.orbit().precision_bits);
    const std::int64_t q = cf.q_small(n);
    const std::int64_t q_prev = cf.q_small(n - 1);
    const std::int64_t a_next = cf.a(static_cast<std::size_t>(n) + 1).convert_to<std::int64_t>();

    RefinementReport rep;
    rep.level = n;
    rep.structure_ok = true;
    std::vector<std::size_t> pieces(coarse.size(), 0);
    Real worst = 0;
    for (const Atom& child : fine.atoms()) {
        const Real len = fine.length(child);
        const Real mid = fine.left(child) + len / 2;
        const LocateResult loc = coarse.locate(mid);
        const std::size_t ppos = coarse.position(loc.atom);
        const Atom& parent = coarse.atoms()[ppos];
        ++pieces[ppos];

        const Real rel_left = circle_offset(coarse.left(parent), fine.left(child));
        const Real rel_right = rel_left + len;
        const Real parent_len = coarse.length(parent);
        worst = max(worst, max(Real(-rel_left), Real(rel_right - parent_len)));

        AtomLabel expected;
        if (child.label.generation == n + 1) {
            expected = {n - 1, child.label.index};
        } else if (child.label.index < q_prev) {
            expected = {n, child.label.index};
        } else {
            expected = {n - 1, (child.label.index - q_prev) % q};
        }
        if (!(expected == loc.atom)) rep.structure_ok = false;
    }
    rep.min_pieces = std::numeric_limits<std::size_t>::max();
    for (std::size_t p = 0; p < coarse.size(); ++p) {
        const bool is_long = coarse.atoms()[p].label.generation == n - 1;
        if (is_long) {
            rep.min_pieces = std::min(rep.min_pieces, pieces[p]);
            rep.max_pieces = std::max(rep.max_pieces, pieces[p]);
            if (pieces[p] != static_cast<std::size_t>(a_next + 1)) rep.structure_ok = false;
        } else if (pieces[p] != 1) {
            rep.structure_ok = false;
        }
    }
    rep.worst_violation = std::max(0.0, to_double(worst));
    rep.contained = worst <= coarse.tolerance();
    if (!rep.contained) {
        throw GeometryError("refinement of P_" + std::to_string(n) + " by P_" +
                            std::to_string(n + 1) + " is violated by " + to_decimal(worst, 6));
    }
    return rep;
}

BridgeDecomposition bridge_decomposition(const DynamicalPartition& next_level,
                                         const ContinuedFraction& cf,
                                         const std::vector<CriticalPoint>& critical_points) {
    const int n = next_level.level() - 1;
    if (n < 1) throw InvalidInputError("bridges need level n >= 1");
    BridgeDecomposition b;
    b.level = n;
    b.q = cf.q_small(n);
    b.q_prev = cf.q_small(n - 1);
    b.a_next = cf.a(static_cast<std::size_t>(n) + 1).convert_to<std::int64_t>();
    b.degenerate = b.a_next <= 2;

    std::vector<std::int64_t> times{0, b.a_next - 1};
    for (std::size_t c = 0; c < critical_points.size(); ++c) {
        CriticalHit hit;
        hit.critical_index = c;
        const LocateResult loc = next_level.locate(critical_points[c].position);
        hit.on_endpoint = loc.ambiguous;
        std::vector<AtomLabel> candidates{loc.atom};
        if (loc.neighbour) candidates.push_back(*loc.neighbour);
        for (const AtomLabel& cand : candidates) {
            if (cand.generation != n) continue;
            if (hit.atom_index < 0 || cand.index < hit.atom_index) hit.atom_index = cand.index;
        }
        if (hit.atom_index >= b.q_prev) {
            hit.time = (hit.atom_index - b.q_prev) / b.q;
            times.push_back(*hit.time);
        }
        b.hits.push_back(hit);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    b.critical_times = times;
    b.r = static_cast<int>(times.size()) - 1;
    for (int s = 0; s < b.r; ++s) {
        const Bridge g{times[static_cast<std::size_t>(s)] + 1, times[static_cast<std::size_t>(s) + 1] - 1};
        b.bridges.push_back(g);
        b.reduced_bridges.push_back(g.size() >= 3 ? Bridge{g.first + 1, g.last - 1} : Bridge{0, -1});
    }
    return b;
}

PartitionHierarchy::PartitionHierarchy(const MapSpec& spec, const ContinuedFraction& cf,
                                       std::size_t base_index, int max_level)
    : spec_(spec), cf_(cf), base_index_(base_index), max_level_(max_level) {
    if (max_level < 1) throw InvalidInputError("max_level must be at least 1");
    if (cf.depth() < static_cast<std::size_t>(max_level) + 1) {
        throw DepthExceededError("levels up to " + std::to_string(max_level) +
                                 " need continued-fraction depth " +
                                 std::to_string(max_level + 1));
    }
    Real x0 = 0;
    if (!spec.critical_points().empty()) {
        if (base_index >= spec.critical_points().size()) {
            throw InvalidInputError("base critical point index out of range");
        }
        x0 = spec.critical_points()[base_index].position;
    } else if (base_index != 0) {
        throw InvalidInputError("a map without critical points is based at 0");
    }
    const std::int64_t count = cf.q_small(max_level + 1) + cf.q_small(max_level) - 1;
    orbit_ = std::make_shared<const OrbitSegment>(
        iterate_orbit(spec, x0, static_cast<std::size_t>(count)));
}

const DynamicalPartition& PartitionHierarchy::partition(int n) const {
    if (n < 1 || n > max_level_ + 1) {
        throw DepthExceededError("partition level " + std::to_string(n) + " outside 1.." +
                                 std::to_string(max_level_ + 1));
    }
    std::lock_guard<std::mutex> lock(mutex_);
    auto& slot = partitions_[n];
    if (!slot) slot = std::make_unique<DynamicalPartition>(orbit_, cf_, n);
    return *slot;
}

const BridgeDecomposition& PartitionHierarchy::bridges(int n) const {
    if (n < 1 || n > max_level_) {
        throw DepthExceededError("bridge level " + std::to_string(n) + " outside 1.." +
                                 std::to_string(max_level_));
    }
    const DynamicalPartition& next = partition(n + 1);
    std::lock_guard<std::mutex> lock(mutex_);
    auto& slot = bridges_[n];
    if (!slot) {
        slot = std::make_unique<BridgeDecomposition>(
            bridge_decomposition(next, cf_, spec_.critical_points()));
    }
    return *slot;
}

Real PartitionHierarchy::atom_length(int generation, std::int64_t index) const {
    PrecisionScope scope(spec_.precision_bits());
    const auto [l, r] = atom_endpoints(generation, index, cf_.q_small(generation));
    return arc_length(*orbit_, l, r);
}

}  // namespace critdim
