#include "critdim/bounds_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "critdim/errors.hpp"

namespace critdim {

namespace {

constexpr std::size_t kHistogramBins = 17;

std::string pair_label(std::int64_t i, std::int64_t j) {
    return "i=" + std::to_string(i) + " j=" + std::to_string(j);
}

/// Lengths of I_n^k for k < q_{n+1}, which covers the short atoms of P_n and
/// every Delta_{i,j} of level n.
std::vector<double> fine_lengths(const PartitionHierarchy& h, int n) {
    const std::int64_t count = h.cf().q_small(n + 1);
    std::vector<double> out(static_cast<std::size_t>(count));
    for (std::int64_t k = 0; k < count; ++k) out[static_cast<std::size_t>(k)] = to_double(h.atom_length(n, k));
    return out;
}

std::vector<double> coarse_lengths(const PartitionHierarchy& h, int n) {
    const std::int64_t count = h.cf().q_small(n);
    std::vector<double> out(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = to_double(h.atom_length(n - 1, i));
    return out;
}

void check_level(const PartitionHierarchy& h, int n) {
    if (n < 1 || n > h.max_level()) {
        throw InvalidInputError("level " + std::to_string(n) + " outside 1.." +
                                std::to_string(h.max_level()));
    }
}

struct Derivs {
    double d1, d2, d3;
};

/// F', F'', F''' in double; 1 - cos is written as 2 sin^2 to keep relative
/// accuracy near the critical points.
Derivs double_derivatives(const MapSpec& spec, double x) {
    constexpr double tp = 2 * std::numbers::pi;
    switch (spec.family()) {
        case Family::rigid_rotation:
            return {1.0, 0.0, 0.0};
        case Family::arnold_cubic:
        case Family::mfold_cubic: {
            const double w = tp * spec.m();
            const double s = std::sin(w * x / 2);
            return {2 * s * s, w * std::sin(w * x), w * w * std::cos(w * x)};
        }
        case Family::perturbed_bicritical: {
            const double a1 = to_double(spec.a1());
            const double a2 = to_double(spec.a2());
            const double c1 = std::cos(tp * x), s1 = std::sin(tp * x);
            const double c2 = std::cos(2 * tp * x), s2 = std::sin(2 * tp * x);
            return {1 + tp * a1 * c1 + 2 * tp * a2 * c2,
                    -tp * tp * a1 * s1 - 4 * tp * tp * a2 * s2,
                    -tp * tp * tp * a1 * c1 - 8 * tp * tp * tp * a2 * c2};
        }
    }
    return {1.0, 0.0, 0.0};
}

}  // namespace

bool RatioStat::add(double x, double y) {
    ++count;
    const double r = std::max(x / y, y / x);
    if (count == 1 || r > max_ratio) {
        max_ratio = r;
        return true;
    }
    return false;
}

AdjacencyStats adjacency_ratios(const DynamicalPartition& partition) {
    PrecisionScope scope(partition.orbit().precision_bits);
    const auto& atoms = partition.atoms();
    std::vector<double> len(atoms.size());
    for (std::size_t t = 0; t < atoms.size(); ++t) len[t] = to_double(partition.length(atoms[t]));
    AdjacencyStats out;
    out.histogram.assign(kHistogramBins, 0);
    for (std::size_t t = 0; t < atoms.size(); ++t) {
        const std::size_t u = (t + 1) % atoms.size();
        const double r = std::max(len[t] / len[u], len[u] / len[t]);
        const auto bin = std::min<std::size_t>(static_cast<std::size_t>(std::floor(std::log2(r))),
                                               kHistogramBins - 1);
        ++out.histogram[bin];
        if (r > out.max_ratio) {
            out.max_ratio = r;
            out.first = atoms[t].label;
            out.second = atoms[u].label;
        }
    }
    return out;
}

Comparability bridge_and_spot_comparability(const PartitionHierarchy& h, int n) {
    check_level(h, n);
    const auto& bd = h.bridges(n);
    const auto fine = fine_lengths(h, n);
    const auto coarse = coarse_lengths(h, n);
    Comparability out;
    for (std::int64_t i = 0; i < bd.q; ++i) {
        const double parent = coarse[static_cast<std::size_t>(i)];
        for (std::size_t s = 0; s < bd.bridges.size(); ++s) {
            const Bridge& g = bd.bridges[s];
            if (g.empty()) continue;
            double total = 0;
            for (std::int64_t j = g.first; j <= g.last; ++j) total += fine[static_cast<std::size_t>(bd.atom_index(i, j))];
            if (out.bridges.add(parent, total)) out.bridges.where = "i=" + std::to_string(i) + " s=" + std::to_string(s);
        }
        for (const std::int64_t k : bd.critical_times) {
            const double spot = fine[static_cast<std::size_t>(bd.atom_index(i, k))];
            if (out.spots.add(parent, spot)) out.spots.where = pair_label(i, k);
        }
    }
    return out;
}

QuadraticLaw quadratic_law(const PartitionHierarchy& h, int n) {
    check_level(h, n);
    const auto& bd = h.bridges(n);
    const auto fine = fine_lengths(h, n);
    const auto coarse = coarse_lengths(h, n);
    QuadraticLaw out;
    for (int s = 0; s < bd.r; ++s) {
        const std::int64_t lo = bd.critical_times[static_cast<std::size_t>(s)];
        const std::int64_t hi = bd.critical_times[static_cast<std::size_t>(s) + 1];
        BridgeRegression reg;
        reg.bridge = s;
        std::vector<double> xs, ys;
        for (std::int64_t i = 0; i < bd.q; ++i) {
            const double parent = coarse[static_cast<std::size_t>(i)];
            for (std::int64_t j = lo + 1; j < hi; ++j) {
                const double d = static_cast<double>(std::min(j - lo, hi - j));
                const double len = fine[static_cast<std::size_t>(bd.atom_index(i, j))];
                if (out.ratio.add(len * d * d / parent, 1.0)) out.ratio.where = pair_label(i, j);
                if (i == 0) {
                    xs.push_back(std::log(d));
                    ys.push_back(std::log(len));
                }
            }
        }
        if (xs.size() >= 3 && *std::max_element(xs.begin(), xs.end()) > xs.front()) {
            reg.fit = linear_fit(xs, ys);
            reg.skipped = false;
        }
        out.regressions.push_back(reg);
    }
    return out;
}

YoccozRecord yoccoz_regression(std::span<const double> lengths, std::int64_t first,
                               std::int64_t spot_left, std::int64_t spot_right) {
    YoccozRecord rec;
    if (lengths.size() < 8) {
        rec.skipped = true;
        rec.reason = "fewer than eight atoms";
        return rec;
    }
    const auto it = std::min_element(lengths.begin(), lengths.end());
    const std::size_t split = static_cast<std::size_t>(it - lengths.begin());
    rec.split = first + static_cast<std::int64_t>(split);
    auto fit_range = [&](std::size_t from, std::size_t to, LinearFit& dst) {
        std::vector<double> xs, ys;
        for (std::size_t t = from; t <= to; ++t) {
            const std::int64_t j = first + static_cast<std::int64_t>(t);
            const double d = static_cast<double>(std::min(j - spot_left, spot_right - j));
            if (d <= 0 || !(lengths[t] > 0)) continue;
            xs.push_back(std::log(d));
            ys.push_back(std::log(lengths[t]));
        }
        const bool varied = !xs.empty() && *std::max_element(xs.begin(), xs.end()) >
                                               *std::min_element(xs.begin(), xs.end());
        if (xs.size() < 2 || !varied) return false;
        dst = linear_fit(xs, ys);
        return true;
    };
    const bool left_ok = fit_range(0, split, rec.left);
    const bool right_ok = fit_range(split, lengths.size() - 1, rec.right);
    if (!left_ok && !right_ok) {
        rec.skipped = true;
        rec.reason = "no half with two distinct distances";
    }
    return rec;
}

YoccozRecord yoccoz_fit(const PartitionHierarchy& h, int n, int s, std::int64_t i) {
    check_level(h, n);
    const auto& bd = h.bridges(n);
    YoccozRecord rec;
    if (s < 0 || s >= bd.r) {
        rec.skipped = true;
        rec.reason = "no such bridge";
    } else if (i < 0 || i >= bd.q) {
        throw InvalidInputError("orbit shift outside 0..q_n - 1");
    } else {
        const Bridge& g = bd.reduced_bridges[static_cast<std::size_t>(s)];
        std::vector<double> lengths;
        for (std::int64_t j = g.first; j <= g.last; ++j) {
            lengths.push_back(to_double(h.atom_length(n, bd.atom_index(i, j))));
        }
        rec = yoccoz_regression(lengths, g.first, bd.critical_times[static_cast<std::size_t>(s)],
                                bd.critical_times[static_cast<std::size_t>(s) + 1]);
    }
    rec.level = n;
    rec.bridge = s;
    rec.orbit_shift = i;
    rec.control = h.spec().family() == Family::rigid_rotation;
    return rec;
}

AlmostParabolicRecord almost_parabolic_check(const PartitionHierarchy& h, int n, int s,
                                             std::size_t samples) {
    check_level(h, n);
    const auto& bd = h.bridges(n);
    AlmostParabolicRecord rec;
    rec.level = n;
    rec.bridge = s;
    rec.control = h.spec().family() == Family::rigid_rotation;
    if (s < 0 || s >= bd.r || bd.reduced_bridges[static_cast<std::size_t>(s)].empty()) {
        rec.empty = true;
        return rec;
    }
    const MapSpec& spec = h.spec();
    PrecisionScope scope(spec.precision_bits());
    const LiftEvaluator lift(spec);
    const Bridge& g = bd.reduced_bridges[static_cast<std::size_t>(s)];
    const double guard = std::ldexp(1.0, -static_cast<int>(spec.precision_bits()) / 2);
    rec.max_schwarzian = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < samples; ++t) {
        const double u = (static_cast<double>(t) + 0.5) / static_cast<double>(samples) *
                         static_cast<double>(g.size());
        const std::int64_t j = g.first + std::min<std::int64_t>(static_cast<std::int64_t>(u), g.size() - 1);
        const double theta = u - std::floor(u);
        const auto [l, r] = atom_endpoints(n, bd.atom_index(0, j), bd.q);
        Real y = h.orbit().circle_position(static_cast<std::size_t>(l)) +
                 Real(theta) * arc_length(h.orbit(), l, r);
        double S = 0, D = 1;
        bool skip = false;
        for (std::int64_t step = 0; step < bd.q && !skip; ++step) {
            const double xd = to_double(frac(y));
            Derivs dv = double_derivatives(spec, xd);
            if (std::abs(dv.d1) < 1e-6 && spec.family() == Family::perturbed_bicritical) {
                dv = {to_double(lift.derivative(y, 1)), to_double(lift.derivative(y, 2)),
                      to_double(lift.derivative(y, 3))};
            }
            if (std::abs(dv.d1) <= guard) {
                skip = true;
                break;
            }
            const double q2 = dv.d2 / dv.d1;
            S += (dv.d3 / dv.d1 - 1.5 * q2 * q2) * D * D;
            D *= dv.d1;
            if (!std::isfinite(S) || !std::isfinite(D)) skip = true;
            y = lift.value(y);
        }
        if (skip) {
            ++rec.skipped;
            continue;
        }
        ++rec.samples;
        if (S < 0) ++rec.negative;
        rec.max_schwarzian = std::max(rec.max_schwarzian, S);
    }
    if (rec.samples > 0) {
        rec.fraction_negative = static_cast<double>(rec.negative) / static_cast<double>(rec.samples);
    } else {
        rec.max_schwarzian = 0;
    }
    return rec;
}

RealBoundsLevel real_bounds_level(const PartitionHierarchy& h, int n) {
    check_level(h, n);
    RealBoundsLevel out;
    out.level = n;
    out.item1 = adjacency_ratios(h.partition(n));
    out.items23 = bridge_and_spot_comparability(h, n);
    out.item4 = quadratic_law(h, n);

    double min_len = std::numeric_limits<double>::infinity();
    const std::int64_t q = h.cf().q_small(n);
    const std::int64_t q_prev = h.cf().q_small(n - 1);
    for (std::int64_t i = 0; i < q; ++i) min_len = std::min(min_len, to_double(h.atom_length(n - 1, i)));
    for (std::int64_t i = 0; i < q_prev; ++i) min_len = std::min(min_len, to_double(h.atom_length(n, i)));
    out.log_min_atom = std::log(min_len);
    for (int k = 1; k <= n; ++k) out.log_quotient_product += log_integer(h.cf().a(static_cast<std::size_t>(k)));

    out.M_level = out.item1.max_ratio;
    out.M_attribution = "adjacency";
    auto consider = [&](const RatioStat& r, const char* name) {
        if (!r.vacuous() && r.max_ratio > out.M_level) {
            out.M_level = r.max_ratio;
            out.M_attribution = name;
        }
    };
    consider(out.items23.bridges, "bridge");
    consider(out.items23.spots, "spot");
    consider(out.item4.ratio, "quadratic");
    return out;
}

EmpiricalM empirical_M(std::span<const RealBoundsLevel> reports, bool control) {
    if (reports.size() < 3) throw InvalidInputError("empirical M needs at least three levels");
    std::vector<const RealBoundsLevel*> sorted;
    for (const auto& r : reports) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->level < b->level; });
    EmpiricalM out;
    out.control = control;
    for (const auto* r : sorted) {
        out.levels.push_back(r->level);
        out.M_by_level.push_back(r->M_level);
        out.attribution.push_back(r->M_attribution);
    }
    const std::size_t m = sorted.size();
    std::vector<double> tail_max(m + 1, 0.0);
    for (std::size_t t = m; t-- > 0;) tail_max[t] = std::max(tail_max[t + 1], out.M_by_level[t]);
    std::size_t start = m - 1;
    for (std::size_t t = 0; t + 1 < m; ++t) {
        if ((tail_max[t] - tail_max[t + 1]) / tail_max[t + 1] < 0.05) {
            start = t;
            out.stabilized = true;
            break;
        }
    }
    out.n0 = out.levels[start];
    out.M = tail_max[start];
    out.item5_holds = true;
    for (std::size_t t = start; t < m; ++t) {
        SmallestAtomCheck c;
        c.level = sorted[t]->level;
        c.log_min_atom = sorted[t]->log_min_atom;
        c.log_bound = -c.level * std::log(out.M) - 2 * sorted[t]->log_quotient_product;
        c.slack = c.log_min_atom - c.log_bound;
        c.holds = c.slack >= 0;
        out.item5_holds = out.item5_holds && c.holds;
        out.item5.push_back(c);
    }
    return out;
}

}  // namespace critdim
