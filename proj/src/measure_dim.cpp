#include "critdim/measure_dim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "critdim/errors.hpp"
#include "critdim/stats.hpp"

namespace critdim {

namespace {

double to_d(const LinearForm& f, const ContinuedFraction& cf) {
    PrecisionScope scope(cf.precision_bits());
    return to_double(f.evaluate(cf.alpha()));
}

LinearForm scaled(const LinearForm& f, std::int64_t k) { return Integer(k) * f; }

}  // namespace

const LinearForm& atom_measure_form(const ContinuedFraction& cf, int generation) {
    if (generation < -1 || static_cast<std::size_t>(std::max(generation, 0)) > cf.depth()) {
        throw DepthExceededError("generation " + std::to_string(generation) +
                                 " beyond continued-fraction depth " + std::to_string(cf.depth()));
    }
    return cf.delta_form(generation);
}

Real atom_measure(const ContinuedFraction& cf, int generation, std::int64_t) {
    atom_measure_form(cf, generation);
    return cf.delta(generation);
}

MeasureIndex::MeasureIndex(const PartitionHierarchy& hierarchy, int level)
    : hierarchy_(&hierarchy), level_(level == 0 ? hierarchy.max_level() + 1 : level) {
    partition_ = &hierarchy.partition(level_);
    PrecisionScope scope(hierarchy.spec().precision_bits());
    x0_ = hierarchy.orbit().circle_position(0);
    const auto& atoms = partition_->atoms();
    long_prefix_.assign(atoms.size() + 1, 0);
    for (std::size_t p = 0; p < atoms.size(); ++p) {
        long_prefix_[p + 1] = long_prefix_[p] + (atoms[p].label.generation == level_ - 1 ? 1 : 0);
    }
}

void MeasureIndex::count_range(const Real& u, const Real& v, bool to_end, Counts& out) const {
    const std::size_t n = partition_->size();
    const Real& tol = partition_->tolerance();
    // first position whose offset is >= t (or > t when strict)
    auto search = [&](const Real& t, bool strict) {
        std::size_t lo = 0, hi = n;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            const Real& o = partition_->offset(mid);
            if (strict ? (o <= t) : (o < t)) lo = mid + 1;
            else hi = mid;
        }
        return lo;
    };
    const std::size_t a = search(u - tol, false);
    std::size_t b = n;
    if (!to_end && v + tol < 1) {
        const std::size_t idx = search(v + tol, true);
        b = idx == 0 ? 0 : idx - 1;
    }
    auto add = [&](std::size_t from, std::size_t to, std::int64_t& longs, std::int64_t& shorts) {
        if (from >= to) return;
        const std::int64_t l = long_prefix_[to] - long_prefix_[from];
        longs += l;
        shorts += static_cast<std::int64_t>(to - from) - l;
    };
    add(a, std::max(a, b), out.long_inside, out.short_inside);

    std::set<std::size_t> partial{search(u, true) - 1};
    if (!to_end && v < 1) partial.insert(search(v, false) - 1);
    for (const std::size_t p : partial) {
        if (p >= a && p < b) continue;
        const bool is_long = partition_->atoms()[p].label.generation == level_ - 1;
        (is_long ? out.long_partial : out.short_partial) += 1;
    }
}

MeasureBracket MeasureIndex::finish(const Counts& c) const {
    const ContinuedFraction& cf = hierarchy_->cf();
    const LinearForm& dl = cf.delta_form(level_ - 1);
    const LinearForm& ds = cf.delta_form(level_);
    MeasureBracket b;
    b.level = level_;
    b.lo_form = scaled(dl, c.long_inside) + scaled(ds, c.short_inside);
    b.hi_form = b.lo_form + scaled(dl, c.long_partial) + scaled(ds, c.short_partial);
    PrecisionScope scope(cf.precision_bits());
    b.lo = b.lo_form.evaluate(cf.alpha());
    b.hi = b.hi_form.evaluate(cf.alpha());
    return b;
}

MeasureBracket MeasureIndex::measure_length(const Real& x, const Real& length) const {
    PrecisionScope scope(hierarchy_->spec().precision_bits());
    if (length >= 1 || length <= 0) {
        Counts all;
        all.long_inside = partition_->long_count();
        all.short_inside = partition_->short_count();
        return finish(all);
    }
    const Real u = frac(x - x0_);
    const Real end = u + length;
    Counts c;
    if (end <= 1) {
        count_range(u, end, end >= 1, c);
    } else {
        count_range(u, Real(1), true, c);
        count_range(Real(0), end - 1, false, c);
    }
    return finish(c);
}

MeasureBracket MeasureIndex::measure(const Real& x, const Real& y) const {
    PrecisionScope scope(hierarchy_->spec().precision_bits());
    const Real len = frac(y - x);
    return measure_length(x, len == 0 ? Real(1) : len);
}

MeasureBracket arc_measure(const PartitionHierarchy& hierarchy, const Real& x, const Real& y,
                           std::optional<double> tolerance) {
    const MeasureIndex index(hierarchy);
    MeasureBracket b = index.measure(x, y);
    if (tolerance) {
        PrecisionScope scope(hierarchy.spec().precision_bits());
        b.tolerance_met = to_double(b.hi - b.lo) <= *tolerance;
    }
    return b;
}

std::int64_t cover_trim(std::int64_t a_next, double gamma) {
    if (!(gamma > 0 && gamma < 1)) throw InvalidInputError("cover gamma must lie in (0, 1)");
    if (a_next < 1) throw InvalidInputError("partial quotient must be positive");
    const long double p = std::pow(static_cast<long double>(a_next), static_cast<long double>(gamma));
    auto t = static_cast<std::int64_t>(std::floor(p + 1e-12L));
    return std::max<std::int64_t>(t, 1);
}

std::vector<std::int64_t> CoverSpec::atom_indices(std::int64_t i) const {
    std::vector<std::int64_t> out;
    out.reserve(static_cast<std::size_t>(kept_count));
    for (const auto& r : kept) {
        for (std::int64_t j = r.first; j <= r.last; ++j) out.push_back(i + q_prev + j * q);
    }
    return out;
}

CoverSpec build_cover(const BridgeDecomposition& bd, double gamma) {
    CoverSpec c;
    c.level = bd.level;
    c.gamma = gamma;
    c.a_next = bd.a_next;
    c.q = bd.q;
    c.q_prev = bd.q_prev;
    c.trim = cover_trim(bd.a_next, gamma);
    for (int s = 0; s < bd.r; ++s) {
        const std::int64_t ks = bd.critical_times[static_cast<std::size_t>(s)];
        const std::int64_t kn = bd.critical_times[static_cast<std::size_t>(s) + 1];
        KeptRange r;
        r.bridge = s;
        r.first = std::max(ks + c.trim + 1, ks + 1);
        r.last = std::min(kn - c.trim, kn - 1);
        c.kept_count += r.size();
        c.kept.push_back(r);
    }
    return c;
}

CoverReport cover_report(const CoverSpec& cover, const PartitionHierarchy& h, int critical_count,
                         double M) {
    const ContinuedFraction& cf = h.cf();
    const int n = cover.level;
    CoverReport rep;
    rep.level = n;
    rep.gamma = cover.gamma;
    rep.critical_count = critical_count;
    rep.M = M;
    rep.trim = cover.trim;
    rep.kept_count = cover.kept_count;
    rep.empty = cover.empty();

    const LinearForm& dn = cf.delta_form(n);
    rep.piece_measure_form = scaled(dn, cover.kept_count);
    LinearForm total;
    std::int64_t counted = 0;
    std::vector<double> piece_lengths(static_cast<std::size_t>(cover.q), 0.0);
    for (std::int64_t i = 0; i < cover.q; ++i) {
        for (const std::int64_t k : cover.atom_indices(i)) {
            ++counted;
            piece_lengths[static_cast<std::size_t>(i)] += to_double(h.atom_length(n, k));
        }
    }
    total = scaled(dn, counted);
    rep.total_measure_form = total;
    rep.measures_agree = (total == Integer(cover.q) * rep.piece_measure_form);
    {
        PrecisionScope scope(cf.precision_bits());
        rep.piece_measure = rep.piece_measure_form.evaluate(cf.alpha());
        rep.total_measure = rep.total_measure_form.evaluate(cf.alpha());
    }
    for (std::size_t i = 0; i < piece_lengths.size(); ++i) rep.total_length += piece_lengths[i];

    const double a = static_cast<double>(cover.a_next);
    const double n4 = 4.0 * critical_count + 2.0;
    const double delta = to_d(dn, cf);
    auto geq = [](double lhs, double rhs, bool vacuous) {
        return InequalityCheck{lhs, rhs, lhs - rhs, lhs >= rhs, vacuous};
    };
    auto leq = [](double lhs, double rhs, bool vacuous) {
        return InequalityCheck{lhs, rhs, rhs - lhs, lhs <= rhs, vacuous};
    };
    rep.piece_measure_bound =
        geq(to_double(rep.piece_measure), delta * (a - n4 * std::pow(a, cover.gamma)), rep.empty);
    rep.total_measure_bound = geq(to_double(rep.total_measure),
                                  (1 - 2 / a) * (1 - n4 / std::pow(a, 1 - cover.gamma)), rep.empty);

    const double trim = static_cast<double>(cover.trim);
    double worst = -1;
    rep.piece_length_bound = leq(0, 0, rep.empty);
    for (std::int64_t i = 0; i < cover.q; ++i) {
        const double lhs = piece_lengths[static_cast<std::size_t>(i)];
        const double rhs = n4 * M * to_double(h.atom_length(n - 1, i)) / trim;
        if (lhs > rep.piece_length_max) {
            rep.piece_length_max = lhs;
            rep.piece_length_argmax = i;
        }
        const double ratio = lhs / rhs;
        if (ratio > worst) {
            worst = ratio;
            rep.piece_length_bound = leq(lhs, rhs, rep.empty);
        }
    }
    rep.total_length_bound = leq(rep.total_length, n4 * M / trim, rep.empty);
    return rep;
}

SingularityWitness singularity_certificate(const PartitionHierarchy& h, double eps) {
    if (!(eps > 0 && eps < 1)) throw InvalidInputError("eps must lie in (0, 1)");
    const ContinuedFraction& cf = h.cf();
    SingularityWitness out;
    out.eps = eps;
    out.control = h.spec().family() == Family::rigid_rotation;
    double best_score = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= h.max_level(); ++n) {
        const auto& bd = h.bridges(n);
        if (bd.r < 1 || bd.a_next < 3) continue;
        std::vector<double> column(static_cast<std::size_t>(bd.a_next), 0.0);
        for (std::int64_t j = 0; j < bd.a_next; ++j) {
            for (std::int64_t i = 0; i < bd.q; ++i) {
                column[static_cast<std::size_t>(j)] += to_double(h.atom_length(n, bd.atom_index(i, j)));
            }
        }
        const double q_delta = to_d(Integer(bd.q) * cf.delta_form(n), cf);
        SingularityCandidate best;
        double level_score = std::numeric_limits<double>::infinity();
        const double log_a = std::log(static_cast<double>(bd.a_next));
        for (std::int64_t t = 1; 2 * t < bd.a_next; ++t) {
            const double gamma = std::log(static_cast<double>(t) + 0.5) / log_a;
            if (!(gamma > 0 && gamma < 1) || cover_trim(bd.a_next, gamma) != t) continue;
            const CoverSpec cover = build_cover(bd, gamma);
            if (cover.empty()) break;
            double length = 0;
            for (const auto& r : cover.kept) {
                for (std::int64_t j = r.first; j <= r.last; ++j) length += column[static_cast<std::size_t>(j)];
            }
            SingularityCandidate c{n, bd.a_next, t, gamma, q_delta * static_cast<double>(cover.kept_count), length};
            const double score = std::max((1 - c.measure) / eps, c.length / eps);
            if (score < level_score) {
                level_score = score;
                best = c;
            }
            if (!out.found && c.measure >= 1 - eps && c.length <= eps) {
                out.found = true;
                out.witness = c;
                out.measure_form = Integer(bd.q * cover.kept_count) * cf.delta_form(n);
            }
        }
        if (std::isfinite(level_score)) {
            out.best_per_level.push_back(best);
            if (!out.found && level_score < best_score) {
                best_score = level_score;
                out.witness = best;
            }
        }
    }
    if (out.found) {
        PrecisionScope scope(cf.precision_bits());
        out.measure = out.measure_form.evaluate(cf.alpha());
    } else if (out.best_per_level.empty()) {
        out.reason = "no level with a partial quotient of at least 3 within reach";
    } else {
        out.reason = "no trimmed cover reaches both thresholds";
    }
    return out;
}

std::vector<int> qualifying_levels(const ContinuedFraction& cf, double tau, int max_level) {
    std::vector<int> out;
    for (int n = 1; n <= max_level && static_cast<std::size_t>(n) < cf.depth(); ++n) {
        const double lhs = log_integer(cf.a(static_cast<std::size_t>(n) + 1));
        const double rhs = tau * log_integer(cf.q(n));
        if (lhs >= rhs - 1e-12) out.push_back(n);
    }
    return out;
}

ContentSums hausdorff_content_sum(const PartitionHierarchy& h, std::span<const int> levels,
                                  double gamma, double d, double tau, int critical_count, double M) {
    if (!(d > 0 && d <= 1)) throw InvalidInputError("content exponent d must lie in (0, 1]");
    ContentSums out;
    out.d = d;
    out.gamma = gamma;
    out.tau = tau;
    out.majorant_exponent = 1 - d * (gamma * tau + 1);
    out.majorant_divergent = out.majorant_exponent >= 0;
    out.majorant_factor = std::pow(M, d) * std::pow(4.0 * critical_count + 2.0, d);
    for (const int n : levels) {
        const CoverSpec cover = build_cover(h.bridges(n), gamma);
        double term = 0;
        for (std::int64_t i = 0; i < cover.q && !cover.empty(); ++i) {
            double len = 0;
            for (const std::int64_t k : cover.atom_indices(i)) len += to_double(h.atom_length(n, k));
            term += std::pow(len, d);
        }
        out.levels.push_back(n);
        out.terms.push_back(term);
        out.nonempty.push_back(!cover.empty());
        out.majorant_terms.push_back(std::exp(out.majorant_exponent * log_integer(h.cf().q(n))));
    }
    const std::size_t m = out.terms.size();
    out.tails.assign(m, 0.0);
    for (std::size_t K = m; K-- > 0;) out.tails[K] = out.terms[K] + (K + 1 < m ? out.tails[K + 1] : 0.0);
    out.tails_decreasing = m >= 2;
    for (std::size_t K = 1; K < m; ++K) out.tails_decreasing = out.tails_decreasing && out.tails[K] < out.tails[K - 1];
    return out;
}

DimensionEstimate local_dimension_samples(const PartitionHierarchy& h,
                                          const LocalDimensionOptions& options) {
    if (options.samples == 0) throw InvalidInputError("at least one sample is needed");
    const ContinuedFraction& cf = h.cf();
    const MapSpec& spec = h.spec();
    PrecisionScope scope(spec.precision_bits());
    const int deepest = h.max_level() + 1;
    DimensionEstimate est;
    est.control = spec.family() == Family::rigid_rotation;
    for (int k = 1; k <= deepest; ++k) est.levels.push_back(k);

    const auto& orbit = h.orbit();
    const std::int64_t start = static_cast<std::int64_t>(orbit.positions.size());
    const std::int64_t window =
        std::min<std::int64_t>(cf.q_small(deepest) + cf.q_small(deepest - 1), std::int64_t{1} << 22);
    check_orbit_budget(spec.precision_bits(), static_cast<std::size_t>(start + window));
    std::mt19937_64 rng(options.seed);
    const double shift = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const double step = std::numbers::phi - 1;
    std::vector<std::pair<std::int64_t, std::size_t>> order;
    for (std::size_t s = 0; s < options.samples; ++s) {
        const double u = shift + static_cast<double>(s) * step;
        const auto off = static_cast<std::int64_t>(std::floor(static_cast<double>(window) * (u - std::floor(u))));
        order.emplace_back(start + std::min(off, window - 1), s);
    }
    std::sort(order.begin(), order.end());

    std::vector<Real> points(options.samples);
    OrbitStepper stepper(spec, orbit.positions.back());
    std::int64_t at = start - 1;
    for (const auto& [m, s] : order) {
        while (at < m) {
            stepper.step();
            ++at;
        }
        points[s] = frac(stepper.position());
    }

    std::optional<MeasureIndex> index;
    if (options.ball_variant) index.emplace(h);
    std::vector<double> log_delta(static_cast<std::size_t>(deepest) + 1);
    for (int g = 0; g <= deepest; ++g) log_delta[static_cast<std::size_t>(g)] = std::log(to_double(cf.delta(g)));

    std::vector<std::size_t> index_of(options.samples);
    for (const auto& [m, s] : order) index_of[s] = static_cast<std::size_t>(m);
    for (std::size_t s = 0; s < options.samples; ++s) {
        SampleExponents se;
        se.orbit_index = static_cast<std::int64_t>(index_of[s]);
        se.position = to_double(points[s]);
        for (int k = 1; k <= deepest; ++k) {
            const auto& part = h.partition(k);
            const LocateResult loc = part.locate(points[s]);
            const Atom& atom = part.atom(loc.atom);
            const Real len = part.length(atom);
            const double log_len = std::log(to_double(len));
            se.exponents.push_back(log_delta[static_cast<std::size_t>(atom.label.generation)] / log_len);
            if (index) {
                const MeasureBracket b = index->measure_length(points[s] - len, 2 * len);
                se.ball_exponents.push_back(std::log(to_double(b.midpoint())) / (log_len + std::log(2.0)));
            }
        }
        est.samples.push_back(std::move(se));
    }

    for (std::size_t k = 0; k < est.levels.size(); ++k) {
        std::vector<double> col, ball;
        for (const auto& se : est.samples) {
            col.push_back(se.exponents[k]);
            if (!se.ball_exponents.empty()) ball.push_back(se.ball_exponents[k]);
        }
        double sum = 0;
        for (const double v : col) sum += v;
        est.level_medians.push_back(median(col));
        est.level_means.push_back(sum / static_cast<double>(col.size()));
        est.ball_medians.push_back(ball.empty() ? std::numeric_limits<double>::quiet_NaN() : median(ball));
    }
    std::vector<double> last;
    for (const auto& se : est.samples) last.push_back(se.exponents.back());
    est.estimate = median(last);
    est.iqr = quantile(last, 0.75) - quantile(last, 0.25);
    est.frostman_lower = quantile(last, 0.10);
    est.frostman_upper = quantile(last, 0.90);
    est.low_confidence = deepest < 4;

    std::vector<double> xs, ys;
    for (int k = std::max(1, deepest - 3); k <= deepest; ++k) {
        const double lq = log_integer(cf.q(k));
        if (lq <= 0) continue;
        xs.push_back(1.0 / lq);
        ys.push_back(est.level_medians[static_cast<std::size_t>(k - 1)]);
    }
    if (xs.size() >= 2 && xs.front() != xs.back()) {
        est.extrapolated = linear_fit(xs, ys).intercept;
    } else {
        est.extrapolated = est.estimate;
    }
    return est;
}

SignatureReport signature(const PartitionHierarchy& h) {
    const auto& crit = h.spec().critical_points();
    if (crit.empty()) throw InvalidInputError("signature is undefined for a map without critical points");
    SignatureReport out;
    out.critical_count = crit.size();
    for (const auto& a : h.cf().quotients()) out.rotation_prefix.push_back(a);
    const MeasureIndex index(h);
    PrecisionScope scope(h.spec().precision_bits());
    out.midpoint_sum = 0;
    for (std::size_t i = 0; i < crit.size(); ++i) {
        out.criticalities.push_back(crit[i].criticality);
        const auto& next = crit[(i + 1) % crit.size()];
        out.masses.push_back(index.measure(crit[i].position, next.position));
        out.midpoint_sum += out.masses.back().midpoint();
    }
    return out;
}

}  // namespace critdim
