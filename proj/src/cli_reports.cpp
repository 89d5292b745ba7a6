#include "critdim/cli_reports.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "critdim/bounds_lab.hpp"
#include "critdim/errors.hpp"
#include "critdim/measure_dim.hpp"
#include "critdim/rotation.hpp"

namespace critdim {

namespace {

const std::set<std::string> kMapKeys{"family", "omega", "target_cf", "target-cf", "params",
                                     "precision_bits"};
const std::set<std::string> kAnalysisKeys{"depth", "gamma", "tau",    "samples", "seed",
                                          "level", "levels", "eps", "d"};
const std::set<std::string> kTopKeys{"map", "analysis", "output"};

void reject_unknown(const Json& object, const std::set<std::string>& allowed, const std::string& where) {
    if (!object.is_object()) throw InvalidInputError(where + " must be an object");
    for (const auto& item : object.items()) {
        if (!allowed.contains(item.key())) {
            throw InvalidInputError("unknown field '" + item.key() + "' in " + where);
        }
    }
}

std::string number_text(const Json& v, const std::string& field) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number()) return decimal(v.get<double>());
    throw InvalidInputError(field + " must be a number or a decimal string");
}

Integer integer_from(const Json& v, const std::string& field) {
    const std::string text = number_text(v, field);
    try {
        Integer n(text);
        if (n < 1) throw InvalidInputError(field + " entries must be positive");
        return n;
    } catch (const std::runtime_error&) {
        throw InvalidInputError(field + ": '" + text + "' is not an integer");
    }
}

std::vector<Integer> quotient_array(const Json& v, const std::string& field) {
    if (v.is_string()) return parse_quotient_list(v.get<std::string>());
    if (!v.is_array()) throw InvalidInputError(field + " must be a list of integers");
    std::vector<Integer> out;
    for (const auto& e : v) out.push_back(integer_from(e, field));
    return out;
}

TargetSpec target_from(const Json& v) {
    TargetSpec t;
    if (!v.is_object()) {
        t.quotients = quotient_array(v, "target_cf");
        return t;
    }
    reject_unknown(v, {"kind", "quotients", "word", "tau", "max_a", "seed"}, "target_cf");
    t.kind = v.value("kind", std::string("list"));
    if (v.contains("quotients")) t.quotients = quotient_array(v["quotients"], "target_cf.quotients");
    if (v.contains("word")) t.quotients = quotient_array(v["word"], "target_cf.word");
    t.tau = v.value("tau", 1.0);
    t.max_a = v.value("max_a", std::uint64_t{2});
    t.seed = v.value("seed", std::uint64_t{0});
    return t;
}

template <class T>
T get_as(const Json& object, const char* key, const std::string& where) {
    try {
        return object.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw InvalidInputError(std::string(key) + " in " + where + " has the wrong type");
    }
}

Json fit_json(const LinearFit& f) {
    return Json{{"slope", decimal(f.slope)},
                {"intercept", decimal(f.intercept)},
                {"residual", decimal(f.residual)},
                {"points", f.points}};
}

Json label_json(const AtomLabel& l) { return Json::array({l.generation, l.index}); }

Json ratio_json(const RatioStat& r) {
    return Json{{"max_ratio", decimal(r.max_ratio)}, {"where", r.where}, {"count", r.count},
                {"vacuous", r.vacuous()}};
}

Json form_json(const LinearForm& f) {
    return Json{{"constant", to_decimal(f.constant)}, {"alpha_coeff", to_decimal(f.alpha_coeff)}};
}

Json check_json(const InequalityCheck& c) {
    return Json{{"lhs", decimal(c.lhs)}, {"rhs", decimal(c.rhs)}, {"slack", decimal(c.slack)},
                {"pass", c.pass}, {"vacuous", c.vacuous}};
}

Json integers_json(std::span<const Integer> values) {
    Json out = Json::array();
    for (const auto& v : values) out.push_back(to_decimal(v));
    return out;
}

Json reals_json(std::span<const Real> values, unsigned bits) {
    Json out = Json::array();
    for (const auto& v : values) out.push_back(decimal(v, bits));
    return out;
}

Json doubles_json(std::span<const double> values) {
    Json out = Json::array();
    for (double v : values) out.push_back(decimal(v));
    return out;
}

Json reading_json(const RotationReading& r, unsigned bits) {
    Json out{{"rho_lo", decimal(r.rho_lo, bits)},
             {"rho_hi", decimal(r.rho_hi, bits)},
             {"quotients", integers_json(r.quotients)},
             {"q", integers_json(r.return_times)},
             {"residuals", reals_json(r.return_distances, bits)},
             {"iterations", r.iterations},
             {"complete", r.complete}};
    if (r.rational_lock) {
        out["rational_lock"] = Json{{"p", to_decimal(r.rational_lock->p)}, {"q", to_decimal(r.rational_lock->q)}};
    } else {
        out["rational_lock"] = nullptr;
    }
    return out;
}

double analysis_tau(const RunConfig& c) {
    if (c.analysis.tau) return *c.analysis.tau;
    if (c.map.target && c.map.target->kind == "prescribed_growth") return c.map.target->tau;
    return 0.0;
}

/// Everything a command needs about the map: its spec, the cf its partitions
/// follow and, on demand, the partition hierarchy.
struct Prepared {
    std::optional<MapSpec> spec;
    ContinuedFraction cf;
    std::optional<TuneResult> tune;
    std::optional<RotationReading> reading;
    int max_level = 0;
    std::unique_ptr<PartitionHierarchy> hierarchy;
    bool control = false;
};

Prepared prepare(const RunConfig& c, bool need_hierarchy) {
    const unsigned bits = c.map.precision_bits;
    const auto depth = static_cast<std::size_t>(c.analysis.depth);
    Prepared p;
    p.max_level = c.analysis.depth - 1;
    p.control = family_from_string(c.map.family) == Family::rigid_rotation;
    if (c.map.target) {
        const auto quotients = target_quotients(*c.map.target, depth);
        p.cf = convergents(quotients, depth, std::nullopt, bits);
        if (p.control) {
            p.spec = map_from_config(c.map, p.cf.alpha());
        } else {
            const MapSpec family = map_from_config(c.map, Real(0));
            p.tune = tune_parameter(family, quotients, depth);
            p.spec = family.with_omega(p.tune->omega);
        }
    } else {
        p.spec = map_from_config(c.map, parse_real(*c.map.omega));
        p.reading = closest_return_quotients(*p.spec, Real(0), depth);
        if (p.reading->rational_lock) {
            throw ResolutionError("rotation number locks at " + to_decimal(p.reading->rational_lock->p) + "/" +
                                  to_decimal(p.reading->rational_lock->q) + "; no dynamical partitions");
        }
        if (p.reading->quotients.size() < depth) {
            throw ResolutionError("only " + std::to_string(p.reading->quotients.size()) +
                                  " quotients resolved, depth " + std::to_string(depth) + " requested");
        }
        const std::optional<Real> alpha = p.control ? std::optional<Real>(p.spec->omega()) : std::nullopt;
        p.cf = convergents(p.reading->quotients, depth, alpha, bits);
    }
    if (need_hierarchy) {
        p.hierarchy = std::make_unique<PartitionHierarchy>(*p.spec, p.cf, 0, p.max_level);
    }
    return p;
}

std::vector<int> bounds_levels(const RunConfig& c, int max_level) {
    if (!c.analysis.levels.empty()) {
        for (int n : c.analysis.levels) {
            if (n < 1 || n > max_level) {
                throw InvalidInputError("level " + std::to_string(n) + " outside 1.." + std::to_string(max_level));
            }
        }
        return c.analysis.levels;
    }
    const int first = max_level >= 5 ? 3 : 1;
    std::vector<int> out;
    for (int n = first; n <= max_level; ++n) out.push_back(n);
    return out;
}

int chosen_level(const RunConfig& c, const Prepared& p) {
    if (c.analysis.level) {
        if (*c.analysis.level < 1 || *c.analysis.level > p.max_level) {
            throw InvalidInputError("level must lie in 1.." + std::to_string(p.max_level));
        }
        return *c.analysis.level;
    }
    return p.max_level;
}

/// The level whose next quotient is largest, first one on ties.
int big_level(const Prepared& p) {
    int best = 1;
    for (int n = 2; n <= p.max_level; ++n) {
        if (p.cf.a(static_cast<std::size_t>(n) + 1) > p.cf.a(static_cast<std::size_t>(best) + 1)) best = n;
    }
    return best;
}

Json bounds_level_json(const RealBoundsLevel& r, const SmallestAtomCheck* item5) {
    Json item4 = Json::array();
    for (const auto& reg : r.item4.regressions) {
        item4.push_back(Json{{"bridge", reg.bridge}, {"skipped", reg.skipped}, {"fit", fit_json(reg.fit)}});
    }
    Json hist = Json::array();
    for (auto h : r.item1.histogram) hist.push_back(h);
    Json out{{"level", r.level},
             {"item1", Json{{"max_ratio", decimal(r.item1.max_ratio)},
                            {"first", label_json(r.item1.first)},
                            {"second", label_json(r.item1.second)},
                            {"log2_histogram", hist}}},
             {"item2", ratio_json(r.items23.bridges)},
             {"item3", ratio_json(r.items23.spots)},
             {"item4", Json{{"ratio", ratio_json(r.item4.ratio)}, {"regressions", item4}}},
             {"M_level", decimal(r.M_level)},
             {"M_attribution", r.M_attribution}};
    if (item5) {
        out["item5"] = Json{{"log_min_atom", decimal(item5->log_min_atom)},
                            {"log_bound", decimal(item5->log_bound)},
                            {"slack", decimal(item5->slack)},
                            {"holds", item5->holds}};
    } else {
        out["item5"] = nullptr;
    }
    return out;
}

Json empirical_json(const EmpiricalM& m) {
    Json levels = Json::array();
    for (int n : m.levels) levels.push_back(n);
    return Json{{"M_emp", decimal(m.M)},
                {"n0", m.n0},
                {"stabilized", m.stabilized},
                {"levels", levels},
                {"M_by_level", doubles_json(m.M_by_level)},
                {"attribution", m.attribution},
                {"item5_holds", m.item5_holds},
                {"control", m.control}};
}

struct BoundsRun {
    std::vector<RealBoundsLevel> levels;
    EmpiricalM M;
};

BoundsRun run_bounds(const PartitionHierarchy& h, std::span<const int> levels, bool control) {
    BoundsRun out;
    for (int n : levels) out.levels.push_back(real_bounds_level(h, n));
    out.M = empirical_M(out.levels, control);
    return out;
}

const SmallestAtomCheck* find_item5(const EmpiricalM& m, int level) {
    for (const auto& c : m.item5) {
        if (c.level == level) return &c;
    }
    return nullptr;
}

Json cover_json(const CoverReport& r, unsigned bits) {
    return Json{{"level", r.level},
                {"gamma", decimal(r.gamma)},
                {"critical_count", r.critical_count},
                {"M", decimal(r.M)},
                {"trim", r.trim},
                {"kept_count", r.kept_count},
                {"empty", r.empty},
                {"piece_measure_form", form_json(r.piece_measure_form)},
                {"total_measure_form", form_json(r.total_measure_form)},
                {"piece_measure", decimal(r.piece_measure, bits)},
                {"total_measure", decimal(r.total_measure, bits)},
                {"measures_agree", r.measures_agree},
                {"piece_length_max", decimal(r.piece_length_max)},
                {"piece_length_argmax", r.piece_length_argmax},
                {"total_length", decimal(r.total_length)},
                {"piece_measure_bound", check_json(r.piece_measure_bound)},
                {"total_measure_bound", check_json(r.total_measure_bound)},
                {"piece_length_bound", check_json(r.piece_length_bound)},
                {"total_length_bound", check_json(r.total_length_bound)},
                {"all_pass", r.all_pass()}};
}

Json candidate_json(const SingularityCandidate& c) {
    return Json{{"n", c.level},          {"a_next", c.a_next},          {"trim", c.trim},
                {"gamma", decimal(c.gamma)}, {"mu", decimal(c.measure)}, {"length", decimal(c.length)}};
}

Json dimension_json(const DimensionEstimate& e) {
    Json levels = Json::array();
    for (int n : e.levels) levels.push_back(n);
    return Json{{"levels", levels},
                {"samples", e.samples.size()},
                {"level_medians", doubles_json(e.level_medians)},
                {"level_means", doubles_json(e.level_means)},
                {"ball_medians", doubles_json(e.ball_medians)},
                {"estimate", decimal(e.estimate)},
                {"iqr", decimal(e.iqr)},
                {"frostman_lower", decimal(e.frostman_lower)},
                {"frostman_upper", decimal(e.frostman_upper)},
                {"extrapolated", decimal(e.extrapolated)},
                {"low_confidence", e.low_confidence},
                {"control", e.control}};
}

std::string dimension_csv(const DimensionEstimate& e) {
    std::ostringstream out;
    out << "sample,level,exponent\n";
    for (std::size_t s = 0; s < e.samples.size(); ++s) {
        const auto& row = e.samples[s];
        for (std::size_t k = 0; k < row.exponents.size() && k < e.levels.size(); ++k) {
            out << s << ',' << e.levels[k] << ',' << decimal(row.exponents[k]) << '\n';
        }
    }
    return out.str();
}

LocalDimensionOptions dimension_options(const RunConfig& c) {
    LocalDimensionOptions o;
    o.samples = c.analysis.samples;
    o.seed = c.analysis.seed;
    return o;
}

Json map_block(const Prepared& p, unsigned bits) {
    Json out{{"map", map_to_json(*p.spec)}, {"control", p.control}};
    if (p.tune) {
        out["tuning"] = Json{{"omega_lo", decimal(p.tune->omega_lo, bits)},
                             {"omega_hi", decimal(p.tune->omega_hi, bits)},
                             {"steps", p.tune->steps}};
    }
    return out;
}

void merge(Json& into, const Json& from) {
    for (const auto& item : from.items()) into[item.key()] = item.value();
}

struct Outcome {
    Json payload;
    int exit_code = kExitPass;
    std::optional<std::string> csv;
};

Outcome cmd_rotnum(const RunConfig& c) {
    const unsigned bits = c.map.precision_bits;
    const auto depth = static_cast<std::size_t>(c.analysis.depth);
    Outcome o;
    std::optional<Prepared> p;
    std::optional<RotationReading> reading;
    if (c.map.target) {
        p = prepare(c, false);
        reading = closest_return_quotients(*p->spec, Real(0), depth);
        o.payload = map_block(*p, bits);
    } else {
        const MapSpec spec = map_from_config(c.map, parse_real(*c.map.omega));
        reading = closest_return_quotients(spec, Real(0), depth);
        o.payload = Json{{"map", map_to_json(spec)}, {"control", spec.family() == Family::rigid_rotation}};
        if (!reading->rational_lock && reading->quotients.size() >= std::max<std::size_t>(depth, 3)) {
            p = prepare(c, false);
        }
    }
    o.payload["closest_returns"] = reading_json(*reading, bits);
    const auto birk = birkhoff_estimate(p ? *p->spec : map_from_config(c.map, parse_real(*c.map.omega)), 4096);
    o.payload["birkhoff"] = Json{{"iterations", birk.iterations},
                                 {"rho_lo", decimal(birk.rho_lo, bits)},
                                 {"rho_hi", decimal(birk.rho_hi, bits)}};
    if (p) {
        o.payload["cf"] = cf_to_json(p->cf);
        o.payload["profile"] = profile_to_json(diophantine_profile(p->cf, analysis_tau(c)));
    } else {
        o.payload["cf"] = nullptr;
        o.payload["profile"] = nullptr;
    }
    return o;
}

Outcome cmd_tune(const RunConfig& c) {
    if (!c.map.target) throw InvalidInputError("tune needs target_cf");
    const unsigned bits = c.map.precision_bits;
    Prepared p = prepare(c, false);
    Outcome o;
    o.payload = map_block(p, bits);
    const auto quotients = target_quotients(*c.map.target, static_cast<std::size_t>(c.analysis.depth));
    o.payload["target"] = integers_json(std::span<const Integer>(quotients.data(), static_cast<std::size_t>(c.analysis.depth)));
    o.payload["omega"] = decimal(p.spec->omega(), bits);
    if (p.tune) {
        o.payload["omega_width"] = decimal(Real(p.tune->omega_hi - p.tune->omega_lo), bits);
        o.payload["reextraction"] = reading_json(p.tune->reading, bits);
    }
    return o;
}

Outcome cmd_partition(const RunConfig& c) {
    const unsigned bits = c.map.precision_bits;
    Prepared p = prepare(c, true);
    const int n = chosen_level(c, p);
    const auto& part = p.hierarchy->partition(n);
    Outcome o;
    if (c.format == "csv") {
        o.csv = atoms_csv(part);
        return o;
    }
    o.payload = map_block(p, bits);
    const auto refine = refine_check(part, p.hierarchy->partition(n + 1), p.cf);
    Json atoms = Json::array();
    for (const Atom& a : part.atoms()) {
        atoms.push_back(Json{{"generation", a.label.generation},
                             {"index", a.label.index},
                             {"left", decimal(part.left(a), bits)},
                             {"right", decimal(part.right(a), bits)},
                             {"length", decimal(part.length(a), bits)}});
    }
    o.payload["level"] = n;
    o.payload["atom_count"] = part.size();
    o.payload["long_count"] = part.long_count();
    o.payload["short_count"] = part.short_count();
    o.payload["tiling_residual"] = decimal(part.tiling_residual(), bits);
    o.payload["tolerance"] = decimal(part.tolerance(), bits);
    o.payload["refinement"] = Json{{"min_pieces", refine.min_pieces},
                                   {"max_pieces", refine.max_pieces},
                                   {"worst_violation", decimal(refine.worst_violation)},
                                   {"contained", refine.contained},
                                   {"structure_ok", refine.structure_ok}};
    o.payload["atoms"] = atoms;
    if (!refine.structure_ok || !refine.contained) o.exit_code = kExitError;
    return o;
}

Outcome cmd_bridges(const RunConfig& c) {
    Prepared p = prepare(c, true);
    const int n = c.analysis.level ? chosen_level(c, p) : big_level(p);
    const auto& b = p.hierarchy->bridges(n);
    Outcome o;
    o.payload = map_block(p, c.map.precision_bits);
    Json spots = Json::array();
    for (auto k : b.critical_times) spots.push_back(b.atom_index(0, k));
    auto runs = [](const std::vector<Bridge>& v) {
        Json out = Json::array();
        for (const auto& g : v) out.push_back(Json{{"first", g.first}, {"last", g.last}, {"size", g.size()}});
        return out;
    };
    Json hits = Json::array();
    for (const auto& h : b.hits) {
        hits.push_back(Json{{"critical_index", h.critical_index},
                            {"atom_index", h.atom_index},
                            {"time", h.time ? Json(*h.time) : Json(nullptr)},
                            {"on_endpoint", h.on_endpoint}});
    }
    o.payload["level"] = n;
    o.payload["q"] = b.q;
    o.payload["q_prev"] = b.q_prev;
    o.payload["a_next"] = b.a_next;
    o.payload["degenerate"] = b.degenerate;
    o.payload["r_n"] = b.r;
    o.payload["critical_times"] = b.critical_times;
    o.payload["spot_indices"] = spots;
    o.payload["bridge_runs"] = runs(b.bridges);
    o.payload["reduced_bridge_runs"] = runs(b.reduced_bridges);
    o.payload["hits"] = hits;
    return o;
}

Outcome cmd_realbounds(const RunConfig& c) {
    Prepared p = prepare(c, true);
    const auto levels = bounds_levels(c, p.max_level);
    const auto run = run_bounds(*p.hierarchy, levels, p.control);
    Outcome o;
    o.payload = map_block(p, c.map.precision_bits);
    Json per_level = Json::array();
    for (const auto& r : run.levels) {
        Json entry = bounds_level_json(r, find_item5(run.M, r.level));
        const auto& b = p.hierarchy->bridges(r.level);
        Json yoccoz = Json::array();
        Json parabolic = Json::array();
        for (int s = 0; s < static_cast<int>(b.bridges.size()); ++s) {
            const auto y = yoccoz_fit(*p.hierarchy, r.level, s);
            yoccoz.push_back(Json{{"bridge", s},
                                  {"skipped", y.skipped},
                                  {"reason", y.reason},
                                  {"split", y.split},
                                  {"left", fit_json(y.left)},
                                  {"right", fit_json(y.right)}});
            const auto ap = almost_parabolic_check(*p.hierarchy, r.level, s);
            parabolic.push_back(Json{{"bridge", s},
                                     {"empty", ap.empty},
                                     {"samples", ap.samples},
                                     {"negative", ap.negative},
                                     {"skipped", ap.skipped},
                                     {"fraction_negative", decimal(ap.fraction_negative)},
                                     {"max_schwarzian", decimal(ap.max_schwarzian)}});
        }
        entry["yoccoz"] = yoccoz;
        entry["almost_parabolic"] = parabolic;
        per_level.push_back(entry);
    }
    o.payload["per_level"] = per_level;
    merge(o.payload, empirical_json(run.M));
    if (!run.M.item5_holds) o.exit_code = kExitSoftFlag;
    return o;
}

Outcome cmd_cover(const RunConfig& c) {
    Prepared p = prepare(c, true);
    const int n = c.analysis.level ? chosen_level(c, p) : big_level(p);
    const auto levels = bounds_levels(c, p.max_level);
    const auto run = run_bounds(*p.hierarchy, levels, p.control);
    const int N = static_cast<int>(p.spec->critical_points().size());
    Outcome o;
    o.payload = map_block(p, c.map.precision_bits);
    o.payload["level"] = n;
    o.payload["M_emp"] = decimal(run.M.M);
    Json covers = Json::array();
    for (double g : c.analysis.gamma) {
        const auto cover = build_cover(p.hierarchy->bridges(n), g);
        const auto r = cover_report(cover, *p.hierarchy, N, run.M.M);
        covers.push_back(cover_json(r, c.map.precision_bits));
        if (!r.empty && (!r.all_pass() || !r.measures_agree)) o.exit_code = kExitSoftFlag;
    }
    o.payload["covers"] = covers;
    return o;
}

Outcome cmd_singularity(const RunConfig& c) {
    Prepared p = prepare(c, true);
    const auto w = singularity_certificate(*p.hierarchy, c.analysis.eps);
    Outcome o;
    o.payload = map_block(p, c.map.precision_bits);
    o.payload["eps"] = decimal(w.eps);
    o.payload["found"] = w.found;
    o.payload["control"] = w.control || p.control;
    if (w.found) {
        o.payload["witness"] = candidate_json(w.witness);
        o.payload["measure_form"] = form_json(w.measure_form);
        o.payload["measure"] = decimal(w.measure, c.map.precision_bits);
    } else {
        o.payload["witness"] = nullptr;
        o.payload["infeasible"] = Json{{"reason", w.reason}};
    }
    Json best = Json::array();
    for (const auto& b : w.best_per_level) best.push_back(candidate_json(b));
    o.payload["best_per_level"] = best;
    return o;
}

Outcome cmd_dimension(const RunConfig& c) {
    Prepared p = prepare(c, true);
    const auto e = local_dimension_samples(*p.hierarchy, dimension_options(c));
    Outcome o;
    if (c.format == "csv") {
        o.csv = dimension_csv(e);
        return o;
    }
    o.payload = map_block(p, c.map.precision_bits);
    o.payload["seed"] = c.analysis.seed;
    merge(o.payload, dimension_json(e));
    if (e.low_confidence) o.exit_code = kExitSoftFlag;
    return o;
}

Outcome cmd_signature(const RunConfig& c) {
    const unsigned bits = c.map.precision_bits;
    Prepared p = prepare(c, true);
    const auto s = signature(*p.hierarchy);
    const auto v = validate_map(*p.spec);
    Outcome o;
    o.payload = map_block(p, bits);
    Json masses = Json::array();
    for (const auto& m : s.masses) {
        masses.push_back(Json{{"lo", decimal(m.lo, bits)}, {"hi", decimal(m.hi, bits)}, {"level", m.level}});
    }
    Json checks = Json::array();
    for (const auto& k : v.critical) {
        checks.push_back(Json{{"position", decimal(k.position, bits)},
                              {"declared_criticality", decimal(k.declared_criticality)},
                              {"fitted_exponent", decimal(k.fitted_exponent)},
                              {"vanishes", k.vanishes}});
    }
    o.payload["critical_count"] = s.critical_count;
    o.payload["rotation_prefix"] = integers_json(s.rotation_prefix);
    o.payload["criticalities"] = doubles_json(s.criticalities);
    o.payload["masses"] = masses;
    o.payload["midpoint_sum"] = decimal(s.midpoint_sum, bits);
    o.payload["critical_checks"] = checks;
    return o;
}

Json flag(const std::string& name, bool ok, const std::string& detail) {
    return Json{{"name", name}, {"ok", ok}, {"detail", detail}};
}

Outcome cmd_bounds_pipeline(const RunConfig& c) {
    const unsigned bits = c.map.precision_bits;
    const double tau = analysis_tau(c);
    Prepared p = prepare(c, true);
    const auto& h = *p.hierarchy;
    Outcome o;
    o.payload = map_block(p, bits);
    o.payload["tau"] = decimal(tau);
    o.payload["depth"] = c.analysis.depth;

    bool tiling_ok = true;
    double worst_violation = 0.0;
    for (int n = 1; n <= p.max_level; ++n) {
        const auto r = refine_check(h.partition(n), h.partition(n + 1), p.cf);
        tiling_ok = tiling_ok && r.structure_ok && r.contained;
        worst_violation = std::max(worst_violation, r.worst_violation);
    }

    const std::vector<int> levels = [&] {
        RunConfig plain = c;
        plain.analysis.levels.clear();
        return bounds_levels(plain, p.max_level);
    }();
    const auto run = run_bounds(h, levels, p.control);
    const auto profile = diophantine_profile(p.cf, tau);
    const auto bounds = dimension_bounds(tau, profile.nu1(), profile.nu2(), run.M.M);
    const auto e = local_dimension_samples(h, dimension_options(c));

    o.payload["profile"] = profile_to_json(profile);
    o.payload["real_bounds"] = empirical_json(run.M);
    o.payload["bounds"] = Json{{"lower", decimal(bounds.lower)},
                               {"lower_raw", decimal(bounds.lower_raw)},
                               {"lower_clamped", bounds.lower_clamped},
                               {"upper", decimal(bounds.upper)}};
    o.payload["dimension"] = dimension_json(e);

    Json soft = Json::array();
    soft.push_back(flag("estimate_above_lower", e.estimate > bounds.lower,
                        decimal(e.estimate) + " vs " + decimal(bounds.lower)));
    soft.push_back(flag("estimate_below_upper", e.estimate <= bounds.upper + 0.1,
                        decimal(e.estimate) + " vs " + decimal(bounds.upper) + " + 0.1"));
    if (!p.control) {
        soft.push_back(flag("estimate_inside_unit_interval", e.estimate > 0 && e.estimate < 1, decimal(e.estimate)));
    }
    soft.push_back(flag("M_stabilized", run.M.stabilized, "n0 = " + std::to_string(run.M.n0)));
    soft.push_back(flag("smallest_atom_bound", run.M.item5_holds, ""));
    soft.push_back(flag("depth_confidence", !e.low_confidence, ""));

    if (tau > 0) {
        std::vector<int> content_levels = c.analysis.levels;
        if (content_levels.empty()) {
            for (int n : qualifying_levels(p.cf, tau, p.max_level)) {
                if (n >= 3) content_levels.push_back(n);
            }
        }
        if (!content_levels.empty()) {
            const double d = c.analysis.d.value_or(bounds.upper + 0.1);
            const double g = c.analysis.gamma.front();
            const auto cs = hausdorff_content_sum(h, content_levels, g, d, tau,
                                                  static_cast<int>(p.spec->critical_points().size()), run.M.M);
            o.payload["content_sums"] = Json{{"d", decimal(cs.d)},
                                             {"gamma", decimal(cs.gamma)},
                                             {"levels", cs.levels},
                                             {"terms", doubles_json(cs.terms)},
                                             {"tails", doubles_json(cs.tails)},
                                             {"majorant_exponent", decimal(cs.majorant_exponent)},
                                             {"majorant_divergent", cs.majorant_divergent},
                                             {"tails_decreasing", cs.tails_decreasing}};
            soft.push_back(flag("content_tails_decreasing", cs.tails_decreasing, ""));
        }
    }

    const bool hard_ok = tiling_ok && std::isfinite(e.estimate) && e.estimate > 0;
    o.payload["hard_checks"] = Json::array({flag("partitions_refine", tiling_ok, decimal(worst_violation)),
                                            flag("estimate_positive", std::isfinite(e.estimate) && e.estimate > 0,
                                                 decimal(e.estimate))});
    o.payload["soft_checks"] = soft;
    bool soft_ok = true;
    for (const auto& f : soft) soft_ok = soft_ok && f["ok"].get<bool>();
    o.payload["finite_depth_caveat"] = "every verdict is at the tested depth";
    if (!hard_ok) {
        o.exit_code = kExitError;
    } else if (!soft_ok) {
        o.exit_code = kExitSoftFlag;
    }
    o.payload["status"] = hard_ok ? (soft_ok ? "pass" : "soft_flag") : "fail";
    return o;
}

using Handler = Outcome (*)(const RunConfig&);

const std::vector<std::pair<std::string, Handler>>& handlers() {
    static const std::vector<std::pair<std::string, Handler>> table{
        {"rotnum", cmd_rotnum},           {"tune", cmd_tune},
        {"partition", cmd_partition},     {"bridges", cmd_bridges},
        {"realbounds", cmd_realbounds},   {"cover", cmd_cover},
        {"singularity", cmd_singularity}, {"dimension", cmd_dimension},
        {"signature", cmd_signature},     {"theorem1", cmd_bounds_pipeline},
    };
    return table;
}

}  // namespace

std::vector<Integer> parse_quotient_list(const std::string& text) {
    std::vector<Integer> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw InvalidInputError("empty entry in quotient list '" + text + "'");
        out.push_back(integer_from(Json(item.substr(b, e - b + 1)), "target_cf"));
    }
    if (out.empty()) throw InvalidInputError("quotient list is empty");
    return out;
}

std::vector<int> parse_levels(const std::string& text) {
    std::vector<int> out;
    try {
        const auto dots = text.find("..");
        if (dots != std::string::npos) {
            const int lo = std::stoi(text.substr(0, dots));
            const int hi = std::stoi(text.substr(dots + 2));
            if (hi < lo) throw InvalidInputError("empty level range '" + text + "'");
            for (int n = lo; n <= hi; ++n) out.push_back(n);
            return out;
        }
        std::stringstream in(text);
        std::string item;
        while (std::getline(in, item, ',')) out.push_back(std::stoi(item));
    } catch (const std::logic_error&) {
        throw InvalidInputError("cannot read levels from '" + text + "'");
    }
    if (out.empty()) throw InvalidInputError("no levels in '" + text + "'");
    return out;
}

RunConfig parse_config(const Json& doc) {
    reject_unknown(doc, kTopKeys, "config");
    RunConfig c;
    if (doc.contains("map")) {
        const Json& m = doc["map"];
        reject_unknown(m, kMapKeys, "map");
        if (m.contains("family")) c.map.family = get_as<std::string>(m, "family", "map");
        if (m.contains("omega")) c.map.omega = number_text(m["omega"], "omega");
        if (m.contains("target_cf") && m.contains("target-cf")) {
            throw InvalidInputError("target_cf given twice");
        }
        if (m.contains("target_cf")) c.map.target = target_from(m["target_cf"]);
        if (m.contains("target-cf")) c.map.target = target_from(m["target-cf"]);
        if (m.contains("precision_bits")) c.map.precision_bits = get_as<unsigned>(m, "precision_bits", "map");
        if (m.contains("params")) {
            const Json& pr = m["params"];
            reject_unknown(pr, {"m", "a1", "a2", "u_star"}, "map.params");
            if (pr.contains("m")) c.map.m = get_as<int>(pr, "m", "map.params");
            if (pr.contains("a1")) c.map.a1 = number_text(pr["a1"], "a1");
            if (pr.contains("a2")) c.map.a2 = number_text(pr["a2"], "a2");
            if (pr.contains("u_star")) c.map.u_star = number_text(pr["u_star"], "u_star");
        }
    }
    if (doc.contains("analysis")) {
        const Json& a = doc["analysis"];
        reject_unknown(a, kAnalysisKeys, "analysis");
        if (a.contains("depth")) c.analysis.depth = get_as<int>(a, "depth", "analysis");
        if (a.contains("gamma")) {
            c.analysis.gamma.clear();
            if (a["gamma"].is_array()) {
                for (const auto& g : a["gamma"]) {
                    if (!g.is_number()) throw InvalidInputError("gamma entries must be numbers");
                    c.analysis.gamma.push_back(g.get<double>());
                }
            } else {
                c.analysis.gamma.push_back(get_as<double>(a, "gamma", "analysis"));
            }
        }
        if (a.contains("tau")) c.analysis.tau = get_as<double>(a, "tau", "analysis");
        if (a.contains("samples")) c.analysis.samples = get_as<std::size_t>(a, "samples", "analysis");
        if (a.contains("seed")) c.analysis.seed = get_as<std::uint64_t>(a, "seed", "analysis");
        if (a.contains("level")) c.analysis.level = get_as<int>(a, "level", "analysis");
        if (a.contains("levels")) {
            if (a["levels"].is_string()) {
                c.analysis.levels = parse_levels(a["levels"].get<std::string>());
            } else {
                c.analysis.levels = get_as<std::vector<int>>(a, "levels", "analysis");
            }
        }
        if (a.contains("eps")) c.analysis.eps = get_as<double>(a, "eps", "analysis");
        if (a.contains("d")) c.analysis.d = get_as<double>(a, "d", "analysis");
    }
    if (doc.contains("output")) {
        const Json& out = doc["output"];
        reject_unknown(out, {"path", "format"}, "output");
        if (out.contains("path")) c.out = get_as<std::string>(out, "path", "output");
        if (out.contains("format")) c.format = get_as<std::string>(out, "format", "output");
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open config '" + path + "'");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInputError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

void validate_config(const RunConfig& c) {
    family_from_string(c.map.family);
    if (c.map.omega.has_value() == c.map.target.has_value()) {
        throw InvalidInputError("exactly one of omega and target_cf must be given");
    }
    if (c.analysis.depth < 3) throw InvalidInputError("depth must be at least 3");
    if (c.analysis.gamma.empty()) throw InvalidInputError("gamma list is empty");
    for (double g : c.analysis.gamma) {
        if (!(g > 0.0 && g < 1.0)) throw InvalidInputError("gamma " + decimal(g) + " is outside (0, 1)");
    }
    if (c.map.precision_bits < 128) throw InvalidInputError("precision_bits must be at least 128");
    if (c.analysis.samples == 0) throw InvalidInputError("samples must be positive");
    if (!(c.analysis.eps > 0.0 && c.analysis.eps < 1.0)) throw InvalidInputError("eps must lie in (0, 1)");
    if (c.analysis.tau && !(*c.analysis.tau >= 0.0)) throw InvalidInputError("tau must be non-negative");
    if (c.analysis.d && !(*c.analysis.d > 0.0 && *c.analysis.d <= 1.0)) throw InvalidInputError("d must lie in (0, 1]");
    if (c.format != "json" && c.format != "csv") throw InvalidInputError("format must be json or csv");
    if (c.map.target) {
        static const std::set<std::string> kinds{"list", "golden", "periodic", "prescribed_growth", "random_bounded"};
        if (!kinds.contains(c.map.target->kind)) {
            throw InvalidInputError("unknown target kind '" + c.map.target->kind + "'");
        }
        if ((c.map.target->kind == "list" || c.map.target->kind == "periodic") && c.map.target->quotients.empty()) {
            throw InvalidInputError("target quotient list is empty");
        }
    }
    if (c.map.omega) {
        PrecisionScope scope(c.map.precision_bits);
        parse_real(*c.map.omega);
    }
}

Json config_to_json(const RunConfig& c) {
    Json map{{"family", c.map.family}};
    if (c.map.omega) map["omega"] = *c.map.omega;
    if (c.map.target) {
        const auto& t = *c.map.target;
        Json target{{"kind", t.kind}};
        if (!t.quotients.empty()) target["quotients"] = integers_json(t.quotients);
        if (t.kind == "prescribed_growth") target["tau"] = decimal(t.tau);
        if (t.kind == "random_bounded") {
            target["max_a"] = t.max_a;
            target["seed"] = t.seed;
        }
        map["target_cf"] = target;
    }
    Json params{{"m", c.map.m}, {"a1", c.map.a1}, {"a2", c.map.a2}};
    if (c.map.u_star) params["u_star"] = *c.map.u_star;
    map["params"] = params;
    map["precision_bits"] = c.map.precision_bits;
    Json analysis{{"depth", c.analysis.depth},
                  {"gamma", doubles_json(c.analysis.gamma)},
                  {"tau", c.analysis.tau ? Json(decimal(*c.analysis.tau)) : Json(nullptr)},
                  {"samples", c.analysis.samples},
                  {"seed", c.analysis.seed},
                  {"level", c.analysis.level ? Json(*c.analysis.level) : Json(nullptr)},
                  {"levels", c.analysis.levels},
                  {"eps", decimal(c.analysis.eps)},
                  {"d", c.analysis.d ? Json(decimal(*c.analysis.d)) : Json(nullptr)}};
    return Json{{"map", map}, {"analysis", analysis}};
}

std::vector<Integer> target_quotients(const TargetSpec& t, std::size_t depth) {
    std::vector<Integer> out;
    if (t.kind == "list") {
        out = t.quotients;
    } else if (t.kind == "golden") {
        out = generate_quotients(quotient_kind::Golden{}, depth);
    } else if (t.kind == "periodic") {
        out = generate_quotients(quotient_kind::Periodic{t.quotients}, depth + 4);
    } else if (t.kind == "prescribed_growth") {
        out = generate_quotients(quotient_kind::PrescribedGrowth{t.tau}, depth);
    } else if (t.kind == "random_bounded") {
        out = generate_quotients(quotient_kind::RandomBounded{t.max_a, t.seed}, depth + 4);
    } else {
        throw InvalidInputError("unknown target kind '" + t.kind + "'");
    }
    while (out.size() < depth + 4) out.emplace_back(1);
    return out;
}

MapSpec map_from_config(const MapConfig& m, const Real& omega) {
    PrecisionScope scope(m.precision_bits);
    switch (family_from_string(m.family)) {
        case Family::rigid_rotation:
            return MapSpec::rigid_rotation(omega, m.precision_bits);
        case Family::arnold_cubic:
            return MapSpec::arnold_cubic(omega, m.precision_bits);
        case Family::mfold_cubic:
            return MapSpec::mfold_cubic(m.m, omega, m.precision_bits);
        case Family::perturbed_bicritical:
            if (m.u_star) return MapSpec::bicritical_from_cosine(parse_real(*m.u_star), omega, m.precision_bits);
            return MapSpec::perturbed_bicritical(parse_real(m.a1), parse_real(m.a2), omega, m.precision_bits);
    }
    throw InvalidFamilyError("unknown family");
}

Json map_to_json(const MapSpec& spec) {
    const unsigned bits = spec.precision_bits();
    Json params = Json::object();
    if (spec.family() == Family::mfold_cubic) params["m"] = spec.m();
    if (spec.family() == Family::perturbed_bicritical) {
        params["a1"] = decimal(spec.a1(), bits);
        params["a2"] = decimal(spec.a2(), bits);
    }
    return Json{{"family", to_string(spec.family())},
                {"omega", decimal(spec.omega(), bits)},
                {"params", params},
                {"precision_bits", bits}};
}

std::string decimal(const Real& x, unsigned bits) { return to_decimal(x, report_digits(bits)); }

std::string decimal(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

Json cf_to_json(const ContinuedFraction& cf, std::size_t max_entries) {
    const unsigned bits = cf.precision_bits();
    const std::size_t n = std::min(cf.depth(), max_entries);
    Json quotients = Json::array(), p = Json::array(), q = Json::array(), delta = Json::array();
    for (std::size_t k = 1; k <= n; ++k) {
        const long i = static_cast<long>(k);
        quotients.push_back(to_decimal(cf.a(k)));
        p.push_back(to_decimal(cf.p(i)));
        q.push_back(to_decimal(cf.q(i)));
        delta.push_back(decimal(cf.delta(i), bits));
    }
    return Json{{"depth", cf.depth()},
                {"alpha", decimal(cf.alpha(), bits)},
                {"quotients", quotients},
                {"p", p},
                {"q", q},
                {"delta", delta}};
}

Json profile_to_json(const DiophantineProfile& prof) {
    return Json{{"tau", decimal(prof.tau)},
                {"Gamma", decimal(prof.Gamma)},
                {"log_Gamma", decimal(prof.log_Gamma)},
                {"Gamma_argmax", prof.Gamma_argmax},
                {"nu1", decimal(prof.nu1())},
                {"nu2", decimal(prof.nu2())},
                {"nu1_seq", doubles_json(prof.nu1_seq)},
                {"nu2_seq", doubles_json(prof.nu2_seq)},
                {"nu_first_index", prof.nu_first_index},
                {"bounded_type_at_depth", prof.bounded_type_at_depth},
                {"depth", prof.depth}};
}

Json envelope(const std::string& command, unsigned precision_bits, Json payload) {
    Json out{{"schema_version", kSchemaVersion},
             {"command", command},
             {"precision", Json{{"bits", precision_bits},
                                {"real_digits", report_digits(precision_bits)},
                                {"double_digits", 17}}}};
    merge(out, payload);
    return out;
}

Json error_json(const std::string& command, const std::exception& error) {
    const auto* known = dynamic_cast<const Error*>(&error);
    return Json{{"schema_version", kSchemaVersion},
                {"command", command},
                {"status", "error"},
                {"error", Json{{"kind", known ? to_string(known->kind()) : "internal"}, {"message", error.what()}}}};
}

std::string emit(const Json& report) { return report.dump(2) + "\n"; }

std::string atoms_csv(const DynamicalPartition& part) {
    const unsigned bits = part.orbit().precision_bits;
    PrecisionScope scope(bits);
    std::ostringstream out;
    out << "generation,index,left,right,length\n";
    for (const Atom& a : part.atoms()) {
        out << a.label.generation << ',' << a.label.index << ',' << decimal(part.left(a), bits) << ','
            << decimal(part.right(a), bits) << ',' << decimal(part.length(a), bits) << '\n';
    }
    return out.str();
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& h : handlers()) out.push_back(h.first);
        return out;
    }();
    return names;
}

CommandResult run_command(const std::string& command, const RunConfig& config) {
    CommandResult result;
    result.format = config.format;
    try {
        const auto it = std::find_if(handlers().begin(), handlers().end(),
                                     [&](const auto& h) { return h.first == command; });
        if (it == handlers().end()) throw InvalidInputError("unknown command '" + command + "'");
        validate_config(config);
        PrecisionScope scope(config.map.precision_bits);
        Outcome o = it->second(config);
        if (o.csv) {
            result.body = *o.csv;
        } else {
            result.format = "json";
            Json payload{{"status", o.exit_code == kExitPass ? "pass"
                                    : o.exit_code == kExitSoftFlag ? "soft_flag"
                                                                   : "fail"}};
            merge(payload, o.payload);
            payload["input"] = config_to_json(config);
            result.body = emit(envelope(command, config.map.precision_bits, payload));
        }
        result.exit_code = o.exit_code;
    } catch (const std::exception& e) {
        result.format = "json";
        result.exit_code = kExitError;
        result.body = emit(error_json(command, e));
    }
    return result;
}

}  // namespace critdim
