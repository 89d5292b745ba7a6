// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance          runs every criterion
//   acceptance 3 7      runs only the listed ones
// Exit status is non-zero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "critdim/bounds_lab.hpp"
#include "critdim/cli_reports.hpp"
#include "critdim/measure_dim.hpp"
#include "critdim/rotation.hpp"
#include "oracles.hpp"

using namespace critdim;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

class Detail {
public:
    template <class T>
    Detail& operator<<(const T& v) {
        out_ << v;
        return *this;
    }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

std::string fmt(double x, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

std::vector<Integer> ones(std::size_t n) { return std::vector<Integer>(n, Integer(1)); }

std::vector<Integer> forty_pattern(std::size_t count) {
    std::vector<Integer> out;
    for (std::size_t i = 0; i < count; ++i) out.emplace_back(i % 4 == 3 ? 40 : 1);
    return out;
}

struct Tuned {
    ContinuedFraction cf;
    std::unique_ptr<PartitionHierarchy> map;
    std::unique_ptr<PartitionHierarchy> control;
    TuneResult tune;
};

/// Arnold cubic map tuned to `target` at `depth`, partitions to depth.
std::unique_ptr<Tuned> tuned_arnold(const std::vector<Integer>& target, std::size_t depth) {
    PrecisionScope scope(256);
    auto t = std::make_unique<Tuned>();
    t->cf = convergents(target, target.size(), std::nullopt, 256);
    const auto family = MapSpec::arnold_cubic(Real(0), 256);
    t->tune = tune_parameter(family, target, depth);
    const int L = static_cast<int>(depth) - 1;
    t->map = std::make_unique<PartitionHierarchy>(family.with_omega(t->tune.omega), t->cf, 0, L);
    t->control = std::make_unique<PartitionHierarchy>(MapSpec::rigid_rotation(t->cf.alpha(), 256), t->cf, 0, L);
    return t;
}

const Tuned& golden() {
    static const auto t = tuned_arnold(ones(20), 12);
    return *t;
}

const Tuned& forty() {
    static const auto t = tuned_arnold(forty_pattern(14), 9);
    return *t;
}

RunConfig config_from(const std::string& text) {
    RunConfig c = parse_config(Json::parse(text));
    validate_config(c);
    return c;
}

const char* kGoldenPipeline = R"({"map": {"family": "arnold_cubic", "target_cf": {"kind": "golden"}},
                                  "analysis": {"depth": 12, "samples": 200, "seed": 0}})";

// 1. Exact identities on generated expansions, checked against a test-side recurrence.
Verdict exact_identities() {
    PrecisionScope scope(256);
    std::vector<std::vector<Integer>> sequences;
    sequences.push_back(generate_quotients(quotient_kind::Golden{}, 40));
    for (const auto& word : std::vector<std::vector<Integer>>{{2}, {1, 2}, {1, 1, 1, 40}, {3, 7, 15, 1, 292}}) {
        sequences.push_back(generate_quotients(quotient_kind::Periodic{word}, word.size() == 5 ? 30 : 40));
    }
    sequences.push_back(generate_quotients(quotient_kind::PrescribedGrowth{0.25}, 30));
    sequences.push_back(generate_quotients(quotient_kind::PrescribedGrowth{0.5}, 20));
    sequences.push_back(generate_quotients(quotient_kind::PrescribedGrowth{1.0}, 10));
    for (std::uint64_t max_a : {2, 5, 9, 50, 1000, 100000}) {
        for (std::uint64_t seed : {1, 2}) {
            sequences.push_back(generate_quotients(quotient_kind::RandomBounded{max_a, seed}, 40));
        }
    }
    std::size_t checks = 0;
    for (const auto& a : sequences) {
        const auto cf = convergents(a, a.size(), std::nullopt, 256);
        Integer p_prev2 = 1, p_prev = 0, q_prev2 = 0, q_prev = 1;  // index -1 and 0
        for (std::size_t n = 1; n <= a.size(); ++n) {
            const long i = static_cast<long>(n);
            const Integer q = a[n - 1] * q_prev + q_prev2;
            const Integer p = a[n - 1] * p_prev + p_prev2;
            if (cf.q(i) != q || cf.p(i) != p) return {false, "convergent mismatch at n = " + std::to_string(n)};
            const Integer det = cf.p(i) * cf.q(i - 1) - cf.p(i - 1) * cf.q(i);
            if (det != (n % 2 == 1 ? 1 : -1)) return {false, "determinant identity fails at n = " + std::to_string(n)};
            // q_2 = 2 = sqrt(2)^2 when a_1 = a_2 = 1, so the bound is strict from n = 3 on.
            const Integer square = cf.q(i) * cf.q(i), power = Integer(1) << n;
            if ((n == 2 && square < power) || (n >= 3 && !(square > power))) {
                return {false, "q_n below sqrt(2)^n at n = " + std::to_string(n)};
            }
            const LinearForm d = cf.delta_form(i);
            const bool signed_ok = (d.constant == -p && d.alpha_coeff == q) || (d.constant == p && d.alpha_coeff == -q);
            if (!signed_ok) return {false, "delta form is not +-(q alpha - p) at n = " + std::to_string(n)};
            if (n + 1 <= a.size()) {
                const LinearForm one = cf.q(i + 1) * cf.delta_form(i) + cf.q(i) * cf.delta_form(i + 1);
                if (!one.is_integer(1)) return {false, "q_{n+1} delta_n + q_n delta_{n+1} != 1 at n = " + std::to_string(n)};
            }
            p_prev2 = p_prev;
            p_prev = p;
            q_prev2 = q_prev;
            q_prev = q;
            checks += 5;
        }
    }
    return {true, std::to_string(sequences.size()) + " sequences, " + std::to_string(checks) + " exact checks"};
}

// 2. Closest-return extraction on rigid rotations.
Verdict rotation_oracle() {
    PrecisionScope scope(256);
    const auto g = convergents(ones(60), 60, std::nullopt, 256);
    const auto gr = closest_return_quotients(MapSpec::rigid_rotation(g.alpha(), 256), Real(0), 20);
    const auto s = convergents(std::vector<Integer>(60, Integer(2)), 60, std::nullopt, 256);
    const auto sr = closest_return_quotients(MapSpec::rigid_rotation(s.alpha(), 256), Real(0), 15);
    bool ok = gr.quotients.size() == 20 && sr.quotients.size() == 15;
    for (const auto& a : gr.quotients) ok = ok && a == 1;
    for (const auto& a : sr.quotients) ok = ok && a == 2;
    const auto fib = oracle::fibonacci_q(20);
    for (std::size_t k = 0; k < gr.return_times.size() && k < 20; ++k) ok = ok && gr.return_times[k] == Integer(fib[k + 1]);
    return {ok, "golden: " + std::to_string(gr.quotients.size()) + " quotients, silver: " +
                    std::to_string(sr.quotients.size()) + " quotients"};
}

// 3. Tuning reproduces the golden expansion and P_12 tiles the circle.
Verdict tuning() {
    const auto& t = golden();
    PrecisionScope scope(256);
    bool ok = t.tune.reading.quotients.size() >= 12;
    for (std::size_t k = 0; k < 12 && k < t.tune.reading.quotients.size(); ++k) ok = ok && t.tune.reading.quotients[k] == 1;
    const auto again = closest_return_quotients(t.map->spec(), Real(3) / 10, 12);
    ok = ok && again.quotients.size() == 12;
    for (const auto& a : again.quotients) ok = ok && a == 1;
    const Real residual = abs(t.map->partition(12).tiling_residual());
    ok = ok && residual < Real(1e-30);
    return {ok, "omega = " + to_decimal(t.tune.omega, 20) + ", re-extracted " + std::to_string(again.quotients.size()) +
                    " ones, |residual(P_12)| = " + to_decimal(residual, 3)};
}

// 4. Refinement structure and the index bijection.
Verdict partition_combinatorics() {
    const auto& t = golden();
    PrecisionScope scope(256);
    bool ok = true;
    for (int n = 3; n <= 11; ++n) {
        const auto r = refine_check(t.map->partition(n), t.map->partition(n + 1), t.cf);
        ok = ok && r.structure_ok && r.contained && r.min_pieces == 2 && r.max_pieces == 2;
    }
    std::size_t levels = 0;
    for (const auto& quotients : {ones(30), forty_pattern(16), generate_quotients(quotient_kind::RandomBounded{9, 3}, 16),
                                  generate_quotients(quotient_kind::RandomBounded{300, 4}, 10)}) {
        const auto cf = convergents(quotients, quotients.size());
        for (long n = 1; n + 1 < static_cast<long>(quotients.size()) && cf.q_small(n + 1) < 400000; ++n) {
            BridgeDecomposition b;
            b.q = cf.q_small(n);
            b.q_prev = cf.q_small(n - 1);
            const std::int64_t qn = cf.q_small(n + 1);
            const std::int64_t a = cf.a(static_cast<std::size_t>(n) + 1).convert_to<std::int64_t>();
            std::vector<char> seen(static_cast<std::size_t>(qn - b.q_prev), 0);
            for (std::int64_t i = 0; i < b.q; ++i) {
                for (std::int64_t j = 0; j < a; ++j) {
                    const std::int64_t k = b.atom_index(i, j);
                    if (k < b.q_prev || k >= qn || seen[static_cast<std::size_t>(k - b.q_prev)]) return {false, "index map not injective"};
                    seen[static_cast<std::size_t>(k - b.q_prev)] = 1;
                }
            }
            ok = ok && std::find(seen.begin(), seen.end(), 0) == seen.end();
            ++levels;
        }
    }
    return {ok, "refine 3..11 splits every long atom in 2; bijection on " + std::to_string(levels) + " levels"};
}

// 5. Real bounds on the forty-quotient map.
Verdict real_bounds() {
    const auto& t = forty();
    std::vector<RealBoundsLevel> reports, control;
    for (int n = 2; n <= 8; ++n) {
        reports.push_back(real_bounds_level(*t.map, n));
        control.push_back(real_bounds_level(*t.control, n));
    }
    const auto M = empirical_M(reports);
    double adjacency = 0.0;
    for (const auto& r : reports) adjacency = std::max(adjacency, r.item1.max_ratio);
    const bool adjacency_ok = adjacency < 10 * M.M;
    bool control_ok = true;
    Detail d;
    d << "M_emp = " << fmt(M.M) << " (n0 = " << M.n0 << "), max adjacency " << fmt(adjacency) << "; control adjacency";
    for (int n : {3, 7}) {
        const double c = control[static_cast<std::size_t>(n - 2)].item1.max_ratio;
        control_ok = control_ok && c > 40.0;
        d << " L" << n << " " << fmt(c);
    }
    bool slopes_ok = true;
    std::size_t fitted = 0;
    d << "; Yoccoz slopes";
    for (int n = 2; n <= 8; ++n) {
        const auto& b = t.map->bridges(n);
        for (int s = 0; s < static_cast<int>(b.bridges.size()); ++s) {
            if (b.bridges[static_cast<std::size_t>(s)].size() < 20) continue;
            const auto y = yoccoz_fit(*t.map, n, s);
            if (y.skipped) continue;
            ++fitted;
            const bool left = y.left.slope >= -2.5 && y.left.slope <= -1.5;
            const bool right = y.right.slope >= -2.5 && y.right.slope <= -1.5;
            slopes_ok = slopes_ok && left && right;
            d << " L" << n << "[" << fmt(y.left.slope, 3) << (left ? "" : "!") << ", " << fmt(y.right.slope, 3)
              << (right ? "" : "!") << "]";
        }
    }
    slopes_ok = slopes_ok && fitted > 0;
    bool item5 = true;
    for (const auto& c : M.item5) {
        if (c.level >= M.n0) item5 = item5 && c.holds;
    }
    d << "; item 5 " << (item5 ? "holds" : "fails") << " from n0";
    if (!slopes_ok) d << "; slope outside [-2.5, -1.5] (marked !)";
    return {adjacency_ok && control_ok && slopes_ok && item5, d.str()};
}

// 6. The four cover inequalities at the big levels.
Verdict cover_inequalities() {
    const auto& t = forty();
    std::vector<RealBoundsLevel> reports;
    for (int n = 2; n <= 8; ++n) reports.push_back(real_bounds_level(*t.map, n));
    const double M = empirical_M(reports).M;
    bool ok = true;
    std::size_t covers = 0;
    Detail d;
    d << "M_emp = " << fmt(M);
    for (int n : {3, 7}) {
        for (double g : {0.3, 0.5, 0.7}) {
            const auto r = cover_report(build_cover(t.map->bridges(n), g), *t.map, 1, M);
            ok = ok && !r.empty && r.all_pass() && r.measures_agree;
            ++covers;
            d << "; L" << n << " g" << g << " kept " << r.kept_count << (r.all_pass() && r.measures_agree ? " ok" : " FAIL");
        }
    }
    d << " (" << covers << " covers)";
    return {ok, d.str()};
}

// 7. Singularity witness for a huge quotient, infeasibility for golden.
Verdict singularity() {
    std::vector<Integer> target{1, 1, 1, 1000};
    for (int k = 0; k < 6; ++k) target.emplace_back(1);
    const auto big = tuned_arnold(target, 5);
    const auto w = singularity_certificate(*big->map, 0.05);
    const auto g = singularity_certificate(*golden().map, 0.05);
    const bool found = w.found && w.witness.measure >= 0.95 && w.witness.length <= 0.05;
    Detail d;
    if (w.found) {
        d << "a = 1000: level " << w.witness.level << ", trim " << w.witness.trim << ", mu " << fmt(w.witness.measure)
          << ", length " << fmt(w.witness.length);
    } else {
        d << "a = 1000: no witness (" << w.reason << ")";
    }
    d << "; golden " << (g.found ? "unexpected witness" : "infeasible");
    return {found && !g.found, d.str()};
}

// 8. Frostman sanity: rotation control and the tuned golden estimate.
Json golden_pipeline_report(std::string* body = nullptr) {
    const auto r = run_command("theorem1", config_from(kGoldenPipeline));
    if (body) *body = r.body;
    return Json::parse(r.body);
}

Verdict frostman() {
    const auto& t = golden();
    LocalDimensionOptions opts;
    opts.samples = 200;
    const auto rot = local_dimension_samples(*t.control, opts);
    bool rot_ok = rot.samples.size() >= 100;
    double worst = 0.0;
    for (std::size_t k = 0; k < rot.levels.size(); ++k) {
        if (rot.levels[k] >= 8) worst = std::max(worst, std::abs(rot.level_medians[k] - 1.0));
    }
    rot_ok = rot_ok && worst <= 0.05;

    const Json r = golden_pipeline_report();
    if (r.value("status", "") == "error") return {false, r["error"]["message"].get<std::string>()};
    const auto& dim = r["dimension"];
    std::vector<double> medians;
    for (std::size_t k = 0; k < dim["levels"].size(); ++k) {
        if (dim["levels"][k].get<int>() >= 10) medians.push_back(std::stod(dim["level_medians"][k].get<std::string>()));
    }
    double drift = 0.0;
    for (std::size_t k = 1; k < medians.size(); ++k) drift = std::max(drift, std::abs(medians[k] - medians[k - 1]));
    const double estimate = std::stod(dim["estimate"].get<std::string>());
    const double lower = std::stod(r["bounds"]["lower"].get<std::string>());
    const bool golden_ok = medians.size() == 3 && drift < 0.05 && estimate > 0 && estimate < 1 && estimate > lower;
    Detail d;
    d << "rotation: " << rot.samples.size() << " samples, max |median - 1| at levels >= 8 = " << fmt(worst)
      << "; golden: estimate " << fmt(estimate) << ", drift 10..12 " << fmt(drift) << ", lower bound " << fmt(lower)
      << ", M_emp " << fmt(std::stod(r["real_bounds"]["M_emp"].get<std::string>()));
    return {rot_ok && golden_ok, d.str()};
}

// 9. Upper-bound coherence for prescribed growth with tau = 1.
Verdict upper_bound() {
    const auto r = run_command("theorem1", config_from(R"({
        "map": {"family": "arnold_cubic", "target_cf": {"kind": "prescribed_growth", "tau": 1}},
        "analysis": {"depth": 6, "gamma": [0.7], "d": 0.6, "levels": [4, 5], "samples": 200, "seed": 0}})"));
    const Json j = Json::parse(r.body);
    if (j.value("status", "") == "error") return {false, j["error"]["message"].get<std::string>()};
    if (!j.contains("content_sums")) return {false, "no content sums in the report"};
    const auto& cs = j["content_sums"];
    const bool decreasing = cs["tails_decreasing"].get<bool>();
    const double estimate = std::stod(j["dimension"]["estimate"].get<std::string>());
    const double upper = std::stod(j["bounds"]["upper"].get<std::string>());
    Detail d;
    d << "S_K";
    for (const auto& s : cs["tails"]) d << " " << fmt(std::stod(s.get<std::string>()));
    d << (decreasing ? " decreasing" : " NOT decreasing") << " at d = 0.6, gamma = 0.7; estimate " << fmt(estimate)
      << " vs 1/(tau+1) + 0.1 = " << fmt(upper + 0.1);
    if (estimate > upper + 0.1) d << " (soft flag: exceeded at depth 6, finite-depth caveat)";
    return {decreasing, d.str()};
}

// 10. Byte-identical re-runs.
Verdict determinism() {
    std::vector<std::pair<std::string, RunConfig>> runs;
    runs.emplace_back("theorem1", config_from(kGoldenPipeline));
    const std::string forty_map = R"({"map": {"family": "arnold_cubic", "target_cf": {"kind": "periodic", "word": [1, 1, 1, 40]}},)";
    runs.emplace_back("realbounds", config_from(forty_map + R"("analysis": {"depth": 9}})"));
    runs.emplace_back("cover", config_from(forty_map + R"("analysis": {"depth": 9, "gamma": [0.3, 0.5, 0.7]}})"));
    runs.emplace_back("singularity", config_from(forty_map + R"("analysis": {"depth": 9}})"));
    runs.emplace_back("bridges", config_from(forty_map + R"("analysis": {"depth": 9, "level": 7}})"));
    runs.emplace_back("signature", config_from(forty_map + R"("analysis": {"depth": 9}})"));
    runs.emplace_back("tune", config_from(forty_map + R"("analysis": {"depth": 9}})"));
    runs.emplace_back("rotnum", config_from(R"({"map": {"family": "arnold_cubic", "omega": "0.61"}, "analysis": {"depth": 8}})"));
    runs.emplace_back("dimension", config_from(R"({"map": {"family": "arnold_cubic", "target_cf": {"kind": "golden"}},
        "analysis": {"depth": 12, "seed": 11}, "output": {"format": "csv"}})"));
    runs.emplace_back("partition", config_from(R"({"map": {"family": "arnold_cubic", "target_cf": {"kind": "golden"}},
        "analysis": {"depth": 12, "level": 10}, "output": {"format": "csv"}})"));
    bool ok = true;
    Detail d;
    for (const auto& [name, config] : runs) {
        const auto a = run_command(name, config);
        const auto b = run_command(name, config);
        const bool same = a.body == b.body && a.exit_code == b.exit_code && a.exit_code != kExitError;
        ok = ok && same;
        d << name << (same ? "" : " DIFFERS") << " ";
    }
    return {ok, d.str() + "byte-identical across two runs"};
}

struct Criterion {
    int id;
    const char* title;
    double time_limit;  // seconds
    std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "exact arithmetic identities", 1.0, exact_identities},
        {2, "rotation extraction oracle", 10.0, rotation_oracle},
        {3, "tuning", 300.0, tuning},
        {4, "partition combinatorics", 300.0, partition_combinatorics},
        {5, "real bounds", 600.0, real_bounds},
        {6, "cover inequalities", 120.0, cover_inequalities},
        {7, "singularity certificate", 600.0, singularity},
        {8, "Frostman sanity", 600.0, frostman},
        {9, "upper-bound coherence", 900.0, upper_bound},
        {10, "determinism", 600.0, determinism},
    };
    std::vector<int> selected;
    for (int k = 1; k < argc; ++k) selected.push_back(std::atoi(argv[k]));

    int failures = 0;
    for (const auto& c : all) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (seconds > c.time_limit) {
            v.pass = false;
            v.detail += "; over the " + fmt(c.time_limit) + " s budget";
        }
        std::printf("criterion %2d %s  %-28s %8.2fs  %s\n", c.id, v.pass ? "PASS" : "FAIL", c.title, seconds,
                    v.detail.c_str());
        std::fflush(stdout);
        if (!v.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
