#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "critdim/cli_reports.hpp"
#include "critdim/errors.hpp"

using namespace critdim;

namespace {

struct Flags {
    std::string config;
    std::optional<std::string> family;
    std::optional<std::string> omega;
    std::optional<std::string> target;
    std::optional<int> m;
    std::optional<unsigned> bits;
    std::optional<int> depth;
    std::vector<double> gamma;
    std::optional<double> tau;
    std::optional<std::size_t> samples;
    std::optional<std::uint64_t> seed;
    std::optional<int> level;
    std::optional<std::string> levels;
    std::optional<double> eps;
    std::optional<double> d;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

/// "1,1,1,40", "golden", "periodic:1,1,1,40", "prescribed_growth:1" or "random_bounded:MAX:SEED".
TargetSpec target_from_flag(const std::string& text) {
    TargetSpec t;
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (head == "golden") {
        t.kind = "golden";
    } else if (head == "periodic") {
        t.kind = "periodic";
        t.quotients = parse_quotient_list(rest);
    } else if (head == "prescribed_growth") {
        t.kind = "prescribed_growth";
        t.tau = rest.empty() ? 1.0 : std::stod(rest);
    } else if (head == "random_bounded") {
        t.kind = "random_bounded";
        const auto second = rest.find(':');
        t.max_a = std::stoull(rest.substr(0, second));
        if (second != std::string::npos) t.seed = std::stoull(rest.substr(second + 1));
    } else {
        t.quotients = parse_quotient_list(text);
    }
    return t;
}

RunConfig build_config(const Flags& f) {
    RunConfig c = f.config.empty() ? RunConfig{} : load_config(f.config);
    if (f.family) c.map.family = *f.family;
    if (f.omega) {
        c.map.omega = *f.omega;
        c.map.target.reset();
    }
    if (f.target) {
        try {
            c.map.target = target_from_flag(*f.target);
        } catch (const std::logic_error&) {
            throw InvalidInputError("cannot read --target-cf '" + *f.target + "'");
        }
        c.map.omega.reset();
    }
    if (f.m) c.map.m = *f.m;
    if (f.bits) c.map.precision_bits = *f.bits;
    if (f.depth) c.analysis.depth = *f.depth;
    if (!f.gamma.empty()) c.analysis.gamma = f.gamma;
    if (f.tau) c.analysis.tau = *f.tau;
    if (f.samples) c.analysis.samples = *f.samples;
    if (f.seed) c.analysis.seed = *f.seed;
    if (f.level) c.analysis.level = *f.level;
    if (f.levels) c.analysis.levels = parse_levels(*f.levels);
    if (f.eps) c.analysis.eps = *f.eps;
    if (f.d) c.analysis.d = *f.d;
    if (f.out) c.out = *f.out;
    if (f.format) c.format = *f.format;
    return c;
}

int write(const std::string& body, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << body;
        return 0;
    }
    std::ofstream out(path, std::ios::binary);
    out << body;
    if (!out) {
        std::cerr << "cannot write " << path << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Critical circle map toolkit: rotation numbers, dynamical partitions, real bounds, "
                 "invariant measure covers and local dimension estimates."};
    app.fallthrough();
    app.require_subcommand(1, 1);

    Flags f;
    app.add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--family", f.family, "rigid_rotation, arnold_cubic, mfold_cubic or perturbed_bicritical");
    app.add_option("--omega", f.omega, "rotation parameter as a decimal string");
    app.add_option("--target-cf", f.target,
                   "target quotients: 1,1,1,40 | golden | periodic:W | prescribed_growth:T | random_bounded:A:S");
    app.add_option("--m", f.m, "number of critical points for mfold_cubic");
    app.add_option("--precision-bits", f.bits, "working precision in bits");
    app.add_option("--depth", f.depth, "continued fraction depth; partitions go to depth - 1");
    app.add_option("--gamma", f.gamma, "cover exponents, comma separated")->delimiter(',');
    app.add_option("--tau", f.tau, "Diophantine exponent");
    app.add_option("--samples", f.samples, "sample points for local dimension");
    app.add_option("--seed", f.seed, "random seed");
    app.add_option("--level", f.level, "partition level");
    app.add_option("--levels", f.levels, "level range 5..12 or list 4,5");
    app.add_option("--eps", f.eps, "singularity threshold");
    app.add_option("--d", f.d, "exponent of the cover content sums");
    app.add_option("--out", f.out, "output path, stdout when absent");
    app.add_option("--format", f.format, "json or csv");

    for (const auto& name : command_names()) app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        const std::string name = app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name();
        std::cout << emit(error_json(name, InvalidInputError(e.what())));
        return kExitError;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    CommandResult result;
    RunConfig config;
    try {
        config = build_config(f);
        result = run_command(command, config);
    } catch (const std::exception& e) {
        std::cout << emit(error_json(command, e));
        return kExitError;
    }
    if (write(result.body, config.out) != 0) return kExitError;
    return result.exit_code;
}
