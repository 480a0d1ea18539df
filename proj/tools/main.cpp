#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "loopaction/errors.hpp"
#include "loopaction/report.hpp"

namespace la = loopaction;

namespace {

// Flags shared by every subcommand. Values stay as text so that they go
// through the same parser as the config file.
struct SharedFlags {
    std::string config_file;
    std::map<std::string, std::string> values;
    bool plots = false;
};

void add_shared_flags(CLI::App& cmd, SharedFlags& flags, bool with_problem) {
    cmd.add_option("--config", flags.config_file, "flat key = value config file, overridden by flags");
    const std::vector<std::pair<std::string, std::string>> options{
        {"a", "two-body coupling a > 0"},
        {"h", "two-body energy h < 0"},
        {"m1", "mass of body 1"},
        {"m2", "mass of body 2"},
        {"m3", "mass of body 3"},
        {"E", "three-body energy E < 0"},
        {"modes", "Fourier modes K"},
        {"grid", "quadrature grid size N"},
        {"seeds", "comma-separated random start seeds"},
        {"winding", "winding number of the start loop(s)"},
        {"out", "output directory"},
        {"max-iters", "minimizer iteration cap"},
        {"tol", "gradient tolerance relative to max(1, action)"},
        {"noise", "amplitude bound of the start perturbation"},
        {"e", "oracle eccentricity"},
        {"sweep", "comma-separated energies to sweep"},
        {"jobs", "concurrent runs (0 = hardware threads)"},
    };
    for (const auto& [name, help] : options) cmd.add_option("--" + name, flags.values[name], help);
    if (with_problem) {
        cmd.add_option("--problem", flags.values["problem"], "two_body or three_body")
            ->check(CLI::IsMember({"two_body", "three_body"}));
    }
    cmd.add_flag("--plots", flags.plots, "write SVG plots");
}

la::RunConfig build_config(const CLI::App& cmd, const SharedFlags& flags, const char* forced_problem) {
    la::RunConfig config;
    if (!flags.config_file.empty()) la::apply_config_file(config, flags.config_file);
    if (forced_problem) la::apply_setting(config, "problem", forced_problem);
    for (const auto& [name, value] : flags.values) {
        if (cmd.count("--" + name) > 0) la::apply_setting(config, name, value);
    }
    if (flags.plots) config.emit_plots = true;
    config.validate();
    return config;
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const la::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return la::kExitConfig;
    } catch (const la::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return la::kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return la::kExitRunFailed;
    }
}

void print_formulas(const std::vector<la::FormulaRow>& rows) {
    for (const auto& r : rows) {
        std::cout << r.quantity << "  " << r.label << " = " << la::format_number(r.value);
        if (!r.reference.empty() && r.label != r.reference) {
            std::cout << "  (gap " << la::format_number(100.0 * r.rel_gap) << "% vs " << r.reference << ")";
        }
        if (r.matches_reference) std::cout << "  MATCH";
        std::cout << "\n      " << r.source << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fixed-energy action minimization for the two- and three-body problems"};
    app.require_subcommand(1);
    // "-h" would clash with the energy flag; subcommands inherit this setting.
    app.set_help_flag("--help", "print this help message and exit");

    struct Command {
        const char* name;
        const char* help;
        const char* problem;
    };
    const std::vector<Command> commands{
        {"minimize2", "minimize the two-body action from random starts", "two_body"},
        {"minimize3", "minimize the three-body action from random starts", "three_body"},
        {"oracle", "write the Kepler or Lagrange oracle orbit", nullptr},
        {"formulas", "adjudicate closed-form action and period formulas", nullptr},
        {"verify", "run the oracle identity checks", nullptr},
        {"sweep", "minimize over a list of energies and seeds", nullptr},
    };
    std::map<std::string, SharedFlags> flags;
    std::map<std::string, CLI::App*> subs;
    for (const auto& c : commands) {
        subs[c.name] = app.add_subcommand(c.name, c.help);
        add_shared_flags(*subs[c.name], flags[c.name], c.problem == nullptr);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return la::kExitConfig;
    }

    for (const auto& c : commands) {
        CLI::App& cmd = *subs[c.name];
        if (!cmd.parsed()) continue;
        const std::string name = c.name;
        const SharedFlags& f = flags[name];
        return guarded([&] {
            const la::RunConfig config = build_config(cmd, f, c.problem);
            if (name == "minimize2" || name == "minimize3") return la::run(config, std::cerr);
            if (name == "sweep") {
                if (config.sweep.empty()) throw la::ConfigError("sweep must list at least one energy");
                return la::run(config, std::cerr);
            }
            if (name == "formulas") {
                const auto rows = la::formula_table(config);
                la::write_formulas(rows, config);
                print_formulas(rows);
                return la::kExitOk;
            }
            if (name == "verify") {
                const auto checks = la::verification_suite(config);
                la::write_checks(checks, config);
                bool all = true;
                for (const auto& r : checks) {
                    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  rel "
                              << la::format_number(r.rel_deviation) << " tol " << la::format_number(r.tolerance)
                              << '\n';
                    all = all && r.pass;
                }
                return all ? la::kExitOk : la::kExitRunFailed;
            }
            const auto orbit = la::oracle_orbit(config);
            la::write_oracle(orbit, config);
            std::cout << la::to_string(orbit.source) << " period " << la::format_number(orbit.period)
                      << " energy " << la::format_number(orbit.energy) << '\n';
            return la::kExitOk;
        });
    }
    return la::kExitConfig;
}
