#include "loopaction/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "loopaction/errors.hpp"
#include "loopaction/oracles.hpp"

namespace loopaction {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(ProblemKind kind) {
    return kind == ProblemKind::TwoBody ? "two_body" : "three_body";
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key) + ": expected " +
                      std::string(expected));
}

double parse_double(std::string_view key, std::string_view value) {
    value = trim(value);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
        bad_value(key, value, "a finite number");
    }
    return out;
}

long long parse_integer(std::string_view key, std::string_view value) {
    value = trim(value);
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, "an integer");
    return out;
}

int parse_int(std::string_view key, std::string_view value) {
    const long long v = parse_integer(key, value);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        bad_value(key, value, "an integer in range");
    }
    return static_cast<int>(v);
}

bool parse_bool(std::string_view key, std::string_view value) {
    value = trim(value);
    if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
    if (value == "0" || value == "false" || value == "no" || value == "off") return false;
    bad_value(key, value, "true or false");
}

std::vector<std::string_view> split_list(std::string_view value) {
    std::vector<std::string_view> items;
    std::size_t start = 0;
    while (start <= value.size()) {
        const auto end = value.find_first_of(", ", start);
        const auto item = trim(value.substr(start, end == std::string_view::npos ? end : end - start));
        if (!item.empty()) items.push_back(item);
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return items;
}

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

}  // namespace

void RunConfig::validate() const {
    require(a > 0.0, "a must be positive");
    require(h < 0.0, "h must be negative");
    require(E < 0.0, "E must be negative");
    for (int i = 0; i < 3; ++i) require(masses[i] > 0.0, "m" + std::to_string(i + 1) + " must be positive");
    require(modes >= 1, "modes must be positive");
    require(grid >= 1, "grid must be positive");
    require(grid >= 4 * modes + 1, "grid must be at least 4 * modes + 1");
    require(!seeds.empty(), "seeds must list at least one seed");
    require(winding != 0, "winding must be nonzero");
    require(noise >= 0.0, "noise must be non-negative");
    require(eccentricity >= 0.0 && eccentricity < 1.0, "e must lie in [0, 1)");
    require(jobs >= 0, "jobs must be non-negative");
    for (const double v : sweep) {
        require(v < 0.0, std::string(problem == ProblemKind::TwoBody ? "h" : "E") +
                             " must be negative (sweep value " + format_number(v) + ")");
    }
    try {
        minimize.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    require(minimize.max_grid >= grid, "max_grid must be at least grid");
}

void apply_setting(RunConfig& c, std::string_view key_in, std::string_view value) {
    std::string key(trim(key_in));
    std::replace(key.begin(), key.end(), '-', '_');
    value = trim(value);
    if (key == "problem") {
        if (value == "two_body" || value == "2") c.problem = ProblemKind::TwoBody;
        else if (value == "three_body" || value == "3") c.problem = ProblemKind::ThreeBody;
        else bad_value(key, value, "two_body or three_body");
    } else if (key == "a") {
        c.a = parse_double(key, value);
    } else if (key == "h") {
        c.h = parse_double(key, value);
    } else if (key == "m1" || key == "m2" || key == "m3") {
        c.masses[key[1] - '1'] = parse_double(key, value);
    } else if (key == "E") {
        c.E = parse_double(key, value);
    } else if (key == "modes") {
        c.modes = parse_int(key, value);
    } else if (key == "grid") {
        c.grid = parse_int(key, value);
        c.minimize.max_grid = std::max(c.minimize.max_grid, c.grid);
    } else if (key == "seeds") {
        c.seeds.clear();
        for (const auto item : split_list(value)) {
            const long long s = parse_integer(key, item);
            if (s < 0) bad_value(key, item, "a non-negative integer");
            c.seeds.push_back(static_cast<std::uint64_t>(s));
        }
        if (c.seeds.empty()) bad_value(key, value, "at least one seed");
    } else if (key == "winding") {
        c.winding = parse_int(key, value);
    } else if (key == "noise") {
        c.noise = parse_double(key, value);
    } else if (key == "e") {
        c.eccentricity = parse_double(key, value);
    } else if (key == "out") {
        if (value.empty()) bad_value(key, value, "a directory path");
        c.out_dir = std::filesystem::path(std::string(value));
    } else if (key == "plots") {
        c.emit_plots = parse_bool(key, value);
    } else if (key == "max_iters") {
        c.minimize.max_iters = parse_int(key, value);
    } else if (key == "tol") {
        c.minimize.grad_tol = parse_double(key, value);
    } else if (key == "sweep") {
        c.sweep.clear();
        for (const auto item : split_list(value)) c.sweep.push_back(parse_double(key, item));
    } else if (key == "jobs") {
        c.jobs = parse_int(key, value);
    } else {
        throw ConfigError("unknown setting '" + key + "'");
    }
}

void apply_config_text(RunConfig& config, std::string_view text) {
    int line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto end = text.find('\n', start);
        std::string_view line = text.substr(start, end == std::string_view::npos ? end : end - start);
        start = end == std::string_view::npos ? text.size() : end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
    }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    apply_config_text(config, buffer.str());
}

// ---------------------------------------------------------------------------
// Runs

int OutputRecord::checks_passed() const {
    return static_cast<int>(std::count_if(checks.begin(), checks.end(), [](const auto& c) { return c.pass; }));
}

namespace {

constexpr std::size_t kOrbitSamples = 256;
constexpr double kMatchTolerance = 1e-4;

FormulaRow row(std::string quantity, std::string label, std::string source, double value) {
    FormulaRow r;
    r.quantity = std::move(quantity);
    r.label = std::move(label);
    r.source = std::move(source);
    r.value = value;
    return r;
}

// Measures every row of `quantity` against the row labelled `reference`.
void attach_gaps(std::vector<FormulaRow>& rows, const std::string& quantity, const std::string& reference) {
    const auto ref = std::find_if(rows.begin(), rows.end(), [&](const FormulaRow& r) {
        return r.quantity == quantity && r.label == reference;
    });
    if (ref == rows.end()) return;
    const double ref_value = ref->value;
    for (auto& r : rows) {
        if (r.quantity != quantity) continue;
        r.reference = reference;
        r.rel_gap = (r.value - ref_value) / ref_value;
        r.matches_reference = &r != &*ref && std::abs(r.rel_gap) <= kMatchTolerance;
    }
}

// Lower-bound check: passes when value >= bound - slack.
CheckReport at_least(std::string name, double value, double bound, double slack, std::string provenance) {
    CheckReport r = make_report(std::move(name), value, bound, slack, std::move(provenance));
    r.tolerance = slack;
    r.pass = std::isfinite(value) && value >= bound - slack;
    return r;
}

// First return of the RK4 flow started from the orbit's t = 0 state.
double measured_period(const System& sys, const PhysicalOrbit& orbit, double expected) {
    const double duration = 1.5 * expected;
    const auto traj = integrate_ode(sys, orbit.positions.front(), orbit.velocities.front(), duration, 15000);
    return measure_period(traj);
}

template <typename Check>
void try_check(std::vector<CheckReport>& checks, const std::string& name, Check&& check) {
    try {
        checks.push_back(check());
    } catch (const Error& e) {
        CheckReport failed;
        failed.name = name;
        failed.left = failed.right = 0.0;
        failed.abs_deviation = failed.rel_deviation = 0.0;
        failed.pass = false;
        failed.provenance = std::string("check raised: ") + e.what();
        checks.push_back(std::move(failed));
    }
}

template <typename Result>
void copy_result(OutputRecord& rec, const Result& r) {
    rec.status = r.status;
    rec.action = r.action;
    rec.period = r.period;
    rec.gradient_norm = r.gradient_norm;
    rec.iterations = r.iterations;
    rec.min_separation = r.min_separation;
    rec.windings = r.windings;
    rec.grid_size = r.grid_size;
    rec.factor_kinetic = r.factor_kinetic;
    rec.factor_potential = r.factor_potential;
    rec.action_history = r.action_history;
}

void run_two_body(OutputRecord& rec, const RunConfig& c, double h) {
    const TwoBodySystem sys(c.a, h);
    const QuadratureGrid grid(c.grid);
    const auto r = minimize(random_loop(rec.seed, c.modes, c.winding, c.noise), sys, grid, c.minimize);
    copy_result(rec, r);
    rec.final_loops = {r.final_loop};

    const double t_kepler = kepler_period(c.a, h);
    const double quadrature = kepler_loop_action(c.a, h, 0.0, grid);
    rec.comparisons = {
        row("action", "claimed_min_action", "9 pi^2 2^(-13/3) a^2 / (-h)", claimed_action_2body(c.a, h)),
        row("action", "kepler_loop_quadrature", "action of the fitted circular Kepler loop", quadrature),
        row("action", "minimizer", "minimized action (reduced functional)", r.action),
        row("period", "kepler_third_law", "2 pi (-2h)^(-3/2) a", t_kepler),
        row("period", "minimizer", "T^2 = integral V'(u).u / integral |u'|^2", r.period),
    };
    attach_gaps(rec.comparisons, "action", "kepler_loop_quadrature");
    attach_gaps(rec.comparisons, "period", "kepler_third_law");

    if (r.status == MinimizeStatus::NearCollision) return;
    rec.orbit = to_physical(r.final_loop, r.period, sys, kOrbitSamples);
    const System any{sys};
    auto& checks = rec.checks;
    try_check(checks, "action_identity", [&] { return action_identity(rec.orbit, any, r.action); });
    try_check(checks, "ode_residual", [&] {
        return make_bound_report("ode_residual", ode_residual(r.final_loop, r.period, sys, grid), 1e-3,
                                 "max |x'' + grad V(x)| / max |grad V| on the grid");
    });
    try_check(checks, "action_vs_kepler_loop", [&] {
        return make_report("action_vs_kepler_loop", r.action, quadrature, 5e-3,
                           "minimized action vs circular Kepler loop quadrature");
    });
    try_check(checks, "claimed_lower_bound", [&] {
        return at_least("claimed_lower_bound", r.action, claimed_action_2body(c.a, h), 1e-9,
                        "minimized action >= 9 pi^2 2^(-13/3) a^2 / (-h)");
    });
    try_check(checks, "period_law", [&] {
        return make_report("period_law", r.period, t_kepler, 5e-3, "recovered period vs 2 pi (-2h)^(-3/2) a");
    });
    try_check(checks, "period_measured", [&] {
        return make_report("period_measured", measured_period(any, rec.orbit, r.period), t_kepler, 1e-4,
                           "first return of the RK4 flow vs 2 pi (-2h)^(-3/2) a");
    });
    try_check(checks, "energy_level", [&] {
        return make_report("energy_level", rec.orbit.energy, h, 1e-6, "1/2 |x'|^2 + V(x) at t = 0 vs h");
    });
}

void run_three_body(OutputRecord& rec, const RunConfig& c, double energy) {
    const ThreeBodySystem sys(c.masses, energy);
    const QuadratureGrid grid(c.grid);
    const auto start = random_triple(rec.seed, c.modes, c.masses, c.winding, c.noise);
    const auto r = minimize(start, sys, grid, c.minimize);
    copy_result(rec, r);
    rec.final_loops = {r.final_loop.loops.begin(), r.final_loop.loops.end()};

    const auto periods = lagrange_period(c.masses, energy);
    const auto actions = lagrange_actions(c.masses, energy, grid);
    rec.comparisons = {
        row("action", "claimed_action", "2^(-13/3) (3 pi)^2 sigma^3 / (-E)", actions.claimed_action),
        row("action", "lagrange_loop_quadrature", "action of the fitted circular Lagrange loop",
            actions.derived_lagrange),
        row("action", "minimizer", "minimized action (reduced functional)", r.action),
        row("period", "claimed_period", "2 pi (sigma / (-2E))^(3/2)", periods.claimed_period),
        row("period", "claimed_period_mass", "2 pi M (sigma / (-2E))^(3/2)", periods.claimed_period_mass),
        row("period", "derived_period", "2 pi M^(-1/2) (sigma / (-2E))^(3/2)", periods.derived),
        row("period", "minimizer", "T^2 = integral V'(q).q / integral sum m|q'|^2", r.period),
    };
    attach_gaps(rec.comparisons, "action", "lagrange_loop_quadrature");
    attach_gaps(rec.comparisons, "period", "minimizer");

    if (r.status == MinimizeStatus::NearCollision) return;
    rec.orbit = to_physical(r.final_loop, r.period, sys, kOrbitSamples);
    const System any{sys};
    auto& checks = rec.checks;
    try_check(checks, "action_identity", [&] { return action_identity(rec.orbit, any, r.action); });
    try_check(checks, "ode_residual", [&] {
        return make_bound_report("ode_residual", ode_residual(r.final_loop, r.period, sys, grid), 1e-3,
                                 "max |m q'' + dV/dq| / max |dV/dq| on the grid");
    });
    try_check(checks, "action_vs_lagrange_loop", [&] {
        return make_report("action_vs_lagrange_loop", r.action, actions.derived_lagrange, 1e-2,
                           "minimized action vs circular Lagrange loop quadrature");
    });
    try_check(checks, "equilateral_deviation", [&] {
        return make_bound_report("equilateral_deviation", equilateral_deviation(rec.orbit), 1e-2,
                                 "(max - min pair distance) / mean pair distance");
    });
    try_check(checks, "period_measured", [&] {
        return make_report("period_measured", measured_period(any, rec.orbit, r.period), r.period, 1e-4,
                           "first return of the RK4 flow vs recovered period");
    });
    try_check(checks, "energy_level", [&] {
        return make_report("energy_level", rec.orbit.energy, energy, 1e-6,
                           "1/2 sum m|q'|^2 + V(q) at t = 0 vs E");
    });
    try_check(checks, "kinetic_identity", [&] {
        std::array<Vec2, 3> v{};
        std::copy_n(rec.orbit.velocities.front().begin(), 3, v.begin());
        return kinetic_identity(v, c.masses);
    });
}

struct RunPlan {
    double energy;
    std::uint64_t seed;
    std::string id;
};

std::vector<RunPlan> plan_runs(const RunConfig& config) {
    std::vector<RunPlan> plan;
    if (config.sweep.empty()) {
        for (const auto seed : config.seeds) plan.push_back({config.energy(), seed, "seed" + std::to_string(seed)});
        return plan;
    }
    for (std::size_t i = 0; i < config.sweep.size(); ++i) {
        for (const auto seed : config.seeds) {
            plan.push_back({config.sweep[i], seed, "sweep" + std::to_string(i) + "_seed" + std::to_string(seed)});
        }
    }
    return plan;
}

// Runs every planned entry with at most `jobs` in flight. Results keep plan order.
std::vector<std::future<OutputRecord>> launch_runs(const RunConfig& config, const std::vector<RunPlan>& plan) {
    std::vector<std::future<OutputRecord>> futures;
    futures.reserve(plan.size());
    const std::size_t jobs = config.jobs > 0 ? static_cast<std::size_t>(config.jobs)
                                             : std::max(1u, std::thread::hardware_concurrency());
    for (std::size_t i = 0; i < plan.size(); ++i) {
        if (i >= jobs) futures[i - jobs].wait();
        const auto& p = plan[i];
        futures.push_back(std::async(std::launch::async, [&config, p] {
            return execute_run(config, p.energy, p.seed, p.id);
        }));
    }
    return futures;
}

}  // namespace

OutputRecord execute_run(const RunConfig& config, double energy, std::uint64_t seed, std::string run_id) {
    RunConfig c = config;
    (c.problem == ProblemKind::TwoBody ? c.h : c.E) = energy;
    c.validate();
    OutputRecord rec;
    rec.run_id = std::move(run_id);
    rec.energy = energy;
    rec.seed = seed;
    if (c.problem == ProblemKind::TwoBody) run_two_body(rec, c, energy);
    else run_three_body(rec, c, energy);
    rec.config = std::move(c);
    return rec;
}

std::vector<OutputRecord> execute_runs(const RunConfig& config) {
    config.validate();
    auto futures = launch_runs(config, plan_runs(config));
    std::vector<OutputRecord> records;
    records.reserve(futures.size());
    for (auto& f : futures) records.push_back(f.get());
    return records;
}

// ---------------------------------------------------------------------------
// Serialization

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

namespace {

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (const char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

template <typename Row>
std::string join_row(const Row& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += csv_field(cells[i]);
    }
    return line + '\n';
}

// JSON numbers must be finite; anything else becomes null.
ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json vec_json(const Vec2& v) { return ordered_json::array({num(v.x), num(v.y)}); }

ordered_json loop_json(const FourierLoop& loop) {
    ordered_json j;
    j["dimension"] = FourierLoop::dimension;
    j["K"] = loop.modes();
    j["mean"] = vec_json(loop.mean);
    j["cos_coeffs"] = ordered_json::array();
    j["sin_coeffs"] = ordered_json::array();
    for (const auto& a : loop.cos_coeffs) j["cos_coeffs"].push_back(vec_json(a));
    for (const auto& b : loop.sin_coeffs) j["sin_coeffs"].push_back(vec_json(b));
    return j;
}

ordered_json config_json(const RunConfig& c) {
    ordered_json j;
    j["problem"] = to_string(c.problem);
    if (c.problem == ProblemKind::TwoBody) {
        j["a"] = num(c.a);
        j["h"] = num(c.h);
    } else {
        j["m1"] = num(c.masses[0]);
        j["m2"] = num(c.masses[1]);
        j["m3"] = num(c.masses[2]);
        j["E"] = num(c.E);
    }
    j["modes"] = c.modes;
    j["grid"] = c.grid;
    j["seeds"] = c.seeds;
    j["winding"] = c.winding;
    j["noise"] = num(c.noise);
    j["max_iters"] = c.minimize.max_iters;
    j["tol"] = num(c.minimize.grad_tol);
    j["sweep"] = ordered_json::array();
    for (const double v : c.sweep) j["sweep"].push_back(num(v));
    j["out"] = c.out_dir.string();
    j["plots"] = c.emit_plots;
    return j;
}

ordered_json formula_json(const FormulaRow& r) {
    ordered_json j;
    j["quantity"] = r.quantity;
    j["label"] = r.label;
    j["source"] = r.source;
    j["value"] = num(r.value);
    j["reference"] = r.reference;
    j["rel_gap"] = num(r.rel_gap);
    j["matches_reference"] = r.matches_reference;
    return j;
}

ordered_json check_json(const CheckReport& r) {
    ordered_json j;
    j["name"] = r.name;
    j["left"] = num(r.left);
    j["right"] = num(r.right);
    j["abs_deviation"] = num(r.abs_deviation);
    j["rel_deviation"] = num(r.rel_deviation);
    j["tolerance"] = num(r.tolerance);
    j["pass"] = r.pass;
    j["provenance"] = r.provenance;
    return j;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    out.close();
    if (!out) throw IoError("failed writing " + path.string());
}

void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError("cannot create output directory " + dir.string() +
                      (ec ? ": " + ec.message() : std::string()));
    }
}

}  // namespace

std::string summary_csv(const std::vector<OutputRecord>& records) {
    std::string out = join_row(std::vector<std::string>(kSummaryColumns.begin(), kSummaryColumns.end()));
    for (const auto& r : records) {
        out += join_row(std::vector<std::string>{
            r.run_id, std::string(to_string(r.config.problem)), format_number(r.energy), std::to_string(r.seed),
            std::string(to_string(r.status)), format_number(r.action), format_number(r.period),
            format_number(r.gradient_norm), std::to_string(r.iterations), format_number(r.min_separation),
            std::to_string(r.checks_passed()), std::to_string(r.checks.size()), std::to_string(r.grid_size)});
    }
    return out;
}

std::string record_json(const OutputRecord& r) {
    ordered_json j;
    j["run_id"] = r.run_id;
    j["config"] = config_json(r.config);
    j["energy"] = num(r.energy);
    j["seed"] = r.seed;
    j["status"] = to_string(r.status);
    j["action"] = num(r.action);
    j["period"] = num(r.period);
    j["gradient_norm"] = num(r.gradient_norm);
    j["iterations"] = r.iterations;
    j["min_separation"] = num(r.min_separation);
    j["windings"] = r.windings;
    j["grid_size"] = r.grid_size;
    j["factor_kinetic"] = num(r.factor_kinetic);
    j["factor_potential"] = num(r.factor_potential);
    j["action_history"] = ordered_json::array();
    for (const double f : r.action_history) j["action_history"].push_back(num(f));
    j["final_loops"] = ordered_json::array();
    for (const auto& loop : r.final_loops) j["final_loops"].push_back(loop_json(loop));
    j["comparisons"] = ordered_json::array();
    for (const auto& row : r.comparisons) j["comparisons"].push_back(formula_json(row));
    j["checks"] = ordered_json::array();
    for (const auto& c : r.checks) j["checks"].push_back(check_json(c));
    j["checks_passed"] = r.checks_passed();
    j["checks_total"] = r.checks.size();
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// SVG plots

namespace {

constexpr double kSvgSize = 480.0;
constexpr double kSvgMargin = 40.0;
constexpr std::array<const char*, 3> kBodyColors{"#1f77b4", "#d62728", "#2ca02c"};

std::string svg_header(std::string_view title) {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSvgSize << "\" height=\"" << kSvgSize
      << "\" viewBox=\"0 0 " << kSvgSize << ' ' << kSvgSize << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kSvgSize / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">"
      << title << "</text>\n";
    return s.str();
}

std::string fmt_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string orbit_svg(const PhysicalOrbit& orbit, std::string_view title) {
    double lox = 0.0, hix = 0.0, loy = 0.0, hiy = 0.0;
    for (const auto& q : orbit.positions) {
        for (const auto& p : q) {
            lox = std::min(lox, p.x);
            hix = std::max(hix, p.x);
            loy = std::min(loy, p.y);
            hiy = std::max(hiy, p.y);
        }
    }
    const double span = std::max({hix - lox, hiy - loy, 1e-12});
    const double scale = (kSvgSize - 2 * kSvgMargin) / span;
    const double cx = 0.5 * (lox + hix), cy = 0.5 * (loy + hiy);
    auto sx = [&](double x) { return fmt_coord(kSvgSize / 2 + (x - cx) * scale); };
    auto sy = [&](double y) { return fmt_coord(kSvgSize / 2 - (y - cy) * scale); };
    auto px = [&](const Vec2& p) { return sx(p.x) + "," + sy(p.y); };

    std::string svg = svg_header(title);
    // Origin marker: the attracting centre for two bodies, the centre of mass for three.
    svg += "<circle cx=\"" + sx(0.0) + "\" cy=\"" + sy(0.0) + "\" r=\"3\" fill=\"black\"/>\n";
    for (std::size_t i = 0; i < orbit.body_count(); ++i) {
        svg += "<polygon fill=\"none\" stroke-width=\"1.5\" stroke=\"";
        svg += kBodyColors[i % kBodyColors.size()];
        svg += "\" points=\"";
        for (const auto& q : orbit.positions) svg += px(q[i]) + " ";
        svg += "\"/>\n";
    }
    return svg + "</svg>\n";
}

std::string convergence_svg(const std::vector<double>& history, std::string_view title) {
    std::string svg = svg_header(title);
    const double left = kSvgMargin + 30, right = kSvgSize - kSvgMargin;
    const double top = kSvgMargin, bottom = kSvgSize - kSvgMargin;
    svg += "<polyline fill=\"none\" stroke=\"black\" points=\"" + fmt_coord(left) + "," + fmt_coord(top) + " " +
           fmt_coord(left) + "," + fmt_coord(bottom) + " " + fmt_coord(right) + "," + fmt_coord(bottom) + "\"/>\n";
    if (history.empty()) return svg + "</svg>\n";
    const auto [lo_it, hi_it] = std::minmax_element(history.begin(), history.end());
    const double lo = *lo_it, hi = std::max(*hi_it, lo + 1e-12 * std::max(1.0, std::abs(lo)));
    const double n = std::max<double>(1.0, static_cast<double>(history.size() - 1));
    svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < history.size(); ++k) {
        const double x = left + (right - left) * static_cast<double>(k) / n;
        const double y = bottom - (bottom - top) * (history[k] - lo) / (hi - lo);
        svg += fmt_coord(x) + "," + fmt_coord(y) + " ";
    }
    svg += "\"/>\n";
    auto label = [&](double x, double y, const std::string& text, const char* anchor) {
        svg += "<text x=\"" + fmt_coord(x) + "\" y=\"" + fmt_coord(y) + "\" text-anchor=\"" + anchor +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + text + "</text>\n";
    };
    label(left - 4, top + 4, format_number(hi), "end");
    label(left - 4, bottom, format_number(lo), "end");
    label(left, bottom + 16, "0", "middle");
    label(right, bottom + 16, std::to_string(history.size() - 1), "middle");
    label((left + right) / 2, bottom + 30, "iteration", "middle");
    return svg + "</svg>\n";
}

void write_outputs(const std::vector<OutputRecord>& records, const RunConfig& config) {
    ensure_directory(config.out_dir);
    for (const auto& r : records) write_file(config.out_dir / ("run_" + r.run_id + ".json"), record_json(r));
    write_file(config.out_dir / "summary.csv", summary_csv(records));
    if (!config.emit_plots) return;
    const auto plots = config.out_dir / "plots";
    ensure_directory(plots);
    for (const auto& r : records) {
        if (!r.orbit.positions.empty()) {
            write_file(plots / ("run_" + r.run_id + "_orbit.svg"), orbit_svg(r.orbit, "orbit " + r.run_id));
        }
        write_file(plots / ("run_" + r.run_id + "_action.svg"),
                   convergence_svg(r.action_history, "action vs iteration " + r.run_id));
    }
}

// ---------------------------------------------------------------------------
// Formula adjudication

std::vector<FormulaRow> formula_table(const RunConfig& config) {
    config.validate();
    const QuadratureGrid grid(config.grid);
    const std::uint64_t seed = config.seeds.front();
    const auto rec = execute_run(config, config.energy(), seed, "formulas");
    const std::string minimizer_source = "minimizer from seed " + std::to_string(seed) + " (" +
                                         std::string(to_string(rec.status)) + ")";
    std::vector<FormulaRow> rows;

    if (config.problem == ProblemKind::TwoBody) {
        const double a = config.a, h = config.h;
        rows.push_back(row("action", "claimed_min_action", "9 pi^2 2^(-13/3) a^2 / (-h)", claimed_action_2body(a, h)));
        rows.push_back(row("action", "kepler_loop_quadrature", "action of the fitted circular Kepler loop",
                           kepler_loop_action(a, h, 0.0, grid)));
        rows.push_back(row("action", "closed_form_min_action", "pi^2 a^2 / (2 (-h))", kPi * kPi * a * a / (-2.0 * h)));
        rows.push_back(row("action", "minimizer", minimizer_source, rec.action));
        attach_gaps(rows, "action", "kepler_loop_quadrature");

        const TwoBodySystem sys(a, h);
        const auto orbit = kepler_orbit(KeplerElements(a, h, config.eccentricity), kOrbitSamples);
        rows.push_back(row("period", "kepler_third_law", "2 pi (-2h)^(-3/2) a", kepler_period(a, h)));
        rows.push_back(row("period", "measured", "first return of the RK4 flow from the oracle orbit",
                           measured_period(System{sys}, orbit, orbit.period)));
        rows.push_back(row("period", "minimizer", minimizer_source, rec.period));
        attach_gaps(rows, "period", "measured");
        return rows;
    }

    const auto& m = config.masses;
    const double energy = config.E;
    const auto periods = lagrange_period(m, energy);
    const auto actions = lagrange_actions(m, energy, grid);
    const ThreeBodySystem sys(m, energy);
    const auto orbit = lagrange_solution(m, energy, 0.0, kOrbitSamples);
    // Long enough for the largest candidate to be seen if it were the true period.
    const double longest = 1.25 * std::max({periods.claimed_period, periods.claimed_period_mass, periods.derived});
    const double spacing = norm(orbit.positions[0][0] - orbit.positions[0][1]);
    const double step = 2e-4 * std::pow(spacing, 1.5) / std::sqrt(sys.total_mass());
    const auto traj = integrate_ode(System{sys}, orbit.positions[0], orbit.velocities[0], longest,
                                    static_cast<int>(std::ceil(longest / step)));

    rows.push_back(row("period", "claimed_period", "2 pi (sigma / (-2E))^(3/2)", periods.claimed_period));
    rows.push_back(row("period", "claimed_period_mass", "2 pi M (sigma / (-2E))^(3/2)", periods.claimed_period_mass));
    rows.push_back(row("period", "derived_period", "2 pi M^(-1/2) (sigma / (-2E))^(3/2)", periods.derived));
    rows.push_back(row("period", "measured", "first return of the RK4 flow from the circular Lagrange solution",
                       measure_period(traj)));
    rows.push_back(row("period", "minimizer", minimizer_source, rec.period));
    attach_gaps(rows, "period", "measured");

    rows.push_back(row("action", "claimed_action", "2^(-13/3) (3 pi)^2 sigma^3 / (-E)", actions.claimed_action));
    rows.push_back(row("action", "lagrange_loop_quadrature", "action of the fitted circular Lagrange loop",
                       actions.derived_lagrange));
    rows.push_back(row("action", "minimizer", minimizer_source, rec.action));
    attach_gaps(rows, "action", "lagrange_loop_quadrature");
    return rows;
}

std::string formulas_csv(const std::vector<FormulaRow>& rows) {
    std::string out = "quantity,label,source,value,reference,rel_gap,matches_reference\n";
    for (const auto& r : rows) {
        out += join_row(std::vector<std::string>{r.quantity, r.label, r.source, format_number(r.value), r.reference,
                                                 format_number(r.rel_gap), r.matches_reference ? "true" : "false"});
    }
    return out;
}

std::string formulas_json(const std::vector<FormulaRow>& rows) {
    ordered_json j = ordered_json::array();
    for (const auto& r : rows) j.push_back(formula_json(r));
    return j.dump(2) + "\n";
}

void write_formulas(const std::vector<FormulaRow>& rows, const RunConfig& config) {
    ensure_directory(config.out_dir);
    write_file(config.out_dir / "formulas.csv", formulas_csv(rows));
    write_file(config.out_dir / "formulas.json", formulas_json(rows));
}

// ---------------------------------------------------------------------------
// Oracle verification

namespace {

std::string tagged(std::string_view name, double e) { return std::string(name) + " e=" + format_number(e); }

void verify_kepler(const RunConfig& c, std::vector<CheckReport>& checks) {
    const TwoBodySystem sys(c.a, c.h);
    const System any{sys};
    const QuadratureGrid fine(4096);
    const double t = kepler_period(c.a, c.h);
    const double circle = kepler_loop_action(c.a, c.h, 0.0, fine);
    for (const double e : {0.0, 0.3, 0.6, 0.9}) {
        const KeplerElements el(c.a, c.h, e);
        const auto loop = kepler_loop(el, fine);
        try_check(checks, tagged("kepler_action_identity", e), [&] {
            auto r = action_identity(to_physical(loop, t, sys, 4096), any, action_full(loop, sys, fine).value, 1e-8);
            r.name = tagged("kepler_action_identity", e);
            return r;
        });
        try_check(checks, tagged("kepler_ode_residual", e), [&] {
            return make_bound_report(tagged("kepler_ode_residual", e), ode_residual(loop, t, sys, fine), 1e-6,
                                     "max |x'' + grad V(x)| / max |grad V| of the fitted Kepler loop");
        });
        try_check(checks, tagged("kepler_orbit_energy", e), [&] {
            auto r = energy_conservation(kepler_orbit(el, 1024), any);
            r.name = tagged("kepler_orbit_energy", e);
            return r;
        });
        try_check(checks, tagged("eccentricity_degeneracy", e), [&] {
            return make_report(tagged("eccentricity_degeneracy", e), kepler_loop_action(c.a, c.h, e, fine), circle,
                               1e-6, "Kepler loop action at e vs at e = 0");
        });
    }
    try_check(checks, "rk4_circle_energy", [&] {
        const auto orbit = kepler_orbit(KeplerElements(c.a, c.h, 0.0), kMinOrbitSamples);
        auto r = energy_conservation(integrate_ode(any, orbit.positions[0], orbit.velocities[0], t, 10000), any);
        r.name = "rk4_circle_energy";
        return r;
    });
    try_check(checks, "kepler_period_measured", [&] {
        const auto orbit = kepler_orbit(KeplerElements(c.a, c.h, c.eccentricity), kMinOrbitSamples);
        return make_report("kepler_period_measured", measured_period(any, orbit, t), t, 1e-4,
                           "first return of the RK4 flow vs 2 pi (-2h)^(-3/2) a");
    });
}

void verify_lagrange(const RunConfig& c, std::vector<CheckReport>& checks) {
    const ThreeBodySystem sys(c.masses, c.E);
    const System any{sys};
    const QuadratureGrid fine(4096);
    for (const double e : {0.0, 0.5}) {
        const auto orbit = lagrange_solution(c.masses, c.E, e, 1024);
        const auto loop = lagrange_loop(c.masses, c.E, e, fine);
        try_check(checks, tagged("lagrange_ode_residual", e), [&] {
            return make_bound_report(tagged("lagrange_ode_residual", e), ode_residual(loop, orbit.period, sys, fine),
                                     1e-6, "max |m q'' + dV/dq| / max |dV/dq| of the fitted Lagrange loop");
        });
        try_check(checks, tagged("lagrange_equilateral", e), [&] {
            return make_bound_report(tagged("lagrange_equilateral", e), equilateral_deviation(orbit), 1e-12,
                                     "(max - min pair distance) / mean pair distance");
        });
        try_check(checks, tagged("lagrange_action_identity", e), [&] {
            auto r = action_identity(to_physical(loop, orbit.period, sys, 4096), any,
                                     action_full(loop, sys, fine).value, 1e-8);
            r.name = tagged("lagrange_action_identity", e);
            return r;
        });
        try_check(checks, tagged("lagrange_kinetic_identity", e), [&] {
            CheckReport worst;
            for (const auto& v : orbit.velocities) {
                std::array<Vec2, 3> vv{v[0], v[1], v[2]};
                auto r = kinetic_identity(vv, c.masses);
                if (r.rel_deviation >= worst.rel_deviation) worst = r;
            }
            worst.name = tagged("lagrange_kinetic_identity", e);
            return worst;
        });
        try_check(checks, tagged("lagrange_rk4_energy", e), [&] {
            auto r = energy_conservation(
                integrate_ode(any, orbit.positions[0], orbit.velocities[0], orbit.period, 10000), any, 1e-8);
            r.name = tagged("lagrange_rk4_energy", e);
            return r;
        });
    }
}

}  // namespace

std::vector<CheckReport> verification_suite(const RunConfig& config) {
    config.validate();
    std::vector<CheckReport> checks;
    if (config.problem == ProblemKind::TwoBody) verify_kepler(config, checks);
    else verify_lagrange(config, checks);
    return checks;
}

std::string checks_csv(const std::vector<CheckReport>& checks) {
    std::string out = "name,left,right,abs_deviation,rel_deviation,tolerance,pass,provenance\n";
    for (const auto& c : checks) {
        out += join_row(std::vector<std::string>{c.name, format_number(c.left), format_number(c.right),
                                                 format_number(c.abs_deviation), format_number(c.rel_deviation),
                                                 format_number(c.tolerance), c.pass ? "true" : "false",
                                                 c.provenance});
    }
    return out;
}

std::string checks_json(const std::vector<CheckReport>& checks) {
    ordered_json j = ordered_json::array();
    for (const auto& c : checks) j.push_back(check_json(c));
    return j.dump(2) + "\n";
}

void write_checks(const std::vector<CheckReport>& checks, const RunConfig& config) {
    ensure_directory(config.out_dir);
    write_file(config.out_dir / "verify.csv", checks_csv(checks));
    write_file(config.out_dir / "verify.json", checks_json(checks));
}

// ---------------------------------------------------------------------------
// Oracle orbits

PhysicalOrbit oracle_orbit(const RunConfig& config) {
    config.validate();
    const auto samples = static_cast<std::size_t>(std::max<int>(config.grid, kMinOrbitSamples));
    if (config.problem == ProblemKind::TwoBody) {
        return kepler_orbit(KeplerElements(config.a, config.h, config.eccentricity), samples);
    }
    return lagrange_solution(config.masses, config.E, config.eccentricity, samples);
}

std::string orbit_csv(const PhysicalOrbit& orbit) {
    std::string out = "t,body,x,y,vx,vy\n";
    for (std::size_t j = 0; j < orbit.sample_count(); ++j) {
        for (std::size_t i = 0; i < orbit.body_count(); ++i) {
            const auto& q = orbit.positions[j][i];
            const auto& v = orbit.velocities[j][i];
            out += join_row(std::vector<std::string>{format_number(orbit.times[j]), std::to_string(i + 1),
                                                     format_number(q.x), format_number(q.y), format_number(v.x),
                                                     format_number(v.y)});
        }
    }
    return out;
}

void write_oracle(const PhysicalOrbit& orbit, const RunConfig& config) {
    ensure_directory(config.out_dir);
    write_file(config.out_dir / "oracle_orbit.csv", orbit_csv(orbit));
    ordered_json j;
    j["source"] = to_string(orbit.source);
    j["config"] = config_json(config);
    j["eccentricity"] = num(config.eccentricity);
    j["period"] = num(orbit.period);
    j["energy"] = num(orbit.energy);
    j["masses"] = orbit.masses;
    j["samples"] = orbit.sample_count();
    write_file(config.out_dir / "oracle.json", j.dump(2) + "\n");
    if (config.emit_plots) {
        ensure_directory(config.out_dir / "plots");
        write_file(config.out_dir / "plots" / "oracle_orbit.svg", orbit_svg(orbit, "oracle orbit"));
    }
}

// ---------------------------------------------------------------------------
// Orchestration

int run(const RunConfig& config, std::ostream& log) {
    try {
        config.validate();
        const auto plan = plan_runs(config);
        auto futures = launch_runs(config, plan);
        std::vector<OutputRecord> records;
        bool all_completed = true;
        for (std::size_t i = 0; i < futures.size(); ++i) {
            try {
                records.push_back(futures[i].get());
            } catch (const ConfigError&) {
                throw;
            } catch (const Error& e) {
                all_completed = false;
                log << "run " << plan[i].id << " failed: " << e.what() << '\n';
            }
        }
        write_outputs(records, config);
        for (const auto& r : records) {
            log << r.run_id << ": " << to_string(r.status) << " action " << format_number(r.action) << " period "
                << format_number(r.period) << " checks " << r.checks_passed() << '/' << r.checks.size() << '\n';
        }
        return all_completed ? kExitOk : kExitRunFailed;
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        log << "I/O error: " << e.what() << '\n';
        return kExitIo;
    }
}

}  // namespace loopaction
