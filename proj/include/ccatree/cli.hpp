#pragma once

// Command-line front end. Every subcommand validates its options, calls the
// library, and serializes the result; no numerics live here.
//
// Exit codes: 0 success, 1 config error, 2 verification mismatch,
// 3 no witness, 4 internal invariant breach.

#include "ccatree/bounds.hpp"
#include "ccatree/dynamics.hpp"
#include "ccatree/errors.hpp"
#include "ccatree/experiments.hpp"
#include "ccatree/io.hpp"
#include "ccatree/numerics.hpp"
#include "ccatree/structures.hpp"
#include "ccatree/tree.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <array>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ccatree::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kMismatch = 2, kNoWitness = 3, kInternal = 4 };

// Minimal kappa thresholds for d = 2..9, as published.
inline constexpr std::array<int, 8> kPublishedThresholdsTheta2{3, 5, 7, 8, 10, 11, 12, 14};
inline constexpr std::array<int, 8> kPublishedThresholdsTheta3{3, 3, 3, 4, 5, 5, 6, 7};
inline constexpr int kPublishedTableFirstD = 2;

// Inclusive integer range "a..b" or a single integer.
inline std::vector<int> parse_range(const std::string& text, const std::string& key) {
    auto to_int = [&](const std::string& s) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size()) throw ParameterError("--" + key + ": '" + text + "' is not an integer or a..b range");
        return v;
    };
    const auto dots = text.find("..");
    int lo = 0, hi = 0;
    if (dots == std::string::npos) {
        lo = hi = to_int(text);
    } else {
        lo = to_int(text.substr(0, dots));
        hi = to_int(text.substr(dots + 2));
    }
    if (hi < lo) throw ParameterError("--" + key + ": empty range '" + text + "'");
    if (static_cast<long long>(hi) - lo > 1000000) throw ParameterError("--" + key + ": range too large");
    std::vector<int> out;
    for (int v = lo; v <= hi; ++v) out.push_back(v);
    return out;
}

namespace detail {

struct Options {
    std::string config;
    std::string out;
    std::string format;
    std::string model;
    std::string topology = "regular";
    std::string map;
    std::string variant;
    std::string kind = "structure";
    std::string forced = "none";
    std::string refinement;
    std::string name;
    std::string d_range, kappa_range;
    int d = 0, theta = 0, kappa = 0, depth = 0, radius = 0, horizon = 0, t = 0;
    std::int64_t trials = 1;
    std::uint64_t seed = 0, trial = 0;
    int workers = 1;
    int max_iter = kDefaultFixedPointMaxIter;
    double tol = kDefaultFixedPointTol;
    double perturb = 0.0;
    bool list = false;
    bool check_paper_table = false;
};

inline void emit(const Options& o, const std::string& text, std::ostream& out) {
    if (o.out.empty()) {
        out << text;
    } else {
        write_text_file(o.out, text);
    }
}

inline void require(const CLI::App* sub, std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
        if (sub->get_option(std::string("--") + k)->count() == 0) {
            throw ParameterError(std::string("missing required option --") + k);
        }
    }
}

inline bool given(const CLI::App* sub, const char* key) { return sub->get_option(std::string("--") + key)->count() > 0; }

inline void check_format(const std::string& format, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed) {
        if (format == a) return;
    }
    throw ParameterError("--format: unsupported format '" + format + "'");
}

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_simulate(const CLI::App* sub, const Options& o, std::ostream& out) {
    require(sub, {"model", "d", "theta", "kappa", "radius", "horizon", "seed"});
    const ModelParams params{model_from_string(o.model), o.kappa, o.theta};
    params.validate();
    if (o.horizon < 0) throw ParameterError("--horizon must be >= 0");
    if (o.horizon > o.radius) {
        throw LightconeViolation("--horizon " + std::to_string(o.horizon) + " exceeds --radius " +
                                 std::to_string(o.radius) + " (light cone)");
    }
    const auto forced = forced_coloring_from_string(o.forced);
    if (given(sub, "trials")) {
        check_format(o.format.empty() ? "json" : o.format, {"json", "csv"});
        if (o.topology != "regular") throw ParameterError("--topology: batches run on the regular ball");
        const auto report = root_statistics(params.model, o.d, o.theta, o.kappa, o.radius, o.horizon, o.trials, o.seed,
                                            {o.workers, forced});
        emit(o, o.format == "csv" ? report_csv_string(report) : report_json_string(report), out);
        return kOk;
    }
    check_format(o.format.empty() ? "json" : o.format, {"json"});
    const auto topo = build_tree(tree_kind_from_string(o.topology), o.d, o.radius);
    Coloring initial = sample_uniform_coloring(topo, o.kappa, o.seed, o.trial);
    if (forced != ForcedColoring::none) apply_forced(topo, forced, o.kappa, initial.colors);
    const auto traj = run(topo, initial, params, o.horizon);
    auto j = to_json(traj);
    ordered_json doc;
    doc["topology"] = o.topology;
    doc["d"] = o.d;
    doc["theta"] = o.theta;
    doc["kappa"] = o.kappa;
    doc["radius"] = o.radius;
    doc["seed"] = o.seed;
    doc["trial"] = o.trial;
    doc["trajectory"] = std::move(j);
    emit(o, doc.dump(2) + "\n", out);
    return kOk;
}

inline int cmd_fixed_point(const CLI::App* sub, const Options& o, std::ostream& out) {
    require(sub, {"map", "d", "theta", "kappa"});
    const auto map = fixed_point_map_from_string(o.map);
    const auto ds = parse_range(o.d_range, "d");
    const auto ks = parse_range(o.kappa_range, "kappa");
    for (int d : ds) {
        for (int k : ks) MapParams{map, d, o.theta, k}.validate();
    }
    if (ds.size() == 1 && ks.size() == 1) {
        emit(o, to_json(kleene_fp({map, ds[0], o.theta, ks[0]}, o.tol, o.max_iter)).dump(2) + "\n", out);
        return kOk;
    }
    ordered_json arr = ordered_json::array();
    for (int d : ds) {
        for (int k : ks) arr.push_back(to_json(kleene_fp({map, d, o.theta, k}, o.tol, o.max_iter)));
    }
    emit(o, arr.dump(2) + "\n", out);
    return kOk;
}

inline int cmd_phase_diagram(const CLI::App* sub, const Options& o, std::ostream& out) {
    require(sub, {"map", "theta", "d", "kappa"});
    const std::string format = o.format.empty() ? "csv" : o.format;
    check_format(format, {"csv", "svg"});
    const auto grid = phase_grid(fixed_point_map_from_string(o.map), o.theta, parse_range(o.d_range, "d"),
                                 parse_range(o.kappa_range, "kappa"), o.tol, o.workers);
    emit(o, format == "svg" ? svg_heatmap(grid) : phase_grid_csv(grid), out);
    return kOk;
}

inline int cmd_thresholds(const CLI::App* sub, const Options& o, std::ostream& out, std::ostream& err) {
    require(sub, {"theta"});
    check_format(o.format.empty() ? "csv" : o.format, {"csv"});
    if (o.check_paper_table && o.theta != 2 && o.theta != 3) {
        throw ParameterError("--check-paper-table: the published table has no row for theta=" +
                             std::to_string(o.theta));
    }
    const auto refinement = o.refinement.empty() ? default_refinement(o.theta) : refinement_from_string(o.refinement);
    const auto ds = parse_range(o.d_range.empty() ? "2..9" : o.d_range, "d");
    std::vector<ThresholdRow> rows;
    for (int d : ds) rows.push_back({o.theta, d, refinement, ghm_kappa_threshold(o.theta, d, refinement)});
    emit(o, threshold_csv(rows), out);
    if (!o.check_paper_table) return kOk;

    const auto& table = o.theta == 2 ? kPublishedThresholdsTheta2 : kPublishedThresholdsTheta3;
    int compared = 0, mismatches = 0;
    for (const auto& r : rows) {
        const int idx = r.d - kPublishedTableFirstD;
        if (idx < 0 || idx >= static_cast<int>(table.size())) continue;
        ++compared;
        if (r.kappa != table[static_cast<std::size_t>(idx)]) {
            ++mismatches;
            err << "mismatch: theta=" << r.theta << " d=" << r.d << " computed " << r.kappa << ", table "
                << table[static_cast<std::size_t>(idx)] << "\n";
        }
    }
    if (compared == 0) throw ParameterError("--d range does not overlap the published rows d=2..9");
    err << "checked " << compared << " table entries, " << mismatches << " mismatches\n";
    return mismatches == 0 ? kOk : kMismatch;
}

inline std::string bounds_table(const std::vector<BoundResult>& results) {
    std::ostringstream os;
    os << "status,group,check,lhs,relation,rhs\n";
    for (const auto& r : results) {
        os << (r.passed ? "PASS" : "FAIL") << ',' << r.group << ',' << ccatree::detail::csv_quote(r.name) << ','
           << ccatree::detail::csv_number(r.lhs) << ',' << (r.relation == Relation::le ? "<=" : ">=") << ','
           << ccatree::detail::csv_number(r.rhs) << '\n';
    }
    return os.str();
}

inline int cmd_verify_bounds(const Options& o, std::ostream& out, std::ostream& err) {
    if (o.list) {
        std::ostringstream os;
        for (const auto& c : bound_checks()) os << c.group << ": " << c.name << '\n';
        emit(o, os.str(), out);
        return kOk;
    }
    if (o.perturb < 0.0) throw ParameterError("--perturb must be >= 0");
    const auto results = run_bound_checks(o.perturb);
    emit(o, bounds_table(results), out);
    const auto failed = std::count_if(results.begin(), results.end(), [](const BoundResult& r) { return !r.passed; });
    err << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " checks passed\n";
    return failed == 0 ? kOk : kMismatch;
}

inline int cmd_witness(const CLI::App* sub, const Options& o, std::ostream& out, std::ostream& err) {
    require(sub, {"d", "theta", "kappa", "seed"});
    validate_kappa(o.kappa);
    const auto forced = forced_coloring_from_string(o.forced);
    auto sample = [&](const TreeTopology& topo) {
        Coloring c = sample_uniform_coloring(topo, o.kappa, o.seed, o.trial);
        if (forced != ForcedColoring::none) apply_forced(topo, forced, o.kappa, c.colors);
        return c;
    };
    ordered_json doc;
    if (o.kind == "structure") {
        require(sub, {"variant", "depth"});
        const auto topo = build_tree(tree_kind_from_string(o.topology), o.d, o.depth);
        const StructureQuery q{structure_variant_from_string(o.variant), o.theta};
        q.validate(topo);
        const auto coloring = sample(topo);
        const auto marks = mark(topo, coloring, q);
        const auto w = extract_witness(topo, coloring, marks);
        if (!verify_witness(topo, coloring, q, w)) throw InternalError("extracted witness failed re-verification");
        doc["kind"] = "structure";
        doc["variant"] = o.variant;
        doc["topology"] = o.topology;
        doc["d"] = o.d;
        doc["theta"] = o.theta;
        doc["depth_requested"] = o.depth;
        doc["seed"] = o.seed;
        doc["trial"] = o.trial;
        doc["witness"] = to_json(w, coloring);
    } else if (o.kind == "excitation") {
        require(sub, {"radius", "t"});
        const auto topo = build_regular_ball(o.d, o.radius);
        const auto coloring = sample(topo);
        const auto w = excitation_witness(topo, coloring, o.t, o.theta);
        if (!verify_excitation_witness(topo, coloring, w, o.t, o.theta)) {
            throw InternalError("excitation witness failed re-verification");
        }
        doc["kind"] = "excitation";
        doc["d"] = o.d;
        doc["theta"] = o.theta;
        doc["radius"] = o.radius;
        doc["t"] = o.t;
        doc["seed"] = o.seed;
        doc["trial"] = o.trial;
        doc["witness"] = to_json(w, coloring);
    } else {
        throw ParameterError("--kind must be structure or excitation");
    }
    (void)err;
    emit(o, doc.dump(2) + "\n", out);
    return kOk;
}

inline int cmd_experiment(const CLI::App* sub, const Options& o, std::ostream& out, std::ostream& err) {
    require(sub, {"name", "d", "theta", "kappa", "trials", "seed"});
    const std::string format = o.format.empty() ? "json" : o.format;
    check_format(format, {"json", "csv"});
    const RunOptions run{o.workers, forced_coloring_from_string(o.forced)};
    ExperimentReport r;
    if (o.name == "marked-root") {
        require(sub, {"variant", "depth"});
        r = estimate_marked_root_prob(structure_variant_from_string(o.variant), o.d, o.theta, o.kappa,
                                      tree_kind_from_string(given(sub, "topology") ? o.topology : "dary"), o.depth,
                                      o.trials, o.seed, run);
    } else if (o.name == "excitation") {
        require(sub, {"radius", "t"});
        r = estimate_excitation_prob(o.d, o.theta, o.kappa, o.radius, o.t, o.trials, o.seed, run);
    } else if (o.name == "tau-tail") {
        require(sub, {"radius"});
        r = estimate_tau_tail(o.d, o.theta, o.kappa, o.radius, o.trials, o.seed, run);
    } else if (o.name == "fluctuation-window") {
        require(sub, {"radius"});
        r = fluctuation_window(o.d, o.theta, o.kappa, o.radius, o.trials, o.seed, run);
    } else if (o.name == "lightcone") {
        require(sub, {"radius"});
        try {
            r = lightcone_check(o.d, o.theta, o.kappa, o.radius, o.trials, o.seed, run);
        } catch (const LightconeViolation& e) {
            err << "verification failed: " << e.what() << "\n";
            return kMismatch;
        }
    } else {
        throw ParameterError("--name: unknown experiment '" + o.name + "'");
    }
    emit(o, format == "csv" ? report_csv_string(r) : report_json_string(r), out);
    return r.all_passed() ? kOk : kMismatch;
}

// Appends "--key value" tokens from a JSON config for options not already
// given on the command line. Unknown keys are an error.
inline std::vector<std::string> config_tokens(const CLI::App* sub, const std::string& path) {
    nlohmann::json cfg;
    try {
        cfg = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError("--config: '" + path + "' is not valid JSON: " + e.what());
    }
    if (!cfg.is_object()) throw ParameterError("--config: top level must be an object");
    std::vector<std::string> tokens;
    for (const auto& [key, value] : cfg.items()) {
        const auto* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr || key == "config") throw ParameterError("--config: unknown key '" + key + "'");
        if (opt->count() > 0) continue;  // command line wins
        if (value.is_boolean()) {
            if (opt->get_expected_min() != 0) throw ParameterError("--config: key '" + key + "' is not a flag");
            if (value.get<bool>()) tokens.push_back("--" + key);
        } else if (value.is_string()) {
            tokens.push_back("--" + key);
            tokens.push_back(value.get<std::string>());
        } else if (value.is_number()) {
            tokens.push_back("--" + key);
            tokens.push_back(value.dump());
        } else {
            throw ParameterError("--config: key '" + key + "' must be a string, number or boolean");
        }
    }
    return tokens;
}

struct Parser {
    CLI::App app{"Cyclic cellular automaton and Greenberg-Hastings dynamics on finite trees", "ccatree"};
    Options o;
    CLI::App* simulate = nullptr;
    CLI::App* fixed_point = nullptr;
    CLI::App* phase_diagram = nullptr;
    CLI::App* thresholds = nullptr;
    CLI::App* verify_bounds = nullptr;
    CLI::App* witness = nullptr;
    CLI::App* experiment = nullptr;

    Parser() {
        app.require_subcommand(1);
        auto common = [&](CLI::App* s) {
            s->add_option("--config", o.config, "JSON file with option values (flags win)");
            s->add_option("--out", o.out, "Output path (default: stdout)");
        };
        auto params = [&](CLI::App* s) {
            s->add_option("--d", o.d, "Branching number");
            s->add_option("--theta", o.theta, "Contact threshold");
            s->add_option("--kappa", o.kappa, "Number of colors");
        };

        simulate = app.add_subcommand("simulate", "Run one trajectory, or a batch with --trials");
        common(simulate);
        params(simulate);
        simulate->add_option("--model", o.model, "cca | ghm");
        simulate->add_option("--radius", o.radius, "Tree radius");
        simulate->add_option("--horizon", o.horizon, "Steps to run (<= radius)");
        simulate->add_option("--seed", o.seed, "Master seed");
        simulate->add_option("--trial", o.trial, "Trial index for a single trajectory");
        simulate->add_option("--trials", o.trials, "Run a batch and write a report");
        simulate->add_option("--topology", o.topology, "regular | dary");
        simulate->add_option("--forced", o.forced, "none | all-zero | depth-mod-kappa | monochrome");
        simulate->add_option("--workers", o.workers, "Worker threads for batches");
        simulate->add_option("--format", o.format, "json | csv");

        fixed_point = app.add_subcommand("fixed-point", "Smallest fixed point of b1 or b2");
        common(fixed_point);
        fixed_point->add_option("--map", o.map, "b1 | b2");
        fixed_point->add_option("--d", o.d_range, "Branching number or range a..b");
        fixed_point->add_option("--theta", o.theta, "Contact threshold");
        fixed_point->add_option("--kappa", o.kappa_range, "Number of colors or range a..b");
        fixed_point->add_option("--tol", o.tol, "Convergence tolerance");
        fixed_point->add_option("--max-iter", o.max_iter, "Iteration cap");

        phase_diagram = app.add_subcommand("phase-diagram", "Grid of smallest fixed points over (d, kappa)");
        common(phase_diagram);
        phase_diagram->add_option("--map", o.map, "b1 | b2");
        phase_diagram->add_option("--theta", o.theta, "Contact threshold");
        phase_diagram->add_option("--d", o.d_range, "Range a..b (rows)");
        phase_diagram->add_option("--kappa", o.kappa_range, "Range a..b (columns)");
        phase_diagram->add_option("--format", o.format, "csv | svg");
        phase_diagram->add_option("--tol", o.tol, "Convergence tolerance");
        phase_diagram->add_option("--workers", o.workers, "Worker threads");

        thresholds = app.add_subcommand("thresholds", "Minimal kappa for GHM fixation over a range of d");
        common(thresholds);
        thresholds->add_option("--theta", o.theta, "Contact threshold");
        thresholds->add_option("--d", o.d_range, "Range a..b (default 2..9)");
        thresholds->add_option("--refinement", o.refinement, "general | theta2 | theta3");
        thresholds->add_option("--format", o.format, "csv");
        thresholds->add_flag("--check-paper-table", o.check_paper_table, "Compare against the published table");

        verify_bounds = app.add_subcommand("verify-bounds", "Run the numeric inequality suite");
        common(verify_bounds);
        verify_bounds->add_flag("--list", o.list, "List checks without running them");
        verify_bounds->add_option("--perturb", o.perturb, "Tighten every comparison by this relative amount");

        witness = app.add_subcommand("witness", "Extract and re-verify a witness subtree");
        common(witness);
        params(witness);
        witness->add_option("--kind", o.kind, "structure | excitation");
        witness->add_option("--variant", o.variant, "rigid-fort | strongly-rigid-fort | rainbow");
        witness->add_option("--topology", o.topology, "regular | dary");
        witness->add_option("--depth", o.depth, "Tree depth (structure witnesses)");
        witness->add_option("--radius", o.radius, "Ball radius (excitation witnesses)");
        witness->add_option("--t", o.t, "Excitation time");
        witness->add_option("--seed", o.seed, "Master seed");
        witness->add_option("--trial", o.trial, "Trial index");
        witness->add_option("--forced", o.forced, "none | all-zero | depth-mod-kappa | monochrome");

        experiment = app.add_subcommand("experiment", "Run a Monte Carlo experiment and write its report");
        common(experiment);
        params(experiment);
        experiment->add_option("--name", o.name,
                               "marked-root | excitation | tau-tail | fluctuation-window | lightcone");
        experiment->add_option("--variant", o.variant, "Structure variant (marked-root)");
        experiment->add_option("--topology", o.topology, "dary | regular (marked-root)");
        experiment->add_option("--depth", o.depth, "Tree depth (marked-root)");
        experiment->add_option("--radius", o.radius, "Ball radius");
        experiment->add_option("--t", o.t, "Time (excitation)");
        experiment->add_option("--trials", o.trials, "Number of trials");
        experiment->add_option("--seed", o.seed, "Master seed");
        experiment->add_option("--workers", o.workers, "Worker threads");
        experiment->add_option("--forced", o.forced, "none | all-zero | depth-mod-kappa | monochrome");
        experiment->add_option("--format", o.format, "json | csv");
    }

    void parse(const std::vector<std::string>& args) {
        std::vector<std::string> storage{"ccatree"};
        storage.insert(storage.end(), args.begin(), args.end());
        std::vector<char*> argv;
        for (auto& s : storage) argv.push_back(s.data());
        app.parse(static_cast<int>(argv.size()), argv.data());
    }

    [[nodiscard]] CLI::App* active() const {
        for (auto* s : {simulate, fixed_point, phase_diagram, thresholds, verify_bounds, witness, experiment}) {
            if (s->parsed()) return s;
        }
        return nullptr;
    }
};

} // namespace detail

// Runs the CLI on `args` (without the program name).
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    auto parser = std::make_unique<detail::Parser>();
    try {
        parser->parse(args);
        if (!parser->o.config.empty()) {
            auto tokens = detail::config_tokens(parser->active(), parser->o.config);
            if (!tokens.empty()) {
                std::vector<std::string> merged = args;
                merged.insert(merged.end(), tokens.begin(), tokens.end());
                parser = std::make_unique<detail::Parser>();
                parser->parse(merged);
            }
        }
    } catch (const CLI::ParseError& e) {
        const int code = parser->app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    }

    const auto& o = parser->o;
    auto* sub = parser->active();
    try {
        if (sub == parser->simulate) return detail::cmd_simulate(sub, o, out);
        if (sub == parser->fixed_point) return detail::cmd_fixed_point(sub, o, out);
        if (sub == parser->phase_diagram) return detail::cmd_phase_diagram(sub, o, out);
        if (sub == parser->thresholds) return detail::cmd_thresholds(sub, o, out, err);
        if (sub == parser->verify_bounds) return detail::cmd_verify_bounds(o, out, err);
        if (sub == parser->witness) return detail::cmd_witness(sub, o, out, err);
        if (sub == parser->experiment) return detail::cmd_experiment(sub, o, out, err);
        err << "error: no subcommand\n";
        return kConfigError;
    } catch (const NoWitness& e) {
        err << "no witness: " << e.what() << "\n";
        return kNoWitness;
    } catch (const InternalError& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternal;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}

} // namespace ccatree::cli
