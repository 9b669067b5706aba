#pragma once

// Seeded Monte-Carlo campaigns comparing simulation and structure detection
// against the fixed-point recursions and bounds. Trials are independent work
// items keyed by trial index, so a report is identical for any worker count.

#include "ccatree/dynamics.hpp"
#include "ccatree/errors.hpp"
#include "ccatree/numerics.hpp"
#include "ccatree/parallel.hpp"
#include "ccatree/structures.hpp"
#include "ccatree/tree.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace ccatree {

inline constexpr int kReportFormatVersion = 1;
inline constexpr double kWilson95 = 1.959963984540054;
inline constexpr double kAssertSigmas = 4.0;

// Stream tag for colors redrawn outside the light cone.
inline constexpr std::uint64_t kResampleStream = 1;

struct Interval {
    double low = 0.0;
    double high = 1.0;
};

inline Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z) {
    if (trials <= 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    // Endpoints are exact at the boundary counts; the formula leaves roundoff there.
    return {successes == 0 ? 0.0 : std::max(0.0, centre - half), successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

enum class ForcedColoring { none, all_zero, depth_mod_kappa, monochrome };

inline std::string_view to_string(ForcedColoring f) {
    switch (f) {
    case ForcedColoring::all_zero: return "all-zero";
    case ForcedColoring::depth_mod_kappa: return "depth-mod-kappa";
    case ForcedColoring::monochrome: return "monochrome";
    default: return "none";
    }
}

inline ForcedColoring forced_coloring_from_string(std::string_view s) {
    if (s == "none") return ForcedColoring::none;
    if (s == "all-zero") return ForcedColoring::all_zero;
    if (s == "depth-mod-kappa") return ForcedColoring::depth_mod_kappa;
    if (s == "monochrome") return ForcedColoring::monochrome;
    throw ParameterError("unknown forced coloring '" + std::string(s) + "'");
}

// Debug hook: replaces the sampled initial coloring by a constructed one.
inline void apply_forced(const TreeTopology& topo, ForcedColoring f, int kappa, std::span<std::uint8_t> out) {
    switch (f) {
    case ForcedColoring::all_zero:
    case ForcedColoring::monochrome: std::fill(out.begin(), out.end(), std::uint8_t{0}); break;
    case ForcedColoring::depth_mod_kappa:
        for (int s = 0; s <= topo.depth(); ++s) {
            const auto band = topo.level(s);
            std::fill(out.begin() + band.first, out.begin() + band.last, static_cast<std::uint8_t>(s % kappa));
        }
        break;
    default: break;
    }
}

struct RunOptions {
    int workers = 1;
    ForcedColoring forced = ForcedColoring::none;
};

// Initial coloring for one trial, honoring the forced-coloring hook.
inline void initial_colors(const TreeTopology& topo, int kappa, std::uint64_t seed, std::uint64_t trial,
                           ForcedColoring forced, std::span<std::uint8_t> out) {
    if (forced == ForcedColoring::none) {
        fill_uniform_colors(out, kappa, seed, trial);
    } else {
        apply_forced(topo, forced, kappa, out);
    }
}

// ---------------------------------------------------------------------------
// Report types

struct Metric {
    std::string name;
    std::int64_t successes = 0;
    std::int64_t trials = 0;
    double estimate = 0.0;
    double std_error = 0.0;
    double wilson_low = 0.0;
    double wilson_high = 1.0;
    std::optional<double> theory;
    std::string theory_label;
    std::string assertion;          // empty when the metric carries no check
    std::optional<bool> passed;
    std::string basis = "all-trials";

    friend bool operator==(const Metric&, const Metric&) = default;
};

struct ExperimentParams {
    std::string model;
    std::optional<std::string> variant;
    std::string topology;
    int d = 0;
    int theta = 0;
    int kappa = 0;
    int depth = 0;
    int horizon = 0;
    std::optional<int> t;
    std::int64_t trials = 0;
    std::uint64_t master_seed = 0;
    std::string forced = "none";

    friend bool operator==(const ExperimentParams&, const ExperimentParams&) = default;
};

struct ExperimentReport {
    std::string experiment;
    ExperimentParams params;
    std::vector<Metric> metrics;
    std::int64_t censored = 0;
    double wall_time_s = 0.0;
    int version = kReportFormatVersion;

    [[nodiscard]] bool all_passed() const {
        return std::all_of(metrics.begin(), metrics.end(), [](const Metric& m) { return m.passed.value_or(true); });
    }
    [[nodiscard]] const Metric& metric(std::string_view name) const {
        for (const auto& m : metrics) {
            if (m.name == name) return m;
        }
        throw ParameterError("report has no metric '" + std::string(name) + "'");
    }

    friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

inline Metric make_metric(std::string name, std::int64_t successes, std::int64_t trials) {
    Metric m;
    m.name = std::move(name);
    m.successes = successes;
    m.trials = trials;
    const double n = static_cast<double>(trials);
    m.estimate = trials > 0 ? static_cast<double>(successes) / n : 0.0;
    m.std_error = trials > 0 ? std::sqrt(m.estimate * (1.0 - m.estimate) / n) : 0.0;
    const auto ci = wilson_interval(successes, trials, kWilson95);
    m.wilson_low = ci.low;
    m.wilson_high = ci.high;
    return m;
}

// Theory value inside the z = 4 Wilson interval of the estimate.
inline void assert_within_wilson(Metric& m, double theory, std::string label) {
    m.theory = theory;
    m.theory_label = std::move(label);
    const auto ci = wilson_interval(m.successes, m.trials, kAssertSigmas);
    m.assertion = "theory within 4-sigma Wilson interval";
    m.passed = theory >= ci.low && theory <= ci.high;
}

inline void assert_at_most(Metric& m, double bound, std::string label) {
    m.theory = bound;
    m.theory_label = std::move(label);
    m.assertion = "estimate <= theory + 4*stderr";
    m.passed = m.estimate <= bound + kAssertSigmas * m.std_error;
}

inline void assert_at_least(Metric& m, double bound, std::string label) {
    m.theory = bound;
    m.theory_label = std::move(label);
    m.assertion = "estimate >= theory - 4*stderr";
    m.passed = m.estimate >= bound - kAssertSigmas * m.std_error;
}

namespace detail {

class Stopwatch {
public:
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void check_trials(std::int64_t trials) {
    if (trials < 1) throw ParameterError("trials must be >= 1");
}

inline ExperimentParams base_params(Model model, TreeKind kind, int d, int theta, int kappa, int depth, int horizon,
                                    std::int64_t trials, std::uint64_t seed, const RunOptions& opts) {
    ExperimentParams p;
    p.model = std::string(to_string(model));
    p.topology = std::string(to_string(kind));
    p.d = d;
    p.theta = theta;
    p.kappa = kappa;
    p.depth = depth;
    p.horizon = horizon;
    p.trials = trials;
    p.master_seed = seed;
    p.forced = std::string(to_string(opts.forced));
    return p;
}

// Per-worker simulation scratch for one topology.
struct Workspace {
    explicit Workspace(const TreeTopology& topo)
        : sim(topo), colors(static_cast<std::size_t>(topo.node_count())) {}
    Simulator sim;
    std::vector<std::uint8_t> colors;
    std::vector<std::uint8_t> flags;
};

inline std::vector<Workspace> make_workspaces(const TreeTopology& topo, int workers) {
    std::vector<Workspace> ws;
    ws.reserve(static_cast<std::size_t>(std::max(1, workers)));
    for (int i = 0; i < std::max(1, workers); ++i) ws.emplace_back(topo);
    return ws;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Experiments

// Fraction of uniformly colored truncations whose root is marked, against
// 1 - y_depth from the matching recursion.
inline ExperimentReport estimate_marked_root_prob(StructureVariant variant, int d, int theta, int kappa, TreeKind kind,
                                                  int depth, std::int64_t trials, std::uint64_t seed,
                                                  const RunOptions& opts = {}) {
    detail::Stopwatch clock;
    detail::check_trials(trials);
    validate_kappa(kappa);
    const auto topo = build_tree(kind, d, depth);
    const StructureQuery query{variant, theta};
    query.validate(topo);

    auto ws = detail::make_workspaces(topo, opts.workers);
    std::vector<std::uint8_t> hit(static_cast<std::size_t>(trials));
    parallel_for(hit.size(), opts.workers, [&](int w, std::size_t i) {
        auto& s = ws[static_cast<std::size_t>(w)];
        initial_colors(topo, kappa, seed, i, opts.forced, s.colors);
        hit[i] = root_marked(topo, s.colors, kappa, query, s.flags) ? 1 : 0;
    });

    ExperimentReport r;
    r.experiment = "marked-root";
    r.params = detail::base_params(Model::cca, kind, d, theta, kappa, depth, 0, trials, seed, opts);
    r.params.model = "none";
    r.params.variant = std::string(to_string(variant));
    auto m = make_metric("root_marked", std::count(hit.begin(), hit.end(), std::uint8_t{1}), trials);

    double fail = 0.0;
    std::string label;
    const bool kleene = kind == TreeKind::dary_ball && theta >= 2 && d >= theta &&
                        (variant == StructureVariant::rigid_fort || variant == StructureVariant::rainbow);
    if (kleene) {
        const auto map = variant == StructureVariant::rigid_fort ? FixedPointMap::b1 : FixedPointMap::b2;
        fail = kleene_iterate({map, d, theta, kappa}, depth);
        label = std::string("1 - y_depth (Kleene iterate of ") + std::string(to_string(map)) + ")";
    } else {
        fail = root_failure_probability(variant, kind, d, theta, kappa, depth);
        label = "1 - root failure probability (level recursion)";
    }
    if (opts.forced == ForcedColoring::none) {
        assert_within_wilson(m, 1.0 - fail, label);
    } else {
        m.theory = 1.0 - fail;
        m.theory_label = label + "; not asserted for forced colorings";
    }
    r.metrics.push_back(std::move(m));
    r.wall_time_s = clock.seconds();
    return r;
}

// P(gamma_t(root) = 1) on the regular ball, against the first-moment bound.
inline ExperimentReport estimate_excitation_prob(int d, int theta, int kappa, int radius, int t, std::int64_t trials,
                                                 std::uint64_t seed, const RunOptions& opts = {}) {
    detail::Stopwatch clock;
    detail::check_trials(trials);
    if (t < 0) throw ParameterError("t must be >= 0");
    if (t > radius) throw LightconeViolation("t=" + std::to_string(t) + " exceeds the radius " + std::to_string(radius));
    const ModelParams params{Model::ghm, kappa, theta};
    params.validate();
    const auto topo = build_regular_ball(d, radius);

    auto ws = detail::make_workspaces(topo, opts.workers);
    std::vector<std::uint8_t> hit(static_cast<std::size_t>(trials));
    parallel_for(hit.size(), opts.workers, [&](int w, std::size_t i) {
        auto& s = ws[static_cast<std::size_t>(w)];
        initial_colors(topo, kappa, seed, i, opts.forced, s.colors);
        s.sim.load(s.colors);
        for (int k = 0; k < t; ++k) s.sim.step(params);
        hit[i] = s.sim.root_color() == 1 ? 1 : 0;
    });

    ExperimentReport r;
    r.experiment = "excitation";
    r.params = detail::base_params(Model::ghm, TreeKind::regular_ball, d, theta, kappa, radius, t, trials, seed, opts);
    r.params.t = t;
    const auto successes = std::count(hit.begin(), hit.end(), std::uint8_t{1});
    auto m = make_metric("root_excited_at_t", successes, trials);
    const bool random = opts.forced == ForcedColoring::none;
    if (t == 0) {
        if (random) assert_within_wilson(m, 1.0 / kappa, "1/kappa (initial measure)");
    } else if (theta > d + 1) {
        if (random) assert_at_most(m, 0.0, "0 (threshold exceeds degree)");
    } else if (d >= theta && theta >= 2) {
        if (random) assert_at_most(m, std::exp(excitation_union_bound(d, theta, kappa, t)), "first-moment union bound");
    }
    r.metrics.push_back(std::move(m));
    if (t == 1 && random) {
        // Exact: root rests at time 0 and at least theta of its d+1 neighbors are excited.
        auto exact = make_metric("root_excited_at_t_exact_check", successes, trials);
        assert_within_wilson(exact, binom_tail(d + 1, 1.0 / kappa, theta) / kappa,
                             "exact (1/kappa) P(Binom(d+1, 1/kappa) >= theta)");
        r.metrics.push_back(std::move(exact));
    }
    r.wall_time_s = clock.seconds();
    return r;
}

// Survival P(tau > n), n = 0..radius-1, where tau is the last root excitation
// time, observed inside the light cone (horizon = radius).
inline ExperimentReport estimate_tau_tail(int d, int theta, int kappa, int radius, std::int64_t trials,
                                          std::uint64_t seed, const RunOptions& opts = {}) {
    detail::Stopwatch clock;
    detail::check_trials(trials);
    const ModelParams params{Model::ghm, kappa, theta};
    params.validate();
    const auto topo = build_regular_ball(d, radius);
    const int horizon = radius;

    auto ws = detail::make_workspaces(topo, opts.workers);
    std::vector<int> last(static_cast<std::size_t>(trials));
    parallel_for(last.size(), opts.workers, [&](int w, std::size_t i) {
        auto& s = ws[static_cast<std::size_t>(w)];
        initial_colors(topo, kappa, seed, i, opts.forced, s.colors);
        s.sim.load(s.colors);
        int seen = s.sim.root_color() == 1 ? 0 : -1;
        for (int k = 1; k <= horizon; ++k) {
            s.sim.step(params);
            if (s.sim.root_color() == 1) seen = k;
        }
        last[i] = seen;
    });

    ExperimentReport r;
    r.experiment = "tau-tail";
    r.params = detail::base_params(Model::ghm, TreeKind::regular_ball, d, theta, kappa, radius, horizon, trials, seed,
                                   opts);
    r.censored = std::count(last.begin(), last.end(), horizon);

    const bool random = opts.forced == ForcedColoring::none;
    const bool fixation = theta >= 2 && cond_fixation(d, theta, kappa).holds();
    const bool ghm_small = theta >= 2 && d >= theta && cond_ghm_small_theta(d, theta, kappa).holds();
    {
        auto ever = make_metric("root_ever_excited", std::count_if(last.begin(), last.end(), [](int x) { return x >= 0; }),
                                trials);
        ever.basis = "all-trials; P(tau >= 0) within the horizon";
        r.metrics.push_back(std::move(ever));
    }
    for (int n = 0; n < horizon; ++n) {
        const auto successes = std::count_if(last.begin(), last.end(), [n](int x) { return x > n; });
        auto m = make_metric("tau_gt_" + std::to_string(n), successes, trials);
        m.basis = "all-trials; excitation observed in (n, horizon]";
        std::optional<double> bound;
        std::string label;
        if (fixation) {
            bound = fixation_tail_bound(n, d);
            label = "d^-n";
        }
        if (ghm_small && n >= kappa) {
            const double b = ghm_tail_bound(n, d, theta, kappa);
            if (!bound || b < *bound) {
                bound = b;
                label = "2 C(d+1,theta) exp(-theta^(n-kappa+1))";
            }
        }
        if (bound && random) assert_at_most(m, *bound, label);
        r.metrics.push_back(std::move(m));
    }
    r.wall_time_s = clock.seconds();
    return r;
}

// Fraction of CCA runs whose root advances at every step t = 1..radius,
// against the rainbow lower bound 1 - y_radius of the B2 recursion.
inline ExperimentReport fluctuation_window(int d, int theta, int kappa, int radius, std::int64_t trials,
                                           std::uint64_t seed, const RunOptions& opts = {}) {
    detail::Stopwatch clock;
    detail::check_trials(trials);
    const ModelParams params{Model::cca, kappa, theta};
    params.validate();
    const auto topo = build_regular_ball(d, radius);

    auto ws = detail::make_workspaces(topo, opts.workers);
    std::vector<std::uint8_t> hit(static_cast<std::size_t>(trials));
    parallel_for(hit.size(), opts.workers, [&](int w, std::size_t i) {
        auto& s = ws[static_cast<std::size_t>(w)];
        initial_colors(topo, kappa, seed, i, opts.forced, s.colors);
        s.sim.load(s.colors);
        bool every = true;
        for (int k = 1; k <= radius && every; ++k) {
            const int before = s.sim.root_color();
            s.sim.step(params);
            every = s.sim.root_color() == (before + 1) % kappa;
        }
        hit[i] = every ? 1 : 0;
    });

    ExperimentReport r;
    r.experiment = "fluctuation-window";
    r.params = detail::base_params(Model::cca, TreeKind::regular_ball, d, theta, kappa, radius, radius, trials, seed,
                                   opts);
    auto m = make_metric("root_advances_every_step", std::count(hit.begin(), hit.end(), std::uint8_t{1}), trials);
    if (opts.forced == ForcedColoring::none && theta >= 2 && d >= theta) {
        const double y = kleene_iterate({FixedPointMap::b2, d, theta, kappa}, radius);
        assert_at_least(m, 1.0 - y, "1 - y_radius (Kleene iterate of b2)");
    }
    r.metrics.push_back(std::move(m));
    r.wall_time_s = clock.seconds();
    return r;
}

// Redraws every color beyond depth radius-1 and checks that the root's
// trajectory is unchanged up to t = radius-1, for both models.
inline ExperimentReport lightcone_check(int d, int theta, int kappa, int radius, std::int64_t trials,
                                        std::uint64_t seed, const RunOptions& opts = {}) {
    detail::Stopwatch clock;
    detail::check_trials(trials);
    if (radius < 1) throw ParameterError("light-cone check needs radius >= 1");
    validate_kappa(kappa);
    const int inner = radius - 1;
    const auto topo = build_regular_ball(d, radius);
    const auto outside = static_cast<std::size_t>(topo.ball(inner).last);

    auto ws_a = detail::make_workspaces(topo, opts.workers);
    auto ws_b = detail::make_workspaces(topo, opts.workers);
    std::vector<std::uint8_t> bad_cca(static_cast<std::size_t>(trials)), bad_ghm(bad_cca.size());
    parallel_for(bad_cca.size(), opts.workers, [&](int w, std::size_t i) {
        auto& a = ws_a[static_cast<std::size_t>(w)];
        auto& b = ws_b[static_cast<std::size_t>(w)];
        initial_colors(topo, kappa, seed, i, opts.forced, a.colors);
        b.colors = a.colors;
        fill_uniform_colors(std::span(b.colors).subspan(outside), kappa, seed, i, kResampleStream, outside);
        for (Model model : {Model::cca, Model::ghm}) {
            const ModelParams params{model, kappa, theta};
            a.sim.load(a.colors);
            b.sim.load(b.colors);
            bool same = a.sim.root_color() == b.sim.root_color();
            for (int k = 1; k <= inner && same; ++k) {
                a.sim.step(params);
                b.sim.step(params);
                same = a.sim.root_color() == b.sim.root_color();
            }
            (model == Model::cca ? bad_cca : bad_ghm)[i] = same ? 0 : 1;
        }
    });

    ExperimentReport r;
    r.experiment = "lightcone";
    r.params = detail::base_params(Model::cca, TreeKind::regular_ball, d, theta, kappa, radius, inner, trials, seed,
                                   opts);
    r.params.model = "cca+ghm";
    for (auto [name, flags] : {std::pair{"violations_cca", &bad_cca}, std::pair{"violations_ghm", &bad_ghm}}) {
        auto m = make_metric(name, std::count(flags->begin(), flags->end(), std::uint8_t{1}), trials);
        m.theory = 0.0;
        m.theory_label = "no dependence beyond the light cone";
        m.assertion = "zero violations";
        m.passed = m.successes == 0;
        r.metrics.push_back(std::move(m));
    }
    r.wall_time_s = clock.seconds();
    if (!r.all_passed()) {
        throw LightconeViolation("root trajectory changed after resampling outside the light cone (" +
                                 std::to_string(r.metrics[0].successes + r.metrics[1].successes) + " violations)");
    }
    return r;
}

// Per-step root statistics for a batch of runs (used by `simulate`).
// GHM: P(root excited at t), t = 0..horizon. CCA: P(root changes at step t),
// t = 1..horizon, plus the fraction changing at every step.
inline ExperimentReport root_statistics(Model model, int d, int theta, int kappa, int radius, int horizon,
                                        std::int64_t trials, std::uint64_t seed, const RunOptions& opts = {}) {
    detail::Stopwatch clock;
    detail::check_trials(trials);
    if (horizon < 0) throw ParameterError("horizon must be >= 0");
    if (horizon > radius) throw LightconeViolation("horizon exceeds the radius");
    const ModelParams params{model, kappa, theta};
    params.validate();
    const auto topo = build_regular_ball(d, radius);
    const auto width = static_cast<std::size_t>(horizon) + 1;

    auto ws = detail::make_workspaces(topo, opts.workers);
    std::vector<std::uint8_t> events(static_cast<std::size_t>(trials) * width);
    parallel_for(static_cast<std::size_t>(trials), opts.workers, [&](int w, std::size_t i) {
        auto& s = ws[static_cast<std::size_t>(w)];
        initial_colors(topo, kappa, seed, i, opts.forced, s.colors);
        s.sim.load(s.colors);
        auto* row = events.data() + i * width;
        row[0] = model == Model::ghm ? (s.sim.root_color() == 1) : 0;
        for (int k = 1; k <= horizon; ++k) {
            const int before = s.sim.root_color();
            s.sim.step(params);
            row[k] = model == Model::ghm ? (s.sim.root_color() == 1) : (s.sim.root_color() != before);
        }
    });

    ExperimentReport r;
    r.experiment = "root-statistics";
    r.params = detail::base_params(model, TreeKind::regular_ball, d, theta, kappa, radius, horizon, trials, seed, opts);
    auto column = [&](std::size_t k) {
        std::int64_t c = 0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(trials); ++i) c += events[i * width + k];
        return c;
    };
    if (model == Model::ghm) {
        for (std::size_t k = 0; k < width; ++k) r.metrics.push_back(make_metric("root_excited_t" + std::to_string(k), column(k), trials));
        std::int64_t censored = 0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(trials); ++i) censored += events[i * width + width - 1];
        r.censored = censored;
    } else {
        for (std::size_t k = 1; k < width; ++k) r.metrics.push_back(make_metric("root_changed_step" + std::to_string(k), column(k), trials));
        std::int64_t every = 0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(trials); ++i) {
            bool all = true;
            for (std::size_t k = 1; k < width; ++k) all = all && events[i * width + k];
            every += all;
        }
        r.metrics.push_back(make_metric("root_changed_every_step", every, trials));
    }
    r.wall_time_s = clock.seconds();
    return r;
}

// ---------------------------------------------------------------------------
// Persistence

using ordered_json = nlohmann::ordered_json;

inline ordered_json to_json(const ExperimentReport& r, bool include_wall_time = true) {
    ordered_json params;
    params["model"] = r.params.model;
    if (r.params.variant) params["variant"] = *r.params.variant;
    params["topology"] = r.params.topology;
    params["d"] = r.params.d;
    params["theta"] = r.params.theta;
    params["kappa"] = r.params.kappa;
    params["depth"] = r.params.depth;
    params["horizon"] = r.params.horizon;
    if (r.params.t) params["t"] = *r.params.t;
    params["trials"] = r.params.trials;
    params["master_seed"] = r.params.master_seed;
    params["forced"] = r.params.forced;

    ordered_json metrics = ordered_json::array();
    for (const auto& m : r.metrics) {
        ordered_json j;
        j["name"] = m.name;
        j["successes"] = m.successes;
        j["trials"] = m.trials;
        j["estimate"] = m.estimate;
        j["stderr"] = m.std_error;
        j["wilson95"] = {m.wilson_low, m.wilson_high};
        j["theory"] = m.theory ? ordered_json(*m.theory) : ordered_json(nullptr);
        j["theory_label"] = m.theory_label;
        j["assertion"] = m.assertion;
        j["passed"] = m.passed ? ordered_json(*m.passed) : ordered_json(nullptr);
        j["basis"] = m.basis;
        metrics.push_back(std::move(j));
    }

    ordered_json out;
    out["experiment"] = r.experiment;
    out["version"] = r.version;
    out["seed"] = r.params.master_seed;
    out["params"] = std::move(params);
    out["metrics"] = std::move(metrics);
    out["censored"] = r.censored;
    if (include_wall_time) out["wall_time_s"] = r.wall_time_s;
    return out;
}

// Serialized report text; two runs with the same inputs produce identical
// strings when wall time is excluded.
inline std::string report_json_string(const ExperimentReport& r, bool include_wall_time = true) {
    return to_json(r, include_wall_time).dump(2) + "\n";
}

inline ExperimentReport report_from_json(const nlohmann::json& j) {
    try {
        const int version = j.at("version").get<int>();
        if (version > kReportFormatVersion) {
            throw VersionError("report format version " + std::to_string(version) + " is newer than supported version " +
                               std::to_string(kReportFormatVersion));
        }
        if (version < 1) throw VersionError("invalid report format version " + std::to_string(version));
        ExperimentReport r;
        r.version = version;
        r.experiment = j.at("experiment").get<std::string>();
        const auto& p = j.at("params");
        r.params.model = p.at("model").get<std::string>();
        if (p.contains("variant")) r.params.variant = p.at("variant").get<std::string>();
        r.params.topology = p.at("topology").get<std::string>();
        r.params.d = p.at("d").get<int>();
        r.params.theta = p.at("theta").get<int>();
        r.params.kappa = p.at("kappa").get<int>();
        r.params.depth = p.at("depth").get<int>();
        r.params.horizon = p.at("horizon").get<int>();
        if (p.contains("t")) r.params.t = p.at("t").get<int>();
        r.params.trials = p.at("trials").get<std::int64_t>();
        r.params.master_seed = j.at("seed").get<std::uint64_t>();
        r.params.forced = p.value("forced", std::string("none"));
        for (const auto& jm : j.at("metrics")) {
            Metric m;
            m.name = jm.at("name").get<std::string>();
            m.successes = jm.at("successes").get<std::int64_t>();
            m.trials = jm.at("trials").get<std::int64_t>();
            m.estimate = jm.at("estimate").get<double>();
            m.std_error = jm.at("stderr").get<double>();
            m.wilson_low = jm.at("wilson95").at(0).get<double>();
            m.wilson_high = jm.at("wilson95").at(1).get<double>();
            if (!jm.at("theory").is_null()) m.theory = jm.at("theory").get<double>();
            m.theory_label = jm.at("theory_label").get<std::string>();
            m.assertion = jm.at("assertion").get<std::string>();
            if (!jm.at("passed").is_null()) m.passed = jm.at("passed").get<bool>();
            m.basis = jm.at("basis").get<std::string>();
            r.metrics.push_back(std::move(m));
        }
        r.censored = j.at("censored").get<std::int64_t>();
        r.wall_time_s = j.value("wall_time_s", 0.0);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed report: ") + e.what());
    }
}

namespace detail {
inline std::string csv_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}
template <class T>
std::string csv_optional(const std::optional<T>& v) {
    if (!v) return "";
    if constexpr (std::is_same_v<T, double>) return csv_number(*v);
    else if constexpr (std::is_same_v<T, bool>) return *v ? "true" : "false";
    else return std::to_string(*v);
}
inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}
} // namespace detail

// Flat table, one row per metric with the parameter columns repeated. Lossy:
// it is not read back.
inline std::string report_csv_string(const ExperimentReport& r) {
    std::ostringstream os;
    os << "experiment,version,model,variant,topology,d,theta,kappa,depth,horizon,t,trials,seed,forced,censored,"
          "metric,successes,metric_trials,estimate,stderr,wilson95_low,wilson95_high,theory,theory_label,"
          "assertion,passed,basis\n";
    for (const auto& m : r.metrics) {
        os << detail::csv_quote(r.experiment) << ',' << r.version << ',' << r.params.model << ','
           << r.params.variant.value_or("") << ',' << r.params.topology << ',' << r.params.d << ',' << r.params.theta
           << ',' << r.params.kappa << ',' << r.params.depth << ',' << r.params.horizon << ','
           << detail::csv_optional(r.params.t) << ',' << r.params.trials << ',' << r.params.master_seed << ','
           << r.params.forced << ',' << r.censored << ',' << detail::csv_quote(m.name) << ',' << m.successes << ','
           << m.trials << ',' << detail::csv_number(m.estimate) << ',' << detail::csv_number(m.std_error) << ','
           << detail::csv_number(m.wilson_low) << ',' << detail::csv_number(m.wilson_high) << ','
           << detail::csv_optional(m.theory) << ',' << detail::csv_quote(m.theory_label) << ','
           << detail::csv_quote(m.assertion) << ',' << detail::csv_optional(m.passed) << ','
           << detail::csv_quote(m.basis) << '\n';
    }
    return os.str();
}

enum class ReportFormat { json, csv };

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("write to '" + path + "' failed");
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void persist(const ExperimentReport& r, const std::string& path, ReportFormat format) {
    write_text_file(path, format == ReportFormat::json ? report_json_string(r) : report_csv_string(r));
}

inline ExperimentReport load(const std::string& path) {
    const auto text = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("'" + path + "' is not valid JSON: " + e.what());
    }
    return report_from_json(j);
}

} // namespace ccatree
