#pragma once

// Synchronous cyclic cellular automaton (CCA) and Greenberg-Hastings (GHM)
// updates on tree truncations.

#include "ccatree/errors.hpp"
#include "ccatree/tree.hpp"

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ccatree {

enum class Model { cca, ghm };

inline std::string_view to_string(Model m) { return m == Model::cca ? "cca" : "ghm"; }

inline Model model_from_string(std::string_view s) {
    if (s == "cca" || s == "CCA") return Model::cca;
    if (s == "ghm" || s == "GHM") return Model::ghm;
    throw ParameterError("unknown model '" + std::string(s) + "' (expected cca|ghm)");
}

struct ModelParams {
    Model model = Model::cca;
    int kappa = 3;
    int theta = 2;

    // theta = 1 is accepted for exploration but lies outside the studied regime.
    [[nodiscard]] bool in_theory_regime() const noexcept { return theta >= 2; }

    void validate() const {
        validate_kappa(kappa);
        if (theta < 1) throw ParameterError("theta must be >= 1 (got " + std::to_string(theta) + ")");
    }
};

struct StepStats {
    std::int64_t changed = 0;  // nodes whose color differs from the input
    std::int64_t excited = 0;  // nodes with color 1 in the output
};

namespace detail {

inline void check_buffers(const TreeTopology& topo, std::span<const std::uint8_t> in, std::span<std::uint8_t> out) {
    const auto n = static_cast<std::size_t>(topo.node_count());
    if (in.size() != n || out.size() != n) throw TopologyMismatch("state buffer size does not match the topology");
    if (in.data() == out.data()) throw PreconditionError("synchronous update needs distinct input and output buffers");
}

// Applies `rule(v, color, count_of_matches)` where matches are counted by
// `target(color)` over the truncation neighbors of v. Bands are scanned in
// order; children of a band are a contiguous run of the next band.
template <class Target, class Rule>
StepStats sweep(const TreeTopology& topo, std::span<const std::uint8_t> in, std::span<std::uint8_t> out, int theta,
                Target target, Rule rule) {
    StepStats stats;
    for (int s = 0; s <= topo.depth(); ++s) {
        const auto band = topo.level(s);
        for (NodeId v = band.first; v < band.last; ++v) {
            const int c = in[static_cast<std::size_t>(v)];
            const int want = target(c);
            int count = 0;
            if (want >= 0) {
                if (s > 0 && in[static_cast<std::size_t>(topo.parent_at(v, s))] == want) ++count;
                const auto kids = topo.children_at(v, s);
                for (NodeId w = kids.first; w < kids.last && count < theta; ++w) {
                    count += in[static_cast<std::size_t>(w)] == want;
                }
            }
            const auto next = static_cast<std::uint8_t>(rule(c, count));
            out[static_cast<std::size_t>(v)] = next;
            stats.changed += next != c;
            stats.excited += next == 1;
        }
    }
    return stats;
}

} // namespace detail

// One synchronous CCA update: v advances to color+1 (mod kappa) iff at least
// theta neighbors hold that color.
inline StepStats cca_step(const TreeTopology& topo, std::span<const std::uint8_t> in, std::span<std::uint8_t> out,
                          int kappa, int theta) {
    detail::check_buffers(topo, in, out);
    return detail::sweep(
        topo, in, out, theta, [kappa](int c) { return c + 1 == kappa ? 0 : c + 1; },
        [kappa, theta](int c, int count) { return count >= theta ? (c + 1 == kappa ? 0 : c + 1) : c; });
}

// One synchronous GHM update: excited and refractory colors advance; a resting
// node becomes excited iff at least theta neighbors are excited.
inline StepStats ghm_step(const TreeTopology& topo, std::span<const std::uint8_t> in, std::span<std::uint8_t> out,
                          int kappa, int theta) {
    detail::check_buffers(topo, in, out);
    return detail::sweep(
        topo, in, out, theta, [](int c) { return c == 0 ? 1 : -1; },
        [kappa, theta](int c, int count) {
            if (c != 0) return c + 1 == kappa ? 0 : c + 1;
            return count >= theta ? 1 : 0;
        });
}

inline StepStats apply_step(const TreeTopology& topo, std::span<const std::uint8_t> in, std::span<std::uint8_t> out,
                            const ModelParams& params) {
    return params.model == Model::cca ? cca_step(topo, in, out, params.kappa, params.theta)
                                      : ghm_step(topo, in, out, params.kappa, params.theta);
}

inline Coloring cca_step(const TreeTopology& topo, const Coloring& c, int theta) {
    Coloring out{c.kappa, std::vector<std::uint8_t>(c.size())};
    cca_step(topo, c.colors, out.colors, c.kappa, theta);
    return out;
}

inline Coloring ghm_step(const TreeTopology& topo, const Coloring& c, int theta) {
    Coloring out{c.kappa, std::vector<std::uint8_t>(c.size())};
    ghm_step(topo, c.colors, out.colors, c.kappa, theta);
    return out;
}

// ---------------------------------------------------------------------------
// Trajectories

// Last time the root was excited within a run.
struct LastExcitation {
    enum class Kind { never, at, censored };
    Kind kind = Kind::never;
    int time = -1;  // -1 for never; the horizon for censored

    [[nodiscard]] static LastExcitation never() { return {}; }
    [[nodiscard]] static LastExcitation at(int t) { return {Kind::at, t}; }
    [[nodiscard]] static LastExcitation censored(int horizon) { return {Kind::censored, horizon}; }

    friend bool operator==(const LastExcitation&, const LastExcitation&) = default;
};

struct Trajectory {
    Model model = Model::cca;
    int horizon = 0;
    std::vector<int> root_colors;              // horizon + 1 entries
    std::vector<std::int64_t> excited_count;   // GHM: color-1 nodes at t; CCA: nodes changed at step t (0 at t=0)
    LastExcitation last_excited;               // GHM only
    int lightcone_valid_upto = 0;              // min(horizon, R)

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// Root excitation summary of a GHM trajectory.
inline LastExcitation last_excited_time(const Trajectory& traj) {
    if (traj.model != Model::ghm) throw ModelMismatch("last_excited_time requires a GHM trajectory");
    for (int t = traj.horizon; t >= 0; --t) {
        if (traj.root_colors[static_cast<std::size_t>(t)] == 1) {
            return t == traj.horizon ? LastExcitation::censored(t) : LastExcitation::at(t);
        }
    }
    return LastExcitation::never();
}

// Reusable double buffer for repeated runs on one topology.
class Simulator {
public:
    explicit Simulator(const TreeTopology& topo)
        : topo_(&topo), cur_(static_cast<std::size_t>(topo.node_count())), nxt_(cur_.size()) {}

    void load(std::span<const std::uint8_t> colors) {
        if (colors.size() != cur_.size()) throw TopologyMismatch("initial coloring does not match the topology");
        std::copy(colors.begin(), colors.end(), cur_.begin());
    }

    StepStats step(const ModelParams& params) {
        const auto stats = apply_step(*topo_, cur_, nxt_, params);
        cur_.swap(nxt_);
        return stats;
    }

    [[nodiscard]] std::span<const std::uint8_t> state() const noexcept { return cur_; }
    [[nodiscard]] std::span<std::uint8_t> mutable_state() noexcept { return cur_; }
    [[nodiscard]] int root_color() const noexcept { return cur_[0]; }

private:
    const TreeTopology* topo_;
    std::vector<std::uint8_t> cur_;
    std::vector<std::uint8_t> nxt_;
};

inline Trajectory run(const TreeTopology& topo, const Coloring& initial, const ModelParams& params, int horizon) {
    params.validate();
    if (initial.kappa != params.kappa) throw ParameterError("coloring kappa differs from model kappa");
    if (horizon < 0) throw ParameterError("horizon must be >= 0");

    Trajectory traj;
    traj.model = params.model;
    traj.horizon = horizon;
    traj.lightcone_valid_upto = std::min(horizon, topo.depth());
    traj.root_colors.reserve(static_cast<std::size_t>(horizon) + 1);
    traj.excited_count.reserve(static_cast<std::size_t>(horizon) + 1);

    Simulator sim(topo);
    sim.load(initial.colors);
    traj.root_colors.push_back(sim.root_color());
    traj.excited_count.push_back(params.model == Model::ghm
                                     ? std::count(initial.colors.begin(), initial.colors.end(), std::uint8_t{1})
                                     : 0);
    for (int t = 1; t <= horizon; ++t) {
        const auto stats = sim.step(params);
        traj.root_colors.push_back(sim.root_color());
        traj.excited_count.push_back(params.model == Model::ghm ? stats.excited : stats.changed);
    }
    if (params.model == Model::ghm) traj.last_excited = last_excited_time(traj);
    return traj;
}

// Configurations 0..steps (steps + 1 snapshots).
inline std::vector<Coloring> run_history(const TreeTopology& topo, const Coloring& initial, const ModelParams& params,
                                         int steps) {
    params.validate();
    std::vector<Coloring> history;
    history.reserve(static_cast<std::size_t>(steps) + 1);
    history.push_back(initial);
    Simulator sim(topo);
    sim.load(initial.colors);
    for (int t = 1; t <= steps; ++t) {
        sim.step(params);
        history.push_back({initial.kappa, {sim.state().begin(), sim.state().end()}});
    }
    return history;
}

// ---------------------------------------------------------------------------
// Fixation / periodicity detection

struct Fingerprint {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;

    friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

struct FingerprintHash {
    std::size_t operator()(const Fingerprint& f) const noexcept { return static_cast<std::size_t>(f.hi ^ (f.lo * 31)); }
};

inline Fingerprint fingerprint(std::span<const std::uint8_t> state) {
    std::uint64_t a = 0x243f6a8885a308d3ULL ^ state.size();
    std::uint64_t b = 0x13198a2e03707344ULL + state.size();
    std::size_t i = 0;
    for (; i + 8 <= state.size(); i += 8) {
        std::uint64_t w = 0;
        for (int k = 0; k < 8; ++k) w |= static_cast<std::uint64_t>(state[i + static_cast<std::size_t>(k)]) << (8 * k);
        a = rng::mix64(a ^ w);
        b = rng::mix64(b + (w ^ 0xa4093822299f31d0ULL));
    }
    std::uint64_t w = 0;
    for (int k = 0; i < state.size(); ++i, ++k) w |= static_cast<std::uint64_t>(state[i]) << (8 * k);
    return {rng::mix64(a ^ w ^ 0x082efa98ec4e6c89ULL), rng::mix64(b + w)};
}

struct FixationResult {
    enum class Kind { fixed, periodic, undecided };
    Kind kind = Kind::undecided;
    int step = -1;    // fixed: first t with config(t+1) == config(t); periodic: cycle entry
    int period = 0;   // 1 for fixed

    friend bool operator==(const FixationResult&, const FixationResult&) = default;
};

inline std::string_view to_string(FixationResult::Kind k) {
    switch (k) {
    case FixationResult::Kind::fixed: return "fixed";
    case FixationResult::Kind::periodic: return "periodic";
    default: return "undecided";
    }
}

// Runs up to max_steps updates and reports the first repeated configuration.
// Only fingerprints are stored; a fingerprint hit is confirmed by replaying
// the run up to the earlier step and comparing full configurations.
inline FixationResult detect_fixation(const TreeTopology& topo, const Coloring& initial, const ModelParams& params,
                                      int max_steps) {
    params.validate();
    if (max_steps < 1) throw ParameterError("max_steps must be >= 1");

    Simulator sim(topo);
    sim.load(initial.colors);
    std::vector<std::uint8_t> prev(initial.colors);
    std::unordered_multimap<Fingerprint, int, FingerprintHash> seen;
    seen.emplace(fingerprint(initial.colors), 0);

    auto replay = [&](int steps) {
        Simulator r(topo);
        r.load(initial.colors);
        for (int k = 0; k < steps; ++k) r.step(params);
        return std::vector<std::uint8_t>(r.state().begin(), r.state().end());
    };

    for (int t = 0; t < max_steps; ++t) {
        sim.step(params);
        const auto state = sim.state();
        if (std::equal(state.begin(), state.end(), prev.begin())) return {FixationResult::Kind::fixed, t, 1};
        const auto fp = fingerprint(state);
        const auto [lo, hi] = seen.equal_range(fp);
        for (auto it = lo; it != hi; ++it) {
            const auto earlier = replay(it->second);
            if (std::equal(state.begin(), state.end(), earlier.begin())) {
                return {FixationResult::Kind::periodic, it->second, t + 1 - it->second};
            }
        }
        seen.emplace(fp, t + 1);
        prev.assign(state.begin(), state.end());
    }
    return {};
}

} // namespace ccatree
