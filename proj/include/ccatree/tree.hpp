#pragma once

// Finite truncations of the rooted d-ary tree and of the (d+1)-regular tree,
// plus reproducible uniform colorings over them.
//
// Nodes are numbered in breadth-first order, so every depth band is a
// contiguous index range and the children of any node are adjacent. Parent
// and child lookups are closed-form in the band offsets; no per-node tables
// are materialized, which keeps a 5.8e7-node ball at one byte per node.

#include "ccatree/errors.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ccatree {

using NodeId = std::int32_t;

inline constexpr NodeId kNoParent = -1;
inline constexpr std::int64_t kMaxNodeCount = std::numeric_limits<std::int32_t>::max();
inline constexpr int kMaxKappa = 255;

enum class TreeKind { dary_ball, regular_ball };

inline std::string_view to_string(TreeKind kind) {
    return kind == TreeKind::dary_ball ? "dary" : "regular";
}

inline TreeKind tree_kind_from_string(std::string_view s) {
    if (s == "dary" || s == "dary-ball") return TreeKind::dary_ball;
    if (s == "regular" || s == "regular-ball") return TreeKind::regular_ball;
    throw ParameterError("unknown tree kind '" + std::string(s) + "' (expected dary|regular)");
}

// Half-open index range [first, last).
struct NodeRange {
    NodeId first = 0;
    NodeId last = 0;

    [[nodiscard]] NodeId size() const noexcept { return last - first; }
    [[nodiscard]] bool empty() const noexcept { return first == last; }
};

class TreeTopology {
public:
    [[nodiscard]] TreeKind kind() const noexcept { return kind_; }
    [[nodiscard]] int d() const noexcept { return d_; }
    // Truncation depth R (radius for regular balls).
    [[nodiscard]] int depth() const noexcept { return depth_; }
    [[nodiscard]] NodeId node_count() const noexcept { return level_begin_.back(); }
    [[nodiscard]] static constexpr NodeId root() noexcept { return 0; }

    // Nodes at distance s from the root.
    [[nodiscard]] NodeRange level(int s) const {
        return {level_begin_[static_cast<std::size_t>(s)], level_begin_[static_cast<std::size_t>(s) + 1]};
    }

    // Nodes within distance r of the root (a prefix of the index space).
    [[nodiscard]] NodeRange ball(int r) const {
        r = std::clamp(r, -1, depth_);
        return {0, level_begin_[static_cast<std::size_t>(r + 1)]};
    }

    [[nodiscard]] int node_depth(NodeId v) const {
        auto it = std::upper_bound(level_begin_.begin(), level_begin_.end(), v);
        return static_cast<int>(it - level_begin_.begin()) - 1;
    }

    [[nodiscard]] int root_child_count() const noexcept {
        return kind_ == TreeKind::dary_ball ? d_ : d_ + 1;
    }

    // Children of v, given its depth s (avoids the depth lookup in hot loops).
    [[nodiscard]] NodeRange children_at(NodeId v, int s) const noexcept {
        if (s >= depth_) return {0, 0};
        if (s == 0) return {1, static_cast<NodeId>(1 + root_child_count())};
        const auto lb = level_begin_[static_cast<std::size_t>(s)];
        const auto next = level_begin_[static_cast<std::size_t>(s) + 1];
        const NodeId first = next + (v - lb) * d_;
        return {first, first + d_};
    }

    [[nodiscard]] NodeRange children(NodeId v) const { return children_at(v, node_depth(v)); }

    [[nodiscard]] NodeId parent_at(NodeId v, int s) const noexcept {
        if (s == 0) return kNoParent;
        if (s == 1) return 0;
        const auto lb = level_begin_[static_cast<std::size_t>(s)];
        const auto prev = level_begin_[static_cast<std::size_t>(s) - 1];
        return prev + (v - lb) / d_;
    }

    [[nodiscard]] NodeId parent(NodeId v) const { return parent_at(v, node_depth(v)); }

    // Degree of v in the infinite tree this truncates.
    [[nodiscard]] int deg_inf(NodeId v) const noexcept {
        return (v == root() && kind_ == TreeKind::dary_ball) ? d_ : d_ + 1;
    }

    // Degree of v inside the truncation.
    [[nodiscard]] int degree(NodeId v) const {
        const int s = node_depth(v);
        return children_at(v, s).size() + (s > 0 ? 1 : 0);
    }

    friend bool operator==(const TreeTopology&, const TreeTopology&) = default;

    friend TreeTopology build_dary_ball(int d, int depth);
    friend TreeTopology build_regular_ball(int d, int radius);

private:
    TreeTopology(TreeKind kind, int d, int depth) : kind_(kind), d_(d), depth_(depth) {
        level_begin_.reserve(static_cast<std::size_t>(depth) + 2);
        std::int64_t begin = 0;
        std::int64_t width = 1;
        for (int s = 0; s <= depth; ++s) {
            level_begin_.push_back(static_cast<NodeId>(begin));
            begin += width;
            if (begin > kMaxNodeCount) {
                throw CapacityError("node count exceeds the limit of " + std::to_string(kMaxNodeCount) +
                                    " nodes (d=" + std::to_string(d) + ", depth=" + std::to_string(depth) + ")");
            }
            width *= (s == 0) ? root_child_count() : d;
            // width can exceed the limit only if the next band is never added.
            width = std::min<std::int64_t>(width, kMaxNodeCount + 1);
        }
        level_begin_.push_back(static_cast<NodeId>(begin));
    }

    TreeKind kind_;
    int d_;
    int depth_;
    std::vector<NodeId> level_begin_;
};

namespace detail {
inline void validate_shape(int d, int depth) {
    if (d < 2) throw ParameterError("branching d must be >= 2 (got " + std::to_string(d) + ")");
    if (depth < 0) throw ParameterError("depth must be >= 0 (got " + std::to_string(depth) + ")");
}
} // namespace detail

// Rooted d-ary tree truncated at distance `depth`: every non-leaf has d children.
inline TreeTopology build_dary_ball(int d, int depth) {
    detail::validate_shape(d, depth);
    return TreeTopology(TreeKind::dary_ball, d, depth);
}

// Ball of radius `radius` around a vertex of the (d+1)-regular tree.
inline TreeTopology build_regular_ball(int d, int radius) {
    detail::validate_shape(d, radius);
    return TreeTopology(TreeKind::regular_ball, d, radius);
}

inline TreeTopology build_tree(TreeKind kind, int d, int depth) {
    return kind == TreeKind::dary_ball ? build_dary_ball(d, depth) : build_regular_ball(d, depth);
}

// ---------------------------------------------------------------------------
// Colorings

struct Coloring {
    int kappa = 3;
    std::vector<std::uint8_t> colors;

    [[nodiscard]] std::size_t size() const noexcept { return colors.size(); }
    [[nodiscard]] int operator[](NodeId v) const { return colors[static_cast<std::size_t>(v)]; }

    friend bool operator==(const Coloring&, const Coloring&) = default;
};

inline void validate_kappa(int kappa) {
    if (kappa < 3) throw ParameterError("kappa must be >= 3 (got " + std::to_string(kappa) + ")");
    if (kappa > kMaxKappa) {
        throw CapacityError("kappa exceeds the limit of " + std::to_string(kMaxKappa) + " colors");
    }
}

inline void validate_coloring(const TreeTopology& topo, const Coloring& c) {
    validate_kappa(c.kappa);
    if (c.colors.size() != static_cast<std::size_t>(topo.node_count())) {
        throw TopologyMismatch("coloring has " + std::to_string(c.colors.size()) + " entries, topology has " +
                               std::to_string(topo.node_count()) + " nodes");
    }
    for (auto x : c.colors) {
        if (x >= c.kappa) throw ParameterError("color " + std::to_string(x) + " out of range for kappa");
    }
}

// ---------------------------------------------------------------------------
// Counter-based randomness: the color of node i in trial j under seed s is a
// pure function of (s, j, i, stream). Streams separate independent draws over
// the same nodes (stream 0 is the initial coloring).

namespace rng {

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream) noexcept {
    return mix64(mix64(mix64(seed) ^ trial) + stream * 0xd1b54a32d192ed03ULL);
}

inline constexpr std::uint64_t node_bits(std::uint64_t key, std::uint64_t node, std::uint64_t round) noexcept {
    return mix64(key ^ mix64((node << 8) | round));
}

// Unbiased integer in [0, bound) (multiply-shift with rejection; the retry
// draws from the next round of the same counter, so the result stays pure).
inline std::uint32_t uniform_below(std::uint64_t key, std::uint64_t node, std::uint32_t bound) noexcept {
    const std::uint64_t threshold = (0 - static_cast<std::uint64_t>(bound)) % bound;
    for (std::uint64_t round = 0;; ++round) {
        const auto m = static_cast<unsigned __int128>(node_bits(key, node, round)) * bound;
        if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint32_t>(m >> 64);
    }
}

} // namespace rng

inline void fill_uniform_colors(std::span<std::uint8_t> out, int kappa, std::uint64_t master_seed,
                                std::uint64_t trial_index, std::uint64_t stream = 0, std::size_t first_node = 0) {
    const auto key = rng::stream_key(master_seed, trial_index, stream);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<std::uint8_t>(rng::uniform_below(key, first_node + i, static_cast<std::uint32_t>(kappa)));
    }
}

// Uniform product coloring for trial `trial_index` under `master_seed`.
inline Coloring sample_uniform_coloring(const TreeTopology& topo, int kappa, std::uint64_t master_seed,
                                        std::uint64_t trial_index) {
    validate_kappa(kappa);
    Coloring c{kappa, std::vector<std::uint8_t>(static_cast<std::size_t>(topo.node_count()))};
    fill_uniform_colors(c.colors, kappa, master_seed, trial_index);
    return c;
}

// Constant coloring.
inline Coloring monochrome_coloring(const TreeTopology& topo, int kappa, int color = 0) {
    validate_kappa(kappa);
    return {kappa, std::vector<std::uint8_t>(static_cast<std::size_t>(topo.node_count()),
                                             static_cast<std::uint8_t>(color % kappa))};
}

// Color of v is depth(v) mod kappa: every parent-child edge is a +1 step.
inline Coloring depth_mod_kappa_coloring(const TreeTopology& topo, int kappa) {
    validate_kappa(kappa);
    Coloring c{kappa, std::vector<std::uint8_t>(static_cast<std::size_t>(topo.node_count()))};
    for (int s = 0; s <= topo.depth(); ++s) {
        const auto band = topo.level(s);
        std::fill(c.colors.begin() + band.first, c.colors.begin() + band.last, static_cast<std::uint8_t>(s % kappa));
    }
    return c;
}

// True iff the colorings agree on every node within `radius` of the root.
inline bool agree_on_ball(const TreeTopology& topo, const Coloring& a, const Coloring& b, int radius) {
    const auto n = static_cast<std::size_t>(topo.node_count());
    if (a.colors.size() != n || b.colors.size() != n) throw TopologyMismatch("colorings do not match the topology");
    if (a.kappa != b.kappa) throw TopologyMismatch("colorings use different kappa");
    if (radius > topo.depth()) throw ParameterError("radius exceeds the truncation depth");
    const auto prefix = static_cast<std::size_t>(topo.ball(radius).last);
    return std::equal(a.colors.begin(), a.colors.begin() + static_cast<std::ptrdiff_t>(prefix), b.colors.begin());
}

} // namespace ccatree
