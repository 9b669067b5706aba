#pragma once

// Root-anchored structures in an initial coloring: rigid forts, strongly
// rigid forts and rainbow subtrees, found by one bottom-up pass over the
// depth bands. Also builds the GHM excitation witness of a root that is
// excited at time t, and the root's component outside a marked set.

#include "ccatree/dynamics.hpp"
#include "ccatree/errors.hpp"
#include "ccatree/tree.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ccatree {

enum class StructureVariant { rigid_fort, strongly_rigid_fort, rainbow };

inline std::string_view to_string(StructureVariant v) {
    switch (v) {
    case StructureVariant::rigid_fort: return "rigid-fort";
    case StructureVariant::strongly_rigid_fort: return "strongly-rigid-fort";
    default: return "rainbow";
    }
}

inline StructureVariant structure_variant_from_string(std::string_view s) {
    if (s == "rigid-fort" || s == "rigid") return StructureVariant::rigid_fort;
    if (s == "strongly-rigid-fort" || s == "strongly-rigid") return StructureVariant::strongly_rigid_fort;
    if (s == "rainbow") return StructureVariant::rainbow;
    throw ParameterError("unknown structure variant '" + std::string(s) + "'");
}

struct StructureQuery {
    StructureVariant variant = StructureVariant::rigid_fort;
    int theta = 2;

    // k for a k-fort: theta - 2 (rigid) or theta - 1 (strongly rigid).
    [[nodiscard]] int slack() const noexcept {
        return variant == StructureVariant::rigid_fort ? theta - 2 : theta - 1;
    }

    // Marked children v needs. Forts: deg_inf(v) - k - [v non-root], clamped at 0.
    [[nodiscard]] int requirement(const TreeTopology& topo, NodeId v) const noexcept {
        if (variant == StructureVariant::rainbow) return theta;
        const int r = topo.deg_inf(v) - slack() - (v == TreeTopology::root() ? 0 : 1);
        return std::max(r, 0);
    }

    // Edge predicate on (child - parent) mod kappa.
    [[nodiscard]] static bool edge_ok(StructureVariant variant, int parent_color, int child_color, int kappa) noexcept {
        const int diff = (child_color - parent_color + kappa) % kappa;
        switch (variant) {
        case StructureVariant::rigid_fort: return diff != 1;
        case StructureVariant::strongly_rigid_fort: return diff != 1 && diff != kappa - 1;
        default: return diff == 1;
        }
    }

    [[nodiscard]] bool edge_ok(int parent_color, int child_color, int kappa) const noexcept {
        return edge_ok(variant, parent_color, child_color, kappa);
    }

    void validate(const TreeTopology& topo) const {
        if (variant == StructureVariant::rigid_fort && theta < 2) {
            throw InvalidQuery("rigid-fort query needs theta >= 2 (slack theta-2 must be >= 0)");
        }
        if (theta < 1) throw InvalidQuery("theta must be >= 1");
        if (variant == StructureVariant::rainbow && theta > topo.d()) {
            throw InvalidQuery("rainbow query needs theta <= d (theta=" + std::to_string(theta) +
                               ", d=" + std::to_string(topo.d()) + ")");
        }
    }

    friend bool operator==(const StructureQuery&, const StructureQuery&) = default;
};

struct MarkResult {
    StructureQuery query;
    std::vector<std::uint8_t> in_structure;  // 1 = marked
    bool root_marked = false;

    [[nodiscard]] bool marked(NodeId v) const { return in_structure[static_cast<std::size_t>(v)] != 0; }
};

// Bottom-up pass with caller-supplied flags for the depth-R band; entries of
// `flags` above depth R are overwritten.
inline MarkResult mark_from_leaf_flags(const TreeTopology& topo, const Coloring& coloring, const StructureQuery& query,
                                       std::vector<std::uint8_t> flags) {
    query.validate(topo);
    if (coloring.size() != static_cast<std::size_t>(topo.node_count()) ||
        flags.size() != static_cast<std::size_t>(topo.node_count())) {
        throw TopologyMismatch("coloring/flags do not match the topology");
    }
    const auto& col = coloring.colors;
    const int kappa = coloring.kappa;
    for (int s = topo.depth() - 1; s >= 0; --s) {
        const auto band = topo.level(s);
        for (NodeId v = band.first; v < band.last; ++v) {
            const int need = query.requirement(topo, v);
            const int cv = col[static_cast<std::size_t>(v)];
            int have = 0;
            const auto kids = topo.children_at(v, s);
            for (NodeId w = kids.first; w < kids.last && have < need; ++w) {
                const auto wi = static_cast<std::size_t>(w);
                have += flags[wi] && query.edge_ok(cv, col[wi], kappa);
            }
            flags[static_cast<std::size_t>(v)] = have >= need ? 1 : 0;
        }
    }
    MarkResult out{query, std::move(flags), false};
    out.root_marked = out.in_structure[0] != 0;
    return out;
}

// Nodes at depth R are marked by the base case.
inline MarkResult mark(const TreeTopology& topo, const Coloring& coloring, const StructureQuery& query) {
    return mark_from_leaf_flags(topo, coloring, query,
                                std::vector<std::uint8_t>(static_cast<std::size_t>(topo.node_count()), 1));
}

// Root-only variant of mark() that reuses a caller-owned scratch buffer.
inline bool root_marked(const TreeTopology& topo, std::span<const std::uint8_t> col, int kappa,
                        const StructureQuery& query, std::vector<std::uint8_t>& scratch) {
    scratch.assign(static_cast<std::size_t>(topo.node_count()), 1);
    for (int s = topo.depth() - 1; s >= 0; --s) {
        const auto band = topo.level(s);
        for (NodeId v = band.first; v < band.last; ++v) {
            const int need = query.requirement(topo, v);
            const int cv = col[static_cast<std::size_t>(v)];
            int have = 0;
            const auto kids = topo.children_at(v, s);
            for (NodeId w = kids.first; w < kids.last && have < need; ++w) {
                const auto wi = static_cast<std::size_t>(w);
                have += scratch[wi] && query.edge_ok(cv, col[wi], kappa);
            }
            scratch[static_cast<std::size_t>(v)] = have >= need ? 1 : 0;
        }
    }
    return scratch[0] != 0;
}

// ---------------------------------------------------------------------------
// Witnesses

// A connected subtree containing the root, stored in breadth-first order.
struct WitnessSubtree {
    std::vector<NodeId> nodes;                         // nodes[0] is the root
    std::vector<NodeId> parent;                        // kNoParent for the root
    std::vector<std::vector<NodeId>> selected_children;
    int depth = 0;                                     // max distance from the root

    [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }

    friend bool operator==(const WitnessSubtree&, const WitnessSubtree&) = default;
};

// Greedy top-down selection: each selected non-leaf takes its first
// `requirement` qualifying marked children in index order.
inline WitnessSubtree extract_witness(const TreeTopology& topo, const Coloring& coloring, const MarkResult& marks) {
    if (!marks.root_marked) throw NoWitness("root is not marked; no witness exists");
    const auto& q = marks.query;
    WitnessSubtree w;
    w.nodes.push_back(TreeTopology::root());
    w.parent.push_back(kNoParent);
    for (std::size_t i = 0; i < w.nodes.size(); ++i) {
        const NodeId v = w.nodes[i];
        const int s = topo.node_depth(v);
        w.depth = std::max(w.depth, s);
        std::vector<NodeId> picked;
        if (s < topo.depth()) {
            const int need = q.requirement(topo, v);
            const auto kids = topo.children_at(v, s);
            for (NodeId c = kids.first; c < kids.last && static_cast<int>(picked.size()) < need; ++c) {
                if (marks.marked(c) && q.edge_ok(coloring[v], coloring[c], coloring.kappa)) picked.push_back(c);
            }
            if (static_cast<int>(picked.size()) < need) {
                throw InternalError("marked node " + std::to_string(v) + " lacks qualifying children");
            }
        }
        for (NodeId c : picked) {
            w.nodes.push_back(c);
            w.parent.push_back(v);
        }
        w.selected_children.push_back(std::move(picked));
    }
    return w;
}

namespace detail {
// Shape checks shared by all witness kinds: root first, parent links are
// topology edges, BFS order, no repeats.
inline bool witness_shape_ok(const TreeTopology& topo, const WitnessSubtree& w) {
    if (w.nodes.empty() || w.nodes[0] != TreeTopology::root()) return false;
    if (w.parent.size() != w.nodes.size() || w.selected_children.size() != w.nodes.size()) return false;
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(topo.node_count()), 0);
    std::size_t next_child = 1;
    for (std::size_t i = 0; i < w.nodes.size(); ++i) {
        const NodeId v = w.nodes[i];
        if (v < 0 || v >= topo.node_count() || seen[static_cast<std::size_t>(v)]) return false;
        seen[static_cast<std::size_t>(v)] = 1;
        if (i > 0 && topo.parent(v) != w.parent[i]) return false;
        for (NodeId c : w.selected_children[i]) {
            if (next_child >= w.nodes.size() || w.nodes[next_child] != c || topo.parent(c) != v) return false;
            ++next_child;
        }
    }
    return next_child == w.nodes.size();
}
} // namespace detail

// Re-checks a structure witness against the query's edge predicate and child
// requirement (rainbow: exactly theta children per non-leaf).
inline bool verify_witness(const TreeTopology& topo, const Coloring& coloring, const StructureQuery& q,
                           const WitnessSubtree& w) {
    if (!detail::witness_shape_ok(topo, w)) return false;
    for (std::size_t i = 0; i < w.nodes.size(); ++i) {
        const NodeId v = w.nodes[i];
        const auto& kids = w.selected_children[i];
        if (topo.node_depth(v) < topo.depth()) {
            const int need = q.requirement(topo, v);
            if (static_cast<int>(kids.size()) < need) return false;
            if (q.variant == StructureVariant::rainbow && static_cast<int>(kids.size()) != need) return false;
        }
        for (NodeId c : kids) {
            if (!q.edge_ok(coloring[v], coloring[c], coloring.kappa)) return false;
        }
    }
    return true;
}

// Given a GHM run from gamma0 in which the root is excited at time t, builds a
// theta-ary subtree of depth t whose initial colors satisfy the necessary
// level conditions. Children are chosen in ascending index order.
inline WitnessSubtree excitation_witness(const TreeTopology& topo, const Coloring& gamma0, int t, int theta) {
    if (t < 1) throw PreconditionError("excitation witness needs t >= 1");
    if (t > topo.depth()) throw PreconditionError("t exceeds the truncation depth (light cone)");
    const ModelParams params{Model::ghm, gamma0.kappa, theta};
    const auto history = run_history(topo, gamma0, params, t);
    if (history[static_cast<std::size_t>(t)][TreeTopology::root()] != 1) {
        throw NoWitness("root is not excited at t=" + std::to_string(t));
    }

    WitnessSubtree w;
    w.nodes.push_back(TreeTopology::root());
    w.parent.push_back(kNoParent);
    w.depth = t;
    for (std::size_t i = 0; i < w.nodes.size(); ++i) {
        const NodeId v = w.nodes[i];
        const int s = topo.node_depth(v);
        std::vector<NodeId> picked;
        if (s < t) {
            // v is excited at time t-s, so at time t-s-1 it rested and had at
            // least theta excited neighbors; its parent was not excited then.
            const auto& before = history[static_cast<std::size_t>(t - s - 1)];
            const auto kids = topo.children_at(v, s);
            for (NodeId c = kids.first; c < kids.last && static_cast<int>(picked.size()) < theta; ++c) {
                if (before[c] == 1) picked.push_back(c);
            }
            if (static_cast<int>(picked.size()) < theta) {
                throw InternalError("excitation replay found fewer than theta excited children");
            }
        }
        for (NodeId c : picked) {
            w.nodes.push_back(c);
            w.parent.push_back(v);
        }
        w.selected_children.push_back(std::move(picked));
    }
    return w;
}

// Level conditions on gamma0 for an excitation witness of depth t: distance t
// has color 1, distance t-1 color 0, distance t-1-m colors in
// {0, kappa-1, ..., kappa-m} for m = 1..kappa-2.
inline bool verify_excitation_witness(const TreeTopology& topo, const Coloring& gamma0, const WitnessSubtree& w, int t,
                                      int theta) {
    if (!detail::witness_shape_ok(topo, w) || w.depth != t) return false;
    const int kappa = gamma0.kappa;
    for (std::size_t i = 0; i < w.nodes.size(); ++i) {
        const NodeId v = w.nodes[i];
        const int s = topo.node_depth(v);
        if (s > t) return false;
        const auto nkids = static_cast<int>(w.selected_children[i].size());
        if (nkids != (s < t ? theta : 0)) return false;
        const int c = gamma0[v];
        if (s == t) {
            if (c != 1) return false;
        } else if (s == t - 1) {
            if (c != 0) return false;
        } else {
            const int m = t - 1 - s;
            if (m <= kappa - 2 && c != 0 && c < kappa - m) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------

struct RootComponent {
    std::vector<NodeId> nodes;  // breadth-first from the root
    int depth = -1;             // -1 when empty
};

// Component of the root among unmarked nodes.
inline RootComponent root_component_outside(const TreeTopology& topo, const MarkResult& marks) {
    RootComponent comp;
    if (marks.in_structure.size() != static_cast<std::size_t>(topo.node_count())) {
        throw TopologyMismatch("marks do not match the topology");
    }
    if (marks.marked(TreeTopology::root())) return comp;
    // Children of an unmarked node in BFS order stay in BFS order.
    comp.nodes.push_back(TreeTopology::root());
    for (std::size_t i = 0; i < comp.nodes.size(); ++i) {
        const NodeId v = comp.nodes[i];
        const int s = topo.node_depth(v);
        comp.depth = std::max(comp.depth, s);
        const auto kids = topo.children_at(v, s);
        for (NodeId c = kids.first; c < kids.last; ++c) {
            if (!marks.marked(c)) comp.nodes.push_back(c);
        }
    }
    return comp;
}

// CCA on the witness subtree alone (edges = witness parent links). Returns
// colors[t][i] for witness node i, t = 0..steps.
inline std::vector<std::vector<int>> run_cca_on_witness(const WitnessSubtree& w, const Coloring& coloring, int theta,
                                                        int steps) {
    const int kappa = coloring.kappa;
    const std::size_t n = w.nodes.size();
    std::vector<std::vector<std::size_t>> nbrs(n);
    {
        std::size_t next = 1;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < w.selected_children[i].size(); ++k, ++next) {
                nbrs[i].push_back(next);
                nbrs[next].push_back(i);
            }
        }
    }
    std::vector<std::vector<int>> out;
    std::vector<int> cur(n);
    for (std::size_t i = 0; i < n; ++i) cur[i] = coloring[w.nodes[i]];
    out.push_back(cur);
    for (int t = 0; t < steps; ++t) {
        std::vector<int> next(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int want = (cur[i] + 1) % kappa;
            int count = 0;
            for (auto j : nbrs[i]) count += cur[j] == want;
            next[i] = count >= theta ? want : cur[i];
        }
        cur = std::move(next);
        out.push_back(cur);
    }
    return out;
}

} // namespace ccatree
