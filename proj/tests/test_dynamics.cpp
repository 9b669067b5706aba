#include "ccatree/dynamics.hpp"
#include "support/oracles.hpp"

#include <catch_amalgamated.hpp>

#include <map>
#include <random>

using namespace ccatree;

TEST_CASE("steps agree with the adjacency-list reference", "[dynamics][property]") {
    std::mt19937_64 gen(20241015);
    for (int iter = 0; iter < 300; ++iter) {
        const bool regular = gen() & 1U;
        const int d = 2 + static_cast<int>(gen() % 3);
        const int depth = static_cast<int>(gen() % 4);
        const int kappa = 3 + static_cast<int>(gen() % 5);
        const int theta = 1 + static_cast<int>(gen() % 4);
        const auto model = (gen() & 1U) ? Model::cca : Model::ghm;
        const auto topo = build_tree(regular ? TreeKind::regular_ball : TreeKind::dary_ball, d, depth);
        const auto naive = oracle::build(regular, d, depth);
        auto colors = sample_uniform_coloring(topo, kappa, gen(), 0).colors;
        for (int t = 0; t < 4; ++t) {
            std::vector<std::uint8_t> next(colors.size());
            const auto stats = apply_step(topo, colors, next, {model, kappa, theta});
            const auto expected = oracle::step(naive, colors, model, kappa, theta);
            REQUIRE(next == expected);
            std::int64_t changed = 0, excited = 0;
            for (std::size_t i = 0; i < next.size(); ++i) {
                changed += next[i] != colors[i];
                excited += next[i] == 1;
            }
            REQUIRE(stats.changed == changed);
            REQUIRE(stats.excited == excited);
            colors = next;
        }
    }
}

TEST_CASE("GHM excited and refractory colors always advance", "[dynamics]") {
    const auto topo = build_regular_ball(3, 3);
    const auto c0 = sample_uniform_coloring(topo, 6, 5, 0);
    const auto c1 = ghm_step(topo, c0, 2);
    for (NodeId v = 0; v < topo.node_count(); ++v) {
        if (c0[v] != 0) CHECK(c1[v] == (c0[v] + 1) % 6);
        else CHECK((c1[v] == 0 || c1[v] == 1));
    }
}

TEST_CASE("CCA on a rainbow ladder: every non-leaf advances", "[dynamics]") {
    const auto topo = build_dary_ball(3, 3);
    const auto c0 = depth_mod_kappa_coloring(topo, 4);
    const auto c1 = cca_step(topo, c0, 3);
    for (NodeId v = 0; v < topo.node_count(); ++v) {
        const bool leaf = topo.node_depth(v) == topo.depth();
        CHECK(c1[v] == (leaf ? c0[v] : (c0[v] + 1) % 4));
    }
}

TEST_CASE("buffer preconditions", "[dynamics][errors]") {
    const auto topo = build_dary_ball(2, 2);
    std::vector<std::uint8_t> a(7), b(6);
    CHECK_THROWS_AS(cca_step(topo, a, b, 3, 2), TopologyMismatch);
    CHECK_THROWS_AS(cca_step(topo, a, a, 3, 2), PreconditionError);
    CHECK_THROWS_AS((ModelParams{Model::cca, 3, 0}.validate()), ParameterError);
    CHECK_THROWS_AS((ModelParams{Model::cca, 2, 2}.validate()), ParameterError);
    CHECK(ModelParams{Model::ghm, 3, 1}.in_theory_regime() == false);
    CHECK_THROWS_AS(model_from_string("sandpile"), ParameterError);
    const auto c = monochrome_coloring(topo, 4);
    CHECK_THROWS_AS(run(topo, c, {Model::cca, 3, 2}, 3), ParameterError);
    CHECK_THROWS_AS(run(topo, monochrome_coloring(topo, 3), {Model::cca, 3, 2}, -1), ParameterError);
}

TEST_CASE("run records the root trajectory and agrees with run_history", "[dynamics]") {
    const auto topo = build_regular_ball(3, 4);
    for (auto model : {Model::cca, Model::ghm}) {
        const ModelParams params{model, 5, 2};
        const auto c0 = sample_uniform_coloring(topo, 5, 77, 3);
        const auto traj = run(topo, c0, params, 6);
        const auto hist = run_history(topo, c0, params, 6);
        REQUIRE(traj.root_colors.size() == 7);
        REQUIRE(hist.size() == 7);
        CHECK(traj.lightcone_valid_upto == 4);
        for (int t = 0; t <= 6; ++t) CHECK(traj.root_colors[static_cast<std::size_t>(t)] == hist[static_cast<std::size_t>(t)][0]);
        Simulator sim(topo);
        sim.load(c0.colors);
        for (int t = 1; t <= 6; ++t) {
            sim.step(params);
            CHECK(std::equal(sim.state().begin(), sim.state().end(), hist[static_cast<std::size_t>(t)].colors.begin()));
        }
    }
}

TEST_CASE("last excitation: never, at, censored", "[dynamics]") {
    Trajectory traj;
    traj.model = Model::ghm;
    traj.horizon = 4;
    traj.root_colors = {0, 0, 0, 0, 0};
    CHECK(last_excited_time(traj) == LastExcitation::never());
    traj.root_colors = {1, 2, 0, 1, 2};
    CHECK(last_excited_time(traj) == LastExcitation::at(3));
    traj.root_colors = {1, 2, 0, 0, 1};
    CHECK(last_excited_time(traj) == LastExcitation::censored(4));
    traj.model = Model::cca;
    CHECK_THROWS_AS(last_excited_time(traj), ModelMismatch);
}

TEST_CASE("all-zero GHM start stays at rest", "[dynamics]") {
    const auto topo = build_regular_ball(4, 3);
    const auto traj = run(topo, monochrome_coloring(topo, 5, 0), {Model::ghm, 5, 2}, 3);
    CHECK(traj.last_excited == LastExcitation::never());
    CHECK(std::all_of(traj.excited_count.begin(), traj.excited_count.end(), [](auto x) { return x == 0; }));
}

namespace {
// Reference: full history in a map, first repeat wins.
FixationResult naive_fixation(const TreeTopology& topo, const Coloring& c0, const ModelParams& p, int max_steps) {
    std::map<std::vector<std::uint8_t>, int> seen{{c0.colors, 0}};
    auto cur = c0.colors;
    for (int t = 0; t < max_steps; ++t) {
        std::vector<std::uint8_t> next(cur.size());
        apply_step(topo, cur, next, p);
        if (next == cur) return {FixationResult::Kind::fixed, t, 1};
        if (auto it = seen.find(next); it != seen.end()) return {FixationResult::Kind::periodic, it->second, t + 1 - it->second};
        seen.emplace(next, t + 1);
        cur = std::move(next);
    }
    return {};
}
} // namespace

TEST_CASE("fixation detection matches a full-history reference", "[dynamics][property]") {
    // Exhaustive on a 3-node path with theta = 1; every orbit fixates there.
    const auto topo = build_dary_ball(2, 1);
    int periodic = 0;
    oracle::for_each_coloring(3, 3, [&](const std::vector<std::uint8_t>& colors) {
        const Coloring c0{3, colors};
        for (auto model : {Model::cca, Model::ghm}) {
            const ModelParams p{model, 3, 1};
            const auto got = detect_fixation(topo, c0, p, 50);
            REQUIRE(got == naive_fixation(topo, c0, p, 50));
            periodic += got.kind == FixationResult::Kind::periodic;
        }
    });
    CHECK(periodic == 0);

    std::mt19937_64 gen(7);
    for (int i = 0; i < 100; ++i) {
        const auto t = build_regular_ball(2, 2);
        const int kappa = 3 + static_cast<int>(gen() % 3);
        const ModelParams p{(gen() & 1U) ? Model::cca : Model::ghm, kappa, 1 + static_cast<int>(gen() % 2)};
        const auto c0 = sample_uniform_coloring(t, kappa, gen(), 0);
        REQUIRE(detect_fixation(t, c0, p, 200) == naive_fixation(t, c0, p, 200));
    }
}

TEST_CASE("a fixed coloring is detected at step 0", "[dynamics]") {
    const auto topo = build_dary_ball(3, 3);
    const auto r = detect_fixation(topo, monochrome_coloring(topo, 3), {Model::cca, 3, 2}, 5);
    CHECK(r == FixationResult{FixationResult::Kind::fixed, 0, 1});
    CHECK_THROWS_AS(detect_fixation(topo, monochrome_coloring(topo, 3), {Model::cca, 3, 2}, 0), ParameterError);
}

TEST_CASE("fingerprints separate nearby states", "[dynamics]") {
    std::vector<std::uint8_t> a(37, 1), b = a;
    b[36] = 2;
    CHECK_FALSE(fingerprint(a) == fingerprint(b));
    std::vector<std::uint8_t> shorter(36, 1);
    CHECK_FALSE(fingerprint(a) == fingerprint(shorter));
    CHECK(fingerprint(a) == fingerprint(std::vector<std::uint8_t>(37, 1)));
}
