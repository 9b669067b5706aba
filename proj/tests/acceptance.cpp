// Acceptance suite: one PASS/FAIL line per criterion, with wall time.
// Exit status is non-zero if any criterion fails.

#include "ccatree/bounds.hpp"
#include "ccatree/dynamics.hpp"
#include "ccatree/experiments.hpp"
#include "ccatree/numerics.hpp"
#include "ccatree/structures.hpp"
#include "ccatree/tree.hpp"
#include "support/oracles.hpp"

#include <boost/math/distributions/binomial.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

using namespace ccatree;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) detail = what;
        ok = ok && cond;
    }
};

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.ok = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.ok && secs >= budget_s) {
        o.ok = false;
        o.detail = "exceeded time budget of " + std::to_string(budget_s) + " s";
    }
    failures += !o.ok;
    std::printf("%s  %2d  %-62s %9.3f s%s%s\n", o.ok ? "PASS" : "FAIL", id, title, secs, o.detail.empty() ? "" : "  -- ",
                o.detail.c_str());
    std::fflush(stdout);
}

double boost_cdf(int n, double p, int k) {
    return boost::math::cdf(boost::math::binomial_distribution<double>(n, p), k);
}

std::string str(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

// Stability of a fort witness: nodes at depth s < R keep their CCA color and
// are never GHM-excited for 1 <= t <= R - s.
void check_fort_stability(Outcome& o, const TreeTopology& topo, const Coloring& c, StructureVariant variant, int theta,
                          const std::string& tag) {
    const StructureQuery q{variant, theta};
    const auto marks = mark(topo, c, q);
    o.require(marks.root_marked, tag + ": root not marked");
    if (!marks.root_marked) return;
    const auto w = extract_witness(topo, c, marks);
    o.require(verify_witness(topo, c, q, w), tag + ": witness fails verification");
    const int R = topo.depth();
    const auto cca = run_history(topo, c, {Model::cca, c.kappa, theta}, R);
    const auto ghm = run_history(topo, c, {Model::ghm, c.kappa, theta}, R);
    for (NodeId v : w.nodes) {
        const int s = topo.node_depth(v);
        for (int t = 1; t <= R - s; ++t) {
            o.require(cca[static_cast<std::size_t>(t)][v] == c[v], tag + ": CCA color changed at node " + std::to_string(v));
            o.require(ghm[static_cast<std::size_t>(t)][v] != 1, tag + ": GHM excitation at node " + std::to_string(v));
        }
    }
}

} // namespace

int main() {
    std::printf("ccatree acceptance suite\n");

    criterion(1, "exhaustive fixation on the 7-node binary tree", 10.0, [](Outcome& o) {
        const auto topo = build_dary_ball(2, 2);
        std::int64_t colorings = 0;
        oracle::for_each_coloring(7, 3, [&](const std::vector<std::uint8_t>& colors) {
            ++colorings;
            const Coloring c0{3, colors};
            const auto ghm = run_history(topo, c0, {Model::ghm, 3, 2}, 12);
            for (int t = 3; t <= 12; ++t) {
                const auto& g = ghm[static_cast<std::size_t>(t)].colors;
                o.require(std::find(g.begin(), g.end(), 1) == g.end(), "GHM color 1 at t >= 3");
                if (t >= 5) o.require(std::all_of(g.begin(), g.end(), [](auto x) { return x == 0; }), "GHM not all-zero at t >= 5");
            }
            const auto fix = detect_fixation(topo, c0, {Model::cca, 3, 2}, 1000);
            o.require(fix.kind == FixationResult::Kind::fixed, "CCA did not reach a fixed configuration");
        });
        o.require(colorings == 2187, "expected 3^7 colorings");
    });

    criterion(2, "GHM kappa thresholds reproduce the published table", 1.0, [](Outcome& o) {
        const int theta2[] = {3, 5, 7, 8, 10, 11, 12, 14};
        const int theta3[] = {3, 3, 3, 4, 5, 5, 6, 7};
        for (int d = 2; d <= 9; ++d) {
            const int a = ghm_kappa_threshold(2, d, Refinement::theta2);
            const int b = ghm_kappa_threshold(3, d, Refinement::theta3);
            o.require(a == theta2[d - 2], "theta=2 d=" + std::to_string(d) + " got " + std::to_string(a));
            o.require(b == theta3[d - 2], "theta=3 d=" + std::to_string(d) + " got " + std::to_string(b));
        }
    });

    criterion(3, "fixed-point instances at (100,100,3) and (87,2,3)", 1.0, [](Outcome& o) {
        o.require(cond_fixation(100, 100, 3).holds(), "cond_fixation(100,100,3) false");
        o.require(b1(1e-4, 100, 100, 3) <= 1e-4, "b1(1e-4) > 1e-4");
        const auto f1 = kleene_fp({FixedPointMap::b1, 100, 100, 3});
        o.require(f1.classification == FixedPointClass::below_one && f1.y_star <= 1e-4, "B1 y* = " + str(f1.y_star));
        const double e = 1.0 / (87.0 * 87.0);
        o.require(cond_fluctuation(87, 2, 3).holds(), "cond_fluctuation(87,2,3) false");
        o.require(b2(e, 87, 2, 3) <= e, "b2(87^-2) > 87^-2");
        const auto f2 = kleene_fp({FixedPointMap::b2, 87, 2, 3});
        o.require(f2.classification == FixedPointClass::below_one && f2.y_star <= e, "B2 y* = " + str(f2.y_star));
        o.require(!cond_fluctuation(86, 2, 3).holds(), "cond_fluctuation(86,2,3) true");
    });

    criterion(4, "strongly rigid binomial inequalities (two instances)", 1.0, [](Outcome& o) {
        // Evaluated with Boost's binomial distribution, independent of the library's CDF.
        {
            const int d = 10, theta = 3, kappa = 2447;
            o.require(kappa * (theta - 2) >= 9.0 * std::exp(1.0) * std::pow(d, 1.0 + 1.0 / (theta - 2)), "hypothesis (10,3,2447)");
            const double p = 1.0 / (3.0 * std::exp(1.0)) * 1e-2;
            const double s = (1 - p) * (1 - 2.0 / kappa);
            o.require(boost_cdf(d, s, d - theta) <= p, "first inequality at d=10");
            o.require(boost_cdf(d - 1, s, d - theta + 1) <= 2.0 / (3.0 * d), "second inequality at d=10");
        }
        {
            const int d = 3, kappa = 324;
            o.require(kappa >= 12 * d * d * d, "hypothesis (3,2,324)");
            const double q = 0.5 / 81.0;
            const double s = (1 - q) * (1 - 2.0 / kappa);
            o.require(boost_cdf(d, s, d - 2) <= q, "first inequality at d=3");
            o.require(boost_cdf(d - 1, s, d - 2) <= 1.0 / (3.0 * d * d), "second inequality at d=3");
        }
        for (const auto& c : bound_checks()) {
            if (c.group == "strong-fort-binomial") o.require(run_check(c).passed, "library check failed: " + c.name);
        }
    });

    criterion(5, "product bound sweep, theta in {2,3}, kappa in [3,50]", 1.0, [](Outcome& o) {
        for (int kappa = 3; kappa <= 50; ++kappa) {
            for (int theta : {2, 3}) {
                // Direct evaluation of the product in log space as an oracle.
                double lhs = 0.0;
                for (int j = 2; j <= kappa - 1; ++j) lhs += std::pow(theta, kappa - 1 - j) * std::log(j);
                lhs *= (theta - 1.0) / (std::pow(theta, kappa) - 1.0);
                const double rhs = theta == 2 ? 0.75 : 5.0 / 24.0;
                const auto r = product_bound_check(theta, kappa);
                o.require(r.passes && lhs <= rhs, "fails at theta=" + std::to_string(theta) + " kappa=" + std::to_string(kappa));
                o.require(std::abs(r.lhs_log - lhs) <= 1e-12 && r.rhs_log == rhs, "library disagrees with direct product");
            }
        }
    });

    criterion(6, "subtree counts match brute-force enumeration", 10.0, [](Outcome& o) {
        for (auto [d, theta, t] : {std::tuple{2, 2, 1}, std::tuple{2, 2, 2}, std::tuple{3, 2, 1}, std::tuple{3, 2, 2},
                                   std::tuple{3, 3, 1}}) {
            const auto naive = oracle::build(true, d, t);
            const auto c = subtree_count(d, theta, t);
            o.require(c.exact && *c.exact == oracle::count_theta_ary_subtrees(naive, theta, t),
                      "mismatch at (" + std::to_string(d) + "," + std::to_string(theta) + "," + std::to_string(t) + ")");
        }
    });

    criterion(7, "map derivatives vs central differences (h = 1e-6)", 5.0, [](Outcome& o) {
        const double h = 1e-6;
        int compared = 0;
        for (int d : {6, 8, 10, 15, 20}) {
            for (int theta : {2, 3, 4, 5, 6}) {
                for (int kappa : {3, 4, 5, 8, 12}) {
                    for (int i = 0; i <= 10; ++i) {
                        const double x = 0.05 + 0.09 * i;
                        auto fd = [&](double (*f)(double, int, int, int), double (*fc)(double, int, int, int)) {
                            // Difference the smaller of B and 1 - B.
                            if (f(x, d, theta, kappa) < 0.5) return (f(x + h, d, theta, kappa) - f(x - h, d, theta, kappa)) / (2 * h);
                            return -(fc(x + h, d, theta, kappa) - fc(x - h, d, theta, kappa)) / (2 * h);
                        };
                        const double g1 = b1_deriv(x, d, theta, kappa), g2 = b2_deriv(x, d, theta, kappa);
                        const std::string at = "d=" + std::to_string(d) + " theta=" + std::to_string(theta) +
                                               " kappa=" + std::to_string(kappa) + " x=" + str(x);
                        if (std::abs(g1) > 1e-8) {
                            ++compared;
                            o.require(std::abs(fd(b1, b1_complement) - g1) <= 1e-5 * std::abs(g1), "b1' at " + at);
                        }
                        if (std::abs(g2) > 1e-8) {
                            ++compared;
                            o.require(std::abs(fd(b2, b2_complement) - g2) <= 1e-5 * std::abs(g2), "b2' at " + at);
                        }
                    }
                }
            }
        }
        o.require(compared > 0, "no cells compared");
    });

    criterion(8, "structure DP vs Kleene iterates (Monte Carlo, 4 sigma)", 120.0, [](Outcome& o) {
        const auto a = estimate_marked_root_prob(StructureVariant::rainbow, 4, 2, 3, TreeKind::dary_ball, 5, 100000, 8001);
        const auto& ma = a.metric("root_marked");
        o.require(ma.passed == true, "rainbow: estimate " + str(ma.estimate) + " vs theory " + str(ma.theory.value_or(-1)));
        o.require(ma.theory && std::abs(*ma.theory - (1 - kleene_iterate({FixedPointMap::b2, 4, 2, 3}, 5))) < 1e-15,
                  "rainbow theory is not 1 - y_5");
        const auto b = estimate_marked_root_prob(StructureVariant::rigid_fort, 5, 3, 8, TreeKind::dary_ball, 3, 100000, 8002);
        const auto& mb = b.metric("root_marked");
        o.require(mb.passed == true, "rigid: estimate " + str(mb.estimate) + " vs theory " + str(mb.theory.value_or(-1)));
        o.require(mb.theory && std::abs(*mb.theory - (1 - kleene_iterate({FixedPointMap::b1, 5, 3, 8}, 3))) < 1e-15,
                  "rigid theory is not 1 - y_3");
    });

    criterion(9, "excitation probability under the union bound, t = 1..3", 120.0, [](Outcome& o) {
        for (int t = 1; t <= 3; ++t) {
            const auto r = estimate_excitation_prob(5, 2, 8, 3, t, 100000, 9000 + static_cast<std::uint64_t>(t));
            const auto& m = r.metric("root_excited_at_t");
            const double bound = std::exp(excitation_union_bound(5, 2, 8, t));
            o.require(m.estimate <= bound + 4 * m.std_error,
                      "t=" + std::to_string(t) + ": " + str(m.estimate) + " > " + str(bound));
            o.require(r.all_passed(), "t=" + std::to_string(t) + ": report assertion failed");
        }
    });

    criterion(10, "light cone: resampling beyond radius-1 never changes the root", 30.0, [](Outcome& o) {
        const auto r = lightcone_check(3, 2, 4, 5, 1000, 10);
        o.require(r.metric("violations_cca").successes == 0, "CCA violations");
        o.require(r.metric("violations_ghm").successes == 0, "GHM violations");
    });

    criterion(11, "rainbow ladder: deterministic increments", 1.0, [](Outcome& o) {
        const auto topo = build_dary_ball(3, 4);
        const auto c = depth_mod_kappa_coloring(topo, 3);
        const auto traj = run(topo, c, {Model::cca, 3, 2}, 4);
        for (int t = 1; t <= 4; ++t) {
            o.require(traj.root_colors[static_cast<std::size_t>(t)] == (traj.root_colors[static_cast<std::size_t>(t) - 1] + 1) % 3,
                      "root did not advance at t=" + std::to_string(t));
        }
        const StructureQuery q{StructureVariant::rainbow, 2};
        const auto marks = mark(topo, c, q);
        o.require(marks.root_marked, "root not in a rainbow subtree");
        const auto w = extract_witness(topo, c, marks);
        o.require(verify_witness(topo, c, q, w) && w.depth == 4, "witness invalid");
        const auto hist = run_cca_on_witness(w, c, 2, 12);
        for (std::size_t i = 0; i < w.size(); ++i) {
            const int s = topo.node_depth(w.nodes[i]);
            int increments = 0;
            for (std::size_t t = 1; t < hist.size(); ++t) {
                if (hist[t][i] == (hist[t - 1][i] + 1) % 3) ++increments;
                else o.require(hist[t][i] == hist[t - 1][i], "witness color jumped");
            }
            o.require(increments == 4 - s, "node at depth " + std::to_string(s) + " incremented " +
                                                std::to_string(increments) + " times");
        }
    });

    criterion(12, "fort stability inside the light cone", 5.0, [](Outcome& o) {
        for (auto kind : {TreeKind::regular_ball, TreeKind::dary_ball}) {
            const auto topo = build_tree(kind, 3, 4);
            const std::string k(to_string(kind));
            // Monochrome.
            check_fort_stability(o, topo, monochrome_coloring(topo, 5, 2), StructureVariant::rigid_fort, 3, k + " mono rigid");
            check_fort_stability(o, topo, monochrome_coloring(topo, 5, 0), StructureVariant::strongly_rigid_fort, 2,
                                 k + " mono strong");
            // Hand-built mixed: each level one color down (parent = child + 1, allowed for rigid forts),
            // and two colors up (allowed for strongly rigid forts).
            Coloring down{5, std::vector<std::uint8_t>(static_cast<std::size_t>(topo.node_count()))};
            Coloring up = down;
            for (NodeId v = 0; v < topo.node_count(); ++v) {
                const int s = topo.node_depth(v);
                down.colors[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>((5 * 4 - s) % 5);
                up.colors[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>((2 * s) % 5);
            }
            check_fort_stability(o, topo, down, StructureVariant::rigid_fort, 3, k + " ladder rigid");
            check_fort_stability(o, topo, up, StructureVariant::strongly_rigid_fort, 2, k + " ladder strong");
            // Sampled colorings in which a fort happens to exist: outside nodes are adversarial.
            int found = 0;
            for (std::uint64_t trial = 0; trial < 400 && found < 40; ++trial) {
                for (auto [variant, theta] : {std::pair{StructureVariant::rigid_fort, 3},
                                              std::pair{StructureVariant::strongly_rigid_fort, 2}}) {
                    const auto c = sample_uniform_coloring(topo, 5, 12, trial);
                    if (!mark(topo, c, {variant, theta}).root_marked) continue;
                    ++found;
                    check_fort_stability(o, topo, c, variant, theta, k + " sampled trial " + std::to_string(trial));
                }
            }
            o.require(found > 0, k + ": no sampled forts");
        }
    });

    criterion(13, "reports are byte-identical across worker counts", 60.0, [](Outcome& o) {
        auto same = [&](const char* name, auto make) {
            const auto a = report_json_string(make(1), false);
            o.require(a == report_json_string(make(2), false) && a == report_json_string(make(4), false),
                      std::string(name) + " differs across worker counts");
        };
        same("marked-root", [](int w) {
            return estimate_marked_root_prob(StructureVariant::rainbow, 4, 2, 3, TreeKind::regular_ball, 4, 5000, 13, {w});
        });
        same("excitation", [](int w) { return estimate_excitation_prob(5, 2, 8, 3, 2, 5000, 13, {w}); });
        same("tau-tail", [](int w) { return estimate_tau_tail(5, 2, 8, 4, 5000, 13, {w}); });
        same("fluctuation-window", [](int w) { return fluctuation_window(4, 2, 3, 4, 5000, 13, {w}); });
        same("lightcone", [](int w) { return lightcone_check(3, 2, 4, 4, 500, 13, {w}); });
        same("root-statistics", [](int w) { return root_statistics(Model::cca, 3, 2, 4, 4, 4, 5000, 13, {w}); });
    });

    std::printf("%d of 13 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
