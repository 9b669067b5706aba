#pragma once

// The numeric inequality suite behind `verify-bounds`: concrete instances of
// the binomial, Chernoff, Markov and product bounds evaluated at double
// precision. Checks are registered lazily so the inventory can be listed
// without evaluating anything.

#include "ccatree/numerics.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace ccatree {

enum class Relation { le, ge };

struct BoundCheck {
    std::string group;
    std::string name;
    Relation relation = Relation::le;
    std::function<std::pair<double, double>()> eval;  // (lhs, rhs)
};

struct BoundResult {
    std::string group;
    std::string name;
    Relation relation = Relation::le;
    double lhs = 0.0;
    double rhs = 0.0;
    bool passed = false;
};

namespace detail {

inline std::string fmt(const char* f, auto... args) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Smallest theta <= d with cond_fixation(d, theta, kappa) holding, or 0.
inline int smallest_fixation_theta(int d, int kappa) {
    for (int theta = 2; theta <= d; ++theta) {
        if (cond_fixation(d, theta, kappa).holds()) return theta;
    }
    return 0;
}

inline void add_fort_binomial(std::vector<BoundCheck>& out, int d, int theta, int kappa) {
    const std::string tag = fmt("d=%d theta=%d kappa=%d", d, theta, kappa);
    const double x = 1.0 / (static_cast<double>(d) * d);
    const double p = (1.0 - x) * (1.0 - 1.0 / kappa);
    out.push_back({"fort-binomial", "hypothesis kappa(theta - 3 sqrt(d ln d)) >= d, " + tag, Relation::ge, [=] {
                       const auto c = cond_fixation(d, theta, kappa);
                       return std::pair{c.lhs, c.rhs};
                   }});
    out.push_back({"fort-binomial", "P(Binom(d, p) <= d-theta+1) <= d^-2, " + tag, Relation::le,
                   [=] { return std::pair{binom_cdf(d, p, d - theta + 1), x}; }});
    out.push_back({"fort-binomial", "P(Binom(d-1, p) <= d-theta+2) <= d^-2, " + tag, Relation::le,
                   [=] { return std::pair{binom_cdf(d - 1, p, d - theta + 2), x}; }});
}

} // namespace detail

// 1/d^2 + 1/d - sqrt(ln d / d); the auxiliary inequality holds where this is <= 0.
inline double fort_aux_gap(int d) {
    const double dd = d;
    return 1.0 / (dd * dd) + 1.0 / dd - std::sqrt(std::log(dd) / dd);
}

// Values of d in [lo, hi] where the auxiliary inequality fails.
inline std::vector<int> fort_aux_failures(int lo, int hi) {
    std::vector<int> bad;
    for (int d = lo; d <= hi; ++d) {
        if (fort_aux_gap(d) > 0.0) bad.push_back(d);
    }
    return bad;
}

inline std::vector<BoundCheck> bound_checks() {
    using detail::fmt;
    std::vector<BoundCheck> out;

    // Rigid-fort binomial instances wherever the fixation condition holds.
    for (int d : {100, 200, 400, 1000}) {
        for (int kappa : {3, 4, 6, 10, 100}) {
            const int theta = detail::smallest_fixation_theta(d, kappa);
            if (theta == 0) continue;
            detail::add_fort_binomial(out, d, theta, kappa);
            if (theta != d) detail::add_fort_binomial(out, d, d, kappa);
        }
    }
    out.push_back({"fort-binomial", "max over d in [3,10000] of 1/d^2 + 1/d - sqrt(ln d / d) <= 0", Relation::le, [] {
                       double worst = -1.0;
                       for (int d = 3; d <= 10000; ++d) worst = std::max(worst, fort_aux_gap(d));
                       return std::pair{worst, 0.0};
                   }});

    // Small-theta strongly-rigid binomial instances.
    {
        const int d = 10, theta = 3, kappa = 2447;
        const double p = 1.0 / (3.0 * std::numbers::e) * std::pow(d, -(theta - 1.0) / (theta - 2.0));
        const double s = (1.0 - p) * (1.0 - 2.0 / kappa);
        const std::string tag = fmt("d=%d theta=%d kappa=%d", d, theta, kappa);
        out.push_back({"strong-fort-binomial", "hypothesis kappa(theta-2) >= 9e d^(1+1/(theta-2)), " + tag, Relation::ge,
                       [=] {
                           const auto c = cond_cca_small_theta(d, theta, kappa);
                           return std::pair{c.lhs, c.rhs};
                       }});
        out.push_back({"strong-fort-binomial", "P(Binom(d, (1-p)(1-2/kappa)) <= d-theta) <= p, " + tag, Relation::le,
                       [=] { return std::pair{binom_cdf(d, s, d - theta), p}; }});
        out.push_back({"strong-fort-binomial", "P(Binom(d-1, (1-p)(1-2/kappa)) <= d-theta+1) <= 2/(3d), " + tag,
                       Relation::le, [=] { return std::pair{binom_cdf(d - 1, s, d - theta + 1), 2.0 / (3.0 * d)}; }});
    }
    {
        const int d = 3, kappa = 324;
        const double q = 0.5 * std::pow(d, -4.0);
        const double s = (1.0 - q) * (1.0 - 2.0 / kappa);
        const std::string tag = fmt("d=%d theta=2 kappa=%d", d, kappa);
        out.push_back({"strong-fort-binomial", "hypothesis kappa >= 12 d^3, " + tag, Relation::ge, [=] {
                           const auto c = cond_cca_small_theta(d, 2, kappa);
                           return std::pair{c.lhs, c.rhs};
                       }});
        out.push_back({"strong-fort-binomial", "P(Binom(d, (1-q)(1-2/kappa)) <= d-2) <= q, " + tag, Relation::le,
                       [=] { return std::pair{binom_cdf(d, s, d - 2), q}; }});
        out.push_back({"strong-fort-binomial", "P(Binom(d-1, (1-q)(1-2/kappa)) <= d-2) <= 1/(3d^2), " + tag,
                       Relation::le, [=] { return std::pair{binom_cdf(d - 1, s, d - 2), 1.0 / (3.0 * d * d)}; }});
    }

    // Fixed-point certificates at the headline parameter points.
    out.push_back({"fixed-point", "b1(1e-4; d=100, theta=100, kappa=3) <= 1e-4", Relation::le,
                   [] { return std::pair{b1(1e-4, 100, 100, 3), 1e-4}; }});
    out.push_back({"fixed-point", "b2(87^-2; d=87, theta=2, kappa=3) <= 87^-2", Relation::le,
                   [] { return std::pair{b2(1.0 / (87.0 * 87.0), 87, 2, 3), 1.0 / (87.0 * 87.0)}; }});
    out.push_back({"fixed-point", "fluctuation condition at d=87, theta=2, kappa=3", Relation::ge, [] {
                       const auto c = cond_fluctuation(87, 2, 3);
                       return std::pair{c.lhs, c.rhs};
                   }});

    // Product bound over kappa in [3, 50].
    for (int theta : {2, 3}) {
        out.push_back({"product-bound", fmt("max over kappa in [3,50] of log-product <= exponent, theta=%d", theta),
                       Relation::le, [theta] {
                           double worst = -1.0;
                           for (int kappa = 3; kappa <= 50; ++kappa) {
                               worst = std::max(worst, product_bound_check(theta, kappa).lhs_log);
                           }
                           return std::pair{worst, product_bound_check(theta, 3).rhs_log};
                       }});
    }

    // First-moment bound vs its relaxed closed form (t >= kappa).
    for (auto [d, theta, kappa] : {std::tuple{5, 2, 3}, std::tuple{5, 2, 8}, std::tuple{10, 3, 4}, std::tuple{4, 4, 3}}) {
        for (int t = kappa; t <= kappa + 2; ++t) {
            out.push_back({"excitation-bound",
                           fmt("log union bound <= log relaxed bound, d=%d theta=%d kappa=%d t=%d", d, theta, kappa, t),
                           Relation::le, [=] {
                               return std::pair{excitation_union_bound(d, theta, kappa, t),
                                                excitation_union_bound_relaxed(d, theta, kappa, t)};
                           }});
        }
    }

    // Chernoff and Markov spot grid: worst ratio exact / bound over the grid.
    for (int n : {10, 50, 200, 1000}) {
        for (double p : {0.01, 0.1, 0.5, 0.9}) {
            out.push_back({"chernoff", fmt("max over delta of P(X <= (1-delta)mu) / bound <= 1, n=%d p=%g", n, p),
                           Relation::le, [=] {
                               const double mu = n * p;
                               double worst = 0.0;
                               for (double delta : {0.0, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
                                   const int k = static_cast<int>(std::floor((1.0 - delta) * mu + 1e-9));
                                   const double exact = k < 0 ? 0.0 : binom_cdf(n, p, std::min(k, n));
                                   worst = std::max(worst, exact / chernoff_lower_tail(mu, delta));
                               }
                               return std::pair{worst, 1.0};
                           }});
            out.push_back({"markov", fmt("max over k of P(X >= k) / (mu e / k)^k <= 1, n=%d p=%g", n, p), Relation::le,
                           [=] {
                               const double mu = n * p;
                               double worst = 0.0;
                               for (int k = 1; k <= n; ++k) {
                                   const double bound = markov_binom_tail(mu, k);
                                   if (bound == 0.0) continue;
                                   worst = std::max(worst, binom_tail(n, p, k) / bound);
                               }
                               return std::pair{worst, 1.0};
                           }});
        }
    }
    return out;
}

// Evaluates one check. A positive perturbation tightens every comparison by
// that relative amount (a sensitivity probe for the suite itself).
inline BoundResult run_check(const BoundCheck& c, double perturb = 0.0) {
    const auto [lhs, rhs] = c.eval();
    BoundResult r{c.group, c.name, c.relation, lhs, rhs, false};
    const double slack = perturb * std::abs(rhs);
    r.passed = c.relation == Relation::le ? lhs <= rhs - slack : lhs >= rhs + slack;
    return r;
}

inline std::vector<BoundResult> run_bound_checks(double perturb = 0.0) {
    std::vector<BoundResult> out;
    for (const auto& c : bound_checks()) out.push_back(run_check(c, perturb));
    return out;
}

} // namespace ccatree
