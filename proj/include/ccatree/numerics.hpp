#pragma once

// Binomial probabilities, the fort/rainbow failure maps B1 and B2 with their
// smallest fixed points, and the closed-form bounds and parameter conditions
// attached to them.

#include "ccatree/errors.hpp"
#include "ccatree/parallel.hpp"
#include "ccatree/structures.hpp"
#include "ccatree/tree.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccatree {

using BigInt = boost::multiprecision::cpp_int;

// ---------------------------------------------------------------------------
// Compensated summation

class NeumaierSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// ---------------------------------------------------------------------------
// Binomial distribution
//
// Terms are taken relative to the pmf at the mode and generated by the ratio
// recurrence, so no factorials or log-gamma values enter the result; a mass
// over [a, b] is the ratio of two compensated sums of those relative terms.

namespace detail {

inline void check_probability(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("probability must lie in [0,1] (got " + std::to_string(p) + ")");
}

// Terms below this fraction of the running sum are dropped; the remaining
// tail is smaller still because terms decay geometrically past that point.
inline constexpr double kNegligible = 1e-19;

// P(a <= X <= b) for X ~ Binom(n, p), with q = 1 - p supplied separately so
// callers can pass an accurately computed complement.
inline double binom_mass(int n, double p, double q, int a, int b) {
    if (n < 0) throw ParameterError("binomial n must be >= 0");
    check_probability(p);
    a = std::max(a, 0);
    b = std::min(b, n);
    if (a > b) return 0.0;
    if (p == 0.0) return a == 0 ? 1.0 : 0.0;
    if (q == 0.0) return b == n ? 1.0 : 0.0;

    const double odds = p / q;
    int mode = static_cast<int>(std::floor((static_cast<double>(n) + 1.0) * p));
    mode = std::clamp(mode, 0, n);
    auto up = [&](int j) { return static_cast<double>(n - j) / static_cast<double>(j + 1) * odds; };
    auto down = [&](int j) { return static_cast<double>(j) / (static_cast<double>(n - j + 1) * odds); };

    NeumaierSum total;
    total.add(1.0);
    {
        double r = 1.0;
        for (int j = mode; j < n; ++j) {
            r *= up(j);
            total.add(r);
            if (r < kNegligible * total.value()) break;
        }
        r = 1.0;
        for (int j = mode; j > 0; --j) {
            r *= down(j);
            total.add(r);
            if (r < kNegligible * total.value()) break;
        }
    }

    NeumaierSum part;
    if (b < mode) {
        double r = 1.0;
        for (int j = mode; j > b; --j) r *= down(j);
        for (int j = b; j >= a; --j) {
            part.add(r);
            if (r == 0.0 || r < kNegligible * part.value()) break;
            if (j > a) r *= down(j);
        }
    } else if (a > mode) {
        double r = 1.0;
        for (int j = mode; j < a; ++j) r *= up(j);
        for (int j = a; j <= b; ++j) {
            part.add(r);
            if (r == 0.0 || r < kNegligible * part.value()) break;
            if (j < b) r *= up(j);
        }
    } else {
        part.add(1.0);
        double r = 1.0;
        for (int j = mode; j > a; --j) {
            r *= down(j);
            part.add(r);
            if (r < kNegligible * part.value()) break;
        }
        r = 1.0;
        for (int j = mode; j < b; ++j) {
            r *= up(j);
            part.add(r);
            if (r < kNegligible * part.value()) break;
        }
    }
    return std::clamp(part.value() / total.value(), 0.0, 1.0);
}

} // namespace detail

// P(X <= k), X ~ Binom(n, p).
inline double binom_cdf(int n, double p, int k) { return detail::binom_mass(n, p, 1.0 - p, 0, k); }

// P(X >= k).
inline double binom_tail(int n, double p, int k) { return detail::binom_mass(n, p, 1.0 - p, k, n); }

// P(X = k).
inline double binom_pmf(int n, double p, int k) { return detail::binom_mass(n, p, 1.0 - p, k, k); }

// Exact binomial coefficient.
inline BigInt binomial_coefficient(int n, int k) {
    if (k < 0 || n < 0 || k > n) return 0;
    k = std::min(k, n - k);
    BigInt c = 1;
    for (int i = 0; i < k; ++i) {
        c *= (n - i);
        c /= (i + 1);
    }
    return c;
}

inline double log_binomial_coefficient(int n, int k) {
    if (k < 0 || n < 0 || k > n) return -std::numeric_limits<double>::infinity();
    k = std::min(k, n - k);
    if (k <= 64) {
        double s = 0.0;
        for (int i = 0; i < k; ++i) s += std::log(static_cast<double>(n - i) / static_cast<double>(i + 1));
        return s;
    }
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// ---------------------------------------------------------------------------
// Failure maps

enum class FixedPointMap { b1, b2 };

inline std::string_view to_string(FixedPointMap m) { return m == FixedPointMap::b1 ? "b1" : "b2"; }

inline FixedPointMap fixed_point_map_from_string(std::string_view s) {
    if (s == "b1" || s == "B1") return FixedPointMap::b1;
    if (s == "b2" || s == "B2") return FixedPointMap::b2;
    throw ParameterError("unknown map '" + std::string(s) + "' (expected b1|b2)");
}

struct MapParams {
    FixedPointMap map = FixedPointMap::b1;
    int d = 2;
    int theta = 2;
    int kappa = 3;

    void validate() const {
        if (theta < 2) throw ParameterError("theta must be >= 2");
        if (d < theta) throw ParameterError("map requires d >= theta (d=" + std::to_string(d) +
                                            ", theta=" + std::to_string(theta) + ")");
        if (kappa < 3) throw ParameterError("kappa must be >= 3");
    }

    friend bool operator==(const MapParams&, const MapParams&) = default;
};

namespace detail {
inline void check_unit(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw ParameterError("x must lie in [0,1] (got " + std::to_string(x) + ")");
}
inline void check_map(int d, int theta, int kappa) { MapParams{FixedPointMap::b1, d, theta, kappa}.validate(); }

// Success probability (1-x)(1-1/kappa) and its complement x + (1-x)/kappa.
inline std::pair<double, double> b1_success(double x, int kappa) {
    const double k = kappa;
    return {(1.0 - x) * (1.0 - 1.0 / k), x + (1.0 - x) / k};
}
inline std::pair<double, double> b2_success(double x, int kappa) {
    const double k = kappa;
    const double p = (1.0 - x) / k;
    return {p, 1.0 - p};
}
} // namespace detail

// Probability that the root of the d-ary tree fails to anchor a rigid
// (theta-2)-fort, one level up from child failure probability x:
// P(Binom(d, (1-x)(1-1/kappa)) <= d-theta+1).
inline double b1(double x, int d, int theta, int kappa) {
    detail::check_unit(x);
    detail::check_map(d, theta, kappa);
    const auto [p, q] = detail::b1_success(x, kappa);
    return detail::binom_mass(d, p, q, 0, d - theta + 1);
}

// Rainbow analogue: P(Binom(d, (1-x)/kappa) <= theta-1).
inline double b2(double x, int d, int theta, int kappa) {
    detail::check_unit(x);
    detail::check_map(d, theta, kappa);
    const auto [p, q] = detail::b2_success(x, kappa);
    return detail::binom_mass(d, p, q, 0, theta - 1);
}

// 1 - b1 and 1 - b2 summed directly (accurate when b is close to 1).
inline double b1_complement(double x, int d, int theta, int kappa) {
    detail::check_unit(x);
    detail::check_map(d, theta, kappa);
    const auto [p, q] = detail::b1_success(x, kappa);
    return detail::binom_mass(d, p, q, d - theta + 2, d);
}

inline double b2_complement(double x, int d, int theta, int kappa) {
    detail::check_unit(x);
    detail::check_map(d, theta, kappa);
    const auto [p, q] = detail::b2_success(x, kappa);
    return detail::binom_mass(d, p, q, theta, d);
}

inline double b1_deriv(double x, int d, int theta, int kappa) {
    detail::check_unit(x);
    detail::check_map(d, theta, kappa);
    const auto [p, q] = detail::b1_success(x, kappa);
    return d * (1.0 - 1.0 / kappa) * detail::binom_mass(d - 1, p, q, d - theta + 1, d - theta + 1);
}

inline double b2_deriv(double x, int d, int theta, int kappa) {
    detail::check_unit(x);
    detail::check_map(d, theta, kappa);
    const auto [p, q] = detail::b2_success(x, kappa);
    return static_cast<double>(d) / kappa * detail::binom_mass(d - 1, p, q, theta - 1, theta - 1);
}

inline double apply_map(const MapParams& m, double x) {
    return m.map == FixedPointMap::b1 ? b1(x, m.d, m.theta, m.kappa) : b2(x, m.d, m.theta, m.kappa);
}

// One level of the structure recursion for any variant: a node with
// `children` children needing `requirement` of them to qualify, each child
// qualifying independently with probability (1-x)*edge_probability.
inline double structure_failure_step(StructureVariant variant, double x, int children, int requirement, int kappa) {
    if (requirement <= 0) return 0.0;
    const double k = kappa;
    double p = 0.0, q = 1.0;
    switch (variant) {
    case StructureVariant::rigid_fort:
        p = (1.0 - x) * (1.0 - 1.0 / k);
        q = x + (1.0 - x) / k;
        break;
    case StructureVariant::strongly_rigid_fort:
        p = (1.0 - x) * (1.0 - 2.0 / k);
        q = x + (1.0 - x) * 2.0 / k;
        break;
    case StructureVariant::rainbow:
        p = (1.0 - x) / k;
        q = 1.0 - p;
        break;
    }
    return detail::binom_mass(children, p, q, 0, requirement - 1);
}

// Probability that mark() leaves the root unmarked on a uniformly colored
// truncation of the given kind and depth.
inline double root_failure_probability(StructureVariant variant, TreeKind kind, int d, int theta, int kappa,
                                       int depth) {
    if (depth < 0) throw ParameterError("depth must be >= 0");
    if (depth == 0) return 0.0;
    const StructureQuery q{variant, theta};
    auto need = [&](int deg_inf, bool is_root) {
        if (variant == StructureVariant::rainbow) return theta;
        return std::max(0, deg_inf - q.slack() - (is_root ? 0 : 1));
    };
    double y = 0.0;
    for (int level = 1; level < depth; ++level) y = structure_failure_step(variant, y, d, need(d + 1, false), kappa);
    const int root_children = kind == TreeKind::dary_ball ? d : d + 1;
    const int root_deg = kind == TreeKind::dary_ball ? d : d + 1;
    return structure_failure_step(variant, y, root_children, need(root_deg, true), kappa);
}

// ---------------------------------------------------------------------------
// Kleene iteration

enum class FixedPointClass { below_one, numerically_one };

inline std::string_view to_string(FixedPointClass c) {
    return c == FixedPointClass::below_one ? "below-one" : "numerically-one";
}

struct FixedPointResult {
    MapParams params;
    int iterates = 0;
    double y_star = 0.0;
    double residual = 0.0;               // |B(y*) - y*|
    std::optional<double> certificate;   // x0 < 1 with B(x0) <= x0
    FixedPointClass classification = FixedPointClass::numerically_one;
    double tol = 1e-12;
};

inline constexpr double kDefaultFixedPointTol = 1e-12;
inline constexpr int kDefaultFixedPointMaxIter = 100000;

// y_n of the sequence y_0 = 0, y_{n+1} = B(y_n).
inline double kleene_iterate(const MapParams& m, int n) {
    m.validate();
    double y = 0.0;
    for (int i = 0; i < n; ++i) y = apply_map(m, y);
    return y;
}

// Candidate points for the certificate search, ascending.
inline std::vector<double> certificate_grid() {
    std::vector<double> xs;
    for (int j = 0;; ++j) {
        const double x = 1e-8 * std::pow(10.0, j / 4.0);
        if (x >= 1.0) break;
        xs.push_back(x);
    }
    for (int i = 1; i <= 1000; ++i) xs.push_back(i / 1001.0);
    std::sort(xs.begin(), xs.end());
    return xs;
}

inline FixedPointResult kleene_fp(const MapParams& m, double tol = kDefaultFixedPointTol,
                                  int max_iter = kDefaultFixedPointMaxIter) {
    m.validate();
    if (!(tol > 0.0)) throw ParameterError("tolerance must be > 0");
    if (max_iter < 1) throw ParameterError("max_iter must be >= 1");

    FixedPointResult r;
    r.params = m;
    r.tol = tol;
    double y = 0.0;
    for (int n = 0; n < max_iter; ++n) {
        const double next = apply_map(m, y);
        if (next < y - tol) {
            throw InternalError("Kleene iterates decreased at step " + std::to_string(n + 1) + " (" +
                                std::to_string(y) + " -> " + std::to_string(next) + ")");
        }
        const bool done = std::abs(next - y) < tol;
        y = std::max(y, next);
        r.iterates = n + 1;
        if (done) break;
    }
    r.y_star = y;
    r.residual = std::abs(apply_map(m, y) - y);

    for (double x : certificate_grid()) {
        if (x >= 1.0 - 10.0 * tol) break;
        if (apply_map(m, x) <= x) {
            r.certificate = x;
            break;
        }
    }
    r.classification = (r.certificate || r.y_star < 1.0 - 10.0 * tol) ? FixedPointClass::below_one
                                                                      : FixedPointClass::numerically_one;
    if (r.certificate && r.y_star > *r.certificate + tol) {
        throw InternalError("Kleene limit exceeds its certificate bound");
    }
    return r;
}

// ---------------------------------------------------------------------------
// Phase grids

struct PhaseGrid {
    FixedPointMap map = FixedPointMap::b1;
    int theta = 2;
    std::vector<int> d_values;      // rows
    std::vector<int> kappa_values;  // columns
    std::vector<double> values;     // row-major y*

    [[nodiscard]] double at(std::size_t row, std::size_t col) const { return values[row * kappa_values.size() + col]; }
};

inline PhaseGrid phase_grid(FixedPointMap map, int theta, std::vector<int> d_values, std::vector<int> kappa_values,
                            double tol = kDefaultFixedPointTol, int workers = 1) {
    if (d_values.empty() || kappa_values.empty()) throw ParameterError("phase grid ranges must be non-empty");
    std::sort(d_values.begin(), d_values.end());
    std::sort(kappa_values.begin(), kappa_values.end());
    PhaseGrid g{map, theta, std::move(d_values), std::move(kappa_values), {}};
    for (int d : g.d_values) {
        for (int k : g.kappa_values) MapParams{map, d, theta, k}.validate();
    }
    g.values.resize(g.d_values.size() * g.kappa_values.size());
    const std::size_t cols = g.kappa_values.size();
    parallel_for(g.values.size(), workers, [&](int, std::size_t i) {
        const MapParams m{map, g.d_values[i / cols], theta, g.kappa_values[i % cols]};
        g.values[i] = kleene_fp(m, tol).y_star;
    });
    return g;
}

// ---------------------------------------------------------------------------
// Tail bounds for binomials

// exp(-delta^2 mu / 2), bounding P(X <= (1-delta) mu).
inline double chernoff_lower_tail(double mu, double delta) {
    if (!(delta >= 0.0 && delta <= 1.0)) throw ParameterError("delta must lie in [0,1]");
    if (!(mu >= 0.0)) throw ParameterError("mu must be >= 0");
    return std::exp(-delta * delta * mu / 2.0);
}

// (mu e / k)^k, bounding P(X >= k).
inline double markov_binom_tail(double mu, int k) {
    if (k < 1) throw ParameterError("k must be >= 1");
    if (!(mu >= 0.0)) throw ParameterError("mu must be >= 0");
    if (mu == 0.0) return 0.0;
    return std::exp(k * (std::log(mu) + 1.0 - std::log(static_cast<double>(k))));
}

// ---------------------------------------------------------------------------
// Parameter conditions
//
// Each condition is an inequality lhs >= rhs evaluated in double precision.
// Values within a relative band of 1e-9 are reported as boundary.

enum class Verdict { fails, boundary, holds };

inline std::string_view to_string(Verdict v) {
    switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::boundary: return "boundary";
    default: return "fails";
    }
}

inline constexpr double kGuardBand = 1e-9;

struct Condition {
    double lhs = 0.0;
    double rhs = 0.0;
    Verdict verdict = Verdict::fails;

    [[nodiscard]] bool holds() const noexcept { return verdict == Verdict::holds; }
    [[nodiscard]] bool boundary() const noexcept { return verdict == Verdict::boundary; }
    explicit operator bool() const noexcept { return holds(); }
};

inline Condition compare_ge(double lhs, double rhs) {
    const double scale = std::max({std::abs(lhs), std::abs(rhs), std::numeric_limits<double>::min()});
    Verdict v = Verdict::fails;
    if (std::abs(lhs - rhs) <= kGuardBand * scale) {
        v = Verdict::boundary;
    } else if (lhs > rhs) {
        v = Verdict::holds;
    }
    return {lhs, rhs, v};
}

namespace detail {
inline void check_condition_params(int d, int theta, int kappa) {
    if (d < 2) throw ParameterError("d must be >= 2");
    if (theta < 2) throw ParameterError("theta must be >= 2");
    if (kappa < 3) throw ParameterError("kappa must be >= 3");
}
} // namespace detail

// kappa (theta - 3 sqrt(d ln d)) >= d
inline Condition cond_fixation(int d, int theta, int kappa) {
    detail::check_condition_params(d, theta, kappa);
    const double dd = d;
    return compare_ge(kappa * (theta - 3.0 * std::sqrt(dd * std::log(dd))), dd);
}

// kappa (theta - 1) <= d - sqrt(6 d kappa ln d)
inline Condition cond_fluctuation(int d, int theta, int kappa) {
    detail::check_condition_params(d, theta, kappa);
    const double dd = d;
    return compare_ge(dd - std::sqrt(6.0 * dd * kappa * std::log(dd)), static_cast<double>(kappa) * (theta - 1));
}

// theta >= 3: kappa (theta - 2) >= 9 e d^{1 + 1/(theta-2)};  theta = 2: kappa >= 12 d^3
inline Condition cond_cca_small_theta(int d, int theta, int kappa) {
    detail::check_condition_params(d, theta, kappa);
    const double dd = d;
    if (theta == 2) return compare_ge(kappa, 12.0 * dd * dd * dd);
    return compare_ge(static_cast<double>(kappa) * (theta - 2),
                      9.0 * std::numbers::e * std::pow(dd, 1.0 + 1.0 / (theta - 2)));
}

// 1 / (theta^kappa - 1) without forming theta^kappa.
inline double inv_power_minus_one(int theta, int kappa) {
    return 1.0 / std::expm1(kappa * std::log(static_cast<double>(theta)));
}

// kappa >= e (d e / theta)^{1 + 1/(theta^kappa - 1)}
inline Condition cond_ghm_small_theta(int d, int theta, int kappa) {
    detail::check_condition_params(d, theta, kappa);
    const double base = static_cast<double>(d) * std::numbers::e / theta;
    return compare_ge(kappa, std::numbers::e * std::pow(base, 1.0 + inv_power_minus_one(theta, kappa)));
}

// ---------------------------------------------------------------------------
// GHM kappa thresholds

enum class Refinement { general, theta2, theta3 };

inline std::string_view to_string(Refinement r) {
    switch (r) {
    case Refinement::theta2: return "theta2";
    case Refinement::theta3: return "theta3";
    default: return "general";
    }
}

inline Refinement refinement_from_string(std::string_view s) {
    if (s == "general") return Refinement::general;
    if (s == "theta2") return Refinement::theta2;
    if (s == "theta3") return Refinement::theta3;
    throw ParameterError("unknown refinement '" + std::string(s) + "' (expected general|theta2|theta3)");
}

inline Refinement default_refinement(int theta) {
    return theta == 2 ? Refinement::theta2 : theta == 3 ? Refinement::theta3 : Refinement::general;
}

inline constexpr int kMaxKappaScan = 1000000;

// Whether kappa meets the GHM fixation condition for (theta, d). The theta2
// and theta3 refinements replace C(d, theta) <= (de/theta)^theta by d^2/2 and
// d^3/6 and are strict inequalities. theta == d always passes (C(d,d) = 1).
inline bool ghm_kappa_passes(int theta, int d, int kappa, Refinement refinement) {
    if (theta == d) return true;
    switch (refinement) {
    case Refinement::theta2: {
        const double rhs = std::exp(0.75) * std::pow(d / std::numbers::sqrt2, 1.0 + inv_power_minus_one(2, kappa));
        return compare_ge(kappa, rhs).holds();
    }
    case Refinement::theta3: {
        const double rhs =
            std::exp(5.0 / 24.0) * std::pow(d / std::cbrt(6.0), 1.0 + inv_power_minus_one(3, kappa));
        return compare_ge(kappa, rhs).holds();
    }
    default: {
        const auto c = cond_ghm_small_theta(d, theta, kappa);
        return c.verdict != Verdict::fails;
    }
    }
}

// Smallest kappa >= 3 passing ghm_kappa_passes. The right-hand sides are
// non-increasing in kappa, so the first pass is the threshold.
inline int ghm_kappa_threshold(int theta, int d, Refinement refinement) {
    if (d < 2) throw ParameterError("d must be >= 2");
    if (theta < 2) throw ParameterError("theta must be >= 2");
    if (refinement == Refinement::theta2 && theta != 2) throw ParameterError("theta2 refinement needs theta = 2");
    if (refinement == Refinement::theta3 && theta != 3) throw ParameterError("theta3 refinement needs theta = 3");
    for (int kappa = 3; kappa <= kMaxKappaScan; ++kappa) {
        if (ghm_kappa_passes(theta, d, kappa, refinement)) return kappa;
    }
    throw NotFound("no kappa <= " + std::to_string(kMaxKappaScan) + " satisfies the GHM condition");
}

// ---------------------------------------------------------------------------
// Counting and union bounds for GHM excitation

struct SubtreeCount {
    std::optional<BigInt> exact;  // present when the count is at most 1e300
    double log_value = 0.0;
};

namespace detail {
inline void check_subtree_params(int d, int theta, int t) {
    if (theta < 2) throw ParameterError("theta must be >= 2");
    if (d < theta) throw ParameterError("subtree count needs d >= theta");
    if (t < 1) throw ParameterError("t must be >= 1");
}
// theta + theta^2 + ... + theta^{t-1} as a double.
inline double geometric_exponent(int theta, int t) {
    double sum = 0.0, term = 1.0;
    for (int s = 1; s < t; ++s) {
        term *= theta;
        sum += term;
    }
    return sum;
}
} // namespace detail

// Number of full theta-ary subtrees of depth t rooted at a vertex of the
// (d+1)-regular tree: C(d+1, theta) * C(d, theta)^{(theta^t - theta)/(theta - 1)}.
inline SubtreeCount subtree_count(int d, int theta, int t) {
    detail::check_subtree_params(d, theta, t);
    const double exponent = detail::geometric_exponent(theta, t);
    SubtreeCount out;
    const double log_inner = log_binomial_coefficient(d, theta);
    out.log_value = log_binomial_coefficient(d + 1, theta) + (log_inner == 0.0 ? 0.0 : exponent * log_inner);
    if (out.log_value <= 300.0 * std::log(10.0) + 1e-9) {
        BigInt count = binomial_coefficient(d + 1, theta);
        const BigInt inner = binomial_coefficient(d, theta);
        if (inner != 1) count *= boost::multiprecision::pow(inner, static_cast<unsigned>(exponent));
        out.exact = count;
    }
    return out;
}

// Log of the first-moment bound on P(gamma_t(root) = 1): subtree count times
// the probability that one subtree satisfies the excitation level conditions
// (kappa^{-(theta^t + theta^{t-1})} * prod_m ((m+1)/kappa)^{theta^{t-1-m}},
// over levels t-1-m >= 0, m = 1..kappa-2). Uses exact binomial coefficients.
inline double excitation_union_bound(int d, int theta, int kappa, int t) {
    detail::check_subtree_params(d, theta, t);
    if (kappa < 3) throw ParameterError("kappa must be >= 3");
    const double th = theta;
    const double lk = std::log(static_cast<double>(kappa));
    double log_p = -(std::pow(th, t) + std::pow(th, t - 1)) * lk;
    for (int m = 1; m <= kappa - 2 && t - 1 - m >= 0; ++m) {
        log_p += std::pow(th, t - 1 - m) * std::log((m + 1.0) / kappa);
    }
    return subtree_count(d, theta, t).log_value + log_p;
}

// The same bound for t >= kappa after relaxing C(d, theta) <= (de/theta)^theta
// and the subtree exponent to theta^t/(theta-1):
// C(d+1,theta) [ (de/theta)^{theta^kappa/(theta-1)} prod_{j=2}^{kappa-1} j^{theta^{kappa-1-j}}
//               / kappa^{(theta^kappa - 1)/(theta-1)} ]^{theta^{t-kappa+1}}.
inline double excitation_union_bound_relaxed(int d, int theta, int kappa, int t) {
    detail::check_subtree_params(d, theta, t);
    if (kappa < 3) throw ParameterError("kappa must be >= 3");
    if (t < kappa) throw ParameterError("relaxed excitation bound needs t >= kappa");
    const double th = theta;
    const double tk = std::pow(th, kappa);
    double inner = tk / (th - 1.0) * std::log(d * std::numbers::e / th);
    for (int j = 2; j <= kappa - 1; ++j) inner += std::pow(th, kappa - 1 - j) * std::log(static_cast<double>(j));
    inner -= (tk - 1.0) / (th - 1.0) * std::log(static_cast<double>(kappa));
    return log_binomial_coefficient(d + 1, theta) + std::pow(th, t - kappa + 1) * inner;
}

// min(1, 2 C(d+1, theta) exp(-theta^{n-kappa+1})) for n >= kappa.
inline double ghm_tail_bound(int n, int d, int theta, int kappa) {
    if (kappa < 3 || theta < 2 || d < 2) throw ParameterError("invalid (d, theta, kappa)");
    if (n < kappa) throw ParameterError("GHM tail bound needs n >= kappa");
    const double log_b =
        std::log(2.0) + log_binomial_coefficient(d + 1, theta) - std::pow(static_cast<double>(theta), n - kappa + 1);
    return std::min(1.0, std::exp(log_b));
}

// d^{-n}.
inline double fixation_tail_bound(int n, int d) {
    if (n < 0) throw ParameterError("n must be >= 0");
    if (d < 2) throw ParameterError("d must be >= 2");
    return std::min(1.0, std::pow(static_cast<double>(d), -n));
}

struct ProductBoundCheck {
    double lhs_log = 0.0;
    double rhs_log = 0.0;
    bool passes = false;
};

// [2^{theta^{kappa-3}} 3^{theta^{kappa-4}} ... (kappa-1)]^{(theta-1)/(theta^kappa-1)}
//   <= exp((2 theta - 1) / (2 theta (theta-1)^2)), compared in log space.
inline ProductBoundCheck product_bound_check(int theta, int kappa) {
    if (theta < 2) throw ParameterError("theta must be >= 2");
    if (kappa < 3) throw ParameterError("kappa must be >= 3");
    const double th = theta;
    const double lt = std::log(th);
    // theta^{kappa-1-j} / (theta^kappa - 1) = theta^{-1-j} / (1 - theta^{-kappa})
    const double denom = -std::expm1(-kappa * lt);
    NeumaierSum s;
    for (int j = 2; j <= kappa - 1; ++j) s.add(std::exp(-(1.0 + j) * lt) * std::log(static_cast<double>(j)));
    ProductBoundCheck out;
    out.lhs_log = (th - 1.0) * s.value() / denom;
    out.rhs_log = (2.0 * th - 1.0) / (2.0 * th * (th - 1.0) * (th - 1.0));
    out.passes = out.lhs_log <= out.rhs_log + 1e-12;
    return out;
}

} // namespace ccatree
