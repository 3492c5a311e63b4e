#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "evoadam/objectives.hpp"
#include "evoadam/rng.hpp"

namespace evoadam {

// Desk-scale bi-objective benchmarks with known Pareto fronts.
//
// quadratic_pair:  f1 = |x - a|^2, f2 = |x - b|^2. The front is the image of
//   the segment [a, b]; every off-segment point is dominated by its projection.
// concave_front:   decision variables are squashed into (0,1) by the logistic
//   function; u1 = sigma(x1), g = 1 + 9 * mean(sigma(x2..xn)),
//   f1 = u1, f2 = g * (1 - (u1/g)^2). At g = 1 the front is f2 = 1 - f1^2,
//   concave, so weighted sums of the objectives are minimized only at its
//   endpoints while the Tchebycheff scalarization reaches interior points.
struct AnalyticProblem {
    enum class Kind { quadratic_pair, concave_front };

    Kind kind = Kind::quadratic_pair;
    std::size_t dimension = 2;
    std::uint64_t seed = 0;
    std::vector<double> a, b;   // quadratic_pair anchors
    std::vector<double> start;  // initial decision vector

    void validate() const {
        if (kind == Kind::quadratic_pair) {
            if (a.size() != dimension || b.size() != dimension)
                throw std::invalid_argument("quadratic pair: anchor dimension mismatch");
            if (a == b) throw std::invalid_argument("quadratic pair: anchors must be distinct");
        } else {
            if (dimension < 2) throw std::invalid_argument("concave front: dimension must be >= 2");
        }
        if (start.size() != dimension)
            throw std::invalid_argument("analytic problem: start dimension mismatch");
    }
};

// Seeded anchors: a near the origin, b at distance `separation` in a random
// direction. Start at zero.
inline AnalyticProblem make_quadratic_pair(std::size_t dim, std::uint64_t seed, double separation) {
    AnalyticProblem p;
    p.kind = AnalyticProblem::Kind::quadratic_pair;
    p.dimension = dim;
    p.seed = seed;
    Rng rng(stream_seed(seed, 0xA11C));
    p.a.resize(dim);
    p.b.resize(dim);
    double norm = 0.0;
    std::vector<double> dir(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        p.a[i] = 0.05 * rng.normal();
        dir[i] = rng.normal();
        norm += dir[i] * dir[i];
    }
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < dim; ++i) p.b[i] = p.a[i] + separation * dir[i] / norm;
    p.start.assign(dim, 0.0);
    return p;
}

// Seeded start: x1 near sigma^{-1}(u1_init), the rest near `rest_init`
// (very negative rest_init starts the curvature term g near 1).
inline AnalyticProblem make_concave_front(std::size_t dim, std::uint64_t seed, double u1_init,
                                          double rest_init) {
    if (!(u1_init > 0.0 && u1_init < 1.0))
        throw std::invalid_argument("concave front: u1_init must be in (0,1)");
    AnalyticProblem p;
    p.kind = AnalyticProblem::Kind::concave_front;
    p.dimension = dim;
    p.seed = seed;
    Rng rng(stream_seed(seed, 0xC0CA));
    p.start.resize(dim);
    p.start[0] = std::log(u1_init / (1.0 - u1_init)) + 0.01 * rng.normal();
    for (std::size_t i = 1; i < dim; ++i) p.start[i] = rest_init + 0.01 * rng.normal();
    return p;
}

struct AnalyticEval {
    ObjectiveValues values;
    std::vector<double> grad_f1;
    std::vector<double> grad_f2;
};

inline AnalyticEval analytic_eval(const AnalyticProblem& p, const std::vector<double>& x) {
    p.validate();
    if (x.size() != p.dimension)
        throw std::invalid_argument("analytic_eval: dimension mismatch");
    AnalyticEval out;
    out.grad_f1.assign(p.dimension, 0.0);
    out.grad_f2.assign(p.dimension, 0.0);
    if (p.kind == AnalyticProblem::Kind::quadratic_pair) {
        double f1 = 0.0, f2 = 0.0;
        for (std::size_t i = 0; i < p.dimension; ++i) {
            const double da = x[i] - p.a[i];
            const double db = x[i] - p.b[i];
            f1 += da * da;
            f2 += db * db;
            out.grad_f1[i] = 2.0 * da;
            out.grad_f2[i] = 2.0 * db;
        }
        out.values = {f1, f2};
        return out;
    }
    const std::size_t n = p.dimension;
    const double u1 = sigmoid_scalar(x[0]);
    const double du1 = u1 * (1.0 - u1);
    double mean_rest = 0.0;
    for (std::size_t i = 1; i < n; ++i) mean_rest += sigmoid_scalar(x[i]);
    mean_rest /= static_cast<double>(n - 1);
    const double g = 1.0 + 9.0 * mean_rest;
    const double ratio = u1 / g;
    out.values.f1 = u1;
    out.values.f2 = g * (1.0 - ratio * ratio);
    out.grad_f1[0] = du1;
    out.grad_f2[0] = -2.0 * ratio * du1;
    const double dgsens = (1.0 + ratio * ratio) * 9.0 / static_cast<double>(n - 1);
    for (std::size_t i = 1; i < n; ++i) {
        const double si = sigmoid_scalar(x[i]);
        out.grad_f2[i] = dgsens * si * (1.0 - si);
    }
    return out;
}

// A point on the analytic Pareto front at parameter t in [0, 1].
inline ObjectiveValues analytic_pf(const AnalyticProblem& p, double t) {
    p.validate();
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("analytic_pf: t out of [0,1]");
    if (p.kind == AnalyticProblem::Kind::quadratic_pair) {
        double l2 = 0.0;
        for (std::size_t i = 0; i < p.dimension; ++i) {
            const double d = p.b[i] - p.a[i];
            l2 += d * d;
        }
        return {t * t * l2, (1.0 - t) * (1.0 - t) * l2};
    }
    return {t, 1.0 - t * t};
}

}  // namespace evoadam
