#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "evoadam/objectives.hpp"
#include "evoadam/params.hpp"
#include "evoadam/rng.hpp"

namespace evoadam {

// Decomposition weights lambda_k = (N-k)/(N-1) for k = 1..N, so the first
// subproblem (lambda = 1) is pure fidelity and the last (lambda = 0) pure
// perception.
struct WeightGrid {
    std::vector<double> lambdas;

    static WeightGrid uniform(std::size_t n) {
        if (n < 2) throw std::invalid_argument("weight grid: need at least 2 weights");
        WeightGrid g;
        g.lambdas.resize(n);
        for (std::size_t k = 0; k < n; ++k)
            g.lambdas[k] = static_cast<double>(n - 1 - k) / static_cast<double>(n - 1);
        return g;
    }
};

// Moving componentwise minima of (f1, f2).
struct IdealPoint {
    double z1 = std::numeric_limits<double>::infinity();
    double z2 = std::numeric_limits<double>::infinity();
};

inline void update_ideal(IdealPoint& z, const ObjectiveValues& v) {
    z.z1 = std::min(z.z1, v.f1);
    z.z2 = std::min(z.z2, v.f2);
}

struct NeighborhoodMap {
    // neighbors[k]: indices of the n_nbr subproblems with nearest lambda,
    // sorted by (distance, index); k itself is always present.
    std::vector<std::vector<std::size_t>> neighbors;
};

struct EvoConfig {
    double eta = 20.0;     // SBX distribution index
    double sigma2 = 0.01;  // mutation variance
    double delta = 0.7;    // probability of drawing parents from the neighborhood
    std::size_t n_nbr = 3;

    void validate(std::size_t population) const {
        if (!(eta > 0.0)) throw std::invalid_argument("evo config: eta must be positive");
        if (sigma2 < 0.0) throw std::invalid_argument("evo config: sigma2 must be >= 0");
        if (!(delta >= 0.0 && delta <= 1.0))
            throw std::invalid_argument("evo config: delta must be in [0,1]");
        if (n_nbr < 2 || n_nbr > population)
            throw std::invalid_argument("evo config: n_nbr must be in [2, N]");
    }
};

// SBX spread factor from one uniform draw:
//   beta = (2r)^(1/(1+eta))            if r < 0.5
//   beta = (1/(2-2r))^(1/(1+eta))      otherwise
inline double sample_beta(double r, double eta) {
    if (!(r >= 0.0 && r < 1.0)) throw std::invalid_argument("sample_beta: r out of [0,1)");
    const double e = 1.0 / (1.0 + eta);
    if (r < 0.5) return std::pow(2.0 * r, e);
    return std::pow(1.0 / (2.0 - 2.0 * r), e);
}

// One beta for the whole flat vector: offspring = 0.5[(1+beta) t1 + (1-beta) t2].
inline FlatParams sbx_crossover(const FlatParams& t1, const FlatParams& t2, double beta) {
    if (!t1.same_layout(t2)) throw std::invalid_argument("sbx_crossover: layout mismatch");
    FlatParams out = t1;
    const double c1 = 0.5 * (1.0 + beta);
    const double c2 = 0.5 * (1.0 - beta);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = c1 * t1.data[i] + c2 * t2.data[i];
    return out;
}

// Add i.i.d. N(0, sigma2) noise to every element.
inline FlatParams mutate(const FlatParams& theta, double sigma2, Rng& rng) {
    if (sigma2 < 0.0) throw std::invalid_argument("mutate: sigma2 must be >= 0");
    FlatParams out = theta;
    if (sigma2 == 0.0) return out;
    const double std = std::sqrt(sigma2);
    for (double& v : out.data) v += std * rng.normal();
    return out;
}

struct ParentPick {
    std::size_t first = 0;
    std::size_t second = 0;
    bool from_neighborhood = false;
};

// With probability delta the mating pool is B(k), otherwise the whole
// population; two distinct indices are drawn uniformly from the pool.
inline ParentPick select_parents(std::size_t k, std::size_t population,
                                 const NeighborhoodMap& nbh, double delta, Rng& rng) {
    if (population < 2) throw std::invalid_argument("select_parents: population must be >= 2");
    if (k >= nbh.neighbors.size()) throw std::invalid_argument("select_parents: bad index");
    ParentPick pick;
    pick.from_neighborhood = rng.uniform() < delta;
    std::vector<std::size_t> pool;
    if (pick.from_neighborhood) {
        pool = nbh.neighbors[k];
    } else {
        pool.resize(population);
        for (std::size_t i = 0; i < population; ++i) pool[i] = i;
    }
    if (pool.size() < 2) throw std::invalid_argument("select_parents: pool smaller than 2");
    const std::size_t ia = static_cast<std::size_t>(rng.uniform() * static_cast<double>(pool.size()));
    std::size_t ib = static_cast<std::size_t>(rng.uniform() * static_cast<double>(pool.size() - 1));
    if (ib >= ia) ++ib;
    pick.first = pool[ia];
    pick.second = pool[ib];
    return pick;
}

// Tchebycheff aggregation F = max{lambda (f1 - z1), (1 - lambda)(f2 - z2)}.
inline double tchebycheff_value(const ObjectiveValues& v, double lambda, const IdealPoint& z) {
    if (!std::isfinite(v.f1) || !std::isfinite(v.f2) || !std::isfinite(z.z1) || !std::isfinite(z.z2))
        throw std::invalid_argument("tchebycheff_value: non-finite input");
    return std::max(lambda * (v.f1 - z.z1), (1.0 - lambda) * (v.f2 - z.z2));
}

// Replace iff the offspring is strictly better; ties keep the incumbent.
inline bool ea_replace(const ObjectiveValues& current, const ObjectiveValues& offspring,
                       double lambda, const IdealPoint& z) {
    return tchebycheff_value(offspring, lambda, z) < tchebycheff_value(current, lambda, z);
}

// B(k) = the n_nbr indices with smallest |lambda_j - lambda_k|, ties broken
// toward the smaller index.
inline NeighborhoodMap build_neighborhood(const WeightGrid& grid, std::size_t n_nbr) {
    const std::size_t n = grid.lambdas.size();
    if (n_nbr < 1 || n_nbr > n) throw std::invalid_argument("build_neighborhood: invalid n_nbr");
    NeighborhoodMap map;
    map.neighbors.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(n);
        for (std::size_t j = 0; j < n; ++j)
            dist.emplace_back(std::fabs(grid.lambdas[j] - grid.lambdas[k]), j);
        std::sort(dist.begin(), dist.end());
        map.neighbors[k].reserve(n_nbr);
        for (std::size_t i = 0; i < n_nbr; ++i) map.neighbors[k].push_back(dist[i].second);
    }
    return map;
}

}  // namespace evoadam
