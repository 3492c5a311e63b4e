#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace evoadam {

struct AdamHyper {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
    AdamHyper hyper;

    static AdamState fresh(std::size_t n, const AdamHyper& h) {
        return AdamState{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0, h};
    }
};

// Standard bias-corrected Adam step, in place.
inline void adam_step(std::vector<double>& params, const std::vector<double>& grad, AdamState& s) {
    if (params.size() != grad.size() || params.size() != s.m.size())
        throw std::invalid_argument("adam_step: length mismatch");
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (!std::isfinite(grad[i]))
            throw std::runtime_error("adam_step: non-finite gradient at index " + std::to_string(i));
    s.t += 1;
    const double bc1 = 1.0 - std::pow(s.hyper.beta1, static_cast<double>(s.t));
    const double bc2 = 1.0 - std::pow(s.hyper.beta2, static_cast<double>(s.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        s.m[i] = s.hyper.beta1 * s.m[i] + (1.0 - s.hyper.beta1) * grad[i];
        s.v[i] = s.hyper.beta2 * s.v[i] + (1.0 - s.hyper.beta2) * grad[i] * grad[i];
        const double mhat = s.m[i] / bc1;
        const double vhat = s.v[i] / bc2;
        params[i] -= s.hyper.lr * mhat / (std::sqrt(vhat) + s.hyper.eps);
    }
}

// Zero the moments and the step counter, keep hyperparameters. This is the
// re-initialization applied after every EA phase.
inline void reset_state(AdamState& s) {
    s.m.assign(s.m.size(), 0.0);
    s.v.assign(s.v.size(), 0.0);
    s.t = 0;
}

// Rescale each objective gradient to unit L2 norm (norms below 1e-12 stay
// zero), then mix: lambda * g1_hat + (1 - lambda) * g2_hat.
inline std::vector<double> gradnorm_combine(const std::vector<double>& g1,
                                            const std::vector<double>& g2, double lambda) {
    if (g1.size() != g2.size())
        throw std::invalid_argument("gradnorm_combine: length mismatch");
    double n1 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < g1.size(); ++i) {
        if (!std::isfinite(g1[i]) || !std::isfinite(g2[i]))
            throw std::runtime_error("gradnorm_combine: non-finite gradient at index " + std::to_string(i));
        n1 += g1[i] * g1[i];
        n2 += g2[i] * g2[i];
    }
    n1 = std::sqrt(n1);
    n2 = std::sqrt(n2);
    const double s1 = (n1 > 1e-12) ? lambda / n1 : 0.0;
    const double s2 = (n2 > 1e-12) ? (1.0 - lambda) / n2 : 0.0;
    std::vector<double> out(g1.size());
    for (std::size_t i = 0; i < g1.size(); ++i) out[i] = s1 * g1[i] + s2 * g2[i];
    return out;
}

}  // namespace evoadam
