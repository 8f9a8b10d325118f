// Post-detection phase combinations: local/remote two-way, conventional
// two-way, the uni-directional two-way estimate, the propagation-delay drift
// term and the three-term residual.

#ifndef HYFLINK_COMBINERS_HPP
#define HYFLINK_COMBINERS_HPP

#include "timeseries.hpp"

namespace hyflink {

// phi_LTW^local = pd4a - pd4b/2
inline PhaseSeries ltw_local(const PhaseSeries& pd4a, const PhaseSeries& pd4b) {
    return affine({{1.0, &pd4a}, {-0.5, &pd4b}});
}

// phi_LTW^remote = pd3a + pd3b/2
inline PhaseSeries ltw_remote(const PhaseSeries& pd3a, const PhaseSeries& pd3b) {
    return affine({{1.0, &pd3a}, {0.5, &pd3b}});
}

// phi_CTW = (pd4a + pd3a)/2; the two inputs must be sampled synchronously.
inline PhaseSeries ctw(const PhaseSeries& pd4a, const PhaseSeries& pd3a) {
    return affine({{0.5, &pd4a}, {0.5, &pd3a}});
}

// Difference of the two one-way fiber noise estimates (fiber-1 from the ANC
// round trip, fiber-2 from the two-way round trip).
inline PhaseSeries uni_directional_two_way(const PhaseSeries& fiber1_noise_est,
                                           const PhaseSeries& fiber2_noise_est) {
    return affine({{1.0, &fiber1_noise_est}, {-1.0, &fiber2_noise_est}});
}

// Drift term of the two-way error:
//   -2*pi*tau*[(nu1(t) - nu2(t)) - (nu1(t_ref) - nu2(t_ref))]
// with t_ref the first non-warm-up gate.
inline PhaseSeries phi_drift(const FrequencySeries& nu1, const FrequencySeries& nu2,
                             double tau_s) {
    require_same_grid(nu1.grid, nu2.grid, "phi_drift");
    if (nu1.kind == CounterKind::Pi || nu2.kind == CounterKind::Pi)
        throw std::invalid_argument("phi_drift: expects Instant or Lambda frequency data");
    PhaseSeries out = PhaseSeries::zeros(nu1.grid);
    out.warmup = std::max(nu1.warmup, nu2.warmup);
    const std::size_t ref = std::min(out.warmup, nu1.grid.n - 1);
    const double d0 = nu1.values[ref] - nu2.values[ref];
    for (std::size_t i = 0; i < nu1.grid.n; ++i)
        out.values[i] = -two_pi * tau_s * ((nu1.values[i] - nu2.values[i]) - d0);
    return out;
}

// phi_residual = (phi_LTW - phi_LM) - phi_drift - phi_local - phi_remote
inline PhaseSeries residual(const PhaseSeries& ltw_minus_lm, const PhaseSeries& drift,
                            const PhaseSeries& local, const PhaseSeries& remote) {
    return affine({{1.0, &ltw_minus_lm}, {-1.0, &drift}, {-1.0, &local}, {-1.0, &remote}});
}

} // namespace hyflink

#endif
