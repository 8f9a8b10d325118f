// Decomposition pipeline: thermal lags by cross-correlation, interferometer
// length mismatches by multi-linear regression, and the three-term residual.

#ifndef HYFLINK_REGRESSION_HPP
#define HYFLINK_REGRESSION_HPP

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "combiners.hpp"
#include "link.hpp"
#include "timeseries.hpp"

namespace hyflink {

struct LagEstimate {
    double lag_s = 0.0;
    double correlation = 0.0; // normalized, at the peak
    bool significant = false; // |r| above the 3/sqrt(n) null bound
};

// Lag in [0, max_lag] maximizing |normalized cross-correlation| between the
// mean-removed phase and temperature.
inline LagEstimate estimate_lag(const PhaseSeries& phase, const TemperatureSeries& temp,
                                double max_lag_s) {
    require_same_grid(phase.grid, temp.grid, "estimate_lag");
    const std::size_t max_lag = phase.grid.samples_for(max_lag_s, "max_lag");
    const std::size_t w = std::max(phase.warmup, temp.warmup);
    const std::size_t n = phase.grid.n - w;
    if (n < 4 * std::max<std::size_t>(max_lag, 1))
        throw std::invalid_argument("estimate_lag: overlapping span must be >= 4*max_lag");

    std::vector<double> p(n), t(n);
    double pm = 0.0, tm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = phase.values[w + i];
        t[i] = temp.values[w + i];
        pm += p[i];
        tm += t[i];
    }
    pm /= static_cast<double>(n);
    tm /= static_cast<double>(n);
    double tvar = 0.0, pvar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] -= pm;
        t[i] -= tm;
        tvar += t[i] * t[i];
        pvar += p[i] * p[i];
    }
    if (tvar <= 0.0) throw std::invalid_argument("estimate_lag: temperature has zero variance");
    if (pvar <= 0.0) throw std::invalid_argument("estimate_lag: phase has zero variance");

    LagEstimate best;
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        // correlate phase(t) with temp(t - lag) over the overlap
        double num = 0.0, tv = 0.0, pv = 0.0;
        for (std::size_t i = lag; i < n; ++i) {
            num += p[i] * t[i - lag];
            tv += t[i - lag] * t[i - lag];
            pv += p[i] * p[i];
        }
        if (tv <= 0.0 || pv <= 0.0) continue;
        const double r = num / std::sqrt(tv * pv);
        if (std::abs(r) > std::abs(best.correlation)) {
            best.correlation = r;
            best.lag_s = static_cast<double>(lag) * phase.grid.dt;
        }
    }
    best.significant = std::abs(best.correlation) > 3.0 / std::sqrt(static_cast<double>(n));
    return best;
}

struct DecompositionResult {
    double lag_local_s = 0.0, lag_remote_s = 0.0;
    double dl_local_m = 0.0, dl_remote_m = 0.0;
    double coef_local = 0.0, coef_remote = 0.0, intercept = 0.0; // rad/K, rad/K, rad
    double se_local = 0.0, se_remote = 0.0; // standard errors of the coefficients
    double r_squared = 0.0;
    PhaseSeries residual;
};

namespace detail {

// Solve the 3x3 normal equations by Gaussian elimination with pivoting.
inline std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> a,
                                    std::array<double, 3> b) {
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (std::abs(a[piv][c]) < 1e-12)
            throw std::invalid_argument("fit_mismatch: rank-deficient design (collinear regressors)");
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (int r = 0; r < 3; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            for (int cc = c; cc < 3; ++cc) a[r][cc] -= f * a[c][cc];
            b[r] -= f * b[c];
        }
    }
    return {b[0] / a[0][0], b[1] / a[1][1], b[2] / a[2][2]};
}

} // namespace detail

// Least-squares fit of
//   phi ~ a*(T_loc(t - lag_l) - T_loc(t_ref)) + b*(T_rem(t - lag_r) - T_rem(t_ref)) + c
// after subtracting the drift term; coefficients are converted to meters via
// deltaL = a / (2*pi*nu*gamma). The residual is the three-term remainder.
inline DecompositionResult fit_mismatch(const PhaseSeries& ltw_minus_lm,
                                        const TemperatureSeries& temp_local,
                                        const TemperatureSeries& temp_remote,
                                        double lag_local_s, double lag_remote_s,
                                        const PhaseSeries& drift_term,
                                        double gamma_fs_per_k_m, double nu_hz) {
    require_same_grid(ltw_minus_lm.grid, temp_local.grid, "fit_mismatch");
    require_same_grid(ltw_minus_lm.grid, temp_remote.grid, "fit_mismatch");
    require_same_grid(ltw_minus_lm.grid, drift_term.grid, "fit_mismatch");
    const SampleGrid& g = ltw_minus_lm.grid;
    const std::size_t kl = g.samples_for(lag_local_s, "lag_local");
    const std::size_t kr = g.samples_for(lag_remote_s, "lag_remote");

    TemperatureSeries tl = delay(temp_local, kl);
    TemperatureSeries tr = delay(temp_remote, kr);
    const std::size_t w = std::max({ltw_minus_lm.warmup, tl.warmup, tr.warmup,
                                    drift_term.warmup});
    const std::size_t n = g.n - w;
    if (n < 4) throw std::invalid_argument("fit_mismatch: record too short");

    const double tl0 = tl.values[w];
    const double tr0 = tr.values[w];
    std::array<std::array<double, 3>, 3> xtx{};
    std::array<double, 3> xty{};
    for (std::size_t i = w; i < g.n; ++i) {
        const double x0 = tl.values[i] - tl0;
        const double x1 = tr.values[i] - tr0;
        const double yv = ltw_minus_lm.values[i] - drift_term.values[i];
        const double x[3] = {x0, x1, 1.0};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) xtx[r][c] += x[r] * x[c];
            xty[r] += x[r] * yv;
        }
    }
    // Collinearity diagnostic before solving.
    {
        const double vl = xtx[0][0] - xtx[0][2] * xtx[0][2] / static_cast<double>(n);
        const double vr = xtx[1][1] - xtx[1][2] * xtx[1][2] / static_cast<double>(n);
        const double cv = xtx[0][1] - xtx[0][2] * xtx[1][2] / static_cast<double>(n);
        if (vl <= 0.0 || vr <= 0.0 || cv * cv > 0.9999 * vl * vr)
            throw std::invalid_argument(
                "fit_mismatch: rank-deficient design (collinear temperatures, |r| > 0.99995)");
    }
    const std::array<double, 3> beta = detail::solve3(xtx, xty);

    DecompositionResult res;
    res.lag_local_s = lag_local_s;
    res.lag_remote_s = lag_remote_s;
    res.coef_local = beta[0];
    res.coef_remote = beta[1];
    res.intercept = beta[2];
    const double phase_per_k_per_m = two_pi * nu_hz * gamma_fs_per_k_m * 1e-15;
    res.dl_local_m = beta[0] / phase_per_k_per_m;
    res.dl_remote_m = beta[1] / phase_per_k_per_m;

    // Residual per Eq.-(7)-style subtraction: model terms without the intercept
    // carry the physics; the intercept only absorbs reference-sample offsets.
    res.residual = PhaseSeries::zeros(g);
    res.residual.warmup = w;
    double ss_res = 0.0, ss_tot = 0.0, ymean = 0.0;
    for (std::size_t i = w; i < g.n; ++i)
        ymean += ltw_minus_lm.values[i] - drift_term.values[i];
    ymean /= static_cast<double>(n);
    for (std::size_t i = w; i < g.n; ++i) {
        const double yv = ltw_minus_lm.values[i] - drift_term.values[i];
        const double fit = beta[0] * (tl.values[i] - tl0) + beta[1] * (tr.values[i] - tr0)
                           + beta[2];
        res.residual.values[i] = yv - fit;
        ss_res += (yv - fit) * (yv - fit);
        ss_tot += (yv - ymean) * (yv - ymean);
    }
    res.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;

    // Standard errors from sigma^2 * (X'X)^-1 diagonal (via solves).
    const double dof = static_cast<double>(n) - 3.0;
    const double sigma2 = dof > 0.0 ? ss_res / dof : 0.0;
    const std::array<double, 3> e0 = detail::solve3(xtx, {1.0, 0.0, 0.0});
    const std::array<double, 3> e1 = detail::solve3(xtx, {0.0, 1.0, 0.0});
    res.se_local = std::sqrt(std::max(0.0, sigma2 * e0[0]));
    res.se_remote = std::sqrt(std::max(0.0, sigma2 * e1[1]));
    return res;
}

} // namespace hyflink

#endif
