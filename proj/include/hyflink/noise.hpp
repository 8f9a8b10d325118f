// Seeded synthesis of the stochastic and deterministic disturbances: laser
// phase noise and drift, fiber phase noise, and temperature processes with a
// heat-transfer lag.
//
// Level conventions (documented, asserted by tests):
//   white_pm        one-sided phase PSD S_phi, rad^2/Hz; per-sample phase
//                   variance is white_pm / (2*dt)
//   white_fm        one-sided frequency PSD S_nu, Hz^2/Hz; per-sample
//                   frequency variance is white_fm / (2*dt)
//   random_walk_fm  frequency random-walk diffusion, Hz^2/s; per-sample
//                   increment variance is random_walk_fm * dt
// Flicker noise is deliberately not modeled.

#ifndef HYFLINK_NOISE_HPP
#define HYFLINK_NOISE_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "rng.hpp"
#include "timeseries.hpp"

namespace hyflink {

struct NoiseSpec {
    double white_pm = 0.0;       // rad^2/Hz
    double white_fm = 0.0;       // Hz^2/Hz
    double random_walk_fm = 0.0; // Hz^2/s
    std::uint64_t seed = 0;

    bool silent() const { return white_pm == 0.0 && white_fm == 0.0 && random_walk_fm == 0.0; }

    void check() const {
        if (white_pm < 0.0 || white_fm < 0.0 || random_walk_fm < 0.0)
            throw std::invalid_argument("NoiseSpec: levels must be >= 0");
    }
};

struct LaserModel {
    double nu0 = 194.4e12;  // Hz
    double drift = 0.0;     // Hz/s
    double curvature = 0.0; // Hz/s^2
    NoiseSpec noise;

    void check() const {
        if (!(nu0 > 0.0)) throw std::invalid_argument("LaserModel: nu0 must be > 0");
        noise.check();
    }
};

struct SineComponent {
    double amplitude_k = 0.0;
    double period_s = 1.0;
    double phase_rad = 0.0;
};

struct TemperatureProfile {
    double mean_k = 298.0;
    std::vector<SineComponent> sines;
    double random_walk = 0.0; // K^2/s diffusion
    double heat_lag_s = 0.0;
    std::uint64_t seed = 0;

    void check() const {
        for (const auto& s : sines)
            if (!(s.period_s > 0.0)) throw std::invalid_argument("TemperatureProfile: period must be > 0");
        if (heat_lag_s < 0.0) throw std::invalid_argument("TemperatureProfile: heat_lag must be >= 0");
        if (random_walk < 0.0) throw std::invalid_argument("TemperatureProfile: random_walk must be >= 0");
    }
};

// Sum of white-PM, white-FM (integrated white) and random-walk-FM (doubly
// integrated white) phase components at the configured levels.
inline PhaseSeries gen_powerlaw(const NoiseSpec& spec, const SampleGrid& grid,
                                std::string_view tag = "powerlaw") {
    spec.check();
    PhaseSeries out = PhaseSeries::zeros(grid);
    if (spec.silent()) return out;
    const double dt = grid.dt;

    if (spec.white_pm > 0.0) {
        GaussianRng rng(substream_seed(spec.seed, std::string(tag) + "/wpm"));
        const double sigma = std::sqrt(spec.white_pm / (2.0 * dt));
        for (std::size_t i = 0; i < grid.n; ++i) out.values[i] += sigma * rng.normal();
    }
    if (spec.white_fm > 0.0) {
        GaussianRng rng(substream_seed(spec.seed, std::string(tag) + "/wfm"));
        const double sigma = std::sqrt(spec.white_fm / (2.0 * dt));
        double phi = 0.0;
        for (std::size_t i = 0; i < grid.n; ++i) {
            phi += two_pi * sigma * rng.normal() * dt;
            out.values[i] += phi;
        }
    }
    if (spec.random_walk_fm > 0.0) {
        GaussianRng rng(substream_seed(spec.seed, std::string(tag) + "/rwfm"));
        const double sigma = std::sqrt(spec.random_walk_fm * dt);
        double nu = 0.0, phi = 0.0;
        for (std::size_t i = 0; i < grid.n; ++i) {
            nu += sigma * rng.normal();
            phi += two_pi * nu * dt;
            out.values[i] += phi;
        }
    }
    return out;
}

// Generates the laser phase (relative to the nu0 carrier, i.e. only drift,
// curvature and noise appear) and the matching instantaneous frequency trace.
inline std::pair<PhaseSeries, FrequencySeries>
gen_laser(const LaserModel& model, const SampleGrid& grid, std::string_view tag = "laser") {
    model.check();
    PhaseSeries noise = gen_powerlaw(model.noise, grid, tag);
    PhaseSeries phi = PhaseSeries::zeros(grid);
    phi.carrier_hz = model.nu0;
    std::vector<double> freq(grid.n, 0.0);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double t = static_cast<double>(i) * grid.dt;
        phi.values[i] = two_pi * (model.drift * t * t / 2.0 + model.curvature * t * t * t / 6.0)
                        + noise.values[i];
        freq[i] = model.drift * t + model.curvature * t * t / 2.0;
        if (i > 0) freq[i] += (noise.values[i] - noise.values[i - 1]) / (two_pi * grid.dt);
    }
    return {std::move(phi), FrequencySeries(grid, std::move(freq), CounterKind::Instant)};
}

// Returns (measured, effective): the sensor reading and the same process
// delayed by heat_lag, which is what the fiber actually sees. Simulation uses
// `effective`; the regression pipeline only ever sees `measured`.
inline std::pair<TemperatureSeries, TemperatureSeries>
gen_temperature(const TemperatureProfile& profile, const SampleGrid& grid,
                std::string_view tag = "temperature") {
    profile.check();
    const std::size_t lag = grid.samples_for(profile.heat_lag_s, "heat_lag");
    if (lag >= grid.n) throw std::invalid_argument("gen_temperature: heat_lag exceeds record");

    std::vector<double> v(grid.n, profile.mean_k);
    for (const auto& s : profile.sines)
        for (std::size_t i = 0; i < grid.n; ++i) {
            const double t = static_cast<double>(i) * grid.dt;
            v[i] += s.amplitude_k * std::sin(two_pi * t / s.period_s + s.phase_rad);
        }
    if (profile.random_walk > 0.0) {
        GaussianRng rng(substream_seed(profile.seed, std::string(tag) + "/rw"));
        const double sigma = std::sqrt(profile.random_walk * grid.dt);
        double w = 0.0;
        for (std::size_t i = 0; i < grid.n; ++i) {
            w += sigma * rng.normal();
            v[i] += w;
        }
    }
    TemperatureSeries measured(grid, std::move(v));
    TemperatureSeries effective = delay(measured, lag);
    return {std::move(measured), std::move(effective)};
}

} // namespace hyflink

#endif
