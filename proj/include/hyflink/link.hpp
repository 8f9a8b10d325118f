// Optical topology simulator: produces every photodiode beat phase of the
// hybrid link (ANC-stabilized fiber-1 plus bidirectional two-way fiber-2),
// with propagation delays quantized to the sample grid.
//
// The simulator is phase-only: amplifiers, couplers and polarization are
// ideal, AOM offsets are metadata, and all beat phases are stored baseband.

#ifndef HYFLINK_LINK_HPP
#define HYFLINK_LINK_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "noise.hpp"
#include "timeseries.hpp"

namespace hyflink {

struct InterferometerModel {
    // Local arms L11..L16, remote arms L21..L23, meters.
    double l11 = 0, l12 = 0, l13 = 0, l14 = 0, l15 = 0, l16 = 0;
    double l21 = 0, l22 = 0, l23 = 0;
    double gamma_fs_per_k_m = 37.0; // phase-temperature coefficient of silica
    TemperatureProfile temperature;

    double delta_l_local() const { return (l14 + l16 - l15) + (l11 + l12 - l13); }
    double delta_l_remote() const { return l22 - l21 - l23; }

    // Convenience: realize a mismatch directly instead of via nine arms.
    void set_delta_l_local(double m) { l11 = l12 = l13 = l15 = l16 = 0; l14 = m; }
    void set_delta_l_remote(double m) { l21 = l23 = 0; l22 = m; }
};

struct FiberSegment {
    double position = 0.5; // fractional distance from the local end, [0,1]
    NoiseSpec noise;
};

struct FiberModel {
    double length_km = 43.0;
    double tau_s = 2.1e-4; // one-way propagation delay
    std::vector<FiberSegment> segments{FiberSegment{}};
    NoiseSpec nonreciprocal; // applied to local->remote passes only

    void check() const {
        if (segments.empty()) throw std::invalid_argument("FiberModel: needs at least one segment");
        if (tau_s < 0.0) throw std::invalid_argument("FiberModel: tau must be >= 0");
        for (const auto& s : segments) {
            if (s.position < 0.0 || s.position > 1.0)
                throw std::invalid_argument("FiberModel: segment position out of [0,1]");
            s.noise.check();
        }
        nonreciprocal.check();
    }
};

enum class AncMode { Ideal, Loop, Off };
enum class RemoteMirror { Standard, PartialFm };

struct LinkConfig {
    LaserModel laser1, laser2;
    FiberModel fiber1, fiber2;
    InterferometerModel local_ifo, remote_ifo;
    double aom_f1 = 0, aom_f2 = 0, aom_f3 = 0, aom_f4 = 0; // Hz, metadata only
    AncMode anc = AncMode::Ideal;
    double anc_loop_gain = 0.0; // 1/s, Loop mode only
    RemoteMirror remote_mirror = RemoteMirror::Standard;
    bool same_laser = false;
    bool zero_delay = false;
    NoiseSpec detection_noise; // independent white floor per photodiode
    std::uint64_t seed = 1;
};

struct BeatRecord {
    PhaseSeries pd1;  // laser1 vs fiber-1 round trip (ANC error, 0 when locked)
    PhaseSeries pd3a, pd3b; // remote-site two-way signals
    PhaseSeries pd4a, pd4b; // local-site two-way signals
    PhaseSeries lm;         // direct local measurement, phi_L1 - phi_L2
    // Ground truth, oracle-only: never fed to measurement-side analyses.
    PhaseSeries truth_n1, truth_n2, truth_c;
    FrequencySeries truth_nu1, truth_nu2;
    TemperatureSeries temp_local_measured, temp_remote_measured;
};

// phi(t) = 2*pi*nu*deltaL*gamma*(T(t) - T(t_ref)), t_ref the first
// non-warm-up sample.
inline PhaseSeries thermal_phase(double delta_l_m, const TemperatureSeries& temp,
                                 double gamma_fs_per_k_m, double nu_hz) {
    PhaseSeries out = PhaseSeries::zeros(temp.grid);
    out.warmup = temp.warmup;
    const double scale = two_pi * nu_hz * delta_l_m * gamma_fs_per_k_m * 1e-15;
    const double t_ref = temp.values[std::min(temp.warmup, temp.grid.n - 1)];
    for (std::size_t i = 0; i < temp.grid.n; ++i)
        out.values[i] = scale * (temp.values[i] - t_ref);
    return out;
}

namespace detail {

struct FiberNoise {
    // Per-direction propagation sums on the shared grid.
    PhaseSeries fwd_to_remote; // one-way arriving at the remote end
    PhaseSeries fwd_to_local;  // one-way arriving at the local end
    PhaseSeries rt_from_local; // round trip launched and detected locally
    PhaseSeries rt_from_remote;
    PhaseSeries truth; // sum of segment processes, un-delayed
    std::size_t one_way = 0; // samples
};

inline FiberNoise propagate_fiber(const FiberModel& fiber, const SampleGrid& grid,
                                  bool zero_delay, std::uint64_t seed,
                                  const std::string& tag) {
    fiber.check();
    FiberNoise out;
    const std::size_t k = zero_delay ? 0 : grid.samples_for(fiber.tau_s, "fiber tau");
    out.one_way = k;
    out.fwd_to_remote = out.fwd_to_local = out.rt_from_local = out.rt_from_remote =
        out.truth = PhaseSeries::zeros(grid);

    for (std::size_t j = 0; j < fiber.segments.size(); ++j) {
        const auto& seg = fiber.segments[j];
        if (seg.noise.silent()) continue;
        NoiseSpec spec = seg.noise;
        spec.seed = substream_seed(seed, tag + "/seg" + std::to_string(j));
        PhaseSeries n = gen_powerlaw(spec, grid, tag);
        const std::size_t a = zero_delay
            ? 0
            : static_cast<std::size_t>(std::llround(seg.position * static_cast<double>(k)));
        PhaseSeries n_a = delay(n, a);
        PhaseSeries n_ka = delay(n, k - a);
        PhaseSeries n_2k_a = delay(n, 2 * k - a);   // out-pass of local round trip
        PhaseSeries n_k_pa = delay(n, k + a);       // out-pass of remote round trip
        for (std::size_t i = 0; i < grid.n; ++i) {
            out.fwd_to_local.values[i] += n_a.values[i];
            out.fwd_to_remote.values[i] += n_ka.values[i];
            out.rt_from_local.values[i] += n_2k_a.values[i] + n_a.values[i];
            out.rt_from_remote.values[i] += n_k_pa.values[i] + n_ka.values[i];
            out.truth.values[i] += n.values[i];
        }
        const std::size_t warm = std::max(n_2k_a.warmup, n_k_pa.warmup);
        out.fwd_to_local.warmup = std::max(out.fwd_to_local.warmup, n_a.warmup);
        out.fwd_to_remote.warmup = std::max(out.fwd_to_remote.warmup, n_ka.warmup);
        out.rt_from_local.warmup = std::max(out.rt_from_local.warmup, warm);
        out.rt_from_remote.warmup = std::max(out.rt_from_remote.warmup, warm);
    }

    if (!fiber.nonreciprocal.silent()) {
        NoiseSpec spec = fiber.nonreciprocal;
        spec.seed = substream_seed(seed, tag + "/nonreciprocal");
        PhaseSeries n = gen_powerlaw(spec, grid, tag);
        const std::size_t a = k / 2; // treated as a midpoint process
        PhaseSeries n_ka = delay(n, k - a);
        PhaseSeries n_2k_a = delay(n, 2 * k - a);
        PhaseSeries n_k_pa = delay(n, k + a);
        // local->remote passes only
        for (std::size_t i = 0; i < grid.n; ++i) {
            out.fwd_to_remote.values[i] += n_ka.values[i];
            out.rt_from_local.values[i] += n_2k_a.values[i];
            out.rt_from_remote.values[i] += n_k_pa.values[i];
        }
        out.rt_from_local.warmup = std::max(out.rt_from_local.warmup, n_2k_a.warmup);
        out.rt_from_remote.warmup = std::max(out.rt_from_remote.warmup, n_k_pa.warmup);
        out.fwd_to_remote.warmup = std::max(out.fwd_to_remote.warmup, n_ka.warmup);
    }
    return out;
}

} // namespace detail

// ANC correction phase applied at the launch AOM.
//
// Ideal mode evaluates the servo fixed point by forward recursion,
//   phi_C(t) = phi_L1(t) - phi_L1(t-2tau) - rt_noise(t) - phi_C(t-2tau),
// with phi_C = 0 on the 2tau warm-up prefix. Loop mode is a discrete
// integrator on the PD1 error; the gain must satisfy gain*2tau < 1.
inline PhaseSeries anc_correction(const PhaseSeries& laser_phase,
                                  const PhaseSeries& roundtrip_noise,
                                  std::size_t two_tau_samples, AncMode mode,
                                  double loop_gain = 0.0) {
    require_same_grid(laser_phase.grid, roundtrip_noise.grid, "anc_correction");
    const SampleGrid& g = laser_phase.grid;
    PhaseSeries c = PhaseSeries::zeros(g);
    const std::size_t k2 = two_tau_samples;
    if (k2 >= g.n) throw std::invalid_argument("anc_correction: 2*tau exceeds record");

    switch (mode) {
        case AncMode::Off:
            break;
        case AncMode::Ideal:
            if (k2 == 0) {
                for (std::size_t i = 0; i < g.n; ++i)
                    c.values[i] = -roundtrip_noise.values[i] / 2.0;
            } else {
                for (std::size_t i = k2; i < g.n; ++i)
                    c.values[i] = laser_phase.values[i] - laser_phase.values[i - k2]
                                  - roundtrip_noise.values[i] - c.values[i - k2];
                c.warmup = k2;
            }
            break;
        case AncMode::Loop: {
            if (!(loop_gain > 0.0))
                throw std::invalid_argument("anc_correction: loop gain must be > 0");
            const double two_tau = static_cast<double>(k2) * g.dt;
            if (loop_gain * two_tau >= 1.0)
                throw std::invalid_argument("anc_correction: loop gain violates stability bound gain*2tau < 1");
            for (std::size_t i = 1; i < g.n; ++i) {
                const std::size_t d = i - 1 >= k2 ? i - 1 - k2 : 0;
                const double err = laser_phase.values[i - 1]
                                   - (laser_phase.values[d] + c.values[d]
                                      + c.values[i - 1] + roundtrip_noise.values[i - 1]);
                c.values[i] = c.values[i - 1] + loop_gain * g.dt * err;
            }
            c.warmup = k2;
            break;
        }
    }
    c.warmup = std::max(c.warmup, std::max(laser_phase.warmup, roundtrip_noise.warmup));
    return c;
}

// Full delayed simulation on a fast grid (all delays must be on the grid).
inline BeatRecord simulate(const LinkConfig& config, const SampleGrid& grid) {
    LaserModel m1 = config.laser1;
    m1.noise.seed = substream_seed(config.seed, "laser1");
    auto [phi_l1, nu1] = gen_laser(m1, grid, "laser1");
    PhaseSeries phi_l2;
    FrequencySeries nu2;
    if (config.same_laser) {
        phi_l2 = phi_l1;
        nu2 = nu1;
    } else {
        LaserModel m2 = config.laser2;
        m2.noise.seed = substream_seed(config.seed, "laser2");
        std::tie(phi_l2, nu2) = gen_laser(m2, grid, "laser2");
    }

    detail::FiberNoise f1 = detail::propagate_fiber(config.fiber1, grid, config.zero_delay,
                                                    config.seed, "fiber1");
    detail::FiberNoise f2 = detail::propagate_fiber(config.fiber2, grid, config.zero_delay,
                                                    config.seed, "fiber2");
    const std::size_t k1 = f1.one_way;
    const std::size_t k2 = f2.one_way;

    // ANC servo on fiber-1.
    PhaseSeries phi_c = anc_correction(phi_l1, f1.rt_from_local, 2 * k1, config.anc,
                                       config.anc_loop_gain);

    // Transferred phase at the fiber-1 remote end.
    PhaseSeries phi_r;
    {
        PhaseSeries l1_d = delay(phi_l1, k1);
        PhaseSeries c_d = delay(phi_c, k1);
        phi_r = affine({{1.0, &l1_d}, {1.0, &c_d}, {1.0, &f1.fwd_to_remote}});
    }

    // Interferometer thermal phases (effective temperature drives the fiber).
    TemperatureProfile tl = config.local_ifo.temperature;
    tl.seed = substream_seed(config.seed, "temp_local");
    TemperatureProfile tr = config.remote_ifo.temperature;
    tr.seed = substream_seed(config.seed, "temp_remote");
    auto [tl_meas, tl_eff] = gen_temperature(tl, grid, "temp_local");
    auto [tr_meas, tr_eff] = gen_temperature(tr, grid, "temp_remote");
    const double dl_local = config.local_ifo.delta_l_local();
    const double dl_remote = config.remote_mirror == RemoteMirror::PartialFm
                                 ? 0.0
                                 : config.remote_ifo.delta_l_remote();

    // Warm-up of the slowest signal chain determines the thermal reference t0.
    std::size_t warm = std::max({phi_r.warmup, f2.rt_from_local.warmup,
                                 f2.rt_from_remote.warmup});
    warm = std::max(warm, std::min(grid.n, phi_r.warmup + 2 * k2));
    tl_eff.warmup = std::max(tl_eff.warmup, warm);
    tr_eff.warmup = std::max(tr_eff.warmup, warm);

    PhaseSeries th_loc = thermal_phase(dl_local, tl_eff, config.local_ifo.gamma_fs_per_k_m,
                                       config.laser1.nu0);
    PhaseSeries th_rem = thermal_phase(dl_remote, tr_eff, config.remote_ifo.gamma_fs_per_k_m,
                                       config.laser1.nu0);

    BeatRecord rec;
    {
        PhaseSeries rt1 = f1.rt_from_local;
        PhaseSeries l1_2k = delay(phi_l1, 2 * k1);
        PhaseSeries c_2k = delay(phi_c, 2 * k1);
        rec.pd1 = affine({{1.0, &phi_l1}, {-1.0, &l1_2k}, {-1.0, &c_2k},
                          {-1.0, &phi_c}, {-1.0, &rt1}});
    }
    {
        PhaseSeries r_d = delay(phi_r, k2);
        rec.pd4a = affine({{1.0, &r_d}, {1.0, &f2.fwd_to_local}, {1.0, &th_loc},
                           {1.0, &th_rem}, {-1.0, &phi_l2}});
    }
    {
        PhaseSeries l2_2k = delay(phi_l2, 2 * k2);
        rec.pd4b = affine({{1.0, &l2_2k}, {1.0, &f2.rt_from_local}, {-1.0, &phi_l2}});
    }
    {
        PhaseSeries l2_d = delay(phi_l2, k2);
        rec.pd3a = affine({{1.0, &phi_r}, {1.0, &th_loc}, {1.0, &th_rem},
                           {-1.0, &l2_d}, {-1.0, &f2.fwd_to_remote}});
    }
    {
        PhaseSeries r_2k = delay(phi_r, 2 * k2);
        rec.pd3b = affine({{1.0, &r_2k}, {1.0, &f2.rt_from_remote}, {-1.0, &phi_r}});
    }
    rec.lm = affine({{1.0, &phi_l1}, {-1.0, &phi_l2}});

    if (!config.detection_noise.silent()) {
        const char* tags[] = {"det/pd1", "det/pd3a", "det/pd3b", "det/pd4a", "det/pd4b", "det/lm"};
        PhaseSeries* pds[] = {&rec.pd1, &rec.pd3a, &rec.pd3b, &rec.pd4a, &rec.pd4b, &rec.lm};
        for (int i = 0; i < 6; ++i) {
            NoiseSpec d = config.detection_noise;
            d.seed = substream_seed(config.seed, tags[i]);
            PhaseSeries noise = gen_powerlaw(d, grid, tags[i]);
            for (std::size_t s = 0; s < grid.n; ++s) pds[i]->values[s] += noise.values[s];
        }
    }

    // Align warm-up across the record so downstream combiners see one mask.
    for (PhaseSeries* p : {&rec.pd1, &rec.pd3a, &rec.pd3b, &rec.pd4a, &rec.pd4b, &rec.lm})
        warm = std::max(warm, p->warmup);
    for (PhaseSeries* p : {&rec.pd1, &rec.pd3a, &rec.pd3b, &rec.pd4a, &rec.pd4b, &rec.lm})
        p->warmup = warm;

    rec.truth_n1 = std::move(f1.truth);
    rec.truth_n2 = std::move(f2.truth);
    rec.truth_c = std::move(phi_c);
    rec.truth_nu1 = std::move(nu1);
    rec.truth_nu2 = std::move(nu2);
    rec.temp_local_measured = std::move(tl_meas);
    rec.temp_remote_measured = std::move(tr_meas);
    return rec;
}

// First-order slow-grid simulation for long statistics runs: delay effects
// are injected analytically (the drift term on the local two-way path)
// instead of being propagated sample by sample, so dt can be seconds.
inline BeatRecord simulate_first_order(const LinkConfig& config, const SampleGrid& grid) {
    LinkConfig cfg = config;
    cfg.zero_delay = true;
    BeatRecord rec = simulate(cfg, grid);

    // Drift term: -2*pi*tau*[(nu1-nu2)(t) - (nu1-nu2)(t_ref)] added to the
    // signal the remote laser contributes at the local photodiode.
    const double tau = config.fiber2.tau_s;
    const std::size_t ref = rec.pd4a.warmup;
    const double d0 = rec.truth_nu1.values[ref] - rec.truth_nu2.values[ref];
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double d = rec.truth_nu1.values[i] - rec.truth_nu2.values[i];
        rec.pd4a.values[i] += -two_pi * tau * (d - d0);
    }
    return rec;
}

} // namespace hyflink

#endif
