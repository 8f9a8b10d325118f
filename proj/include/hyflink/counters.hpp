// Dead-time-free Pi and Lambda frequency counters on PhaseSeries, plus
// cycle-slip and redundancy consistency checks.
//
// Lambda convention: the overlapping-Pi average with internal step delta
// (default: the sample period), i.e. triangular phase weighting over 2T.
// Gate k of either counter starts at t0 + warmup + k*T, so Pi and Lambda
// outputs share gate timing and can be compared gate by gate.

#ifndef HYFLINK_COUNTERS_HPP
#define HYFLINK_COUNTERS_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "timeseries.hpp"

namespace hyflink {

struct CounterConfig {
    double gate_s = 1.0;
    CounterKind kind = CounterKind::Pi;
    double lambda_resolution_s = 0.0; // 0 = use dt

    std::size_t gate_samples(const SampleGrid& g) const {
        const std::size_t m = g.samples_for(gate_s, "gate");
        if (m < 1) throw std::invalid_argument("CounterConfig: gate must be >= dt");
        return m;
    }
    std::size_t resolution_samples(const SampleGrid& g) const {
        const double r = lambda_resolution_s > 0.0 ? lambda_resolution_s : g.dt;
        const std::size_t d = g.samples_for(r, "lambda_resolution");
        if (d < 1) throw std::invalid_argument("CounterConfig: resolution must be >= dt");
        const std::size_t m = gate_samples(g);
        if (m % d != 0) throw std::invalid_argument("CounterConfig: gate not a multiple of resolution");
        return d;
    }
};

// f[k] = (phi(t_k + T) - phi(t_k)) / (2*pi*T), contiguous gates, no dead time.
inline FrequencySeries pi_counter(const PhaseSeries& phase, const CounterConfig& cfg) {
    const std::size_t m = cfg.gate_samples(phase.grid);
    const std::size_t w0 = phase.warmup;
    if (phase.grid.n <= w0 + m) throw std::invalid_argument("pi_counter: record too short");
    const std::size_t gates = (phase.grid.n - 1 - w0) / m;
    std::vector<double> f(gates);
    const double T = static_cast<double>(m) * phase.grid.dt;
    for (std::size_t k = 0; k < gates; ++k) {
        const std::size_t i = w0 + k * m;
        f[k] = (phase.values[i + m] - phase.values[i]) / (two_pi * T);
    }
    SampleGrid g(T, gates, phase.grid.time_at(w0));
    return FrequencySeries(g, std::move(f), CounterKind::Pi);
}

// f[k] = (1/q) * sum_i (phi(t_k + i*delta + T) - phi(t_k + i*delta)) / (2*pi*T)
// with q = T/delta sub-gate starts — triangular phase weighting over 2T.
inline FrequencySeries lambda_counter(const PhaseSeries& phase, const CounterConfig& cfg) {
    const std::size_t m = cfg.gate_samples(phase.grid);
    const std::size_t d = cfg.resolution_samples(phase.grid);
    const std::size_t q = m / d;
    const std::size_t w0 = phase.warmup;
    const std::size_t need = m + (q - 1) * d; // last sub-gate end offset
    if (phase.grid.n <= w0 + need) throw std::invalid_argument("lambda_counter: record too short");
    const std::size_t gates = (phase.grid.n - 1 - w0 - (q - 1) * d) / m;
    std::vector<double> f(gates);
    const double T = static_cast<double>(m) * phase.grid.dt;
    for (std::size_t k = 0; k < gates; ++k) {
        const std::size_t i0 = w0 + k * m;
        double acc = 0.0;
        for (std::size_t j = 0; j < q; ++j)
            acc += phase.values[i0 + j * d + m] - phase.values[i0 + j * d];
        f[k] = acc / (static_cast<double>(q) * two_pi * T);
    }
    SampleGrid g(T, gates, phase.grid.time_at(w0));
    return FrequencySeries(g, std::move(f), CounterKind::Lambda);
}

struct SlipEvent {
    std::size_t gate = 0;
    double magnitude_hz = 0.0;
};

// Flags gates carrying a one-gate frequency pulse (the signature of a phase
// step): consecutive Pi increments of opposite sign both above threshold.
// Gates where |pi - lambda| exceeds the threshold are also flagged unless
// they sit next to an already-flagged pulse (the Lambda window smears a slip
// into its neighbour gate).
inline std::vector<SlipEvent> detect_cycle_slips(const FrequencySeries& pi,
                                                 const FrequencySeries& lambda,
                                                 double threshold_hz) {
    if (pi.grid.dt != lambda.grid.dt || pi.grid.t0 != lambda.grid.t0)
        throw std::invalid_argument("detect_cycle_slips: counters not on a shared grid");
    const std::size_t n = std::min(pi.size(), lambda.size());
    std::vector<SlipEvent> events;
    std::vector<bool> pulse(n, false);

    for (std::size_t k = 0; k < n; ++k) {
        const double up = k > 0 ? pi.values[k] - pi.values[k - 1]
                                : pi.values[k];
        const double dn = k + 1 < n ? pi.values[k + 1] - pi.values[k]
                                    : -pi.values[k];
        if (std::abs(up) > threshold_hz && std::abs(dn) > threshold_hz && up * dn < 0.0) {
            pulse[k] = true;
            events.push_back({k, (std::abs(up) + std::abs(dn)) / 2.0});
        }
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(pi.values[k] - lambda.values[k]) <= threshold_hz) continue;
        bool near_pulse = pulse[k] || (k > 0 && pulse[k - 1]) || (k + 1 < n && pulse[k + 1]);
        if (!near_pulse) events.push_back({k, std::abs(pi.values[k] - lambda.values[k])});
    }
    std::sort(events.begin(), events.end(),
              [](const SlipEvent& a, const SlipEvent& b) { return a.gate < b.gate; });
    return events;
}

struct ConsistencyReport {
    double max_deviation_hz = 0.0;
    std::size_t worst_gate = 0;
    std::vector<std::size_t> violations;
    bool pass(double tol) const { return max_deviation_hz <= tol; }
};

// Verifies the redundancy identity ctw ~= (ltw_local + ltw_remote)/2 per gate.
inline ConsistencyReport consistency_check(const FrequencySeries& ltw_local,
                                           const FrequencySeries& ltw_remote,
                                           const FrequencySeries& ctw, double tol_hz) {
    require_same_grid(ltw_local.grid, ltw_remote.grid, "consistency_check");
    require_same_grid(ltw_local.grid, ctw.grid, "consistency_check");
    ConsistencyReport rep;
    for (std::size_t k = 0; k < ltw_local.size(); ++k) {
        const double dev = std::abs(ctw.values[k]
                                    - (ltw_local.values[k] + ltw_remote.values[k]) / 2.0);
        if (dev > rep.max_deviation_hz) {
            rep.max_deviation_hz = dev;
            rep.worst_gate = k;
        }
        if (dev > tol_hz) rep.violations.push_back(k);
    }
    return rep;
}

} // namespace hyflink

#endif
