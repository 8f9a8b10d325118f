// Uniform-grid time series and the delay/affine algebra used everywhere else.
//
// All signals live on a SampleGrid. Phase is stored unwrapped (unbounded
// radians), never modulo 2*pi. Series carry a warm-up prefix length: samples
// before it are transient (e.g. produced by a delay line before real data is
// available) and must be excluded from statistics.

#ifndef HYFLINK_TIMESERIES_HPP
#define HYFLINK_TIMESERIES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hyflink {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct SampleGrid {
    double dt = 1.0;   // sample period, s
    std::size_t n = 0; // sample count
    double t0 = 0.0;   // epoch, s

    SampleGrid() = default;
    SampleGrid(double dt_, std::size_t n_, double t0_ = 0.0) : dt(dt_), n(n_), t0(t0_) {
        if (!(dt > 0.0)) throw std::invalid_argument("SampleGrid: dt must be > 0");
        if (n < 1) throw std::invalid_argument("SampleGrid: n must be >= 1");
    }

    double time_at(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
    double span() const { return static_cast<double>(n - 1) * dt; }

    bool operator==(const SampleGrid& o) const {
        return n == o.n && dt == o.dt && t0 == o.t0;
    }

    // Converts a duration to a sample count; rejects off-grid durations.
    std::size_t samples_for(double duration_s, const char* what = "duration") const {
        if (duration_s < 0.0)
            throw std::invalid_argument(std::string(what) + " must be >= 0");
        const double q = duration_s / dt;
        const double r = std::round(q);
        if (std::abs(q - r) > 1e-9 * std::max(1.0, q))
            throw std::invalid_argument(std::string(what) + " is not an integer multiple of dt");
        return static_cast<std::size_t>(r);
    }
};

inline void require_same_grid(const SampleGrid& a, const SampleGrid& b, const char* ctx) {
    if (!(a == b)) throw std::invalid_argument(std::string(ctx) + ": grid mismatch");
}

namespace detail {

template <class Derived>
struct SeriesBase {
    SampleGrid grid;
    std::vector<double> values;
    std::size_t warmup = 0; // samples [0, warmup) are transient

    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
    std::size_t size() const { return values.size(); }

    std::span<const double> valid() const {
        return std::span<const double>(values).subspan(std::min(warmup, values.size()));
    }

    void check() const {
        if (values.size() != grid.n)
            throw std::invalid_argument("series length does not match grid");
        for (double v : values)
            if (!std::isfinite(v)) throw std::invalid_argument("series contains non-finite value");
    }
};

} // namespace detail

struct PhaseSeries : detail::SeriesBase<PhaseSeries> {
    std::optional<double> carrier_hz; // nominal optical frequency, phase is relative to it

    PhaseSeries() = default;
    PhaseSeries(SampleGrid g, std::vector<double> v, std::size_t warm = 0,
                std::optional<double> carrier = std::nullopt) {
        grid = g;
        values = std::move(v);
        warmup = warm;
        carrier_hz = carrier;
        check();
    }
    static PhaseSeries zeros(const SampleGrid& g) {
        return PhaseSeries(g, std::vector<double>(g.n, 0.0));
    }
};

enum class CounterKind { Pi, Lambda, Instant };

inline const char* to_string(CounterKind k) {
    switch (k) {
        case CounterKind::Pi: return "pi";
        case CounterKind::Lambda: return "lambda";
        case CounterKind::Instant: return "instant";
    }
    return "?";
}

struct FrequencySeries : detail::SeriesBase<FrequencySeries> {
    CounterKind kind = CounterKind::Instant;
    bool fractional = false; // true: dimensionless y, false: Hz

    FrequencySeries() = default;
    FrequencySeries(SampleGrid g, std::vector<double> v, CounterKind k,
                    bool frac = false, std::size_t warm = 0) {
        grid = g;
        values = std::move(v);
        kind = k;
        fractional = frac;
        warmup = warm;
        check();
    }

    // Divides by the carrier, producing dimensionless fractional frequency.
    FrequencySeries to_fractional(double nu0_hz) const {
        if (fractional) return *this;
        if (!(nu0_hz > 0.0)) throw std::invalid_argument("to_fractional: carrier must be > 0");
        FrequencySeries out = *this;
        for (double& v : out.values) v /= nu0_hz;
        out.fractional = true;
        return out;
    }
};

struct TemperatureSeries : detail::SeriesBase<TemperatureSeries> {
    TemperatureSeries() = default;
    TemperatureSeries(SampleGrid g, std::vector<double> v, std::size_t warm = 0) {
        grid = g;
        values = std::move(v);
        warmup = warm;
        check();
    }
};

// output[i] = s[i-k] for i >= k; the first k samples repeat s[0] and are
// folded into the warm-up prefix.
inline PhaseSeries delay(const PhaseSeries& s, std::size_t k) {
    if (k >= s.grid.n) throw std::invalid_argument("delay: k out of range");
    if (k == 0) return s;
    PhaseSeries out = s;
    for (std::size_t i = s.grid.n; i-- > k;) out.values[i] = s.values[i - k];
    for (std::size_t i = 0; i < k; ++i) out.values[i] = s.values[0];
    out.warmup = std::min(s.grid.n, s.warmup + k);
    return out;
}

inline TemperatureSeries delay(const TemperatureSeries& s, std::size_t k) {
    if (k >= s.grid.n) throw std::invalid_argument("delay: k out of range");
    if (k == 0) return s;
    TemperatureSeries out = s;
    for (std::size_t i = s.grid.n; i-- > k;) out.values[i] = s.values[i - k];
    for (std::size_t i = 0; i < k; ++i) out.values[i] = s.values[0];
    out.warmup = std::min(s.grid.n, s.warmup + k);
    return out;
}

// Pointwise sum of c_i * s_i. Warm-up prefixes propagate as the union.
inline PhaseSeries affine(const std::vector<std::pair<double, const PhaseSeries*>>& terms) {
    if (terms.empty()) throw std::invalid_argument("affine: no terms");
    const SampleGrid& g = terms.front().second->grid;
    std::size_t warm = 0;
    for (const auto& [c, s] : terms) {
        require_same_grid(g, s->grid, "affine");
        warm = std::max(warm, s->warmup);
    }
    PhaseSeries out = PhaseSeries::zeros(g);
    out.warmup = warm;
    for (const auto& [c, s] : terms)
        for (std::size_t i = 0; i < g.n; ++i) out.values[i] += c * s->values[i];
    return out;
}

inline PhaseSeries affine(std::initializer_list<std::pair<double, const PhaseSeries*>> terms) {
    return affine(std::vector<std::pair<double, const PhaseSeries*>>(terms));
}

// phi[i] = phi[i-1] + 2*pi*f[i]*dt, phi[0] = 0. Inverse of pi_counter at
// gate = dt up to the documented one-sample alignment: pi_counter output
// gate k reproduces f[k+1].
inline PhaseSeries integrate_freq(const FrequencySeries& f) {
    if (f.kind != CounterKind::Instant)
        throw std::invalid_argument("integrate_freq: input must be Instant kind");
    PhaseSeries out = PhaseSeries::zeros(f.grid);
    out.warmup = f.warmup;
    for (std::size_t i = 1; i < f.grid.n; ++i)
        out.values[i] = out.values[i - 1] + two_pi * f.values[i] * f.grid.dt;
    return out;
}

} // namespace hyflink

#endif
