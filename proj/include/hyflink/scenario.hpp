// Scenario configuration (JSON), the batch analysis pipeline and the
// on-disk report bundle with its checksummed manifest.

#ifndef HYFLINK_SCENARIO_HPP
#define HYFLINK_SCENARIO_HPP

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "combiners.hpp"
#include "counters.hpp"
#include "csv.hpp"
#include "link.hpp"
#include "noise.hpp"
#include "regression.hpp"
#include "stability.hpp"
#include "timeseries.hpp"

namespace hyflink {

using nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class GridMode { Fast, Slow };

struct PipelineConfig {
    double gate_s = 1.0;
    bool run_counters = true;
    bool run_stability = true;
    std::size_t psd_segments = 0; // 0 = skip PSD
    bool decompose = false;
    double decimate_s = 0.0;        // 0 = regression on the native grid
    double max_lag_local_s = 0.0;   // decompose only
    double max_lag_remote_s = 0.0;
    double slip_threshold_cycles = 0.5;
    bool unidirectional = false; // emit the two-fiber difference estimate
};

struct ScenarioConfig {
    std::string name = "custom";
    LinkConfig link;
    SampleGrid grid{1.0, 2, 0.0};
    GridMode grid_mode = GridMode::Slow;
    std::uint64_t seed = 1;
    PipelineConfig pipeline;
};

namespace detail {

inline NoiseSpec noise_from_json(const json& j) {
    NoiseSpec s;
    s.white_pm = j.value("white_pm_rad2_per_hz", 0.0);
    s.white_fm = j.value("white_fm_hz2_per_hz", 0.0);
    s.random_walk_fm = j.value("random_walk_fm_hz2_per_s", 0.0);
    return s;
}

inline json noise_to_json(const NoiseSpec& s) {
    return json{{"white_pm_rad2_per_hz", s.white_pm},
                {"white_fm_hz2_per_hz", s.white_fm},
                {"random_walk_fm_hz2_per_s", s.random_walk_fm}};
}

inline LaserModel laser_from_json(const json& j) {
    LaserModel m;
    m.nu0 = j.value("nu0_hz", 194.4e12);
    m.drift = j.value("drift_hz_per_s", 0.0);
    m.curvature = j.value("curvature_hz_per_s2", 0.0);
    if (j.contains("noise")) m.noise = noise_from_json(j.at("noise"));
    return m;
}

inline json laser_to_json(const LaserModel& m) {
    return json{{"nu0_hz", m.nu0},
                {"drift_hz_per_s", m.drift},
                {"curvature_hz_per_s2", m.curvature},
                {"noise", noise_to_json(m.noise)}};
}

inline FiberModel fiber_from_json(const json& j) {
    FiberModel f;
    f.length_km = j.value("length_km", 43.0);
    f.tau_s = j.value("tau_s", 2.1e-4);
    if (j.contains("segments")) {
        f.segments.clear();
        for (const auto& js : j.at("segments")) {
            FiberSegment seg;
            seg.position = js.value("position", 0.5);
            if (js.contains("noise")) seg.noise = noise_from_json(js.at("noise"));
            f.segments.push_back(seg);
        }
    }
    if (j.contains("nonreciprocal")) f.nonreciprocal = noise_from_json(j.at("nonreciprocal"));
    return f;
}

inline json fiber_to_json(const FiberModel& f) {
    json segs = json::array();
    for (const auto& s : f.segments)
        segs.push_back(json{{"position", s.position}, {"noise", noise_to_json(s.noise)}});
    return json{{"length_km", f.length_km},
                {"tau_s", f.tau_s},
                {"segments", segs},
                {"nonreciprocal", noise_to_json(f.nonreciprocal)}};
}

inline TemperatureProfile temp_from_json(const json& j) {
    TemperatureProfile p;
    p.mean_k = j.value("mean_k", 298.0);
    p.random_walk = j.value("random_walk_k2_per_s", 0.0);
    p.heat_lag_s = j.value("heat_lag_s", 0.0);
    if (j.contains("sines"))
        for (const auto& js : j.at("sines"))
            p.sines.push_back({js.value("amplitude_k", 0.0), js.value("period_s", 1.0),
                               js.value("phase_rad", 0.0)});
    return p;
}

inline json temp_to_json(const TemperatureProfile& p) {
    json sines = json::array();
    for (const auto& s : p.sines)
        sines.push_back(json{{"amplitude_k", s.amplitude_k}, {"period_s", s.period_s},
                             {"phase_rad", s.phase_rad}});
    return json{{"mean_k", p.mean_k},
                {"sines", sines},
                {"random_walk_k2_per_s", p.random_walk},
                {"heat_lag_s", p.heat_lag_s}};
}

inline InterferometerModel ifo_from_json(const json& j) {
    InterferometerModel m;
    m.l11 = j.value("l11_m", 0.0); m.l12 = j.value("l12_m", 0.0); m.l13 = j.value("l13_m", 0.0);
    m.l14 = j.value("l14_m", 0.0); m.l15 = j.value("l15_m", 0.0); m.l16 = j.value("l16_m", 0.0);
    m.l21 = j.value("l21_m", 0.0); m.l22 = j.value("l22_m", 0.0); m.l23 = j.value("l23_m", 0.0);
    m.gamma_fs_per_k_m = j.value("gamma_fs_per_k_m", 37.0);
    if (j.contains("temperature")) m.temperature = temp_from_json(j.at("temperature"));
    return m;
}

inline json ifo_to_json(const InterferometerModel& m) {
    return json{{"l11_m", m.l11}, {"l12_m", m.l12}, {"l13_m", m.l13},
                {"l14_m", m.l14}, {"l15_m", m.l15}, {"l16_m", m.l16},
                {"l21_m", m.l21}, {"l22_m", m.l22}, {"l23_m", m.l23},
                {"gamma_fs_per_k_m", m.gamma_fs_per_k_m},
                {"temperature", temp_to_json(m.temperature)}};
}

} // namespace detail

inline ScenarioConfig scenario_from_json(const json& j) {
    ScenarioConfig sc;
    try {
        sc.name = j.value("name", "custom");
        if (j.contains("grid")) {
            const auto& jg = j.at("grid");
            sc.grid = SampleGrid(jg.value("dt_s", 1.0),
                                 jg.value("n", std::size_t{2}),
                                 jg.value("t0_s", 0.0));
        }
        const std::string gm = j.value("grid_mode", "slow");
        if (gm == "fast") sc.grid_mode = GridMode::Fast;
        else if (gm == "slow") sc.grid_mode = GridMode::Slow;
        else throw ConfigError("grid_mode must be 'fast' or 'slow'");
        sc.seed = j.value("seed", std::uint64_t{1});
        sc.link.seed = sc.seed;

        if (j.contains("link")) {
            const auto& jl = j.at("link");
            if (jl.contains("laser1")) sc.link.laser1 = detail::laser_from_json(jl.at("laser1"));
            if (jl.contains("laser2")) sc.link.laser2 = detail::laser_from_json(jl.at("laser2"));
            if (jl.contains("fiber1")) sc.link.fiber1 = detail::fiber_from_json(jl.at("fiber1"));
            if (jl.contains("fiber2")) sc.link.fiber2 = detail::fiber_from_json(jl.at("fiber2"));
            if (jl.contains("local_ifo")) sc.link.local_ifo = detail::ifo_from_json(jl.at("local_ifo"));
            if (jl.contains("remote_ifo")) sc.link.remote_ifo = detail::ifo_from_json(jl.at("remote_ifo"));
            if (jl.contains("detection_noise"))
                sc.link.detection_noise = detail::noise_from_json(jl.at("detection_noise"));
            if (jl.contains("aom")) {
                const auto& ja = jl.at("aom");
                sc.link.aom_f1 = ja.value("f1_hz", 0.0);
                sc.link.aom_f2 = ja.value("f2_hz", 0.0);
                sc.link.aom_f3 = ja.value("f3_hz", 0.0);
                sc.link.aom_f4 = ja.value("f4_hz", 0.0);
            }
            if (jl.contains("mode")) {
                const auto& jm = jl.at("mode");
                const std::string anc = jm.value("anc", "ideal");
                if (anc == "ideal") sc.link.anc = AncMode::Ideal;
                else if (anc == "loop") sc.link.anc = AncMode::Loop;
                else if (anc == "off") sc.link.anc = AncMode::Off;
                else throw ConfigError("mode.anc must be ideal|loop|off");
                sc.link.anc_loop_gain = jm.value("anc_loop_gain_per_s", 0.0);
                const std::string rm = jm.value("remote_mirror", "standard");
                if (rm == "standard") sc.link.remote_mirror = RemoteMirror::Standard;
                else if (rm == "partial_fm") sc.link.remote_mirror = RemoteMirror::PartialFm;
                else throw ConfigError("mode.remote_mirror must be standard|partial_fm");
                sc.link.same_laser = jm.value("same_laser", false);
                sc.link.zero_delay = jm.value("zero_delay", false);
            }
        }
        if (j.contains("pipeline")) {
            const auto& jp = j.at("pipeline");
            sc.pipeline.gate_s = jp.value("gate_s", 1.0);
            sc.pipeline.run_counters = jp.value("counters", true);
            sc.pipeline.run_stability = jp.value("stability", true);
            sc.pipeline.psd_segments = jp.value("psd_segments", std::size_t{0});
            sc.pipeline.decompose = jp.value("decompose", false);
            sc.pipeline.decimate_s = jp.value("decimate_s", 0.0);
            sc.pipeline.max_lag_local_s = jp.value("max_lag_local_s", 0.0);
            sc.pipeline.max_lag_remote_s = jp.value("max_lag_remote_s", 0.0);
            sc.pipeline.slip_threshold_cycles = jp.value("slip_threshold_cycles", 0.5);
            sc.pipeline.unidirectional = jp.value("unidirectional", false);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return sc;
}

inline json scenario_to_json(const ScenarioConfig& sc) {
    json j;
    j["name"] = sc.name;
    j["grid"] = json{{"dt_s", sc.grid.dt}, {"n", sc.grid.n}, {"t0_s", sc.grid.t0}};
    j["grid_mode"] = sc.grid_mode == GridMode::Fast ? "fast" : "slow";
    j["seed"] = sc.seed;
    json mode;
    mode["anc"] = sc.link.anc == AncMode::Ideal ? "ideal"
                  : sc.link.anc == AncMode::Loop ? "loop" : "off";
    mode["anc_loop_gain_per_s"] = sc.link.anc_loop_gain;
    mode["remote_mirror"] = sc.link.remote_mirror == RemoteMirror::Standard ? "standard"
                                                                            : "partial_fm";
    mode["same_laser"] = sc.link.same_laser;
    mode["zero_delay"] = sc.link.zero_delay;
    j["link"] = json{{"laser1", detail::laser_to_json(sc.link.laser1)},
                     {"laser2", detail::laser_to_json(sc.link.laser2)},
                     {"fiber1", detail::fiber_to_json(sc.link.fiber1)},
                     {"fiber2", detail::fiber_to_json(sc.link.fiber2)},
                     {"local_ifo", detail::ifo_to_json(sc.link.local_ifo)},
                     {"remote_ifo", detail::ifo_to_json(sc.link.remote_ifo)},
                     {"detection_noise", detail::noise_to_json(sc.link.detection_noise)},
                     {"aom", json{{"f1_hz", sc.link.aom_f1}, {"f2_hz", sc.link.aom_f2},
                                  {"f3_hz", sc.link.aom_f3}, {"f4_hz", sc.link.aom_f4}}},
                     {"mode", mode}};
    j["pipeline"] = json{{"gate_s", sc.pipeline.gate_s},
                         {"counters", sc.pipeline.run_counters},
                         {"stability", sc.pipeline.run_stability},
                         {"psd_segments", sc.pipeline.psd_segments},
                         {"decompose", sc.pipeline.decompose},
                         {"decimate_s", sc.pipeline.decimate_s},
                         {"max_lag_local_s", sc.pipeline.max_lag_local_s},
                         {"max_lag_remote_s", sc.pipeline.max_lag_remote_s},
                         {"slip_threshold_cycles", sc.pipeline.slip_threshold_cycles},
                         {"unidirectional", sc.pipeline.unidirectional}};
    return j;
}

// ---------------------------------------------------------------------------
// Bundled paper-figure-analog scenarios.

inline std::vector<std::string> bundled_scenario_names() {
    return {"fig2_anc_loop",      "fig3_independent", "fig3_same_laser",
            "fig4_partial_fm",    "fig5_same_laser_pfm", "fig6_unidirectional",
            "zero_delay_exact",   "drift_law_fast",   "rejection_ratio_fast"};
}

inline ScenarioConfig bundled_scenario(const std::string& name) {
    ScenarioConfig sc;
    sc.name = name;
    sc.seed = 20260823;
    sc.link.seed = sc.seed;
    auto& L = sc.link;

    const auto white_pm_floor = [] {
        NoiseSpec s;
        s.white_pm = 2e-3; // rad^2/Hz detection floor
        return s;
    }();
    const auto room_control = [] {
        TemperatureProfile p;
        p.mean_k = 295.0;
        p.sines = {{0.25, 600.0, 0.0}, {0.08, 3600.0, 1.1}};
        p.random_walk = 1e-7;
        p.heat_lag_s = 105.0;
        return p;
    }();
    const auto lab_slow = [] {
        TemperatureProfile p;
        p.mean_k = 298.0;
        p.sines = {{0.3, 7200.0, 2.0}, {0.1, 86400.0, 0.3}};
        p.random_walk = 1e-6;
        p.heat_lag_s = 2300.0;
        return p;
    }();

    if (name == "fig2_anc_loop" || name == "fig3_independent" || name == "fig3_same_laser"
        || name == "fig4_partial_fm" || name == "fig5_same_laser_pfm"
        || name == "fig6_unidirectional") {
        // Long statistics runs on the slow grid.
        sc.grid = SampleGrid(1.0, 100000, 0.0);
        sc.grid_mode = GridMode::Slow;
        L.laser1.drift = 1.0;
        L.laser2.drift = 0.7;
        L.detection_noise = white_pm_floor;
        L.local_ifo.temperature = lab_slow;
        L.remote_ifo.temperature = room_control;
        L.local_ifo.set_delta_l_local(0.15);
        L.remote_ifo.set_delta_l_remote(0.35);
        sc.pipeline.gate_s = 1.0;
        sc.pipeline.decompose = true;
        sc.pipeline.decimate_s = 5.0;
        sc.pipeline.max_lag_local_s = 4000.0;
        sc.pipeline.max_lag_remote_s = 400.0;

        if (name == "fig2_anc_loop") {
            L.local_ifo.set_delta_l_local(0.0);
            L.remote_ifo.set_delta_l_remote(0.0);
            sc.pipeline.decompose = false;
        } else if (name == "fig3_same_laser") {
            L.same_laser = true;
        } else if (name == "fig4_partial_fm") {
            L.remote_mirror = RemoteMirror::PartialFm;
        } else if (name == "fig5_same_laser_pfm") {
            L.same_laser = true;
            L.remote_mirror = RemoteMirror::PartialFm;
        } else if (name == "fig6_unidirectional") {
            L.anc = AncMode::Off;
            L.laser1.drift = L.laser2.drift = 0.0;
            L.same_laser = true;
            L.fiber1.segments = {{0.5, {0.0, 4e-4, 0.0, 0}}};
            L.fiber2.segments = {{0.5, {0.0, 4e-4, 0.0, 0}}};
            sc.pipeline.decompose = false;
            sc.pipeline.unidirectional = true;
        }
    } else if (name == "zero_delay_exact") {
        sc.grid = SampleGrid(1e-3, 1000000, 0.0);
        sc.grid_mode = GridMode::Fast;
        L.zero_delay = true;
        L.laser1.drift = 1.0;
        L.laser1.noise.white_fm = 1e-2;
        L.laser2.drift = -0.5;
        L.laser2.noise.white_fm = 1e-2;
        L.fiber2.segments = {{0.5, {1e-4, 1e-3, 0.0, 0}}};
        sc.pipeline.gate_s = 1.0;
        sc.pipeline.run_stability = false;
    } else if (name == "drift_law_fast") {
        // tau = 2.1e-4 s on a dt = tau grid, pure linear relative drift,
        // just over 1000 s of record.
        sc.grid = SampleGrid(2.1e-4, 4800000, 0.0);
        sc.grid_mode = GridMode::Fast;
        L.laser1.drift = 1.0;
        L.laser2.drift = 0.0;
        sc.pipeline.gate_s = 0.42;
        sc.pipeline.run_stability = false;
    } else if (name == "rejection_ratio_fast") {
        // 16 distributed segments; dt = tau/32 keeps every position on grid.
        sc.grid = SampleGrid(2.1e-4 / 32.0, 1 << 21, 0.0);
        sc.grid_mode = GridMode::Fast;
        L.fiber2.segments.clear();
        for (int j = 0; j < 16; ++j)
            L.fiber2.segments.push_back({(j + 0.5) / 16.0, {1e-6, 0.0, 0.0, 0}});
        sc.pipeline.gate_s = 0.0525; // 8000 samples
        sc.pipeline.run_stability = false;
        sc.pipeline.psd_segments = 15;
    } else {
        throw ConfigError("unknown bundled scenario: " + name);
    }
    return sc;
}

// ---------------------------------------------------------------------------
// Decimation for the regression stage (averaging, per design).

template <class Series>
Series decimate_avg(const Series& s, std::size_t m) {
    if (m <= 1) return s;
    const std::size_t n = s.grid.n / m;
    if (n < 1) throw std::invalid_argument("decimate_avg: factor too large");
    Series out;
    out.grid = SampleGrid(s.grid.dt * static_cast<double>(m), n,
                          s.grid.t0 + s.grid.dt * static_cast<double>(m - 1) / 2.0);
    out.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += s.values[k * m + i];
        out.values[k] = acc / static_cast<double>(m);
    }
    out.warmup = (s.warmup + m - 1) / m;
    return out;
}

// ---------------------------------------------------------------------------
// Report bundle.

inline std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct ReportBundle {
    std::filesystem::path dir;
    json manifest;
};

namespace detail {

struct BundleWriter {
    std::filesystem::path dir;
    json files = json::object();

    void emit(const std::string& name, const std::string& content) {
        csv::write_file((dir / name).string(), content);
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a(content)));
        files[name] = buf;
    }
};

} // namespace detail

// Runs simulation + the selected analysis pipeline, writing every artifact
// under out_dir and finishing with manifest.json.
inline ReportBundle run_scenario(const ScenarioConfig& sc, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    detail::BundleWriter w{out_dir};

    BeatRecord rec = sc.grid_mode == GridMode::Fast ? simulate(sc.link, sc.grid)
                                                    : simulate_first_order(sc.link, sc.grid);

    PhaseSeries ltwl = ltw_local(rec.pd4a, rec.pd4b);
    PhaseSeries ltwr = ltw_remote(rec.pd3a, rec.pd3b);
    PhaseSeries phi_ctw = ctw(rec.pd4a, rec.pd3a);
    PhaseSeries ltwl_lm = affine({{1.0, &ltwl}, {-1.0, &rec.lm}});
    PhaseSeries ltwr_lm = affine({{1.0, &ltwr}, {-1.0, &rec.lm}});
    PhaseSeries ctw_lm = affine({{1.0, &phi_ctw}, {-1.0, &rec.lm}});

    w.emit("ltw_local_minus_lm.csv", csv::series_to_string(ltwl_lm));
    w.emit("ltw_remote_minus_lm.csv", csv::series_to_string(ltwr_lm));
    w.emit("ctw_minus_lm.csv", csv::series_to_string(ctw_lm));
    w.emit("temp_local.csv", csv::series_to_string(rec.temp_local_measured));
    w.emit("temp_remote.csv", csv::series_to_string(rec.temp_remote_measured));

    json report;
    report["scenario"] = sc.name;

    const double nu0 = sc.link.laser1.nu0;
    if (sc.pipeline.run_counters) {
        CounterConfig pi_cfg{sc.pipeline.gate_s, CounterKind::Pi, 0.0};
        CounterConfig la_cfg{sc.pipeline.gate_s, CounterKind::Lambda, 0.0};
        FrequencySeries f_pi = pi_counter(ltwl_lm, pi_cfg);
        FrequencySeries f_la = lambda_counter(ltwl_lm, la_cfg);
        w.emit("freq_pi.csv", csv::freq_to_string(f_pi));
        w.emit("freq_lambda.csv", csv::freq_to_string(f_la));

        const double thr = sc.pipeline.slip_threshold_cycles / sc.pipeline.gate_s;
        auto slips = detect_cycle_slips(f_pi, f_la, thr);
        json js = json::array();
        for (const auto& s : slips)
            js.push_back(json{{"gate", s.gate}, {"magnitude_hz", s.magnitude_hz}});
        report["cycle_slips"] = js;

        FrequencySeries c_l = pi_counter(ltwl, pi_cfg);
        FrequencySeries c_r = pi_counter(ltwr, pi_cfg);
        FrequencySeries c_c = pi_counter(phi_ctw, pi_cfg);
        auto cons = consistency_check(c_l, c_r, c_c, thr);
        report["consistency"] = json{{"max_deviation_hz", cons.max_deviation_hz},
                                     {"worst_gate", cons.worst_gate},
                                     {"violations", cons.violations.size()}};

        if (sc.pipeline.run_stability) {
            FrequencySeries y_pi = f_pi.to_fractional(nu0);
            FrequencySeries y_la = f_la.to_fractional(nu0);
            const auto taus = default_taus(sc.pipeline.gate_s,
                                           f_pi.grid.span() + sc.pipeline.gate_s);
            w.emit("oadev_pi.csv", csv::curve_to_string(oadev(y_pi, taus)));
            w.emit("mdev_pi.csv", csv::curve_to_string(mdev(y_pi, taus)));
            w.emit("oadev_lambda.csv", csv::curve_to_string(oadev(y_la, taus)));
            w.emit("mdev_lambda.csv", csv::curve_to_string(mdev(y_la, taus)));

            OffsetEstimate off_la = mean_offset(y_la, OffsetMethod::LambdaLongTermAdev);
            OffsetEstimate off_pi = mean_offset(y_pi, OffsetMethod::PiSegmentStd);
            report["offset_lambda"] = json{{"mean", off_la.mean},
                                           {"uncertainty", off_la.uncertainty},
                                           {"tau_used_s", off_la.tau_used_s},
                                           {"method", "lambda_long_term_adev"},
                                           {"lambda_sourced_adev", true}};
            report["offset_pi"] = json{{"mean", off_pi.mean},
                                       {"uncertainty", off_pi.uncertainty},
                                       {"method", "pi_segment_std"},
                                       {"normalization", off_pi.sqrt_l_normalization ? "sqrt_L" : "L"}};
        }
    }

    if (sc.pipeline.psd_segments > 0) {
        w.emit("psd_ltw_minus_lm.csv", csv::psd_to_string(psd(ltwl_lm, sc.pipeline.psd_segments)));
        w.emit("psd_ctw_minus_lm.csv", csv::psd_to_string(psd(ctw_lm, sc.pipeline.psd_segments)));
    }

    if (sc.pipeline.unidirectional) {
        // One-way estimates: fiber-1 from the (open-loop) ANC round trip,
        // fiber-2 from the two-way round trip.
        PhaseSeries est1 = affine({{-0.5, &rec.pd1}});
        PhaseSeries est2 = affine({{0.5, &rec.pd4b}});
        PhaseSeries uni = uni_directional_two_way(est1, est2);
        w.emit("unidirectional.csv", csv::series_to_string(uni));
        if (sc.pipeline.run_stability) {
            CounterConfig la_cfg{sc.pipeline.gate_s, CounterKind::Lambda, 0.0};
            FrequencySeries y = lambda_counter(uni, la_cfg).to_fractional(nu0);
            const auto taus = default_taus(sc.pipeline.gate_s, y.grid.span() + sc.pipeline.gate_s);
            w.emit("oadev_unidirectional.csv", csv::curve_to_string(oadev(y, taus)));
        }
    }

    if (sc.pipeline.decompose) {
        const std::size_t dec = sc.pipeline.decimate_s > 0.0
            ? sc.grid.samples_for(sc.pipeline.decimate_s, "decimate")
            : 1;
        PhaseSeries phase = decimate_avg(ltwl_lm, dec);
        TemperatureSeries tl = decimate_avg(rec.temp_local_measured, dec);
        TemperatureSeries tr = decimate_avg(rec.temp_remote_measured, dec);
        tl.warmup = tr.warmup = phase.warmup;

        // Drift term from the frequency traces (the PD5-equivalent data).
        FrequencySeries nu1 = rec.truth_nu1, nu2 = rec.truth_nu2;
        PhaseSeries drift_full = phi_drift(nu1, nu2, sc.link.fiber2.tau_s);
        PhaseSeries drift_dec = decimate_avg(drift_full, dec);

        PhaseSeries detrended = affine({{1.0, &phase}, {-1.0, &drift_dec}});
        LagEstimate lag_l = estimate_lag(detrended, tl, sc.pipeline.max_lag_local_s);
        LagEstimate lag_r = estimate_lag(detrended, tr, sc.pipeline.max_lag_remote_s);

        DecompositionResult d = fit_mismatch(phase, tl, tr, lag_l.lag_s, lag_r.lag_s,
                                             drift_dec,
                                             sc.link.local_ifo.gamma_fs_per_k_m, nu0);
        w.emit("residual.csv", csv::series_to_string(d.residual));
        report["decomposition"] = json{
            {"lag_local_s", d.lag_local_s},
            {"lag_remote_s", d.lag_remote_s},
            {"lag_local_significant", lag_l.significant},
            {"lag_remote_significant", lag_r.significant},
            {"dl_local_m", d.dl_local_m},
            {"dl_remote_m", d.dl_remote_m},
            {"se_dl_local_m", d.se_local / (two_pi * nu0 * sc.link.local_ifo.gamma_fs_per_k_m * 1e-15)},
            {"se_dl_remote_m", d.se_remote / (two_pi * nu0 * sc.link.local_ifo.gamma_fs_per_k_m * 1e-15)},
            {"r_squared", d.r_squared},
            {"intercept_convention", "always included"}};
    }

    w.emit("report.json", report.dump(2) + "\n");

    json manifest;
    manifest["format_version"] = 1;
    manifest["scenario"] = sc.name;
    manifest["seed"] = sc.seed;
    manifest["grid"] = json{{"dt_s", sc.grid.dt}, {"n", sc.grid.n}, {"t0_s", sc.grid.t0}};
    manifest["grid_mode"] = sc.grid_mode == GridMode::Fast ? "fast" : "slow";
    manifest["lambda_resolution_convention"] = "delta = dt";
    {
        const std::string cfg = scenario_to_json(sc).dump();
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a(cfg)));
        manifest["config_hash"] = buf;
    }
    manifest["files"] = w.files;
    const std::string mtxt = manifest.dump(2) + "\n";
    csv::write_file((out_dir / "manifest.json").string(), mtxt);
    csv::write_file((out_dir / "config.json").string(), scenario_to_json(sc).dump(2) + "\n");

    return ReportBundle{out_dir, manifest};
}

// ---------------------------------------------------------------------------
// Bundle comparison.

struct BundleDiff {
    struct Entry {
        std::string file;
        double max_deviation = 0.0;
        bool missing = false;
        bool pass = true;
    };
    std::vector<Entry> entries;
    bool pass = true;
    std::string first_violation;
};

namespace detail {

// Max absolute deviation across the numeric fields of two CSV files with
// identical layout; non-numeric fields must match exactly.
inline double csv_max_deviation(const std::string& a, const std::string& b) {
    std::istringstream sa(a), sb(b);
    std::string la, lb;
    double max_dev = 0.0;
    while (true) {
        const bool ga = static_cast<bool>(std::getline(sa, la));
        const bool gb = static_cast<bool>(std::getline(sb, lb));
        if (!ga && !gb) break;
        if (ga != gb) return std::numeric_limits<double>::infinity();
        if (la == lb) continue;
        std::istringstream fa(la), fb(lb);
        std::string ta, tb;
        while (true) {
            const bool ha = static_cast<bool>(std::getline(fa, ta, ','));
            const bool hb = static_cast<bool>(std::getline(fb, tb, ','));
            if (!ha && !hb) break;
            if (ha != hb) return std::numeric_limits<double>::infinity();
            if (ta == tb) continue;
            try {
                const double va = std::stod(ta), vb = std::stod(tb);
                max_dev = std::max(max_dev, std::abs(va - vb));
            } catch (...) {
                return std::numeric_limits<double>::infinity();
            }
        }
    }
    return max_dev;
}

// Max absolute deviation across numeric leaves of two JSON documents with
// identical structure; any structural or non-numeric mismatch is infinite.
inline double json_max_deviation(const json& a, const json& b) {
    if (a.is_number() && b.is_number())
        return std::abs(a.get<double>() - b.get<double>());
    if (a.type() != b.type()) return std::numeric_limits<double>::infinity();
    if (a.is_object()) {
        if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
        double dev = 0.0;
        for (const auto& [key, val] : a.items()) {
            if (!b.contains(key)) return std::numeric_limits<double>::infinity();
            dev = std::max(dev, json_max_deviation(val, b.at(key)));
        }
        return dev;
    }
    if (a.is_array()) {
        if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
        double dev = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            dev = std::max(dev, json_max_deviation(a[i], b[i]));
        return dev;
    }
    return a == b ? 0.0 : std::numeric_limits<double>::infinity();
}

inline double artifact_max_deviation(const std::string& name, const std::string& a,
                                     const std::string& b) {
    if (name.size() >= 5 && name.compare(name.size() - 5, 5, ".json") == 0) {
        try {
            return json_max_deviation(json::parse(a), json::parse(b));
        } catch (const json::exception&) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return csv_max_deviation(a, b);
}

} // namespace detail

inline BundleDiff compare_bundles(const std::filesystem::path& dir_a,
                                  const std::filesystem::path& dir_b,
                                  double tolerance) {
    json ma = json::parse(csv::read_file((dir_a / "manifest.json").string()));
    json mb = json::parse(csv::read_file((dir_b / "manifest.json").string()));
    BundleDiff diff;
    for (const auto& [name, hash] : ma.at("files").items()) {
        BundleDiff::Entry e;
        e.file = name;
        if (!mb.at("files").contains(name) || !std::filesystem::exists(dir_b / name)) {
            e.missing = true;
            e.pass = false;
        } else if (mb.at("files").at(name) == hash) {
            e.max_deviation = 0.0;
        } else {
            e.max_deviation = detail::artifact_max_deviation(
                name, csv::read_file((dir_a / name).string()),
                csv::read_file((dir_b / name).string()));
            e.pass = e.max_deviation <= tolerance;
        }
        if (!e.pass) {
            diff.pass = false;
            if (diff.first_violation.empty()) diff.first_violation = name;
        }
        diff.entries.push_back(e);
    }
    for (const auto& item : mb.at("files").items())
        if (!ma.at("files").contains(item.key())) {
            diff.entries.push_back({item.key(), 0.0, true, false});
            diff.pass = false;
            if (diff.first_violation.empty()) diff.first_violation = item.key();
        }
    return diff;
}

} // namespace hyflink

#endif
