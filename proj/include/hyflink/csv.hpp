// CSV serialization for series and curves. Numbers are written with
// round-trip precision so byte-identical reproduction is meaningful.

#ifndef HYFLINK_CSV_HPP
#define HYFLINK_CSV_HPP

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include "counters.hpp"
#include "stability.hpp"
#include "timeseries.hpp"

namespace hyflink::csv {

inline std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

template <class Series>
std::string series_to_string(const Series& s) {
    std::string out = "t,value\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += format_double(s.grid.time_at(i));
        out += ',';
        out += format_double(s.values[i]);
        out += '\n';
    }
    return out;
}

inline std::string freq_to_string(const FrequencySeries& f) {
    std::string out = "gate_start,freq_hz,kind\n";
    for (std::size_t i = 0; i < f.size(); ++i) {
        out += format_double(f.grid.time_at(i));
        out += ',';
        out += format_double(f.values[i]);
        out += ',';
        out += to_string(f.kind);
        out += '\n';
    }
    return out;
}

inline std::string curve_to_string(const StabilityCurve& c) {
    std::string out = "tau_s,sigma,count,estimator,source_kind\n";
    for (const auto& p : c.points) {
        out += format_double(p.tau_s);
        out += ',';
        out += format_double(p.sigma);
        out += ',';
        out += std::to_string(p.count);
        out += ',';
        out += to_string(c.estimator);
        out += ',';
        out += to_string(c.source_kind);
        out += '\n';
    }
    return out;
}

inline std::string psd_to_string(const PsdCurve& c) {
    std::string out = "freq_hz,psd_rad2_per_hz\n";
    for (std::size_t i = 0; i < c.freq_hz.size(); ++i) {
        out += format_double(c.freq_hz[i]);
        out += ',';
        out += format_double(c.power[i]);
        out += '\n';
    }
    return out;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << content;
    if (!f) throw std::runtime_error("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Parses `gate_start,freq_hz,kind` counter data recorded externally.
inline FrequencySeries read_freq(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty counter file: " + path);
    std::vector<double> t, v;
    CounterKind kind = CounterKind::Pi;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, b, c;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ','))
            throw std::runtime_error("malformed counter row: " + line);
        std::getline(ls, c, ',');
        t.push_back(std::stod(a));
        v.push_back(std::stod(b));
        if (c == "lambda") kind = CounterKind::Lambda;
        else if (c == "instant") kind = CounterKind::Instant;
    }
    if (t.size() < 2) throw std::runtime_error("counter file needs >= 2 rows: " + path);
    SampleGrid g(t[1] - t[0], t.size(), t[0]);
    return FrequencySeries(g, std::move(v), kind);
}

} // namespace hyflink::csv

#endif
