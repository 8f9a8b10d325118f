// Scenario-driven batch runner for the hybrid-link simulator.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <hyflink/csv.hpp>
#include <hyflink/scenario.hpp>

namespace fs = std::filesystem;
using namespace hyflink;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

ScenarioConfig load_scenario(const std::string& config_path, const std::string& scenario,
                             std::uint64_t seed_override, bool has_seed) {
    ScenarioConfig sc;
    if (!scenario.empty()) {
        sc = bundled_scenario(scenario);
    } else if (!config_path.empty()) {
        json j;
        try {
            j = json::parse(csv::read_file(config_path));
        } catch (const json::exception& e) {
            throw ConfigError("unreadable config " + config_path + ": " + e.what());
        }
        sc = scenario_from_json(j);
    } else {
        throw ConfigError("either --config or --scenario is required");
    }
    if (has_seed) {
        sc.seed = seed_override;
        sc.link.seed = seed_override;
    }
    return sc;
}

std::string default_out_root() {
    const char* env = std::getenv("HYFLINK_OUT");
    return env ? env : "out";
}

int run_pipeline(const std::string& config_path, const std::string& scenario,
                 const std::string& out, std::uint64_t seed, bool has_seed,
                 bool force_decompose) {
    ScenarioConfig sc = load_scenario(config_path, scenario, seed, has_seed);
    if (force_decompose) sc.pipeline.decompose = true;
    fs::path dir = out.empty() ? fs::path(default_out_root()) / sc.name : fs::path(out);
    ReportBundle bundle = run_scenario(sc, dir);
    std::cout << "wrote bundle: " << bundle.dir.string() << "\n";
    for (const auto& item : bundle.manifest.at("files").items())
        std::cout << "  " << item.key() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyflink - hybrid optical-fiber frequency-comparison link simulator"};
    app.require_subcommand(1);

    std::string config_path, scenario, out, dir_a, dir_b;
    std::string freq_path;
    std::uint64_t seed = 0;
    double tolerance = 0.0;
    double nu0 = 194.4e12;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "scenario config JSON");
        cmd->add_option("--scenario", scenario, "bundled scenario name");
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--seed", seed, "override the scenario seed");
    };

    CLI::App* sim = app.add_subcommand("simulate", "run a scenario end to end");
    add_common(sim);
    CLI::App* dec = app.add_subcommand("decompose", "run a scenario with the regression pipeline");
    add_common(dec);

    CLI::App* ana = app.add_subcommand("analyze", "stability analysis of recorded counter data");
    ana->add_option("--freq", freq_path, "counter CSV (gate_start,freq_hz,kind)")->required();
    ana->add_option("--out", out, "output directory")->required();
    ana->add_option("--nu0", nu0, "carrier frequency for fractional conversion, Hz");

    CLI::App* rep = app.add_subcommand("report", "print a bundle summary");
    rep->add_option("dir", dir_a, "bundle directory")->required();

    CLI::App* cmp = app.add_subcommand("compare", "diff two bundles against tolerances");
    cmp->add_option("dir_a", dir_a, "first bundle")->required();
    cmp->add_option("dir_b", dir_b, "second bundle")->required();
    cmp->add_option("--tolerance", tolerance, "max allowed per-value deviation");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed() || dec->parsed()) {
            const bool has_seed = sim->count("--seed") > 0 || dec->count("--seed") > 0;
            return run_pipeline(config_path, scenario, out, seed, has_seed, dec->parsed());
        }

        if (ana->parsed()) {
            FrequencySeries f = csv::read_freq(freq_path);
            FrequencySeries y = f.fractional ? f : f.to_fractional(nu0);
            const auto taus = default_taus(y.grid.dt, y.grid.span() + y.grid.dt);
            fs::create_directories(out);
            csv::write_file((fs::path(out) / "oadev.csv").string(),
                            csv::curve_to_string(oadev(y, taus)));
            csv::write_file((fs::path(out) / "mdev.csv").string(),
                            csv::curve_to_string(mdev(y, taus)));
            OffsetEstimate off = mean_offset(
                y, f.kind == CounterKind::Lambda ? OffsetMethod::LambdaLongTermAdev
                                                 : OffsetMethod::PiSegmentStd);
            json j{{"mean", off.mean},
                   {"uncertainty", off.uncertainty},
                   {"method", off.method == OffsetMethod::LambdaLongTermAdev
                                  ? "lambda_long_term_adev" : "pi_segment_std"},
                   {"lambda_sourced_adev", f.kind == CounterKind::Lambda}};
            csv::write_file((fs::path(out) / "offset.json").string(), j.dump(2) + "\n");
            std::cout << "wrote analysis to " << out << "\n";
            return 0;
        }

        if (rep->parsed()) {
            json m = json::parse(csv::read_file((fs::path(dir_a) / "manifest.json").string()));
            std::cout << m.dump(2) << "\n";
            return 0;
        }

        if (cmp->parsed()) {
            BundleDiff diff = compare_bundles(dir_a, dir_b, tolerance);
            for (const auto& e : diff.entries) {
                std::cout << (e.pass ? "ok   " : "FAIL ") << e.file;
                if (e.missing) std::cout << " (missing)";
                else std::cout << " max_dev=" << e.max_deviation;
                std::cout << "\n";
            }
            if (!diff.pass) {
                std::cout << "first violation: " << diff.first_violation << "\n";
                return kExitRuntime;
            }
            std::cout << "bundles match within tolerance " << tolerance << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
