// Command-line front end: single runs, censoring-level sweeps and the built-in
// oracle checks.
//
//   voi_cli run    --config <file> [--filter voi|voi-nocov|diffusion] [--gamma <v>] [--seed <n>] --out <dir>
//   voi_cli sweep  --config <file> --gammas <list> --seeds <n> [--filter ...] --out <dir>
//   voi_cli verify
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "voi/config_io.hpp"
#include "voi/harness.hpp"
#include "voi/verify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

double parse_gamma(const std::string& s) {
    if (s == "inf" || s == "+inf" || s == "infinity") {
        return std::numeric_limits<double>::infinity();
    }
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw voi::ConfigError("bad gamma value '" + s + "'");
    return v;
}

std::vector<double> parse_gamma_list(const std::string& s) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto token = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!token.empty()) out.push_back(parse_gamma(token));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw voi::ConfigError("empty gamma list");
    return out;
}

std::ofstream open_out(const fs::path& dir, const char* name) {
    fs::create_directories(dir);
    std::ofstream os(dir / name);
    if (!os) throw voi::ConfigError("cannot write " + (dir / name).string());
    return os;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"VoI-censored distributed estimation simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, filter_name = "voi", gamma_arg, gammas_arg;
    std::optional<std::uint64_t> seed;
    int seeds = 1;
    unsigned threads = 0;

    auto* run = app.add_subcommand("run", "run one experiment and write steps/summary/series CSVs");
    run->add_option("--config", config_path, "scenario JSON file")->required();
    run->add_option("--filter", filter_name, "voi, voi-nocov or diffusion");
    run->add_option("--gamma", gamma_arg, "censoring level in nats (overrides the config; 'inf' allowed)");
    run->add_option("--seed", seed, "master seed (overrides the config)");
    run->add_option("--out", out_dir, "output directory")->required();

    auto* sweep = app.add_subcommand("sweep", "sweep the censoring level and write sweep.csv");
    sweep->add_option("--config", config_path, "scenario JSON file")->required();
    sweep->add_option("--gammas", gammas_arg, "comma-separated censoring levels")->required();
    sweep->add_option("--seeds", seeds, "runs per gamma, seeds master..master+n-1")->check(CLI::PositiveNumber);
    sweep->add_option("--filter", filter_name, "voi, voi-nocov or diffusion");
    sweep->add_option("--seed", seed, "master seed (overrides the config)");
    sweep->add_option("--threads", threads, "worker threads (0 = all cores)");
    sweep->add_option("--out", out_dir, "output directory")->required();

    auto* verify = app.add_subcommand("verify", "run the oracle and property checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed()) {
            const auto results = voi::verify::run_all();
            bool all = true;
            for (const auto& r : results) {
                std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << '\n';
                all = all && r.passed;
            }
            return all ? EXIT_SUCCESS : kExitNumerical;
        }

        voi::ScenarioConfig config = voi::load_config(config_path);
        if (seed) config.seeds.master = *seed;
        const voi::FilterKind filter = voi::filter_kind_from_string(filter_name);

        if (run->parsed()) {
            if (!gamma_arg.empty()) config.gamma = parse_gamma(gamma_arg);
            config.validate();
            const auto result = voi::run_experiment(config, filter);
            const fs::path dir(out_dir);
            auto steps = open_out(dir, "steps.csv");
            voi::write_steps_csv(steps, result.records);
            auto summary = open_out(dir, "summary.csv");
            voi::write_summary_csv(summary, result);
            auto series = open_out(dir, "series.csv");
            voi::write_series_csv(series, result.summary);
            const auto& s = result.summary;
            std::cout << "filter=" << voi::to_string(filter) << " gamma=" << config.gamma
                      << " asymptotic_rmse=" << s.asymptotic_rmse
                      << " mean_medium_access=" << s.mean_medium_access
                      << " peak_medium_access=" << s.peak_medium_access << " kbps=" << s.kbps
                      << '\n';
        } else if (sweep->parsed()) {
            const auto gammas = parse_gamma_list(gammas_arg);
            const auto results =
                voi::run_sweep(config, gammas, voi::SweepOptions{filter, seeds, threads});
            auto os = open_out(fs::path(out_dir), "sweep.csv");
            voi::write_sweep_csv(os, filter, results);
            voi::write_sweep_csv(std::cout, filter, results);
            for (const auto& r : results) {
                if (!r.ok) return kExitNumerical;
            }
        }
    } catch (const voi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const voi::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return EXIT_SUCCESS;
}
