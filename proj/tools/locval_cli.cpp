#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "locval/locval.hpp"

namespace {

std::filesystem::path out_dir() {
    const char* env = std::getenv("LOCVAL_OUT_DIR");
    return env && *env ? std::filesystem::path(env) : std::filesystem::path(".");
}

int cmd_run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
            const std::optional<std::string>& strategy, const std::optional<std::string>& out) {
    locval::RunSpec spec = locval::config::load(config_path);
    if (seed) spec.campaign.seed = *seed;
    if (strategy) {
        try {
            spec.campaign.strategy = locval::strategy_from_string(*strategy);
        } catch (const locval::ParameterError& e) {
            throw locval::ConfigError(e.what());
        }
    }
    if (spec.run_id.empty()) spec.run_id = spec.bench.id;
    const auto rows = locval::run_scored(spec);

    std::filesystem::path path;
    if (out) {
        path = *out;
    } else {
        path = out_dir() / (spec.bench.id + "_" + std::string(locval::to_string(spec.campaign.strategy)) + "_seed" +
                            std::to_string(spec.campaign.seed) + ".csv");
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    locval::csv::write(os, rows);
    if (!os) throw locval::Error("cannot write " + path.string());
    std::cerr << "wrote " << rows.size() << " rows to " << path.string() << '\n';
    return 0;
}

int cmd_bench(const std::string& suite, int restarts, int jobs) {
    try {
        locval::suite::jobs_for(suite, restarts);
    } catch (const locval::ParameterError& e) {
        throw locval::ConfigError(e.what());
    }
    const auto o = locval::suite::run_suite(suite, restarts, jobs, out_dir());
    std::cerr << "wrote " << o.results.string() << ", " << o.summary.string() << ", " << o.plot.string() << '\n';
    return 0;
}

int cmd_report(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw locval::Error("cannot open " + path);
    std::cout << locval::report::format(locval::report::summarize(locval::csv::read(in)));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local model validation by active learning"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run one seeded campaign and write its evaluation rows");
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> strategy, out;
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--seed", seed, "override run.seed");
    run->add_option("--strategy", strategy, "override acquisition.strategy")
        ->check(CLI::IsMember({"mis", "u", "u2", "random"}));
    run->add_option("--out", out, "results CSV (default: $LOCVAL_OUT_DIR/<case>_<strategy>_seed<N>.csv)");

    auto* bench = app.add_subcommand("bench", "run a benchmark suite over several seeds");
    std::string suite;
    int restarts = 0;
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    bench->add_option("--suite", suite, "benchmark id, or noise-<id> for the noise study")->required();
    bench->add_option("--restarts", restarts, "number of seeds")->required()->check(CLI::PositiveNumber);
    bench->add_option("--jobs", jobs, "parallel campaigns")->check(CLI::PositiveNumber);

    auto* report = app.add_subcommand("report", "summarize a results CSV");
    std::string results;
    report->add_option("csv", results, "results file")->required();

    app.add_subcommand("list", "print the registered benchmark ids");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*run) return cmd_run(config_path, seed, strategy, out);
        if (*bench) return cmd_bench(suite, restarts, jobs);
        if (*report) return cmd_report(results);
        for (const auto& id : locval::bench::case_ids()) std::cout << id << '\n';
        return 0;
    } catch (const locval::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
