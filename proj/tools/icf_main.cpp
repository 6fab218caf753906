#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <unistd.h>

#include <CLI11.hpp>

#include "icf/config.hpp"
#include "icf/dataset.hpp"
#include "icf/errors.hpp"
#include "icf/runner.hpp"

namespace fs = std::filesystem;

namespace {

const char* error_prefix() {
    static const bool color = ::isatty(2) != 0 && std::getenv("NO_COLOR") == nullptr;
    return color ? "\x1b[31merror:\x1b[0m " : "error: ";
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw icf::IoError("cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int cmd_validate(const std::string& path) {
    const icf::QuestionSet qs =
        icf::load_question_set(slurp(path), fs::path(path).filename().string());
    std::size_t media = 0;
    for (const auto& q : qs.questions) {
        if (q.has_media) ++media;
    }
    std::cout << qs.size() << " questions OK";
    if (media > 0) {
        std::cout << " (" << media << " with media are skipped by runs, " << (qs.size() - media)
                  << " text-only)";
    }
    std::cout << "\n";
    return 0;
}

void print_finish(const icf::RunResult& res) {
    const icf::RunOutcome& o = res.outcome;
    char rate[32];
    std::snprintf(rate, sizeof rate, "%.2f", o.partitions.back().consensus_rate);
    std::cout << "finished: " << icf::to_string(o.termination) << " after "
              << o.collaboration_rounds() << " collaboration round"
              << (o.collaboration_rounds() == 1 ? "" : "s") << ", final consensus " << rate << "%\n"
              << "run directory: " << res.run_dir << "\n"
              << "reports: " << (fs::path(res.run_dir) / "reports").string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent answer collaboration over multiple-choice medical questions"};
    app.require_subcommand(1);

    std::string dataset_path;
    auto* validate = app.add_subcommand("validate", "Check a dataset file and print diagnostics");
    validate->add_option("dataset", dataset_path, "Dataset JSON file")->required();

    std::string config_path;
    double opt_threshold = 0.0;
    int opt_max_rounds = 0;
    int opt_n = 0;
    std::uint64_t opt_seed = 0;
    int opt_parallelism = 0;
    std::string opt_out;
    auto* run = app.add_subcommand("run", "Execute a collaboration run from a config file");
    run->add_option("config", config_path, "Run config JSON file")->required();
    run->add_option("--threshold", opt_threshold, "Consensus threshold in percent (overrides config)");
    run->add_option("--max-rounds", opt_max_rounds, "Collaboration round cap (overrides config)");
    run->add_option("--n", opt_n, "Samples per question per model (overrides config)");
    run->add_option("--seed", opt_seed, "Run seed (overrides config)");
    run->add_option("--parallelism", opt_parallelism, "Concurrent generation limit (overrides config)");
    run->add_option("--out", opt_out, "Run directory (overrides config)");

    std::string resume_dir;
    int resume_parallelism = 4;
    auto* resume = app.add_subcommand("resume", "Continue an interrupted run");
    resume->add_option("dir", resume_dir, "Run directory")->required();
    resume->add_option("--parallelism", resume_parallelism, "Concurrent generation limit");

    std::string report_dir;
    auto* report = app.add_subcommand("report", "Re-emit reports from a run directory");
    report->add_option("dir", report_dir, "Run directory")->required();

    std::string demo_dir = "demo";
    auto* demo = app.add_subcommand(
        "mock-demo", "Write an offline scripted demo bundle and run it (replaces <out>/run)");
    demo->add_option("--out", demo_dir, "Directory for the demo bundle");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (app.got_subcommand(validate)) return cmd_validate(dataset_path);

        if (app.got_subcommand(run)) {
            icf::RunConfig cfg = icf::load_run_config(config_path);
            if (run->count("--threshold") > 0) cfg.loop.threshold = opt_threshold;
            if (run->count("--max-rounds") > 0) cfg.loop.max_rounds = opt_max_rounds;
            if (run->count("--n") > 0) cfg.loop.n = opt_n;
            if (run->count("--seed") > 0) cfg.seed = opt_seed;
            if (run->count("--parallelism") > 0) cfg.parallelism = opt_parallelism;
            if (run->count("--out") > 0) cfg.out_dir = fs::absolute(opt_out).lexically_normal().string();
            print_finish(icf::execute_run(cfg, nullptr, &std::cout));
            return 0;
        }

        if (app.got_subcommand(resume)) {
            print_finish(icf::resume_run(resume_dir, nullptr, &std::cout, resume_parallelism));
            return 0;
        }

        if (app.got_subcommand(report)) {
            icf::report_run(report_dir, &std::cout);
            return 0;
        }

        if (app.got_subcommand(demo)) {
            const std::string cfg_path = icf::write_demo_bundle(demo_dir);
            std::cout << "demo bundle: " << fs::absolute(demo_dir).lexically_normal().string() << "\n";
            std::error_code ec;
            fs::remove_all(fs::path(demo_dir) / "run", ec);
            const icf::RunConfig cfg = icf::load_run_config(cfg_path);
            const icf::RunResult res = icf::execute_run(cfg, nullptr, &std::cout);
            print_finish(res);
            std::cout << "\n";
            icf::report_run(res.run_dir, &std::cout);
            return 0;
        }
    } catch (const icf::ValidationError& e) {
        std::cerr << error_prefix() << e.what() << "\n";
        for (const auto& d : e.diagnostics()) std::cerr << "  - " << d << "\n";
        return 1;
    } catch (const icf::ParseError& e) {
        std::cerr << error_prefix() << e.what() << "\n";
        return 1;
    } catch (const icf::ConfigError& e) {
        std::cerr << error_prefix() << e.what() << "\n";
        return 1;
    } catch (const icf::IoError& e) {
        std::cerr << error_prefix() << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << error_prefix() << e.what() << "\n";
        return 3;
    }
    return 0;
}
