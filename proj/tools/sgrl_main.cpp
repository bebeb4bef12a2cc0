#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "sgrl/decompose.hpp"
#include "sgrl/errors.hpp"
#include "sgrl/experiment.hpp"
#include "sgrl/label.hpp"
#include "sgrl/version.hpp"

namespace {

// Exit codes, documented in the README: 2 usage/config, 3 missing fixture or
// record, 4 run failure, 5 parse failure.
constexpr int kExitUsage = 2;
constexpr int kExitNotFound = 3;
constexpr int kExitRunFailure = 4;
constexpr int kExitParse = 5;

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::string& fixtures_dir, std::size_t jobs) {
    auto cfg = sgrl::config::Config::parse_file(config_path);
    auto spec = sgrl::experiment::ExperimentSpec::from_config(cfg);
    sgrl::experiment::Fixtures fx{fixtures_dir};
    auto run_dir = sgrl::experiment::run(spec, out_dir, fx, jobs);
    std::cout << "run complete: " << run_dir.string() << "\n";
    return 0;
}

int cmd_summarize(const std::string& run_dir) {
    auto summary = sgrl::experiment::summarize(run_dir);
    sgrl::experiment::write_summary_files(summary, run_dir);
    std::cout << "task,method,ablation,mean_final_success,std_final_success,status\n";
    for (const auto& r : summary.rows) {
        std::cout << r.task << ',' << r.method << ',' << r.ablation << ',' << r.mean_final << ','
                  << r.std_final << ',' << (r.complete ? "complete" : "incomplete") << '\n';
    }
    if (summary.ratio_count > 0)
        std::cout << "mean improvement ratio over best baseline: " << summary.mean_ratio << " ("
                  << summary.ratio_count << " tasks)\n";
    return 0;
}

int cmd_decompose_cache(const std::string& task, const std::string& mode,
                        const std::string& fixtures_dir) {
    sgrl::experiment::Fixtures fx{fixtures_dir};
    auto cache = std::make_shared<sgrl::decompose::DecompositionCache>(fx.decomposition_cache());
    auto failures = sgrl::decompose::FailurePrompts::load(fx.failure_prompts());

    std::shared_ptr<sgrl::decompose::LlmClient> client;
    auto requested = mode == "live" ? sgrl::decompose::DecomposeMode::live
                                    : sgrl::decompose::DecomposeMode::fixture;
    if (requested == sgrl::decompose::DecomposeMode::live) {
        if (!sgrl::decompose::HttpLlmClient::configured()) {
            std::cerr << "SGRL_LLM_API_KEY not set; falling back to fixture mode\n";
            requested = sgrl::decompose::DecomposeMode::fixture;
        } else {
            client = std::make_shared<sgrl::decompose::HttpLlmClient>();
        }
    }

    std::ifstream tpl(fx.instruction_template());
    std::string instruction_template((std::istreambuf_iterator<char>(tpl)),
                                     std::istreambuf_iterator<char>());
    sgrl::decompose::Decomposer decomposer(cache, failures, instruction_template, client);
    auto dec = decomposer.decompose(task, requested);

    std::cout << "task: " << dec.task << "\n";
    for (std::size_t i = 0; i < dec.subgoals.size(); ++i)
        std::cout << "  " << (i + 1) << ". " << dec.subgoals[i] << "\n";
    if (!dec.failures.empty()) {
        std::cout << "failure prompts:\n";
        for (const auto& f : dec.failures) std::cout << "  - " << f << "\n";
    }
    return 0;
}

int cmd_label_audit(const std::string& file) {
    auto summary = sgrl::label::summarize_audit(file);
    std::cout << "decisions: " << summary.total << "\n"
              << "successes: " << summary.successes << "\n"
              << "by source: oracle=" << summary.by_source[0]
              << " oracle_noised=" << summary.by_source[1] << " vlm=" << summary.by_source[2]
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"decomposed contrastive reward laboratory"};
    app.set_version_flag("--version", sgrl::kVersion);
    app.require_subcommand(1);

    std::string config_path, out_dir = "runs", fixtures_dir = "fixtures";
    std::size_t jobs = 1;
    auto* run = app.add_subcommand("run", "run an experiment spec");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--out", out_dir, "output root directory");
    run->add_option("--fixtures", fixtures_dir, "fixtures directory");
    run->add_option("--jobs", jobs, "parallel runs");

    std::string run_dir;
    auto* summarize = app.add_subcommand("summarize", "aggregate a run directory");
    summarize->add_option("--dir", run_dir, "run directory")->required();

    std::string task, mode = "fixture";
    auto* decompose_cache =
        app.add_subcommand("decompose-cache", "show or warm a task decomposition");
    decompose_cache->add_option("--task", task, "task instruction")->required();
    decompose_cache->add_option("--mode", mode, "fixture or live")
        ->check(CLI::IsMember({"fixture", "live"}));
    decompose_cache->add_option("--fixtures", fixtures_dir, "fixtures directory");

    std::string audit_file;
    auto* label_audit = app.add_subcommand("label-audit", "summarize a label audit log");
    label_audit->add_option("--file", audit_file, "audit log (jsonl)")->required();

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(config_path, out_dir, fixtures_dir, jobs);
        if (summarize->parsed()) return cmd_summarize(run_dir);
        if (decompose_cache->parsed()) return cmd_decompose_cache(task, mode, fixtures_dir);
        if (label_audit->parsed()) return cmd_label_audit(audit_file);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitUsage : 0;
    } catch (const sgrl::NotFoundError& e) {
        std::cerr << "not found: " << e.what() << "\n";
        return kExitNotFound;
    } catch (const sgrl::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\nraw: " << e.raw << "\n";
        return kExitParse;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid arguments: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRunFailure;
    }
    return 0;
}
