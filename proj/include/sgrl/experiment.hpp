#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sgrl/config.hpp"
#include "sgrl/decompose.hpp"
#include "sgrl/encoder.hpp"
#include "sgrl/trainer.hpp"

namespace sgrl::experiment {

// One ablation token. Each token maps to exactly one training-setup
// mutation; "none" is the identity.
struct Ablation {
    enum class Kind {
        none,
        no_selfimitation,
        no_failure_guidance,
        no_cot,
        labeler_noise,               // "labeler_noise:<rate>"
        baselines_with_selfimitation
    };
    Kind kind = Kind::none;
    double noise = 0.0;
    std::string token = "none";

    static Ablation parse(const std::string& token);
    std::string file_token() const;  // filesystem-safe form
};

struct ExperimentSpec {
    std::string name;
    std::vector<std::string> tasks;
    std::vector<reward::RewardMode> methods;
    std::vector<Ablation> ablations{Ablation{}};
    train::TrainConfig base;

    static ExperimentSpec from_config(const config::Config& cfg);
    config::Config to_config() const;
    void validate() const;
};

struct RunCase {
    std::string task;
    reward::RewardMode method;
    Ablation ablation;
    std::uint64_t seed = 0;

    std::string csv_name() const;
};

std::vector<RunCase> enumerate_cases(const ExperimentSpec& spec);

// Fixture file locations, resolvable from one directory.
struct Fixtures {
    std::filesystem::path dir;
    std::filesystem::path prompt_table() const { return dir / "prompts.tsv"; }
    std::filesystem::path decomposition_cache() const { return dir / "decompositions.jsonl"; }
    std::filesystem::path failure_prompts() const { return dir / "failures.tsv"; }
    std::filesystem::path instruction_template() const { return dir / "decompose_template.txt"; }
};

// Fails fast (NotFoundError) when a fixture file or a task's cached
// decomposition is missing — before any training starts.
void check_fixtures(const Fixtures& fx, const std::vector<std::string>& tasks);

// Per-case training configuration and prompt set, with the ablation and
// method defaults applied (baselines run without self-imitation unless the
// ablation grants it).
train::TrainConfig case_train_config(const RunCase& c, const ExperimentSpec& spec);
reward::PromptSet case_prompt_set(const RunCase& c, const embed::Encoder& encoder,
                                  decompose::Decomposer& decomposer);

// Runs every case of the spec into <out_root>/<spec.name>/, one metrics CSV
// per case plus the resolved config, then writes the summary. Cases may run
// in parallel worker threads; each case is single-threaded and deterministic.
std::filesystem::path run(const ExperimentSpec& spec, const std::filesystem::path& out_root,
                          const Fixtures& fx, std::size_t jobs = 1);

struct SummaryRow {
    std::string task;
    std::string method;
    std::string ablation;
    std::size_t seeds_expected = 0;
    std::size_t seeds_found = 0;
    double mean_final = 0.0;
    double std_final = 0.0;
    bool complete = false;
};

struct ImprovementRow {
    std::string task;
    double ours = 0.0;
    double best_baseline = 0.0;
    double ratio = 0.0;
    bool defined = false;  // false when the best baseline never succeeds
};

struct Summary {
    std::vector<SummaryRow> rows;
    std::vector<ImprovementRow> improvements;
    double mean_ratio = 0.0;      // over defined per-task ratios
    std::size_t ratio_count = 0;
};

// Deterministic aggregation over the run directory's CSVs; incomplete runs
// are marked, never dropped. Re-running rewrites identical summary files.
Summary summarize(const std::filesystem::path& run_dir);
void write_summary_files(const Summary& summary, const std::filesystem::path& run_dir);

// Final eval_success_rate of one metrics CSV (last data row).
double final_success_from_csv(const std::filesystem::path& csv);

double mean_of(const std::vector<double>& xs);
double sample_std_of(const std::vector<double>& xs);

}  // namespace sgrl::experiment
