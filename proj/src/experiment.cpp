#include "sgrl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "sgrl/errors.hpp"
#include "sgrl/version.hpp"

namespace sgrl::experiment {

namespace fs = std::filesystem;

Ablation Ablation::parse(const std::string& token) {
    Ablation a;
    a.token = token;
    if (token == "none") a.kind = Kind::none;
    else if (token == "no_selfimitation") a.kind = Kind::no_selfimitation;
    else if (token == "no_failure_guidance") a.kind = Kind::no_failure_guidance;
    else if (token == "no_cot") a.kind = Kind::no_cot;
    else if (token == "baselines_with_selfimitation") a.kind = Kind::baselines_with_selfimitation;
    else if (token.rfind("labeler_noise:", 0) == 0) {
        a.kind = Kind::labeler_noise;
        a.noise = std::stod(token.substr(14));
        if (a.noise < 0.0 || a.noise >= 0.5)
            throw std::invalid_argument("labeler_noise rate must lie in [0, 0.5): " + token);
    } else {
        throw std::invalid_argument("unknown ablation: " + token);
    }
    return a;
}

std::string Ablation::file_token() const {
    std::string t = token;
    std::replace(t.begin(), t.end(), ':', '_');
    return t;
}

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "name", "tasks", "methods", "ablations", "seeds", "budget",
        "eval_episodes", "eval_interval", "gamma", "lambda", "tau", "window",
        "stride", "success_bonus", "labeler", "labeler_error_rate",
        "batch_size", "update_every", "warmup_steps", "replay_capacity",
        "success_capacity", "n_step", "actor_lr", "critic_lr", "polyak",
        "hidden", "init_std"};
    return keys;
}

}  // namespace

ExperimentSpec ExperimentSpec::from_config(const config::Config& cfg) {
    cfg.require_known_keys(known_keys());

    ExperimentSpec spec;
    spec.name = cfg.get_string("name");
    spec.tasks = cfg.get_list("tasks");
    for (const auto& m : cfg.get_list("methods"))
        spec.methods.push_back(reward::reward_mode_from_string(m));

    auto ablation_tokens = cfg.get_list("ablations");
    if (!ablation_tokens.empty()) {
        spec.ablations.clear();
        for (const auto& t : ablation_tokens) spec.ablations.push_back(Ablation::parse(t));
    }

    auto seed_tokens = cfg.get_list("seeds");
    if (!seed_tokens.empty()) {
        spec.base.seeds.clear();
        for (const auto& s : seed_tokens)
            spec.base.seeds.push_back(static_cast<std::uint64_t>(std::stoull(s)));
    }

    train::TrainConfig& b = spec.base;
    b.total_env_steps = static_cast<std::size_t>(cfg.get_int("budget", b.total_env_steps));
    b.eval_episodes = static_cast<std::size_t>(cfg.get_int("eval_episodes", b.eval_episodes));
    b.eval_interval = static_cast<std::size_t>(cfg.get_int("eval_interval", b.eval_interval));
    b.gamma = cfg.get_double("gamma", b.gamma);
    b.lambda_reg = cfg.get_double("lambda", b.lambda_reg);
    b.reward.tau = cfg.get_double("tau", b.reward.tau);
    b.reward.window = static_cast<std::size_t>(cfg.get_int("window", b.reward.window));
    b.reward.stride = static_cast<std::size_t>(cfg.get_int("stride", b.reward.stride));
    b.reward.success_bonus = cfg.get_double("success_bonus", b.reward.success_bonus);
    b.labeler = train::labeler_mode_from_string(cfg.get_string("labeler", "ground_truth"));
    b.labeler_error_rate = cfg.get_double("labeler_error_rate", b.labeler_error_rate);
    b.batch_size = static_cast<std::size_t>(cfg.get_int("batch_size", b.batch_size));
    b.update_every = static_cast<std::size_t>(cfg.get_int("update_every", b.update_every));
    b.warmup_steps = static_cast<std::size_t>(cfg.get_int("warmup_steps", b.warmup_steps));
    b.replay_capacity = static_cast<std::size_t>(cfg.get_int("replay_capacity", b.replay_capacity));
    b.success_capacity =
        static_cast<std::size_t>(cfg.get_int("success_capacity", b.success_capacity));
    b.n_step = static_cast<std::size_t>(cfg.get_int("n_step", b.n_step));
    b.actor_lr = cfg.get_double("actor_lr", b.actor_lr);
    b.critic_lr = cfg.get_double("critic_lr", b.critic_lr);
    b.polyak = cfg.get_double("polyak", b.polyak);
    b.init_std = cfg.get_double("init_std", b.init_std);
    auto hidden = cfg.get_list("hidden");
    if (!hidden.empty()) {
        b.hidden.clear();
        for (const auto& h : hidden) b.hidden.push_back(std::stoi(h));
    }

    spec.validate();
    return spec;
}

config::Config ExperimentSpec::to_config() const {
    config::Config cfg;
    cfg.set("name", name);
    auto join = [](const auto& items, auto render) {
        std::string out;
        for (const auto& it : items) {
            if (!out.empty()) out += ",";
            out += render(it);
        }
        return out;
    };
    cfg.set("tasks", join(tasks, [](const std::string& s) { return s; }));
    cfg.set("methods", join(methods, [](reward::RewardMode m) { return reward::to_string(m); }));
    cfg.set("ablations", join(ablations, [](const Ablation& a) { return a.token; }));
    cfg.set("seeds", join(base.seeds, [](std::uint64_t s) { return std::to_string(s); }));
    cfg.set("budget", std::to_string(base.total_env_steps));
    cfg.set("eval_episodes", std::to_string(base.eval_episodes));
    cfg.set("eval_interval", std::to_string(base.eval_interval));
    auto num = [](double v) {
        std::ostringstream ss;
        ss.precision(17);
        ss << v;
        return ss.str();
    };
    cfg.set("gamma", num(base.gamma));
    cfg.set("lambda", num(base.lambda_reg));
    cfg.set("tau", num(base.reward.tau));
    cfg.set("window", std::to_string(base.reward.window));
    cfg.set("stride", std::to_string(base.reward.stride));
    cfg.set("success_bonus", num(base.reward.success_bonus));
    cfg.set("labeler", train::to_string(base.labeler));
    cfg.set("labeler_error_rate", num(base.labeler_error_rate));
    cfg.set("batch_size", std::to_string(base.batch_size));
    cfg.set("update_every", std::to_string(base.update_every));
    cfg.set("warmup_steps", std::to_string(base.warmup_steps));
    cfg.set("replay_capacity", std::to_string(base.replay_capacity));
    cfg.set("success_capacity", std::to_string(base.success_capacity));
    cfg.set("n_step", std::to_string(base.n_step));
    cfg.set("actor_lr", num(base.actor_lr));
    cfg.set("critic_lr", num(base.critic_lr));
    cfg.set("polyak", num(base.polyak));
    cfg.set("hidden", join(base.hidden, [](int h) { return std::to_string(h); }));
    cfg.set("init_std", num(base.init_std));
    return cfg;
}

void ExperimentSpec::validate() const {
    if (name.empty()) throw std::invalid_argument("experiment name must not be empty");
    if (tasks.empty()) throw std::invalid_argument("experiment needs at least one task");
    if (methods.empty()) throw std::invalid_argument("experiment needs at least one method");
    if (ablations.empty()) throw std::invalid_argument("ablation list must not be empty");
    if (base.seeds.empty()) throw std::invalid_argument("experiment needs at least one seed");
    for (const auto& t : tasks) env::task_spec(t);  // NotFoundError on unknown ids
    base.validate();
}

std::string RunCase::csv_name() const {
    return task + "__" + reward::to_string(method) + "__" + ablation.file_token() + "__seed" +
           std::to_string(seed) + ".csv";
}

std::vector<RunCase> enumerate_cases(const ExperimentSpec& spec) {
    std::vector<RunCase> cases;
    for (const auto& task : spec.tasks)
        for (const auto& method : spec.methods)
            for (const auto& ablation : spec.ablations)
                for (auto seed : spec.base.seeds) cases.push_back({task, method, ablation, seed});
    return cases;
}

void check_fixtures(const Fixtures& fx, const std::vector<std::string>& tasks) {
    for (const auto& p : {fx.prompt_table(), fx.decomposition_cache(), fx.failure_prompts(),
                          fx.instruction_template()}) {
        if (!fs::exists(p)) throw NotFoundError("missing fixture file: " + p.string());
    }
    decompose::DecompositionCache cache(fx.decomposition_cache());
    for (const auto& t : tasks) {
        const auto& spec = env::task_spec(t);
        if (!cache.lookup(spec.instruction))
            throw NotFoundError("no cached decomposition for task instruction: " +
                                spec.instruction);
    }
}

train::TrainConfig case_train_config(const RunCase& c, const ExperimentSpec& spec) {
    train::TrainConfig cfg = spec.base;
    cfg.reward.mode = c.method;

    // The baseline reward modes run without the self-imitation procedure
    // unless the ablation grants it to them.
    bool is_baseline = c.method != reward::RewardMode::decomposed;
    if (is_baseline && c.ablation.kind != Ablation::Kind::baselines_with_selfimitation)
        cfg.no_selfimitation = true;

    switch (c.ablation.kind) {
        case Ablation::Kind::none: break;
        case Ablation::Kind::no_selfimitation: cfg.no_selfimitation = true; break;
        case Ablation::Kind::no_failure_guidance: cfg.no_failure_guidance = true; break;
        case Ablation::Kind::no_cot: cfg.no_cot = true; break;
        case Ablation::Kind::labeler_noise:
            cfg.labeler = train::LabelerMode::noised;
            cfg.labeler_error_rate = c.ablation.noise;
            break;
        case Ablation::Kind::baselines_with_selfimitation: break;
    }
    return cfg;
}

reward::PromptSet case_prompt_set(const RunCase& c, const embed::Encoder& encoder,
                                  decompose::Decomposer& decomposer) {
    const auto& task = env::task_spec(c.task);
    auto dec = decomposer.decompose(task.instruction, decompose::DecomposeMode::fixture);
    if (c.ablation.kind == Ablation::Kind::no_failure_guidance) dec.failures.clear();
    if (c.ablation.kind == Ablation::Kind::no_cot) dec.subgoals = {task.instruction};
    return decompose::build_prompt_set(dec, encoder, task.instruction);
}

std::filesystem::path run(const ExperimentSpec& spec, const std::filesystem::path& out_root,
                          const Fixtures& fx, std::size_t jobs) {
    spec.validate();
    check_fixtures(fx, spec.tasks);

    fs::path run_dir = out_root / spec.name;
    fs::create_directories(run_dir / "metrics");

    {
        std::ofstream cfg_out(run_dir / "config.resolved");
        cfg_out << spec.to_config().serialize();
        std::ofstream meta(run_dir / "meta.txt");
        meta << "version = " << kVersion << "\n";
    }

    auto table = embed::PromptTable::load(fx.prompt_table());
    embed::SyntheticEncoder encoder(std::move(table));
    auto cache = std::make_shared<decompose::DecompositionCache>(fx.decomposition_cache());
    auto failures = decompose::FailurePrompts::load(fx.failure_prompts());
    decompose::Decomposer decomposer(cache, failures, "");

    std::vector<RunCase> cases = enumerate_cases(spec);
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= cases.size()) return;
            const RunCase& c = cases[i];
            try {
                train::TrainConfig cfg = case_train_config(c, spec);
                reward::PromptSet prompts = case_prompt_set(c, encoder, decomposer);
                auto train_env = env::make_env(c.task);
                auto eval_env = env::make_env(c.task);
                std::ofstream csv(run_dir / "metrics" / c.csv_name(), std::ios::trunc);
                train::train_one(*train_env, *eval_env, c.seed, cfg, prompts, encoder, csv);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    std::size_t n_workers = std::max<std::size_t>(1, std::min(jobs, cases.size()));
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);

    write_summary_files(summarize(run_dir), run_dir);
    return run_dir;
}

double final_success_from_csv(const std::filesystem::path& csv) {
    std::ifstream in(csv);
    if (!in) throw NotFoundError("missing metrics csv: " + csv.string());
    std::string line, last;
    std::getline(in, line);  // header
    while (std::getline(in, line))
        if (!line.empty()) last = line;
    if (last.empty()) throw ParseError("metrics csv has no data rows", csv.string());
    auto first_comma = last.find(',');
    auto second_comma = last.find(',', first_comma + 1);
    return std::stod(last.substr(first_comma + 1, second_comma - first_comma - 1));
}

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sample_std_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

Summary summarize(const std::filesystem::path& run_dir) {
    auto cfg = config::Config::parse_file(run_dir / "config.resolved");
    ExperimentSpec spec = ExperimentSpec::from_config(cfg);

    Summary summary;
    // Group by (task, method, ablation); seeds fill each group.
    for (const auto& task : spec.tasks) {
        for (const auto& method : spec.methods) {
            for (const auto& ablation : spec.ablations) {
                SummaryRow row;
                row.task = task;
                row.method = reward::to_string(method);
                row.ablation = ablation.token;
                row.seeds_expected = spec.base.seeds.size();
                std::vector<double> finals;
                for (auto seed : spec.base.seeds) {
                    RunCase c{task, method, ablation, seed};
                    fs::path csv = run_dir / "metrics" / c.csv_name();
                    if (!fs::exists(csv)) continue;
                    try {
                        finals.push_back(final_success_from_csv(csv));
                    } catch (const ParseError&) {
                        // counted as missing
                    }
                }
                row.seeds_found = finals.size();
                row.complete = row.seeds_found == row.seeds_expected;
                row.mean_final = mean_of(finals);
                row.std_final = sample_std_of(finals);
                summary.rows.push_back(std::move(row));
            }
        }
    }

    // Improvement of the decomposed reward over the best baseline, ablation
    // "none" rows only; tasks whose baselines never succeed have no defined
    // ratio and are excluded from the mean.
    bool has_ours = false, has_baseline = false;
    for (const auto& m : spec.methods) {
        if (m == reward::RewardMode::decomposed) has_ours = true;
        else has_baseline = true;
    }
    if (has_ours && has_baseline) {
        std::vector<double> ratios;
        for (const auto& task : spec.tasks) {
            ImprovementRow imp;
            imp.task = task;
            double best = -1.0;
            for (const auto& row : summary.rows) {
                if (row.task != task || row.ablation != "none") continue;
                if (row.method == "decomposed") imp.ours = row.mean_final;
                else best = std::max(best, row.mean_final);
            }
            imp.best_baseline = std::max(best, 0.0);
            if (imp.best_baseline > 0.0) {
                imp.ratio = imp.ours / imp.best_baseline;
                imp.defined = true;
                ratios.push_back(imp.ratio);
            }
            summary.improvements.push_back(imp);
        }
        summary.mean_ratio = mean_of(ratios);
        summary.ratio_count = ratios.size();
    }
    return summary;
}

void write_summary_files(const Summary& summary, const std::filesystem::path& run_dir) {
    std::ofstream out(run_dir / "summary.csv", std::ios::trunc);
    out << "task,method,ablation,seeds_expected,seeds_found,mean_final_success,"
           "std_final_success,status\n";
    out.precision(17);
    for (const auto& r : summary.rows) {
        out << r.task << ',' << r.method << ',' << r.ablation << ',' << r.seeds_expected << ','
            << r.seeds_found << ',' << r.mean_final << ',' << r.std_final << ','
            << (r.complete ? "complete" : "incomplete") << '\n';
    }

    if (!summary.improvements.empty()) {
        std::ofstream imp(run_dir / "improvement.csv", std::ios::trunc);
        imp.precision(17);
        imp << "task,ours_mean,best_baseline_mean,ratio\n";
        for (const auto& r : summary.improvements) {
            imp << r.task << ',' << r.ours << ',' << r.best_baseline << ',';
            if (r.defined) imp << r.ratio;
            else imp << "undefined";
            imp << '\n';
        }
        imp << "(mean of " << summary.ratio_count << " defined task ratios),,," << summary.mean_ratio
            << '\n';
    }
}

}  // namespace sgrl::experiment
