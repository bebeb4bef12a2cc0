#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "sgrl/env.hpp"
#include "sgrl/label.hpp"
#include "sgrl/nn.hpp"
#include "sgrl/policy.hpp"
#include "sgrl/reward.hpp"
#include "sgrl/self_imitation.hpp"

namespace sgrl::train {

enum class LabelerMode { ground_truth, noised, vlm, none };

LabelerMode labeler_mode_from_string(const std::string& s);
std::string to_string(LabelerMode m);

struct TrainConfig {
    double gamma = 0.97;
    double lambda_reg = 1.0;
    std::size_t total_env_steps = 200000;
    std::size_t eval_episodes = 20;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    reward::RewardConfig reward;
    LabelerMode labeler = LabelerMode::ground_truth;
    double labeler_error_rate = 0.0;
    bool no_selfimitation = false;
    bool no_failure_guidance = false;
    bool no_cot = false;

    // learner internals
    std::size_t batch_size = 64;
    std::size_t update_every = 2;
    std::size_t warmup_steps = 3000;
    std::size_t replay_capacity = 100000;
    std::size_t success_capacity = 50000;
    std::size_t n_step = 5;
    double actor_lr = 1e-3;
    double critic_lr = 1e-3;
    double polyak = 0.01;
    std::size_t eval_interval = 4000;
    std::vector<int> hidden{64, 64};
    double init_std = 0.3;
    // Behavior-noise schedule: linear decay from start to end over the first
    // explore_decay_frac of the budget.
    double explore_std_start = 0.6;
    double explore_std_end = 0.15;
    double explore_decay_frac = 0.7;

    void validate() const;
};

struct Transition {
    Eigen::VectorXd state;
    Eigen::VectorXd action;
    double reward = 0.0;       // n-step discounted sum
    Eigen::VectorXd next_state;
    double bootstrap = 0.0;    // gamma^n, or 0 past the episode end
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);
    void push(Transition t);
    std::size_t size() const { return data_.size(); }
    std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> data_;
};

// Action provider for rollouts: the learned policy, an exploration source or
// the scripted expert all fit behind it.
class ActionSource {
public:
    virtual ~ActionSource() = default;
    virtual env::Action act(const env::EnvState& state, const Eigen::VectorXd& features) = 0;
};

// Behavior policy: mean action plus autocorrelated exploration noise. The
// correlation keeps displacement directions stable for a handful of steps,
// which covers the arena far faster than white noise; the noise state resets
// at each episode start.
class PolicySampler final : public ActionSource {
public:
    PolicySampler(const GaussianMlpPolicy& policy, Rng& rng, double rho = 0.85)
        : policy_(policy), rng_(rng), rho_(rho) {}
    env::Action act(const env::EnvState& state, const Eigen::VectorXd& features) override;

    // Overrides the policy's own std for exploration; negative restores it.
    void set_noise_std(double std) { noise_std_ = std; }

private:
    const GaussianMlpPolicy& policy_;
    Rng& rng_;
    double rho_;
    double noise_std_ = -1.0;
    Eigen::VectorXd noise_;
};

// Unlearned exploration: hold a uniformly drawn action for a random number
// of steps, then redraw. Ballistic segments reach every part of the arena
// within an episode, unlike a per-step random walk.
class SegmentedRandomSource final : public ActionSource {
public:
    explicit SegmentedRandomSource(Rng& rng) : rng_(rng) {}
    env::Action act(const env::EnvState&, const Eigen::VectorXd&) override;

private:
    Rng& rng_;
    env::Action held_{0, 0, 0};
    int steps_left_ = 0;
};

class PolicyMean final : public ActionSource {
public:
    explicit PolicyMean(const GaussianMlpPolicy& policy) : policy_(policy) {}
    env::Action act(const env::EnvState&, const Eigen::VectorXd& features) override;

private:
    const GaussianMlpPolicy& policy_;
};

class ExpertSource final : public ActionSource {
public:
    explicit ExpertSource(env::TaskSpec spec) : spec_(std::move(spec)) {}
    env::Action act(const env::EnvState& state, const Eigen::VectorXd&) override;

private:
    env::TaskSpec spec_;
};

// One full episode from a seeded reset, reward trace attached by the
// configured rewarder. Ground truth never reaches the trace; only frames do.
env::Trajectory collect_rollout(env::Env& env, ActionSource& source,
                                const reward::PromptSet& prompts, const reward::RewardConfig& cfg,
                                const embed::Encoder& encoder, std::uint64_t episode_seed,
                                std::uint64_t trajectory_id);

// Fraction of episodes whose terminal state satisfies the ground-truth
// success predicate. Evaluation is the one training-adjacent consumer allowed
// to read it.
double evaluate(env::Env& env, ActionSource& source, std::size_t episodes,
                std::uint64_t seed_base);

struct UpdateLosses {
    double critic = 0.0;   // TD mean-squared error
    double actor_rl = 0.0; // -mean Q(s, mu(s))
    double reg = 0.0;      // mean -log pi over the success batch
    double total = 0.0;    // actor_rl + lambda * reg
};

// Off-policy actor-critic with target networks: one critic TD step and one
// actor step (Q-gradient plus the self-imitation regularizer) per update.
class Learner {
public:
    Learner(int state_dim, int action_dim, const TrainConfig& cfg, Rng& rng);

    UpdateLosses update(const std::vector<const Transition*>& batch,
                        std::span<const std::pair<Eigen::VectorXd, Eigen::VectorXd>> reg_batch);

    GaussianMlpPolicy& policy() { return policy_; }
    const GaussianMlpPolicy& policy() const { return policy_; }
    nn::Mlp& critic() { return critic_; }

private:
    TrainConfig cfg_;
    GaussianMlpPolicy policy_;
    nn::Mlp critic_;
    nn::Mlp target_mu_;
    nn::Mlp target_critic_;
    nn::Adam actor_opt_;
    nn::Adam critic_opt_;
    std::size_t updates_ = 0;
};

struct RunOutput {
    double final_success = 0.0;
    std::size_t env_steps = 0;
    std::size_t episodes = 0;
    std::size_t labeler_positives = 0;
};

// Full training run for one (task, seed): collect, label, self-imitate,
// update, evaluate on a cadence, and stream metrics rows to `metrics`.
// `vlm_client` is only consulted in LabelerMode::vlm; unparseable responses
// leave the trajectory unlabeled rather than failed.
RunOutput train_one(env::Env& train_env, env::Env& eval_env, std::uint64_t seed,
                    const TrainConfig& cfg, const reward::PromptSet& prompts,
                    const embed::Encoder& encoder, std::ostream& metrics,
                    label::VlmClient* vlm_client = nullptr);

// Context prompt and image payload for VLM labeling of a terminal frame.
std::string vlm_context_prompt(const env::TaskSpec& task);
std::string vlm_image_payload(const embed::FrameFeature& frame);

}  // namespace sgrl::train
