#include "sgrl/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "sgrl/errors.hpp"

namespace sgrl::train {

using Eigen::MatrixXd;
using Eigen::VectorXd;

LabelerMode labeler_mode_from_string(const std::string& s) {
    if (s == "ground_truth") return LabelerMode::ground_truth;
    if (s == "noised") return LabelerMode::noised;
    if (s == "vlm") return LabelerMode::vlm;
    if (s == "none") return LabelerMode::none;
    throw std::invalid_argument("unknown labeler mode: " + s);
}

std::string to_string(LabelerMode m) {
    switch (m) {
        case LabelerMode::ground_truth: return "ground_truth";
        case LabelerMode::noised: return "noised";
        case LabelerMode::vlm: return "vlm";
        case LabelerMode::none: return "none";
    }
    throw std::logic_error("unreachable");
}

void TrainConfig::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
    if (lambda_reg < 0.0) throw std::invalid_argument("lambda_reg must be non-negative");
    if (eval_episodes < 1) throw std::invalid_argument("eval_episodes must be >= 1");
    if (labeler == LabelerMode::noised &&
        (labeler_error_rate < 0.0 || labeler_error_rate >= 0.5))
        throw std::invalid_argument("labeler_error_rate must lie in [0, 0.5)");
    if (batch_size == 0 || n_step == 0 || update_every == 0)
        throw std::invalid_argument("batch_size, n_step and update_every must be positive");
    reward.validate();
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("replay capacity must be positive");
    data_.reserve(std::min<std::size_t>(capacity_, 4096));
}

void ReplayBuffer::push(Transition t) {
    if (data_.size() < capacity_) {
        data_.push_back(std::move(t));
    } else {
        data_[next_] = std::move(t);
        next_ = (next_ + 1) % capacity_;
    }
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    std::vector<const Transition*> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(&data_[rng.below(data_.size())]);
    return out;
}

env::Action PolicySampler::act(const env::EnvState& state, const VectorXd& features) {
    if (noise_std_ < 0.0) {
        VectorXd a = policy_.sample(features, rng_);
        return {a[0], a[1], a[2]};
    }
    if (noise_.size() != policy_.action_dim() || state.steps == 0)
        noise_ = VectorXd::Zero(policy_.action_dim());
    double fresh = std::sqrt(1.0 - rho_ * rho_);
    for (Eigen::Index i = 0; i < noise_.size(); ++i)
        noise_[i] = rho_ * noise_[i] + fresh * rng_.normal();
    VectorXd a = policy_.mean_action(features);
    for (Eigen::Index i = 0; i < a.size(); ++i)
        a[i] = std::clamp(a[i] + noise_std_ * noise_[i], -1.0, 1.0);
    return {a[0], a[1], a[2]};
}

env::Action SegmentedRandomSource::act(const env::EnvState&, const Eigen::VectorXd&) {
    if (steps_left_ <= 0) {
        held_ = {rng_.uniform(-1.0, 1.0), rng_.uniform(-1.0, 1.0), 0.0};
        steps_left_ = 8 + static_cast<int>(rng_.below(17));  // 8..24 steps
    }
    --steps_left_;
    // The heading is ballistic but the grip is re-drawn every step.
    return {held_.x(), held_.y(), rng_.uniform(-1.0, 1.0)};
}

env::Action PolicyMean::act(const env::EnvState&, const VectorXd& features) {
    VectorXd a = policy_.mean_action(features);
    return {a[0], a[1], a[2]};
}

env::Action ExpertSource::act(const env::EnvState& state, const VectorXd&) {
    return env::expert_action(spec_, state);
}

namespace {

VectorXd frame_vector(const embed::FrameFeature& f) {
    return Eigen::Map<const VectorXd>(f.values.data(), f.values.size());
}

}  // namespace

env::Trajectory collect_rollout(env::Env& e, ActionSource& source,
                                const reward::PromptSet& prompts, const reward::RewardConfig& cfg,
                                const embed::Encoder& encoder, std::uint64_t episode_seed,
                                std::uint64_t trajectory_id) {
    env::Trajectory traj;
    traj.id = trajectory_id;
    traj.task = e.task().id;

    traj.observations.push_back(e.reset(episode_seed));
    traj.frames.push_back(e.current_frame());

    bool done = false;
    while (!done) {
        const env::EnvState& s = traj.observations.back();
        env::Action a = source.act(s, frame_vector(traj.frames.back()));
        env::StepResult r = e.step(a);
        traj.actions.push_back(a);
        traj.observations.push_back(r.state);
        traj.frames.push_back(r.frame);
        done = r.done;
    }

    switch (cfg.mode) {
        case reward::RewardMode::decomposed:
            traj.trace = reward::window_rewards(traj.frames, prompts, cfg, encoder);
            break;
        case reward::RewardMode::single_prompt: {
            traj.trace.per_step.resize(traj.frames.size());
            for (std::size_t t = 0; t < traj.frames.size(); ++t) {
                double v = reward::single_prompt_reward(traj.frames[t], prompts, encoder);
                traj.trace.per_step[t] = v;
                traj.trace.window_scores.emplace_back(t, v);
            }
            break;
        }
        case reward::RewardMode::final_segment:
            traj.trace = reward::final_segment_reward(traj.frames, prompts, encoder);
            break;
    }
    return traj;
}

double evaluate(env::Env& e, ActionSource& source, std::size_t episodes,
                std::uint64_t seed_base) {
    if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
    std::size_t successes = 0;
    for (std::size_t k = 0; k < episodes; ++k) {
        env::EnvState s = e.reset(seed_base + k);
        bool done = false;
        while (!done) {
            env::Action a = source.act(s, frame_vector(e.current_frame()));
            env::StepResult r = e.step(a);
            s = r.state;
            done = r.done;
        }
        if (e.success(s)) ++successes;
    }
    return static_cast<double>(successes) / static_cast<double>(episodes);
}

Learner::Learner(int state_dim, int action_dim, const TrainConfig& cfg, Rng& rng)
    : cfg_(cfg),
      policy_(state_dim, action_dim, cfg.hidden, rng, cfg.init_std),
      actor_opt_(0, cfg.actor_lr),
      critic_opt_(0, cfg.critic_lr) {
    std::vector<int> critic_sizes{state_dim + action_dim};
    critic_sizes.insert(critic_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    critic_sizes.push_back(1);
    critic_ = nn::Mlp(critic_sizes, rng, /*tanh_output=*/false);
    target_mu_ = policy_.mu();
    target_critic_ = critic_;
    actor_opt_ = nn::Adam(policy_.param_count(), cfg.actor_lr);
    critic_opt_ = nn::Adam(critic_.param_count(), cfg.critic_lr);
}

UpdateLosses Learner::update(
    const std::vector<const Transition*>& batch,
    std::span<const std::pair<VectorXd, VectorXd>> reg_batch) {
    if (batch.empty()) throw std::invalid_argument("update: empty batch");

    const auto B = static_cast<Eigen::Index>(batch.size());
    const int sdim = critic_.input_dim() - policy_.action_dim();
    const int adim = policy_.action_dim();

    MatrixXd S(sdim, B), S2(sdim, B), A(adim, B);
    VectorXd R(B), boot(B);
    for (Eigen::Index i = 0; i < B; ++i) {
        S.col(i) = batch[i]->state;
        S2.col(i) = batch[i]->next_state;
        A.col(i) = batch[i]->action;
        R[i] = batch[i]->reward;
        boot[i] = batch[i]->bootstrap;
    }

    // Critic TD step against the target networks.
    MatrixXd A2 = target_mu_.forward(S2);
    MatrixXd X2(sdim + adim, B);
    X2.topRows(sdim) = S2;
    X2.bottomRows(adim) = A2;
    VectorXd q2 = target_critic_.forward(X2).row(0);
    VectorXd y = R + boot.cwiseProduct(q2);

    MatrixXd X(sdim + adim, B);
    X.topRows(sdim) = S;
    X.bottomRows(adim) = A;
    nn::Mlp::Tape q_tape;
    VectorXd q = critic_.forward(X, q_tape).row(0);
    VectorXd err = q - y;
    double critic_loss = err.squaredNorm() / static_cast<double>(B);

    nn::Mlp critic_grads = nn::Mlp::zeros_like(critic_);
    MatrixXd dq = (2.0 / static_cast<double>(B)) * err.transpose();
    critic_.backward(q_tape, dq, critic_grads);
    VectorXd critic_flat = critic_.flatten();
    critic_opt_.step(critic_flat, critic_grads.flatten());
    critic_.unflatten(critic_flat);

    // Actor step: ascend Q(s, mu(s)), descend the regularizer.
    nn::Mlp::Tape mu_tape;
    MatrixXd A_pi = policy_.mu().forward(S, mu_tape);
    MatrixXd X_pi(sdim + adim, B);
    X_pi.topRows(sdim) = S;
    X_pi.bottomRows(adim) = A_pi;
    nn::Mlp::Tape qpi_tape;
    VectorXd q_pi = critic_.forward(X_pi, qpi_tape).row(0);
    double actor_rl = -q_pi.mean();

    nn::Mlp scratch = nn::Mlp::zeros_like(critic_);
    MatrixXd dqpi = MatrixXd::Constant(1, B, -1.0 / static_cast<double>(B));
    MatrixXd dx = critic_.backward(qpi_tape, dqpi, scratch);
    MatrixXd dA = dx.bottomRows(adim);

    nn::Mlp mu_grads = nn::Mlp::zeros_like(policy_.mu());
    policy_.mu().backward(mu_tape, dA, mu_grads);

    VectorXd actor_grad = VectorXd::Zero(policy_.param_count());
    actor_grad.head(policy_.mu().param_count()) = mu_grads.flatten();

    double lambda = cfg_.no_selfimitation ? 0.0 : cfg_.lambda_reg;
    double reg_mean = 0.0;
    if (lambda > 0.0 && !reg_batch.empty()) {
        auto [reg_sum, reg_grad] = imitate::regularization_loss_grad(policy_, reg_batch);
        reg_mean = reg_sum / static_cast<double>(reg_batch.size());
        actor_grad += (lambda / static_cast<double>(reg_batch.size())) * reg_grad;
    }

    VectorXd policy_flat = policy_.params();
    actor_opt_.step(policy_flat, actor_grad);
    policy_.set_params(policy_flat);
    policy_.clamp_log_std(std::log(0.05), std::log(0.8));

    // Polyak averaging toward the live networks.
    VectorXd tmu = target_mu_.flatten();
    tmu += cfg_.polyak * (policy_.mu().flatten() - tmu);
    target_mu_.unflatten(tmu);
    VectorXd tq = target_critic_.flatten();
    tq += cfg_.polyak * (critic_.flatten() - tq);
    target_critic_.unflatten(tq);

    ++updates_;

    UpdateLosses losses;
    losses.critic = critic_loss;
    losses.actor_rl = actor_rl;
    losses.reg = reg_mean;
    losses.total = imitate::combined_loss(actor_rl, reg_mean, lambda);
    if (!std::isfinite(losses.critic) || !std::isfinite(losses.total)) {
        std::ostringstream diag;
        diag << "non-finite loss at update " << updates_ << ": critic=" << losses.critic
             << " actor=" << losses.actor_rl << " reg=" << losses.reg;
        throw NumericError(diag.str());
    }
    return losses;
}

namespace {

void push_nstep(ReplayBuffer& replay, const env::Trajectory& traj, const TrainConfig& cfg) {
    const std::size_t T = traj.actions.size();
    for (std::size_t t = 0; t < T; ++t) {
        std::size_t end = std::min(t + cfg.n_step, T);
        double r = 0.0, g = 1.0;
        for (std::size_t k = t; k < end; ++k) {
            r += g * traj.trace.per_step[k + 1];
            g *= cfg.gamma;
        }
        Transition tr;
        tr.state = frame_vector(traj.frames[t]);
        tr.action = Eigen::Map<const VectorXd>(traj.actions[t].data(), 3);
        tr.reward = r;
        tr.next_state = frame_vector(traj.frames[end]);
        tr.bootstrap = (end == T) ? 0.0 : g;
        replay.push(std::move(tr));
    }
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string vlm_context_prompt(const env::TaskSpec& task) {
    return "This image shows the final state of a simulated manipulation scene. "
           "The task was: " + task.instruction + ". When the image shows the task "
           "completed, the output is 1. Otherwise, the output is 0.";
}

std::string vlm_image_payload(const embed::FrameFeature& frame) {
    std::ostringstream payload;
    payload << "features:";
    for (double v : frame.values) payload << ' ' << v;
    payload << " events:";
    for (const auto& tag : frame.event_tags) payload << ' ' << tag;
    return payload.str();
}

RunOutput train_one(env::Env& train_env, env::Env& eval_env, std::uint64_t seed,
                    const TrainConfig& cfg, const reward::PromptSet& prompts,
                    const embed::Encoder& encoder, std::ostream& metrics,
                    label::VlmClient* vlm_client) {
    cfg.validate();
    if (cfg.labeler == LabelerMode::vlm && vlm_client == nullptr)
        throw std::invalid_argument("LabelerMode::vlm requires a client");

    Rng init_rng(seed, "init");
    Rng explore_rng(seed, "explore");
    Rng labeler_rng(seed, "labeler");
    Rng replay_rng(seed, "replay");
    Rng regbatch_rng(seed, "regbatch");
    Rng episode_seeds(seed, "episodes");
    Rng eval_seeds(seed, "eval-seeds");

    const int sdim = static_cast<int>(env::feature_dim());
    Learner learner(sdim, 3, cfg, init_rng);
    ReplayBuffer replay(cfg.replay_capacity);
    imitate::SuccessBuffer success_buffer(cfg.success_capacity);

    PolicySampler behavior(learner.policy(), explore_rng);
    SegmentedRandomSource warmup_source(explore_rng);
    PolicyMean greedy(learner.policy());

    const bool self_imitation =
        !cfg.no_selfimitation && cfg.labeler != LabelerMode::none;

    metrics << "env_steps,eval_success_rate,rl_loss,reg_loss,buffer_size,labeler_positives\n";

    RunOutput out;
    std::uint64_t next_traj_id = 1;
    std::size_t next_eval = cfg.eval_interval;
    double loss_sum = 0.0, reg_sum = 0.0;
    std::size_t loss_count = 0;
    std::size_t update_debt = 0;

    auto write_row = [&](double success_rate) {
        double rl = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
        double rg = loss_count ? reg_sum / static_cast<double>(loss_count) : 0.0;
        metrics << out.env_steps << ',' << fmt_double(success_rate) << ',' << fmt_double(rl)
                << ',' << fmt_double(rg) << ',' << success_buffer.size() << ','
                << out.labeler_positives << '\n';
        loss_sum = reg_sum = 0.0;
        loss_count = 0;
    };

    double last_eval = 0.0;
    while (out.env_steps < cfg.total_env_steps) {
        double frac = static_cast<double>(out.env_steps) /
                      std::max(1.0, cfg.explore_decay_frac *
                                        static_cast<double>(cfg.total_env_steps));
        behavior.set_noise_std(cfg.explore_std_start +
                               std::min(1.0, frac) * (cfg.explore_std_end - cfg.explore_std_start));
        ActionSource& source =
            (out.env_steps < cfg.warmup_steps) ? static_cast<ActionSource&>(warmup_source)
                                               : static_cast<ActionSource&>(behavior);
        env::Trajectory traj = collect_rollout(train_env, source, prompts, cfg.reward,
                                               encoder, episode_seeds.bits(), next_traj_id++);
        ++out.episodes;

        if (self_imitation) {
            std::optional<label::LabelDecision> decision;
            switch (cfg.labeler) {
                case LabelerMode::ground_truth:
                    decision = label::label_oracle(train_env.success(traj.terminal()), 0.0,
                                                   labeler_rng);
                    break;
                case LabelerMode::noised:
                    decision = label::label_oracle(train_env.success(traj.terminal()),
                                                   cfg.labeler_error_rate, labeler_rng);
                    break;
                case LabelerMode::vlm:
                    try {
                        decision = label::label_vlm(vlm_image_payload(traj.frames.back()),
                                                    vlm_context_prompt(train_env.task()),
                                                    label::kLabelQuery, *vlm_client);
                    } catch (const ParseError&) {
                        decision.reset();  // unlabeled, skipped by self-imitation
                    }
                    break;
                case LabelerMode::none: break;
            }
            if (decision) {
                if (decision->success) ++out.labeler_positives;
                imitate::record_if_success(traj, *decision, success_buffer, cfg.reward);
            }
        }

        push_nstep(replay, traj, cfg);
        out.env_steps += traj.length();
        update_debt += traj.length();

        if (out.env_steps >= cfg.warmup_steps && replay.size() >= cfg.batch_size) {
            while (update_debt >= cfg.update_every) {
                update_debt -= cfg.update_every;
                auto batch = replay.sample(cfg.batch_size, replay_rng);
                std::vector<std::pair<VectorXd, VectorXd>> reg_batch;
                if (self_imitation && cfg.lambda_reg > 0.0 && success_buffer.size() > 0)
                    reg_batch = success_buffer.sample(cfg.batch_size, regbatch_rng);
                UpdateLosses losses = learner.update(batch, reg_batch);
                loss_sum += losses.critic;
                reg_sum += losses.reg;
                ++loss_count;
            }
        }

        while (out.env_steps >= next_eval && next_eval < cfg.total_env_steps) {
            last_eval = evaluate(eval_env, greedy, cfg.eval_episodes, eval_seeds.bits());
            write_row(last_eval);
            next_eval += cfg.eval_interval;
        }
    }

    // Final evaluation at the end of the budget.
    last_eval = evaluate(eval_env, greedy, cfg.eval_episodes, eval_seeds.bits());
    write_row(last_eval);
    out.final_success = last_eval;
    return out;
}

}  // namespace sgrl::train
