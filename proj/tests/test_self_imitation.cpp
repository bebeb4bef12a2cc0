#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "sgrl/errors.hpp"
#include "sgrl/self_imitation.hpp"

using namespace sgrl;
using namespace sgrl::imitate;
using Eigen::VectorXd;

namespace {

// Minimal 1-d Gaussian policy with two parameters: mean and log-std. The
// finite-difference oracle for the analytic regularizer gradient runs here.
struct TwoParamGaussian final : train::StochasticPolicy {
    double mu = 0.2;
    double log_std = -0.5;

    double log_prob(const VectorXd&, const VectorXd& action) const override {
        double sigma = std::exp(log_std);
        double z = (action[0] - mu) / sigma;
        return -0.5 * z * z - log_std - 0.9189385332046727;
    }
    Eigen::Index param_count() const override { return 2; }
    VectorXd params() const override {
        VectorXd p(2);
        p << mu, log_std;
        return p;
    }
    void set_params(const VectorXd& p) override {
        mu = p[0];
        log_std = p[1];
    }
    void add_neglogprob_grad(const VectorXd&, const VectorXd& action, double weight,
                             VectorXd& grad) const override {
        double sigma = std::exp(log_std);
        double z = (action[0] - mu) / sigma;
        grad[0] += weight * (-z / sigma);
        grad[1] += weight * (1.0 - z * z);
    }
};

struct ConstantLogProbPolicy final : train::StochasticPolicy {
    double lp;
    explicit ConstantLogProbPolicy(double v) : lp(v) {}
    double log_prob(const VectorXd&, const VectorXd&) const override { return lp; }
    Eigen::Index param_count() const override { return 0; }
    VectorXd params() const override { return VectorXd(0); }
    void set_params(const VectorXd&) override {}
    void add_neglogprob_grad(const VectorXd&, const VectorXd&, double, VectorXd&) const override {}
};

env::Trajectory make_trajectory(std::uint64_t id, std::size_t steps, double terminal_reward) {
    env::Trajectory traj;
    traj.id = id;
    traj.task = "door-open";
    for (std::size_t t = 0; t <= steps; ++t) {
        traj.observations.push_back(env::EnvState{});
        embed::FrameFeature f;
        f.values = {static_cast<double>(id), static_cast<double>(t)};
        traj.frames.push_back(f);
        if (t < steps) traj.actions.push_back(env::Action{0.1, 0.2, 0.3});
    }
    traj.trace.per_step.assign(steps + 1, 0.0);
    traj.trace.per_step.back() = terminal_reward;
    return traj;
}

std::vector<std::pair<VectorXd, VectorXd>> one_d_batch(std::vector<double> actions) {
    std::vector<std::pair<VectorXd, VectorXd>> batch;
    for (double a : actions) {
        VectorXd s(1), act(1);
        s << 0.0;
        act << a;
        batch.emplace_back(s, act);
    }
    return batch;
}

}  // namespace

TEST_CASE("failure labels leave the buffer and trajectory untouched") {
    SuccessBuffer buf(100);
    auto traj = make_trajectory(1, 5, 0.8);
    label::LabelDecision no;
    no.success = false;
    record_if_success(traj, no, buf, reward::RewardConfig{});
    CHECK(buf.size() == 0);
    CHECK(traj.trace.per_step.back() == 0.8);
    CHECK_FALSE(traj.trace.bonus_applied);
}

TEST_CASE("success labels add the bonus exactly once and record all pairs") {
    SuccessBuffer buf(100);
    auto traj = make_trajectory(7, 5, 0.8);
    label::LabelDecision yes;
    yes.success = true;
    reward::RewardConfig cfg;  // success_bonus = 100.0

    record_if_success(traj, yes, buf, cfg);
    CHECK(traj.trace.per_step.back() == doctest::Approx(100.8));
    CHECK(buf.size() == 5);

    // A second call must not stack another bonus; pairs may be re-added.
    record_if_success(traj, yes, buf, cfg);
    CHECK(traj.trace.per_step.back() == doctest::Approx(100.8));
}

TEST_CASE("buffer keeps the most recent pairs under FIFO eviction") {
    SuccessBuffer buf(10);
    auto traj = make_trajectory(3, 12, 1.0);
    label::LabelDecision yes;
    yes.success = true;
    record_if_success(traj, yes, buf, reward::RewardConfig{});
    REQUIRE(buf.size() == 10);
    auto entries = buf.snapshot();
    // 12 pairs recorded, first two evicted: timestamps 2..11 remain.
    CHECK(entries.front().state[1] == doctest::Approx(2.0));
    CHECK(entries.back().state[1] == doctest::Approx(11.0));
}

TEST_CASE("buffer provenance never contains pairs from failed trajectories") {
    SuccessBuffer buf(4096);
    Rng rng(99, "fuzz");
    std::set<std::uint64_t> failed;
    for (std::uint64_t id = 1; id <= 200; ++id) {
        auto traj = make_trajectory(id, 1 + rng.below(8), 0.5);
        label::LabelDecision d;
        d.success = rng.uniform() < 0.5;
        if (!d.success) failed.insert(id);
        record_if_success(traj, d, buf, reward::RewardConfig{});
    }
    for (const auto& e : buf.snapshot()) CHECK(failed.count(e.trajectory_id) == 0);
}

TEST_CASE("regularization loss: empty batch, analytic value, sum linearity") {
    ConstantLogProbPolicy half(std::log(0.5));
    CHECK(regularization_loss(half, {}) == 0.0);

    auto batch1 = one_d_batch({0.0});
    CHECK(regularization_loss(half, batch1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    auto batch2 = one_d_batch({0.0, 0.0});
    CHECK(regularization_loss(half, batch2) ==
          doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("non-finite log-probabilities raise NumericError") {
    ConstantLogProbPolicy bad(std::numeric_limits<double>::quiet_NaN());
    auto batch = one_d_batch({0.0});
    CHECK_THROWS_AS(regularization_loss(bad, batch), NumericError);
}

TEST_CASE("combined loss is rl + lambda * reg") {
    CHECK(combined_loss(2.0, 0.5, 1.0) == 2.5);
    CHECK(combined_loss(3.25, 17.0, 0.0) == 3.25);
    CHECK_THROWS_AS(combined_loss(1.0, 1.0, -0.1), std::invalid_argument);
}

TEST_CASE("analytic regularizer gradient matches central finite differences") {
    TwoParamGaussian policy;
    auto batch = one_d_batch({0.7, -0.3, 0.1, 0.9});

    auto [loss, grad] = regularization_loss_grad(policy, batch);
    REQUIRE(grad.size() == 2);

    const double h = 1e-6;
    VectorXd base = policy.params();
    for (int i = 0; i < 2; ++i) {
        VectorXd up = base, down = base;
        up[i] += h;
        down[i] -= h;
        policy.set_params(up);
        double lu = regularization_loss(policy, batch);
        policy.set_params(down);
        double ld = regularization_loss(policy, batch);
        policy.set_params(base);
        double fd = (lu - ld) / (2.0 * h);
        CHECK(std::abs(grad[i] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
}

TEST_CASE("one small regularizer step increases the batch log-likelihood") {
    TwoParamGaussian policy;
    auto batch = one_d_batch({0.7, 0.65, 0.8});

    double before = 0.0;
    for (const auto& [s, a] : batch) before += policy.log_prob(s, a);

    auto [loss, grad] = regularization_loss_grad(policy, batch);
    policy.set_params(policy.params() - 1e-3 * grad);

    double after = 0.0;
    for (const auto& [s, a] : batch) after += policy.log_prob(s, a);
    CHECK(after > before);
}

TEST_CASE("buffer checkpoints round-trip") {
    SuccessBuffer buf(50);
    auto traj = make_trajectory(11, 4, 1.0);
    label::LabelDecision yes;
    yes.success = true;
    record_if_success(traj, yes, buf, reward::RewardConfig{});

    auto path = std::filesystem::temp_directory_path() / "sgrl_buffer_ckpt.jsonl";
    buf.save(path);
    auto loaded = SuccessBuffer::load(path);
    REQUIRE(loaded.size() == buf.size());
    CHECK(loaded.capacity() == buf.capacity());
    auto a = buf.snapshot();
    auto b = loaded.snapshot();
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].trajectory_id == b[i].trajectory_id);
        CHECK(a[i].state == b[i].state);
        CHECK(a[i].action == b[i].action);
    }
    std::filesystem::remove(path);
}

TEST_CASE("sampling from an empty buffer yields nothing; otherwise n pairs") {
    SuccessBuffer buf(10);
    Rng rng(5, "sample");
    CHECK(buf.sample(8, rng).empty());
    buf.add(VectorXd::Zero(2), VectorXd::Zero(3), 1);
    CHECK(buf.sample(8, rng).size() == 8);  // with replacement
}
