#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "sgrl/env.hpp"
#include "sgrl/label.hpp"
#include "sgrl/policy.hpp"
#include "sgrl/reward.hpp"

namespace sgrl::imitate {

using Eigen::VectorXd;

// Bounded FIFO store of (state, action) pairs harvested from trajectories
// labeled successful, with per-pair provenance. Single writer, concurrent
// readers; each call holds the lock for its duration.
class SuccessBuffer {
public:
    struct Entry {
        VectorXd state;
        VectorXd action;
        std::uint64_t trajectory_id = 0;
    };

    explicit SuccessBuffer(std::size_t capacity = 50000);
    SuccessBuffer(SuccessBuffer&& other) noexcept;
    SuccessBuffer& operator=(SuccessBuffer&&) = delete;

    void add(VectorXd state, VectorXd action, std::uint64_t trajectory_id);
    std::size_t size() const;
    std::size_t capacity() const { return capacity_; }
    std::vector<std::pair<VectorXd, VectorXd>> sample(std::size_t n, Rng& rng) const;
    std::vector<Entry> snapshot() const;  // provenance audits

    // Versioned snapshot, one JSON record per pair.
    void save(const std::filesystem::path& file) const;
    static SuccessBuffer load(const std::filesystem::path& file);

private:
    std::size_t capacity_;
    std::deque<Entry> entries_;
    mutable std::mutex mutex_;
};

// On a successful label: every (state, action) pair of the trajectory enters
// the buffer and the final per-step reward gains cfg.success_bonus, applied
// at most once per trajectory. Failure labels change nothing.
void record_if_success(env::Trajectory& traj, const label::LabelDecision& decision,
                       SuccessBuffer& buf, const reward::RewardConfig& cfg);

// Sum over the batch of -log pi(a|s); empty batch gives 0. Throws
// NumericError on a non-finite log-probability.
double regularization_loss(const train::StochasticPolicy& policy,
                           std::span<const std::pair<VectorXd, VectorXd>> batch);

// Loss together with its gradient in the policy's flat parameter layout.
std::pair<double, VectorXd> regularization_loss_grad(
    const train::StochasticPolicy& policy,
    std::span<const std::pair<VectorXd, VectorXd>> batch);

// rl_loss + lambda * reg. lambda must be >= 0.
double combined_loss(double rl_loss, double reg, double lambda);

}  // namespace sgrl::imitate
