#pragma once

#include <Eigen/Core>

#include "sgrl/nn.hpp"
#include "sgrl/rng.hpp"

namespace sgrl::train {

using Eigen::VectorXd;

// Stochastic policy with evaluable log-probability — the only contract the
// self-imitation regularizer needs.
class StochasticPolicy {
public:
    virtual ~StochasticPolicy() = default;

    virtual double log_prob(const VectorXd& state, const VectorXd& action) const = 0;

    virtual Eigen::Index param_count() const = 0;
    virtual VectorXd params() const = 0;
    virtual void set_params(const VectorXd& p) = 0;

    // Accumulates weight * d(-log pi(a|s))/dtheta into grad.
    virtual void add_neglogprob_grad(const VectorXd& state, const VectorXd& action,
                                     double weight, VectorXd& grad) const = 0;
};

// Diagonal Gaussian over box actions: mean from a tanh-output MLP, one
// learnable log-std per action dimension. Sampled actions clip to [-1, 1];
// log-probabilities refer to the unclipped Gaussian.
class GaussianMlpPolicy final : public StochasticPolicy {
public:
    GaussianMlpPolicy(int state_dim, int action_dim, const std::vector<int>& hidden, Rng& rng,
                      double init_std = 0.3);

    VectorXd mean_action(const VectorXd& state) const;
    VectorXd sample(const VectorXd& state, Rng& rng) const;

    double log_prob(const VectorXd& state, const VectorXd& action) const override;
    Eigen::Index param_count() const override;
    VectorXd params() const override;          // [mu params..., log_std]
    void set_params(const VectorXd& p) override;
    void add_neglogprob_grad(const VectorXd& state, const VectorXd& action, double weight,
                             VectorXd& grad) const override;

    nn::Mlp& mu() { return mu_; }
    const nn::Mlp& mu() const { return mu_; }
    const VectorXd& log_std() const { return log_std_; }
    void clamp_log_std(double lo, double hi);
    int action_dim() const { return action_dim_; }

private:
    nn::Mlp mu_;
    VectorXd log_std_;
    int action_dim_;
};

}  // namespace sgrl::train
