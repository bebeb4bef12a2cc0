#include "sgrl/policy.hpp"

#include <cmath>

namespace sgrl::train {

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * ln(2*pi)
}

GaussianMlpPolicy::GaussianMlpPolicy(int state_dim, int action_dim,
                                     const std::vector<int>& hidden, Rng& rng, double init_std)
    : action_dim_(action_dim) {
    std::vector<int> sizes{state_dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(action_dim);
    mu_ = nn::Mlp(sizes, rng, /*tanh_output=*/true);
    log_std_ = VectorXd::Constant(action_dim, std::log(init_std));
}

VectorXd GaussianMlpPolicy::mean_action(const VectorXd& state) const {
    return mu_.forward(state);
}

VectorXd GaussianMlpPolicy::sample(const VectorXd& state, Rng& rng) const {
    VectorXd a = mean_action(state);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        a[i] += std::exp(log_std_[i]) * rng.normal();
        a[i] = std::clamp(a[i], -1.0, 1.0);
    }
    return a;
}

double GaussianMlpPolicy::log_prob(const VectorXd& state, const VectorXd& action) const {
    VectorXd m = mean_action(state);
    double lp = 0.0;
    for (Eigen::Index i = 0; i < action.size(); ++i) {
        double sigma = std::exp(log_std_[i]);
        double z = (action[i] - m[i]) / sigma;
        lp += -0.5 * z * z - log_std_[i] - kHalfLog2Pi;
    }
    return lp;
}

Eigen::Index GaussianMlpPolicy::param_count() const {
    return mu_.param_count() + log_std_.size();
}

VectorXd GaussianMlpPolicy::params() const {
    VectorXd p(param_count());
    p.head(mu_.param_count()) = mu_.flatten();
    p.tail(log_std_.size()) = log_std_;
    return p;
}

void GaussianMlpPolicy::set_params(const VectorXd& p) {
    mu_.unflatten(p.head(mu_.param_count()));
    log_std_ = p.tail(log_std_.size());
}

void GaussianMlpPolicy::add_neglogprob_grad(const VectorXd& state, const VectorXd& action,
                                            double weight, VectorXd& grad) const {
    nn::Mlp::Tape tape;
    VectorXd m = mu_.forward(state, tape);

    // -log pi = sum_i 0.5 z_i^2 + log sigma_i + const, z_i = (a_i - mu_i)/sigma_i
    VectorXd dmu(action_dim_);
    for (int i = 0; i < action_dim_; ++i) {
        double sigma = std::exp(log_std_[i]);
        double z = (action[i] - m[i]) / sigma;
        dmu[i] = -z / sigma;                       // d(-log pi)/d mu_i
        grad[mu_.param_count() + i] += weight * (1.0 - z * z);  // d/d log_std_i
    }

    nn::Mlp g = nn::Mlp::zeros_like(mu_);
    mu_.backward(tape, dmu, g);
    grad.head(mu_.param_count()) += weight * g.flatten();
}

void GaussianMlpPolicy::clamp_log_std(double lo, double hi) {
    for (Eigen::Index i = 0; i < log_std_.size(); ++i)
        log_std_[i] = std::clamp(log_std_[i], lo, hi);
}

}  // namespace sgrl::train
