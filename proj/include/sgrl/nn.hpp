#pragma once

#include <Eigen/Core>
#include <vector>

#include "sgrl/rng.hpp"

namespace sgrl::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Small dense net: tanh hidden layers, linear (or tanh) output. Batches are
// column-major: one sample per column.
class Mlp {
public:
    Mlp() = default;
    // sizes = {in, hidden..., out}. Weights ~ N(0, 1/sqrt(fan_in)), final
    // layer scaled down so outputs start near zero.
    Mlp(const std::vector<int>& sizes, Rng& rng, bool tanh_output = false);

    struct Tape {
        std::vector<MatrixXd> acts;  // acts[0] = input, acts[i] = layer i output
    };

    MatrixXd forward(const MatrixXd& x) const;
    MatrixXd forward(const MatrixXd& x, Tape& tape) const;
    // Backpropagates dL/dy, accumulating parameter gradients into `grads`
    // (same shape net, zero-initialized by caller); returns dL/dx.
    MatrixXd backward(const Tape& tape, const MatrixXd& dy, Mlp& grads) const;

    Eigen::Index param_count() const;
    VectorXd flatten() const;
    void unflatten(const VectorXd& flat);
    void set_zero();
    static Mlp zeros_like(const Mlp& other);

    int input_dim() const { return static_cast<int>(weights.front().cols()); }
    int output_dim() const { return static_cast<int>(weights.back().rows()); }

    std::vector<MatrixXd> weights;
    std::vector<VectorXd> biases;
    bool tanh_output = false;
};

// Adam over a flat parameter vector.
class Adam {
public:
    Adam(Eigen::Index n, double lr);
    void step(VectorXd& params, const VectorXd& grad);

    double lr;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

private:
    VectorXd m_, v_;
    int t_ = 0;
};

}  // namespace sgrl::nn
