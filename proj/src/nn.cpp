#include "sgrl/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace sgrl::nn {

Mlp::Mlp(const std::vector<int>& sizes, Rng& rng, bool tanh_out) : tanh_output(tanh_out) {
    if (sizes.size() < 2) throw std::invalid_argument("mlp needs at least input and output sizes");
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        MatrixXd w(sizes[l + 1], sizes[l]);
        double scale = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
        if (l + 2 == sizes.size()) scale *= 0.1;  // small final layer
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = scale * rng.normal();
        weights.push_back(std::move(w));
        biases.push_back(VectorXd::Zero(sizes[l + 1]));
    }
}

MatrixXd Mlp::forward(const MatrixXd& x) const {
    Tape tape;
    return forward(x, tape);
}

MatrixXd Mlp::forward(const MatrixXd& x, Tape& tape) const {
    tape.acts.clear();
    tape.acts.push_back(x);
    MatrixXd h = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        MatrixXd z = (weights[l] * h).colwise() + biases[l];
        bool last = (l + 1 == weights.size());
        h = (!last || tanh_output) ? z.array().tanh().matrix() : z;
        tape.acts.push_back(h);
    }
    return h;
}

MatrixXd Mlp::backward(const Tape& tape, const MatrixXd& dy, Mlp& grads) const {
    MatrixXd delta = dy;
    for (std::size_t l = weights.size(); l-- > 0;) {
        bool last = (l + 1 == weights.size());
        if (!last || tanh_output) {
            // d tanh(z) = 1 - tanh(z)^2, with tanh(z) on the tape
            delta = delta.cwiseProduct(
                (1.0 - tape.acts[l + 1].array().square()).matrix());
        }
        grads.weights[l] += delta * tape.acts[l].transpose();
        grads.biases[l] += delta.rowwise().sum();
        delta = weights[l].transpose() * delta;
    }
    return delta;
}

Eigen::Index Mlp::param_count() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

VectorXd Mlp::flatten() const {
    VectorXd flat(param_count());
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        flat.segment(at, weights[l].size()) =
            Eigen::Map<const VectorXd>(weights[l].data(), weights[l].size());
        at += weights[l].size();
        flat.segment(at, biases[l].size()) = biases[l];
        at += biases[l].size();
    }
    return flat;
}

void Mlp::unflatten(const VectorXd& flat) {
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        Eigen::Map<VectorXd>(weights[l].data(), weights[l].size()) =
            flat.segment(at, weights[l].size());
        at += weights[l].size();
        biases[l] = flat.segment(at, biases[l].size());
        at += biases[l].size();
    }
    if (at != flat.size()) throw std::invalid_argument("parameter vector size mismatch");
}

void Mlp::set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
}

Mlp Mlp::zeros_like(const Mlp& other) {
    Mlp z = other;
    z.set_zero();
    return z;
}

Adam::Adam(Eigen::Index n, double lr_) : lr(lr_), m_(VectorXd::Zero(n)), v_(VectorXd::Zero(n)) {}

void Adam::step(VectorXd& params, const VectorXd& grad) {
    ++t_;
    m_ = beta1 * m_ + (1.0 - beta1) * grad;
    v_ = beta2 * v_ + (1.0 - beta2) * grad.cwiseProduct(grad);
    double bc1 = 1.0 - std::pow(beta1, t_);
    double bc2 = 1.0 - std::pow(beta2, t_);
    params -= (lr / bc1) * m_.cwiseQuotient(((v_ / bc2).cwiseSqrt().array() + eps).matrix());
}

}  // namespace sgrl::nn
