#include "sgrl/self_imitation.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "sgrl/errors.hpp"

namespace sgrl::imitate {

using nlohmann::json;

namespace {
constexpr int kCheckpointVersion = 1;
}

SuccessBuffer::SuccessBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("buffer capacity must be positive");
}

SuccessBuffer::SuccessBuffer(SuccessBuffer&& other) noexcept : capacity_(other.capacity_) {
    std::lock_guard<std::mutex> lock(other.mutex_);
    entries_ = std::move(other.entries_);
}

void SuccessBuffer::add(VectorXd state, VectorXd action, std::uint64_t trajectory_id) {
    std::lock_guard<std::mutex> lock(mutex_);
    entries_.push_back({std::move(state), std::move(action), trajectory_id});
    while (entries_.size() > capacity_) entries_.pop_front();
}

std::size_t SuccessBuffer::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

std::vector<std::pair<VectorXd, VectorXd>> SuccessBuffer::sample(std::size_t n, Rng& rng) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<std::pair<VectorXd, VectorXd>> out;
    if (entries_.empty()) return out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Entry& e = entries_[rng.below(entries_.size())];
        out.emplace_back(e.state, e.action);
    }
    return out;
}

std::vector<SuccessBuffer::Entry> SuccessBuffer::snapshot() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return {entries_.begin(), entries_.end()};
}

void SuccessBuffer::save(const std::filesystem::path& file) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write buffer checkpoint: " + file.string());
    json header;
    header["version"] = kCheckpointVersion;
    header["capacity"] = capacity_;
    out << header.dump() << '\n';
    for (const Entry& e : entries_) {
        json j;
        j["state"] = std::vector<double>(e.state.data(), e.state.data() + e.state.size());
        j["action"] = std::vector<double>(e.action.data(), e.action.data() + e.action.size());
        j["trajectory_id"] = e.trajectory_id;
        out << j.dump() << '\n';
    }
}

SuccessBuffer SuccessBuffer::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open buffer checkpoint: " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty buffer checkpoint");
    json header = json::parse(line);
    if (header.at("version").get<int>() != kCheckpointVersion)
        throw std::runtime_error("unsupported buffer checkpoint version");
    SuccessBuffer buf(header.at("capacity").get<std::size_t>());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        auto sv = j.at("state").get<std::vector<double>>();
        auto av = j.at("action").get<std::vector<double>>();
        buf.add(Eigen::Map<const VectorXd>(sv.data(), sv.size()),
                Eigen::Map<const VectorXd>(av.data(), av.size()),
                j.at("trajectory_id").get<std::uint64_t>());
    }
    return buf;
}

void record_if_success(env::Trajectory& traj, const label::LabelDecision& decision,
                       SuccessBuffer& buf, const reward::RewardConfig& cfg) {
    if (traj.observations.empty() || traj.trace.per_step.empty())
        throw std::invalid_argument("record_if_success: incomplete trajectory");
    if (!decision.success) return;

    if (!traj.trace.bonus_applied) {
        traj.trace.per_step.back() += cfg.success_bonus;
        traj.trace.bonus_applied = true;
    }
    for (std::size_t t = 0; t < traj.actions.size(); ++t) {
        const auto& v = traj.frames[t].values;
        buf.add(Eigen::Map<const VectorXd>(v.data(), v.size()),
                Eigen::Map<const VectorXd>(traj.actions[t].data(), traj.actions[t].size()),
                traj.id);
    }
}

double regularization_loss(const train::StochasticPolicy& policy,
                           std::span<const std::pair<VectorXd, VectorXd>> batch) {
    double loss = 0.0;
    for (const auto& [s, a] : batch) {
        double lp = policy.log_prob(s, a);
        if (!std::isfinite(lp)) throw NumericError("non-finite log-probability in regularizer");
        loss -= lp;
    }
    return loss;
}

std::pair<double, VectorXd> regularization_loss_grad(
    const train::StochasticPolicy& policy,
    std::span<const std::pair<VectorXd, VectorXd>> batch) {
    VectorXd grad = VectorXd::Zero(policy.param_count());
    double loss = regularization_loss(policy, batch);
    for (const auto& [s, a] : batch) policy.add_neglogprob_grad(s, a, 1.0, grad);
    return {loss, std::move(grad)};
}

double combined_loss(double rl_loss, double reg, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
    return rl_loss + lambda * reg;
}

}  // namespace sgrl::imitate
