#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "sgrl/embedding.hpp"
#include "sgrl/reward.hpp"

namespace sgrl::env {

using Vec2 = Eigen::Vector2d;
using Action = Eigen::Vector3d;  // (dx, dy, grip), each in [-1, 1]

// World constants shared by the whole suite.
constexpr double kStepCap = 0.05;        // max displacement per axis per step
constexpr int kHorizon = 200;
constexpr double kGrabRadius = 0.10;     // grasp / contact distance
constexpr double kApproachRadius = 0.15; // "near the object" event distance
constexpr double kGoalRadius = 0.08;     // ball-in-goal distance
constexpr double kPressRate = 0.12;      // button depression per contact step
constexpr double kDragGain = 1.0;        // rail travel per unit of gripper motion
constexpr double kSpringFrac = 0.10;     // per-step relaxation toward the rest pose

enum class Mechanism {
    pull_grasp,    // 1-DOF rail, must be grasped to move (open tasks)
    push_contact,  // 1-DOF rail, moves on contact without grip (close tasks)
    press,         // depression accumulates while in contact
    ball,          // free object carried by contact toward a goal region
};

struct TaskSpec {
    std::string id;
    std::string instruction;   // the coarse prompt
    Mechanism mechanism = Mechanism::pull_grasp;

    Vec2 rest_lo{0, 0}, rest_hi{0, 0};  // object rest-position sampling box
    Vec2 dir{1, 0};                     // rail travel direction (value grows along dir)
    double travel = 0.3;                // max object value
    double success_at = 0.24;           // >= for opening tasks, <= for closing
    double start_lo = 0.0, start_hi = 0.0;  // initial value range (closing tasks)
    Vec2 goal{0.85, 0.5};               // ball task target

    // Canonical event names; empty slots are skipped for the task.
    std::string ev_approach, ev_engage, ev_advance, ev_goal;
    std::string ev_wrongway, ev_release;
};

struct EnvState {
    Vec2 gripper{0.1, 0.1};
    Vec2 velocity{0, 0};          // displacement of the previous step
    bool gripper_closed = false;
    bool attached = false;        // rail tasks: handle currently held
    double object_value = 0.0;    // rail progress / button depression
    double start_value = 0.0;     // episode-start pose the mechanism relaxes to
    Vec2 object_pos{0, 0};        // handle, button or ball position
    Vec2 object_rest{0, 0};       // rail origin (fixed after reset)
    int steps = 0;
};

struct StepResult {
    EnvState state;
    embed::FrameFeature frame;
    std::vector<std::string> events;
    bool done = false;
};

std::size_t feature_dim();

class Env {
public:
    virtual ~Env() = default;
    virtual const TaskSpec& task() const = 0;
    // Deterministic per (task, seed); object start pose sampled within the
    // task's declared bounds.
    virtual EnvState reset(std::uint64_t seed) = 0;
    // Kinematic update; out-of-range action components are clipped. done
    // when the success predicate holds or the horizon is reached.
    virtual StepResult step(const Action& action) = 0;
    // Pure predicate of the state. Training code must never call this; it
    // exists for evaluation and the labeling oracle.
    virtual bool success(const EnvState& s) const = 0;
    virtual const EnvState& state() const = 0;
    virtual const embed::FrameFeature& current_frame() const = 0;
};

class ToyEnv final : public Env {
public:
    explicit ToyEnv(TaskSpec spec);

    const TaskSpec& task() const override { return spec_; }
    EnvState reset(std::uint64_t seed) override;
    StepResult step(const Action& action) override;
    bool success(const EnvState& s) const override;
    const EnvState& state() const override { return state_; }
    const embed::FrameFeature& current_frame() const override { return frame_; }

private:
    embed::FrameFeature make_frame(const EnvState& s,
                                   const std::vector<std::string>& events) const;
    std::vector<std::string> stage_events(const EnvState& s, double value_delta,
                                          bool released) const;

    TaskSpec spec_;
    EnvState state_;
    embed::FrameFeature frame_;
};

// Registered task ids, and their specs.
std::vector<std::string> registered_tasks();
const TaskSpec& task_spec(const std::string& id);          // NotFoundError on unknown id
std::unique_ptr<Env> make_env(const std::string& id);      // NotFoundError on unknown id

// Full episode: o_0..o_T, actions, frames aligned 1:1 with observations.
struct Trajectory {
    std::uint64_t id = 0;
    std::string task;
    std::vector<EnvState> observations;
    std::vector<Action> actions;
    std::vector<embed::FrameFeature> frames;
    reward::RewardTrace trace;

    std::size_t length() const { return actions.size(); }
    const EnvState& terminal() const { return observations.back(); }
};

// Deterministic hand-coded controller that solves its task well inside the
// horizon; used for smoke properties and as an evaluation upper bound.
Action expert_action(const TaskSpec& spec, const EnvState& s);

// Line-delimited trajectory dump for replay and labeling audits.
void dump_trajectory(const Trajectory& traj, const std::filesystem::path& file);

}  // namespace sgrl::env
