#include "sgrl/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "sgrl/errors.hpp"
#include "sgrl/rng.hpp"

namespace sgrl::env {

namespace {

constexpr double kValueTol = 1e-9;

TaskSpec rail_task(const char* id, const char* instruction, Mechanism mech, Vec2 lo, Vec2 hi,
                   Vec2 dir, double travel, const char* approach, const char* engage,
                   const char* open_ev, const char* shut_ev, const char* opened,
                   const char* closed, const char* released) {
    TaskSpec t;
    t.id = id;
    t.instruction = instruction;
    t.mechanism = mech;
    t.rest_lo = lo;
    t.rest_hi = hi;
    t.dir = dir.normalized();
    t.travel = travel;
    t.ev_approach = approach;
    if (mech == Mechanism::pull_grasp) {
        // Opening: grasp required, value grows along dir.
        t.success_at = 0.8 * travel;
        t.ev_engage = engage;
        t.ev_advance = open_ev;
        t.ev_wrongway = shut_ev;
        t.ev_goal = opened;
        t.ev_release = released;
    } else {
        // Closing: starts partly open, contact push, no grip needed.
        t.success_at = 0.1 * travel;
        t.start_lo = 0.65 * travel;
        t.start_hi = 0.95 * travel;
        t.ev_advance = shut_ev;
        t.ev_wrongway = open_ev;
        t.ev_goal = closed;
    }
    return t;
}

std::vector<TaskSpec> build_suite() {
    std::vector<TaskSpec> suite;

    suite.push_back(rail_task("door-open", "open the door", Mechanism::pull_grasp,
                              {0.55, 0.35}, {0.75, 0.65}, {-1, 0}, 0.40,
                              "approach-door-handle", "grasp-door-handle", "pull-door-open",
                              "push-door-shut", "door-open", "door-closed",
                              "door-handle-released"));
    suite.push_back(rail_task("door-close", "close the door", Mechanism::push_contact,
                              {0.55, 0.35}, {0.75, 0.65}, {-1, 0}, 0.40,
                              "approach-door-handle", "grasp-door-handle", "pull-door-open",
                              "push-door-shut", "door-open", "door-closed",
                              "door-handle-released"));
    suite.push_back(rail_task("drawer-open", "open the drawer", Mechanism::pull_grasp,
                              {0.35, 0.60}, {0.65, 0.80}, {0, -1}, 0.40,
                              "approach-drawer-handle", "grasp-drawer-handle",
                              "pull-drawer-open", "push-drawer-shut", "drawer-open",
                              "drawer-closed", "drawer-handle-released"));
    suite.push_back(rail_task("drawer-close", "close the drawer", Mechanism::push_contact,
                              {0.35, 0.60}, {0.65, 0.80}, {0, -1}, 0.40,
                              "approach-drawer-handle", "grasp-drawer-handle",
                              "pull-drawer-open", "push-drawer-shut", "drawer-open",
                              "drawer-closed", "drawer-handle-released"));
    suite.push_back(rail_task("window-open", "open the window", Mechanism::pull_grasp,
                              {0.30, 0.35}, {0.50, 0.65}, {1, 0}, 0.40,
                              "approach-window-handle", "grasp-window-handle",
                              "slide-window-open", "slide-window-shut", "window-open",
                              "window-closed", "window-handle-released"));
    suite.push_back(rail_task("window-close", "close the window", Mechanism::push_contact,
                              {0.30, 0.35}, {0.50, 0.65}, {1, 0}, 0.40,
                              "approach-window-handle", "grasp-window-handle",
                              "slide-window-open", "slide-window-shut", "window-open",
                              "window-closed", "window-handle-released"));
    suite.push_back(rail_task("faucet-open", "open the faucet", Mechanism::pull_grasp,
                              {0.45, 0.30}, {0.70, 0.60}, {0, 1}, 0.30,
                              "approach-faucet-handle", "grasp-faucet-handle",
                              "turn-faucet-open", "turn-faucet-shut", "faucet-open",
                              "faucet-closed", "faucet-handle-released"));

    {
        TaskSpec t;
        t.id = "button-press";
        t.instruction = "press the button";
        t.mechanism = Mechanism::press;
        t.rest_lo = {0.35, 0.35};
        t.rest_hi = {0.70, 0.70};
        t.travel = 1.0;
        t.success_at = 0.9;
        t.ev_approach = "approach-button";
        t.ev_advance = "press-button";
        t.ev_goal = "button-pressed";
        suite.push_back(t);
    }
    {
        TaskSpec t;
        t.id = "ball-to-goal";
        t.instruction = "push the ball into the goal";
        t.mechanism = Mechanism::ball;
        t.rest_lo = {0.30, 0.30};
        t.rest_hi = {0.50, 0.70};
        t.goal = {0.85, 0.5};
        t.ev_approach = "approach-ball";
        t.ev_advance = "push-ball-to-goal";
        t.ev_wrongway = "push-ball-away";
        t.ev_goal = "ball-in-goal";
        suite.push_back(t);
    }
    return suite;
}

const std::vector<TaskSpec>& suite() {
    static const std::vector<TaskSpec> s = build_suite();
    return s;
}

Vec2 clamp_arena(Vec2 p) {
    return {std::clamp(p.x(), 0.0, 1.0), std::clamp(p.y(), 0.0, 1.0)};
}

}  // namespace

std::size_t feature_dim() { return 12; }

std::vector<std::string> registered_tasks() {
    std::vector<std::string> ids;
    for (const auto& t : suite()) ids.push_back(t.id);
    return ids;
}

const TaskSpec& task_spec(const std::string& id) {
    for (const auto& t : suite())
        if (t.id == id) return t;
    throw NotFoundError("unknown task: " + id);
}

std::unique_ptr<Env> make_env(const std::string& id) {
    return std::make_unique<ToyEnv>(task_spec(id));
}

ToyEnv::ToyEnv(TaskSpec spec) : spec_(std::move(spec)) { reset(0); }

EnvState ToyEnv::reset(std::uint64_t seed) {
    Rng rng(seed ^ fnv1a(spec_.id), "env-reset");
    EnvState s;
    s.gripper = {0.1, 0.1};
    s.velocity = {0, 0};
    s.object_rest = {rng.uniform(spec_.rest_lo.x(), spec_.rest_hi.x()),
                     rng.uniform(spec_.rest_lo.y(), spec_.rest_hi.y())};
    if (spec_.mechanism == Mechanism::push_contact)
        s.object_value = rng.uniform(spec_.start_lo, spec_.start_hi);
    s.start_value = s.object_value;
    if (spec_.mechanism == Mechanism::ball)
        s.object_pos = s.object_rest;
    else
        s.object_pos = s.object_rest + s.object_value * spec_.dir;
    state_ = s;
    frame_ = make_frame(state_, stage_events(state_, 0.0, false));
    return state_;
}

StepResult ToyEnv::step(const Action& action) {
    EnvState s = state_;
    Action a = action.cwiseMax(-1.0).cwiseMin(1.0);

    Vec2 before = s.gripper;
    s.gripper = clamp_arena(s.gripper + kStepCap * Vec2(a.x(), a.y()));
    Vec2 delta = s.gripper - before;
    s.velocity = delta;
    // The grip latches: positive commands close it, and it stays closed
    // until a deliberate wide-open command.
    if (a.z() > 0.0) s.gripper_closed = true;
    else if (a.z() < -0.8) s.gripper_closed = false;

    double value_delta = 0.0;
    bool released = false;

    switch (spec_.mechanism) {
        case Mechanism::pull_grasp: {
            // A closed grip near the handle attaches. While attached the
            // hand rides the handle: commanded motion projects onto the
            // rail and the rest is absorbed by the constraint. Opening the
            // grip releases.
            if (s.attached && !s.gripper_closed) {
                s.attached = false;
                released = true;
            }
            if (s.attached) {
                double v = std::clamp(s.object_value + kDragGain * delta.dot(spec_.dir), 0.0,
                                      spec_.travel);
                value_delta = v - s.object_value;
                s.object_value = v;
                s.object_pos = s.object_rest + v * spec_.dir;
                s.gripper = s.object_pos;
                s.velocity = s.gripper - before;
            } else if (!released && s.gripper_closed &&
                       (s.gripper - s.object_pos).norm() <= kGrabRadius) {
                s.attached = true;
            }
            break;
        }
        case Mechanism::push_contact: {
            // Contact at the start of the motion carries the handle along
            // the rail; no grip needed.
            if ((before - s.object_pos).norm() <= kGrabRadius) {
                double v = std::clamp(s.object_value + kDragGain * delta.dot(spec_.dir), 0.0,
                                      spec_.travel);
                value_delta = v - s.object_value;
                s.object_value = v;
                s.object_pos = s.object_rest + v * spec_.dir;
            }
            break;
        }
        case Mechanism::press: {
            if ((s.gripper - s.object_pos).norm() <= kGrabRadius) {
                double v = std::min(spec_.travel, s.object_value + kPressRate);
                value_delta = v - s.object_value;
                s.object_value = v;
            }
            break;
        }
        case Mechanism::ball: {
            // The ball moves only when pushed into, never dragged along.
            Vec2 to_ball = s.object_pos - before;
            if (to_ball.norm() <= kGrabRadius && delta.dot(to_ball) > 0.0) {
                double dist_before = (s.object_pos - spec_.goal).norm();
                s.object_pos = clamp_arena(s.object_pos + delta);
                value_delta = (s.object_pos - spec_.goal).norm() - dist_before;
            }
            break;
        }
    }

    // Mechanisms relax toward their episode-start pose — at half rate while
    // held, and not at all on steps where the agent actively advances a
    // press or push. The spring's own motion never counts as an agent-caused
    // value change.
    bool actively_advancing =
        (spec_.mechanism == Mechanism::press && value_delta > 0.0) ||
        (spec_.mechanism == Mechanism::push_contact && value_delta < 0.0);
    if (spec_.mechanism != Mechanism::ball && !success(s) && !actively_advancing) {
        double rate = kSpringFrac * spec_.travel * (s.attached ? 0.5 : 1.0);
        double gap = s.start_value - s.object_value;
        s.object_value += std::clamp(gap, -rate, rate);
        if (spec_.mechanism != Mechanism::press) {
            s.object_pos = s.object_rest + s.object_value * spec_.dir;
            if (s.attached) s.gripper = s.object_pos;
        }
    }

    ++s.steps;
    state_ = s;

    StepResult out;
    out.events = stage_events(s, value_delta, released);
    out.state = s;
    frame_ = make_frame(s, out.events);
    out.frame = frame_;
    out.done = success(s) || s.steps >= kHorizon;
    return out;
}

bool ToyEnv::success(const EnvState& s) const {
    switch (spec_.mechanism) {
        case Mechanism::pull_grasp:
        case Mechanism::press: return s.object_value >= spec_.success_at;
        case Mechanism::push_contact: return s.object_value <= spec_.success_at;
        case Mechanism::ball: return (s.object_pos - spec_.goal).norm() <= kGoalRadius;
    }
    return false;
}

std::vector<std::string> ToyEnv::stage_events(const EnvState& s, double value_delta,
                                              bool released) const {
    // One stage tag per frame, most advanced first; release is transient and
    // may ride along with a stage tag.
    std::vector<std::string> events;
    const double dist = (s.gripper - s.object_pos).norm();

    bool at_goal = success(s);
    bool advancing, backing;
    if (spec_.mechanism == Mechanism::push_contact) {
        advancing = value_delta < -kValueTol;  // closing reduces the value
        backing = value_delta > kValueTol;
    } else if (spec_.mechanism == Mechanism::ball) {
        advancing = value_delta < -kValueTol;  // toward the goal
        backing = value_delta > kValueTol;
    } else {
        advancing = value_delta > kValueTol;
        backing = value_delta < -kValueTol;
    }

    if (at_goal && !spec_.ev_goal.empty()) {
        events.push_back(spec_.ev_goal);
    } else if (advancing && !spec_.ev_advance.empty()) {
        events.push_back(spec_.ev_advance);
    } else if (backing && !spec_.ev_wrongway.empty()) {
        events.push_back(spec_.ev_wrongway);
    } else if (s.attached && !spec_.ev_engage.empty()) {
        events.push_back(spec_.ev_engage);
    } else if (dist <= kApproachRadius && !spec_.ev_approach.empty()) {
        events.push_back(spec_.ev_approach);
    }

    if (released && !at_goal && !spec_.ev_release.empty())
        events.push_back(spec_.ev_release);
    return events;
}

embed::FrameFeature ToyEnv::make_frame(const EnvState& s,
                                       const std::vector<std::string>& events) const {
    // Fixed 12-dim layout across the suite: gripper pose, grip and attachment
    // flags, object value, object-relative offset, and the direction that
    // still advances the task.
    Vec2 rel = s.object_pos - s.gripper;
    Vec2 aux{0, 0};
    switch (spec_.mechanism) {
        case Mechanism::pull_grasp: aux = (spec_.travel - s.object_value) * spec_.dir; break;
        case Mechanism::push_contact: aux = -s.object_value * spec_.dir; break;
        case Mechanism::press: break;
        case Mechanism::ball: aux = spec_.goal - s.object_pos; break;
    }
    embed::FrameFeature f;
    f.values = {s.gripper.x(), s.gripper.y(), s.velocity.x(), s.velocity.y(),
                s.gripper_closed ? 1.0 : 0.0, s.attached ? 1.0 : 0.0,
                s.object_value, rel.x(), rel.y(), rel.norm(), aux.x(), aux.y()};
    f.event_tags = events;
    return f;
}

Action expert_action(const TaskSpec& spec, const EnvState& s) {
    auto toward = [](Vec2 from, Vec2 to) {
        Vec2 d = (to - from) / kStepCap;
        return Vec2{std::clamp(d.x(), -1.0, 1.0), std::clamp(d.y(), -1.0, 1.0)};
    };

    switch (spec.mechanism) {
        case Mechanism::pull_grasp: {
            if (!s.attached) {
                Vec2 move = toward(s.gripper, s.object_pos);
                bool close = (s.gripper - s.object_pos).norm() <= 0.8 * kGrabRadius;
                return {move.x(), move.y(), close ? 1.0 : -1.0};
            }
            return {spec.dir.x(), spec.dir.y(), 1.0};
        }
        case Mechanism::push_contact: {
            // Stage just beyond the handle on the open side, then push back
            // along the rail; approaching the staging point can only nudge
            // the object toward closed.
            Vec2 staging = s.object_pos + 0.5 * kGrabRadius * spec.dir;
            if ((s.gripper - staging).norm() > 0.02) {
                Vec2 move = toward(s.gripper, staging);
                return {move.x(), move.y(), -1.0};
            }
            return {-spec.dir.x(), -spec.dir.y(), -1.0};
        }
        case Mechanism::press: {
            Vec2 move = toward(s.gripper, s.object_pos);
            return {move.x(), move.y(), -1.0};
        }
        case Mechanism::ball: {
            if ((s.gripper - s.object_pos).norm() > 0.8 * kGrabRadius) {
                Vec2 move = toward(s.gripper, s.object_pos);
                return {move.x(), move.y(), -1.0};
            }
            Vec2 move = toward(s.object_pos, spec.goal);
            return {move.x(), move.y(), -1.0};
        }
    }
    return {0, 0, 0};
}

void dump_trajectory(const Trajectory& traj, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::app);
    if (!out) throw std::runtime_error("cannot write trajectory dump: " + file.string());
    nlohmann::json j;
    j["id"] = traj.id;
    j["task"] = traj.task;
    j["length"] = traj.length();
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& f : traj.frames)
        frames.push_back({{"values", f.values}, {"events", f.event_tags}});
    j["frames"] = std::move(frames);
    nlohmann::json actions = nlohmann::json::array();
    for (const auto& a : traj.actions) actions.push_back({a.x(), a.y(), a.z()});
    j["actions"] = std::move(actions);
    j["per_step_reward"] = traj.trace.per_step;
    out << j.dump() << '\n';
}

}  // namespace sgrl::env
