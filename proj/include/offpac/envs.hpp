#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "offpac/rng.hpp"

namespace offpac {

// hard cap on every episode, learning and evaluation alike
inline constexpr int kEpisodeCap = 5000;

struct StepOut {
  double reward = 0.0;
  bool done = false;
};

// Episodic 2-D continuous-state environment. Actions are ids 0..A-1; each
// concrete class documents its id -> physical action map. `noise` is drawn
// only by stochastic environments, so deterministic ones never consume it.
class Env {
 public:
  virtual ~Env() = default;
  virtual int num_actions() const = 0;
  virtual std::array<double, 2> state_low() const = 0;
  virtual std::array<double, 2> state_high() const = 0;
  virtual std::array<double, 2> reset() = 0;
  virtual StepOut step(int action, SplitMix64& noise) = 0;
  virtual std::array<double, 2> state() const = 0;

  int episode_steps() const { return steps_; }

 protected:
  int steps_ = 0;
};

// Underpowered car in a valley. State (position, velocity); action ids
// 0/1/2 map to throttle -1/0/+1. Reward -1 per step; episode ends at the
// right summit (position >= 0.6) or the step cap.
class MountainCar : public Env {
 public:
  int num_actions() const override { return 3; }
  std::array<double, 2> state_low() const override { return {-1.2, -0.07}; }
  std::array<double, 2> state_high() const override { return {0.6, 0.07}; }
  std::array<double, 2> reset() override;
  StepOut step(int action, SplitMix64& noise) override;
  std::array<double, 2> state() const override { return {pos_, vel_}; }

 private:
  double pos_ = -0.5, vel_ = 0.0;
};

// Torque-limited pendulum swing-up. State (angle, angular velocity) with the
// angle measured from upright and wrapped to (-pi, pi]; action ids 0/1/2 map
// to torque -2/0/+2. Starts at rest, horizontal. Reward cos(angle); episodes
// end only at the step cap.
class Pendulum : public Env {
 public:
  static constexpr double kMaxSpeed = 78.54;

  int num_actions() const override { return 3; }
  std::array<double, 2> state_low() const override { return {-3.14159265358979312, -kMaxSpeed}; }
  std::array<double, 2> state_high() const override { return {3.14159265358979312, kMaxSpeed}; }
  std::array<double, 2> reset() override;
  StepOut step(int action, SplitMix64& noise) override;
  std::array<double, 2> state() const override { return {angle_, speed_}; }

 private:
  double angle_ = 0.0, speed_ = 0.0;
};

// Continuous grid world on [0,1]^2 with three Gaussian-penalty ridges.
// Action ids 0..4 map to moves (0,0), (-.05,0), (+.05,0), (0,-.05), (0,+.05);
// each component of the move is perturbed by independent uniform noise in
// [-0.025, 0.025] (x drawn first). Reward is evaluated at the arrival point.
// Episode ends within L1 distance 0.1 of the corner (1,1) or at the cap.
class GridWorld : public Env {
 public:
  int num_actions() const override { return 5; }
  std::array<double, 2> state_low() const override { return {0.0, 0.0}; }
  std::array<double, 2> state_high() const override { return {1.0, 1.0}; }
  std::array<double, 2> reset() override;
  StepOut step(int action, SplitMix64& noise) override;
  std::array<double, 2> state() const override { return {x_, y_}; }

  static double reward_at(double x, double y);

 private:
  double x_ = 0.2, y_ = 0.4;
};

// names: mountain_car, pendulum, grid_world
std::unique_ptr<Env> make_env(std::string_view name);  // throws on unknown name

// Finite MDP with per-state continuation (discount applies at the arrival
// state) and a fixed behavior policy. Used by the oracle and its tests.
struct TabularMDP {
  int num_states = 0, num_actions = 0;
  std::vector<double> p;         // p[(s*A + a)*S + s2], rows sum to 1
  std::vector<double> r;         // r[(s*A + a)*S + s2]
  std::vector<double> gamma;     // continuation in [0, 1) per state
  std::vector<double> behavior;  // behavior[s*A + a], rows sum to 1, positive

  double prob(int s, int a, int s2) const {
    return p[static_cast<std::size_t>((s * num_actions + a) * num_states + s2)];
  }
  double rew(int s, int a, int s2) const {
    return r[static_cast<std::size_t>((s * num_actions + a) * num_states + s2)];
  }
  double beh(int s, int a) const {
    return behavior[static_cast<std::size_t>(s * num_actions + a)];
  }

  void validate() const;  // throws std::invalid_argument on malformed tables

  int sample_next(int s, int a, double u01) const;
};

// (s', reward) for one behavior-free transition draw
struct TabularStep {
  int next_state = 0;
  double reward = 0.0;
};
TabularStep tabular_step(const TabularMDP& m, int s, int a, SplitMix64& rng);

// In-repo oracle MDPs. All three have two actions and uniform behavior
// (two-action rows make summed policy identities cancel bitwise);
// rand4 has four states, seeded random tables and
// non-constant per-state continuation.
TabularMDP chain2();
TabularMDP ring3();
TabularMDP rand4(std::uint64_t seed);

}  // namespace offpac
