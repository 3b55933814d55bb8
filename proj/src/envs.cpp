#include "offpac/envs.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace offpac {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

// wrap to (-pi, pi]
double wrap_angle(double th) {
  double r = std::fmod(th + kPi, 2.0 * kPi);
  if (r <= 0.0) r += 2.0 * kPi;
  return r - kPi;
}

// unnormalized-by-sigma Gaussian bump used by the grid world's penalty ridges
double gauss(double p, double mu, double sigma) {
  const double d = p - mu;
  return std::exp(-d * d / (2.0 * sigma * sigma)) / (sigma * std::sqrt(2.0 * kPi));
}

}  // namespace

std::array<double, 2> MountainCar::reset() {
  pos_ = -0.5;
  vel_ = 0.0;
  steps_ = 0;
  return state();
}

StepOut MountainCar::step(int action, SplitMix64&) {
  const double throttle = static_cast<double>(action - 1);  // ids 0/1/2 -> -1/0/+1
  vel_ += 0.001 * throttle - 0.0025 * std::cos(3.0 * pos_);
  vel_ = clamp(vel_, -0.07, 0.07);
  pos_ += vel_;
  pos_ = clamp(pos_, -1.2, 0.6);
  if (pos_ <= -1.2) vel_ = 0.0;  // the left wall absorbs all momentum
  ++steps_;
  const bool done = pos_ >= 0.6 || steps_ >= kEpisodeCap;
  return {-1.0, done};
}

std::array<double, 2> Pendulum::reset() {
  angle_ = kPi / 2.0;  // at rest, horizontal
  speed_ = 0.0;
  steps_ = 0;
  return state();
}

StepOut Pendulum::step(int action, SplitMix64&) {
  // th'' = (-mu th' + m g l sin(th) + torque) / (m l^2), m = l = 1, g = 9.8,
  // mu = 0.01, th measured from upright; semi-implicit Euler at dt = 0.01
  const double torque = 2.0 * static_cast<double>(action - 1);  // ids -> -2/0/+2
  const double accel = -0.01 * speed_ + 9.8 * std::sin(angle_) + torque;
  speed_ += 0.01 * accel;
  speed_ = clamp(speed_, -kMaxSpeed, kMaxSpeed);
  angle_ = wrap_angle(angle_ + 0.01 * speed_);
  ++steps_;
  return {std::cos(angle_), steps_ >= kEpisodeCap};
}

std::array<double, 2> GridWorld::reset() {
  x_ = 0.2;
  y_ = 0.4;
  steps_ = 0;
  return state();
}

double GridWorld::reward_at(double x, double y) {
  return -1.0 - 2.0 * (gauss(x, 0.3, 0.1) * gauss(y, 0.6, 0.03) +
                       gauss(x, 0.4, 0.03) * gauss(y, 0.5, 0.1) +
                       gauss(x, 0.8, 0.03) * gauss(y, 0.9, 0.1));
}

StepOut GridWorld::step(int action, SplitMix64& noise) {
  static constexpr double dx[5] = {0.0, -0.05, 0.05, 0.0, 0.0};
  static constexpr double dy[5] = {0.0, 0.0, 0.0, -0.05, 0.05};
  x_ = clamp(x_ + dx[action] + noise.uniform(-0.025, 0.025), 0.0, 1.0);
  y_ = clamp(y_ + dy[action] + noise.uniform(-0.025, 0.025), 0.0, 1.0);
  ++steps_;
  const bool done = (1.0 - x_) + (1.0 - y_) < 0.1 || steps_ >= kEpisodeCap;
  return {reward_at(x_, y_), done};
}

std::unique_ptr<Env> make_env(std::string_view name) {
  if (name == "mountain_car") return std::make_unique<MountainCar>();
  if (name == "pendulum") return std::make_unique<Pendulum>();
  if (name == "grid_world") return std::make_unique<GridWorld>();
  throw std::invalid_argument("unknown environment '" + std::string(name) + "'");
}

void TabularMDP::validate() const {
  const auto S = static_cast<std::size_t>(num_states);
  const auto A = static_cast<std::size_t>(num_actions);
  if (num_states < 1 || num_actions < 1)
    throw std::invalid_argument("tabular mdp: empty state or action set");
  if (p.size() != S * A * S || r.size() != S * A * S || gamma.size() != S ||
      behavior.size() != S * A)
    throw std::invalid_argument("tabular mdp: table size mismatch");
  for (std::size_t row = 0; row < S * A; ++row) {
    double sum = 0.0;
    for (std::size_t s2 = 0; s2 < S; ++s2) {
      const double q = p[row * S + s2];
      if (q < 0.0) throw std::invalid_argument("tabular mdp: negative probability");
      sum += q;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("tabular mdp: transition row does not sum to 1");
  }
  for (double g : gamma)
    if (!(g >= 0.0 && g < 1.0))
      throw std::invalid_argument("tabular mdp: continuation outside [0, 1)");
  for (std::size_t s = 0; s < S; ++s) {
    double sum = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      const double b = behavior[s * A + a];
      if (!(b > 0.0))
        throw std::invalid_argument("tabular mdp: behavior must support every action");
      sum += b;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("tabular mdp: behavior row does not sum to 1");
  }
}

int TabularMDP::sample_next(int s, int a, double u01) const {
  double cum = 0.0;
  for (int s2 = 0; s2 + 1 < num_states; ++s2) {
    cum += prob(s, a, s2);
    if (u01 < cum) return s2;
  }
  return num_states - 1;
}

TabularStep tabular_step(const TabularMDP& m, int s, int a, SplitMix64& rng) {
  const int s2 = m.sample_next(s, a, rng.uniform01());
  return {s2, m.rew(s, a, s2)};
}

TabularMDP chain2() {
  TabularMDP m;
  m.num_states = 2;
  m.num_actions = 2;
  // action 0 mostly stays, action 1 mostly swaps
  m.p = {
      0.9, 0.1,  // s0 a0
      0.1, 0.9,  // s0 a1
      0.1, 0.9,  // s1 a0 -> mostly stays at 1
      0.9, 0.1,  // s1 a1 -> mostly swaps to 0
  };
  // rewards vary with the full (s, a, s') triple; spreads are kept small so
  // sampled learners can reach tight tolerances against the exact solve
  m.r = {
      0.50, 0.60,  // s0 a0
      0.30, 0.45,  // s0 a1
      0.25, 0.40,  // s1 a0
      0.55, 0.45,  // s1 a1
  };
  m.gamma = {0.8, 0.8};
  m.behavior = {0.5, 0.5, 0.5, 0.5};
  m.validate();
  return m;
}

TabularMDP ring3() {
  TabularMDP m;
  m.num_states = 3;
  m.num_actions = 2;
  m.p.assign(3 * 2 * 3, 0.0);
  m.r.assign(3 * 2 * 3, 0.0);
  for (int s = 0; s < 3; ++s) {
    const int fwd = (s + 1) % 3, bwd = (s + 2) % 3;
    // action 0 pushes clockwise, action 1 counter-clockwise; both leak
    const auto row0 = static_cast<std::size_t>((s * 2 + 0) * 3);
    const auto row1 = static_cast<std::size_t>((s * 2 + 1) * 3);
    m.p[row0 + static_cast<std::size_t>(fwd)] = 0.85;
    m.p[row0 + static_cast<std::size_t>(s)] = 0.10;
    m.p[row0 + static_cast<std::size_t>(bwd)] = 0.05;
    m.p[row1 + static_cast<std::size_t>(bwd)] = 0.85;
    m.p[row1 + static_cast<std::size_t>(s)] = 0.10;
    m.p[row1 + static_cast<std::size_t>(fwd)] = 0.05;
    // arrival bonus plus a small action cost
    const double arrive[3] = {0.2, -0.5, 1.0};
    for (int s2 = 0; s2 < 3; ++s2) {
      m.r[row0 + static_cast<std::size_t>(s2)] = arrive[s2];
      m.r[row1 + static_cast<std::size_t>(s2)] = arrive[s2] - 0.3;
    }
  }
  m.gamma = {0.9, 0.8, 0.95};
  m.behavior.assign(3 * 2, 0.5);
  m.validate();
  return m;
}

TabularMDP rand4(std::uint64_t seed) {
  SplitMix64 rng(seed);
  TabularMDP m;
  m.num_states = 4;
  m.num_actions = 2;
  const int S = 4, A = 2;
  m.p.assign(static_cast<std::size_t>(S * A * S), 0.0);
  m.r.assign(static_cast<std::size_t>(S * A * S), 0.0);
  for (int row = 0; row < S * A; ++row) {
    double sum = 0.0;
    double raw[4];
    for (int s2 = 0; s2 < S; ++s2) {
      raw[s2] = 0.05 + rng.uniform01();  // floor keeps the chain irreducible
      sum += raw[s2];
    }
    for (int s2 = 0; s2 < S; ++s2) {
      m.p[static_cast<std::size_t>(row * S + s2)] = raw[s2] / sum;
      m.r[static_cast<std::size_t>(row * S + s2)] = rng.uniform(-1.0, 1.0);
    }
  }
  m.gamma = {0.9, 0.7, 0.95, 0.8};
  m.behavior.assign(static_cast<std::size_t>(S * A), 0.5);
  m.validate();
  return m;
}

}  // namespace offpac
