#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "offpac/policies.hpp"
#include "offpac/rng.hpp"

using namespace offpac;

namespace {

SparseFeatures feats(std::vector<std::uint32_t> idx, std::uint32_t dim) {
  SparseFeatures f;
  f.indices = std::move(idx);
  f.dimension = dim;
  return f;
}

// disjoint one-hot features per action plus a shared bias at the last index
std::vector<SparseFeatures> one_hot_with_bias(int num_actions) {
  const auto dim = static_cast<std::uint32_t>(num_actions + 1);
  std::vector<SparseFeatures> phi;
  for (int a = 0; a < num_actions; ++a)
    phi.push_back(feats({static_cast<std::uint32_t>(a), dim - 1}, dim));
  return phi;
}

// random sparse state-action features over a small dense space
std::vector<SparseFeatures> random_features(SplitMix64& rng, int num_actions,
                                            std::uint32_t dim) {
  std::vector<SparseFeatures> phi;
  for (int a = 0; a < num_actions; ++a) {
    SparseFeatures f;
    f.dimension = dim;
    for (std::uint32_t i = 0; i < dim; ++i)
      if (rng.uniform01() < 0.25) f.indices.push_back(i);
    if (f.indices.empty()) f.indices.push_back(static_cast<std::uint32_t>(a));
    phi.push_back(std::move(f));
  }
  return phi;
}

double dense_coeff(const SparseCoeffs& c, std::uint32_t i) {
  for (const auto& [idx, v] : c.entries)
    if (idx == i) return v;
  return 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Gibbs probabilities
// ---------------------------------------------------------------------------

TEST(GibbsProbs, ZeroWeightsGiveUniform) {
  const auto phi = one_hot_with_bias(3);
  const std::vector<double> u(4, 0.0);
  const auto p = gibbs_probs(u, phi);
  for (double q : p) EXPECT_DOUBLE_EQ(q, 1.0 / 3.0);
}

TEST(GibbsProbs, KnownLogitsGiveKnownProbs) {
  // logits (ln 3, 0) -> (0.75, 0.25)
  const auto phi = one_hot_with_bias(2);
  std::vector<double> u(3, 0.0);
  u[0] = std::log(3.0);
  const auto p = gibbs_probs(u, phi);
  EXPECT_NEAR(p[0], 0.75, 1e-12);
  EXPECT_NEAR(p[1], 0.25, 1e-12);
}

TEST(GibbsProbs, BiasShiftLeavesProbsUnchanged) {
  const auto phi = one_hot_with_bias(3);
  SplitMix64 rng(5);
  std::vector<double> u(4);
  for (auto& x : u) x = rng.uniform(-2.0, 2.0);
  const auto p = gibbs_probs(u, phi);
  u[3] += 17.5;  // bias feature is active in every phi_sa
  const auto q = gibbs_probs(u, phi);
  for (std::size_t a = 0; a < p.size(); ++a) EXPECT_NEAR(p[a], q[a], 1e-12);
}

TEST(GibbsProbs, StrictlyPositiveAndNormalized) {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto phi = random_features(rng, 4, 12);
    std::vector<double> u(12);
    for (auto& x : u) x = rng.uniform(-30.0, 30.0);
    const auto p = gibbs_probs(u, phi);
    double sum = 0.0;
    for (double q : p) {
      EXPECT_GT(q, 0.0);
      sum += q;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(GibbsProbs, ExtremeLogitsDoNotOverflow) {
  const auto phi = one_hot_with_bias(2);
  std::vector<double> u = {800.0, -800.0, 0.0};
  const auto p = gibbs_probs(u, phi);
  EXPECT_TRUE(std::isfinite(p[0]));
  EXPECT_TRUE(std::isfinite(p[1]));
  EXPECT_NEAR(p[0], 1.0, 1e-12);
}

TEST(GibbsProbs, OutParamMatchesReturningForm) {
  SplitMix64 rng(23);
  const auto phi = random_features(rng, 3, 10);
  std::vector<double> u(10);
  for (auto& x : u) x = rng.uniform(-1.0, 1.0);
  std::vector<double> out;
  gibbs_probs(u, phi, out);
  EXPECT_EQ(out, gibbs_probs(u, phi));
}

// ---------------------------------------------------------------------------
// Feature mixing and the score
// ---------------------------------------------------------------------------

TEST(MixFeatures, AccumulatesOverlappingIndices) {
  std::vector<SparseFeatures> phi = {feats({0, 2}, 4), feats({2, 3}, 4)};
  const std::vector<double> w = {0.25, 0.5};
  SparseCoeffs out;
  mix_features(phi, w, out);
  ASSERT_EQ(out.entries.size(), 3u);
  EXPECT_EQ(out.entries[0].first, 0u);
  EXPECT_EQ(out.entries[0].second, 0.25);
  EXPECT_EQ(out.entries[1].first, 2u);
  EXPECT_EQ(out.entries[1].second, 0.25 + 0.5);
  EXPECT_EQ(out.entries[2].first, 3u);
  EXPECT_EQ(out.entries[2].second, 0.5);
}

TEST(MixFeatures, MatchesDenseReference) {
  SplitMix64 rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const auto phi = random_features(rng, 5, 14);
    std::vector<double> w(5);
    for (auto& x : w) x = rng.uniform(-1.0, 1.0);
    SparseCoeffs out;
    mix_features(phi, w, out);

    std::vector<double> dense(14, 0.0);
    for (std::size_t b = 0; b < phi.size(); ++b)
      for (std::uint32_t i : phi[b].indices) dense[i] += w[b];
    for (std::uint32_t i = 0; i < 14; ++i)
      EXPECT_NEAR(dense_coeff(out, i), dense[i], 1e-15) << "index " << i;

    // entries stay sorted and cover exactly the union of supports
    for (std::size_t k = 1; k < out.entries.size(); ++k)
      EXPECT_LT(out.entries[k - 1].first, out.entries[k].first);
  }
}

TEST(GibbsScore, TwoActionOneHotExpansion) {
  // psi(s, a0) = (1-p) phi_a0 - (1-p) phi_a1 for pi = (p, 1-p)
  std::vector<SparseFeatures> phi = {feats({0}, 2), feats({1}, 2)};
  std::vector<double> u = {0.8, -0.4};
  const auto p = gibbs_probs(u, phi);
  SparseCoeffs psi;
  gibbs_score(phi, p, 0, psi);
  EXPECT_NEAR(dense_coeff(psi, 0), 1.0 - p[0], 1e-15);
  EXPECT_NEAR(dense_coeff(psi, 1), -p[1], 1e-15);
}

TEST(GibbsScore, ExpectedScoreIsZero) {
  SplitMix64 rng(59);
  for (int trial = 0; trial < 20; ++trial) {
    const auto phi = random_features(rng, 4, 12);
    std::vector<double> u(12);
    for (auto& x : u) x = rng.uniform(-2.0, 2.0);
    const auto p = gibbs_probs(u, phi);

    std::vector<double> sum(12, 0.0);
    SparseCoeffs psi;
    for (int a = 0; a < 4; ++a) {
      gibbs_score(phi, p, a, psi);
      for (const auto& [i, c] : psi.entries) sum[i] += p[static_cast<std::size_t>(a)] * c;
    }
    for (double x : sum) EXPECT_NEAR(x, 0.0, 1e-12);
  }
}

TEST(GibbsScore, MatchesFiniteDifferenceOfLogPi) {
  SplitMix64 rng(71);
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto phi = random_features(rng, 3, 10);
    std::vector<double> u(10);
    for (auto& x : u) x = rng.uniform(-1.5, 1.5);
    const int a = static_cast<int>(rng.uniform_int(3));
    const auto p = gibbs_probs(u, phi);
    SparseCoeffs psi;
    gibbs_score(phi, p, a, psi);

    for (std::uint32_t k = 0; k < 10; ++k) {
      std::vector<double> up = u, um = u;
      up[k] += h;
      um[k] -= h;
      const double lp = std::log(gibbs_probs(up, phi)[static_cast<std::size_t>(a)]);
      const double lm = std::log(gibbs_probs(um, phi)[static_cast<std::size_t>(a)]);
      const double fd = (lp - lm) / (2.0 * h);
      worst = std::max(worst, std::fabs(dense_coeff(psi, k) - fd));
    }
  }
  EXPECT_LT(worst, 1e-6);
}

// ---------------------------------------------------------------------------
// Importance ratio
// ---------------------------------------------------------------------------

TEST(ImportanceRatio, OnPolicyIsExactlyOne) {
  EXPECT_EQ(importance_ratio(0.37, 0.37), 1.0);
}

TEST(ImportanceRatio, DirectArithmetic) {
  EXPECT_DOUBLE_EQ(importance_ratio(0.9, 1.0 / 3.0), 0.9 / (1.0 / 3.0));
}

TEST(ImportanceRatio, RejectsUnsupportedBehavior) {
  EXPECT_THROW(importance_ratio(0.5, 0.0), std::invalid_argument);
  EXPECT_THROW(importance_ratio(0.5, -0.1), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Softmax and greedy targets
// ---------------------------------------------------------------------------

TEST(SoftmaxTarget, EqualValuesGiveUniform) {
  const auto p = softmax_target_probs(1.0, {2.5, 2.5, 2.5, 2.5});
  for (double q : p) EXPECT_DOUBLE_EQ(q, 0.25);
}

TEST(SoftmaxTarget, HighTemperatureApproachesUniform) {
  const auto p = softmax_target_probs(100.0, {1.0, 0.0});
  EXPECT_NEAR(p[0], 0.5, 0.01);
  EXPECT_NEAR(p[1], 0.5, 0.01);
}

TEST(SoftmaxTarget, UnitTemperatureDirectArithmetic) {
  const auto p = softmax_target_probs(1.0, {1.0, 0.0});
  const double e = std::exp(1.0);
  EXPECT_NEAR(p[0], e / (e + 1.0), 1e-12);
  EXPECT_NEAR(p[1], 1.0 / (e + 1.0), 1e-12);
}

TEST(SoftmaxTarget, RejectsNonPositiveTemperature) {
  EXPECT_THROW(softmax_target_probs(0.0, {1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(softmax_target_probs(-1.0, {1.0, 2.0}), std::invalid_argument);
}

TEST(SoftmaxTarget, OutParamMatchesReturningForm) {
  std::vector<double> out;
  softmax_target_probs(0.7, {0.3, -1.2, 2.0}, out);
  EXPECT_EQ(out, softmax_target_probs(0.7, {0.3, -1.2, 2.0}));
}

TEST(GreedyAction, TiesBreakToLowestId) {
  EXPECT_EQ(greedy_action({0.0, 5.0, 5.0}), 1);
  EXPECT_EQ(greedy_action({3.0, 3.0, 3.0}), 0);
  EXPECT_EQ(greedy_action({-1.0, -2.0}), 0);
}

TEST(GreedyAction, InvariantUnderConstantShift) {
  SplitMix64 rng(83);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> q(4);
    for (auto& x : q) x = rng.uniform(-3.0, 3.0);
    std::vector<double> shifted = q;
    for (auto& x : shifted) x += 123.0;
    EXPECT_EQ(greedy_action(q), greedy_action(shifted));
  }
}

// ---------------------------------------------------------------------------
// Policy wrappers
// ---------------------------------------------------------------------------

TEST(UniformBehavior, EqualProbabilityAndFullCoverage) {
  UniformBehavior b{4};
  EXPECT_DOUBLE_EQ(b.prob(), 0.25);
  SplitMix64 rng(97);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 4000; ++i) ++counts[static_cast<std::size_t>(b.sample(rng))];
  for (int c : counts) EXPECT_GT(c, 800);
}

TEST(GibbsPolicy, SampleFollowsProbs) {
  const auto phi = one_hot_with_bias(2);
  std::vector<double> u = {std::log(3.0), 0.0, 0.0};
  GibbsPolicy pol{&u, 2};
  const auto p = pol.probs(phi);
  EXPECT_NEAR(p[0], 0.75, 1e-12);
  SplitMix64 rng(101);
  int zeros = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i)
    if (pol.sample(phi, rng) == 0) ++zeros;
  // binomial(20000, .75): 3 sigma is about 184
  EXPECT_NEAR(static_cast<double>(zeros), 15000.0, 200.0);
}
