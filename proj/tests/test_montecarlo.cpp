#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include "histent/error.hpp"
#include "histent/montecarlo.hpp"

using namespace histent;

TEST(Streams, DeterministicAndDistinct) {
  auto a = stream_rng(7, 3), b = stream_rng(7, 3), c = stream_rng(7, 4), d = stream_rng(8, 3);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
  EXPECT_GE(resolve_workers(0), 1u);
  EXPECT_EQ(resolve_workers(3), 3u);
}

TEST(Ensemble, IndependentOfWorkerCount) {
  const ModelConfig model = DiffusionModel{20.0, 1.0, 50, 0.01, 0.1, 0.0};
  const auto one = sample_trajectories(model, 500, 9, 1);
  for (unsigned w : {4u, 16u}) EXPECT_EQ(sample_trajectories(model, 500, 9, w).data, one.data);
  EXPECT_NE(sample_trajectories(model, 500, 10, 1).data, one.data);
  EXPECT_EQ(one.data.size(), 500u * 50u);
  EXPECT_THROW(sample_trajectories(model, 0, 9), ConfigError);
}

TEST(ClassCounting, MatchesDirectTally) {
  const ModelConfig model = RandomWalkModel{16, 12, 0};
  const auto space = model_space(model);
  const auto ens = sample_trajectories(model, 3000, 2, 4);
  const auto cg = CoarseGraining::uniform(space, 12, 1.0, 4.0, 3);
  const auto counts = count_classes(ens, cg, space);
  std::map<ClassLabel, std::uint64_t> tally;
  for (std::size_t i = 0; i < ens.count; ++i) ++tally[classify(ens.history(i), cg)];
  ASSERT_EQ(counts.distinct(), tally.size());
  std::uint64_t total = 0;
  for (std::size_t c = 0; c < counts.distinct(); ++c) {
    const auto label = classify(ens.history(counts.representative[c]), cg);
    EXPECT_EQ(counts.counts[c], tally[label]);
    EXPECT_NEAR(counts.log2_volume[c], projector_volume(cg, label, space), 1e-12);
    if (c > 0) EXPECT_LT(counts.representative[c - 1], counts.representative[c]);
    total += counts.counts[c];
  }
  EXPECT_EQ(total, 3000u);
  EXPECT_EQ(counts.representative[0], 0u);
  EXPECT_THROW(count_classes(ens, CoarseGraining::uniform(space, 6, 1.0, 4.0, 3), space), ConfigError);
}

class SmallWalk : public ::testing::Test {
 protected:
  ModelConfig model = RandomWalkModel{8, 4, 0};
  StateSpace space = model_space(model);
  CoarseGraining cg = CoarseGraining::uniform(space, 4, 1.0, 2.0, 1);
  double exact_s = history_space_entropy(exact_history_probs(*model_law(model), model_initial(model), cg, space));
};

TEST_F(SmallWalk, PlugInConverges) {
  const auto ens = sample_trajectories(model, 200000, 3);
  const auto hd = estimate_distribution(ens, cg, space);
  EXPECT_NEAR(history_space_entropy(hd), exact_s, 0.01);
  const auto counts = count_classes(ens, cg, space);
  EXPECT_NEAR(plug_in_terms(counts).s_hs(), history_space_entropy(hd), 1e-12);
}

TEST_F(SmallWalk, MillerMadowCorrection) {
  const auto counts = count_classes(sample_trajectories(model, 500, 4), cg, space);
  const double k = static_cast<double>(counts.distinct());
  EXPECT_NEAR(plug_in_terms(counts, true).shannon - plug_in_terms(counts).shannon, (k - 1) / (2.0 * 500 * std::log(2.0)),
              1e-12);
}

// Nominal 95% intervals should cover the exact value in at least 90% of runs.
TEST_F(SmallWalk, BootstrapCoverage) {
  int covered = 0;
  for (int trial = 0; trial < 100; ++trial) {
    EstimateOptions opt;
    opt.resamples = 200;
    opt.seed = static_cast<std::uint64_t>(trial);
    const auto est = entropy_with_error(sample_trajectories(model, 2000, 1000 + trial, 2), cg, space, opt);
    EXPECT_LE(est.ci_lo, est.ci_hi);
    covered += est.ci_lo <= exact_s && exact_s <= est.ci_hi;
  }
  EXPECT_GE(covered, 90);
}

TEST_F(SmallWalk, BiasWarningAndOptions) {
  const auto few = count_classes(sample_trajectories(model, 20, 5), cg, space);
  EstimateOptions opt;
  opt.resamples = 10;
  EXPECT_TRUE(entropy_with_error(few, opt).bias_warning);
  const auto many = count_classes(sample_trajectories(model, 5000, 5), cg, space);
  EXPECT_FALSE(entropy_with_error(many, opt).bias_warning);
  opt.resamples = 1;
  EXPECT_THROW(entropy_with_error(many, opt), ConfigError);
}

TEST(EnsembleIo, RoundTrip) {
  const ModelConfig model = UrnModel{30, 30, 20};
  const auto ens = sample_trajectories(model, 100, 6);
  std::stringstream buf;
  write_ensemble(buf, ens);
  const auto back = read_ensemble(buf, model);
  EXPECT_EQ(back.data, ens.data);
  EXPECT_EQ(back.seed, 6u);
  EXPECT_EQ(back.count, 100u);

  std::stringstream again;
  write_ensemble(again, ens);
  EXPECT_THROW(read_ensemble(again, UrnModel{30, 30, 21}), Error);
  std::stringstream junk("HENZ....");
  EXPECT_THROW(read_ensemble(junk, model), Error);
  std::string bytes;
  {
    std::stringstream s;
    write_ensemble(s, ens);
    bytes = s.str();
  }
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_ensemble(truncated, model), Error);

  const auto path = (std::filesystem::temp_directory_path() / "histent_roundtrip.bin").string();
  write_ensemble_file(path, ens);
  EXPECT_EQ(read_ensemble_file(path, model).data, ens.data);
  std::filesystem::remove(path);
}

TEST(EnsembleIo, ModelHashTracksParameters) {
  EXPECT_EQ(model_hash(RandomWalkModel{}), model_hash(RandomWalkModel{}));
  EXPECT_NE(model_hash(RandomWalkModel{}), model_hash(RandomWalkModel{256, 64, 0}));
  EXPECT_NE(model_hash(UrnModel{}), model_hash(RandomWalkModel{}));
}

// Var x(t) for dp = -p dt + dW from rest: t - 2(1 - e^-t) + (1 - e^-2t)/2.
TEST(FreeBrownian, VarianceMatchesOrnsteinUhlenbeckIntegral) {
  const BrownianParams params{0.5, 1.0, 1.0};
  const double times[] = {1.0, 2.0, 4.0};
  const auto var = free_brownian_variance(params, 0.01, times, 40000, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const double t = times[i];
    const double expected = t - 2.0 * (1.0 - std::exp(-t)) + 0.5 * (1.0 - std::exp(-2.0 * t));
    EXPECT_NEAR(var[i] / expected, 1.0, 0.04) << "t = " << t;
  }
  EXPECT_EQ(free_brownian_variance(params, 0.01, times, 2000, 3, 1), free_brownian_variance(params, 0.01, times, 2000, 3, 8));
  const double bad[] = {0.015};
  EXPECT_THROW(free_brownian_variance(params, 0.01, bad, 100, 1), ConfigError);
}
