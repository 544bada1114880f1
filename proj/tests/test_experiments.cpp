#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "histent/error.hpp"
#include "histent/experiments.hpp"
#include "oracles.hpp"

using namespace histent;

TEST(Axes, Defaults) {
  EXPECT_EQ(default_dx_axis(StateSpace::lattice(16)), (std::vector<double>{1, 2, 4, 8, 16}));
  const auto dx = default_dx_axis(StateSpace::continuum(20.0, 200, -10.0));
  ASSERT_EQ(dx.size(), 5u);
  EXPECT_NEAR(dx[3], 0.8, 1e-12);
  EXPECT_DOUBLE_EQ(dx.back(), 20.0);
  EXPECT_EQ(default_dt_axis(128).size(), 8u);
  EXPECT_EQ(default_dt_axis(12), (std::vector<int>{1, 2, 4}));
}

TEST(GrainingSweep, ExactRowsMatchDirectComputation) {
  const RandomWalkModel model{16, 8, 0};
  SweepOptions opt;
  opt.method = Method::exact;
  opt.dx = {1, 3, 4};
  opt.dt = {1, 2, 8};
  const auto sweep = sweep_entropy_vs_graining(model, opt);
  EXPECT_EQ(sweep.axis_names, (std::vector<std::string>{"dx", "dt", "log2_dx", "log2_dt"}));
  ASSERT_EQ(sweep.rows.size(), 9u);
  const auto space = model_space(model);
  for (const auto& row : sweep.rows) {
    if (row.axes[0] == 3.0) {
      EXPECT_FALSE(row.feasible);
      EXPECT_EQ(row.method, "infeasible");
      continue;
    }
    const auto cg = CoarseGraining::uniform(space, 8, 1.0, row.axes[0], static_cast<int>(row.axes[1]));
    const auto terms = entropy_terms(exact_history_probs(*model_law(model), model_initial(model), cg, space));
    EXPECT_NEAR(row.s_hs, terms.s_hs(), 1e-12);
    EXPECT_NEAR(row.d_lp, 32.0 - terms.s_hs(), 1e-12);
    EXPECT_EQ(row.method, "exact");
  }
  EXPECT_NEAR(sweep.find({1, 1, 0, 0})->s_hs, 8.0, 1e-12);
}

TEST(GrainingSweep, MonteCarloTracksExact) {
  const RandomWalkModel model{16, 8, 0};
  SweepOptions opt;
  opt.dx = {4};
  opt.dt = {2};
  opt.count = 100000;
  opt.bootstrap = 50;
  const auto mc = sweep_entropy_vs_graining(model, opt);
  opt.method = Method::exact;
  const auto ex = sweep_entropy_vs_graining(model, opt);
  EXPECT_NEAR(mc.rows[0].s_hs, ex.rows[0].s_hs, 0.02);
  ASSERT_TRUE(mc.rows[0].ci_lo && mc.rows[0].ci_hi);
  EXPECT_LT(*mc.rows[0].ci_lo, *mc.rows[0].ci_hi);
  EXPECT_EQ(mc.rows[0].method, "monte-carlo");
  EXPECT_TRUE(mc.provenance.contains("seed"));
}

TEST(GrainingSweep, BrownianNeedsMonteCarlo) {
  SweepOptions opt;
  opt.method = Method::exact;
  EXPECT_THROW(sweep_entropy_vs_graining(BrownianModel{}, opt), ConfigError);
}

// Urn history entropy from matrix powers and a full enumeration of occupation sequences.
double urn_oracle(int balls, int n0, int N, const std::vector<int>& times) {
  const int R = balls / 2;
  const Eigen::MatrixXd P = oracle::urn_matrix(R);
  auto power = [&](int j) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(balls + 1, balls + 1);
    for (int i = 0; i < j; ++i) M = P * M;
    return M;
  };
  double s = 0.0;
  std::vector<int> seq(times.size());
  std::function<void(std::size_t, int, double)> walk = [&](std::size_t k, int prev, double p) {
    if (k == times.size()) {
      if (p > 0.0) {
        s -= p * std::log2(p);
        for (int n : seq) s += p * oracle::log2_binomial(balls, n);
      }
      return;
    }
    const Eigen::MatrixXd M = power(times[k] - (k ? times[k - 1] : 0));
    for (int n = 0; n <= balls; ++n) {
      seq[k] = n;
      walk(k + 1, n, p * M(n, prev));
    }
  };
  walk(0, n0, 1.0);
  return s + (N - static_cast<int>(times.size())) * balls;
}

TEST(Urn, HistoryTermsMatchEnumeration) {
  for (const auto& times : std::vector<std::vector<int>>{{0}, {3}, {1, 2}, {2, 5, 6}, {0, 4, 9}}) {
    EXPECT_NEAR(urn_history_terms(UrnModel{10, 7, 3}, times).s_hs(), urn_oracle(10, 7, 3, times), 1e-9);
  }
}

TEST(Urn, ReferenceValues) {
  const UrnModel urn{30, 30, 3};
  const auto surface = urn_two_time_surface(urn, {0, 2}, {1, 2});
  EXPECT_NEAR(surface.find({0, 1})->s_hs, 34.9069, 5e-5);
  EXPECT_EQ(surface.axis_names, (std::vector<std::string>{"t1", "m"}));
  const auto curves = urn_multi_time_curves(urn, {0, 1000}, {1, 2, 3});
  EXPECT_NEAR(curves.find({1, 0})->s_hs, 60.0, 1e-9);
  EXPECT_NEAR(curves.find({2, 0})->s_hs, 34.906891, 1e-6);
  EXPECT_NEAR(curves.find({3, 0})->s_hs, 13.590442, 1e-6);
  EXPECT_NEAR(curves.find({1, 1000})->s_hs, 89.0, 1e-6);
  EXPECT_NEAR(curves.find({2, 1000})->s_hs, 86.475137, 1e-6);
  EXPECT_NEAR(curves.find({3, 1000})->s_hs, 83.950275, 1e-6);
  EXPECT_THROW(urn_two_time_surface(urn, {-1}, {1}), ConfigError);
}

TEST(Translation, UrnEntropyRisesFromOrderedStart) {
  const auto r = second_law_translation(UrnModel{30, 30, 3}, {0, 1}, std::nullopt, {0, 2, 4, 8, 16, 32, 64});
  EXPECT_EQ(r.axis_names, (std::vector<std::string>{"T"}));
  for (std::size_t i = 1; i < r.rows.size(); ++i) EXPECT_GT(r.rows[i].s_hs, r.rows[i - 1].s_hs);
  EXPECT_THROW(second_law_translation(UrnModel{}, {0}, 1.0, {0}), ConfigError);
}

TEST(Translation, LatticeModelsStayOnTheGrid) {
  const RandomWalkModel model{16, 8, 0};
  const auto r = second_law_translation(model, {1, 2}, 4.0, {0, 2, 6});
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_GE(r.rows[2].s_hs, r.rows[0].s_hs);
  EXPECT_THROW(second_law_translation(model, {1, 2}, 4.0, {7}), ConfigError);
}

TEST(Writers, CsvLayout) {
  SweepResult r;
  r.kind = "graining";
  r.axis_names = {"dx", "dt"};
  r.provenance = {{"seed", 3}};
  SweepRow ok;
  ok.axes = {1, 2};
  ok.s_hs = 1.0 / 3.0;
  ok.s_dimensionless = -2;
  ok.d_lp = 2;
  ok.method = "exact";
  SweepRow bad;
  bad.axes = {3, 2};
  bad.feasible = false;
  bad.method = "infeasible";
  bad.note = "dx does not divide V";
  r.rows = {ok, bad};
  std::ostringstream out;
  write_csv(out, r);
  EXPECT_EQ(out.str(),
            "# seed: 3\n"
            "dx,dt,S_hs_bits,S_dimensionless_bits,D_LP_bits,ci_lo,ci_hi,method\n"
            "1,2,0.333333333333,-2,2,,,exact\n"
            "3,2,,,,,,infeasible\n");
  const auto j = to_json(r);
  EXPECT_EQ(j["units"], "bits");
  EXPECT_EQ(j["rows"][1]["note"], "dx does not divide V");
  EXPECT_FALSE(j["rows"][1].contains("S_hs_bits"));
}
