#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "histent/error.hpp"
#include "histent/history_core.hpp"
#include "instances.hpp"
#include "oracles.hpp"

using namespace histent;

TEST(StateSpace, LatticeHasUnitCells) {
  const auto s = StateSpace::lattice(8);
  EXPECT_EQ(s.cell_count(), 8u);
  EXPECT_DOUBLE_EQ(s.log2_volume(), 3.0);
  EXPECT_DOUBLE_EQ(s.log2_cell_volume(5), 0.0);
  EXPECT_THROW(StateSpace::lattice(0), ConfigError);
}

TEST(StateSpace, ContinuumCellLookup) {
  const auto open = StateSpace::continuum(2.0, 4, -1.0, Boundary::open);
  EXPECT_EQ(open.cell_of(-1.0), 0u);
  EXPECT_EQ(open.cell_of(-0.5), 1u);
  EXPECT_EQ(open.cell_of(0.99), 3u);
  EXPECT_EQ(open.cell_of(1.0), 3u);
  EXPECT_THROW(open.cell_of(1.5), Error);
  EXPECT_THROW(open.cell_of(std::nan("")), Error);
  EXPECT_DOUBLE_EQ(open.cell_center(0), -0.75);
  EXPECT_DOUBLE_EQ(open.log2_cell_volume(2), -1.0);

  const auto ring = StateSpace::continuum(2.0, 4, -1.0, Boundary::periodic);
  EXPECT_EQ(ring.cell_of(1.0), 0u);
}

TEST(StateSpace, WeightedVolumeIsTotalMultiplicity) {
  // Binomial weights of 4 balls sum to 2^4.
  std::vector<double> w;
  for (int n = 0; n <= 4; ++n) w.push_back(oracle::log2_binomial(4, n));
  const auto s = StateSpace::weighted(w);
  EXPECT_NEAR(s.log2_volume(), 4.0, 1e-12);
  EXPECT_FALSE(s.uniform_cells());
}

TEST(TimeGrid, UniformAndValidation) {
  const auto g = TimeGrid::uniform(8, 0.5, 2);
  EXPECT_EQ(g.coarse_times(), (std::vector<int>{2, 4, 6, 8}));
  EXPECT_DOUBLE_EQ(g.duration(), 4.0);
  try {
    TimeGrid::uniform(8, 1.0, 3);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key, "dt");
  }
  EXPECT_THROW(TimeGrid(4, 1.0, {2, 2}), ConfigError);
  EXPECT_THROW(TimeGrid(4, 1.0, {5}), ConfigError);
  EXPECT_THROW(TimeGrid(4, 1.0, {0}), ConfigError);
}

TEST(SpatialPartition, UniformBinsAndMerging) {
  const auto s = StateSpace::continuum(4.0, 16, 0.0);
  const auto p = SpatialPartition::uniform(s, 1.0);
  EXPECT_EQ(p.bin_count(), 4u);
  EXPECT_EQ(p.cells_in(2).size(), 4u);
  EXPECT_NEAR(p.log2_bin_volume(1), 0.0, 1e-12);
  const auto q = p.merged(2);
  EXPECT_EQ(q.bin_count(), 2u);
  EXPECT_EQ(q.bin_of(7), 0);
  EXPECT_EQ(q.bin_of(8), 1);
  EXPECT_NEAR(q.log2_bin_volume(0), 1.0, 1e-12);
  EXPECT_THROW(p.merged(3), ConfigError);
  EXPECT_THROW(SpatialPartition::uniform(s, 0.3), ConfigError);
  EXPECT_THROW(SpatialPartition::uniform(s, 1.5), ConfigError);
  EXPECT_TRUE(SpatialPartition::finest(s).is_finest());
}

TEST(SpatialPartition, CellMapRejectsGaps) {
  const auto s = StateSpace::lattice(3);
  EXPECT_THROW(SpatialPartition::from_cell_map(s, {0, 2, 2}), ConfigError);
  EXPECT_THROW(SpatialPartition::from_cell_map(s, {0, 1}), ConfigError);
  const auto p = SpatialPartition::from_cell_map(s, {1, 0, 1});
  EXPECT_NEAR(p.log2_bin_volume(1), 1.0, 1e-12);
}

// Counting fine histories class by class.
TEST(ProjectorVolume, MatchesEnumeration) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto in = testing_support::random_instance(rng, 5, 4);
    const auto cg = in.graining();
    std::map<std::vector<int>, double> counted;
    std::vector<int> x;
    for (std::size_t i = 0; i < oracle::history_count(in.V, in.N); ++i) {
      oracle::decode(i, in.V, in.N, x);
      counted[oracle::class_of(x, in.times, in.maps)] += 1.0;
    }
    const auto classes = enumerate_classes(cg);
    EXPECT_EQ(classes.size(), counted.size());
    for (const auto& [label, count] : counted) {
      EXPECT_NEAR(projector_volume(cg, label, in.space()), std::log2(count), 1e-12);
    }
  }
}

TEST(ProjectorVolume, ContinuumUsesPhysicalVolume) {
  const auto s = StateSpace::continuum(2.0, 20, 0.0);
  const auto cg = CoarseGraining::uniform(s, 3, 0.1, 0.5, 3);
  // One coarse time: bin width 0.5 times V^2 for the two free fine times.
  const int label[] = {1};
  EXPECT_NEAR(projector_volume(cg, label, s), std::log2(0.5 * 4.0), 1e-12);
  const int bad[] = {4};
  EXPECT_THROW(projector_volume(cg, bad, s), Error);
}

TEST(Classify, AgreesWithOracleLabels) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto in = testing_support::random_instance(rng, 4, 4);
    const auto cg = in.graining();
    std::vector<int> x;
    for (std::size_t i = 0; i < oracle::history_count(in.V, in.N); ++i) {
      oracle::decode(i, in.V, in.N, x);
      std::vector<std::uint32_t> cells(x.begin(), x.end());
      EXPECT_EQ(classify(cells, cg), oracle::class_of(x, in.times, in.maps));
    }
  }
}

TEST(Classify, ContinuumPositions) {
  const auto s = StateSpace::continuum(4.0, 8, -2.0);
  const auto cg = CoarseGraining::uniform(s, 2, 1.0, 1.0, 1);
  const double xs[] = {-1.9, 1.2};
  EXPECT_EQ(classify_positions(xs, s, cg), (ClassLabel{0, 3}));
  const double outside[] = {-1.9, 2.5};
  EXPECT_THROW(classify_positions(outside, s, cg), Error);
}

// Every fine history lands in the coarsened class predicted by coarsen_label.
TEST(Coarsen, LabelsAreUnionsOfFineClasses) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto in = testing_support::random_instance(rng, 6, 4, 2, 2);
    const auto cg = in.graining();
    const int n = static_cast<int>(cg.coarse_count());
    std::vector<std::pair<CoarsenMode, int>> moves = {{CoarsenMode::merge_bins, 2}};
    if (n % 2 == 0) moves.emplace_back(CoarsenMode::drop_times, 2);
    moves.emplace_back(CoarsenMode::drop_times, n);
    for (const auto& [mode, f] : moves) {
      const auto coarse = coarsen(cg, mode, f);
      std::vector<int> x;
      for (std::size_t i = 0; i < oracle::history_count(in.V, in.N); ++i) {
        oracle::decode(i, in.V, in.N, x);
        std::vector<std::uint32_t> cells(x.begin(), x.end());
        EXPECT_EQ(classify(cells, coarse), coarsen_label(classify(cells, cg), cg, mode, f));
      }
    }
  }
}

TEST(Coarsen, UniformMetadataFollows) {
  const auto s = StateSpace::lattice(16);
  const auto cg = CoarseGraining::uniform(s, 8, 1.0, 2.0, 2);
  const auto wider = coarsen(cg, CoarsenMode::merge_bins, 4);
  EXPECT_EQ(wider.dx(), 8.0);
  const auto sparser = coarsen(cg, CoarsenMode::drop_times, 2);
  EXPECT_EQ(sparser.dt(), 4);
  EXPECT_EQ(sparser.grid().coarse_times(), (std::vector<int>{4, 8}));
  EXPECT_THROW(coarsen(cg, CoarsenMode::drop_times, 3), ConfigError);
}

TEST(Graining, BranchDependentPartitions) {
  const auto s = StateSpace::lattice(4);
  const auto halves = SpatialPartition::uniform(s, 2.0);
  const auto finest = SpatialPartition::finest(s);
  // After bin 0 at the first time the second time is resolved cell by cell.
  std::vector<CoarseGraining::BranchMap> branches(2);
  branches[1].emplace(ClassLabel{0}, finest);
  const CoarseGraining cg(TimeGrid(3, 1.0, {1, 2}), {halves, halves}, branches);
  EXPECT_TRUE(cg.branch_dependent());
  const int p0[] = {0}, p1[] = {1};
  EXPECT_EQ(cg.partition_at(1, p0).bin_count(), 4u);
  EXPECT_EQ(cg.partition_at(1, p1).bin_count(), 2u);

  const auto classes = enumerate_classes(cg);
  EXPECT_EQ(classes.size(), 6u);
  std::vector<double> vols;
  for (const auto& c : classes) vols.push_back(projector_volume(cg, c, s));
  EXPECT_NEAR(log2_sum_exp2(vols), 3 * 2.0, 1e-12);
  const std::uint32_t h[] = {1, 3, 0};
  EXPECT_EQ(classify(h, cg), (ClassLabel{0, 3}));
  EXPECT_THROW(coarsen(cg, CoarsenMode::merge_bins, 2), ConfigError);
}

TEST(Graining, FromJson) {
  const auto s = StateSpace::continuum(4.0, 8, 0.0);
  const auto cg = graining_from_json({{"dx", 1.0}, {"dt", 2}}, s, 4, 0.5);
  EXPECT_EQ(cg.grid().coarse_times(), (std::vector<int>{2, 4}));
  EXPECT_EQ(cg.default_partition(0).bin_count(), 4u);
  const auto by_times = graining_from_json({{"times", {1, 3}}}, s, 4, 0.5);
  EXPECT_EQ(by_times.grid().coarse_times(), (std::vector<int>{1, 3}));
  EXPECT_TRUE(by_times.default_partition(0).is_finest());
  EXPECT_EQ(graining_from_json(cg.to_json(), s, 4, 0.5).grid().coarse_times(), cg.grid().coarse_times());
  try {
    graining_from_json({{"dz", 1.0}}, s, 4, 0.5);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key, "graining.dz");
  }
  EXPECT_THROW(graining_from_json({{"dt", 1.5}}, s, 4, 0.5), ConfigError);
}

TEST(HistoryDistribution, ValidateCatchesBadTables) {
  HistoryDistribution hd;
  hd.log2_trace_identity = 4.0;
  hd.classes = {{{0}, 0.5, 3.0}, {{1}, 0.5, 3.0}};
  EXPECT_NO_THROW(hd.validate());
  hd.classes[1].probability = 0.6;
  EXPECT_THROW(hd.validate(), InvariantViolation);
  hd.classes[1].probability = 0.5;
  hd.classes[1].log2_volume = 5.0;
  EXPECT_THROW(hd.validate(), InvariantViolation);
}

TEST(MergeClasses, AddsProbabilitiesAndVolumes) {
  const auto s = StateSpace::lattice(2);
  const CoarseGraining cg(TimeGrid(2, 1.0, {1, 2}), {SpatialPartition::finest(s), SpatialPartition::finest(s)});
  HistoryDistribution hd;
  hd.log2_trace_identity = 2.0;
  hd.fine_times = 2;
  hd.coarse_times = 2;
  hd.classes = {{{0, 0}, 0.5, 0.0}, {{0, 1}, 0.25, 0.0}, {{1, 1}, 0.25, 0.0}};
  // {1,0} has zero probability but still adds its volume to group 1.
  const std::map<ClassLabel, int> group = {{{0, 0}, 0}, {{0, 1}, 1}, {{1, 0}, 1}, {{1, 1}, 1}};
  const auto merged = merge_classes(hd, cg, s, group);
  ASSERT_EQ(merged.classes.size(), 2u);
  double p1 = 0.0, v1 = 0.0;
  for (const auto& c : merged.classes) {
    if (c.label == ClassLabel{1}) {
      p1 = c.probability;
      v1 = c.log2_volume;
    }
  }
  EXPECT_NEAR(p1, 0.5, 1e-15);
  EXPECT_NEAR(v1, std::log2(3.0), 1e-12);
}

TEST(Log2SumExp2, StableForLargeExponents) {
  const double v[] = {1000.0, 1000.0};
  EXPECT_NEAR(log2_sum_exp2(v), 1001.0, 1e-12);
  const double w[] = {-1e300, 3.0};
  EXPECT_NEAR(log2_sum_exp2(w), 3.0, 1e-12);
}
