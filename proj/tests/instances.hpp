#pragma once

// Seeded small Markov-chain instances with random grainings.

#include <algorithm>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "histent/history_core.hpp"
#include "histent/processes.hpp"

namespace testing_support {

struct Instance {
  int V = 2;
  int N = 1;
  Eigen::MatrixXd K;
  Eigen::VectorXd rho0;
  std::vector<int> times;               // 1-based coarse times
  std::vector<std::vector<int>> maps;   // cell -> bin at each coarse time

  histent::StateSpace space() const { return histent::StateSpace::lattice(static_cast<std::size_t>(V), histent::Boundary::open); }
  histent::TransitionLaw law() const { return histent::TransitionLaw(histent::MarkovKernel{K, 1.0}); }
  histent::InitialCondition initial() const { return histent::InitialCondition::distribution(rho0); }
  histent::CoarseGraining graining() const {
    const auto s = space();
    std::vector<histent::SpatialPartition> parts;
    for (const auto& m : maps) parts.push_back(histent::SpatialPartition::from_cell_map(s, m));
    return histent::CoarseGraining(histent::TimeGrid(N, 1.0, times), std::move(parts));
  }
};

inline Eigen::MatrixXd random_stochastic(int V, std::mt19937_64& rng, double zero_chance) {
  std::exponential_distribution<double> expo(1.0);
  std::bernoulli_distribution zero(zero_chance);
  std::uniform_int_distribution<int> pick(0, V - 1);
  Eigen::MatrixXd K(V, V);
  for (int y = 0; y < V; ++y) {
    for (int x = 0; x < V; ++x) K(x, y) = zero(rng) ? 0.0 : expo(rng);
    if (K.col(y).sum() == 0.0) K(pick(rng), y) = 1.0;
    K.col(y) /= K.col(y).sum();
  }
  return K;
}

// Cell -> bin map with exactly `bins` non-empty bins labelled 0..bins-1.
inline std::vector<int> random_map(int V, int bins, std::mt19937_64& rng) {
  std::vector<int> cells(static_cast<std::size_t>(V));
  for (int i = 0; i < V; ++i) cells[static_cast<std::size_t>(i)] = i;
  std::shuffle(cells.begin(), cells.end(), rng);
  std::uniform_int_distribution<int> any(0, bins - 1);
  std::vector<int> map(static_cast<std::size_t>(V));
  for (int i = 0; i < V; ++i) map[static_cast<std::size_t>(cells[static_cast<std::size_t>(i)])] = i < bins ? i : any(rng);
  return map;
}

// `common_bins` > 0 forces that bin count at every coarse time.
inline Instance random_instance(std::mt19937_64& rng, int max_V = 6, int max_N = 4, int common_bins = 0,
                                int min_V = 2) {
  Instance in;
  in.V = std::uniform_int_distribution<int>(min_V, max_V)(rng);
  in.N = std::uniform_int_distribution<int>(1, max_N)(rng);
  in.K = random_stochastic(in.V, rng, std::uniform_real_distribution<double>(0.0, 0.5)(rng));
  if (std::bernoulli_distribution(0.5)(rng)) {
    in.rho0 = Eigen::VectorXd::Zero(in.V);
    in.rho0[std::uniform_int_distribution<int>(0, in.V - 1)(rng)] = 1.0;
  } else {
    in.rho0 = random_stochastic(in.V, rng, 0.2).col(0);
  }
  std::bernoulli_distribution keep(0.6);
  for (int t = 1; t <= in.N; ++t) {
    if (keep(rng)) in.times.push_back(t);
  }
  if (in.times.empty()) in.times.push_back(std::uniform_int_distribution<int>(1, in.N)(rng));
  for (std::size_t k = 0; k < in.times.size(); ++k) {
    const int bins = common_bins > 0 ? std::min(common_bins, in.V) : std::uniform_int_distribution<int>(1, in.V)(rng);
    in.maps.push_back(random_map(in.V, bins, rng));
  }
  return in;
}

}  // namespace testing_support
