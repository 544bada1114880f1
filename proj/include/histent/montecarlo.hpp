#pragma once

// Trajectory ensembles, class counting and plug-in entropy estimates.
//
// Trajectory i draws from an mt19937_64 seeded from (seed, i) only, so an
// ensemble is bit-identical for any number of workers.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "histent/entropy.hpp"
#include "histent/history_core.hpp"
#include "histent/processes.hpp"

namespace histent {

// Generator for stream `index` of a master seed.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index);

// FNV-1a of the canonical model JSON.
std::uint64_t model_hash(const ModelConfig& model);

// 0 means hardware concurrency.
unsigned resolve_workers(unsigned workers);

struct TrajectoryEnsemble {
  ModelConfig model;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  int steps = 0;
  std::size_t cells = 0;
  std::vector<std::uint32_t> data;  // count x steps, row-major

  std::span<const std::uint32_t> history(std::size_t i) const {
    return {data.data() + i * static_cast<std::size_t>(steps), static_cast<std::size_t>(steps)};
  }
};

TrajectoryEnsemble sample_trajectories(const ModelConfig& model, std::size_t count, std::uint64_t seed,
                                       unsigned workers = 0);

// Distinct classes in order of first occurrence.
struct ClassCounts {
  std::vector<std::size_t> representative;  // index of the first trajectory in the class
  std::vector<std::uint64_t> counts;
  std::vector<double> log2_volume;
  std::size_t total = 0;
  double log2_trace_identity = 0.0;

  std::size_t distinct() const { return counts.size(); }
};

ClassCounts count_classes(const TrajectoryEnsemble& ensemble, const CoarseGraining& cg, const StateSpace& space);

// Plug-in frequencies; unobserved classes are omitted.
HistoryDistribution estimate_distribution(const TrajectoryEnsemble& ensemble, const CoarseGraining& cg,
                                          const StateSpace& space);

EntropyTerms plug_in_terms(const ClassCounts& counts, bool miller_madow = false);

struct EstimateOptions {
  int resamples = 200;
  std::uint64_t seed = 0;
  double confidence = 0.95;
  bool miller_madow = false;
};

struct EntropyEstimate {
  EntropyTerms terms;
  double ci_lo = 0.0;  // S_hs bounds
  double ci_hi = 0.0;
  std::size_t distinct = 0;
  std::size_t count = 0;
  bool bias_warning = false;  // distinct classes > count / 10
};

EntropyEstimate entropy_with_error(const ClassCounts& counts, const EstimateOptions& options = {});
EntropyEstimate entropy_with_error(const TrajectoryEnsemble& ensemble, const CoarseGraining& cg,
                                   const StateSpace& space, const EstimateOptions& options = {});

// Binary stream: "HENS", u32 version, u64 model hash, u64 seed, u64 count,
// u32 steps, u32 label width (2 or 4), then count*steps little-endian cell indices.
void write_ensemble(std::ostream& out, const TrajectoryEnsemble& ensemble);
TrajectoryEnsemble read_ensemble(std::istream& in, const ModelConfig& model);
void write_ensemble_file(const std::string& path, const TrajectoryEnsemble& ensemble);
TrajectoryEnsemble read_ensemble_file(const std::string& path, const ModelConfig& model);

// Var(x(t)) of the unconfined Brownian particle at each requested time
// (multiples of eta), from `count` Euler-Maruyama trajectories started at rest.
std::vector<double> free_brownian_variance(const BrownianParams& params, double eta, std::span<const double> times,
                                           std::size_t count, std::uint64_t seed, unsigned workers = 0);

}  // namespace histent
