#pragma once

// Entropy measures of a coarse-grained history distribution. All values in bits.

#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "histent/history_core.hpp"
#include "histent/processes.hpp"

namespace histent {

// The two sums every measure is built from.
struct EntropyTerms {
  double shannon = 0.0;              // -sum p log2 p
  double volume = 0.0;               // sum p log2 Tr(P_alpha)
  double log2_trace_identity = 0.0;  // N log2 V

  double s_hs() const { return shannon + volume; }
  double dimensionless() const { return s_hs() - log2_trace_identity; }
  double lp_depth() const { return log2_trace_identity - s_hs(); }
  double isham_linden(double x) const { return shannon + x * (volume - log2_trace_identity); }
};

struct EntropyReport {
  double s_hs = 0.0;
  double s_hs_dimensionless = 0.0;
  double d_lp = 0.0;
  std::vector<std::pair<double, double>> isham_linden;  // (x, I_x)
  std::optional<double> s_sbs;
  double log2_trace_identity = 0.0;

  nlohmann::json to_json() const;
};

// -sum p log2 p; entries below -1e-12 throw.
double entropy_functional(std::span<const double> dist);

EntropyTerms entropy_terms(const HistoryDistribution& hd);
double history_space_entropy(const HistoryDistribution& hd);
double lp_depth(const HistoryDistribution& hd);
double isham_linden_entropy(const HistoryDistribution& hd, double x);
// N log2 V.
double max_entropy_value(const StateSpace& space, const TimeGrid& grid);

// Branch-conditional sum of single-time Jaynes entropies, from a joint class
// table produced under `cg`.
double step_by_step_entropy(const HistoryDistribution& hd, const CoarseGraining& cg);
double step_by_step_entropy(const TransitionLaw& law, const InitialCondition& rho0, const CoarseGraining& cg,
                            const StateSpace& space, const ExactOptions& options = {});

// S_hs terms for a graining whose partitions are all the finest cells, by the
// Markov chain rule (no class enumeration): the Shannon term is
// H(X_{t_1}) + sum_k E[H(X_{t_k} | X_{t_{k-1}})].
EntropyTerms fine_cell_entropy(const TransitionLaw& law, const InitialCondition& rho0, const CoarseGraining& cg,
                               const StateSpace& space);

EntropyReport make_report(const EntropyTerms& terms, std::span<const double> xs = {},
                          std::optional<double> s_sbs = std::nullopt);

}  // namespace histent
