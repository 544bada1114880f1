#pragma once

// Coarse-graining sweeps, urn studies and time-translation runs, with CSV and
// JSON writers.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "histent/entropy.hpp"
#include "histent/processes.hpp"

namespace histent {

enum class Method { exact, monte_carlo };

struct SweepRow {
  std::vector<double> axes;
  bool feasible = true;
  double s_hs = 0.0;
  double s_dimensionless = 0.0;
  double d_lp = 0.0;
  std::optional<double> ci_lo;
  std::optional<double> ci_hi;
  std::string method;  // "exact", "monte-carlo" or "infeasible"
  std::optional<std::size_t> distinct_classes;
  bool bias_warning = false;
  std::string note;
};

struct SweepResult {
  std::string kind;  // "graining", "urn-surface", "urn-curves", "translation"
  std::vector<std::string> axis_names;
  std::vector<SweepRow> rows;
  nlohmann::json provenance = nlohmann::json::object();

  // First row whose axes equal `axes`, or nullptr.
  const SweepRow* find(const std::vector<double>& axes) const;
};

struct SweepOptions {
  std::vector<double> dx;  // empty: powers of two times the finest cell, plus V
  std::vector<int> dt;     // empty: powers of two dividing N
  Method method = Method::monte_carlo;
  std::size_t count = 100000;
  std::uint64_t seed = 1;
  unsigned workers = 0;
  int bootstrap = 0;  // resamples for CIs; 0 disables
  bool miller_madow = false;
  std::size_t class_cap = 1000000;
};

std::vector<double> default_dx_axis(const StateSpace& space);
std::vector<int> default_dt_axis(int fine_times);

// Axes (dx, dt, log2 dx, log2 dt). One ensemble is shared by every point.
SweepResult sweep_entropy_vs_graining(const ModelConfig& model, const SweepOptions& options);

// Exact entropy terms of the urn history with occupation numbers recorded at
// `times` (t >= 0, forward from n0 at t = 0); N = model.steps supplies the
// (N - k) 2R constant.
EntropyTerms urn_history_terms(const UrnModel& model, const std::vector<int>& times);

// Two-time histories at (t1, t1 + m). Axes (t1, m).
SweepResult urn_two_time_surface(const UrnModel& model, const std::vector<int>& t1s, const std::vector<int>& ms);

// k-time histories at t1, t1 + 1, ..., t1 + k - 1. Axes (k, t1).
SweepResult urn_multi_time_curves(const UrnModel& model, const std::vector<int>& t1s, const std::vector<int>& ks);

// S_hs of the history set with times base_times + T, for each T. Urn models
// run at raw times; other models need an exact law and translated times
// within the fine grid. `dx` defaults to the finest cell. Axis (T).
SweepResult second_law_translation(const ModelConfig& model, const std::vector<int>& base_times,
                                   std::optional<double> dx, const std::vector<int>& shifts);

// '#'-prefixed provenance lines, a header row, then one row per point; numbers
// printed with %.12g, infeasible fields left empty.
void write_csv(std::ostream& out, const SweepResult& result);
nlohmann::json to_json(const SweepResult& result);

}  // namespace histent
