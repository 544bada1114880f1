#include "histent/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "histent/error.hpp"
#include "histent/montecarlo.hpp"
#include "parallel.hpp"

namespace histent {

namespace {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

SweepRow terms_row(std::vector<double> axes, const EntropyTerms& t, std::string method) {
  SweepRow row;
  row.axes = std::move(axes);
  row.s_hs = t.s_hs();
  row.s_dimensionless = t.dimensionless();
  row.d_lp = t.lp_depth();
  row.method = std::move(method);
  return row;
}

SweepRow infeasible_row(std::vector<double> axes, std::string note) {
  SweepRow row;
  row.axes = std::move(axes);
  row.feasible = false;
  row.method = "infeasible";
  row.note = std::move(note);
  return row;
}

const SpatialPartition& partition_for(std::map<double, SpatialPartition>& cache, const StateSpace& space,
                                      double dx) {
  auto it = cache.find(dx);
  if (it == cache.end()) it = cache.emplace(dx, SpatialPartition::uniform(space, dx)).first;
  return it->second;
}

}  // namespace

const SweepRow* SweepResult::find(const std::vector<double>& axes) const {
  for (const auto& r : rows) {
    if (r.axes == axes) return &r;
  }
  return nullptr;
}

std::vector<double> default_dx_axis(const StateSpace& space) {
  std::vector<double> out;
  const std::size_t cells = space.cell_count();
  for (std::size_t f = 1; f <= cells; f *= 2) {
    if (cells % f == 0) out.push_back(static_cast<double>(f) * space.cell_width());
  }
  if (out.empty() || std::abs(out.back() - space.volume()) > 1e-9 * space.volume()) out.push_back(space.volume());
  return out;
}

std::vector<int> default_dt_axis(int fine_times) {
  std::vector<int> out;
  for (int d = 1; d <= fine_times; d *= 2) {
    if (fine_times % d == 0) out.push_back(d);
  }
  return out;
}

SweepResult sweep_entropy_vs_graining(const ModelConfig& model, const SweepOptions& options) {
  const StateSpace space = model_space(model);
  const int N = model_steps(model);
  const double eta = model_eta(model);
  const std::vector<double> dxs = options.dx.empty() ? default_dx_axis(space) : options.dx;
  const std::vector<int> dts = options.dt.empty() ? default_dt_axis(N) : options.dt;

  SweepResult result;
  result.kind = "graining";
  result.axis_names = {"dx", "dt", "log2_dx", "log2_dt"};
  result.provenance = {{"model", model_to_json(model)},
                       {"method", options.method == Method::exact ? "exact" : "monte-carlo"},
                       {"bootstrap", options.bootstrap},
                       {"miller_madow", options.miller_madow}};
  if (options.method == Method::monte_carlo) {
    result.provenance["seed"] = options.seed;
    result.provenance["count"] = options.count;
  }

  struct Point {
    double dx;
    int dt;
  };
  std::vector<Point> points;
  for (double dx : dxs) {
    for (int dt : dts) points.push_back({dx, dt});
  }
  result.rows.resize(points.size());

  std::optional<TrajectoryEnsemble> ensemble;
  std::optional<TransitionLaw> law;
  std::optional<InitialCondition> rho0;
  if (options.method == Method::monte_carlo) {
    ensemble = sample_trajectories(model, options.count, options.seed, options.workers);
  } else {
    law = model_law(model);
    if (!law) throw ConfigError("model '" + model_name(model) + "' has no exact law; use Monte Carlo", "method");
    rho0 = model_initial(model);
  }

  detail::parallel_items(points.size(), resolve_workers(options.workers), [&](std::size_t i) {
    const Point& pt = points[i];
    std::vector<double> axes{pt.dx, static_cast<double>(pt.dt), std::log2(pt.dx), std::log2(static_cast<double>(pt.dt))};
    std::optional<CoarseGraining> cg;
    try {
      cg.emplace(CoarseGraining::uniform(space, N, eta, pt.dx, pt.dt));
    } catch (const ConfigError& e) {
      result.rows[i] = infeasible_row(std::move(axes), e.what());
      return;
    }
    if (options.method == Method::exact) {
      try {
        ExactOptions exact;
        exact.class_cap = options.class_cap;
        const auto hd = exact_history_probs(*law, *rho0, *cg, space, exact);
        result.rows[i] = terms_row(std::move(axes), entropy_terms(hd), "exact");
      } catch (const CapacityError& e) {
        result.rows[i] = infeasible_row(std::move(axes), e.what());
      }
      return;
    }
    const ClassCounts counts = count_classes(*ensemble, *cg, space);
    SweepRow row;
    if (options.bootstrap > 0) {
      EstimateOptions est;
      est.resamples = options.bootstrap;
      est.seed = options.seed + 0x9E3779B97F4A7C15ull * (i + 1);
      est.miller_madow = options.miller_madow;
      const EntropyEstimate e = entropy_with_error(counts, est);
      row = terms_row(std::move(axes), e.terms, "monte-carlo");
      row.ci_lo = e.ci_lo;
      row.ci_hi = e.ci_hi;
    } else {
      row = terms_row(std::move(axes), plug_in_terms(counts, options.miller_madow), "monte-carlo");
    }
    row.distinct_classes = counts.distinct();
    row.bias_warning = static_cast<double>(counts.distinct()) > static_cast<double>(counts.total) / 10.0;
    result.rows[i] = std::move(row);
  });
  return result;
}

EntropyTerms urn_history_terms(const UrnModel& model, const std::vector<int>& times) {
  const int R = model.balls / 2;
  if (model.balls < 2 || model.balls % 2 != 0) throw ConfigError("must be a positive even number", "model.balls");
  if (times.empty()) throw ConfigError("need at least one time", "times");
  const StateSpace space = StateSpace::weighted(urn_log2_multiplicities(R));
  const TransitionLaw law(urn_kernel(R));
  const InitialCondition rho0 = InitialCondition::point_cell(space, static_cast<std::size_t>(model.start));
  const SpatialPartition finest = SpatialPartition::finest(space);
  const auto classes = propagate_classes(
      law, rho0.cell_probs, times, [&finest](std::size_t, std::span<const int>) -> const SpatialPartition& { return finest; });
  EntropyTerms t;
  t.log2_trace_identity = static_cast<double>(model.steps) * model.balls;
  t.volume = static_cast<double>(model.steps - static_cast<int>(times.size())) * model.balls;
  for (const auto& c : classes) {
    if (!(c.probability > 0.0)) continue;
    t.shannon -= c.probability * std::log2(c.probability);
    for (int n : c.label) t.volume += c.probability * space.log2_cell_volume(static_cast<std::size_t>(n));
  }
  return t;
}

SweepResult urn_two_time_surface(const UrnModel& model, const std::vector<int>& t1s, const std::vector<int>& ms) {
  SweepResult result;
  result.kind = "urn-surface";
  result.axis_names = {"t1", "m"};
  result.provenance = {{"model", model_to_json(model)}, {"method", "exact"}};
  for (int t1 : t1s) {
    for (int m : ms) {
      if (t1 < 0 || m < 1) throw ConfigError("need t1 >= 0 and m >= 1", "urn");
      result.rows.push_back(terms_row({double(t1), double(m)}, urn_history_terms(model, {t1, t1 + m}), "exact"));
    }
  }
  return result;
}

SweepResult urn_multi_time_curves(const UrnModel& model, const std::vector<int>& t1s, const std::vector<int>& ks) {
  SweepResult result;
  result.kind = "urn-curves";
  result.axis_names = {"k", "t1"};
  result.provenance = {{"model", model_to_json(model)}, {"method", "exact"}};
  for (int k : ks) {
    if (k < 1) throw ConfigError("need k >= 1", "k");
    for (int t1 : t1s) {
      if (t1 < 0) throw ConfigError("need t1 >= 0", "t1");
      std::vector<int> times;
      for (int i = 0; i < k; ++i) times.push_back(t1 + i);
      result.rows.push_back(terms_row({double(k), double(t1)}, urn_history_terms(model, times), "exact"));
    }
  }
  return result;
}

SweepResult second_law_translation(const ModelConfig& model, const std::vector<int>& base_times,
                                   std::optional<double> dx, const std::vector<int>& shifts) {
  if (base_times.empty()) throw ConfigError("need at least one base time", "times");
  SweepResult result;
  result.kind = "translation";
  result.axis_names = {"T"};
  nlohmann::json base = base_times;
  result.provenance = {{"model", model_to_json(model)}, {"method", "exact"}, {"times", base}};
  if (dx) result.provenance["dx"] = *dx;

  if (const auto* urn = std::get_if<UrnModel>(&model)) {
    if (dx) throw ConfigError("urn histories record occupation numbers; dx does not apply", "dx");
    for (int T : shifts) {
      std::vector<int> times;
      for (int t : base_times) times.push_back(t + T);
      if (times.front() < 0) throw ConfigError("translated times must be non-negative", "T");
      result.rows.push_back(terms_row({double(T)}, urn_history_terms(*urn, times), "exact"));
    }
    return result;
  }

  const auto law = model_law(model);
  if (!law) throw ConfigError("model '" + model_name(model) + "' has no exact law", "model");
  const StateSpace space = model_space(model);
  const InitialCondition rho0 = model_initial(model);
  const int N = model_steps(model);
  std::map<double, SpatialPartition> cache;
  const SpatialPartition& part =
      dx ? partition_for(cache, space, *dx) : cache.emplace(0.0, SpatialPartition::finest(space)).first->second;
  for (int T : shifts) {
    std::vector<int> times;
    for (int t : base_times) times.push_back(t + T);
    if (times.back() > N || times.front() < 1) {
      throw ConfigError("translated times leave the fine grid 1.." + std::to_string(N), "T");
    }
    const CoarseGraining cg(TimeGrid(N, model_eta(model), times), std::vector<SpatialPartition>(times.size(), part));
    result.rows.push_back(terms_row({double(T)}, entropy_terms(exact_history_probs(*law, rho0, cg, space)), "exact"));
  }
  return result;
}

void write_csv(std::ostream& out, const SweepResult& result) {
  for (const auto& [key, value] : result.provenance.items()) out << "# " << key << ": " << value.dump() << '\n';
  for (const auto& name : result.axis_names) out << name << ',';
  out << "S_hs_bits,S_dimensionless_bits,D_LP_bits,ci_lo,ci_hi,method\n";
  for (const auto& row : result.rows) {
    for (double a : row.axes) out << format_number(a) << ',';
    if (row.feasible) {
      out << format_number(row.s_hs) << ',' << format_number(row.s_dimensionless) << ',' << format_number(row.d_lp)
          << ',';
    } else {
      out << ",,,";
    }
    out << (row.ci_lo ? format_number(*row.ci_lo) : "") << ',' << (row.ci_hi ? format_number(*row.ci_hi) : "") << ','
        << row.method << '\n';
  }
}

nlohmann::json to_json(const SweepResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : result.rows) {
    nlohmann::json r = nlohmann::json::object();
    for (std::size_t i = 0; i < row.axes.size(); ++i) r[result.axis_names[i]] = row.axes[i];
    r["method"] = row.method;
    if (row.feasible) {
      r["S_hs_bits"] = row.s_hs;
      r["S_dimensionless_bits"] = row.s_dimensionless;
      r["D_LP_bits"] = row.d_lp;
    } else {
      r["note"] = row.note;
    }
    if (row.ci_lo) r["ci_lo"] = *row.ci_lo;
    if (row.ci_hi) r["ci_hi"] = *row.ci_hi;
    if (row.distinct_classes) r["distinct_classes"] = *row.distinct_classes;
    if (row.bias_warning) r["bias_warning"] = true;
    rows.push_back(std::move(r));
  }
  return {{"units", "bits"}, {"kind", result.kind}, {"axes", result.axis_names},
          {"provenance", result.provenance}, {"rows", rows}};
}

}  // namespace histent
