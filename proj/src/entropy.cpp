#include "histent/entropy.hpp"

#include <cmath>
#include <map>

#include "histent/error.hpp"

namespace histent {

namespace {

double plogp(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

}  // namespace

nlohmann::json EntropyReport::to_json() const {
  nlohmann::json j{{"units", "bits"},
                   {"S_hs", s_hs},
                   {"S_hs_dimensionless", s_hs_dimensionless},
                   {"D_LP", d_lp},
                   {"log2_trace_identity", log2_trace_identity}};
  nlohmann::json ix = nlohmann::json::array();
  for (const auto& [x, value] : isham_linden) ix.push_back({{"x", x}, {"I_x", value}});
  j["I_x"] = ix;
  j["S_sbs"] = s_sbs ? nlohmann::json(*s_sbs) : nlohmann::json(nullptr);
  return j;
}

double entropy_functional(std::span<const double> dist) {
  double s = 0.0;
  for (double p : dist) {
    if (p < -1e-12) throw InvariantViolation("negative probability in entropy functional");
    s += plogp(p);
  }
  return s;
}

EntropyTerms entropy_terms(const HistoryDistribution& hd) {
  hd.validate();
  EntropyTerms t;
  t.log2_trace_identity = hd.log2_trace_identity;
  for (const auto& c : hd.classes) {
    if (!(c.probability > 0.0)) continue;
    t.shannon += plogp(c.probability);
    t.volume += c.probability * c.log2_volume;
  }
  return t;
}

double history_space_entropy(const HistoryDistribution& hd) { return entropy_terms(hd).s_hs(); }

double lp_depth(const HistoryDistribution& hd) { return entropy_terms(hd).lp_depth(); }

double isham_linden_entropy(const HistoryDistribution& hd, double x) { return entropy_terms(hd).isham_linden(x); }

double max_entropy_value(const StateSpace& space, const TimeGrid& grid) {
  return grid.fine_times() * space.log2_volume();
}

double step_by_step_entropy(const HistoryDistribution& hd, const CoarseGraining& cg) {
  hd.validate();
  const std::size_t n = cg.coarse_count();
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    // Joint probability of (prefix, alpha_k) and of the prefix alone.
    std::map<ClassLabel, std::map<int, double>> by_prefix;
    for (const auto& c : hd.classes) {
      if (c.label.size() != n) throw Error("class label does not match the graining");
      if (!(c.probability > 0.0)) continue;
      ClassLabel prefix(c.label.begin(), c.label.begin() + static_cast<std::ptrdiff_t>(k));
      by_prefix[prefix][c.label[k]] += c.probability;
    }
    for (const auto& [prefix, joint] : by_prefix) {
      double marginal = 0.0;
      for (const auto& [bin, p] : joint) marginal += p;
      const SpatialPartition& part = cg.partition_at(k, prefix);
      double conditional = 0.0;
      for (const auto& [bin, p] : joint) {
        const double q = p / marginal;
        conditional += plogp(q) + q * part.log2_bin_volume(bin);
      }
      total += marginal * conditional;
    }
  }
  return total;
}

double step_by_step_entropy(const TransitionLaw& law, const InitialCondition& rho0, const CoarseGraining& cg,
                            const StateSpace& space, const ExactOptions& options) {
  return step_by_step_entropy(exact_history_probs(law, rho0, cg, space, options), cg);
}

EntropyTerms fine_cell_entropy(const TransitionLaw& law, const InitialCondition& rho0, const CoarseGraining& cg,
                               const StateSpace& space) {
  rho0.validate(1e-9);
  const auto cells = static_cast<Eigen::Index>(space.cell_count());
  if (law.cells() != space.cell_count()) throw Error("kernel and state space disagree on the cell count");
  const auto& times = cg.grid().coarse_times();
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (cg.branch_dependent() || !cg.default_partition(k).is_finest()) {
      throw ConfigError("chain-rule entropy needs the finest partition at every coarse time");
    }
  }
  Eigen::VectorXd log2_cell(cells);
  for (Eigen::Index c = 0; c < cells; ++c) log2_cell[c] = space.log2_cell_volume(static_cast<std::size_t>(c));

  EntropyTerms t;
  const int N = cg.grid().fine_times();
  t.log2_trace_identity = N * space.log2_volume();
  t.volume = static_cast<double>(N - static_cast<int>(times.size())) * space.log2_volume();

  Eigen::VectorXd rho = rho0.cell_probs;
  int previous = 0;
  std::map<int, Eigen::VectorXd> column_entropy;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const int gap = times[k] - previous;
    previous = times[k];
    const Eigen::MatrixXd kernel = law.over(gap);
    if (k == 0) {
      rho = kernel * rho;
      for (Eigen::Index c = 0; c < cells; ++c) t.shannon += plogp(rho[c]);
    } else {
      auto it = column_entropy.find(gap);
      if (it == column_entropy.end()) {
        Eigen::VectorXd h = Eigen::VectorXd::Zero(cells);
        for (Eigen::Index y = 0; y < cells; ++y) {
          for (Eigen::Index x = 0; x < cells; ++x) h[y] += plogp(kernel(x, y));
        }
        it = column_entropy.emplace(gap, std::move(h)).first;
      }
      t.shannon += rho.dot(it->second);
      rho = kernel * rho;
    }
    t.volume += rho.dot(log2_cell);
  }
  return t;
}

EntropyReport make_report(const EntropyTerms& terms, std::span<const double> xs, std::optional<double> s_sbs) {
  EntropyReport r;
  r.s_hs = terms.s_hs();
  r.s_hs_dimensionless = terms.dimensionless();
  r.d_lp = terms.lp_depth();
  r.log2_trace_identity = terms.log2_trace_identity;
  for (double x : xs) r.isham_linden.emplace_back(x, terms.isham_linden(x));
  r.s_sbs = s_sbs;
  return r;
}

}  // namespace histent
