#include "histent/maxent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "histent/error.hpp"

namespace histent {

namespace {

constexpr double kZeroTarget = 1e-13;
constexpr double kZeroEntry = 1e-12;

// Gibbs distribution rho(x) ∝ exp(base(x) + theta . A(:, x)); returns log Z.
double gibbs(const Eigen::MatrixXd& A, const Eigen::VectorXd& base, const Eigen::VectorXd& theta,
             Eigen::VectorXd& rho) {
  Eigen::VectorXd logits = base;
  if (A.rows() > 0) logits += A.transpose() * theta;
  const double top = logits.maxCoeff();
  rho = (logits.array() - top).exp();
  const double z = rho.sum();
  rho /= z;
  return top + std::log(z);
}

double entropy_bits(const Eigen::VectorXd& rho) {
  double s = 0.0;
  for (double p : rho) {
    if (p > 0.0) s -= p * std::log2(p);
  }
  return s;
}

std::vector<int> shifted_times(const CoarseGraining& cg) {
  std::vector<int> t;
  for (int time : cg.grid().coarse_times()) t.push_back(time - 1);
  return t;
}

}  // namespace

void MaxEntProblem::validate(double tol) const {
  if (constraints.rows() != targets.size()) throw Error("constraint and target counts differ");
  if (constraints.cols() == 0) throw Error("empty state space");
  if (bonus.size() != 0 && bonus.size() != constraints.cols()) throw Error("bonus size does not match the cells");
  if ((constraints.array() < -tol).any() || (constraints.array() > 1.0 + tol).any()) {
    throw InvariantViolation("constraint entries must lie in [0, 1]");
  }
  const Eigen::RowVectorXd col = constraints.colwise().sum();
  if (((col.array() - 1.0).abs() > tol).any()) throw InvariantViolation("constraint columns must sum to 1");
  if ((targets.array() < -tol).any() || std::abs(targets.sum() - 1.0) > tol) {
    throw InvariantViolation("targets must form a distribution");
  }
}

nlohmann::json MaxEntSolution::to_json() const {
  auto vec = [](const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr));
    return a;
  };
  return {{"units", "bits"},     {"objective", objective},   {"rho", vec(rho)},
          {"multipliers", vec(multipliers)}, {"max_residual", max_residual}, {"iterations", iterations},
          {"method", used_scaling ? "newton+scaling" : "newton"}};
}

MaxEntProblem build_constraints(const TransitionLaw& law, const CoarseGraining& cg, const InitialCondition& rho0,
                                std::size_t class_cap) {
  const auto cells = static_cast<Eigen::Index>(law.cells());
  const auto partition_at = [&cg](std::size_t k, std::span<const int> prefix) -> const SpatialPartition& {
    return cg.partition_at(k, prefix);
  };
  const std::vector<int> from_first = shifted_times(cg);
  std::map<ClassLabel, Eigen::VectorXd> rows;
  for (Eigen::Index x = 0; x < cells; ++x) {
    Eigen::VectorXd start = Eigen::VectorXd::Zero(cells);
    start[x] = 1.0;
    for (auto& c : propagate_classes(law, start, from_first, partition_at, class_cap)) {
      auto it = rows.find(c.label);
      if (it == rows.end()) {
        if (rows.size() >= class_cap) throw CapacityError("too many classes for the max-ent constraint table");
        it = rows.emplace(std::move(c.label), Eigen::VectorXd::Zero(cells)).first;
      }
      it->second[x] = c.probability;
    }
  }
  MaxEntProblem problem;
  problem.constraints.resize(static_cast<Eigen::Index>(rows.size()), cells);
  problem.targets = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows.size()));
  Eigen::Index r = 0;
  std::map<ClassLabel, Eigen::Index> index;
  for (auto& [label, row] : rows) {
    problem.constraints.row(r) = row.transpose();
    problem.labels.push_back(label);
    index[label] = r++;
  }
  for (const auto& c : propagate_classes(law, rho0.cell_probs, cg.grid().coarse_times(), partition_at, class_cap)) {
    auto it = index.find(c.label);
    if (it == index.end()) throw InvariantViolation("class reachable from rho0 but not from any first-time state");
    problem.targets[it->second] = c.probability;
  }
  return problem;
}

MaxEntSolution solve_maxent(const MaxEntProblem& problem, const MaxEntOptions& options) {
  problem.validate();
  const Eigen::Index m = problem.constraints.rows();
  const Eigen::Index cells = problem.constraints.cols();
  const Eigen::VectorXd bonus = problem.bonus.size() ? problem.bonus : Eigen::VectorXd::Zero(cells);

  // Drop zero-target classes together with every cell they could occupy.
  std::vector<Eigen::Index> kept, support;
  for (Eigen::Index a = 0; a < m; ++a) {
    if (problem.targets[a] > kZeroTarget) kept.push_back(a);
  }
  for (Eigen::Index x = 0; x < cells; ++x) {
    bool allowed = true;
    for (Eigen::Index a = 0; a < m && allowed; ++a) {
      if (problem.targets[a] <= kZeroTarget && problem.constraints(a, x) > kZeroEntry) allowed = false;
    }
    if (allowed) support.push_back(x);
  }
  if (support.empty()) throw ConvergenceError("constraints leave no admissible state", 1.0, 0);
  const auto ns = static_cast<Eigen::Index>(support.size());
  const auto nk = static_cast<Eigen::Index>(kept.size());

  Eigen::MatrixXd kept_rows(nk, ns);
  Eigen::VectorXd kept_targets(nk);
  Eigen::VectorXd base(ns);
  for (Eigen::Index i = 0; i < nk; ++i) {
    kept_targets[i] = problem.targets[kept[static_cast<std::size_t>(i)]];
    for (Eigen::Index j = 0; j < ns; ++j) {
      kept_rows(i, j) = problem.constraints(kept[static_cast<std::size_t>(i)], support[static_cast<std::size_t>(j)]);
    }
  }
  for (Eigen::Index j = 0; j < ns; ++j) base[j] = bonus[support[static_cast<std::size_t>(j)]] * std::numbers::ln2;

  // Rows independent of normalization and of each other (modified Gram-Schmidt).
  std::vector<Eigen::VectorXd> basis{Eigen::VectorXd::Constant(ns, 1.0 / std::sqrt(static_cast<double>(ns)))};
  std::vector<Eigen::Index> selected;
  for (Eigen::Index i = 0; i < nk; ++i) {
    Eigen::VectorXd r = kept_rows.row(i).transpose();
    const double norm = r.norm();
    for (const auto& e : basis) r -= r.dot(e) * e;
    if (r.norm() > 1e-9 * std::max(1.0, norm)) {
      basis.push_back(r / r.norm());
      selected.push_back(i);
    }
  }
  const auto nsel = static_cast<Eigen::Index>(selected.size());
  Eigen::MatrixXd A(nsel, ns);
  Eigen::VectorXd q(nsel);
  for (Eigen::Index i = 0; i < nsel; ++i) {
    A.row(i) = kept_rows.row(selected[static_cast<std::size_t>(i)]);
    q[i] = kept_targets[selected[static_cast<std::size_t>(i)]];
  }

  Eigen::VectorXd rho_s;
  auto full_residual = [&](const Eigen::VectorXd& rs) {
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(cells);
    for (Eigen::Index j = 0; j < ns; ++j) rho[support[static_cast<std::size_t>(j)]] = rs[j];
    return std::make_pair(rho, (problem.constraints * rho - problem.targets).cwiseAbs().maxCoeff());
  };
  auto finish = [&](const Eigen::VectorXd& rs, Eigen::VectorXd multipliers, int iters, bool scaling) {
    MaxEntSolution sol;
    auto [rho, residual] = full_residual(rs);
    sol.rho = std::move(rho);
    sol.multipliers = std::move(multipliers);
    sol.max_residual = residual;
    sol.iterations = iters;
    sol.used_scaling = scaling;
    sol.objective = entropy_bits(sol.rho) + bonus.dot(sol.rho);
    return sol;
  };

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(nsel);
  double dual = gibbs(A, base, lambda, rho_s) - lambda.dot(q);
  double best = std::numeric_limits<double>::infinity();
  int iter = 0;
  bool newton_failed = false;
  for (; iter < options.max_iter; ++iter) {
    const double residual = full_residual(rho_s).second;
    best = std::min(best, residual);
    if (residual <= options.tol) {
      Eigen::VectorXd mult = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::quiet_NaN());
      for (Eigen::Index i = 0; i < nsel; ++i) mult[kept[static_cast<std::size_t>(selected[static_cast<std::size_t>(i)])]] = lambda[i];
      return finish(rho_s, std::move(mult), iter, false);
    }
    const Eigen::VectorXd mean = A * rho_s;
    const Eigen::VectorXd grad = mean - q;
    const Eigen::MatrixXd hess = A * rho_s.asDiagonal() * A.transpose() - mean * mean.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
    const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
    Eigen::VectorXd step = Eigen::VectorXd::Zero(nsel);
    for (Eigen::Index i = 0; i < nsel; ++i) {
      const double mu = eig.eigenvalues()[i];
      if (mu > 1e-14 * std::max(top, 1e-300)) {
        const Eigen::VectorXd u = eig.eigenvectors().col(i);
        step -= (u.dot(grad) / mu) * u;
      }
    }
    const double slope = grad.dot(step);
    if (!(slope < 0.0)) {
      newton_failed = true;
      break;
    }
    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial_rho;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      const Eigen::VectorXd trial = lambda + t * step;
      const double value = gibbs(A, base, trial, trial_rho) - trial.dot(q);
      if (value <= dual + 1e-4 * t * slope) {
        if (value > dual) throw InvariantViolation("max-ent dual increased");
        lambda = trial;
        dual = value;
        rho_s = trial_rho;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      newton_failed = true;
      break;
    }
  }

  if (newton_failed) {
    // Generalized iterative scaling over all kept rows (they sum to 1 on the support).
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(nk);
    for (Eigen::Index i = 0; i < nsel; ++i) mu[selected[static_cast<std::size_t>(i)]] = lambda[i];
    gibbs(kept_rows, base, mu, rho_s);
    for (; iter < options.max_iter; ++iter) {
      const double residual = full_residual(rho_s).second;
      best = std::min(best, residual);
      if (residual <= options.tol) {
        Eigen::VectorXd mult = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::quiet_NaN());
        for (Eigen::Index i = 0; i < nk; ++i) mult[kept[static_cast<std::size_t>(i)]] = mu[i];
        return finish(rho_s, std::move(mult), iter, true);
      }
      const Eigen::VectorXd mean = kept_rows * rho_s;
      for (Eigen::Index i = 0; i < nk; ++i) mu[i] += std::log(kept_targets[i] / std::max(mean[i], 1e-300));
      gibbs(kept_rows, base, mu, rho_s);
    }
  }
  throw ConvergenceError("max-ent solver did not reach tolerance " + std::to_string(options.tol) + " (best residual " +
                             std::to_string(best) + ")",
                         best, iter);
}

Eigen::VectorXd s_function(const Eigen::MatrixXd& one_step, int steps) {
  if (steps < 0) throw Error("negative number of steps");
  const Eigen::Index cells = one_step.cols();
  Eigen::VectorXd h = Eigen::VectorXd::Zero(cells);
  for (Eigen::Index y = 0; y < cells; ++y) {
    for (Eigen::Index x = 0; x < one_step.rows(); ++x) {
      const double p = one_step(x, y);
      if (p > 0.0) h[y] -= p * std::log2(p);
    }
  }
  Eigen::VectorXd s = Eigen::VectorXd::Zero(cells);
  for (int k = 0; k < steps; ++k) s = h + one_step.transpose() * s;
  return s.cwiseMax(0.0);
}

Eigen::VectorXd s_function(const TransitionLaw& law, int steps) { return s_function(law.over(1), steps); }

MaxEntSolution ic_solution(const TransitionLaw& law, const CoarseGraining& cg, const InitialCondition& rho0,
                           const MaxEntOptions& options) {
  return solve_maxent(build_constraints(law, cg, rho0), options);
}

MaxEntSolution dc_solution(const TransitionLaw& law, const CoarseGraining& cg, const InitialCondition& rho0,
                           const MaxEntOptions& options) {
  MaxEntProblem problem = build_constraints(law, cg, rho0);
  problem.bonus = s_function(law, cg.grid().fine_times() - 1);
  return solve_maxent(problem, options);
}

double ic_entropy(const TransitionLaw& law, const CoarseGraining& cg, const InitialCondition& rho0) {
  return ic_solution(law, cg, rho0).objective;
}

double dc_entropy(const TransitionLaw& law, const CoarseGraining& cg, const InitialCondition& rho0) {
  return dc_solution(law, cg, rho0).objective;
}

double cell_count_entropy(const TransitionLaw& law, const CoarseGraining& cg, const InitialCondition& rho0) {
  const auto classes = propagate_classes(
      law, rho0.cell_probs, cg.grid().coarse_times(),
      [&cg](std::size_t k, std::span<const int> prefix) -> const SpatialPartition& { return cg.partition_at(k, prefix); });
  const double log2_cells = std::log2(static_cast<double>(law.cells()));
  const auto unconstrained = static_cast<double>(cg.grid().fine_times() - static_cast<int>(cg.coarse_count()));
  double s = 0.0;
  for (const auto& c : classes) {
    if (!(c.probability > 0.0)) continue;
    double volume = unconstrained * log2_cells;
    for (std::size_t k = 0; k < c.label.size(); ++k) {
      const auto prefix = std::span<const int>(c.label).first(k);
      volume += std::log2(static_cast<double>(cg.partition_at(k, prefix).cells_in(c.label[k]).size()));
    }
    s += c.probability * (volume - std::log2(c.probability));
  }
  return s;
}

nlohmann::json InequalityReport::to_json() const {
  return {{"units", "bits"},
          {"S_ic", s_ic},
          {"S_dc", s_dc},
          {"S_hs", s_hs},
          {"slack_ic_dc", slack_ic_dc},
          {"slack_dc_hs", slack_dc_hs},
          {"holds", holds},
          {"ic_solver", ic.to_json()},
          {"dc_solver", dc.to_json()}};
}

InequalityReport verify_inequalities(const TransitionLaw& law, const CoarseGraining& cg,
                                     const InitialCondition& rho0, const MaxEntOptions& options) {
  InequalityReport r;
  r.ic = ic_solution(law, cg, rho0, options);
  r.dc = dc_solution(law, cg, rho0, options);
  r.s_ic = r.ic.objective;
  r.s_dc = r.dc.objective;
  r.s_hs = cell_count_entropy(law, cg, rho0);
  r.slack_ic_dc = r.s_dc - r.s_ic;
  r.slack_dc_hs = r.s_hs - r.s_dc;
  r.holds = r.slack_ic_dc >= -1e-6 && r.slack_dc_hs >= -1e-6;
  return r;
}

}  // namespace histent
