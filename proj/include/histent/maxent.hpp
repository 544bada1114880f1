#pragma once

// Jaynes constructions over the distribution at the first fine time.
//
// The initial-condition variable is rho~(x1), the state at fine time 1. A class
// alpha constrains it through C_alpha(x1) = P(alpha | X_1 = x1), and the
// dynamically constrained entropy adds the path entropy s(x1) of the N - 1
// remaining steps. Volumes here count finest cells, so on lattices S_hs below is
// the usual history-space entropy.

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "histent/history_core.hpp"
#include "histent/processes.hpp"

namespace histent {

struct MaxEntProblem {
  Eigen::MatrixXd constraints;  // classes x cells, C_alpha(x)
  Eigen::VectorXd targets;      // p_alpha
  Eigen::VectorXd bonus;        // s(x) in bits; empty means zero
  std::vector<ClassLabel> labels;

  void validate(double tol = 1e-9) const;
};

struct MaxEntSolution {
  Eigen::VectorXd rho;
  // One per constraint row; NaN for rows eliminated (zero target) or
  // redundant with the others.
  Eigen::VectorXd multipliers;
  double objective = 0.0;  // bits
  double max_residual = 0.0;
  int iterations = 0;
  bool used_scaling = false;  // fell back to iterative scaling

  nlohmann::json to_json() const;
};

struct MaxEntOptions {
  double tol = 1e-9;
  int max_iter = 500;
};

MaxEntProblem build_constraints(const TransitionLaw& law, const CoarseGraining& cg, const InitialCondition& rho0,
                                std::size_t class_cap = 1000000);

// Maximizes -sum rho log2 rho + sum bonus * rho subject to C rho = targets.
// Throws ConvergenceError carrying the best residual.
MaxEntSolution solve_maxent(const MaxEntProblem& problem, const MaxEntOptions& options = {});

// s(x) = entropy of the next `steps` states given x, by the chain rule.
Eigen::VectorXd s_function(const Eigen::MatrixXd& one_step, int steps);
Eigen::VectorXd s_function(const TransitionLaw& law, int steps);

MaxEntSolution ic_solution(const TransitionLaw& law, const CoarseGraining& cg, const InitialCondition& rho0,
                           const MaxEntOptions& options = {});
MaxEntSolution dc_solution(const TransitionLaw& law, const CoarseGraining& cg, const InitialCondition& rho0,
                           const MaxEntOptions& options = {});
double ic_entropy(const TransitionLaw& law, const CoarseGraining& cg, const InitialCondition& rho0);
double dc_entropy(const TransitionLaw& law, const CoarseGraining& cg, const InitialCondition& rho0);

// S_hs with finest cells as the unit of volume.
double cell_count_entropy(const TransitionLaw& law, const CoarseGraining& cg, const InitialCondition& rho0);

struct InequalityReport {
  double s_ic = 0.0;
  double s_dc = 0.0;
  double s_hs = 0.0;
  double slack_ic_dc = 0.0;  // S_dc - S_ic
  double slack_dc_hs = 0.0;  // S_hs - S_dc
  bool holds = true;         // both slacks >= -1e-6
  MaxEntSolution ic;
  MaxEntSolution dc;

  nlohmann::json to_json() const;
};

InequalityReport verify_inequalities(const TransitionLaw& law, const CoarseGraining& cg,
                                     const InitialCondition& rho0, const MaxEntOptions& options = {});

}  // namespace histent
