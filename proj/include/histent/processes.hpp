#pragma once

// Stochastic models: one-step kernels, exact class-probability propagation,
// and single-trajectory samplers.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "histent/history_core.hpp"

namespace histent {

// Column-stochastic matrix: matrix(x, y) = p(x | y).
struct MarkovKernel {
  Eigen::MatrixXd matrix;
  double timestep = 1.0;

  std::size_t cells() const { return static_cast<std::size_t>(matrix.cols()); }
  // Throws InvariantViolation unless every column is non-negative and sums to 1.
  void validate(double tol = 1e-12) const;
};

// Transition law over whole multiples of the fine step.
class TransitionLaw {
 public:
  using Builder = std::function<Eigen::MatrixXd(int steps)>;

  // Powers of a fixed one-step kernel.
  explicit TransitionLaw(MarkovKernel one_step);
  // Kernels built directly for each duration (e.g. the binned Gaussian).
  TransitionLaw(Builder builder, std::size_t cells, double eta);

  // p(x, t + steps | y, t); steps == 0 gives the identity.
  Eigen::MatrixXd over(int steps) const;
  std::size_t cells() const { return cells_; }
  double eta() const { return eta_; }

 private:
  std::optional<Eigen::MatrixXd> one_step_;
  Builder builder_;
  std::size_t cells_ = 0;
  double eta_ = 1.0;
};

struct InitialCondition {
  Eigen::VectorXd cell_probs;
  // Exact starting position for continuum samplers; cell_probs then holds the
  // point mass on its cell.
  std::optional<double> position;

  static InitialCondition point_cell(const StateSpace& space, std::size_t cell);
  static InitialCondition point_position(const StateSpace& space, double x);
  static InitialCondition distribution(Eigen::VectorXd probs);
  void validate(double tol = 1e-12) const;
};

// dx = (p/m) dt, dp = -2 gamma p dt + a dxi.
struct BrownianParams {
  double gamma = 0.5;  // dissipation rate Gamma
  double a = 1.0;      // noise strength
  double m = 1.0;      // mass
  void validate() const;
};

struct PhaseState {
  double x = 0.0;
  double p = 0.0;
};

struct UrnParams {
  int R = 15;  // 2R balls
  int n = 30;  // balls in urn A
  void validate() const;
};

struct UrnMove {
  double down = 0.0;  // P(n -> n - 1)
  double up = 0.0;    // P(n -> n + 1)
};

// ----------------------------------------------------------------- kernels

// Symmetric nearest-neighbour walk with periodic ends.
MarkovKernel random_walk_kernel(const StateSpace& space);

// Gaussian p(x2|x1) = (pi D dt)^{-1/2} exp[-(x2-x1)^2 / (D dt)] integrated over
// destination cells from each source cell centre, columns renormalised after
// truncation at the domain edge. The Gaussian variance is reduced by the
// cell-snapping variance w^2/12 (never below half its nominal value) so that
// the binned chain composes like the continuum one.
MarkovKernel diffusion_kernel(double diffusion, double dt, const StateSpace& cells);

MarkovKernel urn_kernel(int R);

// Permutation / map kernel: cell y goes to image[y] with certainty.
MarkovKernel deterministic_kernel(std::span<const std::size_t> image);

// Dense random stochastic matrix; `sparsity` is the chance an entry is zeroed
// (the diagonal-ish support keeps every column non-empty).
MarkovKernel random_kernel(std::size_t cells, std::mt19937_64& rng, double sparsity = 0.0);

TransitionLaw diffusion_law(double diffusion, double eta, const StateSpace& cells);

// ---------------------------------------------------------------- urn model

UrnMove urn_transition(int n, int R);

// Coefficients C_k^l of (1 - z)^{R-l} (1 + z)^{R+l}, k = 0..2R. Exact for R <= 30.
std::vector<std::int64_t> urn_coefficients(int R, int l);

// p(n_j, t_j | n_0, t_0) for the Ehrenfest urn, from the closed-form
// alternating sum evaluated in exact integer arithmetic.
double urn_exact_prob(int n_j, int j, int n_0, int R);

// log2 binomial(2R, n), the number of ball arrangements with n balls in A.
std::vector<double> urn_log2_multiplicities(int R);

// ------------------------------------------------------- exact propagation

struct PropagatedClass {
  ClassLabel label;
  double probability = 0.0;
};

// Alternates kernel propagation and bin projection over `times` (t >= 0,
// non-decreasing from the initial condition at t = 0). `partition_at(k, prefix)`
// supplies the partition at the k-th time. Zero-probability branches are
// pruned; more than `cap` live branches throws CapacityError.
std::vector<PropagatedClass> propagate_classes(
    const TransitionLaw& law, const Eigen::VectorXd& rho0, std::span<const int> times,
    const std::function<const SpatialPartition&(std::size_t, std::span<const int>)>& partition_at,
    std::size_t cap = 1000000);

struct ExactOptions {
  std::size_t class_cap = 1000000;
};

// Probabilities and volumes of every class with non-zero probability.
HistoryDistribution exact_history_probs(const TransitionLaw& law, const InitialCondition& rho0,
                                        const CoarseGraining& cg, const StateSpace& space,
                                        const ExactOptions& options = {});

// -------------------------------------------------------------- models

struct RandomWalkModel {
  std::size_t sites = 256;
  int steps = 128;
  std::size_t start = 0;
};

struct DiffusionModel {
  double volume = 20.0;
  double diffusion = 1.0;
  int steps = 1024;
  double eta = 0.01;
  double cell = 0.1;
  double start = 0.0;
};

struct BrownianModel {
  double volume = 20.0;
  BrownianParams params{};
  int steps = 1024;
  double eta = 0.01;
  double cell = 0.1;
  PhaseState start{};
};

struct UrnModel {
  int balls = 30;  // 2R
  int start = 30;  // n_0
  int steps = 3;   // N
};

// Seeded random stochastic kernel on a small lattice; used for property runs
// and the maxent demo.
struct RandomKernelModel {
  std::size_t sites = 4;
  int steps = 2;
  std::uint64_t kernel_seed = 1;
  std::optional<std::size_t> start;  // point start; uniform when empty
};

using ModelConfig = std::variant<RandomWalkModel, DiffusionModel, BrownianModel, UrnModel, RandomKernelModel>;

// {"model": "rw"|"diffusion"|"brownian"|"urn"|"random", ...}. Unknown keys throw
// ConfigError with the key path.
ModelConfig model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const ModelConfig& model);
std::string model_name(const ModelConfig& model);

StateSpace model_space(const ModelConfig& model);
int model_steps(const ModelConfig& model);
double model_eta(const ModelConfig& model);
InitialCondition model_initial(const ModelConfig& model);
// Exact transition law, or nullopt for models without one (Brownian).
std::optional<TransitionLaw> model_law(const ModelConfig& model);
// Results of continuum models are reported in dimensionless form.
bool model_is_continuum(const ModelConfig& model);

// ------------------------------------------------------------- samplers

// One Euler-Maruyama step: x += (p/m) dt; p += -2 gamma p dt + a sqrt(dt) z.
PhaseState brownian_step(PhaseState state, double dt, const BrownianParams& params, std::mt19937_64& rng);

// Draws fine-grained histories (finest-cell index at each fine time 1..N) for a
// model. Built once per ensemble; `sample` is const and thread-safe.
class HistorySampler {
 public:
  explicit HistorySampler(const ModelConfig& model);

  void sample(std::mt19937_64& rng, std::span<std::uint32_t> cells) const;
  int steps() const { return steps_; }
  std::size_t cells() const { return space_.cell_count(); }

 private:
  ModelConfig model_;
  StateSpace space_;
  int steps_ = 0;
  // Cumulative columns for kernel-driven models (urn, random kernel).
  std::vector<std::vector<double>> cumulative_;
  std::size_t start_cell_ = 0;
  bool point_start_ = false;
  std::vector<double> start_cumulative_;
};

}  // namespace histent
