#include "histent/processes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "histent/error.hpp"

namespace histent {

namespace mp = boost::multiprecision;

namespace {

// Standard normal mass on [a, b], accurate in both tails.
double normal_mass(double a, double b) {
  constexpr double r2 = std::numbers::sqrt2;
  if (a >= 0.0) return 0.5 * (std::erfc(a / r2) - std::erfc(b / r2));
  if (b <= 0.0) return 0.5 * (std::erfc(-b / r2) - std::erfc(-a / r2));
  return 1.0 - 0.5 * (std::erfc(-a / r2) + std::erfc(b / r2));
}

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& m, int steps) {
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::MatrixXd base = m;
  while (steps > 0) {
    if (steps & 1) result = base * result;
    steps >>= 1;
    if (steps > 0) base = base * base;
  }
  return result;
}

std::vector<mp::cpp_int> expand_urn_polynomial(int R, int l) {
  std::vector<mp::cpp_int> c{1};
  auto multiply = [&](int sign) {
    std::vector<mp::cpp_int> next(c.size() + 1, 0);
    for (std::size_t k = 0; k < c.size(); ++k) {
      next[k] += c[k];
      next[k + 1] += sign * c[k];
    }
    c = std::move(next);
  };
  for (int i = 0; i < R - l; ++i) multiply(-1);
  for (int i = 0; i < R + l; ++i) multiply(+1);
  return c;
}

// Reflect into [lo, hi); returns true when an odd number of reflections happened.
bool reflect(double& x, double lo, double hi) {
  bool flipped = false;
  for (int guard = 0; guard < 64 && (x < lo || x >= hi); ++guard) {
    x = x < lo ? 2.0 * lo - x : 2.0 * hi - x;
    flipped = !flipped;
  }
  if (x >= hi) x = std::nextafter(hi, lo);
  return flipped;
}

std::uint32_t sample_cumulative(const std::vector<double>& cdf, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, cdf.back())(rng);
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return static_cast<std::uint32_t>(it - cdf.begin());
}

}  // namespace

// ------------------------------------------------------------- MarkovKernel

void MarkovKernel::validate(double tol) const {
  if (matrix.rows() != matrix.cols() || matrix.rows() == 0) throw InvariantViolation("kernel must be square");
  for (Eigen::Index y = 0; y < matrix.cols(); ++y) {
    if ((matrix.col(y).array() < 0.0).any()) throw InvariantViolation("kernel has a negative entry");
    if (std::abs(matrix.col(y).sum() - 1.0) > tol) {
      throw InvariantViolation("kernel column " + std::to_string(y) + " does not sum to 1");
    }
  }
}

TransitionLaw::TransitionLaw(MarkovKernel one_step)
    : one_step_(std::move(one_step.matrix)),
      cells_(static_cast<std::size_t>(one_step_->cols())),
      eta_(one_step.timestep) {}

TransitionLaw::TransitionLaw(Builder builder, std::size_t cells, double eta)
    : builder_(std::move(builder)), cells_(cells), eta_(eta) {}

Eigen::MatrixXd TransitionLaw::over(int steps) const {
  if (steps < 0) throw Error("negative number of steps");
  const auto n = static_cast<Eigen::Index>(cells_);
  if (steps == 0) return Eigen::MatrixXd::Identity(n, n);
  if (one_step_) return matrix_power(*one_step_, steps);
  return builder_(steps);
}

// --------------------------------------------------------- InitialCondition

InitialCondition InitialCondition::point_cell(const StateSpace& space, std::size_t cell) {
  if (cell >= space.cell_count()) throw ConfigError("initial cell outside the state space", "x0");
  InitialCondition ic;
  ic.cell_probs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.cell_count()));
  ic.cell_probs[static_cast<Eigen::Index>(cell)] = 1.0;
  return ic;
}

InitialCondition InitialCondition::point_position(const StateSpace& space, double x) {
  InitialCondition ic = point_cell(space, space.cell_of(x));
  ic.position = x;
  return ic;
}

InitialCondition InitialCondition::distribution(Eigen::VectorXd probs) {
  InitialCondition ic;
  ic.cell_probs = std::move(probs);
  ic.validate();
  return ic;
}

void InitialCondition::validate(double tol) const {
  if (cell_probs.size() == 0) throw InvariantViolation("empty initial condition");
  if ((cell_probs.array() < 0.0).any()) throw InvariantViolation("initial condition has a negative entry");
  if (std::abs(cell_probs.sum() - 1.0) > tol) throw InvariantViolation("initial condition does not sum to 1");
}

void BrownianParams::validate() const {
  if (!(gamma >= 0.0)) throw ConfigError("dissipation must be non-negative", "gamma");
  if (!(a >= 0.0)) throw ConfigError("noise strength must be non-negative", "a");
  if (!(m > 0.0)) throw ConfigError("mass must be positive", "m");
}

void UrnParams::validate() const {
  if (R < 1) throw ConfigError("need at least two balls", "balls");
  if (n < 0 || n > 2 * R) throw ConfigError("occupation outside 0..2R", "n");
}

// ------------------------------------------------------------------ kernels

MarkovKernel random_walk_kernel(const StateSpace& space) {
  if (space.kind() != SpaceKind::discrete_lattice) throw ConfigError("random walk needs a discrete lattice");
  const auto v = static_cast<Eigen::Index>(space.cell_count());
  if (v < 2) throw ConfigError("random walk needs V >= 2", "V");
  MarkovKernel k{Eigen::MatrixXd::Zero(v, v), 1.0};
  for (Eigen::Index y = 0; y < v; ++y) {
    k.matrix((y + 1) % v, y) += 0.5;
    k.matrix((y + v - 1) % v, y) += 0.5;
  }
  return k;
}

MarkovKernel diffusion_kernel(double diffusion, double dt, const StateSpace& cells) {
  if (!(diffusion > 0.0)) throw ConfigError("diffusion constant must be positive", "D");
  if (!(dt > 0.0)) throw ConfigError("timestep must be positive", "dt");
  if (cells.kind() != SpaceKind::binned_continuum) throw ConfigError("diffusion needs a binned continuum");
  const double w = cells.cell_width();
  const double nominal = diffusion * dt / 2.0;
  const double variance = std::max(nominal - w * w / 12.0, nominal / 2.0);
  const double sigma = std::sqrt(variance);
  const auto n = static_cast<Eigen::Index>(cells.cell_count());
  MarkovKernel k{Eigen::MatrixXd::Zero(n, n), dt};
  const bool periodic = cells.boundary() == Boundary::periodic;
  const double span = cells.volume();
  // Beyond ~40 sigma the mass underflows; skip those cells.
  const auto reach = static_cast<Eigen::Index>(std::ceil(40.0 * sigma / w)) + 1;
  for (Eigen::Index y = 0; y < n; ++y) {
    const double c = cells.cell_center(static_cast<std::size_t>(y));
    auto add = [&](Eigen::Index x, double shift) {
      const double lo = cells.origin() + static_cast<double>(x) * w + shift;
      k.matrix(x, y) += normal_mass((lo - c) / sigma, (lo + w - c) / sigma);
    };
    if (periodic) {
      const int images = static_cast<int>(std::ceil(40.0 * sigma / span)) + 1;
      for (int im = -images; im <= images; ++im) {
        for (Eigen::Index x = 0; x < n; ++x) add(x, im * span);
      }
    } else {
      for (Eigen::Index x = std::max<Eigen::Index>(0, y - reach); x < std::min(n, y + reach + 1); ++x) add(x, 0.0);
    }
    const double total = k.matrix.col(y).sum();
    if (!(total > 0.0)) throw Error("diffusion kernel column has no mass inside the domain");
    k.matrix.col(y) /= total;
  }
  return k;
}

MarkovKernel urn_kernel(int R) {
  UrnParams{R, 0}.validate();
  const auto n = static_cast<Eigen::Index>(2 * R + 1);
  MarkovKernel k{Eigen::MatrixXd::Zero(n, n), 1.0};
  for (int y = 0; y <= 2 * R; ++y) {
    const UrnMove mv = urn_transition(y, R);
    if (y < 2 * R) k.matrix(y + 1, y) = mv.up;
    if (y > 0) k.matrix(y - 1, y) = mv.down;
  }
  return k;
}

MarkovKernel deterministic_kernel(std::span<const std::size_t> image) {
  const auto n = static_cast<Eigen::Index>(image.size());
  MarkovKernel k{Eigen::MatrixXd::Zero(n, n), 1.0};
  for (Eigen::Index y = 0; y < n; ++y) {
    if (image[static_cast<std::size_t>(y)] >= image.size()) throw ConfigError("map image outside the state space");
    k.matrix(static_cast<Eigen::Index>(image[static_cast<std::size_t>(y)]), y) = 1.0;
  }
  return k;
}

MarkovKernel random_kernel(std::size_t cells, std::mt19937_64& rng, double sparsity) {
  const auto n = static_cast<Eigen::Index>(cells);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MarkovKernel k{Eigen::MatrixXd::Zero(n, n), 1.0};
  for (Eigen::Index y = 0; y < n; ++y) {
    for (Eigen::Index x = 0; x < n; ++x) {
      const double keep = u(rng);
      const double value = -std::log(1.0 - u(rng));  // Dirichlet(1) column
      if (x == y || keep >= sparsity) k.matrix(x, y) = value;
    }
    k.matrix.col(y) /= k.matrix.col(y).sum();
  }
  return k;
}

TransitionLaw diffusion_law(double diffusion, double eta, const StateSpace& cells) {
  diffusion_kernel(diffusion, eta, cells).validate();
  return TransitionLaw(
      [diffusion, eta, cells](int steps) { return diffusion_kernel(diffusion, steps * eta, cells).matrix; },
      cells.cell_count(), eta);
}

// ---------------------------------------------------------------- urn model

UrnMove urn_transition(int n, int R) {
  UrnParams{R, n}.validate();
  const double balls = 2.0 * R;
  return {n / balls, (balls - n) / balls};
}

std::vector<std::int64_t> urn_coefficients(int R, int l) {
  if (R < 1 || R > 30) throw ConfigError("urn coefficients are provided for 1 <= R <= 30", "R");
  if (l < -R || l > R) throw ConfigError("l must lie in -R..R", "l");
  std::vector<std::int64_t> out;
  for (const auto& c : expand_urn_polynomial(R, l)) out.push_back(static_cast<std::int64_t>(c));
  return out;
}

double urn_exact_prob(int n_j, int j, int n_0, int R) {
  UrnParams{R, n_0}.validate();
  UrnParams{R, n_j}.validate();
  if (j < 0) throw ConfigError("number of steps must be non-negative", "j");
  thread_local std::map<std::pair<int, int>, std::vector<mp::cpp_int>> poly;
  auto coeffs = [&](int l) -> const std::vector<mp::cpp_int>& {
    auto it = poly.find({R, l});
    if (it == poly.end()) it = poly.emplace(std::make_pair(R, l), expand_urn_polynomial(R, l)).first;
    return it->second;
  };
  // sum_l l^j C_{n_j}^l C_{R+l}^{R-n_0}; the sign carries (-1)^{j + n_j}.
  mp::cpp_int sum = 0;
  for (int l = -R; l <= R; ++l) {
    mp::cpp_int lj = (j == 0) ? mp::cpp_int(1) : mp::pow(mp::cpp_int(l), static_cast<unsigned>(j));
    if (lj == 0) continue;
    sum += lj * coeffs(l)[static_cast<std::size_t>(n_j)] * coeffs(R - n_0)[static_cast<std::size_t>(R + l)];
  }
  if ((j + n_j) % 2 != 0) sum = -sum;
  const mp::cpp_int denom = mp::pow(mp::cpp_int(2), static_cast<unsigned>(2 * R)) *
                            mp::pow(mp::cpp_int(R), static_cast<unsigned>(j));
  using Float = mp::cpp_bin_float_50;
  const double p = static_cast<double>(Float(sum) / Float(denom));
  if (p < -1e-9 || p > 1.0 + 1e-9) throw InvariantViolation("urn probability outside [0, 1]: coefficient error");
  return std::clamp(p, 0.0, 1.0);
}

std::vector<double> urn_log2_multiplicities(int R) {
  std::vector<double> w(static_cast<std::size_t>(2 * R + 1));
  for (int n = 0; n <= 2 * R; ++n) {
    w[static_cast<std::size_t>(n)] =
        (std::lgamma(2.0 * R + 1.0) - std::lgamma(n + 1.0) - std::lgamma(2.0 * R - n + 1.0)) / std::numbers::ln2;
  }
  return w;
}

// ------------------------------------------------------- exact propagation

std::vector<PropagatedClass> propagate_classes(
    const TransitionLaw& law, const Eigen::VectorXd& rho0, std::span<const int> times,
    const std::function<const SpatialPartition&(std::size_t, std::span<const int>)>& partition_at,
    std::size_t cap) {
  const auto cells = static_cast<Eigen::Index>(law.cells());
  if (rho0.size() != cells) throw Error("initial condition size does not match the kernel");
  struct Branch {
    ClassLabel label;
    Eigen::VectorXd mass;
  };
  std::vector<Branch> frontier;
  frontier.push_back({{}, rho0});
  std::map<int, Eigen::MatrixXd> kernels;
  int previous = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const int gap = times[k] - previous;
    if (gap < 0 || (k > 0 && gap == 0)) throw ConfigError("times must be increasing and non-negative", "times");
    previous = times[k];
    const Eigen::MatrixXd* step = nullptr;
    if (gap > 0) {
      auto it = kernels.find(gap);
      if (it == kernels.end()) it = kernels.emplace(gap, law.over(gap)).first;
      step = &it->second;
    }
    std::vector<Branch> next;
    std::vector<double> bin_mass;
    for (auto& branch : frontier) {
      const Eigen::VectorXd w = step ? Eigen::VectorXd(*step * branch.mass) : std::move(branch.mass);
      const SpatialPartition& part = partition_at(k, branch.label);
      if (part.cell_count() != law.cells()) throw Error("partition does not match the kernel's cells");
      bin_mass.assign(part.bin_count(), 0.0);
      for (Eigen::Index c = 0; c < cells; ++c) bin_mass[static_cast<std::size_t>(part.bin_of(static_cast<std::size_t>(c)))] += w[c];
      for (std::size_t b = 0; b < bin_mass.size(); ++b) {
        if (!(bin_mass[b] > 0.0)) continue;
        Branch child{branch.label, Eigen::VectorXd::Zero(cells)};
        child.label.push_back(static_cast<int>(b));
        for (std::size_t c : part.cells_in(static_cast<int>(b))) child.mass[static_cast<Eigen::Index>(c)] = w[static_cast<Eigen::Index>(c)];
        next.push_back(std::move(child));
        if (next.size() > cap) {
          throw CapacityError("more than " + std::to_string(cap) +
                              " live history classes; use the Monte Carlo path for this graining");
        }
      }
    }
    frontier = std::move(next);
  }
  std::vector<PropagatedClass> out;
  out.reserve(frontier.size());
  for (auto& b : frontier) out.push_back({std::move(b.label), b.mass.sum()});
  return out;
}

HistoryDistribution exact_history_probs(const TransitionLaw& law, const InitialCondition& rho0,
                                        const CoarseGraining& cg, const StateSpace& space,
                                        const ExactOptions& options) {
  rho0.validate(1e-9);
  if (law.cells() != space.cell_count()) throw Error("kernel and state space disagree on the cell count");
  const auto& times = cg.grid().coarse_times();
  auto classes = propagate_classes(
      law, rho0.cell_probs, times,
      [&cg](std::size_t k, std::span<const int> prefix) -> const SpatialPartition& { return cg.partition_at(k, prefix); },
      options.class_cap);
  HistoryDistribution hd;
  hd.fine_times = cg.grid().fine_times();
  hd.coarse_times = static_cast<int>(times.size());
  hd.log2_trace_identity = hd.fine_times * space.log2_volume();
  hd.classes.reserve(classes.size());
  for (auto& c : classes) {
    const double volume = projector_volume(cg, c.label, space);
    hd.classes.push_back({std::move(c.label), c.probability, volume});
  }
  hd.validate(1e-9);
  return hd;
}

// ------------------------------------------------------------------- models

namespace {

using nlohmann::json;

template <typename T>
void read_key(const json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError("must be an integer", path + "." + key);
    if constexpr (std::is_unsigned_v<T>) {
      if (v.get<long long>() < 0) throw ConfigError("must be non-negative", path + "." + key);
    }
  } else {
    if (!v.is_number()) throw ConfigError("must be a number", path + "." + key);
  }
  out = v.get<T>();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& path) {
  for (const auto& [key, _] : j.items()) {
    if (key == "model") continue;
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
      throw ConfigError("unknown key", path + "." + key);
    }
  }
}

}  // namespace

ModelConfig model_from_json(const json& j) {
  const std::string path = "model";
  if (!j.is_object()) throw ConfigError("must be an object", path);
  if (!j.contains("model") || !j["model"].is_string()) throw ConfigError("missing model name", path + ".model");
  const auto name = j["model"].get<std::string>();
  if (name == "rw") {
    RandomWalkModel m;
    check_keys(j, {"V", "N", "x0"}, path);
    read_key(j, "V", m.sites, path);
    read_key(j, "N", m.steps, path);
    read_key(j, "x0", m.start, path);
    if (m.sites < 2) throw ConfigError("need V >= 2", path + ".V");
    if (m.steps < 1) throw ConfigError("need N >= 1", path + ".N");
    if (m.start >= m.sites) throw ConfigError("must lie on the lattice", path + ".x0");
    return m;
  }
  if (name == "diffusion") {
    DiffusionModel m;
    check_keys(j, {"V", "D", "N", "eta", "cell", "x0"}, path);
    read_key(j, "V", m.volume, path);
    read_key(j, "D", m.diffusion, path);
    read_key(j, "N", m.steps, path);
    read_key(j, "eta", m.eta, path);
    read_key(j, "cell", m.cell, path);
    read_key(j, "x0", m.start, path);
    if (!(m.diffusion > 0.0)) throw ConfigError("must be positive", path + ".D");
    if (!(m.eta > 0.0)) throw ConfigError("must be positive", path + ".eta");
    if (m.steps < 1) throw ConfigError("need N >= 1", path + ".N");
    model_space(m);
    return m;
  }
  if (name == "brownian") {
    BrownianModel m;
    check_keys(j, {"V", "gamma", "a", "m", "N", "eta", "cell", "x0", "p0"}, path);
    read_key(j, "V", m.volume, path);
    read_key(j, "gamma", m.params.gamma, path);
    read_key(j, "a", m.params.a, path);
    read_key(j, "m", m.params.m, path);
    read_key(j, "N", m.steps, path);
    read_key(j, "eta", m.eta, path);
    read_key(j, "cell", m.cell, path);
    read_key(j, "x0", m.start.x, path);
    read_key(j, "p0", m.start.p, path);
    m.params.validate();
    if (!(m.eta > 0.0)) throw ConfigError("must be positive", path + ".eta");
    if (m.steps < 1) throw ConfigError("need N >= 1", path + ".N");
    model_space(m);
    return m;
  }
  if (name == "urn") {
    UrnModel m;
    check_keys(j, {"balls", "n0", "N"}, path);
    read_key(j, "balls", m.balls, path);
    read_key(j, "n0", m.start, path);
    read_key(j, "N", m.steps, path);
    if (m.balls < 2 || m.balls % 2 != 0) throw ConfigError("must be a positive even number", path + ".balls");
    if (m.start < 0 || m.start > m.balls) throw ConfigError("must lie in 0..balls", path + ".n0");
    if (m.steps < 1) throw ConfigError("need N >= 1", path + ".N");
    return m;
  }
  if (name == "random") {
    RandomKernelModel m;
    check_keys(j, {"V", "N", "kernel_seed", "x0"}, path);
    read_key(j, "V", m.sites, path);
    read_key(j, "N", m.steps, path);
    read_key(j, "kernel_seed", m.kernel_seed, path);
    if (j.contains("x0")) {
      std::size_t x0 = 0;
      read_key(j, "x0", x0, path);
      m.start = x0;
    }
    if (m.sites < 1) throw ConfigError("need V >= 1", path + ".V");
    if (m.steps < 1) throw ConfigError("need N >= 1", path + ".N");
    if (m.start && *m.start >= m.sites) throw ConfigError("must lie on the lattice", path + ".x0");
    return m;
  }
  throw ConfigError("unknown model '" + name + "'", path + ".model");
}

json model_to_json(const ModelConfig& model) {
  return std::visit(
      [](const auto& m) -> json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, RandomWalkModel>) {
          return {{"model", "rw"}, {"V", m.sites}, {"N", m.steps}, {"x0", m.start}};
        } else if constexpr (std::is_same_v<M, DiffusionModel>) {
          return {{"model", "diffusion"}, {"V", m.volume}, {"D", m.diffusion}, {"N", m.steps},
                  {"eta", m.eta},         {"cell", m.cell}, {"x0", m.start}};
        } else if constexpr (std::is_same_v<M, BrownianModel>) {
          return {{"model", "brownian"}, {"V", m.volume},   {"gamma", m.params.gamma}, {"a", m.params.a},
                  {"m", m.params.m},     {"N", m.steps},    {"eta", m.eta},            {"cell", m.cell},
                  {"x0", m.start.x},     {"p0", m.start.p}};
        } else if constexpr (std::is_same_v<M, UrnModel>) {
          return {{"model", "urn"}, {"balls", m.balls}, {"n0", m.start}, {"N", m.steps}};
        } else {
          json j{{"model", "random"}, {"V", m.sites}, {"N", m.steps}, {"kernel_seed", m.kernel_seed}};
          if (m.start) j["x0"] = *m.start;
          return j;
        }
      },
      model);
}

std::string model_name(const ModelConfig& model) { return model_to_json(model)["model"].get<std::string>(); }

StateSpace model_space(const ModelConfig& model) {
  return std::visit(
      [](const auto& m) -> StateSpace {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, RandomWalkModel>) {
          return StateSpace::lattice(m.sites, Boundary::periodic);
        } else if constexpr (std::is_same_v<M, DiffusionModel> || std::is_same_v<M, BrownianModel>) {
          const double ratio = m.volume / m.cell;
          const double cells = std::round(ratio);
          if (!(m.cell > 0.0) || cells < 1.0 || std::abs(ratio - cells) > 1e-9 * cells) {
            throw ConfigError("cell width must divide V", "model.cell");
          }
          return StateSpace::continuum(m.volume, static_cast<std::size_t>(cells), -m.volume / 2.0, Boundary::open);
        } else if constexpr (std::is_same_v<M, UrnModel>) {
          return StateSpace::weighted(urn_log2_multiplicities(m.balls / 2));
        } else {
          return StateSpace::lattice(m.sites, Boundary::open);
        }
      },
      model);
}

int model_steps(const ModelConfig& model) {
  return std::visit([](const auto& m) { return m.steps; }, model);
}

double model_eta(const ModelConfig& model) {
  return std::visit(
      [](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, DiffusionModel> || std::is_same_v<M, BrownianModel>) {
          return m.eta;
        } else {
          return 1.0;
        }
      },
      model);
}

InitialCondition model_initial(const ModelConfig& model) {
  const StateSpace space = model_space(model);
  return std::visit(
      [&space](const auto& m) -> InitialCondition {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, RandomWalkModel>) {
          return InitialCondition::point_cell(space, m.start);
        } else if constexpr (std::is_same_v<M, DiffusionModel>) {
          return InitialCondition::point_position(space, m.start);
        } else if constexpr (std::is_same_v<M, BrownianModel>) {
          return InitialCondition::point_position(space, m.start.x);
        } else if constexpr (std::is_same_v<M, UrnModel>) {
          return InitialCondition::point_cell(space, static_cast<std::size_t>(m.start));
        } else {
          if (m.start) return InitialCondition::point_cell(space, *m.start);
          const auto n = static_cast<Eigen::Index>(m.sites);
          return InitialCondition::distribution(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
        }
      },
      model);
}

std::optional<TransitionLaw> model_law(const ModelConfig& model) {
  const StateSpace space = model_space(model);
  return std::visit(
      [&space](const auto& m) -> std::optional<TransitionLaw> {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, RandomWalkModel>) {
          return TransitionLaw(random_walk_kernel(space));
        } else if constexpr (std::is_same_v<M, DiffusionModel>) {
          return diffusion_law(m.diffusion, m.eta, space);
        } else if constexpr (std::is_same_v<M, BrownianModel>) {
          return std::nullopt;
        } else if constexpr (std::is_same_v<M, UrnModel>) {
          return TransitionLaw(urn_kernel(m.balls / 2));
        } else {
          std::mt19937_64 rng(m.kernel_seed);
          return TransitionLaw(random_kernel(m.sites, rng));
        }
      },
      model);
}

bool model_is_continuum(const ModelConfig& model) {
  return std::holds_alternative<DiffusionModel>(model) || std::holds_alternative<BrownianModel>(model);
}

// ----------------------------------------------------------------- samplers

PhaseState brownian_step(PhaseState state, double dt, const BrownianParams& params, std::mt19937_64& rng) {
  const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
  PhaseState next;
  next.x = state.x + state.p / params.m * dt;
  next.p = state.p - 2.0 * params.gamma * state.p * dt + params.a * std::sqrt(dt) * z;
  return next;
}

HistorySampler::HistorySampler(const ModelConfig& model)
    : model_(model), space_(model_space(model)), steps_(model_steps(model)) {
  const InitialCondition ic = model_initial(model);
  start_cumulative_.resize(static_cast<std::size_t>(ic.cell_probs.size()));
  double acc = 0.0;
  for (Eigen::Index c = 0; c < ic.cell_probs.size(); ++c) {
    acc += ic.cell_probs[c];
    start_cumulative_[static_cast<std::size_t>(c)] = acc;
    if (ic.cell_probs[c] == 1.0) {
      start_cell_ = static_cast<std::size_t>(c);
      point_start_ = true;
    }
  }
  if (std::holds_alternative<UrnModel>(model) || std::holds_alternative<RandomKernelModel>(model)) {
    const Eigen::MatrixXd k = model_law(model)->over(1);
    cumulative_.resize(static_cast<std::size_t>(k.cols()));
    for (Eigen::Index y = 0; y < k.cols(); ++y) {
      auto& cdf = cumulative_[static_cast<std::size_t>(y)];
      double run = 0.0;
      for (Eigen::Index x = 0; x < k.rows(); ++x) {
        run += k(x, y);
        cdf.push_back(run);
      }
    }
  }
}

void HistorySampler::sample(std::mt19937_64& rng, std::span<std::uint32_t> cells) const {
  if (cells.size() != static_cast<std::size_t>(steps_)) throw Error("history buffer has the wrong length");
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, RandomWalkModel>) {
          const auto v = static_cast<std::int64_t>(m.sites);
          std::int64_t x = static_cast<std::int64_t>(m.start);
          std::uint64_t bits = 0;
          for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i % 64 == 0) bits = rng();
            x += (bits & 1u) ? 1 : -1;
            bits >>= 1;
            x = ((x % v) + v) % v;
            cells[i] = static_cast<std::uint32_t>(x);
          }
        } else if constexpr (std::is_same_v<M, DiffusionModel>) {
          std::normal_distribution<double> gauss(0.0, std::sqrt(m.diffusion * m.eta / 2.0));
          const double lo = space_.origin();
          const double hi = lo + space_.volume();
          double x = m.start;
          for (auto& c : cells) {
            x += gauss(rng);
            reflect(x, lo, hi);
            c = static_cast<std::uint32_t>(space_.cell_of(x));
          }
        } else if constexpr (std::is_same_v<M, BrownianModel>) {
          const double lo = space_.origin();
          const double hi = lo + space_.volume();
          PhaseState s = m.start;
          for (auto& c : cells) {
            s = brownian_step(s, m.eta, m.params, rng);
            if (reflect(s.x, lo, hi)) s.p = -s.p;
            c = static_cast<std::uint32_t>(space_.cell_of(s.x));
          }
        } else {
          std::uint32_t x = point_start_ ? static_cast<std::uint32_t>(start_cell_)
                                         : sample_cumulative(start_cumulative_, rng);
          for (auto& c : cells) {
            x = sample_cumulative(cumulative_[x], rng);
            c = x;
          }
        }
      },
      model_);
}

}  // namespace histent
