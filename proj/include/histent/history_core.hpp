#pragma once

// Fine-grained history space and its coarse-grainings.
//
// A fine-grained history is one finest cell index per fine time 1..N. A
// coarse-graining picks coarse times t_1 < ... < t_n out of the fine grid and a
// spatial partition at each of them; a class label is the sequence of bin
// indices (earliest time first). All volumes are kept as log2 values.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace histent {

enum class SpaceKind { discrete_lattice, binned_continuum };
enum class Boundary { periodic, open };
enum class CoarsenMode { merge_bins, drop_times };

using ClassLabel = std::vector<int>;

class StateSpace {
 public:
  // Lattice of `sites` unit cells; V = sites.
  static StateSpace lattice(std::size_t sites, Boundary boundary = Boundary::periodic);
  // Interval [origin, origin + volume) cut into `cells` equal cells.
  static StateSpace continuum(double volume, std::size_t cells, double origin,
                              Boundary boundary = Boundary::open);
  // Discrete macrostates with multiplicities 2^log2_weight (e.g. urn occupation
  // numbers, whose weight is a binomial coefficient).
  static StateSpace weighted(std::vector<double> log2_weights);

  SpaceKind kind() const { return kind_; }
  Boundary boundary() const { return boundary_; }
  double volume() const { return volume_; }
  double log2_volume() const { return log2_volume_; }
  std::size_t cell_count() const { return log2_cell_volume_.size(); }
  double cell_width() const { return cell_width_; }
  double origin() const { return origin_; }
  double log2_cell_volume(std::size_t cell) const { return log2_cell_volume_.at(cell); }
  bool uniform_cells() const { return uniform_; }

  // Continuum position -> finest cell. Cell i holds origin + i*w <= x < origin + (i+1)*w.
  // The upper domain edge wraps (periodic) or lands in the last cell (open);
  // anything else outside the domain throws.
  std::size_t cell_of(double x) const;
  double cell_center(std::size_t cell) const;

 private:
  SpaceKind kind_ = SpaceKind::discrete_lattice;
  Boundary boundary_ = Boundary::periodic;
  double volume_ = 0.0;
  double log2_volume_ = 0.0;
  double cell_width_ = 1.0;
  double origin_ = 0.0;
  bool uniform_ = true;
  std::vector<double> log2_cell_volume_;
};

// Fine times are 1..N with spacing eta; the initial condition sits at t = 0.
class TimeGrid {
 public:
  TimeGrid(int fine_times, double eta, std::vector<int> coarse_times);
  // Coarse times dt, 2dt, ..., N. Requires dt | N.
  static TimeGrid uniform(int fine_times, double eta, int dt);

  int fine_times() const { return fine_times_; }
  double eta() const { return eta_; }
  double duration() const { return fine_times_ * eta_; }
  const std::vector<int>& coarse_times() const { return coarse_; }
  std::size_t coarse_count() const { return coarse_.size(); }

 private:
  int fine_times_;
  double eta_;
  std::vector<int> coarse_;
};

// Exhaustive, mutually exclusive grouping of the finest cells into bins.
class SpatialPartition {
 public:
  // Equal bins of width `bin_width` (space units). Must divide V and be a
  // whole number of finest cells.
  static SpatialPartition uniform(const StateSpace& space, double bin_width);
  // Arbitrary grouping; bins must be labelled 0..B-1 and each be non-empty.
  static SpatialPartition from_cell_map(const StateSpace& space, std::vector<int> cell_to_bin);
  static SpatialPartition finest(const StateSpace& space);

  int bin_of(std::size_t cell) const { return cell_to_bin_.at(cell); }
  std::size_t bin_count() const { return bins_.size(); }
  std::size_t cell_count() const { return cell_to_bin_.size(); }
  double log2_bin_volume(int bin) const { return log2_volume_.at(static_cast<std::size_t>(bin)); }
  const std::vector<std::size_t>& cells_in(int bin) const { return bins_.at(static_cast<std::size_t>(bin)); }
  const std::vector<int>& cell_map() const { return cell_to_bin_; }
  std::optional<double> bin_width() const { return bin_width_; }
  bool is_finest() const { return bins_.size() == cell_to_bin_.size(); }

  // Groups consecutive bins [f*b, f*b + f) into one. Requires factor | bin_count.
  SpatialPartition merged(int factor) const;

  bool operator==(const SpatialPartition& other) const { return cell_to_bin_ == other.cell_to_bin_; }

 private:
  SpatialPartition() = default;
  void index(const StateSpace& space);

  std::vector<int> cell_to_bin_;
  std::vector<std::vector<std::size_t>> bins_;
  std::vector<double> log2_volume_;
  std::optional<double> bin_width_;
};

class CoarseGraining {
 public:
  using BranchMap = std::map<ClassLabel, SpatialPartition>;

  // One partition per coarse time. `branches[k]`, when present, overrides the
  // partition at coarse time k for the listed prefixes (alpha_1..alpha_{k-1}).
  CoarseGraining(TimeGrid grid, std::vector<SpatialPartition> partitions,
                 std::vector<BranchMap> branches = {});

  // Bins of width dx at times dt, 2dt, ..., N.
  static CoarseGraining uniform(const StateSpace& space, int fine_times, double eta, double dx, int dt);

  const TimeGrid& grid() const { return grid_; }
  std::size_t coarse_count() const { return grid_.coarse_count(); }
  const SpatialPartition& partition_at(std::size_t k, std::span<const int> prefix) const;
  const SpatialPartition& default_partition(std::size_t k) const { return partitions_.at(k); }
  bool branch_dependent() const;
  const std::vector<BranchMap>& branches() const { return branches_; }

  // Set when built by `uniform` (or from a uniform JSON spec).
  std::optional<double> dx() const { return dx_; }
  std::optional<int> dt() const { return dt_; }

  // {"dx": number, "dt": integer, "times": [...]} for branch-independent
  // uniform-width grainings.
  nlohmann::json to_json() const;

 private:
  TimeGrid grid_;
  std::vector<SpatialPartition> partitions_;
  std::vector<BranchMap> branches_;
  std::optional<double> dx_;
  std::optional<int> dt_;

  friend CoarseGraining graining_from_json(const nlohmann::json&, const StateSpace&, int, double);
  friend CoarseGraining coarsen(const CoarseGraining&, CoarsenMode, int);
};

// Parses {"dx": number, "dt": integer, "times": [...]}. `times`, when given,
// overrides dt. Missing dx means the finest cell.
CoarseGraining graining_from_json(const nlohmann::json& spec, const StateSpace& space, int fine_times,
                                  double eta);

struct HistoryClass {
  ClassLabel label;
  double probability = 0.0;
  double log2_volume = 0.0;  // log2 Tr(P_alpha)
};

struct HistoryDistribution {
  std::vector<HistoryClass> classes;
  double log2_trace_identity = 0.0;  // N log2 V
  int fine_times = 0;
  int coarse_times = 0;

  double total_probability() const;
  // Throws InvariantViolation on negative entries, bad normalisation or an
  // over-sized class volume.
  void validate(double tol = 1e-9) const;
};

// log2 of the number (or measure) of fine histories in class `label`.
double projector_volume(const CoarseGraining& cg, std::span<const int> label, const StateSpace& space);

// Class of a fine history given as finest-cell indices at fine times 1..N.
ClassLabel classify(std::span<const std::uint32_t> cells, const CoarseGraining& cg);
// Same for continuum positions.
ClassLabel classify_positions(std::span<const double> positions, const StateSpace& space,
                              const CoarseGraining& cg);

// Returns a graining whose classes are unions of the input's classes.
CoarseGraining coarsen(const CoarseGraining& cg, CoarsenMode mode, int factor);

// Map from a fine label to the label it falls in under `coarsen(cg, mode, factor)`.
ClassLabel coarsen_label(std::span<const int> label, const CoarseGraining& cg, CoarsenMode mode, int factor);

// Every class of the graining (branch-dependent partitions honoured).
std::vector<ClassLabel> enumerate_classes(const CoarseGraining& cg, std::size_t cap = 1000000);

// Unions of chain classes (the general partitions of history space reachable
// from product chains). Every class of `cg` must appear in `group`; classes
// sharing a group id are merged, including zero-probability ones for the
// volume. Labels of the result are {group id}.
HistoryDistribution merge_classes(const HistoryDistribution& hd, const CoarseGraining& cg, const StateSpace& space,
                                  const std::map<ClassLabel, int>& group);

double log2_sum_exp2(std::span<const double> values);

}  // namespace histent
