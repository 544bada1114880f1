#include "histent/history_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "histent/error.hpp"

namespace histent {

namespace {

constexpr double kEdgeSnap = 1e-9;

// Nearest integer ratio a/b, or nullopt when a/b is not whole to 1e-9 relative.
std::optional<long long> whole_ratio(double a, double b) {
  const double r = a / b;
  const double n = std::round(r);
  if (n < 1.0 || std::abs(r - n) > 1e-9 * std::max(1.0, n)) return std::nullopt;
  return static_cast<long long>(n);
}

}  // namespace

double log2_sum_exp2(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double hi = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double v : values) acc += std::exp2(v - hi);
  return hi + std::log2(acc);
}

// ---------------------------------------------------------------- StateSpace

StateSpace StateSpace::lattice(std::size_t sites, Boundary boundary) {
  if (sites < 1) throw ConfigError("lattice needs at least one site", "V");
  StateSpace s;
  s.kind_ = SpaceKind::discrete_lattice;
  s.boundary_ = boundary;
  s.volume_ = static_cast<double>(sites);
  s.log2_volume_ = std::log2(s.volume_);
  s.cell_width_ = 1.0;
  s.log2_cell_volume_.assign(sites, 0.0);
  return s;
}

StateSpace StateSpace::continuum(double volume, std::size_t cells, double origin, Boundary boundary) {
  if (!(volume > 0.0)) throw ConfigError("volume must be positive", "V");
  if (cells < 1) throw ConfigError("need at least one cell", "cell");
  StateSpace s;
  s.kind_ = SpaceKind::binned_continuum;
  s.boundary_ = boundary;
  s.volume_ = volume;
  s.log2_volume_ = std::log2(volume);
  s.cell_width_ = volume / static_cast<double>(cells);
  s.origin_ = origin;
  s.log2_cell_volume_.assign(cells, std::log2(s.cell_width_));
  return s;
}

StateSpace StateSpace::weighted(std::vector<double> log2_weights) {
  if (log2_weights.empty()) throw ConfigError("weighted space needs at least one state");
  StateSpace s;
  s.kind_ = SpaceKind::discrete_lattice;
  s.boundary_ = Boundary::open;
  s.log2_volume_ = log2_sum_exp2(log2_weights);
  s.volume_ = std::exp2(s.log2_volume_);
  s.uniform_ = std::all_of(log2_weights.begin(), log2_weights.end(),
                           [&](double w) { return w == log2_weights.front(); });
  s.log2_cell_volume_ = std::move(log2_weights);
  return s;
}

std::size_t StateSpace::cell_of(double x) const {
  const std::size_t n = cell_count();
  const double u = (x - origin_) / cell_width_;
  if (!std::isfinite(u)) throw Error("state is not finite");
  double i = std::floor(u);
  // Left-closed edges: a point that floating point puts a hair below an edge
  // belongs to the upper cell.
  if (i + 1.0 - u <= kEdgeSnap) i += 1.0;
  if (i < 0.0 || i > static_cast<double>(n)) {
    throw Error("state " + std::to_string(x) + " lies outside the state space");
  }
  if (i == static_cast<double>(n)) {
    if (u - static_cast<double>(n) > kEdgeSnap) {
      throw Error("state " + std::to_string(x) + " lies outside the state space");
    }
    return boundary_ == Boundary::periodic ? 0 : n - 1;
  }
  return static_cast<std::size_t>(i);
}

double StateSpace::cell_center(std::size_t cell) const {
  return origin_ + (static_cast<double>(cell) + 0.5) * cell_width_;
}

// ------------------------------------------------------------------ TimeGrid

TimeGrid::TimeGrid(int fine_times, double eta, std::vector<int> coarse_times)
    : fine_times_(fine_times), eta_(eta), coarse_(std::move(coarse_times)) {
  if (fine_times_ < 1) throw ConfigError("need at least one fine time", "N");
  if (!(eta_ > 0.0)) throw ConfigError("timestep must be positive", "eta");
  if (coarse_.empty()) throw ConfigError("need at least one coarse time", "times");
  for (std::size_t k = 0; k < coarse_.size(); ++k) {
    if (coarse_[k] < 1 || coarse_[k] > fine_times_) {
      throw ConfigError("coarse time " + std::to_string(coarse_[k]) + " is not on the fine grid 1.." +
                            std::to_string(fine_times_),
                        "times");
    }
    if (k > 0 && coarse_[k] <= coarse_[k - 1]) throw ConfigError("coarse times must increase", "times");
  }
}

TimeGrid TimeGrid::uniform(int fine_times, double eta, int dt) {
  if (dt < 1 || fine_times < 1 || fine_times % dt != 0) {
    throw ConfigError("dt=" + std::to_string(dt) + " does not divide N=" + std::to_string(fine_times), "dt");
  }
  std::vector<int> times;
  for (int t = dt; t <= fine_times; t += dt) times.push_back(t);
  return TimeGrid(fine_times, eta, std::move(times));
}

// ---------------------------------------------------------- SpatialPartition

void SpatialPartition::index(const StateSpace& space) {
  if (cell_to_bin_.size() != space.cell_count()) throw ConfigError("partition does not cover the state space");
  int bins = 0;
  for (int b : cell_to_bin_) {
    if (b < 0) throw ConfigError("negative bin index");
    bins = std::max(bins, b + 1);
  }
  bins_.assign(static_cast<std::size_t>(bins), {});
  for (std::size_t c = 0; c < cell_to_bin_.size(); ++c) bins_[static_cast<std::size_t>(cell_to_bin_[c])].push_back(c);
  log2_volume_.resize(bins_.size());
  std::vector<double> w;
  for (std::size_t b = 0; b < bins_.size(); ++b) {
    if (bins_[b].empty()) throw ConfigError("bin " + std::to_string(b) + " is empty");
    w.clear();
    for (std::size_t c : bins_[b]) w.push_back(space.log2_cell_volume(c));
    log2_volume_[b] = log2_sum_exp2(w);
  }
}

SpatialPartition SpatialPartition::uniform(const StateSpace& space, double bin_width) {
  if (!(bin_width > 0.0)) throw ConfigError("bin width must be positive", "dx");
  const auto per_bin = whole_ratio(bin_width, space.cell_width());
  if (!per_bin) {
    throw ConfigError("dx=" + std::to_string(bin_width) + " is not a whole number of finest cells", "dx");
  }
  const auto cells = static_cast<long long>(space.cell_count());
  if (cells % *per_bin != 0) {
    throw ConfigError("dx=" + std::to_string(bin_width) + " does not divide V", "dx");
  }
  SpatialPartition p;
  p.cell_to_bin_.resize(space.cell_count());
  for (std::size_t c = 0; c < space.cell_count(); ++c) p.cell_to_bin_[c] = static_cast<int>(static_cast<long long>(c) / *per_bin);
  p.bin_width_ = static_cast<double>(*per_bin) * space.cell_width();
  p.index(space);
  return p;
}

SpatialPartition SpatialPartition::from_cell_map(const StateSpace& space, std::vector<int> cell_to_bin) {
  SpatialPartition p;
  p.cell_to_bin_ = std::move(cell_to_bin);
  p.index(space);
  return p;
}

SpatialPartition SpatialPartition::finest(const StateSpace& space) {
  std::vector<int> map(space.cell_count());
  std::iota(map.begin(), map.end(), 0);
  SpatialPartition p = from_cell_map(space, std::move(map));
  if (space.uniform_cells()) p.bin_width_ = space.cell_width();
  return p;
}

SpatialPartition SpatialPartition::merged(int factor) const {
  if (factor < 1 || bin_count() % static_cast<std::size_t>(factor) != 0) {
    throw ConfigError("merge factor " + std::to_string(factor) + " does not divide bin count " +
                      std::to_string(bin_count()));
  }
  SpatialPartition p;
  p.cell_to_bin_.resize(cell_to_bin_.size());
  for (std::size_t c = 0; c < cell_to_bin_.size(); ++c) p.cell_to_bin_[c] = cell_to_bin_[c] / factor;
  p.bins_.assign(bins_.size() / static_cast<std::size_t>(factor), {});
  p.log2_volume_.resize(p.bins_.size());
  for (std::size_t b = 0; b < p.bins_.size(); ++b) {
    std::vector<double> w;
    for (int j = 0; j < factor; ++j) {
      const std::size_t old = b * static_cast<std::size_t>(factor) + static_cast<std::size_t>(j);
      p.bins_[b].insert(p.bins_[b].end(), bins_[old].begin(), bins_[old].end());
      w.push_back(log2_volume_[old]);
    }
    std::sort(p.bins_[b].begin(), p.bins_[b].end());
    p.log2_volume_[b] = log2_sum_exp2(w);
  }
  if (bin_width_) p.bin_width_ = *bin_width_ * factor;
  return p;
}

// ------------------------------------------------------------ CoarseGraining

CoarseGraining::CoarseGraining(TimeGrid grid, std::vector<SpatialPartition> partitions,
                               std::vector<BranchMap> branches)
    : grid_(std::move(grid)), partitions_(std::move(partitions)), branches_(std::move(branches)) {
  if (partitions_.size() != grid_.coarse_count()) {
    throw ConfigError("need one partition per coarse time");
  }
  const std::size_t cells = partitions_.front().cell_count();
  for (const auto& p : partitions_) {
    if (p.cell_count() != cells) throw ConfigError("partitions disagree on the cell count");
  }
  if (branches_.size() > partitions_.size()) throw ConfigError("branch overrides beyond the last coarse time");
  branches_.resize(partitions_.size());
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    for (const auto& [prefix, part] : branches_[k]) {
      if (prefix.size() != k) throw ConfigError("branch prefix length must equal its coarse-time index");
      if (part.cell_count() != cells) throw ConfigError("branch partition has the wrong cell count");
    }
  }
}

CoarseGraining CoarseGraining::uniform(const StateSpace& space, int fine_times, double eta, double dx, int dt) {
  TimeGrid grid = TimeGrid::uniform(fine_times, eta, dt);
  const SpatialPartition part = SpatialPartition::uniform(space, dx);
  std::vector<SpatialPartition> parts(grid.coarse_count(), part);
  CoarseGraining cg(std::move(grid), std::move(parts));
  cg.dx_ = part.bin_width();
  cg.dt_ = dt;
  return cg;
}

const SpatialPartition& CoarseGraining::partition_at(std::size_t k, std::span<const int> prefix) const {
  const auto& overrides = branches_.at(k);
  if (!overrides.empty()) {
    auto it = overrides.find(ClassLabel(prefix.begin(), prefix.begin() + static_cast<std::ptrdiff_t>(k)));
    if (it != overrides.end()) return it->second;
  }
  return partitions_[k];
}

bool CoarseGraining::branch_dependent() const {
  return std::any_of(branches_.begin(), branches_.end(), [](const BranchMap& m) { return !m.empty(); });
}

nlohmann::json CoarseGraining::to_json() const {
  if (branch_dependent()) throw ConfigError("branch-dependent grainings have no compact JSON form");
  const auto width = partitions_.front().bin_width();
  for (const auto& p : partitions_) {
    if (!(p.bin_width() && width && *p.bin_width() == *width)) {
      throw ConfigError("only uniform-width grainings have a compact JSON form");
    }
  }
  nlohmann::json j;
  j["dx"] = *width;
  if (dt_) j["dt"] = *dt_;
  j["times"] = grid_.coarse_times();
  return j;
}

CoarseGraining graining_from_json(const nlohmann::json& spec, const StateSpace& space, int fine_times, double eta) {
  if (!spec.is_object()) throw ConfigError("graining must be an object", "graining");
  for (const auto& [key, _] : spec.items()) {
    if (key != "dx" && key != "dt" && key != "times") throw ConfigError("unknown key", "graining." + key);
  }
  double dx = space.cell_width();
  if (spec.contains("dx")) {
    if (!spec["dx"].is_number()) throw ConfigError("must be a number", "graining.dx");
    dx = spec["dx"].get<double>();
  }
  std::optional<int> dt;
  if (spec.contains("dt")) {
    if (!spec["dt"].is_number_integer()) throw ConfigError("must be an integer", "graining.dt");
    dt = spec["dt"].get<int>();
  }
  std::optional<TimeGrid> grid;
  if (spec.contains("times")) {
    if (!spec["times"].is_array()) throw ConfigError("must be an array of integers", "graining.times");
    std::vector<int> times;
    for (const auto& t : spec["times"]) {
      if (!t.is_number_integer()) throw ConfigError("must be an array of integers", "graining.times");
      times.push_back(t.get<int>());
    }
    grid.emplace(fine_times, eta, std::move(times));
  } else {
    grid.emplace(TimeGrid::uniform(fine_times, eta, dt.value_or(1)));
    if (!dt) dt = 1;
  }
  const SpatialPartition part = SpatialPartition::uniform(space, dx);
  std::vector<SpatialPartition> parts(grid->coarse_count(), part);
  CoarseGraining cg(std::move(*grid), std::move(parts));
  cg.dx_ = part.bin_width();
  cg.dt_ = dt;
  return cg;
}

// -------------------------------------------------------- HistoryDistribution

double HistoryDistribution::total_probability() const {
  double s = 0.0;
  for (const auto& c : classes) s += c.probability;
  return s;
}

void HistoryDistribution::validate(double tol) const {
  for (const auto& c : classes) {
    if (!(c.probability >= 0.0)) throw InvariantViolation("negative class probability");
    if (c.log2_volume > log2_trace_identity + 1e-9 * std::max(1.0, std::abs(log2_trace_identity))) {
      throw InvariantViolation("class volume exceeds Tr(I)");
    }
  }
  if (std::abs(total_probability() - 1.0) > tol) {
    throw InvariantViolation("class probabilities sum to " + std::to_string(total_probability()));
  }
}

// ------------------------------------------------------------------ queries

double projector_volume(const CoarseGraining& cg, std::span<const int> label, const StateSpace& space) {
  const std::size_t n = cg.coarse_count();
  if (label.size() != n) throw Error("label length does not match the number of coarse times");
  double v = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const SpatialPartition& p = cg.partition_at(k, label);
    if (label[k] < 0 || static_cast<std::size_t>(label[k]) >= p.bin_count()) {
      throw Error("unknown class label: bin " + std::to_string(label[k]) + " at coarse time " + std::to_string(k));
    }
    v += p.log2_bin_volume(label[k]);
  }
  v += static_cast<double>(cg.grid().fine_times() - static_cast<int>(n)) * space.log2_volume();
  return v;
}

ClassLabel classify(std::span<const std::uint32_t> cells, const CoarseGraining& cg) {
  const auto& times = cg.grid().coarse_times();
  if (cells.size() != static_cast<std::size_t>(cg.grid().fine_times())) {
    throw Error("history length does not match the fine grid");
  }
  ClassLabel label(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const SpatialPartition& p = cg.partition_at(k, label);
    const std::uint32_t c = cells[static_cast<std::size_t>(times[k] - 1)];
    if (c >= p.cell_count()) throw Error("state outside the state space");
    label[k] = p.bin_of(c);
  }
  return label;
}

ClassLabel classify_positions(std::span<const double> positions, const StateSpace& space, const CoarseGraining& cg) {
  std::vector<std::uint32_t> cells(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) cells[i] = static_cast<std::uint32_t>(space.cell_of(positions[i]));
  return classify(cells, cg);
}

CoarseGraining coarsen(const CoarseGraining& cg, CoarsenMode mode, int factor) {
  if (cg.branch_dependent()) throw ConfigError("coarsening of branch-dependent grainings is not supported");
  const std::size_t n = cg.coarse_count();
  std::vector<SpatialPartition> parts;
  if (mode == CoarsenMode::merge_bins) {
    for (std::size_t k = 0; k < n; ++k) parts.push_back(cg.default_partition(k).merged(factor));
    CoarseGraining out(cg.grid(), std::move(parts));
    out.dx_ = out.default_partition(0).bin_width();
    out.dt_ = cg.dt_;
    return out;
  }
  if (factor < 1 || n % static_cast<std::size_t>(factor) != 0) {
    throw ConfigError("drop factor " + std::to_string(factor) + " does not divide the coarse-time count " +
                      std::to_string(n));
  }
  std::vector<int> times;
  for (std::size_t k = 0; k < n; ++k) {
    if ((k + 1) % static_cast<std::size_t>(factor) == 0) {
      times.push_back(cg.grid().coarse_times()[k]);
      parts.push_back(cg.default_partition(k));
    }
  }
  CoarseGraining out(TimeGrid(cg.grid().fine_times(), cg.grid().eta(), std::move(times)), std::move(parts));
  out.dx_ = cg.dx_;
  if (cg.dt_) out.dt_ = *cg.dt_ * factor;
  return out;
}

ClassLabel coarsen_label(std::span<const int> label, const CoarseGraining& cg, CoarsenMode mode, int factor) {
  if (label.size() != cg.coarse_count()) throw Error("label length does not match the graining");
  ClassLabel out;
  if (mode == CoarsenMode::merge_bins) {
    for (int b : label) out.push_back(b / factor);
  } else {
    for (std::size_t k = 0; k < label.size(); ++k) {
      if ((k + 1) % static_cast<std::size_t>(factor) == 0) out.push_back(label[k]);
    }
  }
  return out;
}

std::vector<ClassLabel> enumerate_classes(const CoarseGraining& cg, std::size_t cap) {
  std::vector<ClassLabel> frontier{ClassLabel{}};
  for (std::size_t k = 0; k < cg.coarse_count(); ++k) {
    std::vector<ClassLabel> next;
    for (const auto& prefix : frontier) {
      const auto& p = cg.partition_at(k, prefix);
      for (std::size_t b = 0; b < p.bin_count(); ++b) {
        ClassLabel l = prefix;
        l.push_back(static_cast<int>(b));
        next.push_back(std::move(l));
        if (next.size() > cap) throw CapacityError("graining has more than " + std::to_string(cap) + " classes");
      }
    }
    frontier = std::move(next);
  }
  return frontier;
}

HistoryDistribution merge_classes(const HistoryDistribution& hd, const CoarseGraining& cg, const StateSpace& space,
                                  const std::map<ClassLabel, int>& group) {
  std::map<int, std::vector<double>> volumes;
  for (const auto& label : enumerate_classes(cg)) {
    auto it = group.find(label);
    if (it == group.end()) throw Error("class missing from the merge map");
    volumes[it->second].push_back(projector_volume(cg, label, space));
  }
  std::map<int, double> prob;
  for (const auto& c : hd.classes) prob[group.at(c.label)] += c.probability;
  HistoryDistribution out;
  out.log2_trace_identity = hd.log2_trace_identity;
  out.fine_times = hd.fine_times;
  out.coarse_times = hd.coarse_times;
  for (const auto& [g, p] : prob) out.classes.push_back({ClassLabel{g}, p, log2_sum_exp2(volumes.at(g))});
  return out;
}

}  // namespace histent
