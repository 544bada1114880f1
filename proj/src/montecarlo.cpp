#include "histent/montecarlo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include "histent/error.hpp"
#include "parallel.hpp"

namespace histent {

namespace {

constexpr std::uint32_t kVersion = 1;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t label_hash(std::span<const int> label) {
  std::uint64_t h = 0x243F6A8885A308D3ull;
  for (int b : label) h = splitmix64(h ^ static_cast<std::uint32_t>(b));
  return h;
}

void classify_into(std::span<const std::uint32_t> cells, const CoarseGraining& cg, ClassLabel& label) {
  const auto& times = cg.grid().coarse_times();
  label.resize(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const SpatialPartition& p = cg.partition_at(k, std::span<const int>(label).first(k));
    label[k] = p.bin_of(cells[static_cast<std::size_t>(times[k] - 1)]);
  }
}

template <typename T>
void put(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw Error("truncated ensemble stream");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(v);
}

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(values.size() - 1, lo + 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(index + 0x632BE59BD9B4E019ull));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

std::uint64_t model_hash(const ModelConfig& model) {
  const std::string text = model_to_json(model).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

unsigned resolve_workers(unsigned workers) {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

TrajectoryEnsemble sample_trajectories(const ModelConfig& model, std::size_t count, std::uint64_t seed,
                                       unsigned workers) {
  if (count < 1) throw ConfigError("need at least one trajectory", "count");
  const HistorySampler sampler(model);
  TrajectoryEnsemble e;
  e.model = model;
  e.seed = seed;
  e.count = count;
  e.steps = sampler.steps();
  e.cells = sampler.cells();
  e.data.resize(count * static_cast<std::size_t>(e.steps));
  detail::parallel_blocks(count, resolve_workers(workers), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto rng = stream_rng(seed, i);
      sampler.sample(rng, {e.data.data() + i * static_cast<std::size_t>(e.steps), static_cast<std::size_t>(e.steps)});
    }
  });
  return e;
}

ClassCounts count_classes(const TrajectoryEnsemble& ensemble, const CoarseGraining& cg, const StateSpace& space) {
  if (cg.grid().fine_times() != ensemble.steps) throw ConfigError("graining and ensemble disagree on N", "N");
  if (space.cell_count() != ensemble.cells) throw Error("state space does not match the ensemble");
  ClassCounts out;
  out.total = ensemble.count;
  out.log2_trace_identity = ensemble.steps * space.log2_volume();
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
  ClassLabel label, other;
  for (std::size_t i = 0; i < ensemble.count; ++i) {
    classify_into(ensemble.history(i), cg, label);
    auto& bucket = buckets[label_hash(label)];
    bool found = false;
    for (std::size_t c : bucket) {
      classify_into(ensemble.history(out.representative[c]), cg, other);
      if (other == label) {
        ++out.counts[c];
        found = true;
        break;
      }
    }
    if (!found) {
      bucket.push_back(out.counts.size());
      out.representative.push_back(i);
      out.counts.push_back(1);
      out.log2_volume.push_back(projector_volume(cg, label, space));
    }
  }
  return out;
}

HistoryDistribution estimate_distribution(const TrajectoryEnsemble& ensemble, const CoarseGraining& cg,
                                          const StateSpace& space) {
  const ClassCounts counts = count_classes(ensemble, cg, space);
  HistoryDistribution hd;
  hd.fine_times = ensemble.steps;
  hd.coarse_times = static_cast<int>(cg.coarse_count());
  hd.log2_trace_identity = counts.log2_trace_identity;
  for (std::size_t c = 0; c < counts.distinct(); ++c) {
    HistoryClass hc;
    classify_into(ensemble.history(counts.representative[c]), cg, hc.label);
    hc.probability = static_cast<double>(counts.counts[c]) / static_cast<double>(counts.total);
    hc.log2_volume = counts.log2_volume[c];
    hd.classes.push_back(std::move(hc));
  }
  return hd;
}

EntropyTerms plug_in_terms(const ClassCounts& counts, bool miller_madow) {
  EntropyTerms t;
  t.log2_trace_identity = counts.log2_trace_identity;
  const auto n = static_cast<double>(counts.total);
  for (std::size_t c = 0; c < counts.distinct(); ++c) {
    const double p = static_cast<double>(counts.counts[c]) / n;
    t.shannon -= p * std::log2(p);
    t.volume += p * counts.log2_volume[c];
  }
  if (miller_madow) t.shannon += static_cast<double>(counts.distinct() - 1) / (2.0 * n * std::numbers::ln2);
  return t;
}

EntropyEstimate entropy_with_error(const ClassCounts& counts, const EstimateOptions& options) {
  if (options.resamples < 2) throw ConfigError("need at least 2 bootstrap resamples", "resamples");
  if (!(options.confidence > 0.0 && options.confidence < 1.0)) throw ConfigError("confidence must lie in (0, 1)");
  EntropyEstimate est;
  est.terms = plug_in_terms(counts, options.miller_madow);
  est.count = counts.total;
  est.distinct = counts.distinct();
  est.bias_warning = static_cast<double>(est.distinct) > static_cast<double>(est.count) / 10.0;

  const double s_hat = est.terms.s_hs();
  std::vector<double> replicates(static_cast<std::size_t>(options.resamples));
  ClassCounts resampled = counts;
  for (int r = 0; r < options.resamples; ++r) {
    auto rng = stream_rng(options.seed ^ 0xB0075742A9ull, static_cast<std::uint64_t>(r));
    std::uint64_t left = counts.total;
    double mass_left = 1.0;
    resampled.counts.assign(counts.distinct(), 0);
    for (std::size_t c = 0; c < counts.distinct() && left > 0; ++c) {
      const double p = static_cast<double>(counts.counts[c]) / static_cast<double>(counts.total);
      const double share = c + 1 == counts.distinct() ? 1.0 : std::clamp(p / mass_left, 0.0, 1.0);
      const std::uint64_t k = std::binomial_distribution<std::uint64_t>(left, share)(rng);
      resampled.counts[c] = k;
      left -= k;
      mass_left -= p;
    }
    // Drop empty classes so the plug-in sums skip them.
    ClassCounts compact;
    compact.total = counts.total;
    compact.log2_trace_identity = counts.log2_trace_identity;
    for (std::size_t c = 0; c < counts.distinct(); ++c) {
      if (resampled.counts[c] == 0) continue;
      compact.counts.push_back(resampled.counts[c]);
      compact.log2_volume.push_back(counts.log2_volume[c]);
    }
    replicates[static_cast<std::size_t>(r)] = plug_in_terms(compact, options.miller_madow).s_hs();
  }
  const double alpha = 1.0 - options.confidence;
  // Basic bootstrap: reflect the replicate quantiles about the estimate.
  est.ci_lo = 2.0 * s_hat - quantile(replicates, 1.0 - alpha / 2.0);
  est.ci_hi = 2.0 * s_hat - quantile(replicates, alpha / 2.0);
  return est;
}

EntropyEstimate entropy_with_error(const TrajectoryEnsemble& ensemble, const CoarseGraining& cg,
                                   const StateSpace& space, const EstimateOptions& options) {
  return entropy_with_error(count_classes(ensemble, cg, space), options);
}

void write_ensemble(std::ostream& out, const TrajectoryEnsemble& e) {
  const std::uint32_t width = e.cells <= 65536 ? 2 : 4;
  out.write("HENS", 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, model_hash(e.model));
  put<std::uint64_t>(out, e.seed);
  put<std::uint64_t>(out, e.count);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(e.steps));
  put<std::uint32_t>(out, width);
  for (std::uint32_t c : e.data) {
    if (width == 2) {
      put<std::uint16_t>(out, static_cast<std::uint16_t>(c));
    } else {
      put<std::uint32_t>(out, c);
    }
  }
  if (!out) throw Error("failed to write ensemble stream");
}

TrajectoryEnsemble read_ensemble(std::istream& in, const ModelConfig& model) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "HENS", 4) != 0) throw Error("not an ensemble stream");
  if (get<std::uint32_t>(in) != kVersion) throw Error("unsupported ensemble version");
  if (get<std::uint64_t>(in) != model_hash(model)) throw Error("ensemble was sampled from a different model");
  TrajectoryEnsemble e;
  e.model = model;
  e.seed = get<std::uint64_t>(in);
  e.count = get<std::uint64_t>(in);
  e.steps = static_cast<int>(get<std::uint32_t>(in));
  const auto width = get<std::uint32_t>(in);
  if (width != 2 && width != 4) throw Error("bad label width in ensemble stream");
  e.cells = model_space(model).cell_count();
  if (e.steps != model_steps(model)) throw Error("ensemble length does not match the model");
  e.data.resize(e.count * static_cast<std::size_t>(e.steps));
  for (auto& c : e.data) {
    c = width == 2 ? get<std::uint16_t>(in) : get<std::uint32_t>(in);
    if (c >= e.cells) throw Error("cell index out of range in ensemble stream");
  }
  return e;
}

void write_ensemble_file(const std::string& path, const TrajectoryEnsemble& ensemble) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_ensemble(out, ensemble);
}

TrajectoryEnsemble read_ensemble_file(const std::string& path, const ModelConfig& model) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return read_ensemble(in, model);
}

std::vector<double> free_brownian_variance(const BrownianParams& params, double eta, std::span<const double> times,
                                           std::size_t count, std::uint64_t seed, unsigned workers) {
  params.validate();
  if (count < 2) throw ConfigError("need at least two trajectories", "count");
  std::vector<long> marks;
  for (double t : times) {
    const long k = std::lround(t / eta);
    if (k < 0 || std::abs(static_cast<double>(k) * eta - t) > 1e-9 * std::max(1.0, t)) {
      throw ConfigError("times must be non-negative multiples of eta", "times");
    }
    marks.push_back(k);
  }
  const long last = marks.empty() ? 0 : *std::max_element(marks.begin(), marks.end());
  const std::size_t nt = marks.size();
  std::vector<double> x(count * nt);
  detail::parallel_blocks(count, resolve_workers(workers), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto rng = stream_rng(seed, i);
      PhaseState s{};
      for (long step = 0; step <= last; ++step) {
        for (std::size_t j = 0; j < nt; ++j) {
          if (marks[j] == step) x[i * nt + j] = s.x;
        }
        if (step < last) s = brownian_step(s, eta, params, rng);
      }
    }
  });
  std::vector<double> var(nt);
  for (std::size_t j = 0; j < nt; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < count; ++i) mean += x[i * nt + j];
    mean /= static_cast<double>(count);
    double ss = 0.0;
    for (std::size_t i = 0; i < count; ++i) ss += (x[i * nt + j] - mean) * (x[i * nt + j] - mean);
    var[j] = ss / static_cast<double>(count - 1);
  }
  return var;
}

}  // namespace histent
