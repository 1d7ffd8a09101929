#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ose/arch_space.hpp"
#include "ose/surrogate_metrics.hpp"

namespace ose {

/// W(f, T) = (p(T) - p(f)) (i(T) - i(f)) / (p(T) i(T) e(f))
///
/// Throws DataError when f.e_hat <= 0 or T is degenerate, ConfigError when
/// the latency unit tags differ.
double w_coefficient(const MetricTriple& f, const MaxPoint& t);

enum class MetricMode { kAnalytic, kIngested };

std::string_view to_string(MetricMode mode);
MetricMode parse_metric_mode(std::string_view tag);

/// How e_hat is produced in analytic mode. In ingested mode the per-record
/// error is used instead.
struct ErrorModel {
  enum class Kind { kConstant, kSynthetic };
  Kind kind = Kind::kConstant;
  double value = 1.0;  // kConstant
  double c0 = 0.1;     // kSynthetic
  double c1 = 1e7;     // kSynthetic

  ErrorProvider provider(const EmbeddingConfig& emb) const;
  std::string describe() const;
};

/// The maximum point as configured: the arch, plus an explicit measured
/// latency for ingested runs. Without one, the measurement set must contain
/// the arch.
struct MaxPointSpec {
  ArchParams arch{24, 16, 1024, 4096};
  std::optional<double> latency_s;
};

struct SearchConfig {
  SearchSpace space = default_search_space();
  std::int64_t epsilon = 2;
  MaxPointSpec maxpoint;
  EmbeddingConfig emb;
  MetricMode metric_mode = MetricMode::kAnalytic;
  ErrorModel error;
  /// Unset means every ranked candidate is reported.
  std::optional<std::int64_t> top_k;
  /// Surrogate training steps; provenance only.
  std::int64_t n_steps = 3;
};

/// Throws ConfigError on epsilon < 1, top_k < 1, n_steps < 1, a bad
/// embedding or an invalid maximum-point arch.
void check(const SearchConfig& config);

struct CandidateFlags {
  bool exceeds_maxpoint_params = false;
  bool exceeds_maxpoint_latency = false;

  bool any() const {
    return exceeds_maxpoint_params || exceeds_maxpoint_latency;
  }
  bool operator==(const CandidateFlags&) const = default;
};

struct CandidateReport {
  ArchParams arch;
  MetricTriple metrics;
  double w_coefficient = 0.0;
  /// 1-based; 0 for excluded candidates.
  std::int64_t rank = 0;
  CandidateFlags flags;

  bool operator==(const CandidateReport&) const = default;
};

struct Ranking {
  /// Sorted by W descending, ties by <D,A,H,I> ascending; truncated to top_k.
  std::vector<CandidateReport> ranked;
  /// Candidates exceeding the maximum point, in enumeration order.
  std::vector<CandidateReport> excluded;
  /// Non-excluded candidates before top_k truncation.
  std::size_t rankable = 0;
};

/// Ranks `candidates` against `t`. Every candidate must have an entry in
/// `metrics` (DataError naming the arch otherwise), and all units must
/// match T's.
Ranking rank(const std::vector<ArchParams>& candidates,
             const MetricMap& metrics, const MaxPoint& t,
             std::optional<std::int64_t> top_k);

/// Strided enumeration of the configured space, ranked against `t`.
Ranking rank_candidates(const SearchConfig& config, const MaxPoint& t,
                        const MetricMap& metrics);

/// Maximum point with metrics resolved for the configured mode.
MaxPoint resolve_maxpoint(const SearchConfig& config,
                          const MetricMap* ingested);

struct ExtractionReport {
  SearchConfig config;
  MaxPoint maxpoint;
  std::size_t grid_size = 0;    // strided Cartesian product
  std::size_t candidates = 0;   // valid members of the strided grid
  Ranking ranking;
};

/// stride_subsample -> enumerate -> metrics -> rank. `ingested` is required
/// in ingested mode and ignored otherwise.
ExtractionReport run_extraction(const SearchConfig& config,
                                const MetricMap* ingested = nullptr);

std::string to_json(const ExtractionReport& report);

struct TextOptions {
  int w_decimals = 4;
};

std::string to_text(const ExtractionReport& report, TextOptions opts = {});

}  // namespace ose
