#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "ose/arch_space.hpp"

namespace ose {

enum class LatencyUnit { kSecondsPerSample, kFlops };

std::string_view to_string(LatencyUnit unit);
/// Throws ConfigError on an unknown tag.
LatencyUnit parse_latency_unit(std::string_view tag);

/// Surrogate parameter size, latency and error for one candidate.
struct MetricTriple {
  double p_hat = 0.0;
  double i_hat = 0.0;
  LatencyUnit i_unit = LatencyUnit::kFlops;
  double e_hat = 1.0;

  bool operator==(const MetricTriple&) const = default;
};

/// Throws DataError unless p_hat >= 0, i_hat > 0 and e_hat > 0 (all finite).
void check(const MetricTriple& m);

/// The reference architecture candidates are scalarized against. Its e_hat
/// is carried but never used.
struct MaxPoint {
  ArchParams arch;
  MetricTriple metrics;
};

/// Throws DataError unless p_hat > 0 and i_hat > 0.
void check(const MaxPoint& t);

/// Yields e_hat for an architecture. Implementations throw DataError when
/// they have no value for the arch.
using ErrorProvider = std::function<double(const ArchParams&)>;

ErrorProvider constant_error(double value);

/// c0 + c1 / param_count(arch, emb). Stand-in for a trained surrogate error;
/// decreases with model capacity and stays positive.
double synthetic_error(const ArchParams& arch, const EmbeddingConfig& emb,
                       double c0, double c1);

ErrorProvider synthetic_error_provider(EmbeddingConfig emb, double c0,
                                       double c1);

/// p_hat = param_count, i_hat = flop_count (unit flops), e_hat from provider.
MetricTriple analytic_metrics(const ArchParams& arch,
                              const EmbeddingConfig& emb,
                              const ErrorProvider& error);

/// One line of a measurement file:
///   {"arch":[D,A,H,I],"latency_s":float,"error":float,"trials":int}
/// latency_s is the mean over `trials` runs.
struct MeasurementRecord {
  ArchParams arch;
  double latency_s = 0.0;
  double error = 0.0;
  std::int64_t trials = 1;

  bool operator==(const MeasurementRecord&) const = default;
};

using MetricMap = std::map<ArchParams, MetricTriple>;

/// Parses newline-delimited JSON records. Blank lines are skipped. Throws
/// DataError naming the 1-based line on malformed records, invalid archs or
/// duplicate archs.
std::vector<MeasurementRecord> parse_measurements(std::istream& in);

std::string serialize(const MeasurementRecord& record);

/// Records keyed by arch, with p_hat filled from param_count and i_hat in
/// seconds per sample.
MetricMap ingest_measurements(std::istream& in, const EmbeddingConfig& emb);

/// Same, over already-parsed records. Duplicate archs throw DataError.
MetricMap ingest_measurements(const std::vector<MeasurementRecord>& records,
                              const EmbeddingConfig& emb);

}  // namespace ose
