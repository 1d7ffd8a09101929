#include "ose/surrogate_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>

#include "ose/cost_model.hpp"
#include "ose/errors.hpp"

namespace ose {

using nlohmann::json;

std::string_view to_string(LatencyUnit unit) {
  switch (unit) {
    case LatencyUnit::kSecondsPerSample:
      return "seconds_per_sample";
    case LatencyUnit::kFlops:
      return "flops";
  }
  return "unknown";
}

LatencyUnit parse_latency_unit(std::string_view tag) {
  if (tag == "seconds_per_sample") return LatencyUnit::kSecondsPerSample;
  if (tag == "flops") return LatencyUnit::kFlops;
  throw ConfigError("unknown latency unit '" + std::string(tag) + "'");
}

void check(const MetricTriple& m) {
  if (!std::isfinite(m.p_hat) || m.p_hat < 0.0) {
    throw DataError("p_hat must be finite and non-negative");
  }
  if (!std::isfinite(m.i_hat) || m.i_hat <= 0.0) {
    throw DataError("i_hat must be finite and positive");
  }
  if (!std::isfinite(m.e_hat) || m.e_hat <= 0.0) {
    throw DataError("e_hat must be positive");
  }
}

void check(const MaxPoint& t) {
  if (!std::isfinite(t.metrics.p_hat) || t.metrics.p_hat <= 0.0) {
    throw DataError("maximum point p_hat must be positive");
  }
  if (!std::isfinite(t.metrics.i_hat) || t.metrics.i_hat <= 0.0) {
    throw DataError("maximum point i_hat must be positive");
  }
}

ErrorProvider constant_error(double value) {
  return [value](const ArchParams&) { return value; };
}

double synthetic_error(const ArchParams& arch, const EmbeddingConfig& emb,
                       double c0, double c1) {
  return c0 + c1 / static_cast<double>(param_count(arch, emb));
}

ErrorProvider synthetic_error_provider(EmbeddingConfig emb, double c0,
                                       double c1) {
  if (!(c0 > 0.0) || !(c1 >= 0.0)) {
    throw ConfigError("synthetic error needs c0 > 0 and c1 >= 0");
  }
  return [emb, c0, c1](const ArchParams& arch) {
    return synthetic_error(arch, emb, c0, c1);
  };
}

MetricTriple analytic_metrics(const ArchParams& arch,
                              const EmbeddingConfig& emb,
                              const ErrorProvider& error) {
  require_valid(arch);
  MetricTriple m;
  m.p_hat = static_cast<double>(param_count(arch, emb));
  m.i_hat = static_cast<double>(flop_count(arch));
  m.i_unit = LatencyUnit::kFlops;
  m.e_hat = error(arch);
  if (!std::isfinite(m.e_hat) || m.e_hat <= 0.0) {
    throw DataError("e_hat must be positive for " + to_string(arch));
  }
  return m;
}

namespace {

MeasurementRecord parse_record(const json& j) {
  static const char* const kKeys[] = {"arch", "latency_s", "error", "trials"};
  if (!j.is_object()) throw DataError("record is not a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) ==
        std::end(kKeys)) {
      throw DataError("unknown key '" + key + "'");
    }
  }
  const auto& arch = j.at("arch");
  if (!arch.is_array() || arch.size() != 4) {
    throw DataError("'arch' must be an array [D,A,H,I]");
  }
  for (const auto& v : arch) {
    if (!v.is_number_integer()) throw DataError("'arch' entries must be integers");
  }
  MeasurementRecord r;
  r.arch = {arch[0].get<std::int64_t>(), arch[1].get<std::int64_t>(),
            arch[2].get<std::int64_t>(), arch[3].get<std::int64_t>()};
  if (!j.at("latency_s").is_number()) throw DataError("'latency_s' must be a number");
  if (!j.at("error").is_number()) throw DataError("'error' must be a number");
  r.latency_s = j.at("latency_s").get<double>();
  r.error = j.at("error").get<double>();
  if (j.contains("trials")) {
    if (!j.at("trials").is_number_integer()) {
      throw DataError("'trials' must be an integer");
    }
    r.trials = j.at("trials").get<std::int64_t>();
  }
  if (!std::isfinite(r.latency_s) || r.latency_s <= 0.0) {
    throw DataError("latency_s must be positive");
  }
  if (!std::isfinite(r.error) || r.error <= 0.0) {
    throw DataError("error must be positive");
  }
  if (r.trials < 1) throw DataError("trials must be >= 1");
  const auto verdict = validate(r.arch);
  if (!verdict.ok()) {
    throw DataError("invalid arch " + to_string(r.arch) + ": " +
                    verdict.message(r.arch));
  }
  return r;
}

}  // namespace

std::vector<MeasurementRecord> parse_measurements(std::istream& in) {
  std::vector<MeasurementRecord> records;
  std::map<ArchParams, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(parse_record(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError("measurements line " + std::to_string(line_no) + ": " +
                      e.what());
    } catch (const DataError& e) {
      throw DataError("measurements line " + std::to_string(line_no) + ": " +
                      e.what());
    }
    const auto [it, inserted] = seen.emplace(records.back().arch, line_no);
    if (!inserted) {
      throw DataError("measurements line " + std::to_string(line_no) +
                      ": duplicate arch " + to_string(records.back().arch) +
                      " (first seen on line " + std::to_string(it->second) +
                      ")");
    }
  }
  return records;
}

std::string serialize(const MeasurementRecord& record) {
  json j;
  j["arch"] = {record.arch.depth, record.arch.heads, record.arch.hidden,
               record.arch.intermediate};
  j["latency_s"] = record.latency_s;
  j["error"] = record.error;
  j["trials"] = record.trials;
  return j.dump();
}

MetricMap ingest_measurements(const std::vector<MeasurementRecord>& records,
                              const EmbeddingConfig& emb) {
  MetricMap out;
  for (const auto& r : records) {
    MetricTriple m;
    m.p_hat = static_cast<double>(param_count(r.arch, emb));
    m.i_hat = r.latency_s;
    m.i_unit = LatencyUnit::kSecondsPerSample;
    m.e_hat = r.error;
    if (!out.emplace(r.arch, m).second) {
      throw DataError("duplicate arch " + to_string(r.arch));
    }
  }
  return out;
}

MetricMap ingest_measurements(std::istream& in, const EmbeddingConfig& emb) {
  return ingest_measurements(parse_measurements(in), emb);
}

}  // namespace ose
