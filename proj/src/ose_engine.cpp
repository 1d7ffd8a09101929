#include "ose/ose_engine.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "ose/cost_model.hpp"
#include "ose/errors.hpp"

namespace ose {

double w_coefficient(const MetricTriple& f, const MaxPoint& t) {
  check(t);
  if (f.i_unit != t.metrics.i_unit) {
    throw ConfigError("latency unit mismatch: candidate is " +
                      std::string(to_string(f.i_unit)) + ", maximum point is " +
                      std::string(to_string(t.metrics.i_unit)));
  }
  if (!(f.e_hat > 0.0)) {
    throw DataError("e_hat must be positive to compute W");
  }
  const double p_t = t.metrics.p_hat;
  const double i_t = t.metrics.i_hat;
  const double w = ((p_t - f.p_hat) * (i_t - f.i_hat)) / (p_t * i_t * f.e_hat);
  if (!std::isfinite(w)) {
    throw InvariantError("non-finite W-coefficient");
  }
  return w;
}

std::string_view to_string(MetricMode mode) {
  return mode == MetricMode::kAnalytic ? "analytic" : "ingested";
}

MetricMode parse_metric_mode(std::string_view tag) {
  if (tag == "analytic") return MetricMode::kAnalytic;
  if (tag == "ingested") return MetricMode::kIngested;
  throw ConfigError("unknown metric_mode '" + std::string(tag) + "'");
}

ErrorProvider ErrorModel::provider(const EmbeddingConfig& emb) const {
  if (kind == Kind::kSynthetic) return synthetic_error_provider(emb, c0, c1);
  if (!(value > 0.0)) throw ConfigError("constant error must be positive");
  return constant_error(value);
}

std::string ErrorModel::describe() const {
  if (kind == Kind::kSynthetic) {
    return fmt::format("synthetic c0 + c1/p with c0={} c1={}", c0, c1);
  }
  return fmt::format("constant {}", value);
}

void check(const SearchConfig& config) {
  if (config.epsilon < 1) throw ConfigError("epsilon must be >= 1");
  if (config.top_k && *config.top_k < 1) throw ConfigError("top_k must be >= 1");
  if (config.n_steps < 1) throw ConfigError("n_steps must be >= 1");
  check(config.emb);
  require_valid(config.maxpoint.arch);
  if (config.maxpoint.latency_s && !(*config.maxpoint.latency_s > 0.0)) {
    throw ConfigError("maximum point latency_s must be positive");
  }
}

Ranking rank(const std::vector<ArchParams>& candidates,
             const MetricMap& metrics, const MaxPoint& t,
             std::optional<std::int64_t> top_k) {
  check(t);
  Ranking out;
  for (const auto& arch : candidates) {
    const auto it = metrics.find(arch);
    if (it == metrics.end()) {
      throw DataError("no metrics for candidate " + to_string(arch));
    }
    CandidateReport row;
    row.arch = arch;
    row.metrics = it->second;
    check(row.metrics);
    row.w_coefficient = w_coefficient(row.metrics, t);
    row.flags.exceeds_maxpoint_params = row.metrics.p_hat > t.metrics.p_hat;
    row.flags.exceeds_maxpoint_latency = row.metrics.i_hat > t.metrics.i_hat;
    (row.flags.any() ? out.excluded : out.ranked).push_back(row);
  }

  std::sort(out.ranked.begin(), out.ranked.end(),
            [](const CandidateReport& a, const CandidateReport& b) {
              if (a.w_coefficient != b.w_coefficient) {
                return a.w_coefficient > b.w_coefficient;
              }
              return a.arch < b.arch;
            });
  out.rankable = out.ranked.size();
  if (top_k && static_cast<std::size_t>(*top_k) < out.ranked.size()) {
    out.ranked.resize(static_cast<std::size_t>(*top_k));
  }
  for (std::size_t i = 0; i < out.ranked.size(); ++i) {
    out.ranked[i].rank = static_cast<std::int64_t>(i + 1);
  }
  return out;
}

Ranking rank_candidates(const SearchConfig& config, const MaxPoint& t,
                        const MetricMap& metrics) {
  check(config);
  const auto candidates =
      enumerate(stride_subsample(config.space, config.epsilon));
  if (candidates.empty()) {
    throw ConfigError("search space has no valid candidates");
  }
  auto ranking = rank(candidates, metrics, t, config.top_k);
  if (ranking.rankable == 0) {
    throw DataError("every candidate exceeds the maximum point");
  }
  return ranking;
}

MaxPoint resolve_maxpoint(const SearchConfig& config,
                          const MetricMap* ingested) {
  MaxPoint t;
  t.arch = config.maxpoint.arch;
  if (config.metric_mode == MetricMode::kAnalytic) {
    t.metrics = analytic_metrics(t.arch, config.emb, constant_error(1.0));
    return t;
  }
  t.metrics.p_hat = static_cast<double>(param_count(t.arch, config.emb));
  t.metrics.i_unit = LatencyUnit::kSecondsPerSample;
  if (config.maxpoint.latency_s) {
    t.metrics.i_hat = *config.maxpoint.latency_s;
  } else if (ingested && ingested->contains(t.arch)) {
    t.metrics.i_hat = ingested->at(t.arch).i_hat;
  } else {
    throw DataError("no latency for maximum point " + to_string(t.arch) +
                    " (set maxpoint.latency_s or add a measurement record)");
  }
  return t;
}

ExtractionReport run_extraction(const SearchConfig& config,
                                const MetricMap* ingested) {
  check(config);
  if (config.metric_mode == MetricMode::kIngested && ingested == nullptr) {
    throw ConfigError("ingested metric mode requires a measurement source");
  }

  ExtractionReport report;
  report.config = config;
  report.maxpoint = resolve_maxpoint(config, ingested);

  const auto strided = stride_subsample(config.space, config.epsilon);
  report.grid_size = strided.product_size();
  const auto candidates = enumerate(strided);
  report.candidates = candidates.size();

  if (config.metric_mode == MetricMode::kAnalytic) {
    const auto error = config.error.provider(config.emb);
    MetricMap metrics;
    for (const auto& arch : candidates) {
      metrics.emplace(arch, analytic_metrics(arch, config.emb, error));
    }
    report.ranking = rank_candidates(config, report.maxpoint, metrics);
  } else {
    report.ranking = rank_candidates(config, report.maxpoint, *ingested);
  }
  return report;
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json arch_json(const ArchParams& a) {
  return ordered_json::array({a.depth, a.heads, a.hidden, a.intermediate});
}

ordered_json flags_json(const CandidateFlags& f) {
  auto out = ordered_json::array();
  if (f.exceeds_maxpoint_params) out.push_back("exceeds_maxpoint_params");
  if (f.exceeds_maxpoint_latency) out.push_back("exceeds_maxpoint_latency");
  return out;
}

ordered_json row_json(const CandidateReport& r) {
  ordered_json j;
  if (r.rank > 0) j["rank"] = r.rank;
  j["arch"] = arch_json(r.arch);
  j["p_hat"] = r.metrics.p_hat;
  j["i_hat"] = r.metrics.i_hat;
  j["i_unit"] = to_string(r.metrics.i_unit);
  j["e_hat"] = r.metrics.e_hat;
  j["w"] = r.w_coefficient;
  j["flags"] = flags_json(r.flags);
  return j;
}

std::string error_source(const ExtractionReport& report) {
  if (report.config.metric_mode == MetricMode::kIngested) {
    return "ingested per-record error";
  }
  return report.config.error.describe();
}

constexpr const char* kErrorNote =
    "e_hat is a stand-in; the trained surrogate cross-entropy is not "
    "reproduced";

std::string flags_text(const CandidateFlags& f) {
  std::string out;
  if (f.exceeds_maxpoint_params) out += "exceeds_maxpoint_params";
  if (f.exceeds_maxpoint_latency) {
    if (!out.empty()) out += ",";
    out += "exceeds_maxpoint_latency";
  }
  return out.empty() ? "-" : out;
}

std::string latency_text(const MetricTriple& m) {
  if (m.i_unit == LatencyUnit::kFlops) return fmt::format("{:.0f} flops", m.i_hat);
  return fmt::format("{:.6g} s/sample", m.i_hat);
}

void append_rows(std::string& out, const std::vector<CandidateReport>& rows,
                 int w_decimals) {
  out += fmt::format("{:>5} {:>4} {:>4} {:>6} {:>6} {:>14} {:>24} {:>12} {:>12}  {}\n",
                     "rank", "D", "A", "H", "I", "p_hat", "i_hat", "e_hat", "W",
                     "flags");
  for (const auto& r : rows) {
    out += fmt::format(
        "{:>5} {:>4} {:>4} {:>6} {:>6} {:>14.0f} {:>24} {:>12.6g} {:>12.{}f}  {}\n",
        r.rank > 0 ? std::to_string(r.rank) : std::string("-"), r.arch.depth,
        r.arch.heads, r.arch.hidden, r.arch.intermediate, r.metrics.p_hat,
        latency_text(r.metrics), r.metrics.e_hat, r.w_coefficient, w_decimals,
        flags_text(r.flags));
  }
}

}  // namespace

std::string to_json(const ExtractionReport& report) {
  const auto& c = report.config;
  ordered_json prov;
  prov["metric_mode"] = to_string(c.metric_mode);
  prov["epsilon"] = c.epsilon;
  prov["n_steps"] = c.n_steps;
  prov["top_k"] = c.top_k ? ordered_json(*c.top_k) : ordered_json(nullptr);
  prov["i_unit"] = to_string(report.maxpoint.metrics.i_unit);
  prov["maxpoint"] = {{"arch", arch_json(report.maxpoint.arch)},
                      {"p_hat", report.maxpoint.metrics.p_hat},
                      {"i_hat", report.maxpoint.metrics.i_hat}};
  prov["embedding"] = {{"vocab", c.emb.vocab},
                       {"typepos", c.emb.typepos},
                       {"seq", c.emb.seq},
                       {"batch", c.emb.batch}};
  prov["error_source"] = error_source(report);
  prov["error_note"] = kErrorNote;
  prov["search"] = "exhaustive evaluation of the epsilon-strided grid";
  prov["grid_size"] = report.grid_size;
  prov["candidates"] = report.candidates;
  prov["rankable"] = report.ranking.rankable;

  ordered_json doc;
  doc["provenance"] = prov;
  doc["ranked"] = ordered_json::array();
  for (const auto& r : report.ranking.ranked) doc["ranked"].push_back(row_json(r));
  doc["excluded"] = ordered_json::array();
  for (const auto& r : report.ranking.excluded) {
    doc["excluded"].push_back(row_json(r));
  }
  return doc.dump(2) + "\n";
}

std::string to_text(const ExtractionReport& report, TextOptions opts) {
  const auto& c = report.config;
  const auto& t = report.maxpoint;
  std::string out;
  out += fmt::format("# metric mode : {}\n", to_string(c.metric_mode));
  out += fmt::format("# epsilon     : {}\n", c.epsilon);
  out += fmt::format("# n_steps     : {} (provenance only)\n", c.n_steps);
  out += fmt::format("# maxpoint    : {} p_hat={:.0f} i_hat={}\n",
                     to_string(t.arch), t.metrics.p_hat,
                     latency_text(t.metrics));
  out += fmt::format("# embedding   : V={} S={} s={} z={}\n", c.emb.vocab,
                     c.emb.typepos, c.emb.seq, c.emb.batch);
  out += fmt::format("# error source: {}\n", error_source(report));
  out += fmt::format("# note        : {}\n", kErrorNote);
  out += fmt::format("# grid        : {} points, {} valid, {} rankable, {} shown\n",
                     report.grid_size, report.candidates,
                     report.ranking.rankable, report.ranking.ranked.size());
  out += "\n";
  append_rows(out, report.ranking.ranked, opts.w_decimals);
  if (!report.ranking.excluded.empty()) {
    out += fmt::format("\n# excluded (exceed the maximum point): {}\n",
                       report.ranking.excluded.size());
    append_rows(out, report.ranking.excluded, opts.w_decimals);
  }
  return out;
}

}  // namespace ose
