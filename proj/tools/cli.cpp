#include "cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <optional>

#include "ose/config.hpp"
#include "ose/cost_model.hpp"
#include "ose/errors.hpp"
#include "ose/ose_engine.hpp"
#include "ose/surrogate_metrics.hpp"
#include "ose/toy_net.hpp"
#include "ose/verify.hpp"

namespace ose::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string format = "text";
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "JSON config file");
  cmd->add_option("--set", opts.overrides, "Override a config key (key=value)")
      ->allow_extra_args(false);
  cmd->add_option("-f,--format", opts.format, "Output format")
      ->check(CLI::IsMember({"json", "text"}));
}

ProjectConfig load(const CommonOptions& opts,
                   std::vector<std::string> extra_overrides = {}) {
  auto overrides = opts.overrides;
  overrides.insert(overrides.end(), extra_overrides.begin(), extra_overrides.end());
  return load_config(opts.config_path, overrides);
}

ordered_json arch_json(const ArchParams& a) {
  return ordered_json::array({a.depth, a.heads, a.hidden, a.intermediate});
}

// enumerate ---------------------------------------------------------------

int cmd_enumerate(const CommonOptions& opts, std::ostream& out) {
  const auto cfg = load(opts);
  const auto space = stride_subsample(cfg.search.space, cfg.search.epsilon);
  const auto archs = enumerate(space);
  if (opts.format == "json") {
    ordered_json doc;
    doc["epsilon"] = cfg.search.epsilon;
    doc["grid_size"] = space.product_size();
    doc["count"] = archs.size();
    doc["candidates"] = ordered_json::array();
    for (const auto& a : archs) doc["candidates"].push_back(arch_json(a));
    out << doc.dump(2) << "\n";
  } else {
    out << fmt::format("{:>4} {:>4} {:>6} {:>6}\n", "D", "A", "H", "I");
    for (const auto& a : archs) {
      out << fmt::format("{:>4} {:>4} {:>6} {:>6}\n", a.depth, a.heads,
                         a.hidden, a.intermediate);
    }
    out << fmt::format("count: {} valid of {} (epsilon {})\n", archs.size(),
                       space.product_size(), cfg.search.epsilon);
  }
  return kOk;
}

// cost --------------------------------------------------------------------

bool is_bort_with_roberta_embedding(const ArchParams& a, const EmbeddingConfig& e) {
  return a == ArchParams{4, 8, 1024, 768} && e.vocab == 50265 && e.typepos == 514;
}

std::string bort_note(const CostBreakdown& b, Count tables) {
  return fmt::format(
      "published figures for this architecture are 56.14M parameters and a "
      "39M embedding layer; the closed form gives {} parameters and {} "
      "embedding-table parameters (identical tables to <24,16,1024,4096>). "
      "The discrepancy is reported, not reconciled.",
      b.total_params, tables);
}

int cmd_cost(const CommonOptions& opts, const std::string& arch_text,
             std::ostream& out) {
  const auto cfg = load(opts);
  std::optional<ArchParams> arch = cfg.arch;
  if (!arch_text.empty()) arch = parse_arch(arch_text);
  if (!arch) throw ConfigError("cost needs --arch D,A,H,I or an 'arch' config key");
  require_valid(*arch);

  const auto& emb = cfg.search.emb;
  const auto dom = dominance_report(*arch, emb);
  const auto& b = dom.breakdown;
  const auto tables = embedding_params(*arch, emb);
  const bool bort = is_bort_with_roberta_embedding(*arch, emb);

  if (opts.format == "json") {
    ordered_json doc;
    doc["arch"] = arch_json(*arch);
    doc["embedding"] = {{"vocab", emb.vocab}, {"typepos", emb.typepos}};
    doc["embedding_params"] = b.embedding_params;
    doc["encoder_params"] = b.encoder_params;
    doc["pooler_params"] = b.pooler_params;
    doc["total_params"] = b.total_params;
    doc["embedding_flops"] = b.embedding_flops;
    doc["encoder_flops"] = b.encoder_flops;
    doc["pooler_flops"] = b.pooler_flops;
    doc["total_flops"] = b.total_flops;
    doc["embedding_table_params"] = tables;
    doc["encoder_param_ratio"] = dom.param_ratio;
    doc["encoder_flop_ratio"] = dom.flop_ratio;
    if (bort) doc["note"] = bort_note(b, tables);
    out << doc.dump(2) << "\n";
  } else {
    out << fmt::format("arch {}  V={} S={}\n", to_string(*arch), emb.vocab,
                       emb.typepos);
    out << fmt::format("{:<10} {:>16} {:>16}\n", "component", "params", "flops");
    out << fmt::format("{:<10} {:>16} {:>16}\n", "embedding", b.embedding_params,
                       b.embedding_flops);
    out << fmt::format("{:<10} {:>16} {:>16}\n", "encoder", b.encoder_params,
                       b.encoder_flops);
    out << fmt::format("{:<10} {:>16} {:>16}\n", "pooler", b.pooler_params,
                       b.pooler_flops);
    out << fmt::format("{:<10} {:>16} {:>16}\n", "total", b.total_params,
                       b.total_flops);
    out << fmt::format("embedding tables (VH+SH+3H): {}\n", tables);
    out << fmt::format("encoder/(embedding+pooler): params {:.4f}, flops {:.4f}\n",
                       dom.param_ratio, dom.flop_ratio);
    if (bort) out << "note: " << bort_note(b, tables) << "\n";
  }
  return kOk;
}

// rank --------------------------------------------------------------------

struct RankOptions {
  std::string measurements;
  std::optional<std::int64_t> top_k;
  std::optional<std::int64_t> epsilon;
  std::string output;
  int w_decimals = 4;
};

int cmd_rank(const CommonOptions& opts, const RankOptions& ropts,
             std::ostream& out) {
  std::vector<std::string> extra;
  if (ropts.top_k) extra.push_back("top_k=" + std::to_string(*ropts.top_k));
  if (ropts.epsilon) extra.push_back("epsilon=" + std::to_string(*ropts.epsilon));
  auto cfg = load(opts, extra);
  if (!ropts.measurements.empty()) cfg.measurements = ropts.measurements;

  std::optional<MetricMap> ingested;
  if (cfg.search.metric_mode == MetricMode::kIngested) {
    if (!cfg.measurements) {
      throw ConfigError("ingested mode needs --measurements or a 'measurements' key");
    }
    std::ifstream in(*cfg.measurements);
    if (!in) {
      throw ConfigError("cannot open measurements '" + cfg.measurements->string() + "'");
    }
    ingested = ingest_measurements(in, cfg.search.emb);
  }

  const auto report = run_extraction(cfg.search, ingested ? &*ingested : nullptr);
  const std::string doc = opts.format == "json"
                              ? to_json(report)
                              : to_text(report, {ropts.w_decimals});
  if (ropts.output.empty()) {
    out << doc;
  } else {
    std::ofstream file(ropts.output, std::ios::binary);
    if (!file) throw ConfigError("cannot write '" + ropts.output + "'");
    file << doc;
  }
  return kOk;
}

// toy-forward -------------------------------------------------------------

std::vector<std::int64_t> read_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open token file '" + path + "'");
  std::vector<std::int64_t> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string text = line.substr(first, last - first + 1);
    try {
      std::size_t used = 0;
      ids.push_back(std::stoll(text, &used));
      if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
      throw DataError(fmt::format("token file line {}: '{}' is not an integer",
                                  line_no, text));
    }
  }
  return ids;
}

int cmd_toy_forward(const CommonOptions& opts, const std::string& input,
                    std::optional<std::int64_t> seed, std::ostream& out) {
  auto cfg = load(opts);
  if (seed) {
    if (*seed < 0) throw ConfigError("--seed must be non-negative");
    cfg.toy.seed = static_cast<std::uint64_t>(*seed);
  }
  auto ids = read_tokens(input);
  const auto seq = cfg.toy.emb.seq;
  if (ids.empty() || ids.size() % static_cast<std::size_t>(seq) != 0) {
    throw DataError(fmt::format("token count {} is not a positive multiple of seq {}",
                                ids.size(), seq));
  }
  const auto batch = static_cast<std::int64_t>(ids.size()) / seq;
  cfg.toy.emb.batch = batch;

  const toy::ToyNet net(cfg.toy);
  toy::ForwardTrace trace;
  const auto outputs = net.forward({batch, seq, std::move(ids)}, &trace);
  double lo = outputs.front().minCoeff();
  double hi = outputs.front().maxCoeff();
  for (const auto& m : outputs) {
    lo = std::min(lo, m.minCoeff());
    hi = std::max(hi, m.maxCoeff());
  }

  ordered_json doc;
  doc["arch"] = arch_json(cfg.toy.arch);
  doc["seed"] = cfg.toy.seed;
  doc["shape"] = {batch, seq, cfg.toy.arch.hidden};
  doc["min"] = lo;
  doc["max"] = hi;
  doc["softmax_row_sum_max_deviation"] = trace.max_softmax_row_deviation;
  doc["instantiated_params"] = toy::count_instantiated_params(net);
  doc["param_count"] = param_count(cfg.toy.arch, cfg.toy.emb);
  out << doc.dump(2) << "\n";
  return kOk;
}

// verify ------------------------------------------------------------------

int cmd_verify(std::ostream& out, std::ostream& err) {
  const auto results = run_verification();
  bool ok = true;
  for (const auto& r : results) {
    out << fmt::format("[{}] {}: {}\n", r.passed ? "PASS" : "FAIL", r.name,
                       r.detail);
    if (!r.passed && ok) {
      err << "counterexample: " << r.detail << "\n";
      ok = false;
    }
  }
  out << fmt::format("{} of {} checks passed\n",
                     std::count_if(results.begin(), results.end(),
                                   [](const CheckResult& r) { return r.passed; }),
                     results.size());
  return ok ? kOk : kInternalError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Optimal-subarchitecture extraction toolkit for BERT-family models",
               "ose"};
  app.require_subcommand(1, 1);

  CommonOptions enum_opts, cost_opts, rank_opts, toy_opts;

  auto* enumerate_cmd = app.add_subcommand("enumerate", "List valid candidates");
  add_common(enumerate_cmd, enum_opts);

  std::string arch_text;
  auto* cost_cmd = app.add_subcommand("cost", "Parameter and FLOP breakdown");
  add_common(cost_cmd, cost_opts);
  cost_cmd->add_option("-a,--arch", arch_text, "Architecture D,A,H,I");

  RankOptions ropts;
  auto* rank_cmd = app.add_subcommand("rank", "Rank candidates by W-coefficient");
  add_common(rank_cmd, rank_opts);
  rank_cmd->add_option("-m,--measurements", ropts.measurements,
                       "Newline-delimited JSON measurements");
  rank_cmd->add_option("-k,--top-k", ropts.top_k, "Rows to report");
  rank_cmd->add_option("-e,--epsilon", ropts.epsilon, "Per-axis stride");
  rank_cmd->add_option("-o,--output", ropts.output, "Write the report here");
  rank_cmd->add_option("--w-decimals", ropts.w_decimals,
                       "Decimals for W in text output")
      ->check(CLI::Range(0, 17));

  std::string tokens_path;
  std::optional<std::int64_t> seed;
  auto* toy_cmd = app.add_subcommand("toy-forward", "Run the toy network");
  add_common(toy_cmd, toy_opts);
  toy_cmd->add_option("-i,--input", tokens_path, "Token ids, one per line")
      ->required();
  toy_cmd->add_option("-s,--seed", seed, "Weight seed");

  auto* verify_cmd = app.add_subcommand("verify", "Run the oracle suite");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (*enumerate_cmd) return cmd_enumerate(enum_opts, out);
    if (*cost_cmd) return cmd_cost(cost_opts, arch_text, out);
    if (*rank_cmd) return cmd_rank(rank_opts, ropts, out);
    if (*toy_cmd) return cmd_toy_forward(toy_opts, tokens_path, seed, out);
    if (*verify_cmd) return cmd_verify(out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return kInternalError;
}

}  // namespace ose::cli
