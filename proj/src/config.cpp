#include "ose/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "ose/errors.hpp"

namespace ose {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) {
    throw ConfigError("'" + where + "' must be a JSON object");
  }
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!keys.contains(key)) {
      throw ConfigError("unknown config key '" +
                        (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

std::string path_of(const std::string& where, const char* key) {
  return where.empty() ? key : where + "." + key;
}

std::int64_t get_int(const json& obj, const std::string& where, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) {
    throw ConfigError("'" + path_of(where, key) + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

double get_real(const json& obj, const std::string& where, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_number()) {
    throw ConfigError("'" + path_of(where, key) + "' must be a number");
  }
  return v.get<double>();
}

std::vector<std::int64_t> get_ints(const json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_array()) throw ConfigError(std::string("'") + key + "' must be an array");
  std::vector<std::int64_t> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) {
      throw ConfigError(std::string("'") + key + "' must contain integers");
    }
    out.push_back(e.get<std::int64_t>());
  }
  return out;
}

ArchParams arch_from(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 4) {
    throw ConfigError("'" + where + "' must be an array [D,A,H,I]");
  }
  for (const auto& e : v) {
    if (!e.is_number_integer()) {
      throw ConfigError("'" + where + "' must contain integers");
    }
  }
  return {v[0].get<std::int64_t>(), v[1].get<std::int64_t>(),
          v[2].get<std::int64_t>(), v[3].get<std::int64_t>()};
}

EmbeddingConfig embedding_from(const json& obj, const std::string& where,
                               EmbeddingConfig emb) {
  reject_unknown(obj, where, {"vocab", "typepos", "seq", "batch"});
  if (obj.contains("vocab")) emb.vocab = get_int(obj, where, "vocab");
  if (obj.contains("typepos")) emb.typepos = get_int(obj, where, "typepos");
  if (obj.contains("seq")) emb.seq = get_int(obj, where, "seq");
  if (obj.contains("batch")) emb.batch = get_int(obj, where, "batch");
  return emb;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' is malformed");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    json& child = (*node)[part];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) {
      throw ConfigError("override key '" + key + "' descends into a non-object");
    }
    node = &child;
    start = dot + 1;
  }
}

}  // namespace

ArchParams parse_arch(std::string_view text) {
  std::vector<std::int64_t> parts;
  std::string token;
  std::istringstream in{std::string(text)};
  while (std::getline(in, token, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stoll(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ConfigError("arch '" + std::string(text) + "' must be D,A,H,I integers");
    }
  }
  if (parts.size() != 4) {
    throw ConfigError("arch '" + std::string(text) + "' must have four fields D,A,H,I");
  }
  return {parts[0], parts[1], parts[2], parts[3]};
}

ProjectConfig parse_config(std::string_view text,
                           const std::vector<std::string>& overrides,
                           const std::filesystem::path& base_dir) {
  json doc;
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    doc = json::object();
  } else {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config ") + e.what());
    }
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& o : overrides) apply_override(doc, o);

  reject_unknown(doc, "",
                 {"depths", "heads", "hiddens", "intermediates", "epsilon",
                  "embedding", "maxpoint", "metric_mode", "error", "top_k",
                  "n_steps", "measurements", "arch", "toy"});

  ProjectConfig cfg;
  auto& search = cfg.search;
  try {
    const auto defaults = default_search_space();
    search.space = SearchSpace::make(
        doc.contains("depths") ? get_ints(doc, "depths") : defaults.depths(),
        doc.contains("heads") ? get_ints(doc, "heads") : defaults.heads(),
        doc.contains("hiddens") ? get_ints(doc, "hiddens") : defaults.hiddens(),
        doc.contains("intermediates") ? get_ints(doc, "intermediates")
                                      : defaults.intermediates());
    if (doc.contains("epsilon")) search.epsilon = get_int(doc, "", "epsilon");
    if (doc.contains("embedding")) {
      search.emb = embedding_from(doc["embedding"], "embedding", search.emb);
    }
    if (doc.contains("maxpoint")) {
      const auto& mp = doc["maxpoint"];
      reject_unknown(mp, "maxpoint", {"arch", "latency_s"});
      if (mp.contains("arch")) search.maxpoint.arch = arch_from(mp["arch"], "maxpoint.arch");
      if (mp.contains("latency_s")) {
        search.maxpoint.latency_s = get_real(mp, "maxpoint", "latency_s");
      }
    }
    if (doc.contains("metric_mode")) {
      if (!doc["metric_mode"].is_string()) {
        throw ConfigError("'metric_mode' must be a string");
      }
      search.metric_mode = parse_metric_mode(doc["metric_mode"].get<std::string>());
    }
    if (doc.contains("error")) {
      const auto& e = doc["error"];
      reject_unknown(e, "error", {"kind", "value", "c0", "c1"});
      if (e.contains("kind")) {
        const auto kind = e["kind"].is_string() ? e["kind"].get<std::string>() : "";
        if (kind == "constant") {
          search.error.kind = ErrorModel::Kind::kConstant;
        } else if (kind == "synthetic") {
          search.error.kind = ErrorModel::Kind::kSynthetic;
        } else {
          throw ConfigError("'error.kind' must be \"constant\" or \"synthetic\"");
        }
      }
      if (e.contains("value")) search.error.value = get_real(e, "error", "value");
      if (e.contains("c0")) search.error.c0 = get_real(e, "error", "c0");
      if (e.contains("c1")) search.error.c1 = get_real(e, "error", "c1");
    }
    if (doc.contains("top_k")) {
      if (doc["top_k"].is_null()) {
        search.top_k.reset();
      } else {
        search.top_k = get_int(doc, "", "top_k");
      }
    }
    if (doc.contains("n_steps")) search.n_steps = get_int(doc, "", "n_steps");
    if (doc.contains("measurements")) {
      if (!doc["measurements"].is_string()) {
        throw ConfigError("'measurements' must be a path string");
      }
      std::filesystem::path p = doc["measurements"].get<std::string>();
      cfg.measurements = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    if (doc.contains("arch")) cfg.arch = arch_from(doc["arch"], "arch");
    if (doc.contains("toy")) {
      const auto& t = doc["toy"];
      reject_unknown(t, "toy", {"arch", "embedding", "dropout", "layernorm_eps", "seed"});
      if (t.contains("arch")) cfg.toy.arch = arch_from(t["arch"], "toy.arch");
      if (t.contains("embedding")) {
        cfg.toy.emb = embedding_from(t["embedding"], "toy.embedding", cfg.toy.emb);
      }
      if (t.contains("dropout")) cfg.toy.dropout = get_real(t, "toy", "dropout");
      if (t.contains("layernorm_eps")) {
        cfg.toy.layernorm_eps = get_real(t, "toy", "layernorm_eps");
      }
      if (t.contains("seed")) {
        const auto seed = get_int(t, "toy", "seed");
        if (seed < 0) throw ConfigError("'toy.seed' must be non-negative");
        cfg.toy.seed = static_cast<std::uint64_t>(seed);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  check(search);
  return cfg;
}

ProjectConfig load_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides) {
  if (path.empty()) return parse_config("", overrides);
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides, path.parent_path());
}

}  // namespace ose
