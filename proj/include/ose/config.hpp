#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ose/ose_engine.hpp"
#include "ose/toy_net.hpp"

namespace ose {

/// Everything one config file can set. See docs/config.md for the schema.
struct ProjectConfig {
  SearchConfig search;
  /// Resolved against the config file's directory.
  std::optional<std::filesystem::path> measurements;
  /// Architecture for the `cost` subcommand.
  std::optional<ArchParams> arch;
  toy::ToyNetConfig toy{{2, 2, 8, 16}, {32, 16, 8, 1}, 0.0, 1e-5, 0};
};

/// Parses a JSON config document. `overrides` are "dotted.key=value" pairs
/// applied before validation; values are read as JSON, falling back to a
/// plain string. Unknown keys are rejected. Throws ConfigError with the
/// offending key or parse position.
ProjectConfig parse_config(std::string_view text,
                           const std::vector<std::string>& overrides = {},
                           const std::filesystem::path& base_dir = {});

/// Reads and parses `path`; an empty path yields the defaults (plus
/// overrides).
ProjectConfig load_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});

/// "D,A,H,I" -> ArchParams. Throws ConfigError on malformed text.
ArchParams parse_arch(std::string_view text);

}  // namespace ose
