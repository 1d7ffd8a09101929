#include "ose/arch_space.hpp"

#include <algorithm>
#include <stdexcept>

#include "ose/errors.hpp"

namespace ose {

std::string to_string(const ArchParams& arch) {
  return "<" + std::to_string(arch.depth) + "," + std::to_string(arch.heads) +
         "," + std::to_string(arch.hidden) + "," +
         std::to_string(arch.intermediate) + ">";
}

void check(const EmbeddingConfig& emb) {
  if (emb.vocab < 2) throw ConfigError("vocab must be >= 2");
  if (emb.typepos < 1) throw ConfigError("typepos must be >= 1");
  if (emb.seq < 1) throw ConfigError("seq must be >= 1");
  if (emb.batch < 1) throw ConfigError("batch must be >= 1");
}

std::string describe(Violation v, const ArchParams& arch) {
  switch (v) {
    case Violation::kNonPositiveField:
      return "all fields must be >= 1";
    case Violation::kHeadsDoNotDivideHidden:
      return "hidden " + std::to_string(arch.hidden) +
             " is not divisible by heads " + std::to_string(arch.heads);
    case Violation::kOddDepth:
      return "depth must be even (got " + std::to_string(arch.depth) + ")";
  }
  return "unknown violation";
}

std::string Verdict::message(const ArchParams& arch) const {
  std::string out;
  for (const auto v : violations) {
    if (!out.empty()) out += "; ";
    out += describe(v, arch);
  }
  return out;
}

Verdict validate(const ArchParams& arch) {
  Verdict verdict;
  const bool positive = arch.depth >= 1 && arch.heads >= 1 &&
                        arch.hidden >= 1 && arch.intermediate >= 1;
  if (!positive) verdict.violations.push_back(Violation::kNonPositiveField);
  if (arch.heads >= 1 && arch.hidden % arch.heads != 0) {
    verdict.violations.push_back(Violation::kHeadsDoNotDivideHidden);
  }
  if (arch.depth % 2 != 0) verdict.violations.push_back(Violation::kOddDepth);
  return verdict;
}

void require_valid(const ArchParams& arch) {
  const auto verdict = validate(arch);
  if (!verdict.ok()) {
    throw ConfigError("invalid architecture " + to_string(arch) + ": " +
                      verdict.message(arch));
  }
}

namespace {

void check_axis(const std::vector<std::int64_t>& axis, const char* name) {
  if (axis.empty()) {
    throw ConfigError(std::string("search-space axis '") + name +
                      "' is empty");
  }
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (axis[i] <= axis[i - 1]) {
      throw ConfigError(std::string("search-space axis '") + name +
                        "' must be strictly ascending without duplicates");
    }
  }
}

std::vector<std::int64_t> stride(const std::vector<std::int64_t>& axis,
                                 std::int64_t epsilon) {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < axis.size();
       i += static_cast<std::size_t>(epsilon)) {
    out.push_back(axis[i]);
  }
  return out;
}

}  // namespace

SearchSpace SearchSpace::make(std::vector<std::int64_t> depths,
                              std::vector<std::int64_t> heads,
                              std::vector<std::int64_t> hiddens,
                              std::vector<std::int64_t> intermediates) {
  check_axis(depths, "depths");
  check_axis(heads, "heads");
  check_axis(hiddens, "hiddens");
  check_axis(intermediates, "intermediates");
  SearchSpace space;
  space.depths_ = std::move(depths);
  space.heads_ = std::move(heads);
  space.hiddens_ = std::move(hiddens);
  space.intermediates_ = std::move(intermediates);
  return space;
}

std::size_t SearchSpace::product_size() const {
  return depths_.size() * heads_.size() * hiddens_.size() *
         intermediates_.size();
}

SearchSpace default_search_space() {
  return SearchSpace::make({2, 4, 6, 8, 10, 12}, {4, 8, 12, 16},
                           {512, 768, 1024}, {256, 512, 768, 1024, 3072});
}

std::vector<ArchParams> enumerate(const SearchSpace& space) {
  // Nested loops over ascending axes already yield lexicographic order.
  std::vector<ArchParams> out;
  for (const auto d : space.depths()) {
    for (const auto a : space.heads()) {
      for (const auto h : space.hiddens()) {
        for (const auto i : space.intermediates()) {
          const ArchParams arch{d, a, h, i};
          if (validate(arch).ok()) out.push_back(arch);
        }
      }
    }
  }
  return out;
}

SearchSpace stride_subsample(const SearchSpace& space, std::int64_t epsilon) {
  if (epsilon < 1) {
    throw std::invalid_argument("epsilon must be >= 1 (got " +
                                std::to_string(epsilon) + ")");
  }
  return SearchSpace::make(
      stride(space.depths(), epsilon), stride(space.heads(), epsilon),
      stride(space.hiddens(), epsilon), stride(space.intermediates(), epsilon));
}

}  // namespace ose
