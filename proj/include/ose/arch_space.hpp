#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace ose {

/// One member of the BERT family: depth, attention heads, hidden size and
/// intermediate size.
struct ArchParams {
  std::int64_t depth = 0;
  std::int64_t heads = 0;
  std::int64_t hidden = 0;
  std::int64_t intermediate = 0;

  auto operator<=>(const ArchParams&) const = default;
};

std::string to_string(const ArchParams& arch);

/// Vocabulary size, token-type/position table size, sequence length, batch.
struct EmbeddingConfig {
  std::int64_t vocab = 50265;
  std::int64_t typepos = 514;
  std::int64_t seq = 512;
  std::int64_t batch = 1024;

  bool operator==(const EmbeddingConfig&) const = default;
};

/// Throws ConfigError when the embedding configuration is unusable.
void check(const EmbeddingConfig& emb);

enum class Violation {
  kNonPositiveField,
  kHeadsDoNotDivideHidden,
  kOddDepth,
};

std::string describe(Violation v, const ArchParams& arch);

struct Verdict {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  /// All violations joined with "; ", empty when ok.
  std::string message(const ArchParams& arch) const;
};

Verdict validate(const ArchParams& arch);

/// Throws ConfigError carrying the verdict message unless `arch` is valid.
void require_valid(const ArchParams& arch);

/// Four strictly ascending, non-empty axes. Construct through `make` to get
/// the invariants checked.
class SearchSpace {
 public:
  static SearchSpace make(std::vector<std::int64_t> depths,
                          std::vector<std::int64_t> heads,
                          std::vector<std::int64_t> hiddens,
                          std::vector<std::int64_t> intermediates);

  const std::vector<std::int64_t>& depths() const { return depths_; }
  const std::vector<std::int64_t>& heads() const { return heads_; }
  const std::vector<std::int64_t>& hiddens() const { return hiddens_; }
  const std::vector<std::int64_t>& intermediates() const {
    return intermediates_;
  }

  /// Size of the unfiltered Cartesian product.
  std::size_t product_size() const;

  bool operator==(const SearchSpace&) const = default;

 private:
  SearchSpace() = default;

  std::vector<std::int64_t> depths_;
  std::vector<std::int64_t> heads_;
  std::vector<std::int64_t> hiddens_;
  std::vector<std::int64_t> intermediates_;
};

/// The grid used for the original extraction run.
SearchSpace default_search_space();

/// Valid members of the Cartesian product, lexicographic on <D,A,H,I>.
std::vector<ArchParams> enumerate(const SearchSpace& space);

/// Keeps every `epsilon`-th element of each axis, starting at the first.
/// Throws std::invalid_argument when epsilon < 1.
SearchSpace stride_subsample(const SearchSpace& space, std::int64_t epsilon);

}  // namespace ose
