#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ose/arch_space.hpp"

namespace ose {

using Count = std::uint64_t;

/// Shape of a linear layer f(x) = Wx + b with W in R^{m x n}.
struct LayerShape {
  std::int64_t rows = 1;  // m
  std::int64_t cols = 1;  // n
  bool has_bias = true;
};

/// m*n + n with a bias, m*n without.
Count linear_params(const LayerShape& shape);

/// (2n - 1) * m add-multiply operations.
Count linear_flops(const LayerShape& shape);

/// Closed-form parameter count:
///   D(4H^2 + 2HI + 9H + I) + H^2 + (V + S + 6)H
/// Independent of the head count. Throws std::overflow_error if the value
/// does not fit in 64 bits.
Count param_count(const ArchParams& arch, const EmbeddingConfig& emb);

/// Closed-form FLOP count:
///   D(4(2H-1)H + H^2 + (2H-1)I + 7I^2) + (2H-1)H + 3H
Count flop_count(const ArchParams& arch);

/// Size of the embedding tables alone: VH + SH + 3H.
Count embedding_params(const ArchParams& arch, const EmbeddingConfig& emb);

/// Per-component split of the two closed forms above.
///
/// Parameters: embedding = (V+S+6)H, encoder = D(...), pooler = H^2.
/// FLOPs:      embedding = 3H (lookups are free), encoder = D(...),
///             pooler = (2H-1)H.
struct CostBreakdown {
  Count embedding_params = 0;
  Count encoder_params = 0;
  Count pooler_params = 0;
  Count total_params = 0;
  Count embedding_flops = 0;
  Count encoder_flops = 0;
  Count pooler_flops = 0;
  Count total_flops = 0;

  bool operator==(const CostBreakdown&) const = default;
};

CostBreakdown cost_breakdown(const ArchParams& arch,
                             const EmbeddingConfig& emb);

/// One trainable tensor of the functional pipeline.
struct TensorShape {
  std::string name;
  std::int64_t rows = 1;
  std::int64_t cols = 1;

  Count size() const;
};

/// Every trainable tensor instantiated by the architecture, in pipeline
/// order. The list is:
///
///   embeddings.word          V x H
///   embeddings.position      S x H
///   embeddings.token_type    3 x H
///   embeddings.norm.{alpha,beta}            1 x H each
///   per encoder layer i:
///     layer.i.attention.{query,key,value}.{weight,bias}   H x H, 1 x H
///     layer.i.attention.output.{weight,bias}               H x H, 1 x H
///     layer.i.attention.norm.{alpha,beta}                   1 x H each
///     layer.i.intermediate.{weight,bias}                    H x I, 1 x I
///     layer.i.output.{weight,bias}                          I x H, 1 x H
///     layer.i.output.norm.{alpha,beta}                      1 x H each
///   pooler.{weight,bias}     H x H, 1 x H
///
/// Per layer this is 4H^2 + 2HI + 9H + I; outside the encoders it is
/// H^2 + (V + S + 6)H, with the 3-row token-type table supplying the 3H of
/// the embedding-table size VH + SH + 3H.
std::vector<TensorShape> parameter_shapes(const ArchParams& arch,
                                          const EmbeddingConfig& emb);

/// Sum of `parameter_shapes`. Must agree with `param_count` everywhere.
Count shape_oracle_params(const ArchParams& arch, const EmbeddingConfig& emb);

struct DominanceReport {
  CostBreakdown breakdown;
  /// encoder / (embedding + pooler), parameters.
  double param_ratio = 0.0;
  /// encoder / (embedding + pooler), FLOPs.
  double flop_ratio = 0.0;
};

DominanceReport dominance_report(const ArchParams& arch,
                                 const EmbeddingConfig& emb);

}  // namespace ose
