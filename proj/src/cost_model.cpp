#include "ose/cost_model.hpp"

#include <stdexcept>

namespace ose {

namespace {

// Checked unsigned arithmetic; any overflow is fatal for a cost formula.
Count mul(Count a, Count b) {
  Count out = 0;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw std::overflow_error("cost arithmetic overflows 64 bits");
  }
  return out;
}

Count add(Count a, Count b) {
  Count out = 0;
  if (__builtin_add_overflow(a, b, &out)) {
    throw std::overflow_error("cost arithmetic overflows 64 bits");
  }
  return out;
}

Count as_count(std::int64_t v) {
  if (v < 0) throw std::invalid_argument("negative dimension in cost formula");
  return static_cast<Count>(v);
}

struct Dims {
  Count d, h, i;
};

Dims dims(const ArchParams& arch) {
  require_valid(arch);
  return {as_count(arch.depth), as_count(arch.hidden),
          as_count(arch.intermediate)};
}

// 4H^2 + 2HI + 9H + I
Count encoder_layer_params(Count h, Count i) {
  Count t = mul(4, mul(h, h));
  t = add(t, mul(2, mul(h, i)));
  t = add(t, mul(9, h));
  return add(t, i);
}

// 4(2H-1)H + H^2 + (2H-1)I + 7I^2
Count encoder_layer_flops(Count h, Count i) {
  const Count two_h_minus_1 = mul(2, h) - 1;
  Count t = mul(4, mul(two_h_minus_1, h));
  t = add(t, mul(h, h));
  t = add(t, mul(two_h_minus_1, i));
  return add(t, mul(7, mul(i, i)));
}

}  // namespace

Count linear_params(const LayerShape& shape) {
  const Count m = as_count(shape.rows);
  const Count n = as_count(shape.cols);
  const Count weights = mul(m, n);
  return shape.has_bias ? add(weights, n) : weights;
}

Count linear_flops(const LayerShape& shape) {
  const Count m = as_count(shape.rows);
  const Count n = as_count(shape.cols);
  return mul(mul(2, n) - 1, m);
}

CostBreakdown cost_breakdown(const ArchParams& arch,
                             const EmbeddingConfig& emb) {
  const auto [d, h, i] = dims(arch);
  const Count v = as_count(emb.vocab);
  const Count s = as_count(emb.typepos);

  CostBreakdown out;
  out.encoder_params = mul(d, encoder_layer_params(h, i));
  out.pooler_params = mul(h, h);
  out.embedding_params = mul(add(add(v, s), 6), h);
  out.total_params =
      add(add(out.embedding_params, out.encoder_params), out.pooler_params);

  out.encoder_flops = mul(d, encoder_layer_flops(h, i));
  out.pooler_flops = mul(mul(2, h) - 1, h);
  out.embedding_flops = mul(3, h);
  out.total_flops =
      add(add(out.embedding_flops, out.encoder_flops), out.pooler_flops);
  return out;
}

Count param_count(const ArchParams& arch, const EmbeddingConfig& emb) {
  return cost_breakdown(arch, emb).total_params;
}

Count flop_count(const ArchParams& arch) {
  // FLOPs do not depend on the embedding configuration.
  return cost_breakdown(arch, EmbeddingConfig{}).total_flops;
}

Count embedding_params(const ArchParams& arch, const EmbeddingConfig& emb) {
  const Count h = dims(arch).h;
  return mul(add(add(as_count(emb.vocab), as_count(emb.typepos)), 3), h);
}

Count TensorShape::size() const { return mul(as_count(rows), as_count(cols)); }

std::vector<TensorShape> parameter_shapes(const ArchParams& arch,
                                          const EmbeddingConfig& emb) {
  require_valid(arch);
  const auto h = arch.hidden;
  const auto i = arch.intermediate;

  std::vector<TensorShape> shapes;
  shapes.push_back({"embeddings.word", emb.vocab, h});
  shapes.push_back({"embeddings.position", emb.typepos, h});
  shapes.push_back({"embeddings.token_type", 3, h});
  shapes.push_back({"embeddings.norm.alpha", 1, h});
  shapes.push_back({"embeddings.norm.beta", 1, h});

  for (std::int64_t layer = 0; layer < arch.depth; ++layer) {
    const std::string p = "layer." + std::to_string(layer) + ".";
    for (const char* proj : {"query", "key", "value", "output"}) {
      shapes.push_back({p + "attention." + proj + ".weight", h, h});
      shapes.push_back({p + "attention." + proj + ".bias", 1, h});
    }
    shapes.push_back({p + "attention.norm.alpha", 1, h});
    shapes.push_back({p + "attention.norm.beta", 1, h});
    shapes.push_back({p + "intermediate.weight", h, i});
    shapes.push_back({p + "intermediate.bias", 1, i});
    shapes.push_back({p + "output.weight", i, h});
    shapes.push_back({p + "output.bias", 1, h});
    shapes.push_back({p + "output.norm.alpha", 1, h});
    shapes.push_back({p + "output.norm.beta", 1, h});
  }

  shapes.push_back({"pooler.weight", h, h});
  shapes.push_back({"pooler.bias", 1, h});
  return shapes;
}

Count shape_oracle_params(const ArchParams& arch, const EmbeddingConfig& emb) {
  Count total = 0;
  for (const auto& shape : parameter_shapes(arch, emb)) {
    total = add(total, shape.size());
  }
  return total;
}

DominanceReport dominance_report(const ArchParams& arch,
                                 const EmbeddingConfig& emb) {
  DominanceReport report;
  report.breakdown = cost_breakdown(arch, emb);
  const auto& b = report.breakdown;
  report.param_ratio = static_cast<double>(b.encoder_params) /
                       static_cast<double>(b.embedding_params + b.pooler_params);
  report.flop_ratio = static_cast<double>(b.encoder_flops) /
                      static_cast<double>(b.embedding_flops + b.pooler_flops);
  return report;
}

}  // namespace ose
