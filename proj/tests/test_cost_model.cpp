#include <doctest.h>

#include <limits>
#include <stdexcept>

#include "ose/cost_model.hpp"
#include "ose/verify.hpp"

using namespace ose;

namespace {

const EmbeddingConfig kRoberta{50265, 514, 512, 1024};
const EmbeddingConfig kBert{28996, 512, 512, 256};
const EmbeddingConfig kUnit{1, 1, 1, 1};

const ArchParams kRobertaLarge{24, 16, 1024, 4096};
const ArchParams kExtracted{4, 8, 1024, 768};

}  // namespace

TEST_CASE("linear layer counts") {
  CHECK(linear_params({1, 1, true}) == 2);
  CHECK(linear_params({1024, 768, true}) == 787'200);
  CHECK(linear_params({3, 5, false}) == 15);
  CHECK(linear_flops({1, 1}) == 1);
  CHECK(linear_flops({1024, 1024}) == 2'096'128);
  CHECK(linear_flops({768, 1024}) == 1'572'096);
}

TEST_CASE("param_count closed form") {
  CHECK(param_count(kRobertaLarge, kRoberta) == 355'361'792);
  CHECK(param_count({2, 1, 1, 1}, kUnit) == 41);
  CHECK(param_count(kExtracted, kRoberta) == 76'161'024);
  CHECK(param_count({12, 12, 768, 3072}, kBert) == 108'311'040);
  CHECK(param_count({2, 2, 8, 16}, {32, 16, 8, 1}) == 1'696);
}

TEST_CASE("flop_count closed form") {
  CHECK(flop_count(kExtracted) == 62'635'008);
  CHECK(flop_count({2, 1, 1, 1}) == 30);
  CHECK(flop_count(kExtracted) == flop_count({4, 4, 1024, 768}));
}

TEST_CASE("embedding tables") {
  CHECK(embedding_params(kRobertaLarge, kRoberta) == 52'000'768);
  CHECK(embedding_params({24, 16, 1024, 4096}, {28996, 512, 512, 1}) == 30'219'264);
  CHECK(embedding_params({2, 1, 1, 1}, kUnit) == 5);
}

TEST_CASE("cost_breakdown components") {
  const auto b = cost_breakdown(kExtracted, kRoberta);
  CHECK(b.encoder_params == 23'108'608);
  CHECK(b.pooler_params == 1'048'576);
  CHECK(b.embedding_params == 52'003'840);
  CHECK(b.total_params == param_count(kExtracted, kRoberta));
  CHECK(b.total_flops == flop_count(kExtracted));
  CHECK(cost_breakdown(kRobertaLarge, kRoberta).encoder_params == 302'309'376);
}

TEST_CASE("invalid architectures are rejected") {
  CHECK_THROWS(param_count({3, 8, 512, 256}, kRoberta));
  CHECK_THROWS(flop_count({4, 12, 1024, 768}));
}

TEST_CASE("overflow is fatal") {
  const std::int64_t big = std::int64_t{1} << 40;
  CHECK_THROWS_AS(param_count({2, 1, big, big}, kRoberta), std::overflow_error);
  CHECK_THROWS_AS(flop_count({2, 1, big, big}), std::overflow_error);
}

TEST_CASE("shape oracle matches the closed form") {
  CHECK(shape_oracle_params(kRobertaLarge, kRoberta) == 355'361'792);
  CHECK(shape_oracle_params({2, 1, 1, 1}, kUnit) == 41);
  for (const auto& arch : enumerate(default_search_space())) {
    CHECK(shape_oracle_params(arch, kRoberta) == param_count(arch, kRoberta));
    CHECK(shape_oracle_params(arch, kBert) == param_count(arch, kBert));
  }
}

TEST_CASE("shape list layout") {
  const auto shapes = parameter_shapes({2, 2, 8, 16}, {32, 16, 8, 1});
  // 5 embedding tensors + 2 layers x 16 + 2 pooler tensors.
  CHECK(shapes.size() == 5 + 2 * 16 + 2);
  CHECK(shapes.front().name == "embeddings.word");
  CHECK(shapes.back().name == "pooler.bias");
  Count tables = 0;
  for (const auto& s : shapes) {
    if (s.name.rfind("embeddings.", 0) == 0 && s.name.find("norm") == std::string::npos) {
      tables += s.size();
    }
  }
  CHECK(tables == embedding_params({2, 2, 8, 16}, {32, 16, 8, 1}));
}

TEST_CASE("per-layer flop summation reproduces the closed form") {
  for (const auto& arch : enumerate(default_search_space())) {
    CHECK(summed_flops(arch) == flop_count(arch));
  }
  CHECK(summed_flops({2, 1, 1, 1}) == 30);
}

TEST_CASE("dominance report") {
  const auto large = dominance_report(kRobertaLarge, kRoberta);
  CHECK(large.param_ratio == doctest::Approx(5.698314964581443).epsilon(1e-12));
  const auto small = dominance_report(kExtracted, kRoberta);
  CHECK(small.param_ratio == doctest::Approx(0.43558069061359994).epsilon(1e-12));
  for (const auto& arch : enumerate(default_search_space())) {
    CHECK(dominance_report(arch, kRoberta).flop_ratio > 1.0);
  }
}

TEST_CASE("property: counts independent of heads, increasing in D, H, I") {
  for (const auto& arch : enumerate(default_search_space())) {
    for (std::int64_t a : {1, 2, 4, 8}) {
      ArchParams other = arch;
      other.heads = a;
      CHECK(param_count(other, kRoberta) == param_count(arch, kRoberta));
      CHECK(flop_count(other) == flop_count(arch));
    }
    auto bump = [&](auto field, std::int64_t by) {
      ArchParams next = arch;
      next.*field += by;
      next.heads = 1;
      ArchParams base = arch;
      base.heads = 1;
      CHECK(param_count(next, kRoberta) > param_count(base, kRoberta));
    };
    bump(&ArchParams::depth, 2);
    bump(&ArchParams::hidden, 1);
    bump(&ArchParams::intermediate, 1);
  }
}
