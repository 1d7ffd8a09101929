#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ose/arch_space.hpp"
#include "ose/cost_model.hpp"

namespace ose {

/// The closed forms under test. Tests swap in perturbed versions to check
/// that the suite reports a counterexample.
struct VerifyHooks {
  std::function<Count(const ArchParams&, const EmbeddingConfig&)> param_count =
      [](const ArchParams& a, const EmbeddingConfig& e) {
        return ose::param_count(a, e);
      };
  std::function<Count(const ArchParams&)> flop_count =
      [](const ArchParams& a) { return ose::flop_count(a); };
};

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Summary on success, first counterexample on failure.
  std::string detail;
};

/// FLOPs of one encoder layer, summed operation by operation:
/// query/key/value/output projections, the score product, the intermediate
/// projection, and the GeLU + output projection term.
Count layer_flops_by_operation(const ArchParams& arch);

/// Embedding adds + D encoder layers + pooler, accumulated one layer at a
/// time.
Count summed_flops(const ArchParams& arch);

/// Small configurations used for the toy-net cross-checks.
std::vector<std::pair<ArchParams, EmbeddingConfig>> toy_configs();

/// Runs every cross-module equivalence check. Deterministic.
std::vector<CheckResult> run_verification(const VerifyHooks& hooks = {});

}  // namespace ose
