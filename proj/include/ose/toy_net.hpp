#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ose/arch_space.hpp"
#include "ose/cost_model.hpp"

namespace ose::toy {

/// Cubic coefficient of the tanh GeLU approximation, as used by the cost
/// model's GeLU accounting.
inline constexpr double kGeluCubic = 0.44715;

/// (x/2)(1 + tanh(sqrt(2/pi)(x + k x^3)))
double gelu(double x);

/// Numerically stable softmax of one row.
Eigen::RowVectorXd softmax(const Eigen::RowVectorXd& logits);

/// (x - E[x]) / sqrt(Var[x] + eps), population variance.
Eigen::RowVectorXd normalize(const Eigen::RowVectorXd& x, double eps);

/// normalize(x) * alpha + beta, elementwise. Throws std::invalid_argument on
/// length mismatch or empty input.
Eigen::RowVectorXd layer_norm(const Eigen::RowVectorXd& x,
                              const Eigen::RowVectorXd& alpha,
                              const Eigen::RowVectorXd& beta, double eps);

struct ToyNetConfig {
  ArchParams arch;
  EmbeddingConfig emb;
  /// Dropout probability. Forward runs in evaluation mode, so this is
  /// recorded but has no effect on outputs.
  double dropout = 0.0;
  double layernorm_eps = 1e-5;
  std::uint64_t seed = 0;
};

/// Throws ConfigError on an invalid arch or embedding, seq > typepos,
/// eps <= 0 or dropout outside [0, 1).
void check(const ToyNetConfig& config);

/// x W + b for row-major activations; W is (in x out).
struct Linear {
  Eigen::MatrixXd weight;
  Eigen::RowVectorXd bias;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

struct Norm {
  Eigen::RowVectorXd alpha;
  Eigen::RowVectorXd beta;
};

struct EncoderLayer {
  Linear query, key, value, attention_output;
  Norm attention_norm;
  Linear intermediate, output;
  Norm output_norm;
};

struct Weights {
  Eigen::MatrixXd word;        // V x H
  Eigen::MatrixXd position;    // S x H
  Eigen::MatrixXd token_type;  // 3 x H
  Norm embedding_norm;
  std::vector<EncoderLayer> layers;
  Linear pooler;
};

enum class Init {
  kUniform,  // every tensor from U(-1/2, 1/2), seeded
  kZero,     // all tensors zero except layer-norm alpha = 1
};

Weights make_weights(const ToyNetConfig& config, Init init);

/// Collected while running forward; used by the invariant checks.
struct ForwardTrace {
  double max_softmax_row_deviation = 0.0;  // max |sum(row) - 1|
  double min_softmax_entry = 1.0;
  double max_softmax_entry = 0.0;
  /// Over pre-affine layer-norm rows whose input variance is >= 10 eps.
  double max_norm_mean_abs = 0.0;
  /// Against var / (var + eps), the exact variance after normalizing.
  double max_norm_variance_dev = 0.0;
  std::size_t softmax_rows = 0;
  std::size_t norm_rows = 0;
};

/// Token ids for a z x s batch, row-major.
struct TokenBatch {
  std::int64_t batch = 1;
  std::int64_t seq = 1;
  std::vector<std::int64_t> ids;
};

/// A forward-only BERT encoder at desk scale. Immutable once built; forward
/// is safe to call concurrently.
class ToyNet {
 public:
  /// Seeded uniform initialization.
  explicit ToyNet(ToyNetConfig config);
  ToyNet(ToyNetConfig config, Weights weights);

  const ToyNetConfig& config() const { return config_; }
  const Weights& weights() const { return weights_; }

  /// Visits every trainable tensor with the names used by parameter_shapes.
  void for_each_tensor(
      const std::function<void(const std::string&, const Eigen::MatrixXd&)>&
          fn) const;

  /// One s x H matrix per batch row, every entry in [-1, 1]. Throws
  /// DataError on an out-of-range token id, naming its position.
  std::vector<Eigen::MatrixXd> forward(const TokenBatch& tokens,
                                       ForwardTrace* trace = nullptr) const;

 private:
  ToyNetConfig config_;
  Weights weights_;
};

/// Multi-head scaled dot-product attention over an s x H input: softmax
/// blocks of width H/A scaled by sqrt(H/A). Returns the s x H mixture of
/// value projections, before the output projection.
Eigen::MatrixXd attention(const Eigen::MatrixXd& x, const EncoderLayer& layer,
                          std::int64_t heads, ForwardTrace* trace = nullptr);

Count count_instantiated_params(const ToyNet& net);

/// Mean over rows of cross-entropy between softmax(teacher/tau) and
/// softmax(student/tau). Both sides are softened; no tau^2 rescaling.
double distillation_loss(const Eigen::MatrixXd& student_logits,
                         const Eigen::MatrixXd& teacher_logits,
                         double temperature);

/// (1 - weight) * mlm_loss + weight * distillation_loss. Throws
/// std::invalid_argument on shape mismatch, temperature <= 0, weight outside
/// [0, 1] or negative mlm_loss.
double kd_loss(const Eigen::MatrixXd& student_logits,
               const Eigen::MatrixXd& teacher_logits, double mlm_loss,
               double weight = 0.5, double temperature = 2.0);

}  // namespace ose::toy
