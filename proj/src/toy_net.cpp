#include "ose/toy_net.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "ose/errors.hpp"

namespace ose::toy {

double gelu(double x) {
  static const double kScale = std::sqrt(2.0 / std::numbers::pi);
  return 0.5 * x * (1.0 + std::tanh(kScale * (x + kGeluCubic * x * x * x)));
}

Eigen::RowVectorXd softmax(const Eigen::RowVectorXd& logits) {
  const Eigen::RowVectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::RowVectorXd normalize(const Eigen::RowVectorXd& x, double eps) {
  const double mean = x.mean();
  const Eigen::RowVectorXd centered = x.array() - mean;
  const double var = centered.squaredNorm() / static_cast<double>(x.size());
  return centered / std::sqrt(var + eps);
}

Eigen::RowVectorXd layer_norm(const Eigen::RowVectorXd& x,
                              const Eigen::RowVectorXd& alpha,
                              const Eigen::RowVectorXd& beta, double eps) {
  if (x.size() == 0 || alpha.size() != x.size() || beta.size() != x.size()) {
    throw std::invalid_argument("layer_norm: vectors must share a length >= 1");
  }
  return normalize(x, eps).cwiseProduct(alpha) + beta;
}

void check(const ToyNetConfig& config) {
  require_valid(config.arch);
  // Toy vocabularies may be a single token.
  const auto& emb = config.emb;
  if (emb.vocab < 1 || emb.typepos < 1 || emb.seq < 1 || emb.batch < 1) {
    throw ConfigError("toy embedding fields must all be >= 1");
  }
  if (config.emb.seq > config.emb.typepos) {
    throw ConfigError("seq must not exceed typepos (position table size)");
  }
  if (!(config.layernorm_eps > 0.0)) {
    throw ConfigError("layernorm_eps must be positive");
  }
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) {
    throw ConfigError("dropout must be in [0, 1)");
  }
}

Eigen::MatrixXd Linear::apply(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd y = x * weight;
  y.rowwise() += bias;
  return y;
}

namespace {

class Filler {
 public:
  Filler(Init init, std::uint64_t seed) : init_(init), rng_(seed) {}

  Eigen::MatrixXd matrix(std::int64_t rows, std::int64_t cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = draw();
    }
    return m;
  }

  Eigen::RowVectorXd row(std::int64_t n, double zero_value = 0.0) {
    Eigen::RowVectorXd v(n);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      v(i) = init_ == Init::kZero ? zero_value : draw();
    }
    return v;
  }

  Linear linear(std::int64_t in, std::int64_t out) {
    Linear l;
    l.weight = matrix(in, out);
    l.bias = row(out);
    return l;
  }

  Norm norm(std::int64_t n) {
    Norm out;
    out.alpha = row(n, 1.0);
    out.beta = row(n);
    return out;
  }

 private:
  double draw() { return init_ == Init::kZero ? 0.0 : dist_(rng_); }

  Init init_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> dist_{-0.5, 0.5};
};

void record_norm(const Eigen::RowVectorXd& x, double eps, ForwardTrace* trace) {
  if (trace == nullptr) return;
  ++trace->norm_rows;
  const double mean = x.mean();
  const double var =
      (x.array() - mean).square().sum() / static_cast<double>(x.size());
  if (var < 10.0 * eps) return;
  const Eigen::RowVectorXd n = normalize(x, eps);
  const double n_mean = n.mean();
  const double n_var =
      (n.array() - n_mean).square().sum() / static_cast<double>(n.size());
  trace->max_norm_mean_abs = std::max(trace->max_norm_mean_abs, std::abs(n_mean));
  trace->max_norm_variance_dev =
      std::max(trace->max_norm_variance_dev, std::abs(n_var - var / (var + eps)));
}

Eigen::MatrixXd norm_rows(const Eigen::MatrixXd& x, const Norm& norm,
                          double eps, ForwardTrace* trace) {
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    record_norm(x.row(r), eps, trace);
    out.row(r) = layer_norm(x.row(r), norm.alpha, norm.beta, eps);
  }
  return out;
}

}  // namespace

Weights make_weights(const ToyNetConfig& config, Init init) {
  check(config);
  const auto h = config.arch.hidden;
  const auto i = config.arch.intermediate;
  Filler fill(init, config.seed);

  Weights w;
  w.word = fill.matrix(config.emb.vocab, h);
  w.position = fill.matrix(config.emb.typepos, h);
  w.token_type = fill.matrix(3, h);
  w.embedding_norm = fill.norm(h);
  for (std::int64_t d = 0; d < config.arch.depth; ++d) {
    EncoderLayer layer;
    layer.query = fill.linear(h, h);
    layer.key = fill.linear(h, h);
    layer.value = fill.linear(h, h);
    layer.attention_output = fill.linear(h, h);
    layer.attention_norm = fill.norm(h);
    layer.intermediate = fill.linear(h, i);
    layer.output = fill.linear(i, h);
    layer.output_norm = fill.norm(h);
    w.layers.push_back(std::move(layer));
  }
  w.pooler = fill.linear(h, h);
  return w;
}

ToyNet::ToyNet(ToyNetConfig config)
    : ToyNet(config, make_weights(config, Init::kUniform)) {}

ToyNet::ToyNet(ToyNetConfig config, Weights weights)
    : config_(std::move(config)), weights_(std::move(weights)) {
  check(config_);
  auto expect = [](const Eigen::MatrixXd& m, std::int64_t rows,
                   std::int64_t cols, const std::string& name) {
    if (m.rows() != rows || m.cols() != cols) {
      throw ConfigError("weight '" + name + "' has shape " +
                        std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()) + ", expected " +
                        std::to_string(rows) + "x" + std::to_string(cols));
    }
  };
  if (static_cast<std::int64_t>(weights_.layers.size()) != config_.arch.depth) {
    throw ConfigError("weight set has the wrong number of encoder layers");
  }
  const auto shapes = parameter_shapes(config_.arch, config_.emb);
  std::size_t k = 0;
  for_each_tensor([&](const std::string& name, const Eigen::MatrixXd& m) {
    if (k >= shapes.size() || shapes[k].name != name) {
      throw InvariantError("tensor order diverges from parameter_shapes at '" +
                           name + "'");
    }
    expect(m, shapes[k].rows, shapes[k].cols, name);
    ++k;
  });
  if (k != shapes.size()) {
    throw InvariantError("tensor count diverges from parameter_shapes");
  }
}

void ToyNet::for_each_tensor(
    const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn)
    const {
  // Row vectors are viewed as 1 x n matrices.
  auto row = [&](const std::string& name, const Eigen::RowVectorXd& v) {
    fn(name, Eigen::MatrixXd(v));
  };
  auto linear = [&](const std::string& name, const Linear& l) {
    fn(name + ".weight", l.weight);
    row(name + ".bias", l.bias);
  };
  auto norm = [&](const std::string& name, const Norm& n) {
    row(name + ".alpha", n.alpha);
    row(name + ".beta", n.beta);
  };

  fn("embeddings.word", weights_.word);
  fn("embeddings.position", weights_.position);
  fn("embeddings.token_type", weights_.token_type);
  norm("embeddings.norm", weights_.embedding_norm);
  for (std::size_t d = 0; d < weights_.layers.size(); ++d) {
    const auto& layer = weights_.layers[d];
    const std::string p = "layer." + std::to_string(d) + ".";
    linear(p + "attention.query", layer.query);
    linear(p + "attention.key", layer.key);
    linear(p + "attention.value", layer.value);
    linear(p + "attention.output", layer.attention_output);
    norm(p + "attention.norm", layer.attention_norm);
    linear(p + "intermediate", layer.intermediate);
    linear(p + "output", layer.output);
    norm(p + "output.norm", layer.output_norm);
  }
  linear("pooler", weights_.pooler);
}

Eigen::MatrixXd attention(const Eigen::MatrixXd& x, const EncoderLayer& layer,
                          std::int64_t heads, ForwardTrace* trace) {
  const auto hidden = x.cols();
  if (heads < 1 || hidden % heads != 0) {
    throw std::invalid_argument("attention: hidden size must be divisible by heads");
  }
  const Eigen::Index width = hidden / heads;
  const double scale = std::sqrt(static_cast<double>(width));

  const Eigen::MatrixXd q = layer.query.apply(x);
  const Eigen::MatrixXd k = layer.key.apply(x);
  const Eigen::MatrixXd v = layer.value.apply(x);

  Eigen::MatrixXd out(x.rows(), hidden);
  for (Eigen::Index head = 0; head < heads; ++head) {
    const Eigen::Index c0 = head * width;
    const Eigen::MatrixXd scores =
        q.middleCols(c0, width) * k.middleCols(c0, width).transpose() / scale;
    Eigen::MatrixXd probs(scores.rows(), scores.cols());
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      probs.row(r) = softmax(scores.row(r));
      if (trace != nullptr) {
        ++trace->softmax_rows;
        trace->max_softmax_row_deviation = std::max(
            trace->max_softmax_row_deviation, std::abs(probs.row(r).sum() - 1.0));
        trace->min_softmax_entry =
            std::min(trace->min_softmax_entry, probs.row(r).minCoeff());
        trace->max_softmax_entry =
            std::max(trace->max_softmax_entry, probs.row(r).maxCoeff());
      }
    }
    out.middleCols(c0, width) = probs * v.middleCols(c0, width);
  }
  return out;
}

std::vector<Eigen::MatrixXd> ToyNet::forward(const TokenBatch& tokens,
                                             ForwardTrace* trace) const {
  const auto& emb = config_.emb;
  const double eps = config_.layernorm_eps;
  if (tokens.batch < 1 || tokens.seq < 1 ||
      tokens.ids.size() != static_cast<std::size_t>(tokens.batch * tokens.seq)) {
    throw DataError("token batch shape does not match its id count");
  }
  if (tokens.seq > emb.typepos) {
    throw DataError("sequence length " + std::to_string(tokens.seq) +
                    " exceeds the position table size " +
                    std::to_string(emb.typepos));
  }
  for (std::size_t n = 0; n < tokens.ids.size(); ++n) {
    const auto id = tokens.ids[n];
    if (id < 0 || id >= emb.vocab) {
      throw DataError("token id " + std::to_string(id) + " at batch " +
                      std::to_string(n / tokens.seq) + ", position " +
                      std::to_string(n % tokens.seq) + " is outside [0, " +
                      std::to_string(emb.vocab) + ")");
    }
  }

  const auto& w = weights_;
  std::vector<Eigen::MatrixXd> outputs;
  outputs.reserve(static_cast<std::size_t>(tokens.batch));
  for (std::int64_t b = 0; b < tokens.batch; ++b) {
    // Input layer: word + position (0..s-1) + token type 0, then norm.
    Eigen::MatrixXd x(tokens.seq, config_.arch.hidden);
    for (std::int64_t j = 0; j < tokens.seq; ++j) {
      const auto id = tokens.ids[static_cast<std::size_t>(b * tokens.seq + j)];
      x.row(j) = w.word.row(id) + w.position.row(j) + w.token_type.row(0);
    }
    x = norm_rows(x, w.embedding_norm, eps, trace);

    for (const auto& layer : w.layers) {
      const Eigen::MatrixXd a = attention(x, layer, config_.arch.heads, trace);
      const Eigen::MatrixXd m =
          norm_rows(layer.attention_output.apply(a) + x, layer.attention_norm,
                    eps, trace);
      const Eigen::MatrixXd inner =
          layer.intermediate.apply(m).unaryExpr([](double v) { return gelu(v); });
      x = norm_rows(layer.output.apply(inner) + m, layer.output_norm, eps,
                    trace);
    }

    outputs.push_back(w.pooler.apply(x).array().tanh().matrix());
  }
  return outputs;
}

Count count_instantiated_params(const ToyNet& net) {
  Count total = 0;
  net.for_each_tensor([&](const std::string&, const Eigen::MatrixXd& m) {
    total += static_cast<Count>(m.size());
  });
  return total;
}

namespace {

void check_logits(const Eigen::MatrixXd& student, const Eigen::MatrixXd& teacher,
                  double temperature) {
  if (student.rows() != teacher.rows() || student.cols() != teacher.cols()) {
    throw std::invalid_argument("kd_loss: student and teacher shapes differ");
  }
  if (student.rows() == 0 || student.cols() == 0) {
    throw std::invalid_argument("kd_loss: logits must be non-empty");
  }
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("kd_loss: temperature must be positive");
  }
}

Eigen::RowVectorXd log_softmax(const Eigen::RowVectorXd& logits) {
  const double max = logits.maxCoeff();
  const double lse = max + std::log((logits.array() - max).exp().sum());
  return logits.array() - lse;
}

}  // namespace

double distillation_loss(const Eigen::MatrixXd& student_logits,
                         const Eigen::MatrixXd& teacher_logits,
                         double temperature) {
  check_logits(student_logits, teacher_logits, temperature);
  double total = 0.0;
  for (Eigen::Index r = 0; r < student_logits.rows(); ++r) {
    const Eigen::RowVectorXd target = softmax(teacher_logits.row(r) / temperature);
    const Eigen::RowVectorXd log_q = log_softmax(student_logits.row(r) / temperature);
    total -= target.dot(log_q);
  }
  return total / static_cast<double>(student_logits.rows());
}

double kd_loss(const Eigen::MatrixXd& student_logits,
               const Eigen::MatrixXd& teacher_logits, double mlm_loss,
               double weight, double temperature) {
  if (!(weight >= 0.0 && weight <= 1.0)) {
    throw std::invalid_argument("kd_loss: weight must be in [0, 1]");
  }
  if (!(mlm_loss >= 0.0)) {
    throw std::invalid_argument("kd_loss: mlm_loss must be non-negative");
  }
  const double distill =
      distillation_loss(student_logits, teacher_logits, temperature);
  return (1.0 - weight) * mlm_loss + weight * distill;
}

}  // namespace ose::toy
