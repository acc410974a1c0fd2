#include "arena/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace arena {

NetShape make_shape(const NeuralConfig& neural, const ObsConfig& obs) {
  NetShape s;
  s.crop_cells = obs.crop_size() * obs.crop_size();
  s.embed_dim = neural.embed_dim;
  s.entity_dim = neural.entity_dim;
  s.hidden = neural.hidden;
  s.activation = neural.activation;
  return s;
}

const char* tensor_name(int tensor) {
  static constexpr const char* kNames[kTensorCount] = {"embed",  "entity_w", "entity_b", "main_w",
                                                       "main_b", "move_w",   "move_b",   "attack_w",
                                                       "attack_b", "value_w", "value_b"};
  return tensor >= 0 && tensor < kTensorCount ? kNames[tensor] : "?";
}

namespace {

std::array<std::pair<int, int>, kTensorCount> tensor_shapes(const NetShape& s) {
  return {{
      {s.materials, s.embed_dim},
      {s.entity_dim, s.entity_features},
      {s.entity_dim, 1},
      {s.hidden, s.input_dim()},
      {s.hidden, 1},
      {kMoveCount, s.hidden},
      {kMoveCount, 1},
      {kAttackCount, s.hidden},
      {kAttackCount, 1},
      {1, s.hidden},
      {1, 1},
  }};
}

}  // namespace

PolicyParams PolicyParams::zeros(const NetShape& shape) {
  PolicyParams p;
  p.shape = shape;
  const auto shapes = tensor_shapes(shape);
  for (int t = 0; t < kTensorCount; ++t) p[t] = Eigen::MatrixXd::Zero(shapes[t].first, shapes[t].second);
  return p;
}

PolicyParams PolicyParams::initialize(const NetShape& shape, Rng& rng, double scale) {
  PolicyParams p = zeros(shape);
  for (int t : {kEmbed, kEntityW, kMainW, kMoveW, kAttackW, kValueW}) {
    auto& m = p[t];
    // embedding rows are looked up, not summed, so they use unit fan-in
    const double fan_in = t == kEmbed ? 1.0 : static_cast<double>(m.cols());
    const double bound = scale / std::sqrt(fan_in);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = (2.0 * rng.uniform01() - 1.0) * bound;
    }
  }
  return p;
}

std::size_t PolicyParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
  return n;
}

bool PolicyParams::all_finite() const {
  return std::all_of(tensors.begin(), tensors.end(), [](const Eigen::MatrixXd& m) { return m.allFinite(); });
}

NonFiniteLossError::NonFiniteLossError(std::string term, double value)
    : std::runtime_error("non-finite " + term + " loss term (" + std::to_string(value) + ")"), term_(std::move(term)) {}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += p[i] = std::exp(logits[i] - mx);
  for (auto& x : p) x /= z;
  return p;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

int sample(std::span<const double> logits, Rng& rng) {
  const auto p = softmax(logits);
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

namespace {

struct BatchCache {
  Eigen::MatrixXd input;   // input_dim x B
  Eigen::MatrixXd pre;     // hidden x B
  Eigen::MatrixXd hidden;  // hidden x B
  Eigen::MatrixXd move;    // 5 x B
  Eigen::MatrixXd attack;  // 3 x B
  Eigen::MatrixXd value;   // 1 x B
  std::vector<int> argmax; // entity_dim x B, column-major
};

void check_obs(const NetShape& s, const EncodedObs& obs) {
  if (static_cast<int>(obs.tiles.size()) != s.crop_cells || obs.counts.size() != obs.tiles.size()) {
    throw DimensionError("observation has " + std::to_string(obs.tiles.size()) + " tiles, network expects " +
                         std::to_string(s.crop_cells));
  }
  if (obs.entities.empty() || obs.entities.size() % static_cast<std::size_t>(s.entity_features) != 0) {
    throw DimensionError("observation entity block is empty or not a multiple of " +
                         std::to_string(s.entity_features));
  }
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Tanh: return std::tanh(x);
    case Activation::Identity: break;
  }
  return x;
}

// Derivative expressed through the pre-activation and the activation value.
double activate_grad(Activation a, double pre, double post) {
  switch (a) {
    case Activation::Relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - post * post;
    case Activation::Identity: break;
  }
  return 1.0;
}

void run_forward(const PolicyParams& p, std::span<const EncodedObs* const> batch, BatchCache& cache) {
  const NetShape& s = p.shape;
  const auto B = static_cast<Eigen::Index>(batch.size());
  const int E = s.embed_dim;
  const int T = s.tile_features();
  cache.input.resize(s.input_dim(), B);
  cache.argmax.assign(static_cast<std::size_t>(s.entity_dim) * batch.size(), 0);

  const Eigen::MatrixXd& embed = p[kEmbed];
  const Eigen::MatrixXd& ew = p[kEntityW];
  const Eigen::MatrixXd& eb = p[kEntityB];
  for (Eigen::Index b = 0; b < B; ++b) {
    const EncodedObs& obs = *batch[static_cast<std::size_t>(b)];
    check_obs(s, obs);
    double* col = cache.input.col(b).data();
    for (int i = 0; i < s.crop_cells; ++i) {
      const int mat = obs.tiles[static_cast<std::size_t>(i)];
      if (mat >= s.materials) throw DimensionError("material index " + std::to_string(mat) + " out of range");
      double* cell = col + static_cast<std::ptrdiff_t>(i) * (E + 1);
      for (int k = 0; k < E; ++k) cell[k] = embed(mat, k);
      cell[E] = obs.counts[static_cast<std::size_t>(i)];
    }
    const auto n = static_cast<Eigen::Index>(obs.entity_count());
    const Eigen::Map<const Eigen::MatrixXd> attrs(obs.entities.data(), s.entity_features, n);
    const Eigen::MatrixXd z = (ew * attrs).colwise() + eb.col(0);
    int* arg = cache.argmax.data() + static_cast<std::ptrdiff_t>(b) * s.entity_dim;
    for (int j = 0; j < s.entity_dim; ++j) {
      Eigen::Index best = 0;
      for (Eigen::Index e = 1; e < n; ++e) {
        if (z(j, e) > z(j, best)) best = e;  // strict: ties keep the lowest index
      }
      arg[j] = static_cast<int>(best);
      col[T + j] = z(j, best);
    }
  }

  cache.pre.noalias() = p[kMainW] * cache.input;
  cache.pre.colwise() += p[kMainB].col(0);
  cache.hidden = cache.pre.unaryExpr([a = s.activation](double x) { return activate(a, x); });
  cache.move.noalias() = p[kMoveW] * cache.hidden;
  cache.move.colwise() += p[kMoveB].col(0);
  cache.attack.noalias() = p[kAttackW] * cache.hidden;
  cache.attack.colwise() += p[kAttackB].col(0);
  cache.value.noalias() = p[kValueW] * cache.hidden;
  cache.value.array() += p[kValueB](0, 0);
}

ForwardOutput output_column(const BatchCache& c, Eigen::Index b) {
  ForwardOutput out;
  for (int i = 0; i < kMoveCount; ++i) out.move_logits[static_cast<std::size_t>(i)] = c.move(i, b);
  for (int i = 0; i < kAttackCount; ++i) out.attack_logits[static_cast<std::size_t>(i)] = c.attack(i, b);
  out.value = c.value(0, b);
  return out;
}

constexpr std::size_t kChunk = 256;

// Per-sample loss and, when requested, d(loss)/d(logits, value) for one chunk.
struct HeadGrads {
  Eigen::MatrixXd move;
  Eigen::MatrixXd attack;
  Eigen::MatrixXd value;
};

void accumulate_loss(const BatchCache& c, std::span<const Sample> chunk, const LossCoefficients& coef,
                     double inv_batch, LossTerms& terms, HeadGrads* grads) {
  const auto B = static_cast<Eigen::Index>(chunk.size());
  if (grads != nullptr) {
    grads->move.setZero(kMoveCount, B);
    grads->attack.setZero(kAttackCount, B);
    grads->value.setZero(1, B);
  }
  for (Eigen::Index b = 0; b < B; ++b) {
    const Sample& s = chunk[static_cast<std::size_t>(b)];
    const ForwardOutput out = output_column(c, b);
    const auto pm = softmax(out.move_logits);
    const auto pa = softmax(out.attack_logits);
    const double hm = entropy(pm);
    const double ha = entropy(pa);
    const double logp_move = std::log(pm[static_cast<std::size_t>(s.move)]);
    const double logp_attack = s.attack_used ? std::log(pa[static_cast<std::size_t>(s.attack)]) : 0.0;
    const double diff = out.value - s.ret;

    terms.policy += -s.advantage * (logp_move + logp_attack) * inv_batch;
    terms.value += coef.value * diff * diff * inv_batch;
    terms.entropy += (hm + ha) * inv_batch;

    if (grads == nullptr) continue;
    for (int k = 0; k < kMoveCount; ++k) {
      const double pk = pm[static_cast<std::size_t>(k)];
      const double onehot = k == s.move ? 1.0 : 0.0;
      double g = s.advantage * (pk - onehot);
      if (pk > 0.0) g += coef.entropy * pk * (std::log(pk) + hm);
      grads->move(k, b) = g * inv_batch;
    }
    for (int k = 0; k < kAttackCount; ++k) {
      const double pk = pa[static_cast<std::size_t>(k)];
      double g = 0.0;
      if (s.attack_used) g = s.advantage * (pk - (k == s.attack ? 1.0 : 0.0));
      if (pk > 0.0) g += coef.entropy * pk * (std::log(pk) + ha);
      grads->attack(k, b) = g * inv_batch;
    }
    grads->value(0, b) = 2.0 * coef.value * diff * inv_batch;
  }
}

void finish_terms(LossTerms& t, const LossCoefficients& coef) {
  t.total = t.policy + t.value - coef.entropy * t.entropy;
  if (!std::isfinite(t.policy)) throw NonFiniteLossError("policy", t.policy);
  if (!std::isfinite(t.value)) throw NonFiniteLossError("value", t.value);
  if (!std::isfinite(t.entropy)) throw NonFiniteLossError("entropy", t.entropy);
}

std::vector<const EncodedObs*> chunk_obs(std::span<const Sample> chunk) {
  std::vector<const EncodedObs*> obs;
  obs.reserve(chunk.size());
  for (const auto& s : chunk) obs.push_back(s.obs);
  return obs;
}

void check_params(const PolicyParams& a, const PolicyParams& b, const char* what) {
  for (int t = 0; t < kTensorCount; ++t) {
    if (a[t].rows() != b[t].rows() || a[t].cols() != b[t].cols()) {
      throw DimensionError(std::string(what) + ": shape mismatch in tensor " + tensor_name(t));
    }
  }
}

}  // namespace

ForwardOutput forward(const PolicyParams& params, const EncodedObs& obs) {
  const EncodedObs* ptr = &obs;
  BatchCache cache;
  run_forward(params, std::span<const EncodedObs* const>(&ptr, 1), cache);
  return output_column(cache, 0);
}

std::vector<ForwardOutput> forward_batch(const PolicyParams& params, std::span<const EncodedObs* const> batch) {
  std::vector<ForwardOutput> out;
  out.reserve(batch.size());
  BatchCache cache;
  for (std::size_t start = 0; start < batch.size(); start += kChunk) {
    const auto chunk = batch.subspan(start, std::min(kChunk, batch.size() - start));
    run_forward(params, chunk, cache);
    for (std::size_t b = 0; b < chunk.size(); ++b) out.push_back(output_column(cache, static_cast<Eigen::Index>(b)));
  }
  return out;
}

LossTerms loss(const PolicyParams& params, std::span<const Sample> batch, const LossCoefficients& coef) {
  LossTerms terms;
  if (batch.empty()) return terms;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  BatchCache cache;
  for (std::size_t start = 0; start < batch.size(); start += kChunk) {
    const auto chunk = batch.subspan(start, std::min(kChunk, batch.size() - start));
    const auto obs = chunk_obs(chunk);
    run_forward(params, obs, cache);
    accumulate_loss(cache, chunk, coef, inv_batch, terms, nullptr);
  }
  finish_terms(terms, coef);
  return terms;
}

LossTerms backward(const PolicyParams& params, std::span<const Sample> batch, const LossCoefficients& coef,
                   PolicyParams& grad) {
  const NetShape& s = params.shape;
  grad = PolicyParams::zeros(s);
  LossTerms terms;
  if (batch.empty()) return terms;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  const int E = s.embed_dim;
  const int T = s.tile_features();

  BatchCache cache;
  HeadGrads heads;
  for (std::size_t start = 0; start < batch.size(); start += kChunk) {
    const auto chunk = batch.subspan(start, std::min(kChunk, batch.size() - start));
    const auto obs = chunk_obs(chunk);
    run_forward(params, obs, cache);
    accumulate_loss(cache, chunk, coef, inv_batch, terms, &heads);

    grad[kMoveW].noalias() += heads.move * cache.hidden.transpose();
    grad[kMoveB] += heads.move.rowwise().sum();
    grad[kAttackW].noalias() += heads.attack * cache.hidden.transpose();
    grad[kAttackB] += heads.attack.rowwise().sum();
    grad[kValueW].noalias() += heads.value * cache.hidden.transpose();
    grad[kValueB] += heads.value.rowwise().sum();

    Eigen::MatrixXd dh = params[kMoveW].transpose() * heads.move;
    dh.noalias() += params[kAttackW].transpose() * heads.attack;
    dh.noalias() += params[kValueW].transpose() * heads.value;
    for (Eigen::Index j = 0; j < dh.cols(); ++j) {
      for (Eigen::Index i = 0; i < dh.rows(); ++i) {
        dh(i, j) *= activate_grad(s.activation, cache.pre(i, j), cache.hidden(i, j));
      }
    }
    grad[kMainW].noalias() += dh * cache.input.transpose();
    grad[kMainB] += dh.rowwise().sum();
    const Eigen::MatrixXd du = params[kMainW].transpose() * dh;

    for (std::size_t b = 0; b < chunk.size(); ++b) {
      const EncodedObs& o = *obs[b];
      const auto col = static_cast<Eigen::Index>(b);
      for (int i = 0; i < s.crop_cells; ++i) {
        const int mat = o.tiles[static_cast<std::size_t>(i)];
        for (int k = 0; k < E; ++k) grad[kEmbed](mat, k) += du(static_cast<Eigen::Index>(i) * (E + 1) + k, col);
      }
      const int* arg = cache.argmax.data() + b * static_cast<std::size_t>(s.entity_dim);
      for (int j = 0; j < s.entity_dim; ++j) {
        const double g = du(T + j, col);
        const double* attrs = o.entity(static_cast<std::size_t>(arg[j]));
        for (int f = 0; f < s.entity_features; ++f) grad[kEntityW](j, f) += g * attrs[f];
        grad[kEntityB](j, 0) += g;
      }
    }
  }
  finish_terms(terms, coef);
  return terms;
}

AdamState AdamState::for_params(const PolicyParams& params) {
  return {PolicyParams::zeros(params.shape), PolicyParams::zeros(params.shape), 0};
}

void adam_step(AdamState& state, PolicyParams& params, const PolicyParams& grad, const NeuralConfig& config) {
  check_params(params, grad, "adam_step(gradient)");
  check_params(params, state.m, "adam_step(state)");
  ++state.step;
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double lr = config.learning_rate;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double decay = 1.0 - lr * config.weight_decay;
  for (int t = 0; t < kTensorCount; ++t) {
    auto& p = params[t];
    auto& m = state.m[t];
    auto& v = state.v[t];
    const auto& g = grad[t];
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    p *= decay;
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config.epsilon);
  }
}

}  // namespace arena
