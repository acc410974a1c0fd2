#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "arena/config.hpp"
#include "arena/obsact.hpp"
#include "arena/rng.hpp"

namespace arena {

/// Layer sizes of the policy/value network.
struct NetShape {
  int crop_cells = 225;
  int materials = kMaterialCount;
  int embed_dim = 7;
  int entity_features = kEntityFeatureCount;
  int entity_dim = 32;
  int hidden = 48;
  Activation activation = Activation::Relu;

  [[nodiscard]] int tile_features() const { return crop_cells * (embed_dim + 1); }
  [[nodiscard]] int input_dim() const { return tile_features() + entity_dim; }

  friend bool operator==(const NetShape&, const NetShape&) = default;
};

NetShape make_shape(const NeuralConfig& neural, const ObsConfig& obs);

enum ParamTensor : int {
  kEmbed = 0,   // materials x embed_dim
  kEntityW,     // entity_dim x entity_features
  kEntityB,     // entity_dim x 1
  kMainW,       // hidden x input_dim
  kMainB,       // hidden x 1
  kMoveW,       // 5 x hidden
  kMoveB,
  kAttackW,     // 3 x hidden
  kAttackB,
  kValueW,      // 1 x hidden
  kValueB,
  kTensorCount
};

const char* tensor_name(int tensor);

/// Weights of one population's network. Gradients and Adam moments reuse
/// the same type.
struct PolicyParams {
  NetShape shape;
  std::array<Eigen::MatrixXd, kTensorCount> tensors;

  static PolicyParams zeros(const NetShape& shape);
  /// Uniform in +-scale/sqrt(fan_in) for weights; zero biases.
  static PolicyParams initialize(const NetShape& shape, Rng& rng, double scale = 1.0);

  [[nodiscard]] std::size_t parameter_count() const;
  [[nodiscard]] bool all_finite() const;

  Eigen::MatrixXd& operator[](int t) { return tensors[static_cast<std::size_t>(t)]; }
  const Eigen::MatrixXd& operator[](int t) const { return tensors[static_cast<std::size_t>(t)]; }
};

struct ForwardOutput {
  std::array<double, kMoveCount> move_logits{};
  std::array<double, kAttackCount> attack_logits{};
  double value = 0.0;
};

class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Tiles are embedded and concatenated with the occupant count, entities are
/// projected and max-pooled, the concatenation goes through one affine layer
/// plus the configured nonlinearity, and three affine heads read the hidden
/// vector. Throws DimensionError on malformed input.
ForwardOutput forward(const PolicyParams& params, const EncodedObs& obs);
std::vector<ForwardOutput> forward_batch(const PolicyParams& params, std::span<const EncodedObs* const> batch);

std::vector<double> softmax(std::span<const double> logits);
double entropy(std::span<const double> probs);

/// Inverse-CDF draw from softmax(logits).
int sample(std::span<const double> logits, Rng& rng);

struct Sample {
  const EncodedObs* obs = nullptr;
  int move = 0;
  int attack = 0;
  double ret = 0.0;
  double advantage = 0.0;
  bool attack_used = true;  // false when attacks had no effect (foraging only)
};

struct LossCoefficients {
  double value = 0.5;
  double entropy = 1e-2;
};

struct LossTerms {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;  // mean of move + attack entropies
  double total = 0.0;
};

class NonFiniteLossError : public std::runtime_error {
public:
  NonFiniteLossError(std::string term, double value);
  [[nodiscard]] const std::string& term() const { return term_; }

private:
  std::string term_;
};

/// Batch-mean loss
///   L = -A (log pi_move + log pi_attack) + c_v (v - R)^2 - c_H (H_move + H_attack)
/// and its exact gradient. Max-pool ties route to the lowest entity index.
LossTerms loss(const PolicyParams& params, std::span<const Sample> batch, const LossCoefficients& coef);
LossTerms backward(const PolicyParams& params, std::span<const Sample> batch, const LossCoefficients& coef,
                   PolicyParams& grad);

struct AdamState {
  PolicyParams m;
  PolicyParams v;
  std::int64_t step = 0;

  static AdamState for_params(const PolicyParams& params);
};

/// Adam with bias correction and decoupled weight decay
/// (p <- p - lr*wd*p before the moment update is applied).
void adam_step(AdamState& state, PolicyParams& params, const PolicyParams& grad, const NeuralConfig& config);

}  // namespace arena
