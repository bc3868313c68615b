#pragma once

#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pentabot::agents {

enum class Activation { kTanh, kRelu, kIdentity };

std::string activation_name(Activation a);
Activation parse_activation(const std::string& name);

struct MlpSpec {
  int input = 0;
  std::vector<int> hidden;
  int output = 0;
  Activation hidden_activation = Activation::kTanh;

  bool operator==(const MlpSpec&) const = default;
};

/// Fully connected network. Samples are columns. All weights live in one flat
/// vector: for each layer, W (out x in, column-major) followed by b.
class Mlp {
 public:
  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;  // input to each layer
    std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
  };

  Mlp() = default;
  explicit Mlp(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  int layer_count() const { return static_cast<int>(widths_.size()) - 1; }
  Eigen::Index param_count() const { return params_.size(); }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  void set_params(const Eigen::VectorXd& p);

  /// Uniform(+-sqrt(6 / (in + out))) weights, zero biases; the last layer is
  /// further multiplied by `output_scale`.
  void init(std::mt19937_64& rng, double output_scale = 1.0);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache& cache) const;
  /// Accumulates dL/dparams into `grad` (resized and zeroed if empty) and
  /// returns dL/dx.
  Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& dout, Eigen::VectorXd& grad) const;

  /// Views into a parameter-shaped vector.
  Eigen::Map<const Eigen::MatrixXd> weight(int layer, const Eigen::VectorXd& p) const;
  Eigen::Map<const Eigen::VectorXd> bias(int layer, const Eigen::VectorXd& p) const;
  Eigen::Map<Eigen::MatrixXd> weight(int layer, Eigen::VectorXd& p) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer, Eigen::VectorXd& p) const;

 private:
  Activation activation_of(int layer) const;

  MlpSpec spec_;
  std::vector<int> widths_;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd params_;
};

class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index size, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long t = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
};

/// Scales `grad` so its norm is at most `max_norm`; returns the original norm.
double clip_grad_norm(Eigen::VectorXd& grad, double max_norm);

}  // namespace pentabot::agents
