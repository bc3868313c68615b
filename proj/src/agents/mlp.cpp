#include "pentabot/mlp.hpp"

#include <cmath>

#include "pentabot/errors.hpp"

namespace pentabot::agents {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kIdentity: return "identity";
  }
  return "identity";
}

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation '" + name + "'");
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
  if (spec_.input <= 0 || spec_.output <= 0) throw ConfigError("mlp input/output widths must be positive");
  if (spec_.hidden.empty()) throw ConfigError("mlp needs at least one hidden layer");
  widths_.push_back(spec_.input);
  for (int h : spec_.hidden) {
    if (h <= 0) throw ConfigError("mlp hidden widths must be positive");
    widths_.push_back(h);
  }
  widths_.push_back(spec_.output);
  Eigen::Index off = 0;
  for (int l = 0; l < layer_count(); ++l) {
    offsets_.push_back(off);
    off += static_cast<Eigen::Index>(widths_[l + 1]) * (widths_[l] + 1);
  }
  params_ = Eigen::VectorXd::Zero(off);
}

void Mlp::set_params(const Eigen::VectorXd& p) {
  if (p.size() != params_.size()) throw RangeError("parameter vector size mismatch");
  params_ = p;
}

void Mlp::init(std::mt19937_64& rng, double output_scale) {
  params_.setZero();
  for (int l = 0; l < layer_count(); ++l) {
    const double limit = std::sqrt(6.0 / (widths_[l] + widths_[l + 1]));
    std::uniform_real_distribution<double> u(-limit, limit);
    auto w = weight(l, params_);
    const double scale = l + 1 == layer_count() ? output_scale : 1.0;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = scale * u(rng);
    }
  }
}

Activation Mlp::activation_of(int layer) const {
  return layer + 1 == layer_count() ? Activation::kIdentity : spec_.hidden_activation;
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int l, const Eigen::VectorXd& p) const {
  return {p.data() + offsets_[l], widths_[l + 1], widths_[l]};
}
Eigen::Map<const Eigen::VectorXd> Mlp::bias(int l, const Eigen::VectorXd& p) const {
  return {p.data() + offsets_[l] + static_cast<Eigen::Index>(widths_[l + 1]) * widths_[l], widths_[l + 1]};
}
Eigen::Map<Eigen::MatrixXd> Mlp::weight(int l, Eigen::VectorXd& p) const {
  return {p.data() + offsets_[l], widths_[l + 1], widths_[l]};
}
Eigen::Map<Eigen::VectorXd> Mlp::bias(int l, Eigen::VectorXd& p) const {
  return {p.data() + offsets_[l] + static_cast<Eigen::Index>(widths_[l + 1]) * widths_[l], widths_[l + 1]};
}

namespace {

// Column-at-a-time product so a sample's output does not depend on the batch
// it is evaluated in (GEMM and GEMV round differently).
Eigen::MatrixXd affine(const Eigen::Map<const Eigen::MatrixXd>& w, const Eigen::Map<const Eigen::VectorXd>& b,
                       const Eigen::MatrixXd& h) {
  Eigen::MatrixXd z(w.rows(), h.cols());
  for (Eigen::Index j = 0; j < h.cols(); ++j) z.col(j).noalias() = w * h.col(j);
  z.colwise() += b;
  return z;
}

void activate(Activation a, Eigen::MatrixXd& m) {
  switch (a) {
    case Activation::kTanh: m = m.array().tanh(); break;
    case Activation::kRelu: m = m.array().max(0.0); break;
    case Activation::kIdentity: break;
  }
}

}  // namespace

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  if (x.rows() != spec_.input) throw RangeError("mlp input has wrong dimension");
  Eigen::MatrixXd h = x;
  for (int l = 0; l < layer_count(); ++l) {
    Eigen::MatrixXd z = affine(weight(l, params_), bias(l, params_), h);
    activate(activation_of(l), z);
    h = std::move(z);
  }
  return h;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache& cache) const {
  if (x.rows() != spec_.input) throw RangeError("mlp input has wrong dimension");
  cache.inputs.resize(layer_count());
  cache.pre.resize(layer_count());
  Eigen::MatrixXd h = x;
  for (int l = 0; l < layer_count(); ++l) {
    cache.inputs[l] = h;
    Eigen::MatrixXd z = affine(weight(l, params_), bias(l, params_), h);
    cache.pre[l] = z;
    activate(activation_of(l), z);
    h = std::move(z);
  }
  return h;
}

Eigen::MatrixXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& dout, Eigen::VectorXd& grad) const {
  if (grad.size() == 0) grad = Eigen::VectorXd::Zero(params_.size());
  if (grad.size() != params_.size()) throw RangeError("gradient vector size mismatch");
  Eigen::MatrixXd delta = dout;
  for (int l = layer_count() - 1; l >= 0; --l) {
    switch (activation_of(l)) {
      case Activation::kTanh:
        delta.array() *= 1.0 - cache.pre[l].array().tanh().square();
        break;
      case Activation::kRelu:
        delta.array() *= (cache.pre[l].array() > 0.0).cast<double>();
        break;
      case Activation::kIdentity: break;
    }
    weight(l, grad).noalias() += delta * cache.inputs[l].transpose();
    bias(l, grad) += delta.rowwise().sum();
    delta = weight(l, params_).transpose() * delta;
  }
  return delta;
}

Adam::Adam(Eigen::Index size, double lr_, double b1, double b2, double e)
    : lr(lr_), beta1(b1), beta2(b2), eps(e), m(Eigen::VectorXd::Zero(size)), v(Eigen::VectorXd::Zero(size)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (grad.size() != params.size() || m.size() != params.size()) throw RangeError("adam size mismatch");
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

double clip_grad_norm(Eigen::VectorXd& grad, double max_norm) {
  const double n = grad.norm();
  if (max_norm > 0.0 && n > max_norm) grad *= max_norm / n;
  return n;
}

}  // namespace pentabot::agents
