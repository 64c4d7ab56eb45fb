#include "radarfield/mlp.hpp"

#include "radarfield/hash_table.hpp"

#include <cmath>
#include <stdexcept>

namespace radarfield {

DenseLayer::DenseLayer(int in, int out)
    : weight(Eigen::MatrixXd::Zero(out, in)),
      bias(Eigen::VectorXd::Zero(out)),
      grad_weight(Eigen::MatrixXd::Zero(out, in)),
      grad_bias(Eigen::VectorXd::Zero(out)),
      adam_m_weight(Eigen::MatrixXd::Zero(out, in)),
      adam_v_weight(Eigen::MatrixXd::Zero(out, in)),
      adam_m_bias(Eigen::VectorXd::Zero(out)),
      adam_v_bias(Eigen::VectorXd::Zero(out)) {}

Mlp::Mlp(const std::vector<int>& sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw std::invalid_argument("Mlp: need at least input and output sizes");
  for (int s : sizes)
    if (s < 1) throw std::invalid_argument("Mlp: layer sizes must be positive");
  std::uint64_t state = splitmix64(seed ^ 0x6d6c70u);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer layer(sizes[l], sizes[l + 1]);
    const double bound = std::sqrt(6.0 / sizes[l]);
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
        state = splitmix64(state);
        const double unit = static_cast<double>(state >> 11) * 0x1.0p-53;
        layer.weight(i, j) = (2.0 * unit - 1.0) * bound;
      }
    layers_.push_back(std::move(layer));
  }
}

std::vector<int> Mlp::sizes() const {
  std::vector<int> s{input_dim()};
  for (const auto& l : layers_) s.push_back(l.out());
  return s;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& X, MlpCache* cache) const {
  if (X.rows() != input_dim()) throw std::invalid_argument("Mlp::forward: input has wrong width");
  if (cache) {
    cache->inputs.clear();
    cache->masks.clear();
    cache->tangent_inputs.clear();
    cache->batch = X.cols();
    cache->has_tangents = false;
    cache->pending = true;
  }
  Eigen::MatrixXd a = X;
  const std::size_t L = layers_.size();
  for (std::size_t l = 0; l < L; ++l) {
    const auto& layer = layers_[l];
    Eigen::MatrixXd z = layer.weight * a;
    z.colwise() += layer.bias;
    if (cache) cache->inputs.push_back(std::move(a));
    if (l + 1 < L) {
      Eigen::MatrixXd mask = (z.array() > 0.0).cast<double>();
      a = z.cwiseProduct(mask);
      if (cache) cache->masks.push_back(std::move(mask));
    } else {
      a = std::move(z);
    }
  }
  return a;
}

Eigen::MatrixXd Mlp::forward_tangent(const Eigen::MatrixXd& T, MlpCache& cache) const {
  if (!cache.pending) throw std::logic_error("Mlp::forward_tangent: no forward pass recorded");
  const Eigen::Index B = cache.batch;
  if (T.rows() != input_dim() || B == 0 || T.cols() % B != 0)
    throw std::invalid_argument("Mlp::forward_tangent: tangent matrix has wrong shape");
  const Eigen::Index k = T.cols() / B;
  cache.tangent_inputs.clear();
  Eigen::MatrixXd t = T;
  const std::size_t L = layers_.size();
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd z = layers_[l].weight * t;
    cache.tangent_inputs.push_back(std::move(t));
    if (l + 1 < L) {
      for (Eigen::Index b = 0; b < k; ++b) z.middleCols(b * B, B).array() *= cache.masks[l].array();
    }
    t = std::move(z);
  }
  cache.has_tangents = true;
  return t;
}

Eigen::MatrixXd Mlp::backward(const Eigen::MatrixXd& dY, const Eigen::MatrixXd* dTout, MlpCache& cache,
                              Eigen::MatrixXd* dT0, bool accumulate) {
  if (!cache.pending) throw std::logic_error("Mlp::backward: called without a pending forward pass");
  cache.pending = false;
  const Eigen::Index B = cache.batch;
  const bool tangents = dTout != nullptr && cache.has_tangents;
  if (dTout && !cache.has_tangents) throw std::logic_error("Mlp::backward: tangent gradient without tangents");

  Eigen::MatrixXd da = dY;
  Eigen::MatrixXd dt;
  if (tangents) dt = *dTout;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    auto& layer = layers_[l];
    if (l + 1 < layers_.size()) {
      da.array() *= cache.masks[l].array();
      if (tangents) {
        const Eigen::Index k = dt.cols() / B;
        for (Eigen::Index b = 0; b < k; ++b) dt.middleCols(b * B, B).array() *= cache.masks[l].array();
      }
    }
    if (accumulate) {
      layer.grad_weight.noalias() += da * cache.inputs[l].transpose();
      layer.grad_bias.noalias() += da.rowwise().sum();
      if (tangents) layer.grad_weight.noalias() += dt * cache.tangent_inputs[l].transpose();
    }
    da = layer.weight.transpose() * da;
    if (tangents && (l > 0 || dT0)) dt = layer.weight.transpose() * dt;
  }
  if (dT0) {
    if (tangents) *dT0 = std::move(dt);
    else dT0->resize(0, 0);
  }
  return da;
}

void Mlp::zero_grad() {
  for (auto& l : layers_) {
    l.grad_weight.setZero();
    l.grad_bias.setZero();
  }
}

void Mlp::adam_step(const AdamConfig& cfg, long step) {
  auto span_of = [](auto& m) { return std::span<double>(m.data(), static_cast<std::size_t>(m.size())); };
  for (auto& l : layers_) {
    adam_update(span_of(l.weight), span_of(l.grad_weight), span_of(l.adam_m_weight), span_of(l.adam_v_weight), cfg,
                step);
    adam_update(span_of(l.bias), span_of(l.grad_bias), span_of(l.adam_m_bias), span_of(l.adam_v_bias), cfg, step);
  }
  zero_grad();
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

double& Mlp::parameter(std::size_t i) {
  for (auto& l : layers_) {
    const auto nw = static_cast<std::size_t>(l.weight.size());
    if (i < nw) return l.weight.data()[i];
    i -= nw;
    const auto nb = static_cast<std::size_t>(l.bias.size());
    if (i < nb) return l.bias.data()[i];
    i -= nb;
  }
  throw std::out_of_range("Mlp::parameter: index out of range");
}

double Mlp::parameter(std::size_t i) const { return const_cast<Mlp*>(this)->parameter(i); }

double Mlp::gradient(std::size_t i) const {
  for (const auto& l : layers_) {
    const auto nw = static_cast<std::size_t>(l.weight.size());
    if (i < nw) return l.grad_weight.data()[i];
    i -= nw;
    const auto nb = static_cast<std::size_t>(l.bias.size());
    if (i < nb) return l.grad_bias.data()[i];
    i -= nb;
  }
  throw std::out_of_range("Mlp::gradient: index out of range");
}

bool Mlp::all_finite() const {
  for (const auto& l : layers_)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

}  // namespace radarfield
