#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "sgm/common.hpp"
#include "sgm/tensor.hpp"

namespace sgm::ad {

template <typename T>
struct ParamEntryT {
  TensorT<T> value;
  TensorT<T> grad;
  TensorT<T> m;  // AdamW first moment
  TensorT<T> v;  // AdamW second moment
  bool trainable = true;
};

struct AdamWConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Named parameter tensors plus AdamW state. Iteration order is name order,
/// so every traversal is deterministic.
template <typename T>
class ParamStoreT {
 public:
  ParamEntryT<T>& create(const std::string& name, TensorT<T> init, bool trainable = true) {
    require(!entries_.count(name), "param already exists: " + name);
    ParamEntryT<T> e;
    e.grad = init;
    e.grad.zero();
    e.m = e.grad;
    e.v = e.grad;
    e.value = std::move(init);
    e.trainable = trainable;
    return entries_.emplace(name, std::move(e)).first->second;
  }

  ParamEntryT<T>& at(const std::string& name) {
    auto it = entries_.find(name);
    require(it != entries_.end(), "unknown param: " + name);
    return it->second;
  }
  const ParamEntryT<T>& at(const std::string& name) const {
    auto it = entries_.find(name);
    require(it != entries_.end(), "unknown param: " + name);
    return it->second;
  }
  bool has(const std::string& name) const { return entries_.count(name) != 0; }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  size_t size() const { return entries_.size(); }

  void zero_grads() {
    for (auto& [name, e] : entries_) e.grad.zero();
  }

  /// One decoupled-weight-decay Adam step over all trainable entries.
  /// Gradients are zeroed afterwards.
  void adamw_step(const AdamWConfig& cfg) {
    ++step_;
    T bc1 = T(1) - static_cast<T>(std::pow(cfg.beta1, static_cast<double>(step_)));
    T bc2 = T(1) - static_cast<T>(std::pow(cfg.beta2, static_cast<double>(step_)));
    T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    T lr = static_cast<T>(cfg.lr), wd = static_cast<T>(cfg.weight_decay);
    T eps = static_cast<T>(cfg.eps);
    for (auto& [name, e] : entries_) {
      if (!e.trainable) continue;
      for (int i = 0; i < e.value.size(); ++i) {
        T g = e.grad.data[i];
        e.m.data[i] = b1 * e.m.data[i] + (T(1) - b1) * g;
        e.v.data[i] = b2 * e.v.data[i] + (T(1) - b2) * g * g;
        T mhat = e.m.data[i] / bc1;
        T vhat = e.v.data[i] / bc2;
        T w = e.value.data[i];
        e.value.data[i] = w - lr * (mhat / (std::sqrt(vhat) + eps) + wd * w);
      }
      e.grad.zero();
    }
  }

  int64_t step_count() const { return step_; }

 private:
  std::map<std::string, ParamEntryT<T>> entries_;
  int64_t step_ = 0;
};

using ParamStore = ParamStoreT<float>;

template <typename To, typename From>
ParamStoreT<To> store_cast(const ParamStoreT<From>& src) {
  ParamStoreT<To> dst;
  for (const auto& [name, e] : src)
    dst.create(name, tensor_cast<To>(e.value), e.trainable);
  return dst;
}

/// Binary checkpoint: magic "NSIM", u32 version=1, u32 entry count, then per
/// entry u16 name length + UTF-8 name + u8 rank + rank x u64 dims + f32
/// little-endian payload. Round trips are bit-exact.
void save_checkpoint(const ParamStore& store, const std::string& path);
void load_checkpoint(ParamStore& store, const std::string& path);

}  // namespace sgm::ad
