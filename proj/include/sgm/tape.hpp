#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sgm/common.hpp"
#include "sgm/tensor.hpp"

namespace sgm::ad {

template <typename T>
struct ParamEntryT;

/// Reverse-mode tape over TensorT values. Nodes are appended in evaluation
/// order, so a single reverse sweep visits them in valid topological order.
/// backward() may be called repeatedly; parameter gradients accumulate.
template <typename T>
class TapeT {
 public:
  struct Var {
    int i = -1;
    bool ok() const { return i >= 0; }
  };

  Var constant(TensorT<T> v) { return push(std::move(v), nullptr, {}); }

  Var scalar(T v) { return constant(TensorT<T>::scalar(v)); }

  /// Leaf bound to a parameter; backward() adds into the entry's grad tensor.
  Var param(ParamEntryT<T>& e) {
    Var v = push(e.value, nullptr, {});
    nodes_[v.i].bound = &e;
    return v;
  }

  const TensorT<T>& val(Var v) const { return nodes_[v.i].value; }
  const TensorT<T>& grad(Var v) const { return nodes_[v.i].grad; }

  Var matvec(Var W, Var x) {
    const auto& mw = val(W);
    const auto& vx = val(x);
    require(mw.rank == 2 && vx.rank == 1 && mw.d1 == vx.d0, "matvec: shape mismatch");
    TensorT<T> y = TensorT<T>::vec(mw.d0);
    for (int r = 0; r < mw.d0; ++r) {
      T acc = T(0);
      const T* row = mw.data.data() + static_cast<size_t>(r) * mw.d1;
      for (int c = 0; c < mw.d1; ++c) acc += row[c] * vx.data[c];
      y.data[r] = acc;
    }
    return push(std::move(y), [](TapeT& t, Node& n) {
      auto& gw = t.nodes_[n.in[0]].grad;
      auto& gx = t.nodes_[n.in[1]].grad;
      const auto& w = t.nodes_[n.in[0]].value;
      const auto& x = t.nodes_[n.in[1]].value;
      for (int r = 0; r < w.d0; ++r) {
        T g = n.grad.data[r];
        if (g == T(0)) continue;
        T* gwrow = gw.data.data() + static_cast<size_t>(r) * w.d1;
        const T* wrow = w.data.data() + static_cast<size_t>(r) * w.d1;
        for (int c = 0; c < w.d1; ++c) {
          gwrow[c] += g * x.data[c];
          gx.data[c] += g * wrow[c];
        }
      }
    }, {W.i, x.i});
  }

  Var add(Var a, Var b) {
    require(val(a).same_shape(val(b)), "add: shape mismatch");
    TensorT<T> y = val(a);
    for (int i = 0; i < y.size(); ++i) y.data[i] += val(b).data[i];
    return push(std::move(y), [](TapeT& t, Node& n) {
      accumulate(t.nodes_[n.in[0]].grad, n.grad, T(1));
      accumulate(t.nodes_[n.in[1]].grad, n.grad, T(1));
    }, {a.i, b.i});
  }

  Var sub(Var a, Var b) {
    require(val(a).same_shape(val(b)), "sub: shape mismatch");
    TensorT<T> y = val(a);
    for (int i = 0; i < y.size(); ++i) y.data[i] -= val(b).data[i];
    return push(std::move(y), [](TapeT& t, Node& n) {
      accumulate(t.nodes_[n.in[0]].grad, n.grad, T(1));
      accumulate(t.nodes_[n.in[1]].grad, n.grad, T(-1));
    }, {a.i, b.i});
  }

  Var mul(Var a, Var b) {
    require(val(a).same_shape(val(b)), "mul: shape mismatch");
    TensorT<T> y = val(a);
    for (int i = 0; i < y.size(); ++i) y.data[i] *= val(b).data[i];
    return push(std::move(y), [](TapeT& t, Node& n) {
      const auto& va = t.nodes_[n.in[0]].value;
      const auto& vb = t.nodes_[n.in[1]].value;
      auto& ga = t.nodes_[n.in[0]].grad;
      auto& gb = t.nodes_[n.in[1]].grad;
      for (int i = 0; i < n.grad.size(); ++i) {
        ga.data[i] += n.grad.data[i] * vb.data[i];
        gb.data[i] += n.grad.data[i] * va.data[i];
      }
    }, {a.i, b.i});
  }

  Var scale(Var a, T c) {
    TensorT<T> y = val(a);
    for (auto& v : y.data) v *= c;
    return push(std::move(y), [c](TapeT& t, Node& n) {
      accumulate(t.nodes_[n.in[0]].grad, n.grad, c);
    }, {a.i});
  }

  /// Multiply by a rank-0 Var.
  Var scale_by(Var a, Var s) {
    require(val(s).rank == 0, "scale_by: scale must be scalar");
    T sv = val(s).data[0];
    TensorT<T> y = val(a);
    for (auto& v : y.data) v *= sv;
    return push(std::move(y), [](TapeT& t, Node& n) {
      const auto& va = t.nodes_[n.in[0]].value;
      T sv = t.nodes_[n.in[1]].value.data[0];
      auto& ga = t.nodes_[n.in[0]].grad;
      T gs = T(0);
      for (int i = 0; i < n.grad.size(); ++i) {
        ga.data[i] += n.grad.data[i] * sv;
        gs += n.grad.data[i] * va.data[i];
      }
      t.nodes_[n.in[1]].grad.data[0] += gs;
    }, {a.i, s.i});
  }

  Var concat(const std::vector<Var>& parts) {
    require(!parts.empty(), "concat: empty");
    int total = 0;
    for (Var p : parts) {
      require(val(p).rank <= 1, "concat: vectors only");
      total += val(p).size();
    }
    TensorT<T> y = TensorT<T>::vec(total);
    int off = 0;
    std::vector<int> in;
    for (Var p : parts) {
      const auto& v = val(p);
      std::copy(v.data.begin(), v.data.end(), y.data.begin() + off);
      off += v.size();
      in.push_back(p.i);
    }
    return push(std::move(y), [](TapeT& t, Node& n) {
      int off = 0;
      for (int src : n.in) {
        auto& g = t.nodes_[src].grad;
        for (int i = 0; i < g.size(); ++i) g.data[i] += n.grad.data[off + i];
        off += g.size();
      }
    }, std::move(in));
  }

  Var relu(Var a) {
    TensorT<T> y = val(a);
    for (auto& v : y.data) v = v > T(0) ? v : T(0);
    return push(std::move(y), [](TapeT& t, Node& n) {
      const auto& va = t.nodes_[n.in[0]].value;
      auto& ga = t.nodes_[n.in[0]].grad;
      for (int i = 0; i < n.grad.size(); ++i)
        if (va.data[i] > T(0)) ga.data[i] += n.grad.data[i];
    }, {a.i});
  }

  Var dot(Var a, Var b) {
    require(val(a).same_shape(val(b)) && val(a).rank == 1, "dot: shape mismatch");
    T acc = T(0);
    for (int i = 0; i < val(a).size(); ++i) acc += val(a).data[i] * val(b).data[i];
    return push(TensorT<T>::scalar(acc), [](TapeT& t, Node& n) {
      T g = n.grad.data[0];
      const auto& va = t.nodes_[n.in[0]].value;
      const auto& vb = t.nodes_[n.in[1]].value;
      auto& ga = t.nodes_[n.in[0]].grad;
      auto& gb = t.nodes_[n.in[1]].grad;
      for (int i = 0; i < va.size(); ++i) {
        ga.data[i] += g * vb.data[i];
        gb.data[i] += g * va.data[i];
      }
    }, {a.i, b.i});
  }

  Var sum(Var a) {
    T acc = T(0);
    for (T v : val(a).data) acc += v;
    return push(TensorT<T>::scalar(acc), [](TapeT& t, Node& n) {
      accumulate_broadcast(t.nodes_[n.in[0]].grad, n.grad.data[0]);
    }, {a.i});
  }

  Var l2_norm_sq(Var a) {
    T acc = T(0);
    for (T v : val(a).data) acc += v * v;
    return push(TensorT<T>::scalar(acc), [](TapeT& t, Node& n) {
      T g = n.grad.data[0];
      const auto& va = t.nodes_[n.in[0]].value;
      auto& ga = t.nodes_[n.in[0]].grad;
      for (int i = 0; i < va.size(); ++i) ga.data[i] += g * T(2) * va.data[i];
    }, {a.i});
  }

  Var l2_norm(Var a) {
    T acc = T(0);
    for (T v : val(a).data) acc += v * v;
    T nrm = std::sqrt(acc);
    return push(TensorT<T>::scalar(nrm), [](TapeT& t, Node& n) {
      T g = n.grad.data[0];
      T nrm = n.value.data[0];
      T denom = nrm > T(1e-12) ? nrm : T(1e-12);
      const auto& va = t.nodes_[n.in[0]].value;
      auto& ga = t.nodes_[n.in[0]].grad;
      for (int i = 0; i < va.size(); ++i) ga.data[i] += g * va.data[i] / denom;
    }, {a.i});
  }

  /// L2-normalize; the zero vector has no direction and is an error.
  Var normalize(Var a) {
    T acc = T(0);
    for (T v : val(a).data) acc += v * v;
    T nrm = std::sqrt(acc);
    require(nrm > T(0), "normalize: zero vector");
    TensorT<T> y = val(a);
    for (auto& v : y.data) v /= nrm;
    return push(std::move(y), [nrm](TapeT& t, Node& n) {
      const auto& yv = n.value;
      auto& ga = t.nodes_[n.in[0]].grad;
      T gy_dot_y = T(0);
      for (int i = 0; i < yv.size(); ++i) gy_dot_y += n.grad.data[i] * yv.data[i];
      for (int i = 0; i < yv.size(); ++i)
        ga.data[i] += (n.grad.data[i] - yv.data[i] * gy_dot_y) / nrm;
    }, {a.i});
  }

  /// y = x / (sum(x) + eps); turns a nonnegative mask into an attention.
  Var normalize_sum(Var a, T eps = T(1e-8)) {
    const auto& x = val(a);
    T s = eps;
    for (T v : x.data) s += v;
    TensorT<T> y = x;
    for (auto& v : y.data) v /= s;
    return push(std::move(y), [s](TapeT& t, Node& n) {
      const auto& yv = n.value;
      auto& ga = t.nodes_[n.in[0]].grad;
      T gdoty = T(0);
      for (int i = 0; i < yv.size(); ++i) gdoty += n.grad.data[i] * yv.data[i];
      for (int i = 0; i < yv.size(); ++i)
        ga.data[i] += (n.grad.data[i] - gdoty) / s;
    }, {a.i});
  }

  Var softmax(Var a) {
    require(val(a).rank == 1, "softmax: vector expected");
    TensorT<T> y = val(a);
    T mx = *std::max_element(y.data.begin(), y.data.end());
    T z = T(0);
    for (auto& v : y.data) {
      v = std::exp(v - mx);
      z += v;
    }
    for (auto& v : y.data) v /= z;
    return push(std::move(y), [](TapeT& t, Node& n) {
      const auto& yv = n.value;
      auto& ga = t.nodes_[n.in[0]].grad;
      T gdoty = T(0);
      for (int i = 0; i < yv.size(); ++i) gdoty += n.grad.data[i] * yv.data[i];
      for (int i = 0; i < yv.size(); ++i)
        ga.data[i] += yv.data[i] * (n.grad.data[i] - gdoty);
    }, {a.i});
  }

  Var log_softmax(Var a) {
    require(val(a).rank == 1, "log_softmax: vector expected");
    const auto& x = val(a);
    T mx = *std::max_element(x.data.begin(), x.data.end());
    T z = T(0);
    for (T v : x.data) z += std::exp(v - mx);
    T lz = std::log(z) + mx;
    TensorT<T> y = x;
    for (auto& v : y.data) v -= lz;
    return push(std::move(y), [](TapeT& t, Node& n) {
      auto& ga = t.nodes_[n.in[0]].grad;
      T gsum = T(0);
      for (int i = 0; i < n.grad.size(); ++i) gsum += n.grad.data[i];
      for (int i = 0; i < n.grad.size(); ++i)
        ga.data[i] += n.grad.data[i] - std::exp(n.value.data[i]) * gsum;
    }, {a.i});
  }

  Var log(Var a) {
    TensorT<T> y = val(a);
    for (auto& v : y.data) {
      require(v > T(0), "log: non-positive input");
      v = std::log(v);
    }
    return push(std::move(y), [](TapeT& t, Node& n) {
      const auto& va = t.nodes_[n.in[0]].value;
      auto& ga = t.nodes_[n.in[0]].grad;
      for (int i = 0; i < n.grad.size(); ++i) ga.data[i] += n.grad.data[i] / va.data[i];
    }, {a.i});
  }

  Var sigmoid(Var a) {
    TensorT<T> y = val(a);
    for (auto& v : y.data) v = T(1) / (T(1) + std::exp(-v));
    return push(std::move(y), [](TapeT& t, Node& n) {
      const auto& yv = n.value;
      auto& ga = t.nodes_[n.in[0]].grad;
      for (int i = 0; i < n.grad.size(); ++i)
        ga.data[i] += n.grad.data[i] * yv.data[i] * (T(1) - yv.data[i]);
    }, {a.i});
  }

  /// Clamp with pass-through gradient strictly inside [lo, hi].
  Var clamp(Var a, T lo, T hi) {
    TensorT<T> y = val(a);
    for (auto& v : y.data) v = std::min(hi, std::max(lo, v));
    return push(std::move(y), [lo, hi](TapeT& t, Node& n) {
      const auto& va = t.nodes_[n.in[0]].value;
      auto& ga = t.nodes_[n.in[0]].grad;
      for (int i = 0; i < n.grad.size(); ++i)
        if (va.data[i] > lo && va.data[i] < hi) ga.data[i] += n.grad.data[i];
    }, {a.i});
  }

  Var select(Var a, int idx) {
    require(idx >= 0 && idx < val(a).size(), "select: index out of range");
    return push(TensorT<T>::scalar(val(a).data[idx]), [idx](TapeT& t, Node& n) {
      t.nodes_[n.in[0]].grad.data[idx] += n.grad.data[0];
    }, {a.i});
  }

  Var pack(const std::vector<Var>& scalars) {
    TensorT<T> y = TensorT<T>::vec(static_cast<int>(scalars.size()));
    std::vector<int> in;
    in.reserve(scalars.size());
    for (size_t i = 0; i < scalars.size(); ++i) {
      require(val(scalars[i]).rank == 0, "pack: scalars expected");
      y.data[i] = val(scalars[i]).data[0];
      in.push_back(scalars[i].i);
    }
    return push(std::move(y), [](TapeT& t, Node& n) {
      for (size_t i = 0; i < n.in.size(); ++i)
        t.nodes_[n.in[i]].grad.data[0] += n.grad.data[i];
    }, std::move(in));
  }

  /// Max component; gradient flows to the first argmax.
  Var vmax(Var a) {
    const auto& x = val(a);
    require(x.size() > 0, "vmax: empty");
    int arg = 0;
    for (int i = 1; i < x.size(); ++i)
      if (x.data[i] > x.data[arg]) arg = i;
    return push(TensorT<T>::scalar(x.data[arg]), [arg](TapeT& t, Node& n) {
      t.nodes_[n.in[0]].grad.data[arg] += n.grad.data[0];
    }, {a.i});
  }

  /// Seeds d(loss)/d(loss)=1 and sweeps the tape in reverse. Parameter leaf
  /// gradients are flushed into their bound entries at the end of the sweep.
  void backward(Var loss) {
    require(loss.ok() && val(loss).rank == 0, "backward: scalar loss expected");
    for (auto& n : nodes_) {
      n.grad = n.value;
      n.grad.zero();
    }
    nodes_[loss.i].grad.data[0] = T(1);
    for (int i = loss.i; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.back) n.back(*this, n);
    }
    for (auto& n : nodes_) {
      if (n.bound) {
        auto& g = n.bound->grad;
        for (int i = 0; i < g.size(); ++i) g.data[i] += n.grad.data[i];
      }
    }
  }

  void clear() { nodes_.clear(); }
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    TensorT<T> value;
    TensorT<T> grad;
    std::vector<int> in;
    std::function<void(TapeT&, Node&)> back;
    ParamEntryT<T>* bound = nullptr;
  };

  Var push(TensorT<T> v, std::function<void(TapeT&, Node&)> back, std::vector<int> in) {
    Node n;
    n.value = std::move(v);
    n.in = std::move(in);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  static void accumulate(TensorT<T>& dst, const TensorT<T>& src, T c) {
    for (int i = 0; i < dst.size(); ++i) dst.data[i] += c * src.data[i];
  }
  static void accumulate_broadcast(TensorT<T>& dst, T g) {
    for (int i = 0; i < dst.size(); ++i) dst.data[i] += g;
  }

  std::vector<Node> nodes_;
};

using Tape = TapeT<float>;

}  // namespace sgm::ad
