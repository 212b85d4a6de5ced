#pragma once

#include <cstddef>
#include <vector>

#include "sgm/common.hpp"

namespace sgm::ad {

/// Dense tensor of rank 0 (scalar), 1 (vector) or 2 (row-major matrix).
template <typename T>
struct TensorT {
  int rank = 0;
  int d0 = 1;  // rows (rank 2) or length (rank 1)
  int d1 = 1;  // cols (rank 2)
  std::vector<T> data;

  TensorT() : data(1, T(0)) {}

  static TensorT scalar(T v) {
    TensorT t;
    t.data[0] = v;
    return t;
  }
  static TensorT vec(int n, T fill = T(0)) {
    TensorT t;
    t.rank = 1;
    t.d0 = n;
    t.data.assign(static_cast<size_t>(n), fill);
    return t;
  }
  static TensorT mat(int rows, int cols, T fill = T(0)) {
    TensorT t;
    t.rank = 2;
    t.d0 = rows;
    t.d1 = cols;
    t.data.assign(static_cast<size_t>(rows) * cols, fill);
    return t;
  }

  int size() const { return static_cast<int>(data.size()); }
  bool same_shape(const TensorT& o) const {
    return rank == o.rank && d0 == o.d0 && d1 == o.d1;
  }

  T& at(int i) { return data[static_cast<size_t>(i)]; }
  T at(int i) const { return data[static_cast<size_t>(i)]; }
  T& at(int r, int c) { return data[static_cast<size_t>(r) * d1 + c]; }
  T at(int r, int c) const { return data[static_cast<size_t>(r) * d1 + c]; }

  void zero() { data.assign(data.size(), T(0)); }
};

template <typename To, typename From>
TensorT<To> tensor_cast(const TensorT<From>& a) {
  TensorT<To> t;
  t.rank = a.rank;
  t.d0 = a.d0;
  t.d1 = a.d1;
  t.data.resize(a.data.size());
  for (size_t i = 0; i < a.data.size(); ++i) t.data[i] = static_cast<To>(a.data[i]);
  return t;
}

using Tensor = TensorT<float>;

}  // namespace sgm::ad
