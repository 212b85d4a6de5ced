#pragma once

#include <cmath>
#include <vector>

#include "sgm/common.hpp"
#include "sgm/tensor.hpp"

namespace sgm {

inline float dotf(const std::vector<float>& a, const std::vector<float>& b) {
  float acc = 0.0f;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline float normf(const std::vector<float>& a) { return std::sqrt(dotf(a, a)); }

inline float cosf_vec(const std::vector<float>& a, const std::vector<float>& b) {
  float na = normf(a), nb = normf(b);
  require(na > 0.0f && nb > 0.0f, "cosine: zero vector");
  return dotf(a, b) / (na * nb);
}

/// y = W x (row-major matrix times vector).
inline std::vector<float> matvecf(const ad::Tensor& w, const std::vector<float>& x) {
  require(w.rank == 2 && static_cast<int>(x.size()) == w.d1, "matvecf: shape mismatch");
  std::vector<float> y(static_cast<size_t>(w.d0), 0.0f);
  for (int r = 0; r < w.d0; ++r) {
    float acc = 0.0f;
    const float* row = w.data.data() + static_cast<size_t>(r) * w.d1;
    for (int c = 0; c < w.d1; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

/// y = W x + b.
inline std::vector<float> affinef(const ad::Tensor& w, const std::vector<float>& x,
                                  const ad::Tensor& b) {
  auto y = matvecf(w, x);
  require(b.size() == static_cast<int>(y.size()), "affinef: bias shape mismatch");
  for (size_t i = 0; i < y.size(); ++i) y[i] += b.data[i];
  return y;
}

inline std::vector<float> concatf(const std::vector<float>& a, const std::vector<float>& b) {
  std::vector<float> y;
  y.reserve(a.size() + b.size());
  y.insert(y.end(), a.begin(), a.end());
  y.insert(y.end(), b.begin(), b.end());
  return y;
}

inline std::vector<double> softmaxd(const std::vector<double>& x) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  std::vector<double> y(x.size());
  double z = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - mx);
    z += y[i];
  }
  for (auto& v : y) v /= z;
  return y;
}

/// First index of the strict maximum (ties resolve to the lowest index).
inline int argmaxd(const std::vector<double>& x) {
  int arg = 0;
  for (int i = 1; i < static_cast<int>(x.size()); ++i)
    if (x[i] > x[arg]) arg = i;
  return arg;
}

}  // namespace sgm
