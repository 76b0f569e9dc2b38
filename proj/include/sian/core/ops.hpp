// Copyright 2026 The SIAN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SIAN_CORE_OPS_HPP_
#define SIAN_CORE_OPS_HPP_

#include <cmath>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "sian/core/autograd.hpp"
#include "sian/core/blas.hpp"

namespace sian {
namespace ops {

template <typename T>
inline void check_same_shape(const Var<T>& a, const Var<T>& b, const char* who) {
  check(a.value().same_shape(b.value()),
        std::string(who) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
            shape_str(b.shape()));
}

// Generic elementwise unary op. `dydx` receives (x, y) and returns the local
// derivative; it must be a pure function of its arguments.
template <typename T, typename F, typename D>
Var<T> unary(Var<T> a, F fwd, D dydx) {
  const Array<T> x = a.value();
  Array<T> y(x.shape());
  for (int64_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  return Var<T>::op(y, {a}, [a, x, y, dydx](Node<T>& self) mutable {
    if (!a.requires_grad()) return;
    a.ensure_grad();
    T* dst = a.grad().data();
    const T* g = self.grad.data();
    for (int64_t i = 0; i < x.size(); ++i) dst[i] += g[i] * dydx(x[i], y[i]);
  });
}

template <typename T>
Var<T> neg(const Var<T>& a) {
  return unary(a, [](T x) { return -x; }, [](T, T) { return T(-1); });
}

template <typename T>
Var<T> exp_(const Var<T>& a) {
  return unary(a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Var<T> square(const Var<T>& a) {
  return unary(a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}

template <typename T>
Var<T> abs_(const Var<T>& a) {
  return unary(a, [](T x) { return std::abs(x); },
               [](T x, T) { return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0)); });
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  return unary(a, [](T x) { return x > T(0) ? x : T(0); },
               [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> tanh_(const Var<T>& a) {
  return unary(a, [](T x) { return std::tanh(x); },
               [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& a, T slope) {
  return unary(a, [slope](T x) { return x > T(0) ? x : slope * x; },
               [slope](T x, T) { return x > T(0) ? T(1) : slope; });
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T s) {
  return unary(a, [s](T x) { return x + s; }, [](T, T) { return T(1); });
}

template <typename T>
Var<T> mul_scalar(const Var<T>& a, T s) {
  return unary(a, [s](T x) { return x * s; }, [s](T, T) { return s; });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  check_same_shape(a, b, "add");
  const Array<T>& xa = a.value();
  const Array<T>& xb = b.value();
  Array<T> y(xa.shape());
  for (int64_t i = 0; i < y.size(); ++i) y[i] = xa[i] + xb[i];
  return Var<T>::op(y, {a, b}, [a, b](Node<T>& self) mutable {
    a.accumulate(self.grad);
    b.accumulate(self.grad);
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  check_same_shape(a, b, "sub");
  const Array<T>& xa = a.value();
  const Array<T>& xb = b.value();
  Array<T> y(xa.shape());
  for (int64_t i = 0; i < y.size(); ++i) y[i] = xa[i] - xb[i];
  return Var<T>::op(y, {a, b}, [a, b](Node<T>& self) mutable {
    a.accumulate(self.grad);
    if (!b.requires_grad()) return;
    b.ensure_grad();
    T* dst = b.grad().data();
    const T* g = self.grad.data();
    for (int64_t i = 0; i < self.grad.size(); ++i) dst[i] -= g[i];
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  check_same_shape(a, b, "mul");
  const Array<T> xa = a.value();
  const Array<T> xb = b.value();
  Array<T> y(xa.shape());
  for (int64_t i = 0; i < y.size(); ++i) y[i] = xa[i] * xb[i];
  return Var<T>::op(y, {a, b}, [a, b, xa, xb](Node<T>& self) mutable {
    const T* g = self.grad.data();
    if (a.requires_grad()) {
      a.ensure_grad();
      T* dst = a.grad().data();
      for (int64_t i = 0; i < xa.size(); ++i) dst[i] += g[i] * xb[i];
    }
    if (b.requires_grad()) {
      b.ensure_grad();
      T* dst = b.grad().data();
      for (int64_t i = 0; i < xb.size(); ++i) dst[i] += g[i] * xa[i];
    }
  });
}

// ---------------------------------------------------------------------------
// Reductions / shaping
// ---------------------------------------------------------------------------

template <typename T>
Var<T> sum_all(Var<T> a) {
  const Array<T>& x = a.value();
  T s = 0;
  for (int64_t i = 0; i < x.size(); ++i) s += x[i];
  return Var<T>::op(Array<T>::scalar(s), {a}, [a](Node<T>& self) mutable {
    if (!a.requires_grad()) return;
    a.ensure_grad();
    const T g = self.grad[0];
    T* dst = a.grad().data();
    for (int64_t i = 0; i < a.value().size(); ++i) dst[i] += g;
  });
}

template <typename T>
Var<T> mean_all(const Var<T>& a) {
  check(a.value().size() > 0, "mean_all: empty input");
  return mul_scalar(sum_all(a), T(1) / static_cast<T>(a.value().size()));
}

template <typename T>
Var<T> reshape(Var<T> a, Shape shape) {
  Array<T> y = a.value().reshaped(std::move(shape));
  const Shape orig = a.shape();
  return Var<T>::op(y, {a}, [a, orig](Node<T>& self) mutable {
    a.accumulate(self.grad.reshaped(orig));
  });
}

// Concatenate NCHW tensors along the channel axis.
template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  check(!parts.empty(), "concat_channels: no inputs");
  const Shape& s0 = parts[0].shape();
  check(s0.size() == 4, "concat_channels: expected NCHW");
  int64_t ctotal = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    check(s.size() == 4 && s[0] == s0[0] && s[2] == s0[2] && s[3] == s0[3],
          "concat_channels: incompatible shapes");
    ctotal += s[1];
  }
  const int64_t n = s0[0], hw = s0[2] * s0[3];
  Array<T> y({n, ctotal, s0[2], s0[3]});
  int64_t coff = 0;
  for (const auto& p : parts) {
    const Array<T>& x = p.value();
    const int64_t c = x.dim(1);
    for (int64_t i = 0; i < n; ++i)
      std::memcpy(y.data() + (i * ctotal + coff) * hw, x.data() + i * c * hw,
                  sizeof(T) * static_cast<size_t>(c * hw));
    coff += c;
  }
  auto ps = parts;
  return Var<T>::op(y, parts, [ps, n, ctotal, hw](Node<T>& self) mutable {
    int64_t coff = 0;
    for (auto& p : ps) {
      const int64_t c = p.value().dim(1);
      if (p.requires_grad()) {
        p.ensure_grad();
        T* dst = p.grad().data();
        const T* g = self.grad.data();
        for (int64_t i = 0; i < n; ++i) {
          const T* gsrc = g + (i * ctotal + coff) * hw;
          T* d = dst + i * c * hw;
          for (int64_t j = 0; j < c * hw; ++j) d[j] += gsrc[j];
        }
      }
      coff += c;
    }
  });
}

// ---------------------------------------------------------------------------
// Linear layer: x [N, Din] * W^T [Din, Dout] + b
// ---------------------------------------------------------------------------

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  const Array<T>& xv = x.value();
  const Array<T>& wv = w.value();
  check(xv.ndim() == 2 && wv.ndim() == 2, "linear: expected 2-d x and w");
  const int64_t n = xv.dim(0), din = xv.dim(1), dout = wv.dim(0);
  check(wv.dim(1) == din, "linear: weight/input dim mismatch");
  Array<T> y({n, dout});
  gemm<T>(false, true, n, dout, din, T(1), xv.data(), din, wv.data(), din, T(0),
          y.data(), dout);
  if (b.defined()) {
    check(b.value().size() == dout, "linear: bias dim mismatch");
    const T* bp = b.value().data();
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < dout; ++j) y.at(i, j) += bp[j];
  }
  std::vector<Var<T>> parents = {x, w};
  if (b.defined()) parents.push_back(b);
  auto xc = x, wc = w, bc = b;
  return Var<T>::op(y, parents, [xc, wc, bc, n, din, dout](Node<T>& self) mutable {
    const T* g = self.grad.data();
    if (xc.requires_grad()) {
      xc.ensure_grad();
      gemm<T>(false, false, n, din, dout, T(1), g, dout, wc.value().data(), din,
              T(1), xc.grad().data(), din);
    }
    if (wc.requires_grad()) {
      wc.ensure_grad();
      gemm<T>(true, false, dout, din, n, T(1), g, dout, xc.value().data(), din,
              T(1), wc.grad().data(), din);
    }
    if (bc.defined() && bc.requires_grad()) {
      bc.ensure_grad();
      T* db = bc.grad().data();
      for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < dout; ++j) db[j] += g[i * dout + j];
    }
  });
}

// ---------------------------------------------------------------------------
// 2-d convolution (NCHW), im2col + GEMM, tiled over output rows to bound
// scratch memory.
// ---------------------------------------------------------------------------

namespace detail {

// Scratch capacity in elements (~32 MB for float). Mutable so tests can
// shrink it to exercise the row-tiling path on small tensors.
inline int64_t& col_budget() {
  static int64_t v = 8 * 1024 * 1024;
  return v;
}

template <typename T>
std::vector<T>& col_scratch() {
  static thread_local std::vector<T> buf;
  return buf;
}

template <typename T>
std::vector<T>& dcol_scratch() {
  static thread_local std::vector<T> buf;
  return buf;
}

// col is [Cin*kh*kw, rows*Wo] for output rows [y0, y0+rows).
template <typename T>
void im2col(const T* x, int64_t cin, int64_t h, int64_t w, int64_t kh,
            int64_t kw, int64_t stride, int64_t pad, int64_t wo, int64_t y0,
            int64_t rows, T* col) {
  const int64_t l = rows * wo;
  for (int64_t ci = 0; ci < cin; ++ci) {
    const T* xc = x + ci * h * w;
    for (int64_t ky = 0; ky < kh; ++ky) {
      for (int64_t kx = 0; kx < kw; ++kx) {
        T* dst = col + ((ci * kh + ky) * kw + kx) * l;
        for (int64_t r = 0; r < rows; ++r) {
          const int64_t iy = (y0 + r) * stride + ky - pad;
          T* drow = dst + r * wo;
          if (iy < 0 || iy >= h) {
            std::fill_n(drow, wo, T(0));
            continue;
          }
          const T* xrow = xc + iy * w;
          if (stride == 1) {
            // Valid x range: 0 <= x + kx - pad < w.
            const int64_t xlo = std::max<int64_t>(0, pad - kx);
            const int64_t xhi = std::min<int64_t>(wo, w + pad - kx);
            if (xlo > 0) std::fill_n(drow, std::min(xlo, wo), T(0));
            if (xhi > xlo)
              std::memcpy(drow + xlo, xrow + xlo + kx - pad,
                          sizeof(T) * static_cast<size_t>(xhi - xlo));
            if (xhi < wo) std::fill_n(drow + std::max<int64_t>(xhi, 0), wo - std::max<int64_t>(xhi, 0), T(0));
          } else {
            for (int64_t xo = 0; xo < wo; ++xo) {
              const int64_t ix = xo * stride + kx - pad;
              drow[xo] = (ix >= 0 && ix < w) ? xrow[ix] : T(0);
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, int64_t cin, int64_t h, int64_t w, int64_t kh,
                int64_t kw, int64_t stride, int64_t pad, int64_t wo, int64_t y0,
                int64_t rows, T* dx) {
  const int64_t l = rows * wo;
  for (int64_t ci = 0; ci < cin; ++ci) {
    T* xc = dx + ci * h * w;
    for (int64_t ky = 0; ky < kh; ++ky) {
      for (int64_t kx = 0; kx < kw; ++kx) {
        const T* src = col + ((ci * kh + ky) * kw + kx) * l;
        for (int64_t r = 0; r < rows; ++r) {
          const int64_t iy = (y0 + r) * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          const T* srow = src + r * wo;
          T* xrow = xc + iy * w;
          for (int64_t xo = 0; xo < wo; ++xo) {
            const int64_t ix = xo * stride + kx - pad;
            if (ix >= 0 && ix < w) xrow[ix] += srow[xo];
          }
        }
      }
    }
  }
}

}  // namespace detail

// x [N,Cin,H,W], w [Cout,Cin,kh,kw], optional b [Cout].
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b,
              int64_t stride, int64_t pad) {
  const Array<T>& xv = x.value();
  const Array<T>& wv = w.value();
  check(xv.ndim() == 4, "conv2d: input must be NCHW, got " + shape_str(xv.shape()));
  check(wv.ndim() == 4, "conv2d: weight must be [Cout,Cin,kh,kw]");
  const int64_t n = xv.dim(0), cin = xv.dim(1), h = xv.dim(2), wdt = xv.dim(3);
  const int64_t cout = wv.dim(0), kh = wv.dim(2), kw = wv.dim(3);
  check(wv.dim(1) == cin, "conv2d: channel mismatch: input " +
                              shape_str(xv.shape()) + " weight " +
                              shape_str(wv.shape()));
  check(stride >= 1 && pad >= 0, "conv2d: bad stride/pad");
  const int64_t ho = (h + 2 * pad - kh) / stride + 1;
  const int64_t wo = (wdt + 2 * pad - kw) / stride + 1;
  check(ho >= 1 && wo >= 1, "conv2d: output would be empty");
  const int64_t k = cin * kh * kw;

  const int64_t tile_rows = std::max<int64_t>(
      1, std::min(ho, detail::col_budget() / std::max<int64_t>(1, k * wo)));

  Array<T> y({n, cout, ho, wo});
  auto& col = detail::col_scratch<T>();
  col.resize(static_cast<size_t>(k * tile_rows * wo));
  for (int64_t i = 0; i < n; ++i) {
    const T* xi = xv.data() + i * cin * h * wdt;
    for (int64_t y0 = 0; y0 < ho; y0 += tile_rows) {
      const int64_t rows = std::min(tile_rows, ho - y0);
      detail::im2col(xi, cin, h, wdt, kh, kw, stride, pad, wo, y0, rows, col.data());
      T* out = y.data() + (i * cout * ho + y0) * wo;
      gemm<T>(false, false, cout, rows * wo, k, T(1), wv.data(), k, col.data(),
              rows * wo, T(0), out, ho * wo);
    }
  }
  if (b.defined()) {
    check(b.value().size() == cout, "conv2d: bias dim mismatch");
    const T* bp = b.value().data();
    for (int64_t i = 0; i < n; ++i)
      for (int64_t c = 0; c < cout; ++c) {
        T* yp = y.data() + (i * cout + c) * ho * wo;
        const T bc = bp[c];
        for (int64_t j = 0; j < ho * wo; ++j) yp[j] += bc;
      }
  }

  std::vector<Var<T>> parents = {x, w};
  if (b.defined()) parents.push_back(b);
  auto xc = x, wc = w, bc = b;
  return Var<T>::op(
      y, parents,
      [xc, wc, bc, n, cin, h, wdt, cout, kh, kw, stride, pad, ho, wo, k,
       tile_rows](Node<T>& self) mutable {
        const Array<T>& g = self.grad;
        const bool need_dx = xc.requires_grad();
        const bool need_dw = wc.requires_grad();
        const bool need_db = bc.defined() && bc.requires_grad();
        if (need_dx) xc.ensure_grad();
        if (need_dw) wc.ensure_grad();
        if (need_db) {
          bc.ensure_grad();
          T* db = bc.grad().data();
          for (int64_t i = 0; i < n; ++i)
            for (int64_t c = 0; c < cout; ++c) {
              const T* gp = g.data() + (i * cout + c) * ho * wo;
              T s = 0;
              for (int64_t j = 0; j < ho * wo; ++j) s += gp[j];
              db[c] += s;
            }
        }
        if (!need_dx && !need_dw) return;
        auto& col = detail::col_scratch<T>();
        auto& dcol = detail::dcol_scratch<T>();
        col.resize(static_cast<size_t>(k * tile_rows * wo));
        if (need_dx) dcol.resize(static_cast<size_t>(k * tile_rows * wo));
        for (int64_t i = 0; i < n; ++i) {
          const T* xi = xc.value().data() + i * cin * h * wdt;
          for (int64_t y0 = 0; y0 < ho; y0 += tile_rows) {
            const int64_t rows = std::min(tile_rows, ho - y0);
            const T* gtile = g.data() + (i * cout * ho + y0) * wo;
            if (need_dw) {
              detail::im2col(xi, cin, h, wdt, kh, kw, stride, pad, wo, y0, rows,
                             col.data());
              // dW += g_tile * col^T
              gemm<T>(false, true, cout, k, rows * wo, T(1), gtile, ho * wo,
                      col.data(), rows * wo, T(1), wc.grad().data(), k);
            }
            if (need_dx) {
              // dcol = W^T * g_tile, then scatter back.
              gemm<T>(true, false, k, rows * wo, cout, T(1), wc.value().data(),
                      k, gtile, ho * wo, T(0), dcol.data(), rows * wo);
              detail::col2im_add(dcol.data(), cin, h, wdt, kh, kw, stride, pad,
                                 wo, y0, rows,
                                 xc.grad().data() + i * cin * h * wdt);
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Moment normalization without learned affine: y = (x - mu) / sqrt(var + eps).
// Batch mode: statistics per channel over (N,H,W). Instance mode: per (n,c)
// over (H,W).
// ---------------------------------------------------------------------------

enum class NormMode { kBatch, kInstance };

template <typename T>
Var<T> moment_normalize(Var<T> x, T eps, NormMode mode) {
  const Array<T>& xv = x.value();
  check(xv.ndim() == 4, "moment_normalize: expected NCHW");
  const int64_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const int64_t hw = h * w;
  const int64_t groups = (mode == NormMode::kBatch) ? c : n * c;
  const int64_t m = (mode == NormMode::kBatch) ? n * hw : hw;
  check(m >= 1, "moment_normalize: empty groups");

  Array<T> y(xv.shape());
  Array<T> inv({groups});
  // Group g covers either channel g over all n (batch) or the (n,c) plane.
  auto for_group = [&](int64_t gidx, auto&& fn) {
    if (mode == NormMode::kBatch) {
      for (int64_t i = 0; i < n; ++i) fn((i * c + gidx) * hw);
    } else {
      fn(gidx * hw);
    }
  };
  for (int64_t gi = 0; gi < groups; ++gi) {
    T sum = 0, sq = 0;
    for_group(gi, [&](int64_t off) {
      const T* p = xv.data() + off;
      for (int64_t j = 0; j < hw; ++j) {
        sum += p[j];
        sq += p[j] * p[j];
      }
    });
    const T mean = sum / static_cast<T>(m);
    T var = sq / static_cast<T>(m) - mean * mean;
    if (var < T(0)) var = T(0);
    const T iv = T(1) / std::sqrt(var + eps);
    inv[gi] = iv;
    for_group(gi, [&](int64_t off) {
      const T* p = xv.data() + off;
      T* q = y.data() + off;
      for (int64_t j = 0; j < hw; ++j) q[j] = (p[j] - mean) * iv;
    });
  }

  return Var<T>::op(y, {x}, [x, y, inv, n, c, hw, m, mode](Node<T>& self) mutable {
    if (!x.requires_grad()) return;
    x.ensure_grad();
    const int64_t groups = (mode == NormMode::kBatch) ? c : n * c;
    auto for_group = [&](int64_t gidx, auto&& fn) {
      if (mode == NormMode::kBatch) {
        for (int64_t i = 0; i < n; ++i) fn((i * c + gidx) * hw);
      } else {
        fn(gidx * hw);
      }
    };
    for (int64_t gi = 0; gi < groups; ++gi) {
      T gsum = 0, gysum = 0;
      for_group(gi, [&](int64_t off) {
        const T* g = self.grad.data() + off;
        const T* yv = y.data() + off;
        for (int64_t j = 0; j < hw; ++j) {
          gsum += g[j];
          gysum += g[j] * yv[j];
        }
      });
      const T gmean = gsum / static_cast<T>(m);
      const T gymean = gysum / static_cast<T>(m);
      const T iv = inv[gi];
      for_group(gi, [&](int64_t off) {
        const T* g = self.grad.data() + off;
        const T* yv = y.data() + off;
        T* dx = x.grad().data() + off;
        for (int64_t j = 0; j < hw; ++j)
          dx[j] += iv * (g[j] - gmean - yv[j] * gymean);
      });
    }
  });
}

// ---------------------------------------------------------------------------
// Spatial resampling
// ---------------------------------------------------------------------------

template <typename T>
Var<T> upsample_nearest2x(Var<T> x) {
  const Array<T>& xv = x.value();
  check(xv.ndim() == 4, "upsample_nearest2x: expected NCHW");
  const int64_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  Array<T> y({n, c, 2 * h, 2 * w});
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const T* src = xv.data() + nc * h * w;
    T* dst = y.data() + nc * 4 * h * w;
    for (int64_t i = 0; i < h; ++i)
      for (int64_t j = 0; j < w; ++j) {
        const T v = src[i * w + j];
        T* d = dst + (2 * i) * (2 * w) + 2 * j;
        d[0] = v;
        d[1] = v;
        d[2 * w] = v;
        d[2 * w + 1] = v;
      }
  }
  return Var<T>::op(y, {x}, [x, n, c, h, w](Node<T>& self) mutable {
    if (!x.requires_grad()) return;
    x.ensure_grad();
    for (int64_t nc = 0; nc < n * c; ++nc) {
      const T* g = self.grad.data() + nc * 4 * h * w;
      T* dx = x.grad().data() + nc * h * w;
      for (int64_t i = 0; i < h; ++i)
        for (int64_t j = 0; j < w; ++j) {
          const T* gp = g + (2 * i) * (2 * w) + 2 * j;
          dx[i * w + j] += gp[0] + gp[1] + gp[2 * w] + gp[2 * w + 1];
        }
    }
  });
}

template <typename T>
Var<T> avgpool2x2(Var<T> x) {
  const Array<T>& xv = x.value();
  check(xv.ndim() == 4, "avgpool2x2: expected NCHW");
  const int64_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  check(h % 2 == 0 && w % 2 == 0, "avgpool2x2: odd spatial dims");
  const int64_t ho = h / 2, wo = w / 2;
  Array<T> y({n, c, ho, wo});
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const T* src = xv.data() + nc * h * w;
    T* dst = y.data() + nc * ho * wo;
    for (int64_t i = 0; i < ho; ++i)
      for (int64_t j = 0; j < wo; ++j) {
        const T* s = src + (2 * i) * w + 2 * j;
        dst[i * wo + j] = (s[0] + s[1] + s[w] + s[w + 1]) * T(0.25);
      }
  }
  return Var<T>::op(y, {x}, [x, n, c, ho, wo, w](Node<T>& self) mutable {
    if (!x.requires_grad()) return;
    x.ensure_grad();
    const int64_t h = 2 * ho;
    for (int64_t nc = 0; nc < n * c; ++nc) {
      const T* g = self.grad.data() + nc * ho * wo;
      T* dx = x.grad().data() + nc * h * w;
      for (int64_t i = 0; i < ho; ++i)
        for (int64_t j = 0; j < wo; ++j) {
          const T q = g[i * wo + j] * T(0.25);
          T* d = dx + (2 * i) * w + 2 * j;
          d[0] += q;
          d[1] += q;
          d[w] += q;
          d[w + 1] += q;
        }
    }
  });
}

// x [N,C,H,W] scaled per (n,c) by s [N,C].
template <typename T>
Var<T> scale_channels(Var<T> x, Var<T> s) {
  const Array<T>& xv = x.value();
  const Array<T>& sv = s.value();
  check(xv.ndim() == 4, "scale_channels: expected NCHW");
  check(sv.ndim() == 2 && sv.dim(0) == xv.dim(0) && sv.dim(1) == xv.dim(1),
        "scale_channels: scale must be [N,C]");
  const int64_t nc = xv.dim(0) * xv.dim(1), hw = xv.dim(2) * xv.dim(3);
  Array<T> y(xv.shape());
  for (int64_t i = 0; i < nc; ++i) {
    const T sc = sv[i];
    const T* src = xv.data() + i * hw;
    T* dst = y.data() + i * hw;
    for (int64_t j = 0; j < hw; ++j) dst[j] = src[j] * sc;
  }
  return Var<T>::op(y, {x, s}, [x, s, nc, hw](Node<T>& self) mutable {
    const T* g = self.grad.data();
    if (x.requires_grad()) {
      x.ensure_grad();
      const T* sv = s.value().data();
      T* dx = x.grad().data();
      for (int64_t i = 0; i < nc; ++i) {
        const T sc = sv[i];
        for (int64_t j = 0; j < hw; ++j) dx[i * hw + j] += g[i * hw + j] * sc;
      }
    }
    if (s.requires_grad()) {
      s.ensure_grad();
      const T* xv = x.value().data();
      T* ds = s.grad().data();
      for (int64_t i = 0; i < nc; ++i) {
        T acc = 0;
        for (int64_t j = 0; j < hw; ++j) acc += g[i * hw + j] * xv[i * hw + j];
        ds[i] += acc;
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Pixelwise 3-class (or C-class) softmax cross-entropy, mean over all pixels.
// labels: int32 [N,H,W] in [0, C).
// ---------------------------------------------------------------------------

template <typename T>
Var<T> softmax_cross_entropy(Var<T> logits, Array<int32_t> labels) {
  const Array<T>& lv = logits.value();
  check(lv.ndim() == 4, "softmax_cross_entropy: expected NCHW logits");
  const int64_t n = lv.dim(0), c = lv.dim(1), h = lv.dim(2), w = lv.dim(3);
  check(labels.ndim() == 3 && labels.dim(0) == n && labels.dim(1) == h &&
            labels.dim(2) == w,
        "softmax_cross_entropy: label shape mismatch");
  const int64_t hw = h * w;
  const int64_t m = n * hw;
  Array<T> probs(lv.shape());
  double loss = 0;
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t p = 0; p < hw; ++p) {
      T mx = lv[(i * c) * hw + p];
      for (int64_t k = 1; k < c; ++k)
        mx = std::max(mx, lv[(i * c + k) * hw + p]);
      T z = 0;
      for (int64_t k = 0; k < c; ++k) {
        const T e = std::exp(lv[(i * c + k) * hw + p] - mx);
        probs[(i * c + k) * hw + p] = e;
        z += e;
      }
      const int32_t lab = labels[i * hw + p];
      check(lab >= 0 && lab < c, "softmax_cross_entropy: label out of range");
      for (int64_t k = 0; k < c; ++k) probs[(i * c + k) * hw + p] /= z;
      loss -= std::log(static_cast<double>(probs[(i * c + lab) * hw + p]) + 1e-30);
    }
  }
  Array<T> out = Array<T>::scalar(static_cast<T>(loss / static_cast<double>(m)));
  return Var<T>::op(out, {logits},
                    [logits, probs, labels, n, c, hw, m](Node<T>& self) mutable {
                      if (!logits.requires_grad()) return;
                      logits.ensure_grad();
                      const T g = self.grad[0] / static_cast<T>(m);
                      T* dst = logits.grad().data();
                      for (int64_t i = 0; i < n; ++i)
                        for (int64_t p = 0; p < hw; ++p) {
                          const int32_t lab = labels[i * hw + p];
                          for (int64_t k = 0; k < c; ++k) {
                            T d = probs[(i * c + k) * hw + p];
                            if (k == lab) d -= T(1);
                            dst[(i * c + k) * hw + p] += g * d;
                          }
                        }
                    });
}

// Mean absolute difference, the workhorse of the matching losses.
template <typename T>
Var<T> mean_abs_diff(const Var<T>& a, const Var<T>& b) {
  return mean_all(abs_(sub(a, b)));
}

}  // namespace ops
}  // namespace sian

#endif  // SIAN_CORE_OPS_HPP_
