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

#ifndef SIAN_CORE_BLAS_HPP_
#define SIAN_CORE_BLAS_HPP_

#include <cblas.h>

#include <cstdint>

extern "C" void openblas_set_num_threads(int);

namespace sian {

// Pin BLAS to one thread so results are bitwise reproducible regardless of
// the machine's core count. Called once at process start by every binary.
inline void use_single_thread_blas() { openblas_set_num_threads(1); }

// Row-major C = alpha * op(A) * op(B) + beta * C.
// A is M x K after op, B is K x N after op, C is M x N.
template <typename T>
inline void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
                 T alpha, const T* a, int64_t lda, const T* b, int64_t ldb,
                 T beta, T* c, int64_t ldc) {
  const CBLAS_TRANSPOSE ta = trans_a ? CblasTrans : CblasNoTrans;
  const CBLAS_TRANSPOSE tb = trans_b ? CblasTrans : CblasNoTrans;
  if constexpr (sizeof(T) == sizeof(float)) {
    cblas_sgemm(CblasRowMajor, ta, tb, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), static_cast<float>(alpha),
                reinterpret_cast<const float*>(a), static_cast<int>(lda),
                reinterpret_cast<const float*>(b), static_cast<int>(ldb),
                static_cast<float>(beta), reinterpret_cast<float*>(c),
                static_cast<int>(ldc));
  } else {
    cblas_dgemm(CblasRowMajor, ta, tb, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), static_cast<double>(alpha),
                reinterpret_cast<const double*>(a), static_cast<int>(lda),
                reinterpret_cast<const double*>(b), static_cast<int>(ldb),
                static_cast<double>(beta), reinterpret_cast<double*>(c),
                static_cast<int>(ldc));
  }
}

}  // namespace sian

#endif  // SIAN_CORE_BLAS_HPP_
