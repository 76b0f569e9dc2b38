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

// Central-difference gradient oracle. Everything runs in double so the
// truncation error of the difference quotient dominates rounding error.

#ifndef SIAN_TESTS_SUPPORT_FINITE_DIFF_HPP_
#define SIAN_TESTS_SUPPORT_FINITE_DIFF_HPP_

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sian/core/autograd.hpp"

namespace sian {
namespace testing {

// Relative error between the analytic gradient of `scalar_fn` w.r.t. `param`
// and a central finite difference, measured as max over elements of
// |a - f| / max(1e-8, |a| + |f|).
//
// `scalar_fn` must rebuild the graph from current parameter values and return
// a scalar Var. `param` must be a leaf with requires_grad = true.
inline double gradient_rel_error(
    const std::function<Var<double>()>& scalar_fn, Var<double> param,
    double h = 1e-5) {
  // Analytic pass.
  param.zero_grad();
  Var<double> out = scalar_fn();
  check(out.value().size() == 1, "gradient_rel_error: fn must return a scalar");
  out.backward();
  check(param.has_grad(), "gradient_rel_error: parameter got no gradient");
  Array<double> analytic = param.grad().clone();

  double worst = 0.0;
  Array<double>& w = param.value();
  for (int64_t i = 0; i < w.size(); ++i) {
    const double keep = w[i];
    w[i] = keep + h;
    const double fp = scalar_fn().value()[0];
    w[i] = keep - h;
    const double fm = scalar_fn().value()[0];
    w[i] = keep;
    const double fd = (fp - fm) / (2.0 * h);
    const double a = analytic[i];
    const double denom = std::max(1e-8, std::abs(a) + std::abs(fd));
    worst = std::max(worst, std::abs(a - fd) / denom);
  }
  return worst;
}

}  // namespace testing
}  // namespace sian

#endif  // SIAN_TESTS_SUPPORT_FINITE_DIFF_HPP_
