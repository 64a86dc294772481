/* Copyright 2026 The volseg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "volseg/kernels.hpp"

namespace volseg::kernels {
namespace {

void axpy_scalar(double a, const double* x, const double* y, double* out,
                 std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + y[i];
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t(3);
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  for (std::size_t i = 0; i < n4; i += 4) {
    acc0 += a[i + 0] * b[i + 0];
    acc1 += a[i + 1] * b[i + 1];
    acc2 += a[i + 2] * b[i + 2];
    acc3 += a[i + 3] * b[i + 3];
  }
  double r = (acc0 + acc1) + (acc2 + acc3);
  for (std::size_t i = n4; i < n; ++i) r += a[i] * b[i];
  return r;
}

double sum_scalar(const double* a, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t(3);
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  for (std::size_t i = 0; i < n4; i += 4) {
    acc0 += a[i + 0];
    acc1 += a[i + 1];
    acc2 += a[i + 2];
    acc3 += a[i + 3];
  }
  double r = (acc0 + acc1) + (acc2 + acc3);
  for (std::size_t i = n4; i < n; ++i) r += a[i];
  return r;
}

double sum_sq_scalar(const double* a, std::size_t n) {
  return dot_scalar(a, a, n);
}

void stencil27_scalar(const double* w, const double* const* tap, double* out,
                      std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = 0; k < 27; ++k) acc += w[k] * tap[k][i];
    out[i] = acc;
  }
}

const Ops kScalarOps = {
    "scalar", axpy_scalar, dot_scalar, sum_scalar, sum_sq_scalar,
    stencil27_scalar,
};

}  // namespace

namespace detail {
const Ops& scalar_ops() { return kScalarOps; }
}  // namespace detail

}  // namespace volseg::kernels
