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
#pragma once

#include <cstddef>

namespace volseg::kernels {

/// Low-level array kernels behind the volume math. Every operation exists
/// as a scalar reference implementation and, on x86-64, an AVX2 variant.
/// The two backends are bit-for-bit equivalent; which one runs is chosen
/// at startup from CPUID and can be overridden with force_backend() or the
/// VOLSEG_BACKEND environment variable ("scalar" / "avx2").
///
/// Ordering contract shared by all backends:
///  - reductions (dot, sum, sum_sq) keep four stride-4 partial accumulators
///    over the length-rounded prefix, combine them as
///    (acc0 + acc1) + (acc2 + acc3), then fold the remaining tail elements
///    in sequentially;
///  - stencil27 accumulates the 27 taps in ascending tap index for each
///    output element;
///  - elementwise ops have no ordering freedom.
/// Nothing here may be compiled with FMA contraction.
struct Ops {
  const char* name;
  /// out[i] = a * x[i] + y[i]. out may alias x or y.
  void (*axpy)(double a, const double* x, const double* y, double* out,
               std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*sum_sq)(const double* a, std::size_t n);
  /// out[i] = sum_k w[k] * tap[k][i] for k in [0,27). out must not alias
  /// any tap row.
  void (*stencil27)(const double* w, const double* const* tap, double* out,
                    std::size_t n);
};

enum class Backend { Scalar, Avx2 };

const char* backend_name(Backend b);
bool available(Backend b);
Backend active_backend();
/// Throws std::runtime_error if the backend is not available on this host.
void force_backend(Backend b);

/// Dispatch table of the active backend.
const Ops& ops();
/// Dispatch table of a specific backend (throws if unavailable).
const Ops& ops_for(Backend b);

namespace detail {
const Ops& scalar_ops();
#if defined(VOLSEG_HAVE_AVX2)
const Ops& avx2_ops();
#endif
}  // namespace detail

}  // namespace volseg::kernels
