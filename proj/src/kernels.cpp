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

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace volseg::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(VOLSEG_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend detect_backend() {
  if (const char* env = std::getenv("VOLSEG_BACKEND")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
    if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return Backend::Avx2;
    return Backend::Scalar;
  }
  return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

Backend& active_slot() {
  static Backend b = detect_backend();
  return b;
}

}  // namespace

const char* backend_name(Backend b) {
  return b == Backend::Avx2 ? "avx2" : "scalar";
}

bool available(Backend b) {
  if (b == Backend::Scalar) return true;
  return cpu_has_avx2();
}

Backend active_backend() { return active_slot(); }

void force_backend(Backend b) {
  if (!available(b)) {
    throw std::runtime_error(std::string("kernel backend unavailable: ") +
                             backend_name(b));
  }
  active_slot() = b;
}

const Ops& ops_for(Backend b) {
  if (!available(b)) {
    throw std::runtime_error(std::string("kernel backend unavailable: ") +
                             backend_name(b));
  }
#if defined(VOLSEG_HAVE_AVX2)
  if (b == Backend::Avx2) return detail::avx2_ops();
#endif
  return detail::scalar_ops();
}

const Ops& ops() { return ops_for(active_slot()); }

}  // namespace volseg::kernels
