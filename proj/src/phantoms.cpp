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
#include "volseg/phantoms.hpp"

#include <cmath>
#include <stdexcept>

#include "volseg/filtering.hpp"
#include "volseg/rng.hpp"

namespace volseg {

namespace {

// Worst-case relative bulge of the blob perturbation; the three sinusoid
// amplitudes drawn below always sum to less than this.
constexpr double kMaxBlobBulge = 0.25;

// Seed stream tags. Geometry and noise are separate so that noise_sigma
// never influences the mask.
constexpr std::uint64_t kGeomStream = 0xB10B;
constexpr std::uint64_t kNoiseStream = 0x4015E;

struct BlobWobble {
  double amp[3];
  double freq[3];
  double phase[3];
};

BlobWobble draw_wobble(std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, kGeomStream));
  BlobWobble w;
  for (int i = 0; i < 3; ++i) {
    w.amp[i] = rng.next_uniform(0.02, 0.08);
    w.freq[i] = static_cast<double>(1 + rng.next_below(3));  // 1..3
    w.phase[i] = rng.next_uniform(0.0, 2.0 * 3.14159265358979323846);
  }
  return w;
}

}  // namespace

PhantomShape phantom_shape_from_string(const std::string& s) {
  if (s == "sphere") return PhantomShape::Sphere;
  if (s == "ellipsoid") return PhantomShape::Ellipsoid;
  if (s == "blob") return PhantomShape::Blob;
  throw std::invalid_argument("unknown phantom shape: " + s);
}

const char* phantom_shape_to_string(PhantomShape s) {
  switch (s) {
    case PhantomShape::Sphere: return "sphere";
    case PhantomShape::Ellipsoid: return "ellipsoid";
    case PhantomShape::Blob: return "blob";
  }
  return "?";
}

void PhantomSpec::validate() const {
  for (int d : dims) {
    if (d < 2 * kBorderMargin + 3) {
      throw std::invalid_argument("PhantomSpec: dims too small for margin");
    }
  }
  for (double r : radii) {
    if (!(r > 0.0)) throw std::invalid_argument("PhantomSpec: radii must be > 0");
  }
  if (fuzz_sigma < 0.0 || noise_sigma < 0.0) {
    throw std::invalid_argument("PhantomSpec: sigmas must be >= 0");
  }
  const double bulge = (shape == PhantomShape::Blob) ? 1.0 + kMaxBlobBulge : 1.0;
  for (int a = 0; a < 3; ++a) {
    const double reach = radii[a] * bulge;
    if (center[a] - reach < kBorderMargin ||
        center[a] + reach > static_cast<double>(dims[a] - 1 - kBorderMargin)) {
      throw std::invalid_argument("PhantomSpec: object violates border margin");
    }
  }
}

Sample generate(const PhantomSpec& spec) {
  spec.validate();

  Volume mask_vol = Volume::create(spec.dims, spec.spacing, 0.0);
  const BlobWobble wobble = (spec.shape == PhantomShape::Blob)
                                ? draw_wobble(spec.seed)
                                : BlobWobble{};

  for (int z = 0; z < spec.dims[2]; ++z) {
    for (int y = 0; y < spec.dims[1]; ++y) {
      for (int x = 0; x < spec.dims[0]; ++x) {
        const double dx = (static_cast<double>(x) - spec.center[0]) / spec.radii[0];
        const double dy = (static_cast<double>(y) - spec.center[1]) / spec.radii[1];
        const double dz = (static_cast<double>(z) - spec.center[2]) / spec.radii[2];
        const double rho = std::sqrt(dx * dx + dy * dy + dz * dz);
        double limit = 1.0;
        if (spec.shape == PhantomShape::Blob && rho > 0.0) {
          const double ux = dx / rho, uy = dy / rho, uz = dz / rho;
          limit += wobble.amp[0] * std::sin(wobble.freq[0] * 3.14159265358979323846 * ux + wobble.phase[0]) +
                   wobble.amp[1] * std::sin(wobble.freq[1] * 3.14159265358979323846 * uy + wobble.phase[1]) +
                   wobble.amp[2] * std::sin(wobble.freq[2] * 3.14159265358979323846 * uz + wobble.phase[2]);
        }
        if (rho <= limit) mask_vol.at(x, y, z) = 1.0;
      }
    }
  }

  // Image: two-level contrast map of the mask, box-blurred to approximate
  // the requested edge width (each box pass adds 2/3 to the variance),
  // then independent pseudo-Gaussian noise.
  Volume image = Volume::create(spec.dims, spec.spacing, 0.0);
  const double span = spec.contrast_fg - spec.contrast_bg;
  for (std::size_t i = 0; i < image.size(); ++i) {
    image.data[i] = spec.contrast_bg + span * mask_vol.data[i];
  }
  const int blur_passes =
      static_cast<int>(std::lround(1.5 * spec.fuzz_sigma * spec.fuzz_sigma));
  const Kernel3 box = box_kernel();
  for (int p = 0; p < blur_passes; ++p) {
    image = convolve3(image, box, PaddingMode::ZeroPad);
  }
  if (spec.noise_sigma > 0.0) {
    SplitMix64 noise(derive_seed(spec.seed, kNoiseStream));
    for (double& v : image.data) v += spec.noise_sigma * noise.next_normal();
  }

  return Sample{std::move(image), BinaryMask(std::move(mask_vol)), spec};
}

std::vector<Sample> generate_dataset(int n, const PhantomSpec& tmpl,
                                     std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_dataset: n < 1");
  tmpl.validate();

  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(n));
  constexpr int kMaxRetries = 16;

  for (int i = 0; i < n; ++i) {
    const std::uint64_t child = derive_seed(seed, static_cast<std::uint64_t>(i));
    SplitMix64 jitter(derive_seed(child, 0x7177E6));
    bool placed = false;
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
      PhantomSpec s = tmpl;
      s.seed = child;
      for (int a = 0; a < 3; ++a) {
        s.center[a] = tmpl.center[a] + jitter.next_uniform(-2.0, 2.0);
        s.radii[a] = tmpl.radii[a] * jitter.next_uniform(0.75, 1.25);
      }
      try {
        s.validate();
      } catch (const std::invalid_argument&) {
        continue;
      }
      out.push_back(generate(s));
      placed = true;
      break;
    }
    if (!placed) {
      throw std::runtime_error(
          "generate_dataset: could not place sample within margins");
    }
  }
  return out;
}

}  // namespace volseg
