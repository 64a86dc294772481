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
#include "volseg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace volseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One squared-distance pass along a line: d[x] = min_q f[q] + step2*(x-q)^2.
// Lower envelope of parabolas; columns with f = +inf carry no parabola.
void dt_line(const double* f, double* d, int n, double step2, int* v,
             double* z) {
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s;
    for (;;) {
      const int p = v[k];
      s = ((f[q] + step2 * q * q) - (f[p] + step2 * p * p)) /
          (2.0 * step2 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {
      // Entire previous envelope dominated (k == 0 case).
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      k = 0;
    } else {
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = kInf;
    }
  }
  if (k < 0) {
    for (int x = 0; x < n; ++x) d[x] = kInf;
    return;
  }
  int j = 0;
  for (int x = 0; x < n; ++x) {
    while (z[j + 1] < static_cast<double>(x)) ++j;
    const double dx = static_cast<double>(x - v[j]);
    d[x] = step2 * dx * dx + f[v[j]];
  }
}

void dt_axis(Volume& sq, int axis) {
  const int nx = sq.nx(), ny = sq.ny(), nz = sq.nz();
  const int n = sq.dims[axis];
  const double step = sq.spacing[axis];
  const double step2 = step * step;

  std::vector<double> f(n), d(n);
  std::vector<int> v(n);
  std::vector<double> z(n + 1);

  auto run_line = [&](std::size_t base, std::size_t stride) {
    for (int i = 0; i < n; ++i) f[i] = sq.data[base + stride * i];
    dt_line(f.data(), d.data(), n, step2, v.data(), z.data());
    for (int i = 0; i < n; ++i) sq.data[base + stride * i] = d[i];
  };

  if (axis == 0) {
    for (int zz = 0; zz < nz; ++zz)
      for (int yy = 0; yy < ny; ++yy)
        run_line(sq.index(0, yy, zz), 1);
  } else if (axis == 1) {
    for (int zz = 0; zz < nz; ++zz)
      for (int xx = 0; xx < nx; ++xx)
        run_line(sq.index(xx, 0, zz), static_cast<std::size_t>(nx));
  } else {
    for (int yy = 0; yy < ny; ++yy)
      for (int xx = 0; xx < nx; ++xx)
        run_line(sq.index(xx, yy, 0),
                 static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  }
}

Volume squared_edt(const BinaryMask& mask) {
  const Volume& m = mask.volume();
  Volume sq = Volume::create(m.dims, m.spacing, 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    sq.data[i] = (m.data[i] == 1.0) ? 0.0 : kInf;
  }
  dt_axis(sq, 0);
  dt_axis(sq, 1);
  dt_axis(sq, 2);
  return sq;
}

BinaryMask complement(const BinaryMask& mask) {
  Volume c = mask.volume();
  for (double& x : c.data) x = (x == 1.0) ? 0.0 : 1.0;
  return BinaryMask(std::move(c));
}

}  // namespace

DistanceMap euclidean_distance_transform(const BinaryMask& mask) {
  if (mask.foreground_count() == 0) {
    throw std::invalid_argument("euclidean_distance_transform: empty mask");
  }
  Volume sq = squared_edt(mask);
  for (double& x : sq.data) x = std::sqrt(x);
  return sq;
}

Volume signed_distance_map(const BinaryMask& mask) {
  const std::size_t fg = mask.foreground_count();
  if (fg == 0 || fg == mask.volume().size()) {
    throw std::invalid_argument("signed_distance_map: mask must have both classes");
  }
  DistanceMap outside = euclidean_distance_transform(mask);
  DistanceMap inside = euclidean_distance_transform(complement(mask));
  Volume phi = outside;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    phi.data[i] = outside.data[i] - inside.data[i];
  }
  return phi;
}

std::vector<std::array<int, 3>> extract_surface(const BinaryMask& mask) {
  const Volume& m = mask.volume();
  std::vector<std::array<int, 3>> out;
  const int nx = m.nx(), ny = m.ny(), nz = m.nz();
  auto bg = [&](int x, int y, int z) {
    return !m.in_range(x, y, z) || m.at(x, y, z) == 0.0;
  };
  for (int z = 0; z < nz; ++z) {
    for (int y = 0; y < ny; ++y) {
      for (int x = 0; x < nx; ++x) {
        if (m.at(x, y, z) != 1.0) continue;
        if (bg(x - 1, y, z) || bg(x + 1, y, z) || bg(x, y - 1, z) ||
            bg(x, y + 1, z) || bg(x, y, z - 1) || bg(x, y, z + 1)) {
          out.push_back({x, y, z});
        }
      }
    }
  }
  return out;
}

double dice_score(const BinaryMask& a, const BinaryMask& b) {
  if (!a.volume().same_dims(b.volume())) {
    throw std::invalid_argument("dice_score: dims mismatch");
  }
  std::size_t ca = 0, cb = 0, inter = 0;
  const auto& da = a.volume().data;
  const auto& db = b.volume().data;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const bool fa = da[i] == 1.0;
    const bool fb = db[i] == 1.0;
    ca += fa;
    cb += fb;
    inter += (fa && fb);
  }
  if (ca + cb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(ca + cb);
}

std::pair<double, double> surface_metrics(const BinaryMask& pred,
                                          const BinaryMask& truth) {
  if (!pred.volume().same_dims(truth.volume())) {
    throw std::invalid_argument("surface_metrics: dims mismatch");
  }
  if (pred.foreground_count() == 0 || truth.foreground_count() == 0) {
    throw std::invalid_argument("surface_metrics: empty mask");
  }
  const auto sp = extract_surface(pred);
  const auto st = extract_surface(truth);

  auto surface_mask = [&](const std::vector<std::array<int, 3>>& s) {
    Volume v = Volume::create(pred.volume().dims, pred.volume().spacing, 0.0);
    for (const auto& p : s) v.at(p[0], p[1], p[2]) = 1.0;
    return BinaryMask(std::move(v));
  };
  const DistanceMap to_truth =
      euclidean_distance_transform(surface_mask(st));
  const DistanceMap to_pred = euclidean_distance_transform(surface_mask(sp));

  // The two directional sums are folded separately and combined once, so
  // swapping the arguments swaps the addends and the result is identical.
  std::vector<double> pooled;
  pooled.reserve(sp.size() + st.size());
  double sum_p2t = 0.0, sum_t2p = 0.0;
  for (const auto& p : sp) {
    const double d = to_truth.at(p[0], p[1], p[2]);
    pooled.push_back(d);
    sum_p2t += d;
  }
  for (const auto& p : st) {
    const double d = to_pred.at(p[0], p[1], p[2]);
    pooled.push_back(d);
    sum_t2p += d;
  }
  const double asd =
      (sum_p2t + sum_t2p) / static_cast<double>(pooled.size());

  std::sort(pooled.begin(), pooled.end());
  const std::size_t n = pooled.size();
  double hd95;
  if (n == 1) {
    hd95 = pooled[0];
  } else {
    const double rank = 0.95 * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    const double frac = rank - static_cast<double>(lo);
    hd95 = (lo + 1 < n) ? pooled[lo] + frac * (pooled[lo + 1] - pooled[lo])
                        : pooled[lo];
  }
  return {hd95, asd};
}

}  // namespace volseg
