// Copyright 2026 The dictg2p Authors
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

#pragma once

// Straight-line reference of the full S2PA forward, written with plain loops
// and no shared code with the implementation under test. Inputs and outputs
// are raw vectors.

#include <cmath>
#include <vector>

namespace dictg2p::testing {

struct S2paReferenceResult {
  std::vector<double> raw;      // R
  std::vector<double> norm;     // R
  std::vector<double> s_prime;  // d
  std::vector<double> w;        // m
  std::vector<double> sampled;  // m
  std::vector<double> p_prime;  // d
};

// keys: R x d (row-major), groups: row -> pronunciation index (size R),
// pron_emb: m x d (row-major), noise: m Gumbel draws (empty = zeros).
inline S2paReferenceResult s2pa_reference(
    const std::vector<double>& z, const std::vector<std::vector<double>>& keys,
    const std::vector<int>& groups, int m,
    const std::vector<std::vector<double>>& pron_emb, double scale, double tau,
    const std::vector<double>& noise) {
  const int R = static_cast<int>(keys.size());
  const int d = static_cast<int>(z.size());
  S2paReferenceResult out;

  out.raw.resize(R);
  for (int r = 0; r < R; ++r) {
    double dot = 0;
    for (int c = 0; c < d; ++c) dot += keys[r][c] * z[c];
    out.raw[r] = dot / scale;
  }

  double mx = out.raw[0];
  for (int r = 1; r < R; ++r) mx = std::max(mx, out.raw[r]);
  double sum = 0;
  out.norm.resize(R);
  for (int r = 0; r < R; ++r) {
    out.norm[r] = std::exp(out.raw[r] - mx);
    sum += out.norm[r];
  }
  for (int r = 0; r < R; ++r) out.norm[r] /= sum;

  out.s_prime.assign(d, 0.0);
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < d; ++c) out.s_prime[c] += out.norm[r] * keys[r][c];
  }

  out.w.assign(m, 0.0);
  for (int r = 0; r < R; ++r) out.w[groups[r]] += out.norm[r];

  out.sampled.resize(m);
  double smx = -1e300;
  for (int j = 0; j < m; ++j) {
    const double wj = out.w[j] < 1e-10 ? 1e-10 : out.w[j];
    const double g = noise.empty() ? 0.0 : noise[j];
    out.sampled[j] = (std::log(wj) + g) / tau;
    smx = std::max(smx, out.sampled[j]);
  }
  double ssum = 0;
  for (int j = 0; j < m; ++j) {
    out.sampled[j] = std::exp(out.sampled[j] - smx);
    ssum += out.sampled[j];
  }
  for (int j = 0; j < m; ++j) out.sampled[j] /= ssum;

  out.p_prime.assign(d, 0.0);
  for (int j = 0; j < m; ++j) {
    for (int c = 0; c < d; ++c) out.p_prime[c] += out.sampled[j] * pron_emb[j][c];
  }
  return out;
}

}  // namespace dictg2p::testing
