// Copyright 2026 the cpmftn authors
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

#include "cpmftn/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cpmftn/rng.hpp"

namespace cpmftn {

namespace {
constexpr double kPi = std::numbers::pi;

// iterative radix-2 Cooley-Tukey, in place
void fft(std::vector<cplx>& a) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft size must be a power of two");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const cplx wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      cplx w(1.0);
      for (size_t j = 0; j < len / 2; ++j) {
        const cplx u = a[i + j];
        const cplx v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}
}  // namespace

PsdEstimate estimate_psd(const WaveformConfig& cfg, int64_t n_symbols, uint64_t seed,
                         const WelchParams& params) {
  std::vector<int> x(n_symbols);
  Rng rng(seed);
  for (auto& v : x) v = static_cast<int>(rng.uniform_int(std::max(cfg.m_cpm, 2)));
  PsdEstimate psd = estimate_psd(cfg, x, params);
  psd.seed = seed;
  return psd;
}

PsdEstimate estimate_psd(const WaveformConfig& cfg, const std::vector<int>& x,
                         const WelchParams& params) {
  cfg.validate();
  if (params.segment < 8 || (params.segment & (params.segment - 1)) != 0)
    throw std::invalid_argument("segment must be a power of two >= 8");
  if (params.overlap < 0.0 || params.overlap >= 1.0)
    throw std::invalid_argument("overlap must be in [0,1)");

  const int md = cfg.grid_per_symbol();
  const int64_t n_symbols = static_cast<int64_t>(x.size());
  const int64_t n_grid = n_symbols * md;
  if (n_grid < params.segment) throw std::invalid_argument("segment longer than signal");

  const PhaseFrame ph = modulate_phase(x, cfg, 0, 0);

  const int seg = params.segment;
  std::vector<double> win(seg, 1.0);
  if (params.hann) {
    for (int i = 0; i < seg; ++i) win[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / seg));
  }
  double win_pow = 0.0;
  for (double w : win) win_pow += w * w;

  const int64_t step = std::max<int64_t>(1, static_cast<int64_t>(seg * (1.0 - params.overlap)));
  const int64_t n_seg = (n_grid - seg) / step + 1;

  std::vector<double> acc(seg, 0.0);
  std::vector<cplx> buf(seg);
  for (int64_t s = 0; s < n_seg; ++s) {
    const int64_t off = s * step;
    for (int i = 0; i < seg; ++i)
      buf[i] = std::polar(win[i], ph.samples[off + i]);
    fft(buf);
    for (int i = 0; i < seg; ++i) acc[i] += std::norm(buf[i]);
  }

  PsdEstimate psd;
  psd.n_symbols = n_symbols;
  psd.params = params;
  psd.grid_per_symbol = md;
  psd.ts = cfg.ts;
  psd.freqs.resize(seg);
  psd.power.resize(seg);
  const double fs = static_cast<double>(md) / cfg.ts;  // grid rate, cycles per unit time
  const double df = fs / seg;
  const double scale = 1.0 / (static_cast<double>(n_seg) * win_pow * fs);
  for (int i = 0; i < seg; ++i) {
    const int src = (i + seg / 2) % seg;  // fftshift
    psd.freqs[i] = (i - seg / 2) * df * cfg.ts;  // cycles per Ts
    psd.power[i] = acc[src] * scale;
  }
  double tot = 0.0;
  for (int i = 0; i + 1 < seg; ++i) tot += 0.5 * (psd.power[i] + psd.power[i + 1]);
  psd.total_power = tot * (df * cfg.ts);
  return psd;
}

double containment_bandwidth(const PsdEstimate& psd, double fraction) {
  if (fraction <= 0.0 || fraction >= 1.0) throw std::invalid_argument("fraction must be in (0,1)");
  const size_t n = psd.power.size();
  double total = 0.0;
  for (double p : psd.power) total += p;
  if (total <= 0.0) throw std::invalid_argument("degenerate PSD (all zero)");

  std::vector<double> csum(n + 1, 0.0);
  for (size_t i = 0; i < n; ++i) csum[i + 1] = csum[i] + psd.power[i];
  const double target = fraction * total;

  size_t best = n;
  size_t j = 0;
  for (size_t i = 0; i < n; ++i) {
    if (j < i) j = i;
    while (j < n && csum[j + 1] - csum[i] < target) ++j;
    if (j >= n) break;
    best = std::min(best, j + 1 - i);
  }
  const double df = psd.freqs[1] - psd.freqs[0];
  return static_cast<double>(best) * df / psd.ts;  // freqs are Ts-normalized
}

double snr_to_noise_density(double snr_db, double es, double ts, double b90) {
  return es / (ts * b90 * std::pow(10.0, snr_db / 10.0));
}

double noise_density_to_snr(double n0, double es, double ts, double b90) {
  return 10.0 * std::log10(es / (n0 * ts * b90));
}

BandwidthReport bandwidth_report(const std::string& name, const WaveformConfig& cfg,
                                 int64_t n_symbols, uint64_t seed, const WelchParams& params) {
  const PsdEstimate psd = estimate_psd(cfg, n_symbols, seed, params);
  BandwidthReport rep;
  rep.name = name;
  rep.t_cpm_over_ts = cfg.t_cpm / cfg.ts;
  rep.m_ovr = cfg.m;
  rep.b90_ts = containment_bandwidth(psd, 0.90) * cfg.ts;
  rep.b95_ts = containment_bandwidth(psd, 0.95) * cfg.ts;
  const double bits = std::log2(static_cast<double>(cfg.m_cpm));
  rep.eff90 = bits / rep.b90_ts;
  rep.eff95 = bits / rep.b95_ts;
  rep.osr_eff = cfg.m / rep.b90_ts;
  rep.n_symbols = n_symbols;
  rep.seed = seed;
  return rep;
}

}  // namespace cpmftn
