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

#include "cpmftn/front_end.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cpmftn/rng.hpp"

namespace cpmftn {

namespace {
constexpr double kPi = std::numbers::pi;

int ceil_div(int a, int b) { return (a + b - 1) / b; }

void finish_chain(ReceiveChain& chain, const WaveformConfig& cfg, double n0, int eta) {
  const int md = cfg.grid_per_symbol();
  chain.m = cfg.m;
  chain.d = cfg.d;
  chain.eta = eta;
  chain.n_g = static_cast<int>(chain.taps.size());
  chain.n0 = n0;
  chain.sigma_n2_grid = n0 / cfg.grid_dt();
  chain.m0 = chain.n_g / (2 * cfg.d) + 1;
  chain.end_shift = (chain.n_g + 1) / 2;
  // memory in symbols: how far the earliest window sample of block k reaches back
  const int back = (chain.m0 - 1) * cfg.d + (chain.n_g - chain.end_shift);
  chain.l_g = ceil_div(std::max(back, 0), md);

  // Toeplitz operator over an (eta+1)-symbol output window; row r covers the
  // l_g*MD inputs starting at r, first row [g^T, 0...] with g time-reversed.
  const int rows = md * (eta + 1);
  const int cols = md * (chain.l_g + eta + 1);
  const int lgmd = std::max(chain.l_g * md, chain.n_g);
  chain.g_op = Eigen::MatrixXcd::Zero(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < lgmd; ++j) {
      const int q = lgmd - 1 - j;  // tap index: g^T[j] = g((lgmd - j) dt)
      const int c = r + j;
      if (q < chain.n_g && c < cols) chain.g_op(r, c) = chain.taps[q];
    }
  }
  // The pick for output block j (relative to the window start), sample m,
  // lands on row j*MD + (m - m0)*D + end_shift - pad, where pad accounts for
  // taps shorter than the l_g*MD span of g^T.
  const int pad = lgmd - chain.l_g * md;
  const int drows = cfg.m * (eta + 1);
  chain.d_op = Eigen::MatrixXd::Zero(drows, rows);
  for (int j = 0; j <= eta; ++j) {
    for (int mi = 1; mi <= cfg.m; ++mi) {
      const int row = j * cfg.m + (mi - 1);
      const int src = j * md + (mi - chain.m0) * cfg.d + chain.end_shift - pad;
      if (src < 0 || src >= rows) throw std::logic_error("decimation pick outside window");
      chain.d_op(row, src) = 1.0;
    }
  }
  const Eigen::MatrixXcd dg = chain.d_op * chain.g_op;
  chain.r_cov = chain.sigma_n2_grid * (dg * dg.adjoint());
}
}  // namespace

int ReceiveChain::min_pre_symbols() const {
  // pick_index(0, 1, n_pre) - (n_g - 1) >= 0
  const int md = m * d;
  const int first = (1 - m0) * d + end_shift - 1 - (n_g - 1);
  return first >= 0 ? 0 : ceil_div(-first, md);
}

ReceiveChain build_rx_filter(const WaveformConfig& cfg, double t_g, double n0, int eta) {
  cfg.validate();
  if (t_g <= 0) throw std::invalid_argument("t_g must be positive");
  const double dt = cfg.grid_dt();
  const double q = t_g / dt;
  if (std::abs(q - std::llround(q)) > 1e-9)
    throw std::invalid_argument("t_g must be an integer multiple of ts/(m*d)");
  const int n_g = static_cast<int>(std::llround(q));
  if (n_g % 2 != 0)
    throw std::invalid_argument("t_g must span an even number of grid samples");

  const double df = tilt_frequency(cfg);
  ReceiveChain chain;
  chain.t_g = t_g;
  chain.taps.resize(n_g);
  const double amp = std::sqrt(1.0 / t_g) * dt;
  for (int i = 0; i < n_g; ++i) {
    const double t = (i + 0.5) * dt;  // midpoint grid, matching the signal
    chain.taps[i] = std::polar(amp, 2.0 * kPi * df * (t - t_g / 2.0));
  }
  finish_chain(chain, cfg, n0, eta);
  return chain;
}

ReceiveChain build_chain_from_taps(const WaveformConfig& cfg, const std::vector<cplx>& taps,
                                   double n0, int eta) {
  cfg.validate();
  if (taps.empty()) throw std::invalid_argument("taps must be non-empty");
  ReceiveChain chain;
  chain.taps = taps;
  chain.t_g = static_cast<double>(taps.size()) * cfg.grid_dt();
  finish_chain(chain, cfg, n0, eta);
  return chain;
}

std::vector<cplx> apply_chain(const ReceiveChain& chain, const std::vector<cplx>& s,
                              const std::vector<cplx>& noise, int n_pre, int64_t n_blocks) {
  if (s.size() != noise.size()) throw std::invalid_argument("signal/noise length mismatch");
  const int md = chain.m * chain.d;
  const int64_t n_grid = static_cast<int64_t>(s.size());
  if (n_grid < static_cast<int64_t>(n_pre + n_blocks) * md)
    throw std::invalid_argument("input shorter than requested blocks");

  std::vector<cplx> out;
  out.reserve(n_blocks * chain.m);
  for (int64_t k = 0; k < n_blocks; ++k) {
    for (int mi = 1; mi <= chain.m; ++mi) {
      const int64_t end = chain.pick_index(k, mi, n_pre);
      if (end - (chain.n_g - 1) < 0 || end >= n_grid)
        throw std::invalid_argument("pick window outside frame; increase padding");
      cplx acc = 0.0;
      for (int q = 0; q < chain.n_g; ++q) {
        const int64_t idx = end - q;
        acc += chain.taps[q] * (s[idx] + noise[idx]);
      }
      out.push_back(acc);
    }
  }
  return out;
}

QuantizedFrame quantize_1bit(const std::vector<cplx>& z, int m_ovr) {
  QuantizedFrame frame;
  frame.m_ovr = m_ovr;
  frame.n_symbols = static_cast<int>(z.size() / m_ovr);
  frame.y.resize(z.size());
  for (size_t i = 0; i < z.size(); ++i) {
    const double re = z[i].real() < 0.0 ? -1.0 : 1.0;  // sign(0) = +1
    const double im = z[i].imag() < 0.0 ? -1.0 : 1.0;
    frame.y[i] = cplx(re, im);
  }
  return frame;
}

QuantizedFrame simulate_link(const std::vector<int>& x, const WaveformConfig& cfg,
                             const ReceiveChain& chain, double n0, uint64_t seed,
                             int n_tail) {
  if (x.empty()) throw std::invalid_argument("empty symbol sequence");
  if (n_tail < 0) n_tail = cfg.l_cpm() + chain.l_g + chain.eta;
  const int n_pre = std::max(chain.min_pre_symbols(), chain.l_g + 1);
  const int64_t n_blocks = static_cast<int64_t>(x.size()) + n_tail;

  std::vector<cplx> s = modulate(x, cfg, n_pre, n_tail);
  std::vector<cplx> noise(s.size());
  Rng rng(seed);
  const double sigma_c = std::sqrt(n0 / cfg.grid_dt() / 2.0);
  for (auto& n : noise) n = cplx(sigma_c * rng.normal(), sigma_c * rng.normal());

  const std::vector<cplx> z = apply_chain(chain, s, noise, n_pre, n_blocks);
  return quantize_1bit(z, chain.m);
}

}  // namespace cpmftn
