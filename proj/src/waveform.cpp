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

#include "cpmftn/waveform.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cpmftn {

namespace {
constexpr double kPi = std::numbers::pi;

bool on_grid(double t, double dt) {
  const double q = t / dt;
  return std::abs(q - std::llround(q)) < 1e-9;
}
}  // namespace

int WaveformConfig::l_cpm() const {
  return static_cast<int>(std::ceil(t_cpm / ts - 1e-12));
}

void WaveformConfig::validate() const {
  if (m_cpm < 2 || m_cpm % 2 != 0) throw std::invalid_argument("m_cpm must be even and >= 2");
  if (k_num <= 0 || p_den <= 0) throw std::invalid_argument("K and P must be positive");
  if (std::gcd(k_num, p_den) != 1) throw std::invalid_argument("K and P must be relative prime");
  if (ts <= 0) throw std::invalid_argument("ts must be positive");
  if (t_cpm <= 0) throw std::invalid_argument("t_cpm must be positive");
  if (m < 1) throw std::invalid_argument("oversampling factor m must be >= 1");
  if (d < 1) throw std::invalid_argument("grid multiplier d must be >= 1");
  if (es <= 0) throw std::invalid_argument("es must be positive");
  if (!on_grid(t_cpm, grid_dt()))
    throw std::invalid_argument("t_cpm must be an integer multiple of ts/(m*d)");
  if (l_cpm() < 1) throw std::invalid_argument("l_cpm must be >= 1");
}

double phase_response(double tau, double t_cpm) {
  if (tau <= 0.0) return 0.0;
  if (tau > t_cpm) return 0.5;
  return tau / (2.0 * t_cpm);
}

double tilt_frequency(const WaveformConfig& cfg) {
  return cfg.h() * (cfg.m_cpm - 1) / (2.0 * cfg.ts) + cfg.n_if / cfg.ts;
}

std::vector<double> tilted_phase_symbol(const TiltedState& state, const WaveformConfig& cfg,
                                        int64_t symbol_index) {
  const int l = cfg.l_cpm();
  if (static_cast<int>(state.recent.size()) != l)
    throw std::invalid_argument("state.recent length must equal l_cpm");
  const int md = cfg.grid_per_symbol();
  const double dt = cfg.grid_dt();
  std::vector<double> psi(md);
  const double base = 2.0 * kPi * state.beta / cfg.p_den + cfg.phi0 +
                      2.0 * kPi * cfg.n_if * static_cast<double>(symbol_index);
  // midpoint grid: sample i covers tau = (i + 1/2) dt, so that the decimation
  // windows of the receive chain are exactly symmetric about their instants
  for (int i = 0; i < md; ++i) {
    const double tau = (i + 0.5) * dt;
    double v = base;
    for (int j = 0; j < l; ++j) {
      // x_{k-j} is recent[l-1-j] (recent is oldest first)
      const int x = state.recent[l - 1 - j];
      v += 2.0 * kPi * cfg.h() * (2 * x - cfg.m_cpm + 1) * phase_response(tau + j * cfg.ts, cfg.t_cpm);
    }
    v += kPi * cfg.h() * (cfg.m_cpm - 1) * (tau / cfg.ts + l - 1);
    v += 2.0 * kPi * cfg.n_if * tau / cfg.ts;
    psi[i] = v;
  }
  return psi;
}

TiltedState state_transition(const TiltedState& state, int x_next, const WaveformConfig& cfg) {
  if (x_next < 0 || x_next >= cfg.m_cpm) throw std::invalid_argument("symbol out of alphabet");
  TiltedState out;
  const int oldest = state.recent.front();
  out.beta = static_cast<int>((state.beta + static_cast<int64_t>(cfg.k_num) * oldest) % cfg.p_den);
  out.recent.assign(state.recent.begin() + 1, state.recent.end());
  out.recent.push_back(x_next);
  return out;
}

PhaseFrame modulate_phase(const std::vector<int>& x, const WaveformConfig& cfg,
                          int n_pre, int n_tail) {
  if (x.empty() && n_pre == 0 && n_tail == 0) throw std::invalid_argument("empty symbol sequence");
  const int l = cfg.l_cpm();
  const int md = cfg.grid_per_symbol();
  const int64_t n_total = static_cast<int64_t>(n_pre) + static_cast<int64_t>(x.size()) + n_tail;
  PhaseFrame frame;
  frame.n_symbols = static_cast<int>(n_total);
  frame.grid_dt = cfg.grid_dt();
  frame.samples.resize(n_total * md);

  TiltedState st;
  st.beta = 0;
  st.recent.assign(l, 0);
  // Phase is kept unwrapped: beta wraps (mod P) are compensated with a 2 pi
  // offset so adjacent samples never jump.
  double unwrap = 0.0;
  for (int64_t idx = 0; idx < n_total; ++idx) {
    const int64_t k = idx - n_pre;  // symbol index; negative during pre-extension
    int xk = 0;
    if (k >= 0 && k < static_cast<int64_t>(x.size())) {
      xk = x[k];
      if (xk < 0 || xk >= cfg.m_cpm) throw std::invalid_argument("symbol out of alphabet");
    }
    const int64_t raw = st.beta + static_cast<int64_t>(cfg.k_num) * st.recent.front();
    if (idx > 0) unwrap += 2.0 * kPi * static_cast<double>(raw / cfg.p_den);
    st = state_transition(st, xk, cfg);
    // All-zero pre-extension leaves beta at 0, so starting the recursion at
    // idx=0 reproduces the documented initial state at k=0.
    const std::vector<double> seg = tilted_phase_symbol(st, cfg, k);
    for (int i = 0; i < md; ++i) frame.samples[idx * md + i] = seg[i] + unwrap;
  }
  return frame;
}

std::vector<cplx> modulate(const std::vector<int>& x, const WaveformConfig& cfg,
                           int n_pre, int n_tail) {
  const PhaseFrame ph = modulate_phase(x, cfg, n_pre, n_tail);
  const double amp = std::sqrt(cfg.es / cfg.ts);
  std::vector<cplx> s(ph.samples.size());
  for (size_t i = 0; i < s.size(); ++i) s[i] = std::polar(amp, ph.samples[i]);
  return s;
}

std::vector<int> ftn_recode(int64_t x_prime, int ratio, int m_cpm) {
  if (ratio < 1) throw std::invalid_argument("ratio must be >= 1");
  int64_t range = 1;
  for (int i = 0; i < ratio; ++i) range *= m_cpm;
  if (x_prime < 0 || x_prime >= range) throw std::invalid_argument("symbol out of range");
  std::vector<int> digits(ratio);
  for (int i = ratio - 1; i >= 0; --i) {
    digits[i] = static_cast<int>(x_prime % m_cpm);
    x_prime /= m_cpm;
  }
  return digits;
}

int64_t ftn_reassemble(const std::vector<int>& digits, int m_cpm) {
  int64_t v = 0;
  for (int dgt : digits) {
    if (dgt < 0 || dgt >= m_cpm) throw std::invalid_argument("digit out of range");
    v = v * m_cpm + dgt;
  }
  return v;
}

double carson_bandwidth(double h, int m_cpm, double ts, double t_cpm) {
  return h * std::sqrt((static_cast<double>(m_cpm) * m_cpm - 1.0) / (3.0 * ts * t_cpm)) + 1.0 / t_cpm;
}

double relative_carson_ratio(double h, int m_cpm, double t_cpm_over_ts, int ratio) {
  const double num =
      ratio * (h * std::sqrt((static_cast<double>(m_cpm) * m_cpm - 1.0) / (3.0 * t_cpm_over_ts)) +
               1.0 / t_cpm_over_ts);
  const double m_ref = std::pow(static_cast<double>(m_cpm), ratio);
  const double den = 1.0 + std::sqrt((m_ref * m_ref - 1.0) / 3.0) / m_ref;
  return num / den;
}

}  // namespace cpmftn
