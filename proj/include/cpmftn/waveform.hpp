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

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace cpmftn {

using cplx = std::complex<double>;

/// All CPM/FTN waveform parameters. The modulation index is h = k_num/p_den;
/// the high-rate simulation grid has m*d samples per symbol.
struct WaveformConfig {
  int m_cpm = 2;        ///< modulation order (even)
  int k_num = 1;        ///< modulation index numerator K
  int p_den = 4;        ///< modulation index denominator P (gcd(K,P)=1)
  double ts = 1.0;      ///< symbol duration
  double t_cpm = 1.0;   ///< frequency-pulse duration
  double phi0 = 0.0;    ///< phase offset at t=0
  double n_if = 0.0;    ///< low-IF index, cycles per symbol
  int m = 1;            ///< receiver oversampling factor (samples kept per symbol)
  int d = 16;           ///< grid multiplier (m*d grid samples per symbol)
  double es = 1.0;      ///< symbol energy

  double h() const { return static_cast<double>(k_num) / p_den; }
  int grid_per_symbol() const { return m * d; }
  double grid_dt() const { return ts / grid_per_symbol(); }
  int l_cpm() const;

  /// Throws std::invalid_argument naming the violated invariant.
  void validate() const;
};

/// CPM phase-state machine in the tilted representation: absolute phase
/// index beta in [0,P) plus the last L_cpm input symbols.
struct TiltedState {
  int beta = 0;
  std::vector<int> recent;  ///< oldest first, length L_cpm
};

/// Tilted phase samples on the high-rate grid, m*d per symbol, radians.
/// Phase is kept unwrapped (accumulated); sample i sits at tau = (i+1/2)*grid_dt.
struct PhaseFrame {
  std::vector<double> samples;
  int n_symbols = 0;
  double grid_dt = 0.0;
};

/// Integral of the rectangular frequency pulse: 0 for tau<=0, 1/2 beyond
/// t_cpm, linear ramp tau/(2 t_cpm) in between.
double phase_response(double tau, double t_cpm);

/// Total frequency offset of the tilted low-IF representation,
/// h(M_cpm-1)/(2 Ts) + n_IF/Ts.
double tilt_frequency(const WaveformConfig& cfg);

/// Tilted phase over one symbol interval for the given state; m*d samples.
/// The state's newest `recent` entry is the symbol being transmitted.
/// `symbol_index` supplies the absolute-time part of the low-IF ramp.
std::vector<double> tilted_phase_symbol(const TiltedState& state, const WaveformConfig& cfg,
                                        int64_t symbol_index = 0);

/// Advances the state by one symbol, absorbing the oldest recent symbol
/// into beta' = (beta + K * x_old) mod P.
TiltedState state_transition(const TiltedState& state, int x_next, const WaveformConfig& cfg);

/// Complex baseband transmit samples sqrt(Es/Ts) e^{j psi} for a symbol
/// sequence, starting from beta=0 with an all-zero history.
/// `n_pre`/`n_tail` extend the frame with zero symbols (the pre-extension
/// continues the waveform backwards in time; used for receiver warm-up).
std::vector<cplx> modulate(const std::vector<int>& x, const WaveformConfig& cfg,
                           int n_pre = 0, int n_tail = 0);

/// Phase-only variant of modulate() (unwrapped radians on the grid).
PhaseFrame modulate_phase(const std::vector<int>& x, const WaveformConfig& cfg,
                          int n_pre = 0, int n_tail = 0);

/// Base-M_cpm digit expansion of an M_cpm^ratio-ary symbol, MSB first.
std::vector<int> ftn_recode(int64_t x_prime, int ratio, int m_cpm);

/// Inverse of ftn_recode.
int64_t ftn_reassemble(const std::vector<int>& digits, int m_cpm);

/// Carson bandwidth for CPM with i.u.d. input and rectangular pulse:
/// B_c = h sqrt((M_cpm^2-1)/(3 Ts T_cpm)) + 1/T_cpm.
double carson_bandwidth(double h, int m_cpm, double ts, double t_cpm);

/// Carson-bandwidth ratio between an FTN-CPM signal and its reference CPFSK
/// (h' = 1/M_cpm', M_cpm' = M_cpm^ratio, T_cpm' = Ts' = ratio * Ts).
double relative_carson_ratio(double h, int m_cpm, double t_cpm_over_ts, int ratio);

}  // namespace cpmftn
