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

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "cpmftn/waveform.hpp"

namespace cpmftn {

/// Discrete-time receive chain: bandpass filter taps on the high-rate grid
/// (scaled by grid_dt so filtering approximates the continuous convolution),
/// Toeplitz filter operator G, decimation operator D and the resulting
/// complex noise covariance R.
///
/// Decimated output (k,m), m=1..M, is the sliding-convolution output whose
/// integration window is centered on the sampling instant
///     t_{k,m} = (k + (m - m0)/M) * Ts,   m0 = ceil(n_g/(2 D)),
/// i.e. a comb anchored so one instant per symbol falls on the symbol
/// boundary. This keeps every window inside the signal span determined by
/// the trellis branch (state history + current symbol) while sampling the
/// constellation at the phase states the waveform design places there.
struct ReceiveChain {
  std::vector<cplx> taps;   ///< g((q+1/2) dt) * dt, q = 0..n_g-1
  double t_g = 0.0;         ///< filter length in time
  int l_g = 0;              ///< filter memory in symbols
  int eta = 0;              ///< window length parameter (symbols beyond current)
  int m = 1;                ///< oversampling factor (copied from config)
  int d = 1;                ///< grid multiplier
  int n_g = 0;              ///< taps count
  int m0 = 1;               ///< sampling-comb anchor
  int end_shift = 0;        ///< conv end-index shift: (n_g+1)/2 rounded up
  double sigma_n2_grid = 0; ///< complex noise variance per grid sample (N0/grid_dt)
  double n0 = 0.0;

  Eigen::MatrixXcd g_op;    ///< Toeplitz filter operator, MD(eta+1) x MD(l_g+eta+1)
  Eigen::MatrixXd d_op;     ///< decimation operator, M(eta+1) x MD(eta+1)
  Eigen::MatrixXcd r_cov;   ///< noise covariance sigma^2 D G G^H D^T, M(eta+1) square

  /// 0-based conv-output index (into a frame grid starting at symbol
  /// -n_pre) of decimated sample (k,m).
  int64_t pick_index(int64_t k, int m_idx, int n_pre) const {
    return (k + n_pre) * static_cast<int64_t>(m) * d + static_cast<int64_t>(m_idx - m0) * d +
           end_shift - 1;
  }
  /// Symbols of pre-extension needed so every pick of block 0 is computable.
  int min_pre_symbols() const;
};

/// One-bit quantized receiver outputs, Re/Im in {-1,+1}, M per symbol.
struct QuantizedFrame {
  std::vector<cplx> y;  ///< sample (k,m) at y[k*m_ovr + (m-1)]
  int n_symbols = 0;
  int m_ovr = 1;

  cplx at(int64_t k, int m_idx) const { return y[k * m_ovr + (m_idx - 1)]; }
};

/// Builds the bandpass receive chain for filter length t_g:
/// g(t) = sqrt(1/t_g) rect((t - t_g/2)/t_g) e^{j 2 pi dF (t - t_g/2)}.
/// R is calibrated so that for t_g = Ts, M = 1 the post-filter noise
/// variance equals n0 (grid noise variance n0/grid_dt).
ReceiveChain build_rx_filter(const WaveformConfig& cfg, double t_g, double n0, int eta = 0);

/// Chain with caller-supplied taps (tests, degenerate identity chains).
ReceiveChain build_chain_from_taps(const WaveformConfig& cfg, const std::vector<cplx>& taps,
                                   double n0, int eta = 0);

/// Full-frame streaming filter + decimation: s and noise cover
/// (n_pre + n_blocks) symbols of grid samples; returns n_blocks*M picks.
std::vector<cplx> apply_chain(const ReceiveChain& chain, const std::vector<cplx>& s,
                              const std::vector<cplx>& noise, int n_pre, int64_t n_blocks);

/// Element-wise 1-bit quantization, sign(0) = +1.
QuantizedFrame quantize_1bit(const std::vector<cplx>& z, int m_ovr);

/// modulate -> AWGN on the high-rate grid -> filter -> decimate -> quantize.
/// The frame is extended with `n_tail` zero symbols (default l_cpm + l_g + eta)
/// whose observation blocks are included, terminating the trellis.
QuantizedFrame simulate_link(const std::vector<int>& x, const WaveformConfig& cfg,
                             const ReceiveChain& chain, double n0, uint64_t seed,
                             int n_tail = -1);

}  // namespace cpmftn
