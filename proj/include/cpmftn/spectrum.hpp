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

#include <cstdint>
#include <string>
#include <vector>

#include "cpmftn/waveform.hpp"

namespace cpmftn {

struct WelchParams {
  int segment = 1 << 14;   ///< segment length in grid samples (power of two)
  double overlap = 0.5;    ///< fractional overlap
  bool hann = true;        ///< Hann window (rectangular otherwise)
};

/// Averaged-periodogram PSD estimate of the unit-amplitude complex baseband
/// signal e^{j psi} (tilt and low-IF included), i.u.d. symbols.
struct PsdEstimate {
  std::vector<double> freqs;  ///< ascending, cycles per Ts
  std::vector<double> power;  ///< density per bin, >= 0
  double total_power = 0.0;   ///< trapezoidal integral
  // estimation parameters, recorded for reproducibility
  int64_t n_symbols = 0;
  uint64_t seed = 0;
  WelchParams params;
  int grid_per_symbol = 0;
  double ts = 1.0;
};

PsdEstimate estimate_psd(const WaveformConfig& cfg, int64_t n_symbols, uint64_t seed,
                         const WelchParams& params = {});

/// PSD of an explicit symbol stream (tests, deterministic tones).
PsdEstimate estimate_psd(const WaveformConfig& cfg, const std::vector<int>& symbols,
                         const WelchParams& params = {});

/// Width of the smallest contiguous frequency interval containing at least
/// `fraction` of the total power (two-pointer search over the cumulative
/// distribution; the interval need not be symmetric about the carrier).
double containment_bandwidth(const PsdEstimate& psd, double fraction);

/// N0 from SNR = (Es/N0) (Ts B90)^-1.
double snr_to_noise_density(double snr_db, double es, double ts, double b90);
double noise_density_to_snr(double n0, double es, double ts, double b90);

inline double spectral_efficiency(double i_bpcu, double b, double ts) { return i_bpcu / (b * ts); }
inline double effective_osr(int m, double b, double ts) { return m / (b * ts); }

/// Containment bandwidths and derived figures for one waveform.
struct BandwidthReport {
  std::string name;
  double t_cpm_over_ts = 0.0;
  int m_ovr = 1;
  double b90_ts = 0.0;
  double b95_ts = 0.0;
  double eff90 = 0.0;  ///< log2(M_cpm)/(B90 Ts)
  double eff95 = 0.0;
  double osr_eff = 0.0;
  // PSD parameters used
  int64_t n_symbols = 0;
  uint64_t seed = 0;
};

BandwidthReport bandwidth_report(const std::string& name, const WaveformConfig& cfg,
                                 int64_t n_symbols, uint64_t seed,
                                 const WelchParams& params = {});

}  // namespace cpmftn
