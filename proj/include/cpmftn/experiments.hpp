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
#include <optional>
#include <string>
#include <vector>

#include "cpmftn/spectrum.hpp"
#include "cpmftn/waveform.hpp"

namespace cpmftn {

inline constexpr const char* kCodeVersion = "cpmftn 0.1.0";

enum class DetectorKind { kBcjr, kSimple };
enum class BitMapping { kGray, kNatural };

/// One experiment: waveform + detector + SNR grid + stopping rule + seed.
///
/// `b90_ts` drives the SNR -> N0 conversion. Presets default to the
/// reference containment products of the waveforms they reproduce, so that
/// the SNR axis matches the published curves; "measured" recomputes it from
/// the Welch PSD pipeline instead.
struct ExperimentSpec {
  std::string waveform_name;  ///< preset name or "custom"
  WaveformConfig cfg;
  double t_g = 1.0;
  int aux_memory = 0;  ///< N
  DetectorKind detector = DetectorKind::kBcjr;
  BitMapping mapping = BitMapping::kGray;
  std::vector<double> snr_grid_db;
  int64_t frame_symbols = 10000;
  int64_t max_symbols = 10000000;
  int64_t min_errors = 200;
  uint64_t seed = 1;
  std::optional<double> b90_ts;  ///< empty = measure via estimate_psd
  int64_t rate_symbols = 100000;
  int64_t psd_symbols = 1 << 16;

  std::string canonical_json() const;
  uint64_t hash() const;  ///< FNV-1a of canonical_json()
};

/// Parses and validates a spec file (JSON, documented schema). Unknown keys
/// are rejected; preset fields must not be overridden except where noted.
ExperimentSpec load_spec(const std::string& path);
ExperimentSpec parse_spec_json(const std::string& text);

/// Table I preset expansion. `m_ovr` selects the 4-CPFSK variant (2 or 4);
/// `t_cpm_over_ts` selects the FTN pulse length.
ExperimentSpec make_preset(const std::string& name, double t_cpm_over_ts = 1.0, int m_ovr = -1);

struct SnrPointResult {
  double snr_db = 0.0;
  double n0 = 0.0;
  int64_t bit_errors = 0;
  int64_t bits = 0;
  int64_t symbols = 0;
  double ber = 0.0;
  double ci_lo = 0.0;  ///< Wilson 95%
  double ci_hi = 0.0;
  std::string stop_reason;  ///< "min_errors" or "max_symbols"
};

struct ExperimentResult {
  std::string waveform_name;
  std::string detector;
  double b90_ts_used = 0.0;
  std::vector<SnrPointResult> points;
  std::string spec_hash;
  uint64_t seed = 0;
  std::string code_version = kCodeVersion;
};

struct RatePoint {
  double snr_db = 0.0;
  double n0 = 0.0;
  double i_bpcu = 0.0;
  double spectral_eff = 0.0;
};

struct RateResult {
  std::string waveform_name;
  double b90_ts_used = 0.0;
  std::vector<RatePoint> points;
  std::string spec_hash;
  uint64_t seed = 0;
  std::string code_version = kCodeVersion;
};

/// Monte Carlo BER sweep; deterministic in (spec, seed) regardless of the
/// worker-thread count (frames are accounted in index order).
ExperimentResult run_ber_sweep(const ExperimentSpec& spec);

/// Auxiliary-channel information rate and spectral efficiency per SNR point.
RateResult run_rate_sweep(const ExperimentSpec& spec);

/// Regenerates the containment-bandwidth table for the standard preset rows.
std::vector<BandwidthReport> run_bandwidth_table(int64_t n_symbols, uint64_t seed);

/// The b90*Ts product used for the SNR mapping (preset reference, explicit
/// value, or measured).
double resolve_b90_ts(const ExperimentSpec& spec);

// --- emission (CSV columns fixed; byte-stable for identical inputs) ---
std::string to_csv(const ExperimentResult& r);
std::string to_json(const ExperimentResult& r);
std::string to_csv(const RateResult& r);
std::string to_json(const RateResult& r);
std::string to_csv(const std::vector<BandwidthReport>& rows);
std::string to_json(const std::vector<BandwidthReport>& rows);
std::string to_csv(const PsdEstimate& psd);

void write_file(const std::string& path, const std::string& content);

}  // namespace cpmftn
