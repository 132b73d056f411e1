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
#include <memory>
#include <shared_mutex>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "cpmftn/front_end.hpp"
#include "cpmftn/waveform.hpp"

namespace cpmftn {

/// Thrown when a trellis would exceed the configured branch cap.
struct resource_cap_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Extended detector state: receiver phase index (the tilted phase state
/// with the low-IF drift folded in) plus the last L+N-1 input symbols.
struct DetectorState {
  int beta = 0;
  std::vector<int> recent;
};

/// Time-invariant extended trellis with per-branch noise-free mean vectors
/// and the decimated noise covariance (receive chain with eta = N).
///
/// State id = beta * M_cpm^mem + base-M_cpm code of the symbol history
/// (oldest symbol in the most significant digit).
struct TrellisDescriptor {
  WaveformConfig cfg;
  int aux_memory = 0;   ///< N
  int total_memory = 0; ///< L = l_cpm + l_g
  int mem = 0;          ///< symbols kept in the state (L+N-1)
  int n_states = 0;
  int drift = 0;        ///< per-symbol phase-state advance P*n_IF
  int initial_state = 0;
  std::vector<int32_t> next_state;   ///< [state * m_cpm + x]
  Eigen::MatrixXcd branch_means;     ///< row (state * m_cpm + x), M(N+1) entries
  Eigen::MatrixXcd r_cov;            ///< M(N+1) x M(N+1)

  int n_branches() const { return n_states * cfg.m_cpm; }
  int samples_per_block() const { return cfg.m; }
  int window_samples() const { return cfg.m * (aux_memory + 1); }

  int encode_state(int beta, const std::vector<int>& recent) const;
  DetectorState decode_state(int id) const;
};

/// Enumerates states and branches, precomputing branch means by running the
/// noise-free chain over each (state, symbol) window.
TrellisDescriptor build_trellis(const WaveformConfig& cfg, const ReceiveChain& chain,
                                int aux_memory, int64_t max_branches = 1000000);

/// Per-symbol posteriors and hard decisions.
struct AppTable {
  int n = 0;
  int m_cpm = 0;
  std::vector<double> post;  ///< row k: P(x_k = a | y^n), sums to 1
  std::vector<int> hard;
  bool underflow = false;

  double app(int k, int a) const { return post[static_cast<size_t>(k) * m_cpm + a]; }
};

/// MAP detector: BCJR over the extended trellis with orthant-probability
/// branch metrics, memoized per (branch, quantized window) pattern.
/// Shareable across threads once constructed (the memo is internally locked;
/// values are idempotent).
class BcjrDetector {
 public:
  explicit BcjrDetector(const TrellisDescriptor& trellis, double orthant_tol = 1e-6,
                        int64_t orthant_max_points = 100000);

  /// Forward-backward pass. Blocks beyond n_data carry known zero symbols
  /// (frame termination); rows are emitted for the n_data data symbols.
  /// Priors, when given, hold P(x = a) for the data symbols.
  AppTable detect(const QuantizedFrame& y, int n_data,
                  const std::vector<double>* priors = nullptr) const;

  /// Auxiliary channel law W(y_k | y_{k-1..k-N}, branch) from Eq-style
  /// orthant ratios; `window` holds the last min(k,N)+1 observation blocks.
  double aux_channel_prob(int state, int x, const std::vector<cplx>& window,
                          bool* underflow = nullptr) const;

  /// log W for a packed window pattern (wlen blocks, newest last).
  double log_branch_metric(int state, int x, uint32_t pattern, int wlen,
                           bool* underflow = nullptr) const;

  const TrellisDescriptor& trellis() const { return trellis_; }

  /// Packs quantized samples into the 2-bit-per-sample pattern code.
  static uint32_t pack_pattern(const cplx* samples, int count);

 private:
  double orthant_for(int state, int x, uint32_t pattern, int wlen, bool numerator,
                     bool* underflow) const;

  const TrellisDescriptor& trellis_;
  double tol_;
  int64_t max_points_;
  int quad_step_ = 0;  ///< P/4 when P is a multiple of 4 (cache folding)
  Eigen::MatrixXd real_cov_;
  bool diag_cov_ = false;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<uint64_t, double> cache_;
};

/// Low-complexity demodulator for the binary FTN configuration with M=1:
/// decides from the change in the real or imaginary part between
/// consecutive outputs, branching on the previous sample's quadrant.
std::vector<int> simple_demodulate(const QuantizedFrame& y, int n_data);

/// Simulation-based auxiliary-channel information-rate lower bound,
/// (1/n)[log2 W(y^n|x^n) - log2 W(y^n)], both terms via forward recursions.
double estimate_information_rate(const BcjrDetector& detector, const WaveformConfig& cfg,
                                 const ReceiveChain& chain, double n0, int64_t n_symbols,
                                 uint64_t seed);

}  // namespace cpmftn
