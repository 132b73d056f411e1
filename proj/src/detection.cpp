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

#include "cpmftn/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "cpmftn/normal.hpp"
#include "cpmftn/orthant.hpp"
#include "cpmftn/rng.hpp"

namespace cpmftn {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogFloor = -745.0;  // ln(probability floor)

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

// quantized-sample code: bit0 = Re<0, bit1 = Im<0; rotation by -90 degrees
constexpr int kRotate[4] = {2, 0, 3, 1};

uint32_t rotate_pattern(uint32_t pattern, int samples, int turns) {
  turns &= 3;
  if (turns == 0) return pattern;
  uint32_t out = 0;
  for (int i = 0; i < samples; ++i) {
    int code = (pattern >> (2 * i)) & 3;
    for (int t = 0; t < turns; ++t) code = kRotate[code];
    out |= static_cast<uint32_t>(code) << (2 * i);
  }
  return out;
}

int pos_mod(int64_t v, int m) {
  const int64_t r = v % m;
  return static_cast<int>(r < 0 ? r + m : r);
}
}  // namespace

int TrellisDescriptor::encode_state(int beta, const std::vector<int>& recent) const {
  int id = beta;
  for (int s : recent) id = id * cfg.m_cpm + s;
  return id;
}

DetectorState TrellisDescriptor::decode_state(int id) const {
  DetectorState st;
  st.recent.resize(mem);
  for (int i = mem - 1; i >= 0; --i) {
    st.recent[i] = id % cfg.m_cpm;
    id /= cfg.m_cpm;
  }
  st.beta = id;
  return st;
}

TrellisDescriptor build_trellis(const WaveformConfig& cfg, const ReceiveChain& chain,
                                int aux_memory, int64_t max_branches) {
  cfg.validate();
  if (aux_memory < 0) throw std::invalid_argument("auxiliary memory must be >= 0");
  if (chain.eta != aux_memory)
    throw std::invalid_argument("chain eta must equal the auxiliary memory depth");
  const double drift_f = cfg.p_den * cfg.n_if;
  if (std::abs(drift_f - std::llround(drift_f)) > 1e-9)
    throw std::invalid_argument("trellis detection requires P * n_IF to be an integer");

  TrellisDescriptor tr;
  tr.cfg = cfg;
  tr.aux_memory = aux_memory;
  tr.total_memory = cfg.l_cpm() + chain.l_g;
  tr.mem = std::max(tr.total_memory + aux_memory - 1, 0);
  tr.drift = pos_mod(std::llround(drift_f), cfg.p_den);

  int64_t n_states = cfg.p_den;
  for (int i = 0; i < tr.mem; ++i) {
    n_states *= cfg.m_cpm;
    if (n_states * cfg.m_cpm > max_branches)
      throw resource_cap_error("trellis exceeds the branch cap (" +
                               std::to_string(max_branches) + " branches)");
  }
  tr.n_states = static_cast<int>(n_states);
  tr.initial_state = tr.encode_state(
      pos_mod(-static_cast<int64_t>(tr.mem - cfg.l_cpm() + 1) * tr.drift, cfg.p_den),
      std::vector<int>(tr.mem, 0));
  // Receiver phase state folds in the low-IF advance; the initial value
  // aligns the state phase with the absolute IF ramp at the first window.

  tr.next_state.resize(n_states * cfg.m_cpm);
  const int nw = tr.window_samples();
  tr.branch_means.resize(n_states * cfg.m_cpm, nw);
  tr.r_cov = chain.r_cov;

  const int l_cpm = cfg.l_cpm();
  const int md = cfg.grid_per_symbol();
  const int ctx = tr.mem + 1;                     // symbols determining a branch
  const int nsyn = ctx - (l_cpm - 1);             // synthesizable symbols
  std::vector<int> seq(ctx);
  std::vector<cplx> sig(static_cast<size_t>(nsyn) * md);

  for (int s = 0; s < tr.n_states; ++s) {
    const DetectorState st = tr.decode_state(s);
    std::copy(st.recent.begin(), st.recent.end(), seq.begin());
    for (int x = 0; x < cfg.m_cpm; ++x) {
      seq[ctx - 1] = x;
      // transition
      const int oldest = tr.mem > 0 ? st.recent[0] : x;
      const int beta2 = pos_mod(st.beta + static_cast<int64_t>(cfg.k_num) * oldest + tr.drift,
                                cfg.p_den);
      std::vector<int> rec2(seq.begin() + 1, seq.end());
      tr.next_state[static_cast<size_t>(s) * cfg.m_cpm + x] = tr.encode_state(beta2, rec2);

      // noise-free window: synthesize the last nsyn symbols of the context
      TiltedState ph;
      ph.beta = st.beta;
      ph.recent.assign(seq.begin(), seq.begin() + l_cpm);
      const double amp = std::sqrt(cfg.es / cfg.ts);
      for (int j = 0; j < nsyn; ++j) {
        if (j > 0) {
          ph.beta = pos_mod(ph.beta + static_cast<int64_t>(cfg.k_num) * ph.recent[0], cfg.p_den);
          ph.recent.assign(seq.begin() + j, seq.begin() + j + l_cpm);
        }
        const std::vector<double> seg = tilted_phase_symbol(ph, cfg, j);
        for (int i = 0; i < md; ++i)
          sig[static_cast<size_t>(j) * md + i] = std::polar(amp, seg[i]);
      }
      // decimated picks for blocks k-N..k; block j_rel lands at local symbol
      // l_g + j_rel (the synthesis starts l_g + N symbols before block k... )
      const int lead = nsyn - 1 - aux_memory;  // local symbol index of block k-N
      for (int jj = 0; jj <= aux_memory; ++jj) {
        for (int mi = 1; mi <= cfg.m; ++mi) {
          const int64_t end = static_cast<int64_t>(lead + jj) * md +
                              static_cast<int64_t>(mi - chain.m0) * chain.d + chain.end_shift - 1;
          cplx acc = 0.0;
          for (int qq = 0; qq < chain.n_g; ++qq) acc += chain.taps[qq] * sig[end - qq];
          tr.branch_means(static_cast<size_t>(s) * cfg.m_cpm + x, jj * cfg.m + (mi - 1)) = acc;
        }
      }
    }
  }
  return tr;
}

BcjrDetector::BcjrDetector(const TrellisDescriptor& trellis, double orthant_tol,
                           int64_t orthant_max_points)
    : trellis_(trellis), tol_(orthant_tol), max_points_(orthant_max_points) {
  if (trellis.window_samples() > 13)  // pattern must fit the 64-bit cache key
    throw std::invalid_argument("observation window too large for the metric cache");
  real_cov_ = real_cov_from_complex(trellis.r_cov);
  const double max_diag = real_cov_.diagonal().maxCoeff();
  diag_cov_ = true;
  for (int i = 0; i < real_cov_.rows() && diag_cov_; ++i)
    for (int j = 0; j < real_cov_.cols(); ++j)
      if (i != j && std::abs(real_cov_(i, j)) >= 1e-12 * max_diag) {
        diag_cov_ = false;
        break;
      }
  if (trellis_.cfg.p_den % 4 == 0) quad_step_ = trellis_.cfg.p_den / 4;
}

uint32_t BcjrDetector::pack_pattern(const cplx* samples, int count) {
  uint32_t pattern = 0;
  for (int i = 0; i < count; ++i) {
    const int code = (samples[i].real() < 0 ? 1 : 0) | (samples[i].imag() < 0 ? 2 : 0);
    pattern |= static_cast<uint32_t>(code) << (2 * i);
  }
  return pattern;
}

double BcjrDetector::orthant_for(int state, int x, uint32_t pattern, int wlen, bool numerator,
                                 bool* underflow) const {
  const int m = trellis_.cfg.m;
  const int mc = trellis_.cfg.m_cpm;
  const int nw = trellis_.window_samples();
  // blocks used: numerator -> last wlen blocks; denominator -> the wlen-1
  // blocks before the newest one
  const int blocks = numerator ? wlen : wlen - 1;
  if (blocks == 0) return 1.0;
  const int first = nw - m * wlen;
  const int count = m * blocks;

  // The denominator marginal (past blocks only) does not depend on the
  // branch symbol, so it is cached and evaluated with x = 0.
  const int xc = numerator ? x : 0;
  // canonical fold: rotating the phase state by a quadrant rotates the mean
  int cstate = state;
  uint32_t cpattern = numerator ? pattern : pattern & ((1u << (2 * count)) - 1);
  if (quad_step_ > 0) {
    const int mem_pow = trellis_.n_states / trellis_.cfg.p_den;
    const int gamma = state / mem_pow;
    const int rem = state % mem_pow;
    const int turns = gamma / quad_step_;
    cstate = (gamma % quad_step_) * mem_pow + rem;
    cpattern = rotate_pattern(cpattern, count, turns);
  }

  const uint64_t key = ((static_cast<uint64_t>(cstate) * mc + xc) << 34) |
                       (static_cast<uint64_t>(wlen) << 30) |
                       (static_cast<uint64_t>(numerator) << 29) | cpattern;
  {
    std::shared_lock lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      if (underflow && it->second <= 1e-300) *underflow = true;
      return it->second;
    }
  }

  const Eigen::VectorXcd mean =
      trellis_.branch_means.row(static_cast<size_t>(cstate) * mc + xc).segment(first, count);
  double p;
  if (diag_cov_) {
    // independent Re/Im tails
    double logp = 0.0;
    for (int i = 0; i < count; ++i) {
      const int code = (cpattern >> (2 * i)) & 3;
      const double sr = (code & 1) ? -1.0 : 1.0;
      const double si = (code & 2) ? -1.0 : 1.0;
      const double sd = std::sqrt(0.5 * trellis_.r_cov(first + i, first + i).real());
      logp += log_norm_cdf(sr * mean(i).real() / sd);
      logp += log_norm_cdf(si * mean(i).imag() / sd);
    }
    p = logp < kLogFloor ? 1e-300 : std::exp(logp);
  } else {
    OrthantQuery q;
    q.mean = interleave_complex(mean);
    q.cov = real_cov_.block(2 * first, 2 * first, 2 * count, 2 * count);
    q.signs.resize(2 * count);
    for (int i = 0; i < count; ++i) {
      const int code = (cpattern >> (2 * i)) & 3;
      q.signs[2 * i] = (code & 1) ? -1 : 1;
      q.signs[2 * i + 1] = (code & 2) ? -1 : 1;
    }
    const OrthantResult r = orthant_probability(q, tol_, max_points_);
    p = std::max(r.p, 1e-300);
  }
  if (underflow && p <= 1e-300) *underflow = true;
  {
    std::unique_lock lock(mutex_);
    cache_.emplace(key, p);
  }
  return p;
}

double BcjrDetector::log_branch_metric(int state, int x, uint32_t pattern, int wlen,
                                       bool* underflow) const {
  const double num = orthant_for(state, x, pattern, wlen, true, underflow);
  if (wlen <= 1) return std::log(num);
  const double den = orthant_for(state, x, pattern, wlen, false, underflow);
  return std::log(num) - std::log(den);
}

double BcjrDetector::aux_channel_prob(int state, int x, const std::vector<cplx>& window,
                                      bool* underflow) const {
  const int m = trellis_.cfg.m;
  if (window.size() % m != 0 || window.empty())
    throw std::invalid_argument("window must hold whole observation blocks");
  const int wlen = static_cast<int>(window.size()) / m;
  if (wlen > trellis_.aux_memory + 1)
    throw std::invalid_argument("window longer than N+1 blocks");
  const uint32_t pattern = pack_pattern(window.data(), static_cast<int>(window.size()));
  return std::exp(log_branch_metric(state, x, pattern, wlen, underflow));
}

AppTable BcjrDetector::detect(const QuantizedFrame& y, int n_data,
                              const std::vector<double>* priors) const {
  const int mc = trellis_.cfg.m_cpm;
  const int m = trellis_.cfg.m;
  const int n_states = trellis_.n_states;
  const int n_blocks = y.n_symbols;
  const int aux = trellis_.aux_memory;
  if (n_data > n_blocks) throw std::invalid_argument("n_data exceeds frame blocks");

  std::vector<double> log_prior(mc, -std::log(static_cast<double>(mc)));
  if (priors) {
    if (static_cast<int>(priors->size()) != mc) throw std::invalid_argument("bad priors size");
    for (int a = 0; a < mc; ++a) log_prior[a] = std::log(std::max((*priors)[a], 1e-300));
  }

  AppTable out;
  out.n = n_data;
  out.m_cpm = mc;
  out.post.assign(static_cast<size_t>(n_data) * mc, 0.0);
  out.hard.assign(n_data, 0);

  std::vector<uint32_t> patterns(n_blocks);
  std::vector<int> wlens(n_blocks);
  for (int k = 0; k < n_blocks; ++k) {
    const int wlen = std::min(k, aux) + 1;
    patterns[k] = pack_pattern(&y.y[static_cast<size_t>(k - wlen + 1) * m], wlen * m);
    wlens[k] = wlen;
  }

  // forward
  std::vector<std::vector<double>> alpha(n_blocks + 1,
                                         std::vector<double>(n_states, kNegInf));
  alpha[0][trellis_.initial_state] = 0.0;
  bool underflow = false;
  for (int k = 0; k < n_blocks; ++k) {
    auto& cur = alpha[k];
    auto& nxt = alpha[k + 1];
    const bool data = k < n_data;
    for (int s = 0; s < n_states; ++s) {
      if (cur[s] == kNegInf) continue;
      const int x_hi = data ? mc : 1;  // zero tail terminates the frame
      for (int x = 0; x < x_hi; ++x) {
        const double w = log_branch_metric(s, x, patterns[k], wlens[k], &underflow) +
                         (data ? log_prior[x] : 0.0);
        const int d = trellis_.next_state[static_cast<size_t>(s) * mc + x];
        nxt[d] = log_add(nxt[d], cur[s] + w);
      }
    }
    const double mx = *std::max_element(nxt.begin(), nxt.end());
    if (mx == kNegInf) throw std::runtime_error("forward recursion died");
    for (auto& v : nxt) v -= mx;
  }

  // backward + posteriors (branch metrics come from the memo, so the second
  // pass costs hash lookups, not integrations)
  std::vector<double> beta(n_states, 0.0), beta_prev(n_states, kNegInf);
  for (int k = n_blocks - 1; k >= 0; --k) {
    std::fill(beta_prev.begin(), beta_prev.end(), kNegInf);
    const bool data = k < n_data;
    std::vector<double> post(data ? mc : 0, kNegInf);
    const auto& cur = alpha[k];
    for (int s = 0; s < n_states; ++s) {
      const bool alive = cur[s] != kNegInf;
      const int x_hi = data ? mc : 1;
      for (int x = 0; x < x_hi; ++x) {
        const double w = log_branch_metric(s, x, patterns[k], wlens[k], nullptr) +
                         (data ? log_prior[x] : 0.0);
        const int d = trellis_.next_state[static_cast<size_t>(s) * mc + x];
        if (beta[d] == kNegInf) continue;
        beta_prev[s] = log_add(beta_prev[s], w + beta[d]);
        if (data && alive) post[x] = log_add(post[x], cur[s] + w + beta[d]);
      }
    }
    const double mx = *std::max_element(beta_prev.begin(), beta_prev.end());
    for (auto& v : beta_prev) v -= mx;
    beta.swap(beta_prev);
    if (data) {
      double pmx = kNegInf;
      for (double v : post) pmx = std::max(pmx, v);
      double sum = 0.0;
      for (double v : post) sum += std::exp(v - pmx);
      int best = 0;
      for (int a = 0; a < mc; ++a) {
        const double p = std::exp(post[a] - pmx) / sum;
        out.post[static_cast<size_t>(k) * mc + a] = p;
        if (post[a] > post[best]) best = a;  // strict: lowest index wins ties
      }
      out.hard[k] = best;
    }
  }
  out.underflow = underflow;
  return out;
}

std::vector<int> simple_demodulate(const QuantizedFrame& y, int n_data) {
  if (y.m_ovr != 1) throw std::invalid_argument("simple demodulator requires M = 1");
  if (y.n_symbols < n_data + 1)
    throw std::invalid_argument("need one observation beyond the data symbols");
  std::vector<int> dec(n_data);
  for (int k = 0; k < n_data; ++k) {
    const cplx prev = y.y[k];  // y[0] reflects the known initial quadrant
    const cplx cur = y.y[k + 1];
    const bool same_sign_pair = prev.real() * prev.imag() > 0;  // 1+j or -1-j
    if (same_sign_pair) {
      dec[k] = std::abs(cur.real() - prev.real()) > 1.0 ? 1 : 0;
    } else {
      dec[k] = std::abs(cur.imag() - prev.imag()) > 1.0 ? 1 : 0;
    }
  }
  return dec;
}

double estimate_information_rate(const BcjrDetector& detector, const WaveformConfig& cfg,
                                 const ReceiveChain& chain, double n0, int64_t n_symbols,
                                 uint64_t seed) {
  const TrellisDescriptor& tr = detector.trellis();
  const int mc = cfg.m_cpm;
  const int m = cfg.m;
  const int aux = tr.aux_memory;

  std::vector<int> x(n_symbols);
  Rng rng(derive_stream(seed, 0x9e3779b9));
  for (auto& v : x) v = static_cast<int>(rng.uniform_int(mc));
  const QuantizedFrame y = simulate_link(x, cfg, chain, n0, derive_stream(seed, 1), -1);
  const int n_blocks = y.n_symbols;

  std::vector<uint32_t> patterns(n_blocks);
  std::vector<int> wlens(n_blocks);
  for (int k = 0; k < n_blocks; ++k) {
    const int wlen = std::min(k, aux) + 1;
    patterns[k] = BcjrDetector::pack_pattern(&y.y[static_cast<size_t>(k - wlen + 1) * m],
                                             wlen * m);
    wlens[k] = wlen;
  }

  // conditioned term: product of branch metrics along the transmitted path
  double log_num = 0.0;
  int st = tr.initial_state;
  for (int k = 0; k < n_blocks; ++k) {
    const int xk = k < n_symbols ? x[k] : 0;
    log_num += detector.log_branch_metric(st, xk, patterns[k], wlens[k], nullptr);
    st = tr.next_state[static_cast<size_t>(st) * mc + xk];
  }

  // unconditioned term: forward recursion with i.u.d. input priors
  const double lp_uniform = -std::log(static_cast<double>(mc));
  std::vector<double> alpha(tr.n_states, kNegInf), nxt(tr.n_states, kNegInf);
  alpha[tr.initial_state] = 0.0;
  double log_den = 0.0;
  for (int k = 0; k < n_blocks; ++k) {
    std::fill(nxt.begin(), nxt.end(), kNegInf);
    const bool data = k < n_symbols;
    for (int s = 0; s < tr.n_states; ++s) {
      if (alpha[s] == kNegInf) continue;
      const int x_hi = data ? mc : 1;
      for (int xx = 0; xx < x_hi; ++xx) {
        const double w = detector.log_branch_metric(s, xx, patterns[k], wlens[k], nullptr) +
                         (data ? lp_uniform : 0.0);
        const int d = tr.next_state[static_cast<size_t>(s) * mc + xx];
        nxt[d] = log_add(nxt[d], alpha[s] + w);
      }
    }
    const double mx = *std::max_element(nxt.begin(), nxt.end());
    log_den += mx;
    for (int s = 0; s < tr.n_states; ++s) alpha[s] = nxt[s] - mx;
  }
  double tail = kNegInf;
  for (double v : alpha) tail = log_add(tail, v);
  log_den += tail;

  return (log_num - log_den) / (std::log(2.0) * static_cast<double>(n_symbols));
}

}  // namespace cpmftn
