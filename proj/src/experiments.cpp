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

#include "cpmftn/experiments.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "cpmftn/detection.hpp"
#include "cpmftn/rng.hpp"

namespace cpmftn {

using nlohmann::json;

namespace {

constexpr double kWilsonZ = 1.959963984540054;

int n_threads() {
  if (const char* env = std::getenv("CPMFTN_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void wilson_interval(int64_t errors, int64_t n, double* lo, double* hi) {
  if (n == 0) {
    *lo = 0.0;
    *hi = 1.0;
    return;
  }
  const double p = static_cast<double>(errors) / n;
  const double z2 = kWilsonZ * kWilsonZ;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = kWilsonZ * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  *lo = std::max(0.0, center - half);
  *hi = std::min(1.0, center + half);
}

int gray_code(int x) { return x ^ (x >> 1); }

int symbol_bit_errors(int a, int b, BitMapping mapping) {
  const int d = mapping == BitMapping::kGray ? (gray_code(a) ^ gray_code(b)) : (a ^ b);
  return std::popcount(static_cast<unsigned>(d));
}

int bits_per_symbol(int m_cpm) {
  int b = 0;
  while ((1 << b) < m_cpm) ++b;
  return b;
}

/// Grid for spectrum runs: >= 32 samples/symbol with the pulse and filter
/// lengths exactly on grid.
WaveformConfig spectrum_cfg(const WaveformConfig& cfg, double t_g) {
  for (int md : {32, 40, 48, 64, 80, 120, 160}) {
    if (md % cfg.m != 0) continue;
    WaveformConfig c = cfg;
    c.d = md / cfg.m;
    const double q1 = cfg.t_cpm / c.grid_dt();
    const double q2 = t_g / c.grid_dt();
    if (std::abs(q1 - std::llround(q1)) < 1e-9 && std::abs(q2 - std::llround(q2)) < 1e-9)
      return c;
  }
  throw std::invalid_argument("no spectrum grid fits the waveform");
}

struct FrameOutcome {
  int64_t errors = 0;
  int64_t bits = 0;
  int64_t symbols = 0;
};

json spec_to_json(const ExperimentSpec& s) {
  json w;
  w["name"] = s.waveform_name;
  w["m_cpm"] = s.cfg.m_cpm;
  w["k"] = s.cfg.k_num;
  w["p"] = s.cfg.p_den;
  w["ts"] = s.cfg.ts;
  w["t_cpm_over_ts"] = s.cfg.t_cpm / s.cfg.ts;
  w["phi0"] = s.cfg.phi0;
  w["n_if"] = s.cfg.n_if;
  w["m"] = s.cfg.m;
  w["d"] = s.cfg.d;
  w["es"] = s.cfg.es;
  w["t_g_over_ts"] = s.t_g / s.cfg.ts;
  json j;
  j["waveform"] = w;
  j["n"] = s.aux_memory;
  j["detector"] = s.detector == DetectorKind::kBcjr ? "bcjr" : "simple";
  j["bit_mapping"] = s.mapping == BitMapping::kGray ? "gray" : "natural";
  j["snr_grid_db"] = s.snr_grid_db;
  j["frame_symbols"] = s.frame_symbols;
  j["max_symbols"] = s.max_symbols;
  j["min_errors"] = s.min_errors;
  j["seed"] = s.seed;
  j["rate_symbols"] = s.rate_symbols;
  j["psd_symbols"] = s.psd_symbols;
  if (s.b90_ts)
    j["b90_ts"] = *s.b90_ts;
  else
    j["b90_ts"] = "measured";
  return j;
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw std::invalid_argument("unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace

std::string ExperimentSpec::canonical_json() const { return spec_to_json(*this).dump(); }

uint64_t ExperimentSpec::hash() const {
  const std::string s = canonical_json();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentSpec make_preset(const std::string& name, double t_cpm_over_ts, int m_ovr) {
  ExperimentSpec s;
  s.waveform_name = name;
  constexpr double pi = std::numbers::pi;
  if (name == "FTN-CPM") {
    s.cfg.m_cpm = 2;
    s.cfg.k_num = 1;
    s.cfg.p_den = 4;
    s.cfg.t_cpm = t_cpm_over_ts;
    s.cfg.phi0 = pi / 4;
    s.cfg.n_if = 0.0;
    s.cfg.m = 1;
    s.t_g = 1.0;
    s.aux_memory = 0;
    const bool integral_grid = std::abs(t_cpm_over_ts * 16 - std::llround(t_cpm_over_ts * 16)) < 1e-9;
    s.cfg.d = integral_grid ? 16 : 20;
    // reference containment products (transmit-side, 90%)
    const std::pair<double, double> table[] = {{1.0, 2.853}, {1.2, 3.079}, {1.4, 3.297},
                                               {1.6, 3.507}, {1.8, 3.691}, {2.0, 3.891}};
    for (auto [t, eff] : table)
      if (std::abs(t - t_cpm_over_ts) < 1e-9) s.b90_ts = 1.0 / eff;
  } else if (name == "4-CPFSK") {
    if (m_ovr < 0) m_ovr = 2;
    if (m_ovr != 2 && m_ovr != 4) throw std::invalid_argument("4-CPFSK supports m = 2 or 4");
    s.cfg.m_cpm = 4;
    s.cfg.k_num = 1;
    s.cfg.p_den = 4;
    s.cfg.t_cpm = 1.0;
    s.cfg.phi0 = pi / 4;
    s.cfg.n_if = 0.0;
    s.cfg.m = m_ovr;
    s.cfg.d = 32 / m_ovr;
    s.t_g = 0.5;
    s.aux_memory = 0;
    s.b90_ts = 2.0 / 2.372;
  } else if (name == "8-CPFSK") {
    s.cfg.m_cpm = 8;
    s.cfg.k_num = 1;
    s.cfg.p_den = 8;
    s.cfg.t_cpm = 1.0;
    s.cfg.phi0 = pi / 8;
    s.cfg.n_if = 0.25;
    s.cfg.m = 5;
    s.cfg.d = 8;
    s.t_g = 0.5;
    s.aux_memory = 0;
    s.b90_ts = 3.0 / 3.467;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  s.cfg.validate();
  return s;
}

ExperimentSpec parse_spec_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("spec parse error: ") + e.what());
  }
  reject_unknown_keys(j,
                      {"waveform", "detector", "bit_mapping", "snr_grid_db", "frame_symbols",
                       "max_symbols", "min_errors", "seed", "n", "b90_ts", "rate_symbols",
                       "psd_symbols"},
                      "spec");
  if (!j.contains("waveform")) throw std::invalid_argument("spec missing 'waveform'");
  const json& w = j["waveform"];

  ExperimentSpec s;
  if (w.contains("preset")) {
    reject_unknown_keys(w, {"preset", "t_cpm_over_ts", "m", "d"}, "waveform");
    const double t = w.value("t_cpm_over_ts", 1.0);
    const int m_ovr = w.value("m", -1);
    s = make_preset(w["preset"].get<std::string>(), t, m_ovr);
    if (w.contains("d")) s.cfg.d = w["d"].get<int>();
  } else {
    reject_unknown_keys(w,
                        {"name", "m_cpm", "k", "p", "ts", "t_cpm_over_ts", "phi0_over_pi", "n_if",
                         "m", "d", "es", "t_g_over_ts"},
                        "waveform");
    s.waveform_name = w.value("name", "custom");
    s.cfg.m_cpm = w.at("m_cpm").get<int>();
    s.cfg.k_num = w.at("k").get<int>();
    s.cfg.p_den = w.at("p").get<int>();
    s.cfg.ts = w.value("ts", 1.0);
    s.cfg.t_cpm = w.at("t_cpm_over_ts").get<double>() * s.cfg.ts;
    s.cfg.phi0 = w.value("phi0_over_pi", 0.0) * std::numbers::pi;
    s.cfg.n_if = w.value("n_if", 0.0);
    s.cfg.m = w.value("m", 1);
    s.cfg.d = w.value("d", 16);
    s.cfg.es = w.value("es", 1.0);
    s.t_g = w.at("t_g_over_ts").get<double>() * s.cfg.ts;
  }
  if (j.contains("detector")) {
    const std::string d = j["detector"].get<std::string>();
    if (d == "bcjr")
      s.detector = DetectorKind::kBcjr;
    else if (d == "simple")
      s.detector = DetectorKind::kSimple;
    else
      throw std::invalid_argument("detector must be 'bcjr' or 'simple'");
  }
  if (j.contains("bit_mapping")) {
    const std::string bmp = j["bit_mapping"].get<std::string>();
    if (bmp == "gray")
      s.mapping = BitMapping::kGray;
    else if (bmp == "natural")
      s.mapping = BitMapping::kNatural;
    else
      throw std::invalid_argument("bit_mapping must be 'gray' or 'natural'");
  }
  if (j.contains("snr_grid_db")) s.snr_grid_db = j["snr_grid_db"].get<std::vector<double>>();
  s.frame_symbols = j.value("frame_symbols", s.frame_symbols);
  s.max_symbols = j.value("max_symbols", s.max_symbols);
  s.min_errors = j.value("min_errors", s.min_errors);
  s.seed = j.value("seed", s.seed);
  s.aux_memory = j.value("n", s.aux_memory);
  s.rate_symbols = j.value("rate_symbols", s.rate_symbols);
  s.psd_symbols = j.value("psd_symbols", s.psd_symbols);
  if (j.contains("b90_ts")) {
    if (j["b90_ts"].is_string()) {
      if (j["b90_ts"].get<std::string>() != "measured")
        throw std::invalid_argument("b90_ts must be a number or \"measured\"");
      s.b90_ts.reset();
    } else {
      s.b90_ts = j["b90_ts"].get<double>();
    }
  }

  // invariants
  s.cfg.validate();
  if (s.min_errors < 1) throw std::invalid_argument("min_errors must be >= 1");
  if (s.frame_symbols < 8) throw std::invalid_argument("frame_symbols must be >= 8");
  if (s.max_symbols < s.frame_symbols) throw std::invalid_argument("max_symbols < frame_symbols");
  if (s.aux_memory < 0) throw std::invalid_argument("n must be >= 0");
  for (size_t i = 1; i < s.snr_grid_db.size(); ++i)
    if (s.snr_grid_db[i] <= s.snr_grid_db[i - 1])
      throw std::invalid_argument("snr grid strictly increasing");
  if (s.detector == DetectorKind::kSimple && s.cfg.m != 1)
    throw std::invalid_argument("simple detector requires m = 1");
  return s;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open spec file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec_json(ss.str());
}

double resolve_b90_ts(const ExperimentSpec& spec) {
  if (spec.b90_ts) return *spec.b90_ts;
  const WaveformConfig pc = spectrum_cfg(spec.cfg, spec.t_g);
  const PsdEstimate psd = estimate_psd(pc, spec.psd_symbols, derive_stream(spec.seed, 0xB90));
  return containment_bandwidth(psd, 0.90) * spec.cfg.ts;
}

ExperimentResult run_ber_sweep(const ExperimentSpec& spec) {
  spec.cfg.validate();
  if (spec.snr_grid_db.empty()) throw std::invalid_argument("snr_grid_db must be non-empty");
  const double b90_ts = resolve_b90_ts(spec);
  const int bps = bits_per_symbol(spec.cfg.m_cpm);

  ExperimentResult result;
  result.waveform_name = spec.waveform_name;
  result.detector = spec.detector == DetectorKind::kBcjr ? "bcjr" : "simple";
  result.b90_ts_used = b90_ts;
  result.seed = spec.seed;
  {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(spec.hash()));
    result.spec_hash = buf;
  }

  const int threads = n_threads();
  for (size_t pi = 0; pi < spec.snr_grid_db.size(); ++pi) {
    const double snr_db = spec.snr_grid_db[pi];
    const double n0 = snr_to_noise_density(snr_db, spec.cfg.es, spec.cfg.ts, b90_ts / spec.cfg.ts);
    const ReceiveChain chain = build_rx_filter(spec.cfg, spec.t_g, n0, spec.aux_memory);

    std::unique_ptr<TrellisDescriptor> trellis;
    std::unique_ptr<BcjrDetector> detector;
    if (spec.detector == DetectorKind::kBcjr) {
      trellis = std::make_unique<TrellisDescriptor>(build_trellis(spec.cfg, chain, spec.aux_memory));
      detector = std::make_unique<BcjrDetector>(*trellis);
    }
    const int warmup = spec.cfg.l_cpm() + chain.l_g + spec.aux_memory;
    const uint64_t point_stream = derive_stream(spec.seed, 0x1000 + pi);

    auto run_frame = [&](int64_t f) -> FrameOutcome {
      const uint64_t fs = derive_stream(point_stream, 2 * static_cast<uint64_t>(f));
      const uint64_t ns = derive_stream(point_stream, 2 * static_cast<uint64_t>(f) + 1);
      std::vector<int> x(spec.frame_symbols);
      Rng rng(fs);
      for (auto& v : x) v = static_cast<int>(rng.uniform_int(spec.cfg.m_cpm));
      const QuantizedFrame y = simulate_link(x, spec.cfg, chain, n0, ns);
      std::vector<int> dec;
      if (spec.detector == DetectorKind::kBcjr) {
        dec = detector->detect(y, static_cast<int>(spec.frame_symbols)).hard;
      } else {
        dec = simple_demodulate(y, static_cast<int>(spec.frame_symbols));
      }
      FrameOutcome fo;
      for (int64_t k = warmup; k < spec.frame_symbols; ++k)
        fo.errors += symbol_bit_errors(x[k], dec[k], spec.mapping);
      fo.symbols = spec.frame_symbols - warmup;
      fo.bits = fo.symbols * bps;
      return fo;
    };

    std::vector<FrameOutcome> outcomes;
    int64_t cum_errors = 0, cum_bits = 0, cum_symbols = 0;
    std::string stop_reason;
    int64_t next_frame = 0;
    while (stop_reason.empty()) {
      const int64_t chunk = std::max<int64_t>(threads, 2);
      const size_t base = outcomes.size();
      outcomes.resize(base + chunk);
      std::atomic<int64_t> widx{0};
      auto worker = [&] {
        for (;;) {
          const int64_t i = widx.fetch_add(1);
          if (i >= chunk) break;
          outcomes[base + i] = run_frame(next_frame + i);
        }
      };
      std::vector<std::thread> pool;
      for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
      worker();
      for (auto& t : pool) t.join();
      next_frame += chunk;
      // account in index order so results do not depend on the thread count
      for (size_t i = base; i < outcomes.size() && stop_reason.empty(); ++i) {
        cum_errors += outcomes[i].errors;
        cum_bits += outcomes[i].bits;
        cum_symbols += outcomes[i].symbols;
        if (cum_errors >= spec.min_errors)
          stop_reason = "min_errors";
        else if (cum_symbols >= spec.max_symbols)
          stop_reason = "max_symbols";
      }
    }

    SnrPointResult pr;
    pr.snr_db = snr_db;
    pr.n0 = n0;
    pr.bit_errors = cum_errors;
    pr.bits = cum_bits;
    pr.symbols = cum_symbols;
    pr.ber = cum_bits > 0 ? static_cast<double>(cum_errors) / cum_bits : 0.0;
    wilson_interval(cum_errors, cum_bits, &pr.ci_lo, &pr.ci_hi);
    pr.stop_reason = stop_reason;
    result.points.push_back(pr);
  }
  return result;
}

RateResult run_rate_sweep(const ExperimentSpec& spec) {
  spec.cfg.validate();
  if (spec.snr_grid_db.empty()) throw std::invalid_argument("snr_grid_db must be non-empty");
  const double b90_ts = resolve_b90_ts(spec);

  RateResult result;
  result.waveform_name = spec.waveform_name;
  result.b90_ts_used = b90_ts;
  result.seed = spec.seed;
  {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(spec.hash()));
    result.spec_hash = buf;
  }
  for (size_t pi = 0; pi < spec.snr_grid_db.size(); ++pi) {
    const double snr_db = spec.snr_grid_db[pi];
    const double n0 = snr_to_noise_density(snr_db, spec.cfg.es, spec.cfg.ts, b90_ts / spec.cfg.ts);
    const ReceiveChain chain = build_rx_filter(spec.cfg, spec.t_g, n0, spec.aux_memory);
    const TrellisDescriptor trellis = build_trellis(spec.cfg, chain, spec.aux_memory);
    const BcjrDetector detector(trellis);
    RatePoint rp;
    rp.snr_db = snr_db;
    rp.n0 = n0;
    rp.i_bpcu = estimate_information_rate(detector, spec.cfg, chain, n0, spec.rate_symbols,
                                          derive_stream(spec.seed, 0x2000 + pi));
    rp.spectral_eff = spectral_efficiency(rp.i_bpcu, b90_ts / spec.cfg.ts, spec.cfg.ts);
    result.points.push_back(rp);
  }
  return result;
}

std::vector<BandwidthReport> run_bandwidth_table(int64_t n_symbols, uint64_t seed) {
  struct Row {
    std::string name;
    ExperimentSpec spec;
  };
  std::vector<Row> rows;
  rows.push_back({"8-CPFSK m=5", make_preset("8-CPFSK")});
  rows.push_back({"4-CPFSK m=4", make_preset("4-CPFSK", 1.0, 4)});
  rows.push_back({"4-CPFSK m=2", make_preset("4-CPFSK", 1.0, 2)});
  for (double t : {1.0, 1.2, 1.4, 1.6, 1.8, 2.0}) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "FTN-CPM t_cpm=%.1fTs", t);
    rows.push_back({buf, make_preset("FTN-CPM", t)});
  }
  std::vector<BandwidthReport> out;
  for (auto& row : rows) {
    const WaveformConfig pc = spectrum_cfg(row.spec.cfg, row.spec.t_g);
    out.push_back(bandwidth_report(row.name, pc, n_symbols, seed));
  }
  return out;
}

std::string to_csv(const ExperimentResult& r) {
  std::string out = "snr_db,ber,bit_errors,bits,ci_lo,ci_hi\n";
  for (const auto& p : r.points) {
    out += fmt(p.snr_db) + "," + fmt(p.ber) + "," + std::to_string(p.bit_errors) + "," +
           std::to_string(p.bits) + "," + fmt(p.ci_lo) + "," + fmt(p.ci_hi) + "\n";
  }
  return out;
}

std::string to_json(const ExperimentResult& r) {
  json j;
  j["code_version"] = r.code_version;
  j["waveform"] = r.waveform_name;
  j["detector"] = r.detector;
  j["b90_ts"] = r.b90_ts_used;
  j["seed"] = r.seed;
  j["spec_hash"] = r.spec_hash;
  j["points"] = json::array();
  for (const auto& p : r.points) {
    json q;
    q["snr_db"] = p.snr_db;
    q["n0"] = p.n0;
    q["bit_errors"] = p.bit_errors;
    q["bits"] = p.bits;
    q["symbols"] = p.symbols;
    q["ber"] = p.ber;
    q["ci_lo"] = p.ci_lo;
    q["ci_hi"] = p.ci_hi;
    q["stop_reason"] = p.stop_reason;
    j["points"].push_back(q);
  }
  return j.dump(2) + "\n";
}

std::string to_csv(const RateResult& r) {
  std::string out = "snr_db,i_bpcu,spectral_eff\n";
  for (const auto& p : r.points)
    out += fmt(p.snr_db) + "," + fmt(p.i_bpcu) + "," + fmt(p.spectral_eff) + "\n";
  return out;
}

std::string to_json(const RateResult& r) {
  json j;
  j["code_version"] = r.code_version;
  j["waveform"] = r.waveform_name;
  j["b90_ts"] = r.b90_ts_used;
  j["seed"] = r.seed;
  j["spec_hash"] = r.spec_hash;
  j["points"] = json::array();
  for (const auto& p : r.points) {
    json q;
    q["snr_db"] = p.snr_db;
    q["n0"] = p.n0;
    q["i_bpcu"] = p.i_bpcu;
    q["spectral_eff"] = p.spectral_eff;
    j["points"].push_back(q);
  }
  return j.dump(2) + "\n";
}

std::string to_csv(const std::vector<BandwidthReport>& rows) {
  std::string out = "name,t_cpm_over_ts,m,b90_ts,b95_ts,eff90,eff95,osr_eff\n";
  for (const auto& r : rows) {
    out += r.name + "," + fmt(r.t_cpm_over_ts) + "," + std::to_string(r.m_ovr) + "," +
           fmt(r.b90_ts) + "," + fmt(r.b95_ts) + "," + fmt(r.eff90) + "," + fmt(r.eff95) + "," +
           fmt(r.osr_eff) + "\n";
  }
  return out;
}

std::string to_json(const std::vector<BandwidthReport>& rows) {
  json j = json::array();
  for (const auto& r : rows) {
    json q;
    q["name"] = r.name;
    q["t_cpm_over_ts"] = r.t_cpm_over_ts;
    q["m"] = r.m_ovr;
    q["b90_ts"] = r.b90_ts;
    q["b95_ts"] = r.b95_ts;
    q["eff90"] = r.eff90;
    q["eff95"] = r.eff95;
    q["osr_eff"] = r.osr_eff;
    q["n_symbols"] = r.n_symbols;
    q["seed"] = r.seed;
    j.push_back(q);
  }
  return j.dump(2) + "\n";
}

std::string to_csv(const PsdEstimate& psd) {
  std::string out = "freq_per_ts,power\n";
  for (size_t i = 0; i < psd.freqs.size(); ++i)
    out += fmt(psd.freqs[i]) + "," + fmt(psd.power[i]) + "\n";
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace cpmftn
