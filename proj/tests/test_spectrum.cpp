// PSD estimation, containment bandwidth and SNR algebra.

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cpmftn/spectrum.hpp"

using namespace cpmftn;
constexpr double kPi = std::numbers::pi;

namespace {
WaveformConfig msk_cfg(int d = 32) {
  WaveformConfig cfg;
  cfg.m_cpm = 2;
  cfg.k_num = 1;
  cfg.p_den = 2;
  cfg.t_cpm = 1.0;
  cfg.m = 1;
  cfg.d = d;
  return cfg;
}

WaveformConfig ftn_cfg(double t_cpm, int d = 32) {
  WaveformConfig cfg;
  cfg.m_cpm = 2;
  cfg.k_num = 1;
  cfg.p_den = 4;
  cfg.t_cpm = t_cpm;
  cfg.phi0 = kPi / 4;
  cfg.m = 1;
  cfg.d = d;
  return cfg;
}
}  // namespace

TEST_CASE("constant-phase signals are pure tones on the expected bin") {
  // In the tilted representation the all-zero branch is flat, so a constant
  // symbol stream is a tone whose frequency directly reads off the axis:
  // n_IF for x=0 and h*x/Ts on top of that for higher branches. Segment and
  // grid are chosen so the tones fall exactly on bins.
  auto check_tone = [](const WaveformConfig& cfg, const std::vector<int>& x, double tone) {
    WelchParams wp;
    wp.segment = 4096;
    const PsdEstimate psd = estimate_psd(cfg, x, wp);
    size_t peak = 0;
    double total = 0.0;
    for (size_t i = 0; i < psd.power.size(); ++i) {
      total += psd.power[i];
      if (psd.power[i] > psd.power[peak]) peak = i;
    }
    CHECK(psd.freqs[peak] == doctest::Approx(tone).epsilon(1e-9));
    double near = 0.0;
    for (size_t i = peak - 1; i <= peak + 1; ++i) near += psd.power[i];
    CHECK(near / total > 0.99);
  };
  WaveformConfig cfg = ftn_cfg(1.0);
  cfg.n_if = 0.125;
  check_tone(cfg, std::vector<int>(2048, 0), 0.125);
  check_tone(cfg, std::vector<int>(2048, 1), 0.125 + 0.25);  // + 2h per Ts
  cfg.n_if = 0.0;
  check_tone(cfg, std::vector<int>(2048, 0), 0.0);
}

TEST_CASE("psd integral matches total_power and is non-negative") {
  const WaveformConfig cfg = ftn_cfg(2.0);
  const PsdEstimate psd = estimate_psd(cfg, 1 << 12, 3);
  double integral = 0.0;
  const double df = psd.freqs[1] - psd.freqs[0];
  for (size_t i = 0; i + 1 < psd.power.size(); ++i)
    integral += 0.5 * (psd.power[i] + psd.power[i + 1]) * df;
  CHECK(integral == doctest::Approx(psd.total_power).epsilon(1e-3));
  for (double p : psd.power) CHECK(p >= 0.0);
  // unit-amplitude signal: total power is 1
  CHECK(psd.total_power == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("MSK containment matches the classical values") {
  // external sanity anchors: B90*Tb ~ 0.78, B99*Tb ~ 1.18 for MSK
  const PsdEstimate psd = estimate_psd(msk_cfg(), 1 << 15, 5);
  const double b90 = containment_bandwidth(psd, 0.90);
  const double b99 = containment_bandwidth(psd, 0.99);
  CHECK(b90 == doctest::Approx(0.78).epsilon(0.05));
  CHECK(b99 == doctest::Approx(1.18).epsilon(0.05));
}

TEST_CASE("containment is monotone in the fraction") {
  const PsdEstimate psd = estimate_psd(ftn_cfg(1.0), 1 << 13, 5);
  double prev = 0.0;
  for (double f : {0.5, 0.8, 0.9, 0.95, 0.99}) {
    const double b = containment_bandwidth(psd, f);
    CHECK(b >= prev);
    prev = b;
  }
  CHECK_THROWS_AS(containment_bandwidth(psd, 1.5), std::invalid_argument);
}

TEST_CASE("frequency shift moves the band but not its width") {
  WaveformConfig a = ftn_cfg(1.0);
  WaveformConfig b = a;
  b.n_if = 0.37;
  const PsdEstimate pa = estimate_psd(a, 1 << 13, 9);
  const PsdEstimate pb = estimate_psd(b, 1 << 13, 9);
  const double df = pa.freqs[1] - pa.freqs[0];
  CHECK(std::abs(containment_bandwidth(pa, 0.9) - containment_bandwidth(pb, 0.9)) <= 2 * df);
}

TEST_CASE("estimator stability: doubling the symbols moves B90 < 1%") {
  const double b1 = containment_bandwidth(estimate_psd(ftn_cfg(1.0), 1 << 14, 21), 0.9);
  const double b2 = containment_bandwidth(estimate_psd(ftn_cfg(1.0), 1 << 15, 22), 0.9);
  CHECK(std::abs(b2 - b1) / b1 < 0.01);
}

TEST_CASE("segment longer than the signal is rejected") {
  WelchParams wp;
  wp.segment = 1 << 14;
  CHECK_THROWS_AS(estimate_psd(ftn_cfg(1.0), 64, 1, wp), std::invalid_argument);
}

TEST_CASE("snr / noise-density conversions") {
  CHECK(snr_to_noise_density(0.0, 1.0, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(snr_to_noise_density(10.0, 1.0, 1.0, 0.5) == doctest::Approx(0.2).epsilon(1e-12));
  for (double snr : {-7.0, 0.0, 3.3, 12.04}) {
    const double n0 = snr_to_noise_density(snr, 2.0, 1.0, 0.35);
    CHECK(noise_density_to_snr(n0, 2.0, 1.0, 0.35) == doctest::Approx(snr).epsilon(1e-12));
  }
}

TEST_CASE("efficiency and effective oversampling algebra") {
  CHECK(spectral_efficiency(0.0, 0.5, 1.0) == 0.0);
  CHECK(effective_osr(5, 3.0 / 3.467, 1.0) == doctest::Approx(5.778).epsilon(1e-3));
  CHECK(effective_osr(1, 1.0 / 3.891, 1.0) == doctest::Approx(3.891).epsilon(1e-12));
}

TEST_CASE("bandwidth report basic consistency") {
  const BandwidthReport rep = bandwidth_report("ftn", ftn_cfg(2.0, 40), 1 << 14, 13);
  CHECK(rep.b95_ts >= rep.b90_ts);
  CHECK(rep.b90_ts > 0.0);
  CHECK(rep.eff90 == doctest::Approx(1.0 / rep.b90_ts).epsilon(1e-12));
  CHECK(rep.osr_eff == doctest::Approx(rep.eff90).epsilon(1e-12));
}
