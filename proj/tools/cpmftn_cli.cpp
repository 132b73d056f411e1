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

// Experiment CLI: seeded BER / rate sweeps, the containment-bandwidth table
// and PSD dumps. Exit codes: 0 success, 2 validation error, 3 resource cap.

#include <chrono>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cpmftn/detection.hpp"
#include "cpmftn/experiments.hpp"
#include "cpmftn/rng.hpp"

namespace {

struct CommonOpts {
  std::string spec_path;
  std::string out_path;
  std::string format = "csv";
  std::optional<uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts* opt, bool spec_required = true) {
  auto* s = cmd->add_option("--spec", opt->spec_path, "experiment spec file (JSON)");
  if (spec_required) s->required();
  cmd->add_option("--out", opt->out_path, "output file (stdout when omitted)");
  cmd->add_option("--format", opt->format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--seed", opt->seed, "override the spec seed");
}

cpmftn::ExperimentSpec load(const CommonOpts& opt) {
  cpmftn::ExperimentSpec spec = cpmftn::load_spec(opt.spec_path);
  if (opt.seed) spec.seed = *opt.seed;
  return spec;
}

void emit(const CommonOpts& opt, const std::string& content) {
  if (opt.out_path.empty())
    std::cout << content;
  else
    cpmftn::write_file(opt.out_path, content);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CPM/FTN 1-bit link simulator"};
  app.require_subcommand(1);

  CommonOpts ber_opt, rate_opt, bw_opt, psd_opt;
  auto* ber = app.add_subcommand("ber", "Monte Carlo BER sweep over the spec's SNR grid");
  add_common(ber, &ber_opt);
  auto* rate = app.add_subcommand("rate", "information rate / spectral efficiency sweep");
  add_common(rate, &rate_opt);
  auto* bw = app.add_subcommand("bandwidth", "containment-bandwidth table for the preset rows");
  add_common(bw, &bw_opt, false);
  int64_t bw_symbols = 1 << 16;
  uint64_t bw_seed = 7;
  bw->add_option("--symbols", bw_symbols, "symbols per PSD estimate");
  bw->add_option("--table-seed", bw_seed, "PSD seed");
  auto* psd = app.add_subcommand("psd", "power spectral density of the spec's waveform");
  add_common(psd, &psd_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const auto started = std::chrono::steady_clock::now();
  try {
    if (*ber) {
      const auto spec = load(ber_opt);
      const auto result = cpmftn::run_ber_sweep(spec);
      emit(ber_opt, ber_opt.format == "csv" ? to_csv(result) : to_json(result));
    } else if (*rate) {
      const auto spec = load(rate_opt);
      const auto result = cpmftn::run_rate_sweep(spec);
      emit(rate_opt, rate_opt.format == "csv" ? to_csv(result) : to_json(result));
    } else if (*bw) {
      if (bw_opt.seed) bw_seed = *bw_opt.seed;
      const auto rows = cpmftn::run_bandwidth_table(bw_symbols, bw_seed);
      emit(bw_opt, bw_opt.format == "csv" ? to_csv(rows) : to_json(rows));
    } else if (*psd) {
      const auto spec = load(psd_opt);
      const auto psd_est = cpmftn::estimate_psd(spec.cfg, spec.psd_symbols,
                                                cpmftn::derive_stream(spec.seed, 0xB90));
      emit(psd_opt, to_csv(psd_est));
    }
  } catch (const cpmftn::resource_cap_error& e) {
    std::cerr << "resource cap: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  const auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
  std::cerr << "done in " << elapsed.count() / 1000.0 << " s\n";
  return 0;
}
