// SPDX-License-Identifier: Apache-2.0
// dce: command-line driver for sweeps, verification and complexity tables.

#include "dce/dce.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kConfigError = 2;

int cmd_run(const std::string& path) {
  const auto cfg = dce::load_config(path);
  const auto out = dce::run_experiment(cfg);
  std::cout << "wrote " << out.rows << " rows to " << out.results.string() << " and " << out.summary.string() << '\n';
  return kOk;
}

int cmd_verify(const std::string& path) {
  const auto cfg = dce::load_config(path);
  const auto rep = dce::verify(cfg);
  rep.print(std::cout);
  return rep.ok() ? kOk : kVerifyFailed;
}

int cmd_gen_channel(const std::string& path) {
  const auto cfg = dce::load_config(path);
  const auto out = dce::gen_channel(cfg);
  std::cout << "wrote " << out.scenario.string() << ", " << out.h_af.string() << ", " << out.h_ad.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed channel estimation simulator"};
  app.require_subcommand(1);

  std::string run_cfg, verify_cfg, gen_cfg;
  auto* run = app.add_subcommand("run", "Monte-Carlo sweep; writes results.csv and summary.csv");
  run->add_option("config", run_cfg, "JSON config file")->required();
  auto* ver = app.add_subcommand("verify", "Run the checker suite; exit 1 on any failed item");
  ver->add_option("config", verify_cfg, "JSON config file")->required();
  auto* gen = app.add_subcommand("gen-channel", "Write a scenario document and one realization");
  gen->add_option("config", gen_cfg, "JSON config file")->required();

  double n_R = 256, n_C = 1024;
  std::vector<dce::Index> m_values{2, 4, 8, 16};
  std::vector<double> nbar;
  double nbar_r = -1;
  std::string out_path;
  auto* cx = app.add_subcommand("complexity", "Complexity ratio table as CSV");
  cx->add_option("--nr", n_R, "receive antennas N_R")->check(CLI::PositiveNumber);
  cx->add_option("--nc", n_C, "subcarriers N_C")->check(CLI::PositiveNumber);
  cx->add_option("--m", m_values, "cluster counts")->expected(1, -1);
  cx->add_option("--nbar", nbar, "centrally handled column counts (default N_C/100, /20, /10, /5)")->expected(1, -1);
  cx->add_option("--nbar-r", nbar_r, "rows in the EAG uplink-block term (default N_R/2)");
  cx->add_option("-o,--output", out_path, "write to file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(run_cfg);
    if (*ver) return cmd_verify(verify_cfg);
    if (*gen) return cmd_gen_channel(gen_cfg);
    if (*cx) {
      if (nbar.empty()) nbar = {n_C / 100, n_C / 20, n_C / 10, n_C / 5};
      if (nbar_r < 0) nbar_r = n_R / 2;
      if (out_path.empty()) {
        dce::write_complexity_csv(std::cout, n_R, n_C, m_values, nbar, nbar_r);
      } else {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) throw dce::ConfigError(out_path + ": cannot write");
        dce::write_complexity_csv(f, n_R, n_C, m_values, nbar, nbar_r);
      }
      return kOk;
    }
  } catch (const dce::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const dce::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}
