// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scenario documents (versioned JSON) and matrix CSV files.

#include "dce/channel.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace dce {

inline constexpr const char* kScenarioFormat = "dce-scenario";
inline constexpr int kScenarioVersion = 1;

inline nlohmann::json to_json(const ChannelParams& p) {
  return {{"n_r_total", p.n_r_total}, {"n_c", p.n_c},         {"m_clusters", p.m_clusters},
          {"n_paths", p.n_paths},     {"angle_clusters", p.angle_clusters},
          {"angle_spread", p.angle_spread}, {"decay", p.decay}, {"leakage", p.leakage},
          {"seed", p.seed}};
}

inline nlohmann::json scenario_to_json(const ChannelScenario& sc) {
  nlohmann::json taps = nlohmann::json::array();
  for (const auto& t : sc.taps) taps.push_back({{"delay", t.delay}, {"power", t.power}, {"angle_centers", t.angle_centers}});
  return {{"format", kScenarioFormat}, {"version", kScenarioVersion}, {"params", to_json(sc.params)}, {"taps", taps}};
}

/// Rebuilds a scenario by regenerating from the stored parameters and
/// checking that the stored support matches.
inline ChannelScenario scenario_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.value("format", "") == kScenarioFormat, "scenario: not a scenario document");
  require(j.value("version", 0) == kScenarioVersion, "scenario: unsupported version");
  const auto& p = j.at("params");
  ChannelParams params;
  params.n_r_total = p.at("n_r_total").get<Index>();
  params.n_c = p.at("n_c").get<Index>();
  params.m_clusters = p.at("m_clusters").get<Index>();
  params.n_paths = p.at("n_paths").get<Index>();
  params.angle_clusters = p.at("angle_clusters").get<Index>();
  params.angle_spread = p.at("angle_spread").get<Index>();
  params.decay = p.at("decay").get<double>();
  params.leakage = p.at("leakage").get<double>();
  params.seed = p.at("seed").get<std::uint64_t>();
  auto sc = generate_scenario(params);
  const auto& taps = j.at("taps");
  require(taps.size() == sc.taps.size(), "scenario: tap count does not match parameters");
  for (std::size_t k = 0; k < taps.size(); ++k) {
    require(taps[k].at("delay").get<Index>() == sc.taps[k].delay &&
                taps[k].at("angle_centers").get<std::vector<Index>>() == sc.taps[k].angle_centers,
            "scenario: stored support does not match the seed");
  }
  return sc;
}

inline void write_matrix_csv(std::ostream& os, const CMat& m) {
  os << "rows,cols\n" << m.rows() << ',' << m.cols() << '\n';
  os << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) os << ',';
      os << m(i, j).real() << ',' << m(i, j).imag();
    }
    os << '\n';
  }
}

inline CMat read_matrix_csv(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)) && line == "rows,cols", "matrix csv: missing header");
  require(static_cast<bool>(std::getline(is, line)), "matrix csv: missing dimensions");
  Index rows = 0, cols = 0;
  char comma = 0;
  std::istringstream dims(line);
  require(static_cast<bool>(dims >> rows >> comma >> cols) && comma == ',' && rows >= 0 && cols >= 0,
          "matrix csv: bad dimensions");
  CMat m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    require(static_cast<bool>(std::getline(is, line)), "matrix csv: missing row");
    std::istringstream row(line);
    for (Index j = 0; j < cols; ++j) {
      double re = 0, im = 0;
      if (j > 0) require(static_cast<bool>(row >> comma) && comma == ',', "matrix csv: bad separator");
      require(static_cast<bool>(row >> re >> comma >> im) && comma == ',', "matrix csv: bad value");
      m(i, j) = cd(re, im);
    }
  }
  return m;
}

}  // namespace dce
