#pragma once

#include "rsvlc/bench.hpp"

#include <Eigen/Dense>

#include <random>
#include <string>

namespace rsvlc::testing {

inline bench::Config preset(const std::string& name) {
  return bench::load_config_file(std::string(RSVLC_CONFIG_DIR) + "/" + name);
}

inline scene::Scenario scenario_from(const std::string& text) { return bench::parse_config(text).scenario; }

inline Eigen::MatrixXd random_psd(std::mt19937_64& rng, Eigen::Index n, Eigen::Index rank) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, rank);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a.data()[i] = g(rng);
  }
  return a * a.transpose();
}

}  // namespace rsvlc::testing
