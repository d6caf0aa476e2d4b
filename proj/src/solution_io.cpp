#include "rsvlc/bench.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>

namespace rsvlc::bench {

namespace {

using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

json solution_to_json(const rates::BeamformingSolution& sol, const std::vector<scene::ChannelEstimate>& estimates,
                      const std::string& scheme) {
  json j;
  j["scheme"] = scheme;
  j["mmf_rate"] = sol.mmf_value;
  j["has_common_stream"] = sol.has_common_stream;
  j["noise_power"] = sol.model.noise_power;
  j["tau"] = vec_to_json(sol.model.tau);
  j["variance"] = vec_to_json(sol.model.variance);
  json beams = json::array();
  for (Eigen::Index i = 0; i < sol.beams.cols(); ++i) {
    beams.push_back(vec_to_json(sol.beams.col(i)));
  }
  j["beams"] = beams;
  j["common_shares"] = vec_to_json(sol.common_shares);
  j["per_user_private"] = vec_to_json(sol.per_user_private);
  j["per_user_common"] = vec_to_json(sol.per_user_common);
  j["common_bound"] = sol.common_bound;
  json est = json::array();
  for (const auto& e : estimates) {
    est.push_back({{"h_hat", vec_to_json(e.h_hat)}, {"v", e.v}});
  }
  j["estimates"] = est;
  const auto& d = sol.diagnostics;
  json trace = json::array();
  for (const auto& r : d.trace) {
    trace.push_back({{"n", r.iteration},
                     {"t", r.t},
                     {"penalty", r.penalty},
                     {"objective", r.objective},
                     {"start_objective", r.start_objective},
                     {"max_rank_gap", r.max_rank_gap},
                     {"rho", r.rho},
                     {"newton", r.newton_steps}});
  }
  j["diagnostics"] = {{"trace", trace},
                      {"rank_gaps", d.rank_gaps},
                      {"extraction_scale", d.extraction_scale},
                      {"solver_t", d.solver_t},
                      {"converged", d.converged},
                      {"origin", d.origin},
                      {"outer_iterations", d.outer_iterations}};
  return j;
}

void solution_from_json(const json& j, rates::BeamformingSolution& sol, std::vector<scene::ChannelEstimate>& estimates) {
  try {
    sol = {};
    sol.mmf_value = j.at("mmf_rate").get<double>();
    sol.has_common_stream = j.at("has_common_stream").get<bool>();
    sol.model.noise_power = j.at("noise_power").get<double>();
    sol.model.tau = vec_from_json(j.at("tau"));
    sol.model.variance = vec_from_json(j.at("variance"));
    const auto& beams = j.at("beams");
    if (beams.empty()) {
      throw std::invalid_argument("solution: no beams");
    }
    const auto n = static_cast<Eigen::Index>(beams.front().size());
    sol.beams.resize(n, static_cast<Eigen::Index>(beams.size()));
    for (std::size_t i = 0; i < beams.size(); ++i) {
      const Eigen::VectorXd col = vec_from_json(beams[i]);
      if (col.size() != n) {
        throw std::invalid_argument("solution: ragged beam matrix");
      }
      sol.beams.col(static_cast<Eigen::Index>(i)) = col;
    }
    sol.common_shares = vec_from_json(j.at("common_shares"));
    sol.per_user_private = vec_from_json(j.at("per_user_private"));
    sol.per_user_common = vec_from_json(j.at("per_user_common"));
    sol.common_bound = j.at("common_bound").get<double>();
    estimates.clear();
    for (const auto& e : j.at("estimates")) {
      scene::ChannelEstimate ce;
      ce.h_hat = vec_from_json(e.at("h_hat"));
      ce.v = e.at("v").get<double>();
      estimates.push_back(ce);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("solution file: ") + e.what());
  }
  if (estimates.size() != sol.num_users() || static_cast<std::size_t>(sol.model.tau.size()) != sol.num_users() + 1) {
    throw std::invalid_argument("solution file: user counts disagree");
  }
}

}  // namespace rsvlc::bench
