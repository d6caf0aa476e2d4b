#include "rsvlc/rates.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace rsvlc::rates {

namespace {

constexpr std::size_t kChunk = 64;

struct ChunkResult {
  double private_margin = std::numeric_limits<double>::infinity();
  double common_margin = std::numeric_limits<double>::infinity();
};

ChunkResult run_chunk(std::span<const scene::ChannelEstimate> estimates, const BeamformingSolution& sol,
                      std::size_t begin, std::size_t end, std::uint64_t seed, std::uint64_t chunk) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
  std::mt19937_64 rng(seq);
  ChunkResult r;
  const double share_sum = sol.common_shares.size() > 0 ? sol.common_shares.sum() : 0.0;
  for (std::size_t s = begin; s < end; ++s) {
    for (std::size_t u = 0; u < estimates.size(); ++u) {
      const auto& est = estimates[u];
      const Eigen::VectorXd dh = sample_ball(rng, est.h_hat.size(), est.v);
      const double rp = private_rate_lb(est.h_hat, dh, u, sol.beams, sol.model);
      const double ck = sol.common_shares.size() > 0 ? sol.common_shares(static_cast<Eigen::Index>(u)) : 0.0;
      r.private_margin = std::min(r.private_margin, ck + rp - sol.mmf_value);
      if (sol.has_common_stream) {
        const double rc = common_rate_lb(est.h_hat, dh, sol.beams, sol.model);
        r.common_margin = std::min(r.common_margin, rc - share_sum);
      }
    }
  }
  return r;
}

void check(std::span<const scene::ChannelEstimate> estimates, const BeamformingSolution& sol) {
  if (estimates.size() != sol.num_users()) {
    throw std::invalid_argument("worst_case_validate: estimate count does not match beams");
  }
}

MarginReport reduce(const std::vector<ChunkResult>& parts, std::size_t samples, bool has_common) {
  MarginReport rep;
  rep.samples = samples;
  double pm = std::numeric_limits<double>::infinity();
  double cm = std::numeric_limits<double>::infinity();
  for (const auto& p : parts) {
    pm = std::min(pm, p.private_margin);
    cm = std::min(cm, p.common_margin);
  }
  rep.private_margin = parts.empty() ? 0.0 : pm;
  // Without a common stream there is no common decoding constraint to violate.
  rep.common_margin = (parts.empty() || !has_common) ? 0.0 : cm;
  return rep;
}

}  // namespace

MarginReport worst_case_validate(std::span<const scene::ChannelEstimate> estimates,
                                 const BeamformingSolution& solution, std::size_t samples, std::uint64_t seed) {
  check(estimates, solution);
  const std::size_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<ChunkResult> parts(chunks);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const auto cu = static_cast<std::size_t>(c);
    parts[cu] = run_chunk(estimates, solution, cu * kChunk, std::min(samples, (cu + 1) * kChunk), seed, cu);
  }
  return reduce(parts, samples, solution.has_common_stream);
}

MarginReport worst_case_validate_serial(std::span<const scene::ChannelEstimate> estimates,
                                        const BeamformingSolution& solution, std::size_t samples,
                                        std::uint64_t seed) {
  check(estimates, solution);
  const std::size_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<ChunkResult> parts(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    parts[c] = run_chunk(estimates, solution, c * kChunk, std::min(samples, (c + 1) * kChunk), seed, c);
  }
  return reduce(parts, samples, solution.has_common_stream);
}

}  // namespace rsvlc::rates
