#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "perclab/cluster.hpp"
#include "perclab/parallel.hpp"
#include "perclab/sampler.hpp"

namespace perclab {

struct EnsembleMember {
  Configuration config;
  ClusterLabeling labeling;
};

// Replica-indexed configurations with labelings. When conditioned, each
// replica is redrawn (fresh salt) until the origin lies on the giant
// cluster, the finite-volume stand-in for conditioning on Omega_0; the
// acceptance fraction doubles as the P(Omega_0) estimate.
struct Ensemble {
  std::vector<EnsembleMember> members;
  std::int64_t attempts = 0;
  bool conditioned = false;

  double p_omega0() const {
    if (!conditioned || attempts == 0)
      throw std::logic_error("p_omega0: ensemble is not conditioned");
    return static_cast<double>(members.size()) / static_cast<double>(attempts);
  }
};

inline constexpr std::int64_t kMaxConditioningAttempts = 100000;

inline Ensemble make_ensemble(const BoxSpec& box, const SamplerSpec& spec,
                              std::int64_t replicas, bool condition_on_origin,
                              int workers = 1) {
  if (replicas < 1) throw std::domain_error("make_ensemble: replicas must be >= 1");
  {
    const auto errs = validate_sampler(box, spec);
    if (!errs.empty()) throw std::domain_error("make_ensemble: " + errs.front());
  }

  Ensemble out;
  out.conditioned = condition_on_origin;
  std::vector<std::optional<EnsembleMember>> slots(
      static_cast<std::size_t>(replicas));
  std::vector<std::int64_t> tries(static_cast<std::size_t>(replicas), 0);

  parallel_for(replicas, workers, [&](std::int64_t r) {
    SamplerSpec local = spec;
    local.replica = static_cast<std::uint64_t>(r);
    for (std::int64_t salt = 0;; ++salt) {
      if (salt >= kMaxConditioningAttempts)
        throw std::runtime_error(
            "make_ensemble: conditioning on the origin keeps failing; "
            "is the model supercritical?");
      auto config = sample(box, local, static_cast<std::uint64_t>(salt));
      auto labeling = label_clusters(config);
      ++tries[static_cast<std::size_t>(r)];
      if (!condition_on_origin || labeling.on_giant(0)) {
        slots[static_cast<std::size_t>(r)] =
            EnsembleMember{std::move(config), std::move(labeling)};
        return;
      }
    }
  });

  out.members.reserve(static_cast<std::size_t>(replicas));
  for (auto& slot : slots) out.members.push_back(std::move(*slot));
  for (auto t : tries) out.attempts += t;
  return out;
}

}  // namespace perclab
