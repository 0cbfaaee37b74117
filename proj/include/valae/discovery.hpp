#pragma once

#include <map>

#include "valae/learner.hpp"
#include "valae/oracle.hpp"
#include "valae/visgo.hpp"

namespace valae {

struct DiscoveryConfig {
    double L = 1.0;
    double delta = 0.1;
    double scale = 1.0;
};

struct DiscoveryResult {
    StateSet K;
    std::map<StateId, Policy> policies; // global ids, each restricted on K
    double cost_spent = 0.0;
    std::uint64_t steps = 0;
    std::size_t passes = 0;
};

/// Round-based optimistic expansion of a known set. Each pass tops up the samples of every
/// known pair to a doubling target, then tests every observed state outside K with an optimistic
/// value iteration towards it; states whose optimistic cost from s0 is at most L join K with the
/// greedy policy. Stops after a pass that adds nothing. Samples are not returned.
///
/// `sim` walks the true MDP in global ids.
DiscoveryResult discover(SimHandle& sim, const TabularMdp& mdp, const DiscoveryConfig& cfg,
                         CostLedger* ledger = nullptr);

} // namespace valae
