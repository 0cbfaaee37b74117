#pragma once

#include <cstdint>
#include <vector>

#include "valae/mdp.hpp"
#include "valae/oracle.hpp"

namespace valae {

/// Empirical statistics over the merged state space (K in local ids, then x).
class LearnerCounts {
  public:
    LearnerCounts() = default;
    LearnerCounts(std::size_t num_states, std::size_t num_actions, StateId s0, StateId x,
                  double c_reset);

    static LearnerCounts for_merged(const MergedMdp& m);

    std::size_t num_states() const { return S_; }
    std::size_t num_actions() const { return A_; }
    StateId s0() const { return s0_; }
    StateId x() const { return x_; }
    double c_reset() const { return c_reset_; }

    std::uint64_t N(StateId s, ActionId a) const { return N_[pair(s, a)]; }
    std::uint64_t n(StateId s, ActionId a) const { return n_[pair(s, a)]; }
    std::uint64_t N(StateId s, ActionId a, StateId t) const { return Nsas_[pair(s, a) * S_ + t]; }
    double theta(StateId s, ActionId a) const { return theta_[pair(s, a)]; }
    double c_hat(StateId s, ActionId a) const { return c_hat_[pair(s, a)]; }
    double p_hat(StateId s, ActionId a, StateId t) const { return P_hat_[pair(s, a) * S_ + t]; }
    std::span<const double> p_hat_row(StateId s, ActionId a) const {
        return {P_hat_.data() + pair(s, a) * S_, S_};
    }

    /// Adds one sample without touching the snapshot (n, c_hat, P_hat).
    void add_sample(StateId s, ActionId a, StateId t, double cost);

    /// Snapshot of (s,a): n <- N, P_hat <- N(s,a,.)/N, c_hat <- factor * theta / N, theta <- 0.
    /// The x rows keep c_hat = c_reset and P_hat = point mass at s0.
    void snapshot(StateId s, ActionId a, double cost_factor);

    /// Sets the x rows as after burn-in: N = n = phi, all mass on s0, c_hat = c_reset.
    void init_artificial_rows(std::uint64_t phi);

    /// Test hook for building arbitrary snapshots.
    void set_snapshot(StateId s, ActionId a, std::uint64_t n, std::vector<double> p_hat,
                      double c_hat);

    nlohmann::json to_json() const;

  private:
    std::size_t pair(StateId s, ActionId a) const { return s * A_ + a; }
    void check(StateId s, ActionId a) const;

    std::size_t S_ = 0, A_ = 0;
    StateId s0_ = 0, x_ = 0;
    double c_reset_ = 1.0;
    std::vector<std::uint64_t> N_, n_, Nsas_;
    std::vector<double> theta_, c_hat_, P_hat_;
};

inline bool is_power_of_two(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

struct TriggerState {
    long j = 0;
    std::uint64_t fired = 0;
};

/// Records (s,a,s',cost). Fires when the new N(s,a) is a power of two: j += 1, c_hat <- 2 theta/N,
/// theta <- 0 and the P_hat row refreshed. Returns whether it fired.
bool record_transition(LearnerCounts& counts, TriggerState& trigger, StateId s, ActionId a,
                       StateId next, double cost);

/// psi = 12000 L^2 |K| c_min^-2 ln(|K| A / delta).
double burn_in_psi(double L, std::size_t k, std::size_t num_actions, double delta, double c_min);

/// phi = 2^ceil(log2(scale * psi)), at least 1.
std::uint64_t burn_in_phi(double scale_times_psi);

/// Safety cap on the steps of one navigation or episode.
std::uint64_t step_cap(double L, double c_min);

/// Runs a policy on `mdp` from the handle's state until `target` is reached. Returns steps taken.
/// `on_step` sees every (s, a, s', cost). Throws RuntimeHardError past `cap` steps.
template <class OnStep>
std::uint64_t navigate(SimHandle& sim, const TabularMdp& mdp, const Policy& policy,
                       StateId target, std::uint64_t cap, OnStep&& on_step) {
    std::uint64_t steps = 0;
    while (sim.current_state != target) {
        if (steps >= cap)
            throw RuntimeHardError("navigation to state " + std::to_string(target) +
                                   " exceeded the step cap of " + std::to_string(cap) +
                                   " (stuck near state " + std::to_string(sim.current_state) +
                                   ")");
        const StateId s = sim.current_state;
        const ActionId a = policy(s);
        const auto tr = step(sim, mdp, a);
        on_step(s, a, tr.next, tr.cost);
        ++steps;
    }
    return steps;
}

/// Learner-side running sum of every cost sample, kept apart from the simulator's own counter.
struct CostLedger {
    double total = 0.0;
    std::uint64_t samples = 0;

    void add(double c) {
        total += c;
        ++samples;
    }
};

struct BurnInConfig {
    double L = 1.0;
    double delta = 0.1;
    double scale = 1.0;
};

struct BurnInResult {
    LearnerCounts counts;
    std::uint64_t phi = 0;
    double psi = 0.0;
    std::uint64_t steps = 0;
    double cost = 0.0;
};

/// Collects phi fresh samples of every (s,a) in K x A on the merged model, navigating with
/// `nav[s]` (local ids, one policy per known state) before each sample.
BurnInResult burn_in(SimHandle& sim, const MergedMdp& merged, const std::vector<Policy>& nav,
                     const BurnInConfig& cfg, CostLedger* ledger = nullptr);

} // namespace valae
