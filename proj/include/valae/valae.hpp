#pragma once

#include <functional>
#include <map>
#include <string>

#include "valae/discovery.hpp"
#include "valae/learner.hpp"
#include "valae/oracle.hpp"
#include "valae/visgo.hpp"

namespace valae {

enum class Mode { AX, MultiGoalSSP };

struct ValaeConfig {
    double eps = 0.5;
    double delta = 0.1;
    double L = 1.0;
    Mode mode = Mode::AX;
    StateSet goals; // global ids, MultiGoalSSP only
    double scale = 1.0;

    double eps_prime() const { return eps / 3.0; }
    double B() const { return 10.0 * L; }
    void validate() const;
};

/// ceil(5 + log2(1/c_min)).
long initial_trigger_index(double c_min);

/// ceil(scale * (2048/e^2) ln^2(256/e) ln(2K/delta)) with e = eps/3, at least 1.
std::uint64_t episodes_per_round(double eps, double delta, std::size_t k, double scale);

/// 2^-j / (K' A), floored at 1e-12 so it stays above double round-off.
double vi_tolerance(long j, std::size_t k_dagger, std::size_t num_actions);

enum class RoundOutcome { Failure, Skipped, Success };
std::string to_string(RoundOutcome o);

struct RoundRecord {
    std::size_t index = 0;
    StateId goal = 0; // global id
    RoundOutcome outcome = RoundOutcome::Failure;
    std::uint64_t episodes_completed = 0;
    double tau_hat = 0.0;
    std::vector<double> episode_costs; // tau_hat_k, including a partial last episode
    double v_s0 = 0.0;
    double regret = 0.0;
    long trigger_index = 0;
    std::size_t visgo_iterations = 0;
};

/// Sum over rounds and episodes of (episode cost - V_round(s0)).
double regret_total(const std::vector<RoundRecord>& trace);

/// Lowest id first.
StateId select_next_goal(const StateSet& remaining);

struct AxResult {
    StateSet K;
    std::map<StateId, Policy> policies; // global ids, restricted on K
    std::vector<RoundRecord> trace;
    StateSet unreachable_goals; // MultiGoalSSP goals outside K
    double C_T = 0.0;            // learner-side ledger of every cost sample
    std::uint64_t cost_samples = 0;
    std::uint64_t steps = 0;
    double discovery_cost = 0.0;
    double burn_in_cost = 0.0;
    std::uint64_t phi = 0;
    std::uint64_t lambda = 0;
    std::uint64_t triggers = 0;
    std::size_t rounds_fail = 0, rounds_skip = 0, rounds_success = 0;
    double regret = 0.0;

    std::size_t rounds_total() const { return trace.size(); }
};

/// Optional instrumentation; called after every phase (a) planning step.
struct ValaeHooks {
    std::function<void(const MergedMdp&, StateId goal_local, const VisgoOutput&)> on_visgo;
};

/// Full pipeline on the true MDP: discovery, burn-in on the merged model, then rounds.
AxResult run_valae(SimHandle& sim, const TabularMdp& mdp, const ValaeConfig& cfg,
                   const ValaeHooks& hooks = {});

nlohmann::json to_json(const RoundRecord& r);
nlohmann::json to_json(const AxResult& r);

} // namespace valae
