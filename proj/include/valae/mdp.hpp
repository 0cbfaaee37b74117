#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "valae/rng.hpp"
#include "valae/types.hpp"
#include "json.hpp"

namespace valae {

/// How a cost sample is drawn around its mean.
enum class CostDist {
    Deterministic, ///< sample equals the mean
    TwoPoint,      ///< sample in {c_min, 1}, probabilities matched to the mean
};

std::string to_string(CostDist d);
CostDist cost_dist_from_string(const std::string& s);

/// Ground-truth tabular MDP with a RESET action at index 0.
///
/// Transitions are stored dense, row-major as [s][a][s']. The struct is a plain
/// aggregate so that malformed instances can be built and reported on by validate().
struct TabularMdp {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    StateId s0 = 0;
    double c_min = 1.0;
    double c_reset = 1.0;
    std::vector<double> transitions; // S*A*S
    std::vector<double> cost_means;  // S*A
    std::vector<CostDist> cost_dists; // S*A

    /// Zero-filled MDP with Deterministic costs equal to 1.
    static TabularMdp blank(std::size_t states, std::size_t actions, StateId s0, double c_min,
                            double c_reset);

    std::size_t pair(StateId s, ActionId a) const { return s * num_actions + a; }

    double prob(StateId s, ActionId a, StateId next) const {
        return transitions[pair(s, a) * num_states + next];
    }
    double& prob(StateId s, ActionId a, StateId next) {
        return transitions[pair(s, a) * num_states + next];
    }
    std::span<const double> row(StateId s, ActionId a) const {
        return {transitions.data() + pair(s, a) * num_states, num_states};
    }
    std::span<double> row(StateId s, ActionId a) {
        return {transitions.data() + pair(s, a) * num_states, num_states};
    }
    double cost(StateId s, ActionId a) const { return cost_means[pair(s, a)]; }
    double& cost(StateId s, ActionId a) { return cost_means[pair(s, a)]; }
    CostDist dist(StateId s, ActionId a) const { return cost_dists[pair(s, a)]; }

    /// Makes (s, RESET) a deterministic jump to s0 at cost c_reset, for every s.
    void install_reset();

    bool operator==(const TabularMdp&) const = default;
};

struct ValidationReport {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
    bool mentions(const std::string& needle) const;
};

inline constexpr double kRowTolerance = 1e-12;

/// Lists every violated invariant; never throws.
ValidationReport validate(const TabularMdp& mdp);

/// Throws ValidationError carrying the joined report when validate() is not clean.
void require_valid(const TabularMdp& mdp);

/// M restricted to a known set K, with every unknown state folded into one
/// artificial state x. Local ids: K in ascending order, then x last.
struct MergedMdp {
    TabularMdp model;
    StateSet known;           // K as global ids, ascending
    std::vector<std::optional<StateId>> to_local; // indexed by global id
    StateId x = 0;            // local id of the artificial state

    std::size_t size() const { return model.num_states; }
    StateId global(StateId local) const { return known.at(local); }
    /// Local id of a global state; states outside K map to x.
    StateId local(StateId global_state) const;
};

MergedMdp merge(const TabularMdp& mdp, const StateSet& known);

/// Single-owner simulation cursor. Works against any TabularMdp, including the
/// model of a MergedMdp; callers translate current_state when switching models.
struct SimHandle {
    StateId current_state = 0;
    CounterRng rng;
    std::uint64_t step_counter = 0;
    double cumulative_cost = 0.0;

    SimHandle() = default;
    SimHandle(StateId start, CounterRng stream) : current_state(start), rng(stream) {}
};

struct Transition {
    StateId next;
    double cost;
};

/// One environment interaction from sim.current_state.
Transition step(SimHandle& sim, const TabularMdp& mdp, ActionId action);

nlohmann::json to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const nlohmann::json& j);
TabularMdp load_mdp(const std::string& path);
void save_mdp(const TabularMdp& mdp, const std::string& path);

} // namespace valae
