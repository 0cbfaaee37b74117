#pragma once

#include <algorithm>
#include <vector>

#include "valae/mdp.hpp"

namespace valae {

/// Value per state for a designated goal. Entries may be kUnreachable.
struct ValueTable {
    StateId goal = 0;
    std::vector<double> values;

    double operator[](StateId s) const { return values[s]; }
    double& operator[](StateId s) { return values[s]; }
    std::size_t size() const { return values.size(); }
};

struct QTable {
    StateId goal = 0;
    std::size_t num_actions = 0;
    std::vector<double> q; // S*A, row-major

    double operator()(StateId s, ActionId a) const { return q[s * num_actions + a]; }
    double& operator()(StateId s, ActionId a) { return q[s * num_actions + a]; }
};

/// Stationary deterministic policy. States outside `restriction` always take RESET.
struct Policy {
    std::vector<ActionId> actions;
    StateSet restriction;

    ActionId operator()(StateId s) const { return actions.at(s); }

    /// Copies `actions` and forces RESET outside `k`.
    static Policy restricted(std::vector<ActionId> actions, const StateSet& k);
};

struct OptimalSolution {
    ValueTable V;
    QTable Q;
};

inline constexpr double kDefaultTol = 1e-10;

/// Optimal SSP values and Q-values for `goal`. States with no proper policy get kUnreachable.
OptimalSolution optimal_values(const TabularMdp& mdp, StateId goal, double tol = kDefaultTol);

/// Lowest-index argmin of Q at each state; the goal and unreachable states take RESET.
Policy greedy_policy(const QTable& q, const StateSet& restriction);

/// Copy of `mdp` in which every state outside K can only RESET.
TabularMdp restrict_to(const TabularMdp& mdp, const StateSet& k);

/// Values of the best policy restricted on K for `goal`.
ValueTable restricted_values(const TabularMdp& mdp, const StateSet& k, StateId goal,
                             double tol = kDefaultTol);

struct PolicyValue {
    ValueTable V;   // kUnreachable where the goal is not reached almost surely
    bool proper;    // goal reached almost surely from every state
};

/// Exact evaluation by a direct linear solve on the states from which the policy is proper.
PolicyValue policy_value(const TabularMdp& mdp, const Policy& policy, StateId goal);

/// Sup-norm residual of V against the optimal Bellman operator, over finite entries.
double bellman_residual(const TabularMdp& mdp, const ValueTable& v);

/// Relative slack used when comparing an exact value to the radius L.
inline bool within_radius(double value, double L) {
    return !is_unreachable(value) && value <= L + 1e-9 * std::max(1.0, L);
}

/// Greedy fixed point K_{i+1} = K_i + {s : V*_{K_i,s}(s0) <= L}, starting from {s0}.
StateSet controllable_set(const TabularMdp& mdp, double L);

/// Largest optimal goal distance on the merged MDP, over goals in K and sources in K plus x.
/// x is left out when K = S, since it then stands for no state.
double b_star(const TabularMdp& mdp, const StateSet& k);

} // namespace valae
