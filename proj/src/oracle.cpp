#include "valae/oracle.hpp"

#include <cmath>
#include <Eigen/Dense>

namespace valae {

Policy Policy::restricted(std::vector<ActionId> actions, const StateSet& k) {
    Policy p{std::move(actions), normalize_set(k)};
    for (StateId s = 0; s < p.actions.size(); ++s)
        if (!set_contains(p.restriction, s)) p.actions[s] = kReset;
    return p;
}

namespace {

// Q(s,a) = c(s,a) + P(.|s,a) V, with 0 * inf treated as 0.
double q_value(const TabularMdp& mdp, const std::vector<double>& v, StateId s, ActionId a) {
    double acc = mdp.cost(s, a);
    auto r = mdp.row(s, a);
    for (StateId t = 0; t < r.size(); ++t) {
        if (r[t] == 0.0) continue;
        if (is_unreachable(v[t])) return kUnreachable;
        acc += r[t] * v[t];
    }
    return acc;
}

bool support_within(const TabularMdp& mdp, StateId s, ActionId a, const std::vector<char>& in) {
    auto r = mdp.row(s, a);
    for (StateId t = 0; t < r.size(); ++t)
        if (r[t] > 0.0 && !in[t]) return false;
    return true;
}

bool support_hits(const TabularMdp& mdp, StateId s, ActionId a, const std::vector<char>& in) {
    auto r = mdp.row(s, a);
    for (StateId t = 0; t < r.size(); ++t)
        if (r[t] > 0.0 && in[t]) return true;
    return false;
}

struct Winning {
    std::vector<char> in;          // goal reachable almost surely
    std::vector<ActionId> witness; // an action that keeps making progress
};

// Greatest set W such that, using only actions whose support stays in W, the goal is reached
// with positive probability from every state of W. Those are exactly the states with a proper policy.
Winning almost_sure_set(const TabularMdp& mdp, StateId goal) {
    const std::size_t S = mdp.num_states, A = mdp.num_actions;
    std::vector<char> w(S, 1);
    std::vector<ActionId> witness(S, kReset);
    for (;;) {
        std::vector<char> r(S, 0);
        r[goal] = 1;
        bool grew = true;
        while (grew) {
            grew = false;
            for (StateId s = 0; s < S; ++s) {
                if (!w[s] || r[s]) continue;
                for (ActionId a = 0; a < A; ++a) {
                    if (support_within(mdp, s, a, w) && support_hits(mdp, s, a, r)) {
                        r[s] = 1;
                        witness[s] = a;
                        grew = true;
                        break;
                    }
                }
            }
        }
        if (r == w) return {w, witness};
        w = r;
    }
}

// Exact policy evaluation restricted to `live` (goal excluded), where `live` is closed under
// the policy's transitions apart from the goal. Returns false if the system is singular.
bool solve_linear(const TabularMdp& mdp, const std::vector<ActionId>& pi,
                  const std::vector<char>& live, StateId goal, std::vector<double>& v) {
    const std::size_t S = mdp.num_states;
    std::vector<int> idx(S, -1);
    int n = 0;
    for (StateId s = 0; s < S; ++s)
        if (live[s] && s != goal) idx[s] = n++;
    v.assign(S, kUnreachable);
    v[goal] = 0.0;
    if (n == 0) return true;
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rhs(n);
    for (StateId s = 0; s < S; ++s) {
        if (idx[s] < 0) continue;
        rhs(idx[s]) = mdp.cost(s, pi[s]);
        auto r = mdp.row(s, pi[s]);
        for (StateId t = 0; t < S; ++t)
            if (r[t] > 0.0 && idx[t] >= 0) m(idx[s], idx[t]) -= r[t];
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    Eigen::VectorXd x = lu.solve(rhs);
    if (!x.allFinite() || (m * x - rhs).lpNorm<Eigen::Infinity>() > 1e-8 * (1.0 + rhs.lpNorm<1>()))
        return false;
    for (StateId s = 0; s < S; ++s)
        if (idx[s] >= 0) v[s] = x(idx[s]);
    return true;
}

QTable q_table(const TabularMdp& mdp, const std::vector<double>& v, StateId goal) {
    QTable q{goal, mdp.num_actions, std::vector<double>(mdp.num_states * mdp.num_actions)};
    for (StateId s = 0; s < mdp.num_states; ++s)
        for (ActionId a = 0; a < mdp.num_actions; ++a) q(s, a) = q_value(mdp, v, s, a);
    return q;
}

void check_goal(const TabularMdp& mdp, StateId goal) {
    if (goal >= mdp.num_states) throw ValidationError("goal state out of range");
}

} // namespace

OptimalSolution optimal_values(const TabularMdp& mdp, StateId goal, double tol) {
    check_goal(mdp, goal);
    if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
    const std::size_t S = mdp.num_states, A = mdp.num_actions;
    auto win = almost_sure_set(mdp, goal);

    // Policy iteration from the attractor policy, which is proper on W. Positive costs keep
    // every improved policy proper.
    std::vector<ActionId> pi = win.witness;
    std::vector<double> v;
    bool exact = true;
    for (int iter = 0; iter < 10000; ++iter) {
        if (!solve_linear(mdp, pi, win.in, goal, v)) {
            exact = false;
            break;
        }
        bool changed = false;
        for (StateId s = 0; s < S; ++s) {
            if (!win.in[s] || s == goal) continue;
            double best = q_value(mdp, v, s, pi[s]);
            for (ActionId a = 0; a < A; ++a) {
                if (!support_within(mdp, s, a, win.in)) continue;
                const double q = q_value(mdp, v, s, a);
                if (q < best - 1e-12 * std::max(1.0, std::abs(best))) {
                    best = q;
                    pi[s] = a;
                    changed = true;
                }
            }
        }
        if (!changed) break;
    }

    if (!exact) {
        v.assign(S, 0.0);
        for (StateId s = 0; s < S; ++s)
            if (!win.in[s]) v[s] = kUnreachable;
    }
    // Value-iteration polish; a no-op after exact policy iteration, the fallback otherwise.
    for (long sweep = 0; sweep < 10'000'000; ++sweep) {
        double diff = 0.0;
        std::vector<double> next = v;
        for (StateId s = 0; s < S; ++s) {
            if (!win.in[s] || s == goal) continue;
            double best = kUnreachable;
            for (ActionId a = 0; a < A; ++a) best = std::min(best, q_value(mdp, v, s, a));
            diff = std::max(diff, std::abs(best - v[s]));
            next[s] = best;
        }
        if (diff <= tol) break;
        v = std::move(next);
    }

    OptimalSolution out;
    out.V = ValueTable{goal, v};
    out.Q = q_table(mdp, v, goal);
    return out;
}

Policy greedy_policy(const QTable& q, const StateSet& restriction) {
    const std::size_t S = q.q.size() / std::max<std::size_t>(q.num_actions, 1);
    std::vector<ActionId> actions(S, kReset);
    for (StateId s = 0; s < S; ++s) {
        if (s == q.goal) continue;
        double best = kUnreachable;
        for (ActionId a = 0; a < q.num_actions; ++a) {
            if (q(s, a) < best) {
                best = q(s, a);
                actions[s] = a;
            }
        }
    }
    return Policy::restricted(std::move(actions), restriction);
}

TabularMdp restrict_to(const TabularMdp& mdp, const StateSet& k_in) {
    const StateSet k = normalize_set(k_in);
    TabularMdp out = mdp;
    for (StateId s = 0; s < mdp.num_states; ++s) {
        if (set_contains(k, s)) continue;
        for (ActionId a = 0; a < mdp.num_actions; ++a) {
            auto r = out.row(s, a);
            std::fill(r.begin(), r.end(), 0.0);
            r[mdp.s0] = 1.0;
            out.cost(s, a) = mdp.c_reset;
            out.cost_dists[out.pair(s, a)] = CostDist::Deterministic;
        }
    }
    return out;
}

ValueTable restricted_values(const TabularMdp& mdp, const StateSet& k, StateId goal, double tol) {
    if (!set_contains(normalize_set(k), mdp.s0))
        throw ValidationError("restricted_values: s0 must belong to K");
    return optimal_values(restrict_to(mdp, k), goal, tol).V;
}

PolicyValue policy_value(const TabularMdp& mdp, const Policy& policy, StateId goal) {
    check_goal(mdp, goal);
    const std::size_t S = mdp.num_states;
    if (policy.actions.size() != S) throw ValidationError("policy size does not match MDP");
    for (ActionId a : policy.actions)
        if (a >= mdp.num_actions) throw ValidationError("policy action out of range");

    // Backward closure helper over the policy's transition graph (goal absorbing).
    auto backward = [&](std::vector<char> seed) {
        bool grew = true;
        while (grew) {
            grew = false;
            for (StateId s = 0; s < S; ++s) {
                if (seed[s] || s == goal) continue;
                auto r = mdp.row(s, policy.actions[s]);
                for (StateId t = 0; t < S; ++t) {
                    if (r[t] > 0.0 && seed[t]) {
                        seed[s] = 1;
                        grew = true;
                        break;
                    }
                }
            }
        }
        return seed;
    };

    std::vector<char> reaches_goal(S, 0);
    reaches_goal[goal] = 1;
    reaches_goal = backward(reaches_goal);
    std::vector<char> stuck(S, 0);
    for (StateId s = 0; s < S; ++s) stuck[s] = !reaches_goal[s];
    stuck = backward(stuck);

    std::vector<char> live(S, 0);
    bool proper = true;
    for (StateId s = 0; s < S; ++s) {
        live[s] = !stuck[s];
        if (stuck[s]) proper = false;
    }
    std::vector<double> v;
    if (!solve_linear(mdp, policy.actions, live, goal, v))
        throw RuntimeHardError("policy_value: singular evaluation system");
    return {ValueTable{goal, v}, proper};
}

double bellman_residual(const TabularMdp& mdp, const ValueTable& v) {
    double res = 0.0;
    for (StateId s = 0; s < mdp.num_states; ++s) {
        if (s == v.goal || is_unreachable(v[s])) continue;
        double best = kUnreachable;
        for (ActionId a = 0; a < mdp.num_actions; ++a)
            best = std::min(best, q_value(mdp, v.values, s, a));
        res = std::max(res, std::abs(best - v[s]));
    }
    if (v[v.goal] != 0.0) res = std::max(res, std::abs(v[v.goal]));
    return res;
}

StateSet controllable_set(const TabularMdp& mdp, double L) {
    if (!(L >= 1.0)) throw ValidationError("controllable_set: L must be >= 1");
    StateSet k{mdp.s0};
    for (;;) {
        StateSet added;
        for (StateId s = 0; s < mdp.num_states; ++s) {
            if (set_contains(k, s)) continue;
            if (within_radius(restricted_values(mdp, k, s)[mdp.s0], L)) added.push_back(s);
        }
        if (added.empty()) return k;
        k.insert(k.end(), added.begin(), added.end());
        k = normalize_set(std::move(k));
    }
}

double b_star(const TabularMdp& mdp, const StateSet& k) {
    const MergedMdp m = merge(mdp, k);
    // x stands for no state at all when K covers S, so it only counts as a source otherwise.
    const bool x_counts = m.known.size() < mdp.num_states;
    double best = 0.0;
    for (StateId g = 0; g < m.known.size(); ++g) {
        const auto sol = optimal_values(m.model, g);
        for (StateId s = 0; s < m.size(); ++s)
            if (s != m.x || x_counts) best = std::max(best, sol.V[s]);
    }
    return best;
}

} // namespace valae
