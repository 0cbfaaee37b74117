#pragma once

// Independent brute-force oracles used by the tests. Nothing here calls the library's solvers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "valae/learner.hpp"
#include "valae/mdp.hpp"
#include "valae/rng.hpp"

namespace bf {

using valae::ActionId;
using valae::StateId;
using valae::TabularMdp;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Gaussian elimination with partial pivoting on a dense n x n system.
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

// Exact value of a deterministic stationary policy; kInf where the goal is not reached a.s.
inline std::vector<double> evaluate(const TabularMdp& m, const std::vector<ActionId>& pi,
                                    StateId goal) {
    const std::size_t S = m.num_states;
    // reach[s]: goal reachable from s in the policy graph.
    std::vector<char> reach(S, 0);
    reach[goal] = 1;
    for (bool changed = true; changed;) {
        changed = false;
        for (StateId s = 0; s < S; ++s) {
            if (reach[s]) continue;
            for (StateId t = 0; t < S; ++t)
                if (m.prob(s, pi[s], t) > 0 && reach[t]) {
                    reach[s] = 1;
                    changed = true;
                    break;
                }
        }
    }
    // bad[s]: can reach a state that cannot reach the goal.
    std::vector<char> bad(S, 0);
    for (StateId s = 0; s < S; ++s) bad[s] = !reach[s];
    for (bool changed = true; changed;) {
        changed = false;
        for (StateId s = 0; s < S; ++s) {
            if (bad[s] || s == goal) continue;
            for (StateId t = 0; t < S; ++t)
                if (m.prob(s, pi[s], t) > 0 && bad[t]) {
                    bad[s] = 1;
                    changed = true;
                    break;
                }
        }
    }
    std::vector<StateId> idx;
    std::vector<long> pos(S, -1);
    for (StateId s = 0; s < S; ++s)
        if (!bad[s] && s != goal) {
            pos[s] = static_cast<long>(idx.size());
            idx.push_back(s);
        }
    std::vector<std::vector<double>> a(idx.size(), std::vector<double>(idx.size(), 0.0));
    std::vector<double> b(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const StateId s = idx[i];
        a[i][i] = 1.0;
        b[i] = m.cost(s, pi[s]);
        for (StateId t = 0; t < S; ++t)
            if (pos[t] >= 0) a[i][static_cast<std::size_t>(pos[t])] -= m.prob(s, pi[s], t);
    }
    const auto x = solve(a, b);
    std::vector<double> v(S, kInf);
    v[goal] = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) v[idx[i]] = x[i];
    return v;
}

// Calls f on every deterministic policy that plays RESET outside `allowed` (all states if empty).
inline void for_each_policy(const TabularMdp& m, const std::vector<char>& allowed,
                            const std::function<void(const std::vector<ActionId>&)>& f) {
    const std::size_t S = m.num_states;
    std::vector<ActionId> pi(S, 0);
    std::vector<StateId> free;
    for (StateId s = 0; s < S; ++s)
        if (allowed.empty() || allowed[s]) free.push_back(s);
    for (;;) {
        f(pi);
        std::size_t i = 0;
        while (i < free.size()) {
            if (++pi[free[i]] < m.num_actions) break;
            pi[free[i]] = 0;
            ++i;
        }
        if (i == free.size()) return;
    }
}

// Componentwise minimum over all (restricted) deterministic policies.
inline std::vector<double> optimal(const TabularMdp& m, StateId goal,
                                   const std::vector<char>& allowed = {}) {
    std::vector<double> best(m.num_states, kInf);
    std::vector<char> free = allowed;
    if (!free.empty()) free[goal] = 0; // the goal's action never matters
    else {
        free.assign(m.num_states, 1);
        free[goal] = 0;
    }
    for_each_policy(m, free, [&](const std::vector<ActionId>& pi) {
        const auto v = evaluate(m, pi, goal);
        for (StateId s = 0; s < m.num_states; ++s) best[s] = std::min(best[s], v[s]);
    });
    return best;
}

inline std::vector<char> mask(std::size_t S, const std::vector<StateId>& k) {
    std::vector<char> out(S, 0);
    for (StateId s : k) out[s] = 1;
    return out;
}

// Union over all total orders of the incrementally controllable sets. Small instances only.
inline std::vector<StateId> controllable_by_orders(const TabularMdp& m, double L) {
    const std::size_t S = m.num_states;
    // Restricted optimal value from s0 for every (allowed subset, target), memoized by bitmask.
    std::map<std::pair<unsigned, StateId>, double> memo;
    auto value = [&](unsigned bits, StateId target) {
        auto key = std::make_pair(bits, target);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        std::vector<char> allowed(S, 0);
        for (StateId s = 0; s < S; ++s) allowed[s] = (bits >> s) & 1u;
        const double v = optimal(m, target, allowed)[m.s0];
        memo.emplace(key, v);
        return v;
    };
    const double slack = 1e-9 * std::max(1.0, L);
    std::vector<StateId> order(S);
    std::iota(order.begin(), order.end(), StateId{0});
    unsigned all = 0;
    do {
        unsigned members = 1u << m.s0;
        for (StateId s : order) {
            if (s == m.s0) continue;
            // Members that precede s in this order.
            unsigned before = 0;
            for (StateId t : order) {
                if (t == s) break;
                if ((members >> t) & 1u) before |= 1u << t;
            }
            if (value(before, s) <= L + slack) members |= 1u << s;
        }
        all |= members;
    } while (std::next_permutation(order.begin(), order.end()));
    std::vector<StateId> out;
    for (StateId s = 0; s < S; ++s)
        if ((all >> s) & 1u) out.push_back(s);
    return out;
}

// Mean and standard error of the cost to reach `goal` from s0 under `pi`.
inline std::pair<double, double> rollout(const TabularMdp& m, const std::vector<ActionId>& pi,
                                         StateId goal, std::size_t episodes, std::uint64_t seed) {
    valae::SimHandle sim(m.s0, valae::make_stream(seed, "rollout"));
    double sum = 0, sq = 0;
    for (std::size_t e = 0; e < episodes; ++e) {
        sim.current_state = m.s0;
        double c = 0;
        while (sim.current_state != goal) c += valae::step(sim, m, pi[sim.current_state]).cost;
        sum += c;
        sq += c * c;
    }
    const double n = static_cast<double>(episodes);
    const double mean = sum / n;
    const double var = std::max(0.0, sq / n - mean * mean);
    return {mean, std::sqrt(var / n)};
}

// Counts over a merged model whose (s,a) rows on K hold n sampled transitions, n drawn from
// [1, max_n]. Costs are the true means; x rows are artificial as after burn-in.
inline valae::LearnerCounts random_counts(const valae::MergedMdp& mg, std::uint64_t max_n,
                                          std::uint64_t seed) {
    auto counts = valae::LearnerCounts::for_merged(mg);
    auto rng = valae::make_stream(seed, "counts");
    const auto& m = mg.model;
    for (StateId s = 0; s < mg.known.size(); ++s)
        for (ActionId a = 0; a < m.num_actions; ++a) {
            const std::uint64_t n = 1 + rng() % max_n;
            std::vector<double> row(m.num_states, 0.0);
            for (std::uint64_t i = 0; i < n; ++i) {
                double u = rng.uniform(), acc = 0.0;
                StateId t = 0;
                for (; t + 1 < m.num_states; ++t) {
                    acc += m.prob(s, a, t);
                    if (u < acc) break;
                }
                while (m.prob(s, a, t) == 0.0) --t; // round-off fallback
                row[t] += 1.0;
            }
            for (double& q : row) q /= static_cast<double>(n);
            counts.set_snapshot(s, a, n, row, m.cost(s, a));
        }
    counts.init_artificial_rows(1);
    return counts;
}

} // namespace bf
