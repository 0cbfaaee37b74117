#include "valae/discovery.hpp"

#include <algorithm>

namespace valae {

namespace {

struct PairStats {
    std::uint64_t n = 0;
    double theta = 0.0;
    std::map<StateId, std::uint64_t> next;
};

using Stats = std::map<std::pair<StateId, ActionId>, PairStats>;

// Empirical model over K + {u} + x built from the discovery samples of K x A.
LearnerCounts candidate_model(const TabularMdp& mdp, const StateSet& k, StateId u,
                              const Stats& stats, std::uint64_t target) {
    StateSet ku = k;
    ku.push_back(u);
    ku = normalize_set(std::move(ku));
    const std::size_t S = ku.size() + 1;
    const StateId x = ku.size();
    auto local = [&](StateId g) -> StateId {
        auto it = std::lower_bound(ku.begin(), ku.end(), g);
        return (it != ku.end() && *it == g) ? static_cast<StateId>(it - ku.begin()) : x;
    };
    LearnerCounts counts(S, mdp.num_actions, local(mdp.s0), x, mdp.c_reset);
    for (StateId s : k) {
        for (ActionId a = 0; a < mdp.num_actions; ++a) {
            const auto& ps = stats.at({s, a});
            std::vector<double> row(S, 0.0);
            const double total = static_cast<double>(ps.n);
            for (const auto& [t, c] : ps.next) row[local(t)] += static_cast<double>(c) / total;
            counts.set_snapshot(local(s), a, ps.n, std::move(row), ps.theta / total);
        }
    }
    counts.init_artificial_rows(target);
    return counts;
}

} // namespace

DiscoveryResult discover(SimHandle& sim, const TabularMdp& mdp, const DiscoveryConfig& cfg,
                         CostLedger* ledger) {
    if (!(cfg.L >= 1.0)) throw ValidationError("discover: L must be >= 1");
    if (!(cfg.scale > 0.0 && cfg.scale <= 1.0)) throw ValidationError("discover: scale must lie in (0,1]");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ValidationError("discover: delta must lie in (0,1)");

    const std::size_t A = mdp.num_actions;
    const auto cap = step_cap(cfg.L, mdp.c_min);
    DiscoveryResult out;
    out.K = {mdp.s0};
    out.policies.emplace(mdp.s0, Policy::restricted(std::vector<ActionId>(mdp.num_states, kReset),
                                                    out.K));
    Stats stats;
    const auto steps0 = sim.step_counter;
    auto record = [&](StateId s, ActionId a, StateId t, double c) {
        auto& ps = stats[{s, a}];
        ps.n += 1;
        ps.theta += c;
        ps.next[t] += 1;
        out.cost_spent += c;
        if (ledger) ledger->add(c);
    };

    for (;;) {
        ++out.passes;
        const double psi = burn_in_psi(cfg.L, out.K.size(), A, cfg.delta, mdp.c_min);
        const std::uint64_t target = burn_in_phi(cfg.scale * psi);
        for (StateId s : out.K) {
            for (ActionId a = 0; a < A; ++a) {
                while (stats[{s, a}].n < target) {
                    navigate(sim, mdp, out.policies.at(s), s, cap, record);
                    const auto tr = step(sim, mdp, a);
                    record(s, a, tr.next, tr.cost);
                }
            }
        }

        StateSet frontier;
        for (const auto& [key, ps] : stats)
            for (const auto& [t, c] : ps.next)
                if (!set_contains(out.K, t)) frontier.push_back(t);
        frontier = normalize_set(std::move(frontier));

        VisgoConfig vcfg;
        vcfg.B = 10.0 * cfg.L;
        vcfg.delta = cfg.delta;
        vcfg.eps_vi = 1e-10;
        vcfg.confidence_scale = cfg.scale;
        vcfg.stop_above_at_s0 = cfg.L;

        std::vector<std::pair<StateId, std::vector<ActionId>>> accepted;
        for (StateId u : frontier) {
            auto counts = candidate_model(mdp, out.K, u, stats, target);
            StateSet ku = out.K;
            ku.push_back(u);
            ku = normalize_set(std::move(ku));
            const StateId u_local =
                static_cast<StateId>(std::lower_bound(ku.begin(), ku.end(), u) - ku.begin());
            const auto res = run_visgo(counts, u_local, vcfg);
            if (res.stopped_early || !within_radius(res.V[counts.s0()], cfg.L)) continue;
            std::vector<ActionId> actions(mdp.num_states, kReset);
            StateSet local_k;
            for (std::size_t i = 0; i < ku.size(); ++i)
                if (i != u_local) local_k.push_back(i);
            const auto local_policy = greedy_policy(res.Q, local_k);
            for (std::size_t i = 0; i < ku.size(); ++i) actions[ku[i]] = local_policy.actions[i];
            accepted.emplace_back(u, std::move(actions));
        }
        if (accepted.empty()) break;

        StateSet next_k = out.K;
        for (const auto& [u, acts] : accepted) next_k.push_back(u);
        next_k = normalize_set(std::move(next_k));
        // Policies stay restricted on the K they were planned on, a subset of the new K.
        for (auto& [u, acts] : accepted)
            out.policies.emplace(u, Policy::restricted(std::move(acts), out.K));
        for (auto& [s, p] : out.policies) p.restriction = next_k;
        out.K = std::move(next_k);
    }
    out.steps = sim.step_counter - steps0;
    return out;
}

} // namespace valae
