#include "valae/valae.hpp"

#include <algorithm>
#include <cmath>

namespace valae {

void ValaeConfig::validate() const {
    if (!(eps > 0.0 && eps <= 1.0)) throw ValidationError("eps must lie in (0,1]");
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0,1)");
    if (!(L >= 1.0)) throw ValidationError("L must be >= 1");
    if (!(scale > 0.0 && scale <= 1.0)) throw ValidationError("scale must lie in (0,1]");
    if (mode == Mode::MultiGoalSSP && goals.empty())
        throw ValidationError("multi-goal mode needs a nonempty goal set");
}

long initial_trigger_index(double c_min) {
    return static_cast<long>(std::ceil(5.0 + std::log2(1.0 / c_min) - 1e-12));
}

std::uint64_t episodes_per_round(double eps, double delta, std::size_t k, double scale) {
    const double e = eps / 3.0;
    const double l = std::log(256.0 / e);
    const double raw = scale * (2048.0 / (e * e)) * l * l *
                       std::log(2.0 * static_cast<double>(k) / delta);
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(raw)));
}

double vi_tolerance(long j, std::size_t k_dagger, std::size_t A) {
    return std::max(1e-12, std::ldexp(1.0, static_cast<int>(-j)) /
                               (static_cast<double>(k_dagger) * static_cast<double>(A)));
}

std::string to_string(RoundOutcome o) {
    switch (o) {
    case RoundOutcome::Failure:
        return "failure";
    case RoundOutcome::Skipped:
        return "skipped";
    case RoundOutcome::Success:
        return "success";
    }
    return "failure";
}

double regret_total(const std::vector<RoundRecord>& trace) {
    double r = 0.0;
    for (const auto& rec : trace)
        for (double c : rec.episode_costs) r += c - rec.v_s0;
    return r;
}

StateId select_next_goal(const StateSet& remaining) {
    if (remaining.empty()) throw ValidationError("select_next_goal: empty goal set");
    return *std::min_element(remaining.begin(), remaining.end());
}

AxResult run_valae(SimHandle& sim, const TabularMdp& mdp, const ValaeConfig& cfg,
                   const ValaeHooks& hooks) {
    cfg.validate();
    require_valid(mdp);
    AxResult out;
    CostLedger ledger;

    // Discovery walks the true MDP.
    auto disc = discover(sim, mdp, {cfg.L, cfg.delta, cfg.scale}, &ledger);
    out.K = disc.K;
    out.discovery_cost = disc.cost_spent;

    const MergedMdp merged = merge(mdp, out.K);
    const auto& m = merged.model;
    const std::size_t K = out.K.size();
    const std::size_t A = m.num_actions;
    const StateId s0 = m.s0;
    sim.current_state = merged.local(sim.current_state);

    std::vector<Policy> nav(K);
    // Navigation policies act on K (local 0..K-1) and RESET at x.
    for (StateId s = 0; s < K; ++s) {
        std::vector<ActionId> acts(m.num_states, kReset);
        const auto& p = disc.policies.at(merged.global(s));
        for (StateId l = 0; l < K; ++l) acts[l] = p(merged.global(l));
        StateSet local_k(K);
        for (StateId l = 0; l < K; ++l) local_k[l] = l;
        nav[s] = Policy::restricted(std::move(acts), local_k);
    }

    BurnInConfig bcfg{cfg.L, cfg.delta, cfg.scale};
    auto bi = burn_in(sim, merged, nav, bcfg, &ledger);
    out.phi = bi.phi;
    out.burn_in_cost = bi.cost;
    LearnerCounts& counts = bi.counts;

    TriggerState trig;
    trig.j = initial_trigger_index(m.c_min);
    const double eps_p = cfg.eps_prime();
    const std::uint64_t lambda = episodes_per_round(cfg.eps, cfg.delta, K, cfg.scale);
    out.lambda = lambda;
    const auto cap = step_cap(cfg.L, m.c_min);

    StateSet goals;
    if (cfg.mode == Mode::AX) {
        goals = out.K;
    } else {
        for (StateId g : normalize_set(cfg.goals)) {
            if (g >= mdp.num_states) throw ValidationError("goal state out of range");
            if (set_contains(out.K, g)) goals.push_back(g);
            else out.unreachable_goals.push_back(g);
        }
    }

    StateSet local_k(K);
    for (StateId l = 0; l < K; ++l) local_k[l] = l;

    VisgoConfig vcfg;
    vcfg.B = cfg.B();
    vcfg.delta = cfg.delta;
    vcfg.confidence_scale = cfg.scale;

    while (!goals.empty()) {
        const StateId g = select_next_goal(goals);
        const StateId g_local = merged.local(g);

        RoundRecord rec;
        rec.index = out.trace.size();
        rec.goal = g;
        rec.trigger_index = trig.j;

        vcfg.eps_vi = vi_tolerance(trig.j, m.num_states, A);
        const auto plan = run_visgo(counts, g_local, vcfg);
        if (hooks.on_visgo) hooks.on_visgo(merged, g_local, plan);
        rec.visgo_iterations = plan.iterations;
        rec.v_s0 = plan.V[s0];
        const Policy pi = greedy_policy(plan.Q, local_k);
        const double threshold = rec.v_s0 + eps_p * cfg.L;

        bool skipped = false, failed = false;
        for (std::uint64_t k = 0; k < lambda && !skipped && !failed; ++k) {
            if (sim.current_state != s0) {
                // Physical return to s0 before the episode; charged to C_T only.
                const auto tr = step(sim, m, kReset);
                ledger.add(tr.cost);
            }
            double tau_k = 0.0;
            std::uint64_t steps = 0;
            while (sim.current_state != g_local) {
                if (++steps > cap)
                    throw RuntimeHardError("episode towards goal " + std::to_string(g) +
                                           " exceeded the step cap of " + std::to_string(cap));
                const StateId s = sim.current_state;
                const ActionId a = pi(s);
                const auto tr = step(sim, m, a);
                ledger.add(tr.cost);
                if (record_transition(counts, trig, s, a, tr.next, tr.cost)) {
                    skipped = true;
                    break;
                }
                rec.tau_hat += tr.cost / static_cast<double>(lambda);
                tau_k += tr.cost;
            }
            rec.episode_costs.push_back(tau_k);
            if (skipped) break;
            ++rec.episodes_completed;
            if (rec.tau_hat > threshold) failed = true;
        }

        if (skipped) {
            rec.outcome = RoundOutcome::Skipped;
            ++out.rounds_skip;
        } else if (failed) {
            rec.outcome = RoundOutcome::Failure;
            ++out.rounds_fail;
        } else {
            rec.outcome = RoundOutcome::Success;
            ++out.rounds_success;
            std::vector<ActionId> acts(mdp.num_states, kReset);
            for (StateId l = 0; l < K; ++l) acts[merged.global(l)] = pi(l);
            out.policies.insert_or_assign(g, Policy::restricted(std::move(acts), out.K));
            goals.erase(std::find(goals.begin(), goals.end(), g));
        }
        for (double c : rec.episode_costs) rec.regret += c - rec.v_s0;
        out.trace.push_back(std::move(rec));
    }

    out.C_T = ledger.total;
    out.cost_samples = ledger.samples;
    out.steps = sim.step_counter;
    out.triggers = trig.fired;
    out.regret = regret_total(out.trace);
    return out;
}

nlohmann::json to_json(const RoundRecord& r) {
    return {{"round", r.index},
            {"goal", r.goal},
            {"outcome", to_string(r.outcome)},
            {"episodes_completed", r.episodes_completed},
            {"tau_hat", r.tau_hat},
            {"episode_costs", r.episode_costs},
            {"V_s0", r.v_s0},
            {"regret", r.regret},
            {"trigger_index", r.trigger_index},
            {"visgo_iterations", r.visgo_iterations}};
}

nlohmann::json to_json(const AxResult& r) {
    nlohmann::json policies = nlohmann::json::object();
    for (const auto& [g, p] : r.policies) policies[std::to_string(g)] = p.actions;
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& rec : r.trace) trace.push_back(to_json(rec));
    return {{"K", r.K},
            {"policies", policies},
            {"unreachable_goals", r.unreachable_goals},
            {"C_T", r.C_T},
            {"steps", r.steps},
            {"discovery_cost", r.discovery_cost},
            {"burn_in_cost", r.burn_in_cost},
            {"phi", r.phi},
            {"lambda", r.lambda},
            {"triggers", r.triggers},
            {"rounds_total", r.rounds_total()},
            {"rounds_fail", r.rounds_fail},
            {"rounds_skip", r.rounds_skip},
            {"rounds_success", r.rounds_success},
            {"regret_total", r.regret},
            {"rounds", trace}};
}

} // namespace valae
