#include "valae/learner.hpp"

#include <cmath>

namespace valae {

LearnerCounts::LearnerCounts(std::size_t S, std::size_t A, StateId s0, StateId x, double c_reset)
    : S_(S), A_(A), s0_(s0), x_(x), c_reset_(c_reset), N_(S * A, 0), n_(S * A, 0),
      Nsas_(S * A * S, 0), theta_(S * A, 0.0), c_hat_(S * A, 0.0), P_hat_(S * A * S, 0.0) {
    if (s0 >= S || x >= S) throw ValidationError("LearnerCounts: s0 or x out of range");
}

LearnerCounts LearnerCounts::for_merged(const MergedMdp& m) {
    return LearnerCounts(m.size(), m.model.num_actions, m.model.s0, m.x, m.model.c_reset);
}

void LearnerCounts::check(StateId s, ActionId a) const {
    if (s >= S_ || a >= A_) throw ValidationError("LearnerCounts: pair out of range");
}

void LearnerCounts::add_sample(StateId s, ActionId a, StateId t, double cost) {
    check(s, a);
    if (t >= S_) throw ValidationError("LearnerCounts: next state out of range");
    const auto p = pair(s, a);
    N_[p] += 1;
    Nsas_[p * S_ + t] += 1;
    theta_[p] += cost;
}

void LearnerCounts::snapshot(StateId s, ActionId a, double cost_factor) {
    check(s, a);
    const auto p = pair(s, a);
    if (N_[p] == 0) throw RuntimeHardError("snapshot of an unvisited pair");
    n_[p] = N_[p];
    double* row = P_hat_.data() + p * S_;
    if (s == x_) {
        std::fill(row, row + S_, 0.0);
        row[s0_] = 1.0;
        c_hat_[p] = c_reset_;
    } else {
        const double total = static_cast<double>(N_[p]);
        for (StateId t = 0; t < S_; ++t) row[t] = static_cast<double>(Nsas_[p * S_ + t]) / total;
        c_hat_[p] = cost_factor * theta_[p] / total;
    }
    theta_[p] = 0.0;
}

void LearnerCounts::init_artificial_rows(std::uint64_t phi) {
    for (ActionId a = 0; a < A_; ++a) {
        const auto p = pair(x_, a);
        N_[p] = phi;
        n_[p] = phi;
        for (StateId t = 0; t < S_; ++t) Nsas_[p * S_ + t] = 0;
        Nsas_[p * S_ + s0_] = phi;
        theta_[p] = 0.0;
        c_hat_[p] = c_reset_;
        double* row = P_hat_.data() + p * S_;
        std::fill(row, row + S_, 0.0);
        row[s0_] = 1.0;
    }
}

void LearnerCounts::set_snapshot(StateId s, ActionId a, std::uint64_t n, std::vector<double> p_hat,
                                 double c_hat) {
    check(s, a);
    if (p_hat.size() != S_) throw ValidationError("set_snapshot: row has wrong size");
    const auto p = pair(s, a);
    n_[p] = n;
    N_[p] = std::max(N_[p], n);
    c_hat_[p] = c_hat;
    std::copy(p_hat.begin(), p_hat.end(), P_hat_.begin() + static_cast<long>(p * S_));
}

nlohmann::json LearnerCounts::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (StateId s = 0; s < S_; ++s)
        for (ActionId a = 0; a < A_; ++a) {
            const auto p = pair(s, a);
            rows.push_back({{"s", s},
                            {"a", a},
                            {"N", N_[p]},
                            {"n", n_[p]},
                            {"theta", theta_[p]},
                            {"c_hat", c_hat_[p]},
                            {"P_hat", std::vector<double>(P_hat_.begin() + p * S_,
                                                          P_hat_.begin() + (p + 1) * S_)}});
        }
    return {{"states", S_}, {"actions", A_}, {"s0", s0_}, {"x", x_}, {"pairs", rows}};
}

bool record_transition(LearnerCounts& counts, TriggerState& trigger, StateId s, ActionId a,
                       StateId next, double cost) {
    counts.add_sample(s, a, next, cost);
    if (!is_power_of_two(counts.N(s, a))) return false;
    trigger.j += 1;
    trigger.fired += 1;
    counts.snapshot(s, a, 2.0);
    return true;
}

double burn_in_psi(double L, std::size_t k, std::size_t A, double delta, double c_min) {
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0,1)");
    if (!(c_min > 0.0)) throw ValidationError("c_min must be positive");
    const double kk = static_cast<double>(k);
    return 12000.0 * L * L * kk / (c_min * c_min) *
           std::log(kk * static_cast<double>(A) / delta);
}

std::uint64_t burn_in_phi(double scaled_psi) {
    if (!(scaled_psi > 1.0)) return 1;
    const double e = std::ceil(std::log2(scaled_psi));
    if (e > 62) throw ValidationError("burn-in sample count overflows; lower the scale");
    return std::uint64_t{1} << static_cast<int>(e);
}

std::uint64_t step_cap(double L, double c_min) {
    return static_cast<std::uint64_t>(std::ceil(1e6 * std::max(L, 1.0) / c_min));
}

BurnInResult burn_in(SimHandle& sim, const MergedMdp& merged, const std::vector<Policy>& nav,
                     const BurnInConfig& cfg, CostLedger* ledger) {
    if (!(cfg.scale > 0.0 && cfg.scale <= 1.0)) throw ValidationError("scale must lie in (0,1]");
    const std::size_t K = merged.known.size();
    const auto& m = merged.model;
    if (nav.size() != K) throw ValidationError("burn_in: need one navigation policy per known state");
    if (sim.current_state >= m.num_states)
        throw ValidationError("burn_in: simulator state is not a merged-model state");

    BurnInResult out;
    out.counts = LearnerCounts::for_merged(merged);
    out.psi = burn_in_psi(cfg.L, K, m.num_actions, cfg.delta, m.c_min);
    out.phi = burn_in_phi(cfg.scale * out.psi);
    const auto cap = step_cap(cfg.L, m.c_min);
    const auto steps0 = sim.step_counter;
    auto charge = [&](double c) {
        out.cost += c;
        if (ledger) ledger->add(c);
    };

    for (StateId s = 0; s < K; ++s) {
        for (ActionId a = 0; a < m.num_actions; ++a) {
            while (out.counts.N(s, a) < out.phi) {
                navigate(sim, m, nav[s], s, cap,
                         [&](StateId, ActionId, StateId, double c) { charge(c); });
                const auto tr = step(sim, m, a);
                charge(tr.cost);
                out.counts.add_sample(s, a, tr.next, tr.cost);
            }
            out.counts.snapshot(s, a, 1.0);
        }
    }
    out.counts.init_artificial_rows(out.phi);
    out.steps = sim.step_counter - steps0;
    return out;
}

} // namespace valae
