#include "valae/visgo.hpp"

#include <algorithm>
#include <limits>

namespace valae {

void VisgoConfig::validate() const {
    if (!(B >= 1.0)) throw ValidationError("VISGO: B must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("VISGO: delta must lie in (0,1)");
    if (!(eps_vi > 0.0)) throw ValidationError("VISGO: eps_vi must be positive");
    if (!(c2 >= 2.0 * c1 * c1)) throw ValidationError("VISGO: constants need c2 >= 2 c1^2");
    if (!(confidence_scale > 0.0)) throw ValidationError("VISGO: confidence scale must be positive");
}

namespace {

void require_counts(const LearnerCounts& counts, StateId goal) {
    if (goal >= counts.num_states() || goal == counts.x())
        throw ValidationError("VISGO: goal must be a known state");
    for (StateId s = 0; s < counts.num_states(); ++s) {
        if (s == goal || s == counts.x()) continue;
        for (ActionId a = 0; a < counts.num_actions(); ++a)
            if (counts.n(s, a) == 0)
                throw RuntimeHardError("VISGO: zero-count row (" + std::to_string(s) + "," +
                                       std::to_string(a) + ")");
    }
}

} // namespace

SkewedKernel skewed_kernel(const LearnerCounts& counts, StateId goal) {
    require_counts(counts, goal);
    const std::size_t S = counts.num_states(), A = counts.num_actions();
    SkewedKernel k{S, A, std::vector<double>(S * A * S, 0.0)};
    for (StateId s = 0; s < S; ++s) {
        for (ActionId a = 0; a < A; ++a) {
            auto row = counts.p_hat_row(s, a);
            double* out = k.p.data() + (s * A + a) * S;
            if (s == goal || s == counts.x()) {
                std::copy(row.begin(), row.end(), out);
                continue;
            }
            const double n = static_cast<double>(counts.n(s, a));
            for (StateId t = 0; t < S; ++t) out[t] = n / (n + 1.0) * row[t];
            out[goal] += 1.0 / (n + 1.0);
        }
    }
    return k;
}

double confidence_log(const LearnerCounts& counts, StateId s, ActionId a, const VisgoConfig& cfg) {
    const double kp = static_cast<double>(counts.num_states());
    const double A = static_cast<double>(counts.num_actions());
    const double n = static_cast<double>(counts.n(s, a));
    return cfg.confidence_scale * 4.0 * std::log(12.0 * kp * A * n / cfg.delta);
}

double empirical_variance(const LearnerCounts& counts, StateId s, ActionId a,
                          const std::vector<double>& u) {
    auto row = counts.p_hat_row(s, a);
    double m1 = 0.0, m2 = 0.0;
    for (StateId t = 0; t < row.size(); ++t) {
        m1 += row[t] * u[t];
        m2 += row[t] * u[t] * u[t];
    }
    return std::max(0.0, m2 - m1 * m1);
}

double bonus(const LearnerCounts& counts, const std::vector<double>& u, StateId s, ActionId a,
             const VisgoConfig& cfg) {
    const double n = static_cast<double>(counts.n(s, a));
    if (!(n >= 1.0)) throw RuntimeHardError("bonus: zero-count pair");
    const double iota = confidence_log(counts, s, a, cfg);
    const double var = empirical_variance(counts, s, a, u);
    return std::max(cfg.c1 * std::sqrt(var * iota / n), cfg.c2 * cfg.B * iota / n) +
           cfg.c3 * std::sqrt(std::max(0.0, counts.c_hat(s, a)) * iota / n);
}

std::vector<double> visgo_operator(const LearnerCounts& counts, StateId goal,
                                   const std::vector<double>& u, const VisgoConfig& cfg,
                                   QTable* q_out) {
    const std::size_t S = counts.num_states(), A = counts.num_actions();
    const StateId x = counts.x();
    std::vector<double> next(S, 0.0);
    if (q_out) *q_out = QTable{goal, A, std::vector<double>(S * A, 0.0)};
    for (StateId s = 0; s < S; ++s) {
        if (s == goal) continue;
        if (s == x) {
            next[s] = counts.c_reset() + u[counts.s0()];
            if (q_out)
                for (ActionId a = 0; a < A; ++a) (*q_out)(s, a) = next[s];
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (ActionId a = 0; a < A; ++a) {
            const double n = static_cast<double>(counts.n(s, a));
            auto row = counts.p_hat_row(s, a);
            double pv = 0.0;
            for (StateId t = 0; t < S; ++t) pv += row[t] * u[t];
            // P~ U = n/(n+1) P^ U + U(g)/(n+1), and U(g) = 0 for every iterate.
            const double skewed = n / (n + 1.0) * pv + u[goal] / (n + 1.0);
            const double q =
                std::max(0.0, counts.c_hat(s, a) + skewed - bonus(counts, u, s, a, cfg));
            if (q_out) (*q_out)(s, a) = q;
            best = std::min(best, q);
        }
        next[s] = best;
    }
    next[goal] = 0.0;
    return next;
}

double visgo_rho(const LearnerCounts& counts, StateId goal) {
    double min_mass = 1.0;
    for (StateId s = 0; s < counts.num_states(); ++s) {
        if (s == counts.x()) continue;
        for (ActionId a = 0; a < counts.num_actions(); ++a) {
            const double n = static_cast<double>(counts.n(s, a));
            const double mass = n / (n + 1.0) * counts.p_hat(s, a, goal) + 1.0 / (n + 1.0);
            min_mass = std::min(min_mass, mass);
        }
    }
    return 1.0 - min_mass;
}

double visgo_iteration_bound(double rho, double eps_vi) {
    if (rho <= 0.0) return 1.0;
    return std::ceil(std::log(1.0 / eps_vi) / std::log(1.0 / rho));
}

VisgoOutput run_visgo(const LearnerCounts& counts, StateId goal, const VisgoConfig& cfg,
                      const IterateObserver& observer) {
    cfg.validate();
    require_counts(counts, goal);
    const std::size_t S = counts.num_states();

    VisgoOutput out;
    out.rho = visgo_rho(counts, goal);
    // The x coordinate copies s0 with a one-step lag, so the sup-norm gap shrinks by rho only
    // every second iteration in the worst case; the cap allows for that.
    const double single = out.rho <= 0.0
                              ? 1.0
                              : std::ceil(std::log(std::max(cfg.B, 2.0) / cfg.eps_vi) /
                                          std::log(1.0 / out.rho));
    const double cap = 2.0 * single + 64.0;

    std::vector<double> v(S, 0.0);
    QTable q;
    if (observer) observer(0, v);
    std::size_t i = 0;
    for (;;) {
        auto next = visgo_operator(counts, goal, v, cfg, &q);
        double diff = 0.0;
        for (StateId s = 0; s < S; ++s) diff = std::max(diff, std::abs(next[s] - v[s]));
        v = std::move(next);
        ++i;
        if (observer) observer(i, v);
        if (diff <= cfg.eps_vi) break;
        if (cfg.stop_above_at_s0 && v[counts.s0()] > *cfg.stop_above_at_s0) {
            out.stopped_early = true;
            break;
        }
        if (static_cast<double>(i) > cap)
            throw RuntimeHardError("VISGO did not converge within " + std::to_string(i) +
                                   " iterations");
    }
    out.iterations = i;
    out.Q = std::move(q);
    out.V = ValueTable{goal, std::move(v)};
    return out;
}

} // namespace valae
