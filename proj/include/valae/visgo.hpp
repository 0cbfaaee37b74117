#pragma once

#include <cmath>
#include <functional>
#include <optional>

#include "valae/learner.hpp"
#include "valae/oracle.hpp"

namespace valae {

struct VisgoConfig {
    double B = 10.0;
    double delta = 0.1;
    double eps_vi = 1e-6;
    double c1 = 6.0;
    double c2 = 72.0;
    double c3 = 2.0 * std::sqrt(2.0);
    /// Multiplies the log-confidence term. 1 is the textbook bonus; runs with a scaled burn-in
    /// pass the same scale so the bonus keeps its size relative to the shrunken counts.
    double confidence_scale = 1.0;
    /// Stop as soon as V(s0) exceeds this value (iterates only grow, so the fixed point does too).
    std::optional<double> stop_above_at_s0;

    void validate() const;
};

/// P~(.|s,a) = n/(n+1) P^(.|s,a) + 1[.=g]/(n+1), dense S*A*S.
struct SkewedKernel {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> p;

    double operator()(StateId s, ActionId a, StateId t) const {
        return p[(s * num_actions + a) * num_states + t];
    }
};

/// Rows of the goal and of x are left as P^ (VISGO never reads them).
SkewedKernel skewed_kernel(const LearnerCounts& counts, StateId goal);

/// iota(s,a) = scale * 4 ln(12 K' A n(s,a) / delta).
double confidence_log(const LearnerCounts& counts, StateId s, ActionId a, const VisgoConfig& cfg);

/// Variance of U under the P^ row of (s,a), computed as E[U^2] - E[U]^2 and clamped at 0.
double empirical_variance(const LearnerCounts& counts, StateId s, ActionId a,
                          const std::vector<double>& u);

double bonus(const LearnerCounts& counts, const std::vector<double>& u, StateId s, ActionId a,
             const VisgoConfig& cfg);

struct VisgoOutput {
    QTable Q;
    ValueTable V;
    std::size_t iterations = 0;
    bool stopped_early = false;
    double rho = 0.0; // 1 - min P~(g|s,a) over K x A, the goal's own row included
};

/// Observer called with every iterate V^(i), starting from V^(0) = 0.
using IterateObserver = std::function<void(std::size_t, const std::vector<double>&)>;

/// One application of the VISGO operator to U (x and g handled specially).
std::vector<double> visgo_operator(const LearnerCounts& counts, StateId goal,
                                   const std::vector<double>& u, const VisgoConfig& cfg,
                                   QTable* q_out = nullptr);

/// Contraction modulus used for the iteration bound.
double visgo_rho(const LearnerCounts& counts, StateId goal);

/// ceil(log(1/eps_vi) / log(1/rho)).
double visgo_iteration_bound(double rho, double eps_vi);

VisgoOutput run_visgo(const LearnerCounts& counts, StateId goal, const VisgoConfig& cfg,
                      const IterateObserver& observer = {});

} // namespace valae
