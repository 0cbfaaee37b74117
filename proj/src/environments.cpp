#include "valae/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "valae/rng.hpp"

namespace valae {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

double pow_int(double base, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

} // namespace

TabularMdp make_three_state(double L, double eps, std::size_t num_actions, ActionId starred) {
    require(L > 2.0, "three-state instance needs L > 2");
    require(eps > 0.0 && eps < 0.25, "three-state instance needs eps in (0, 1/4)");
    require(num_actions >= 2, "three-state instance needs at least one action besides RESET");
    require(starred >= 1 && starred < num_actions, "starred action must be a non-RESET action");

    using Ids = ThreeStateIds;
    auto m = TabularMdp::blank(3, num_actions, Ids::s0, 1.0, 1.0);
    const double hop = 2.0 / L;
    for (ActionId a = 1; a < num_actions; ++a) {
        m.prob(Ids::s0, a, Ids::s1) = hop;
        m.prob(Ids::s0, a, Ids::s0) = 1.0 - hop;
        const double p = a == starred ? hop : 2.0 / ((1.0 + 6.0 * eps) * L);
        m.prob(Ids::s1, a, Ids::goal) = p;
        m.prob(Ids::s1, a, Ids::s1) = 1.0 - p;
        m.prob(Ids::goal, a, Ids::goal) = 1.0;
    }
    m.install_reset();
    return m;
}

HardInstance make_tree_hard(const HardInstanceParams& p) {
    require(p.L > 4.0, "tree instance needs L > 4");
    require(p.S_L >= 4, "tree instance needs S_L >= 4");
    require(p.num_actions > 4, "tree instance needs A > 4");
    require(p.eps > 0.0 && p.eps < 0.25, "tree instance needs eps in (0, 1/4)");
    require(p.c_min > 0.0 && p.c_min <= 1.0, "tree instance needs c_min in (0, 1]");
    const std::size_t branch = p.num_actions - 1;
    const int half = static_cast<int>(std::floor(p.L / 2.0));
    require(static_cast<double>(p.S_L) <= pow_int(static_cast<double>(branch), half),
            "infeasible tree instance: S_L > (A-1)^floor(L/2)");

    const std::size_t leaves = (p.S_L + 1) / 2;
    int d0 = 0;
    while (pow_int(static_cast<double>(branch), d0) < static_cast<double>(leaves)) ++d0;
    require(d0 <= p.L / 2.0, "infeasible tree instance: depth exceeds L/2");
    const double d1 = p.L - d0;

    // Kept nodes at depth k are the leftmost ceil(leaves / branch^(d0-k)) positions.
    std::vector<std::size_t> width(d0 + 1), offset(d0 + 1);
    std::size_t total = 0;
    for (int k = 0; k <= d0; ++k) {
        const double span = pow_int(static_cast<double>(branch), d0 - k);
        width[k] = static_cast<std::size_t>(std::ceil(static_cast<double>(leaves) / span));
        offset[k] = total;
        total += width[k];
    }
    const StateId goal = total;
    require(p.variant == HardVariant::M0 || p.starred_leaf < leaves, "starred leaf out of range");
    require(p.variant == HardVariant::M0 ||
                (p.starred_action >= 1 && p.starred_action < p.num_actions),
            "starred action must be a non-RESET action");

    HardInstance out;
    out.mdp = TabularMdp::blank(total + 1, p.num_actions, 0, p.c_min, 1.0);
    out.goal = goal;
    out.d0 = d0;
    out.d1 = d1;
    auto& m = out.mdp;

    for (int k = 0; k < d0; ++k) {
        for (std::size_t pos = 0; pos < width[k]; ++pos) {
            const StateId s = offset[k] + pos;
            std::vector<StateId> children;
            for (std::size_t i = 0; i < branch; ++i) {
                const std::size_t cpos = pos * branch + i;
                if (cpos < width[k + 1]) children.push_back(offset[k + 1] + cpos);
            }
            for (ActionId a = 1; a < p.num_actions; ++a)
                m.prob(s, a, children[(a - 1) % children.size()]) = 1.0;
        }
    }
    const double leak = p.c_min / ((1.0 + 6.0 * p.eps) * d1);
    for (std::size_t pos = 0; pos < width[d0]; ++pos) {
        const StateId s = offset[d0] + pos;
        out.leaves.push_back(s);
        for (ActionId a = 1; a < p.num_actions; ++a) {
            const bool star = p.variant == HardVariant::Starred && pos == p.starred_leaf &&
                              a == p.starred_action;
            const double q = star ? p.c_min / d1 : leak;
            m.prob(s, a, goal) = q;
            m.prob(s, a, s) = 1.0 - q;
            m.cost(s, a) = p.c_min;
        }
    }
    for (ActionId a = 1; a < p.num_actions; ++a) m.prob(goal, a, goal) = 1.0;
    m.install_reset();
    return out;
}

TabularMdp make_gridworld(std::size_t width, std::size_t height, double slip, double c_min,
                          std::uint64_t seed) {
    require(width >= 1 && height >= 1, "gridworld needs positive dimensions");
    require(slip >= 0.0 && slip < 0.5, "gridworld needs slip in [0, 0.5)");
    require(c_min > 0.0 && c_min <= 1.0, "gridworld needs c_min in (0, 1]");
    const std::size_t S = width * height;
    auto m = TabularMdp::blank(S, 5, 0, c_min, 1.0);
    auto rng = make_stream(seed, "gridworld");
    const int dx[4] = {0, 0, -1, 1};
    const int dy[4] = {-1, 1, 0, 0};
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const StateId s = y * width + x;
            double w[4];
            for (double& wi : w) wi = 0.1 + rng.uniform();
            auto target = [&](int d) -> StateId {
                const long nx = static_cast<long>(x) + dx[d];
                const long ny = static_cast<long>(y) + dy[d];
                if (nx < 0 || ny < 0 || nx >= static_cast<long>(width) ||
                    ny >= static_cast<long>(height))
                    return s;
                return static_cast<StateId>(ny) * width + static_cast<StateId>(nx);
            };
            for (int d = 0; d < 4; ++d) {
                const ActionId a = static_cast<ActionId>(d + 1);
                m.prob(s, a, target(d)) += 1.0 - slip;
                if (slip == 0.0) continue;
                double other = 0.0;
                for (int e = 0; e < 4; ++e)
                    if (e != d) other += w[e];
                for (int e = 0; e < 4; ++e)
                    if (e != d) m.prob(s, a, target(e)) += slip * w[e] / other;
            }
        }
    }
    m.install_reset();
    return m;
}

TabularMdp make_random(std::size_t S, std::size_t A, std::size_t out_degree, double c_min,
                       std::uint64_t seed) {
    require(S >= 1 && A >= 1, "random MDP needs at least one state and one action");
    require(out_degree >= 1 && out_degree <= S, "random MDP needs 1 <= out_degree <= S");
    require(c_min > 0.0 && c_min <= 1.0, "random MDP needs c_min in (0, 1]");
    auto m = TabularMdp::blank(S, A, 0, c_min, 1.0);
    auto rng = make_stream(seed, "random_mdp");
    std::vector<StateId> ids(S);
    for (StateId s = 0; s < S; ++s) {
        for (ActionId a = 1; a < A; ++a) {
            std::iota(ids.begin(), ids.end(), 0);
            // partial Fisher-Yates for the successor set
            for (std::size_t i = 0; i < out_degree; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(rng.uniform() * (S - i));
                std::swap(ids[i], ids[std::min(j, S - 1)]);
            }
            std::vector<double> w(out_degree);
            double total = 0.0;
            for (double& wi : w) total += (wi = 0.05 + rng.uniform());
            double assigned = 0.0;
            for (std::size_t i = 0; i + 1 < out_degree; ++i) {
                const double q = w[i] / total;
                m.prob(s, a, ids[i]) = q;
                assigned += q;
            }
            m.prob(s, a, ids[out_degree - 1]) = 1.0 - assigned;
            m.cost(s, a) = c_min + (1.0 - c_min) * rng.uniform();
        }
    }
    m.install_reset();
    return m;
}

TabularMdp make_chain(std::size_t length, std::size_t num_actions) {
    require(length >= 1, "chain needs at least one state");
    require(num_actions >= 2, "chain needs a move action besides RESET");
    auto m = TabularMdp::blank(length, num_actions, 0, 1.0, 1.0);
    for (StateId s = 0; s < length; ++s) {
        m.prob(s, 1, std::min(s + 1, length - 1)) = 1.0;
        for (ActionId a = 2; a < num_actions; ++a) m.prob(s, a, s) = 1.0;
    }
    m.install_reset();
    return m;
}

} // namespace valae
