#include "valae/mdp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace valae {

std::string to_string(CostDist d) {
    switch (d) {
    case CostDist::Deterministic:
        return "deterministic";
    case CostDist::TwoPoint:
        return "two_point";
    }
    return "deterministic";
}

CostDist cost_dist_from_string(const std::string& s) {
    if (s == "deterministic") return CostDist::Deterministic;
    if (s == "two_point") return CostDist::TwoPoint;
    throw ValidationError("unknown cost distribution '" + s + "'");
}

TabularMdp TabularMdp::blank(std::size_t states, std::size_t actions, StateId s0, double c_min,
                             double c_reset) {
    TabularMdp m;
    m.num_states = states;
    m.num_actions = actions;
    m.s0 = s0;
    m.c_min = c_min;
    m.c_reset = c_reset;
    m.transitions.assign(states * actions * states, 0.0);
    m.cost_means.assign(states * actions, 1.0);
    m.cost_dists.assign(states * actions, CostDist::Deterministic);
    return m;
}

void TabularMdp::install_reset() {
    for (StateId s = 0; s < num_states; ++s) {
        auto r = row(s, kReset);
        std::fill(r.begin(), r.end(), 0.0);
        r[s0] = 1.0;
        cost(s, kReset) = c_reset;
        cost_dists[pair(s, kReset)] = CostDist::Deterministic;
    }
}

bool ValidationReport::mentions(const std::string& needle) const {
    for (const auto& v : violations)
        if (v.find(needle) != std::string::npos) return true;
    return false;
}

namespace {

std::string pair_name(StateId s, ActionId a) {
    return "(" + std::to_string(s) + "," + std::to_string(a) + ")";
}

} // namespace

ValidationReport validate(const TabularMdp& mdp) {
    ValidationReport rep;
    auto& v = rep.violations;
    const std::size_t S = mdp.num_states, A = mdp.num_actions;
    if (S == 0) v.emplace_back("empty state space");
    if (A == 0) v.emplace_back("empty action space (RESET required)");
    if (mdp.transitions.size() != S * A * S)
        v.emplace_back("transition tensor has wrong size");
    if (mdp.cost_means.size() != S * A || mdp.cost_dists.size() != S * A)
        v.emplace_back("cost table has wrong size");
    if (!v.empty()) return rep;

    if (mdp.s0 >= S) v.emplace_back("s0 out of range");
    if (!(mdp.c_min > 0.0 && mdp.c_min <= 1.0)) v.emplace_back("c_min outside (0,1]");
    if (!(mdp.c_reset >= mdp.c_min && mdp.c_reset <= 1.0))
        v.emplace_back("c_reset outside [c_min,1]");
    if (!v.empty()) return rep;

    for (StateId s = 0; s < S; ++s) {
        for (ActionId a = 0; a < A; ++a) {
            double sum = 0.0;
            bool negative = false;
            for (double p : mdp.row(s, a)) {
                if (!(p >= 0.0)) negative = true;
                sum += p;
            }
            if (negative || std::abs(sum - 1.0) > kRowTolerance)
                v.push_back("non-stochastic row " + pair_name(s, a));
            const double c = mdp.cost(s, a);
            if (!(c >= mdp.c_min && c <= 1.0))
                v.push_back("cost out of [c_min,1] at " + pair_name(s, a));
        }
        if (mdp.prob(s, kReset, mdp.s0) != 1.0)
            v.push_back("RESET violation at state " + std::to_string(s) + ": not a jump to s0");
        if (mdp.cost(s, kReset) != mdp.c_reset ||
            mdp.dist(s, kReset) != CostDist::Deterministic)
            v.push_back("RESET violation at state " + std::to_string(s) +
                        ": cost is not deterministically c_reset");
    }
    return rep;
}

void require_valid(const TabularMdp& mdp) {
    auto rep = validate(mdp);
    if (rep.ok()) return;
    std::ostringstream os;
    os << "invalid MDP:";
    for (const auto& v : rep.violations) os << "\n  " << v;
    throw ValidationError(os.str());
}

StateId MergedMdp::local(StateId global_state) const {
    const auto& l = to_local.at(global_state);
    return l ? *l : x;
}

MergedMdp merge(const TabularMdp& mdp, const StateSet& known_in) {
    StateSet known = normalize_set(known_in);
    if (!set_contains(known, mdp.s0)) throw ValidationError("merge: s0 must belong to K");
    for (StateId s : known)
        if (s >= mdp.num_states) throw ValidationError("merge: state id out of range");

    MergedMdp out;
    out.known = known;
    out.to_local.assign(mdp.num_states, std::nullopt);
    for (std::size_t i = 0; i < known.size(); ++i) out.to_local[known[i]] = i;
    out.x = known.size();

    const std::size_t n = known.size() + 1;
    const std::size_t A = mdp.num_actions;
    out.model = TabularMdp::blank(n, A, *out.to_local[mdp.s0], mdp.c_min, mdp.c_reset);
    auto& m = out.model;
    for (std::size_t i = 0; i < known.size(); ++i) {
        const StateId s = known[i];
        for (ActionId a = 0; a < A; ++a) {
            double outside = 0.0;
            auto src = mdp.row(s, a);
            for (StateId t = 0; t < mdp.num_states; ++t) {
                if (src[t] == 0.0) continue;
                if (auto l = out.to_local[t]) m.prob(i, a, *l) = src[t];
                else outside += src[t];
            }
            m.prob(i, a, out.x) = outside;
            m.cost(i, a) = mdp.cost(s, a);
            m.cost_dists[m.pair(i, a)] = mdp.dist(s, a);
        }
    }
    for (ActionId a = 0; a < A; ++a) {
        m.prob(out.x, a, m.s0) = 1.0;
        m.cost(out.x, a) = mdp.c_reset;
    }
    return out;
}

Transition step(SimHandle& sim, const TabularMdp& mdp, ActionId action) {
    if (action >= mdp.num_actions)
        throw ValidationError("step: action " + std::to_string(action) + " out of range");
    const StateId s = sim.current_state;
    auto r = mdp.row(s, action);

    const double u = sim.rng.uniform();
    double acc = 0.0;
    StateId next = mdp.num_states;
    StateId last_positive = 0;
    for (StateId t = 0; t < r.size(); ++t) {
        if (r[t] <= 0.0) continue;
        last_positive = t;
        acc += r[t];
        if (u < acc) {
            next = t;
            break;
        }
    }
    if (next == mdp.num_states) next = last_positive; // u beyond accumulated round-off

    double cost = mdp.cost(s, action);
    if (mdp.dist(s, action) == CostDist::TwoPoint && mdp.c_min < 1.0) {
        const double p_high = (cost - mdp.c_min) / (1.0 - mdp.c_min);
        cost = sim.rng.uniform() < p_high ? 1.0 : mdp.c_min;
    }

    sim.current_state = next;
    sim.step_counter += 1;
    sim.cumulative_cost += cost;
    return {next, cost};
}

nlohmann::json to_json(const TabularMdp& mdp) {
    using nlohmann::json;
    json P = json::array();
    json c = json::array();
    json dist = json::array();
    for (StateId s = 0; s < mdp.num_states; ++s) {
        json Ps = json::array(), cs = json::array(), ds = json::array();
        for (ActionId a = 0; a < mdp.num_actions; ++a) {
            auto r = mdp.row(s, a);
            Ps.push_back(std::vector<double>(r.begin(), r.end()));
            cs.push_back(mdp.cost(s, a));
            ds.push_back(to_string(mdp.dist(s, a)));
        }
        P.push_back(std::move(Ps));
        c.push_back(std::move(cs));
        dist.push_back(std::move(ds));
    }
    return json{{"S", mdp.num_states}, {"A", mdp.num_actions}, {"reset_action", kReset},
                {"s0", mdp.s0},        {"c_min", mdp.c_min},   {"c_reset", mdp.c_reset},
                {"P", P},              {"c", c},               {"cost_dist", dist}};
}

TabularMdp mdp_from_json(const nlohmann::json& j) {
    try {
        const auto S = j.at("S").get<std::size_t>();
        const auto A = j.at("A").get<std::size_t>();
        if (j.value("reset_action", kReset) != kReset)
            throw ValidationError("reset_action must be 0");
        auto m = TabularMdp::blank(S, A, j.at("s0").get<StateId>(), j.at("c_min").get<double>(),
                                   j.at("c_reset").get<double>());
        const auto& P = j.at("P");
        const auto& c = j.at("c");
        if (P.size() != S || c.size() != S) throw ValidationError("P/c must have S rows");
        for (StateId s = 0; s < S; ++s) {
            if (P[s].size() != A || c[s].size() != A)
                throw ValidationError("P/c rows must have A entries");
            for (ActionId a = 0; a < A; ++a) {
                const auto& r = P[s][a];
                if (r.size() != S) throw ValidationError("P rows must have S entries");
                for (StateId t = 0; t < S; ++t) m.prob(s, a, t) = r[t].get<double>();
                m.cost(s, a) = c[s][a].get<double>();
            }
        }
        if (j.contains("cost_dist")) {
            const auto& d = j.at("cost_dist");
            if (d.is_string()) {
                std::fill(m.cost_dists.begin(), m.cost_dists.end(),
                          cost_dist_from_string(d.get<std::string>()));
            } else {
                for (StateId s = 0; s < S; ++s)
                    for (ActionId a = 0; a < A; ++a)
                        m.cost_dists[m.pair(s, a)] =
                            cost_dist_from_string(d.at(s).at(a).get<std::string>());
            }
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed MDP json: ") + e.what());
    }
}

TabularMdp load_mdp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open MDP file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("cannot parse '" + path + "': " + e.what());
    }
    return mdp_from_json(j);
}

void save_mdp(const TabularMdp& mdp, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << to_json(mdp).dump(1) << '\n';
}

} // namespace valae
