#pragma once

#include <cstdint>

#include "valae/mdp.hpp"

namespace valae {

/// Three-state family: s0 = 0, middle state s1 = 1, goal g = 2. `num_actions` counts RESET.
/// At s1 the starred action reaches g with probability 2/L, every other one with 2/((1+6 eps)L).
struct ThreeStateIds {
    static constexpr StateId s0 = 0;
    static constexpr StateId s1 = 1;
    static constexpr StateId goal = 2;
};

TabularMdp make_three_state(double L, double eps, std::size_t num_actions,
                            ActionId starred_action = 1);

enum class HardVariant { M0, Starred };

struct HardInstanceParams {
    double L = 10;
    std::size_t S_L = 4;
    std::size_t num_actions = 5; // counts RESET; the tree branches over the other A-1
    double eps = 0.1;
    double c_min = 1.0;
    HardVariant variant = HardVariant::Starred;
    std::size_t starred_leaf = 0;  // ordinal among the leaves, left to right
    ActionId starred_action = 1;
};

struct HardInstance {
    TabularMdp mdp;
    StateId goal = 0;
    StateSet leaves;
    int d0 = 0;
    double d1 = 0;
};

/// Tree-shaped family: an (A-1)-ary tree of depth d0 whose ceil(S_L/2) leftmost leaves are kept,
/// each leaf leaking to a shared goal. States are numbered breadth-first, the goal last.
HardInstance make_tree_hard(const HardInstanceParams& params);

/// Grid with actions RESET, up, down, left, right. s0 is cell (0,0) = state 0, state id is
/// y*width + x. A move goes the intended way with probability 1 - slip; the slip mass is split
/// over the other three directions with per-cell weights drawn from `seed`. Bumping a wall stays put.
TabularMdp make_gridworld(std::size_t width, std::size_t height, double slip_prob, double c_min,
                          std::uint64_t seed);

/// Random sparse MDP: each non-RESET row has `out_degree` distinct successors with random weights,
/// costs uniform in [c_min, 1].
TabularMdp make_random(std::size_t num_states, std::size_t num_actions, std::size_t out_degree,
                       double c_min, std::uint64_t seed);

/// Deterministic unit-cost chain 0 -> 1 -> ... -> n-1. Action 1 moves right, other actions stay.
TabularMdp make_chain(std::size_t length, std::size_t num_actions = 2);

} // namespace valae
