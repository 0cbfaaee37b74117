#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>

#include "test_support.hpp"
#include "valae/environments.hpp"
#include "valae/oracle.hpp"

using namespace valae;

TEST_CASE("three-state instance: transition labels") {
    const double L = 10, eps = 0.1;
    auto m = make_three_state(L, eps, 4, 2);
    CHECK(validate(m).ok());
    for (ActionId a = 1; a < 4; ++a) CHECK(m.prob(0, a, 1) == doctest::Approx(0.2));
    CHECK(m.prob(1, 2, 2) == doctest::Approx(2 / L));
    CHECK(m.prob(1, 1, 2) == doctest::Approx(2 / ((1 + 6 * eps) * L)));
    CHECK(m.prob(1, 3, 2) == doctest::Approx(2 / ((1 + 6 * eps) * L)));
    for (ActionId a = 1; a < 4; ++a) CHECK(m.prob(2, a, 2) == 1.0);
}

TEST_CASE("three-state instance: small eps makes actions at s1 nearly identical") {
    auto m = make_three_state(10, 1e-9, 3);
    CHECK(std::abs(m.prob(1, 1, 2) - m.prob(1, 2, 2)) < 1e-8);
}

TEST_CASE("three-state instance: parameter ranges") {
    CHECK_THROWS_AS(make_three_state(2, 0.1, 3), ValidationError);
    CHECK_THROWS_AS(make_three_state(10, 0.25, 3), ValidationError);
    CHECK_THROWS_AS(make_three_state(10, 0.1, 1), ValidationError);
}

TEST_CASE("tree instance: analytic values over the parameter grid") {
    for (double L : {6.0, 10.0, 20.0})
        for (double eps : {0.05, 0.1, 0.2})
            for (double c_min : {1.0, 0.5}) {
                HardInstanceParams p;
                p.L = L;
                p.S_L = 4;
                p.num_actions = 5;
                p.eps = eps;
                p.c_min = c_min;
                p.variant = HardVariant::Starred;
                auto st = make_tree_hard(p);
                CHECK(validate(st.mdp).ok());
                CHECK(st.leaves.size() * 2 >= p.S_L);
                CHECK(st.d0 <= L / 2);
                CHECK(st.d0 + st.d1 == L);
                CHECK(std::abs(optimal_values(st.mdp, st.goal).V[0] - L) < 1e-8);

                p.variant = HardVariant::M0;
                auto m0 = make_tree_hard(p);
                const double want = st.d0 + (1 + 6 * eps) * st.d1;
                const double v = optimal_values(m0.mdp, m0.goal).V[0];
                CHECK(std::abs(v - want) < 1e-8);
                CHECK(v > (1 + eps) * L);
            }
}

TEST_CASE("tree instance: structure") {
    HardInstanceParams p;
    p.L = 12;
    p.S_L = 20;
    p.num_actions = 4; // ternary
    CHECK_THROWS_AS(make_tree_hard(p), ValidationError); // A must exceed 4
    p.num_actions = 5; // 4-ary
    auto h = make_tree_hard(p);
    // 10 leaves need depth 2 (16 >= 10); widths 1, 3, 10.
    CHECK(h.d0 == 2);
    CHECK(h.leaves.size() == 10);
    CHECK(h.mdp.num_states == 1 + 3 + 10 + 1);
    CHECK(h.goal == 14);
    // Interior moves are deterministic with unit cost.
    for (StateId s = 0; s < 4; ++s)
        for (ActionId a = 1; a < 5; ++a) {
            double mx = 0;
            for (double q : h.mdp.row(s, a)) mx = std::max(mx, q);
            CHECK(mx == 1.0);
            CHECK(h.mdp.cost(s, a) == 1.0);
        }
    // Leaves are the leftmost ones, in breadth-first order.
    CHECK(h.leaves.front() == 4);
    CHECK(h.leaves.back() == 13);
}

TEST_CASE("tree instance: infeasible combinations are rejected") {
    HardInstanceParams p;
    p.L = 5; // floor(L/2) = 2, 4^2 = 16
    p.S_L = 17;
    p.num_actions = 5;
    CHECK_THROWS_AS(make_tree_hard(p), ValidationError);
    p.S_L = 3;
    CHECK_THROWS_AS(make_tree_hard(p), ValidationError);
    p.S_L = 4;
    p.L = 4;
    CHECK_THROWS_AS(make_tree_hard(p), ValidationError);
}

TEST_CASE("tree leaves agree with the three-state middle state row by row") {
    // d0 = 1 and d1 = 9 on the tree matches 2/L = 1/9 on the three-state family with L = 18.
    const double eps = 0.15;
    HardInstanceParams p;
    p.L = 10;
    p.S_L = 4;
    p.num_actions = 5;
    p.eps = eps;
    p.starred_leaf = 0;
    p.starred_action = 3;
    auto tree = make_tree_hard(p);
    auto three = make_three_state(18, eps, 5, 3);
    const StateId leaf = tree.leaves[0];
    for (ActionId a = 1; a < 5; ++a) {
        CHECK(tree.mdp.prob(leaf, a, tree.goal) ==
              doctest::Approx(three.prob(1, a, 2)).epsilon(1e-14));
        CHECK(tree.mdp.prob(leaf, a, leaf) ==
              doctest::Approx(three.prob(1, a, 1)).epsilon(1e-14));
        CHECK(tree.mdp.cost(leaf, a) == three.cost(1, a));
    }
}

TEST_CASE("gridworld without slip: optimal corner values are Manhattan distances") {
    auto m = make_gridworld(3, 3, 0.0, 1.0, 4);
    CHECK(validate(m).ok());
    for (StateId g = 0; g < 9; ++g) {
        const double manhattan = static_cast<double>(g % 3 + g / 3);
        CHECK(optimal_values(m, g).V[0] == doctest::Approx(manhattan));
    }
    for (StateId s = 0; s < 9; ++s)
        for (ActionId a = 1; a < 5; ++a) {
            int ones = 0;
            for (double q : m.row(s, a)) ones += q == 1.0;
            CHECK(ones == 1);
        }
}

TEST_CASE("gridworld round-trips through JSON and is deterministic under the seed") {
    auto m = make_gridworld(4, 3, 0.2, 0.5, 8);
    CHECK(validate(mdp_from_json(to_json(m))).ok());
    CHECK(make_gridworld(4, 3, 0.2, 0.5, 8) == m);
    CHECK_FALSE(make_gridworld(4, 3, 0.2, 0.5, 9) == m);
}

TEST_CASE("random MDP generator") {
    auto m = make_random(8, 4, 3, 0.2, 31);
    CHECK(validate(m).ok());
    CHECK(make_random(8, 4, 3, 0.2, 31) == m);
    auto det = make_random(8, 4, 1, 0.2, 5);
    for (StateId s = 0; s < 8; ++s)
        for (ActionId a = 0; a < 4; ++a) {
            int ones = 0;
            for (double q : det.row(s, a)) ones += q == 1.0;
            CHECK(ones == 1);
        }
    CHECK_THROWS_AS(make_random(4, 2, 5, 0.5, 1), ValidationError);
}

TEST_CASE("chain generator") {
    auto m = make_chain(5);
    CHECK(validate(m).ok());
    for (StateId s = 0; s < 4; ++s) CHECK(m.prob(s, 1, s + 1) == 1.0);
    CHECK(optimal_values(m, 4).V[0] == doctest::Approx(4.0));
}
