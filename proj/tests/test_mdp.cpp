#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "valae/environments.hpp"
#include "valae/mdp.hpp"

using namespace valae;

namespace {

// s0 = 0 with action 1 moving to 1; state 1 self-loops. Costs 0.5 off RESET.
TabularMdp two_state() {
    auto m = TabularMdp::blank(2, 2, 0, 0.5, 1.0);
    m.install_reset();
    m.prob(0, 1, 1) = 1.0;
    m.prob(1, 1, 1) = 1.0;
    m.cost(0, 1) = 0.5;
    m.cost(1, 1) = 0.5;
    return m;
}

} // namespace

TEST_CASE("well-formed two-state MDP validates cleanly") {
    auto rep = validate(two_state());
    CHECK(rep.ok());
}

TEST_CASE("row summing to 0.9 is reported") {
    auto m = two_state();
    m.prob(0, 1, 1) = 0.9;
    auto rep = validate(m);
    CHECK(rep.mentions("non-stochastic row (0,1)"));
    CHECK_THROWS_AS(require_valid(m), ValidationError);
}

TEST_CASE("RESET row pointing away from s0 is reported") {
    auto m = two_state();
    m.prob(1, kReset, 0) = 0.0;
    m.prob(1, kReset, 1) = 1.0;
    CHECK(validate(m).mentions("RESET violation"));
}

TEST_CASE("costs outside [c_min,1] are reported") {
    auto m = two_state();
    m.cost(1, 1) = 0.2;
    CHECK(validate(m).mentions("cost out of [c_min,1] at (1,1)"));
}

TEST_CASE("step: RESET returns to s0 at c_reset") {
    auto m = make_random(5, 3, 2, 0.3, 11);
    m.c_reset = 0.7;
    m.install_reset();
    for (StateId s = 0; s < 5; ++s) {
        SimHandle sim(s, make_stream(1, "t"));
        auto tr = step(sim, m, kReset);
        CHECK(tr.next == m.s0);
        CHECK(tr.cost == 0.7);
    }
}

TEST_CASE("step: degenerate row and deterministic cost") {
    auto m = two_state();
    SimHandle sim(0, make_stream(3, "t"));
    auto tr = step(sim, m, 1);
    CHECK(tr.next == 1);
    CHECK(tr.cost == 0.5);
    CHECK(sim.step_counter == 1);
    CHECK(sim.cumulative_cost == 0.5);
}

TEST_CASE("step: out-of-range action throws") {
    auto m = two_state();
    SimHandle sim(0, make_stream(3, "t"));
    CHECK_THROWS_AS(step(sim, m, 2), ValidationError);
}

TEST_CASE("step: frequencies of a (0.3, 0.7) row within 3 binomial sd") {
    auto m = TabularMdp::blank(2, 2, 0, 1.0, 1.0);
    m.install_reset();
    m.prob(0, 1, 0) = 0.3;
    m.prob(0, 1, 1) = 0.7;
    m.prob(1, 1, 1) = 1.0;
    SimHandle sim(0, make_stream(42, "freq"));
    const int n = 100000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        sim.current_state = 0;
        hits += step(sim, m, 1).next == 0;
    }
    const double sd = std::sqrt(n * 0.3 * 0.7);
    CHECK(std::abs(hits - 0.3 * n) <= 3 * sd);
}

TEST_CASE("two-point costs stay in {c_min,1} and match the mean") {
    auto m = two_state();
    m.cost(0, 1) = 0.8;
    m.cost_dists[m.pair(0, 1)] = CostDist::TwoPoint;
    SimHandle sim(0, make_stream(5, "cost"));
    const int n = 100000;
    double sum = 0;
    for (int i = 0; i < n; ++i) {
        sim.current_state = 0;
        const double c = step(sim, m, 1).cost;
        CHECK((c == 0.5 || c == 1.0));
        sum += c;
    }
    // Var = (0.8-0.5)(1-0.8) = 0.06
    CHECK(std::abs(sum / n - 0.8) <= 3 * std::sqrt(0.06 / n));
}

TEST_CASE("same seed replays the same trajectory bit for bit") {
    auto m = make_gridworld(4, 4, 0.2, 1.0, 9);
    auto run = [&] {
        SimHandle sim(m.s0, make_stream(77, "sim", "k"));
        std::vector<std::pair<StateId, double>> out;
        for (int i = 0; i < 2000; ++i) {
            auto tr = step(sim, m, 1 + static_cast<ActionId>(i % 4));
            out.emplace_back(tr.next, tr.cost);
        }
        return out;
    };
    CHECK(run() == run());
}

TEST_CASE("merge with K = all states leaves no mass on x") {
    auto m = make_random(5, 3, 3, 0.5, 4);
    auto mg = merge(m, {0, 1, 2, 3, 4});
    CHECK(mg.x == 5);
    for (StateId s = 0; s < 5; ++s)
        for (ActionId a = 0; a < 3; ++a) CHECK(mg.model.prob(s, a, mg.x) == 0.0);
}

TEST_CASE("merge sums excluded mass into x") {
    auto m = TabularMdp::blank(4, 2, 0, 1.0, 1.0);
    m.install_reset();
    for (StateId s = 0; s < 4; ++s) m.prob(s, 1, s) = 1.0;
    m.prob(0, 1, 0) = 0.0;
    m.prob(0, 1, 0) = 0.3;
    m.prob(0, 1, 1) = 0.4;
    m.prob(0, 1, 2) = 0.2;
    m.prob(0, 1, 3) = 0.1;
    require_valid(m);
    auto mg = merge(m, {0, 1});
    CHECK(mg.model.prob(0, 1, mg.x) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(mg.model.prob(0, 1, 0) == 0.3);
    CHECK(mg.model.prob(0, 1, 1) == 0.4);
    CHECK(mg.local(3) == mg.x);
    CHECK(mg.local(1) == 1);
}

TEST_CASE("merged x rows jump to s0 at c_reset; every merged row is stochastic") {
    auto m = make_random(6, 3, 3, 0.2, 8);
    m.c_reset = 0.6;
    m.install_reset();
    auto mg = merge(m, {0, 2, 5});
    for (ActionId a = 0; a < 3; ++a) {
        CHECK(mg.model.prob(mg.x, a, 0) == 1.0);
        CHECK(mg.model.cost(mg.x, a) == 0.6);
    }
    CHECK(validate(mg.model).ok());
    for (StateId s = 0; s < mg.size(); ++s)
        for (ActionId a = 0; a < 3; ++a) {
            double sum = 0;
            for (double p : mg.model.row(s, a)) sum += p;
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
}

TEST_CASE("merge requires s0 in K") {
    auto m = make_chain(4);
    CHECK_THROWS_AS(merge(m, {1, 2}), ValidationError);
}

TEST_CASE("stepping on a merged model stays in K plus x") {
    auto m = make_gridworld(4, 4, 0.3, 1.0, 2);
    auto mg = merge(m, {0, 1, 4, 5});
    SimHandle sim(0, make_stream(1, "merged"));
    for (int i = 0; i < 5000; ++i) {
        auto tr = step(sim, mg.model, static_cast<ActionId>(i % 5));
        CHECK(tr.next < mg.size());
    }
}

TEST_CASE("JSON round trip is lossless") {
    auto m = make_random(7, 3, 3, 0.25, 21);
    m.cost_dists[m.pair(2, 1)] = CostDist::TwoPoint;
    auto back = mdp_from_json(to_json(m));
    CHECK(back == m);

    const auto path = std::filesystem::temp_directory_path() / "valae_mdp_roundtrip.json";
    save_mdp(m, path.string());
    CHECK(load_mdp(path.string()) == m);
    std::filesystem::remove(path);
}

TEST_CASE("malformed JSON is a validation error") {
    CHECK_THROWS_AS(mdp_from_json(nlohmann::json{{"S", 2}}), ValidationError);
    CHECK_THROWS_AS(load_mdp("/nonexistent/file.json"), ValidationError);
}

TEST_CASE("rng streams are keyed by label and run key") {
    CHECK(derive_stream_key(1, "sim", "a") != derive_stream_key(1, "sim", "b"));
    CHECK(derive_stream_key(1, "sim", "a") != derive_stream_key(2, "sim", "a"));
    CHECK(derive_stream_key(1, "sim", "a") == derive_stream_key(1, "sim", "a"));
    auto r = make_stream(5, "x");
    const auto first = r();
    CHECK(r.at(0) == first);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform();
        CHECK((u >= 0.0 && u < 1.0));
    }
}
