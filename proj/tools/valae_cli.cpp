// valae: generate MDPs, solve them exactly, and run the exploration algorithm.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "valae/discovery.hpp"
#include "valae/harness.hpp"

using nlohmann::json;
using namespace valae;

namespace {

json parse_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        return text;
    }
}

json parse_assignments(const std::vector<std::string>& kvs) {
    json out = json::object();
    for (const auto& kv : kvs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ValidationError("expected key=value, got '" + kv + "'");
        out[kv.substr(0, eq)] = parse_value(kv.substr(eq + 1));
    }
    return out;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("cannot parse '" + path + "': " + e.what());
    }
}

void emit(const json& j, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream f(out);
    if (!f) throw ValidationError("cannot write '" + out + "'");
    f << j.dump(2) << '\n';
}

json values_json(const ValueTable& v) {
    json arr = json::array();
    for (double x : v.values) arr.push_back(is_unreachable(x) ? json("inf") : json(x));
    return arr;
}

// Flags shared by run and sweep; unset ones leave the config file untouched.
struct Overrides {
    std::string config;
    std::string env_file;
    std::vector<std::string> env_set;
    std::optional<double> L, eps, delta, scale;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode, output, trace_dir;
    std::vector<StateId> goals;
    std::optional<unsigned> workers;
    std::optional<std::size_t> max_rows;
    std::vector<double> sweep_L, sweep_eps, sweep_scale;
    std::vector<std::uint64_t> sweep_seeds;

    void attach(CLI::App* app, bool sweep) {
        app->add_option("-c,--config", config, "JSON experiment config");
        app->add_option("--env-file", env_file, "MDP JSON file used as the environment");
        app->add_option("--env", env_set, "environment parameter key=value (generator=NAME ...)");
        app->add_option("--L", L, "radius L");
        app->add_option("--eps", eps, "accuracy eps");
        app->add_option("--delta", delta, "confidence delta");
        app->add_option("--scale", scale, "constant scale in (0,1]");
        app->add_option("--seed", seed, "master seed");
        app->add_option("--mode", mode, "ax or ssp")->check(CLI::IsMember({"ax", "ssp"}));
        app->add_option("--goals", goals, "goal states for ssp mode")->delimiter(',');
        app->add_option("-o,--output", output, "CSV output path");
        app->add_option("--trace-dir", trace_dir, "directory for JSON traces");
        if (sweep) {
            app->add_option("--workers", workers, "worker threads");
            app->add_option("--max-rows", max_rows, "cap on the sweep size");
            app->add_option("--sweep-L", sweep_L, "L axis")->delimiter(',');
            app->add_option("--sweep-eps", sweep_eps, "eps axis")->delimiter(',');
            app->add_option("--sweep-scale", sweep_scale, "scale axis")->delimiter(',');
            app->add_option("--sweep-seeds", sweep_seeds, "seed axis")->delimiter(',');
        }
    }

    ExperimentConfig resolve() const {
        json j = config.empty() ? json::object() : read_json_file(config);
        if (!env_file.empty()) j["env"] = {{"file", env_file}};
        if (!env_set.empty()) {
            auto extra = parse_assignments(env_set);
            if (!j.contains("env") || !j["env"].is_object() || extra.contains("generator"))
                j["env"] = json::object();
            for (auto& [k, v] : extra.items()) j["env"][k] = v;
        }
        if (L) j["L"] = *L;
        if (eps) j["eps"] = *eps;
        if (delta) j["delta"] = *delta;
        if (scale) j["scale"] = *scale;
        if (seed) j["seed"] = *seed;
        if (mode) j["mode"] = *mode;
        if (!goals.empty()) j["goals"] = goals;
        if (output) j["output"] = *output;
        if (trace_dir) j["trace_dir"] = *trace_dir;
        if (workers) j["workers"] = *workers;
        if (max_rows) j["max_rows"] = *max_rows;
        if (!sweep_L.empty()) j["sweep"]["L"] = sweep_L;
        if (!sweep_eps.empty()) j["sweep"]["eps"] = sweep_eps;
        if (!sweep_scale.empty()) j["sweep"]["scale"] = sweep_scale;
        if (!sweep_seeds.empty()) j["sweep"]["seeds"] = sweep_seeds;
        auto c = config_from_json(j);
        c.validate();
        return c;
    }
};

int cmd_gen(const std::vector<std::string>& params, const std::string& generator,
            const std::string& out) {
    json env = parse_assignments(params);
    env["generator"] = generator;
    const auto mdp = build_environment(env);
    if (out.empty() || out == "-") std::cout << to_json(mdp).dump(2) << '\n';
    else save_mdp(mdp, out);
    return 0;
}

int cmd_solve(const std::string& path, std::optional<StateId> goal, std::optional<double> L,
              const std::vector<StateId>& known, const std::string& out) {
    const auto mdp = load_mdp(path);
    require_valid(mdp);
    if (goal.has_value() == L.has_value())
        throw ValidationError("solve needs exactly one of --goal or --controllable");
    json j;
    if (L) {
        j = {{"L", *L}, {"controllable", controllable_set(mdp, *L)}};
    } else {
        if (*goal >= mdp.num_states) throw ValidationError("goal out of range");
        if (known.empty()) {
            const auto sol = optimal_values(mdp, *goal);
            StateSet all(mdp.num_states);
            for (StateId s = 0; s < mdp.num_states; ++s) all[s] = s;
            j = {{"goal", *goal}, {"values", values_json(sol.V)},
                 {"policy", greedy_policy(sol.Q, all).actions}};
        } else {
            const auto k = normalize_set(known);
            j = {{"goal", *goal}, {"known", k},
                 {"values", values_json(restricted_values(mdp, k, *goal))}};
        }
    }
    emit(j, out);
    return 0;
}

int cmd_discover(const std::string& path, double L, double delta, double scale, std::uint64_t seed,
                 const std::string& out) {
    const auto mdp = load_mdp(path);
    require_valid(mdp);
    SimHandle sim(mdp.s0, make_stream(seed, "sim", "discover|" + path));
    CostLedger ledger;
    const auto res = discover(sim, mdp, {L, delta, scale}, &ledger);
    json pol = json::object();
    for (const auto& [g, p] : res.policies) pol[std::to_string(g)] = p.actions;
    emit({{"K", res.K},
          {"policies", pol},
          {"cost", ledger.total},
          {"steps", res.steps},
          {"passes", res.passes},
          {"controllable", controllable_set(mdp, L)}},
         out);
    return 0;
}

int cmd_run(const Overrides& o) {
    const auto c = o.resolve();
    const auto mdp = build_environment(c.env);
    const auto env_id = environment_id(c.env);
    const RunParams p{c.L, c.eps, c.delta, c.scale, c.seed};
    const auto r = run_one(mdp, env_id, p, c.mode, c.goals);

    bool need_header = true;
    if (std::filesystem::exists(c.output) && std::filesystem::file_size(c.output) > 0) {
        std::ifstream in(c.output);
        std::string first;
        std::getline(in, first);
        if (first != csv_header())
            throw ValidationError("'" + c.output + "' exists with a different header");
        need_header = false;
    }
    std::ofstream csv(c.output, std::ios::app | std::ios::binary);
    if (!csv) throw ValidationError("cannot write '" + c.output + "'");
    if (need_header) csv << csv_header() << '\n';
    csv << to_csv(r.row) << '\n';

    if (!c.trace_dir.empty()) {
        std::filesystem::create_directories(c.trace_dir);
        const auto path = std::filesystem::path(c.trace_dir) /
                          ("run_seed" + std::to_string(c.seed) + ".json");
        std::ofstream t(path);
        t << trace_json(to_json(c), r).dump(1) << '\n';
    }
    std::cout << csv_header() << '\n' << to_csv(r.row) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"VALAE autonomous exploration: generators, exact oracle, learner runs and sweeps"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "write a generated MDP as JSON");
    std::string generator, gen_out;
    std::vector<std::string> gen_params;
    gen->add_option("generator", generator, "gridworld|random|chain|three_state|tree_hard")
        ->required();
    gen->add_option("params", gen_params, "key=value parameters");
    gen->add_option("-o,--out", gen_out, "output path (stdout if omitted)");

    auto* solve = app.add_subcommand("solve", "exact values or the L-controllable set");
    std::string solve_path, solve_out;
    std::optional<StateId> goal;
    std::optional<double> controllable;
    std::vector<StateId> known;
    solve->add_option("mdp", solve_path, "MDP JSON file")->required();
    solve->add_option("--goal", goal, "goal state");
    solve->add_option("--controllable", controllable, "radius L");
    solve->add_option("--known", known, "restrict policies to these states")->delimiter(',');
    solve->add_option("-o,--out", solve_out, "output path (stdout if omitted)");

    auto* disc = app.add_subcommand("discover", "run state discovery only");
    std::string disc_path, disc_out;
    double dL = 1.0, ddelta = 0.1, dscale = 1.0;
    std::uint64_t dseed = 0;
    disc->add_option("mdp", disc_path, "MDP JSON file")->required();
    disc->add_option("--L", dL, "radius L")->required();
    disc->add_option("--delta", ddelta, "confidence delta");
    disc->add_option("--scale", dscale, "constant scale in (0,1]");
    disc->add_option("--seed", dseed, "seed");
    disc->add_option("-o,--out", disc_out, "output path (stdout if omitted)");

    Overrides run_o, sweep_o;
    auto* run = app.add_subcommand("run", "one seeded run; appends a CSV row");
    run_o.attach(run, false);
    auto* sweep = app.add_subcommand("sweep", "cross-product sweep into a resumable CSV");
    sweep_o.attach(sweep, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return cmd_gen(gen_params, generator, gen_out);
        if (solve->parsed()) return cmd_solve(solve_path, goal, controllable, known, solve_out);
        if (disc->parsed()) return cmd_discover(disc_path, dL, ddelta, dscale, dseed, disc_out);
        if (run->parsed()) return cmd_run(run_o);
        if (sweep->parsed()) {
            const auto c = sweep_o.resolve();
            const auto n = run_sweep(c, std::cerr);
            std::cerr << n << " rows written to " << c.output << '\n';
            return 0;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const RuntimeHardError& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
