#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "valae/valae.hpp"

namespace valae {

/// Shortest decimal text that parses back to the same double ("inf" for +infinity).
std::string format_number(double v);

/// Builds an MDP from an environment spec: {"generator": name, ...params} or {"file": path}.
/// Generators: gridworld, random, chain, three_state, tree_hard.
TabularMdp build_environment(const nlohmann::json& env);

/// Stable, comma-free identifier of an environment spec, e.g. "gridworld:c_min=1;height=4;...".
std::string environment_id(const nlohmann::json& env);

struct SweepAxes {
    std::vector<double> L;
    std::vector<double> eps;
    std::vector<double> scale;
    std::vector<std::uint64_t> seeds;
};

struct ExperimentConfig {
    nlohmann::json env;
    double L = 1.0;
    double eps = 0.5;
    double delta = 0.1;
    double scale = 1.0;
    std::uint64_t seed = 0;
    Mode mode = Mode::AX;
    StateSet goals;
    SweepAxes sweep; // empty axes fall back to the scalar value
    std::string output = "results.csv";
    std::string trace_dir;
    std::size_t max_rows = 10000;
    unsigned workers = 1;

    /// Throws ValidationError naming the offending field.
    void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

struct RunParams {
    double L = 1.0;
    double eps = 0.5;
    double delta = 0.1;
    double scale = 1.0;
    std::uint64_t seed = 0;
};

/// Canonical text of (env id, parameters); keys the RNG stream and identifies CSV rows.
std::string run_key(const std::string& env_id, const RunParams& p);

struct ResultRow {
    std::uint64_t seed = 0;
    std::string env;
    double L = 0, eps = 0, delta = 0, scale = 0;
    double C_T = 0;
    std::uint64_t steps = 0;
    std::size_t rounds_total = 0, rounds_fail = 0, rounds_skip = 0, rounds_success = 0;
    std::size_t K_size = 0;
    bool ax_valid = false;
    double max_policy_gap = 0;
    double regret_total = 0;
    std::int64_t wall_time_ms = 0;

    /// Fields that identify the row: seed,env,L,eps,delta,scale.
    std::string key() const;
};

const std::string& csv_header();
std::string to_csv(const ResultRow& r);
/// Throws ValidationError on a malformed line.
ResultRow parse_csv(const std::string& line);

struct Validity {
    bool covers = false;       // K contains the L-controllable set
    bool ax_valid = false;
    double max_gap = 0.0;      // max over goals of V^{pi_s}_s(s0) - V*_{K,s}(s0)
    StateSet controllable;
    std::map<StateId, double> gaps;
};

/// Scores an output against the exact oracle on the true model.
Validity score_validity(const TabularMdp& mdp, const AxResult& res, double L, double eps,
                        const StateSet& goals);

struct RunOutput {
    ResultRow row;
    AxResult result;
    Validity validity;
    double sim_cost = 0.0;          // simulator's own counter
    std::uint64_t sim_steps = 0;
};

/// One seeded end-to-end run. The simulator stream is derived from (seed, "sim", run key).
RunOutput run_one(const TabularMdp& mdp, const std::string& env_id, const RunParams& p,
                  Mode mode = Mode::AX, const StateSet& goals = {});

/// JSON trace of a run: effective config, row, result and validity details.
nlohmann::json trace_json(const nlohmann::json& effective_config, const RunOutput& out);

/// Row parameters of a sweep in file order: L, then eps, then scale, then seed.
std::vector<RunParams> sweep_rows(const ExperimentConfig& c);

/// Runs a sweep into c.output, resuming after any complete, consistent prefix already there.
/// Returns the number of rows computed in this call.
std::size_t run_sweep(const ExperimentConfig& c, std::ostream& log);

} // namespace valae
