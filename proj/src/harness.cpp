#include "valae/harness.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "valae/environments.hpp"

namespace valae {

using nlohmann::json;

std::string format_number(double v) {
    if (is_unreachable(v)) return "inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s, const std::string& what) {
    if (s == "inf") return kUnreachable;
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ValidationError("bad number '" + s + "' in " + what);
    return v;
}

std::uint64_t parse_uint(const std::string& s, const std::string& what) {
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ValidationError("bad integer '" + s + "' in " + what);
    return v;
}

template <class T>
T param(const json& env, const char* key, T fallback) {
    if (!env.contains(key)) return fallback;
    try {
        return env.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("environment parameter '") + key + "' has the wrong type");
    }
}

template <class T>
T required(const json& env, const char* key) {
    if (!env.contains(key))
        throw ValidationError(std::string("environment parameter '") + key + "' is required");
    return param<T>(env, key, T{});
}

void only_keys(const json& env, std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : env.items()) {
        if (k == "generator") continue;
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw ValidationError("unknown environment parameter '" + k + "'");
    }
}

} // namespace

TabularMdp build_environment(const json& env) {
    if (!env.is_object()) throw ValidationError("environment spec must be a JSON object");
    TabularMdp m;
    if (env.contains("file")) {
        only_keys(env, {"file"});
        m = load_mdp(env.at("file").get<std::string>());
    } else {
        const auto gen = required<std::string>(env, "generator");
        if (gen == "gridworld") {
            only_keys(env, {"width", "height", "slip", "c_min", "seed"});
            m = make_gridworld(required<std::size_t>(env, "width"),
                               required<std::size_t>(env, "height"), param(env, "slip", 0.0),
                               param(env, "c_min", 1.0), param<std::uint64_t>(env, "seed", 0));
        } else if (gen == "random") {
            only_keys(env, {"S", "A", "out_degree", "c_min", "seed"});
            m = make_random(required<std::size_t>(env, "S"), required<std::size_t>(env, "A"),
                            required<std::size_t>(env, "out_degree"), param(env, "c_min", 1.0),
                            param<std::uint64_t>(env, "seed", 0));
        } else if (gen == "chain") {
            only_keys(env, {"length", "A"});
            m = make_chain(required<std::size_t>(env, "length"),
                           param<std::size_t>(env, "A", 2));
        } else if (gen == "three_state") {
            only_keys(env, {"L", "eps", "A", "starred"});
            m = make_three_state(required<double>(env, "L"), required<double>(env, "eps"),
                                 required<std::size_t>(env, "A"),
                                 param<std::size_t>(env, "starred", 1));
        } else if (gen == "tree_hard") {
            only_keys(env, {"L", "S_L", "A", "eps", "c_min", "variant", "starred_leaf",
                            "starred_action"});
            HardInstanceParams p;
            p.L = required<double>(env, "L");
            p.S_L = required<std::size_t>(env, "S_L");
            p.num_actions = required<std::size_t>(env, "A");
            p.eps = required<double>(env, "eps");
            p.c_min = param(env, "c_min", 1.0);
            const auto variant = param<std::string>(env, "variant", "starred");
            if (variant == "starred") p.variant = HardVariant::Starred;
            else if (variant == "m0") p.variant = HardVariant::M0;
            else throw ValidationError("tree_hard variant must be 'starred' or 'm0'");
            p.starred_leaf = param<std::size_t>(env, "starred_leaf", 0);
            p.starred_action = param<std::size_t>(env, "starred_action", 1);
            m = make_tree_hard(p).mdp;
        } else {
            throw ValidationError("unknown generator '" + gen + "'");
        }
    }
    require_valid(m);
    return m;
}

std::string environment_id(const json& env) {
    std::string id;
    if (env.contains("file")) return "file:" + env.at("file").get<std::string>();
    id = env.value("generator", std::string("?")) + ":";
    bool first = true;
    for (const auto& [k, v] : env.items()) {
        if (k == "generator") continue;
        if (!first) id += ";";
        first = false;
        id += k + "=";
        if (v.is_number()) id += format_number(v.get<double>());
        else if (v.is_string()) id += v.get<std::string>();
        else id += v.dump();
    }
    for (char& c : id)
        if (c == ',' || c == '"' || c == '\n') c = '_';
    return id;
}

void ExperimentConfig::validate() const {
    if (env.is_null()) throw ValidationError("config: 'env' is required");
    auto check_eps = [](double e) {
        if (!(e > 0.0 && e <= 1.0)) throw ValidationError("config: eps must lie in (0,1]");
    };
    auto check_L = [](double l) {
        if (!(l >= 1.0)) throw ValidationError("config: L must be >= 1");
    };
    auto check_scale = [](double s) {
        if (!(s > 0.0 && s <= 1.0)) throw ValidationError("config: scale must lie in (0,1]");
    };
    check_eps(eps);
    check_L(L);
    check_scale(scale);
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("config: delta must lie in (0,1)");
    for (double e : sweep.eps) check_eps(e);
    for (double l : sweep.L) check_L(l);
    for (double s : sweep.scale) check_scale(s);
    if (mode == Mode::MultiGoalSSP && goals.empty())
        throw ValidationError("config: mode 'ssp' needs a nonempty 'goals' list");
    if (workers == 0) throw ValidationError("config: workers must be >= 1");
    const auto n = std::max<std::size_t>(1, sweep.L.size()) *
                   std::max<std::size_t>(1, sweep.eps.size()) *
                   std::max<std::size_t>(1, sweep.scale.size()) *
                   std::max<std::size_t>(1, sweep.seeds.size());
    if (n > max_rows)
        throw ValidationError("config: sweep has " + std::to_string(n) +
                              " rows, above max_rows = " + std::to_string(max_rows));
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    try {
        if (!j.is_object()) throw ValidationError("config must be a JSON object");
        for (const auto& [k, v] : j.items()) {
            static const char* known[] = {"env",    "L",     "eps",      "delta",     "scale",
                                          "seed",   "mode",  "goals",    "sweep",     "output",
                                          "trace_dir", "max_rows", "workers"};
            bool ok = false;
            for (const char* kk : known) ok = ok || k == kk;
            if (!ok) throw ValidationError("config: unknown field '" + k + "'");
        }
        c.env = j.value("env", json());
        c.L = j.value("L", c.L);
        c.eps = j.value("eps", c.eps);
        c.delta = j.value("delta", c.delta);
        c.scale = j.value("scale", c.scale);
        c.seed = j.value("seed", c.seed);
        const auto mode = j.value("mode", std::string("ax"));
        if (mode == "ax") c.mode = Mode::AX;
        else if (mode == "ssp") c.mode = Mode::MultiGoalSSP;
        else throw ValidationError("config: mode must be 'ax' or 'ssp'");
        c.goals = j.value("goals", StateSet{});
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            c.sweep.L = s.value("L", std::vector<double>{});
            c.sweep.eps = s.value("eps", std::vector<double>{});
            c.sweep.scale = s.value("scale", std::vector<double>{});
            c.sweep.seeds = s.value("seeds", std::vector<std::uint64_t>{});
        }
        c.output = j.value("output", c.output);
        c.trace_dir = j.value("trace_dir", c.trace_dir);
        c.max_rows = j.value("max_rows", c.max_rows);
        c.workers = j.value("workers", c.workers);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return c;
}

json to_json(const ExperimentConfig& c) {
    return {{"env", c.env},
            {"L", c.L},
            {"eps", c.eps},
            {"delta", c.delta},
            {"scale", c.scale},
            {"seed", c.seed},
            {"mode", c.mode == Mode::AX ? "ax" : "ssp"},
            {"goals", c.goals},
            {"sweep",
             {{"L", c.sweep.L}, {"eps", c.sweep.eps}, {"scale", c.sweep.scale},
              {"seeds", c.sweep.seeds}}},
            {"output", c.output},
            {"trace_dir", c.trace_dir},
            {"max_rows", c.max_rows},
            {"workers", c.workers}};
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("cannot parse config '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

std::string run_key(const std::string& env_id, const RunParams& p) {
    return env_id + "|L=" + format_number(p.L) + "|eps=" + format_number(p.eps) +
           "|delta=" + format_number(p.delta) + "|scale=" + format_number(p.scale) +
           "|seed=" + std::to_string(p.seed);
}

std::string ResultRow::key() const {
    return std::to_string(seed) + "," + env + "," + format_number(L) + "," + format_number(eps) +
           "," + format_number(delta) + "," + format_number(scale);
}

const std::string& csv_header() {
    static const std::string h =
        "seed,env,L,eps,delta,scale,C_T,steps,rounds_total,rounds_fail,rounds_skip,"
        "rounds_success,K_size,ax_valid,max_policy_gap,regret_total,wall_time_ms";
    return h;
}

std::string to_csv(const ResultRow& r) {
    std::ostringstream os;
    os << r.key() << ',' << format_number(r.C_T) << ',' << r.steps << ',' << r.rounds_total << ','
       << r.rounds_fail << ',' << r.rounds_skip << ',' << r.rounds_success << ',' << r.K_size << ','
       << (r.ax_valid ? "true" : "false") << ',' << format_number(r.max_policy_gap) << ','
       << format_number(r.regret_total) << ',' << r.wall_time_ms;
    return os.str();
}

ResultRow parse_csv(const std::string& line) {
    std::vector<std::string> f;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            f.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    f.push_back(cur);
    if (f.size() != 17)
        throw ValidationError("CSV row has " + std::to_string(f.size()) + " fields, expected 17");
    ResultRow r;
    r.seed = parse_uint(f[0], "seed");
    r.env = f[1];
    r.L = parse_double(f[2], "L");
    r.eps = parse_double(f[3], "eps");
    r.delta = parse_double(f[4], "delta");
    r.scale = parse_double(f[5], "scale");
    r.C_T = parse_double(f[6], "C_T");
    r.steps = parse_uint(f[7], "steps");
    r.rounds_total = parse_uint(f[8], "rounds_total");
    r.rounds_fail = parse_uint(f[9], "rounds_fail");
    r.rounds_skip = parse_uint(f[10], "rounds_skip");
    r.rounds_success = parse_uint(f[11], "rounds_success");
    r.K_size = parse_uint(f[12], "K_size");
    if (f[13] != "true" && f[13] != "false") throw ValidationError("bad ax_valid '" + f[13] + "'");
    r.ax_valid = f[13] == "true";
    r.max_policy_gap = parse_double(f[14], "max_policy_gap");
    r.regret_total = parse_double(f[15], "regret_total");
    r.wall_time_ms = static_cast<std::int64_t>(parse_uint(f[16], "wall_time_ms"));
    if (r.rounds_total != r.rounds_fail + r.rounds_skip + r.rounds_success)
        throw ValidationError("CSV row breaks rounds_total = fail + skip + success");
    return r;
}

Validity score_validity(const TabularMdp& mdp, const AxResult& res, double L, double eps,
                        const StateSet& goals) {
    Validity v;
    v.controllable = controllable_set(mdp, L);
    v.covers = is_subset(v.controllable, res.K);
    bool gaps_ok = true;
    for (StateId g : goals) {
        double gap = kUnreachable;
        auto it = res.policies.find(g);
        if (it != res.policies.end()) {
            const double achieved = policy_value(mdp, it->second, g).V[mdp.s0];
            const double best = restricted_values(mdp, res.K, g)[mdp.s0];
            if (!is_unreachable(achieved) && !is_unreachable(best)) gap = achieved - best;
        }
        v.gaps[g] = gap;
        v.max_gap = std::max(v.max_gap, gap);
        if (is_unreachable(gap) || gap > eps * L + 1e-9 * std::max(1.0, L)) gaps_ok = false;
    }
    v.ax_valid = v.covers && gaps_ok;
    return v;
}

RunOutput run_one(const TabularMdp& mdp, const std::string& env_id, const RunParams& p, Mode mode,
                  const StateSet& goals) {
    const auto key = run_key(env_id, p);
    SimHandle sim(mdp.s0, make_stream(p.seed, "sim", key));
    ValaeConfig vc;
    vc.eps = p.eps;
    vc.delta = p.delta;
    vc.L = p.L;
    vc.mode = mode;
    vc.goals = goals;
    vc.scale = p.scale;

    const auto t0 = std::chrono::steady_clock::now();
    RunOutput out;
    out.result = run_valae(sim, mdp, vc);
    const auto t1 = std::chrono::steady_clock::now();
    out.sim_cost = sim.cumulative_cost;
    out.sim_steps = sim.step_counter;

    StateSet scored;
    if (mode == Mode::AX) {
        scored = out.result.K;
    } else {
        for (StateId g : normalize_set(goals))
            if (set_contains(out.result.K, g)) scored.push_back(g);
    }
    out.validity = score_validity(mdp, out.result, p.L, p.eps, scored);

    auto& r = out.row;
    r.seed = p.seed;
    r.env = env_id;
    r.L = p.L;
    r.eps = p.eps;
    r.delta = p.delta;
    r.scale = p.scale;
    r.C_T = out.result.C_T;
    r.steps = out.result.steps;
    r.rounds_total = out.result.rounds_total();
    r.rounds_fail = out.result.rounds_fail;
    r.rounds_skip = out.result.rounds_skip;
    r.rounds_success = out.result.rounds_success;
    r.K_size = out.result.K.size();
    r.ax_valid = out.validity.ax_valid;
    r.max_policy_gap = out.validity.max_gap;
    r.regret_total = out.result.regret;
    r.wall_time_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    return out;
}

json trace_json(const json& effective_config, const RunOutput& out) {
    json gaps = json::object();
    for (const auto& [g, gap] : out.validity.gaps) gaps[std::to_string(g)] = format_number(gap);
    return {{"config", effective_config},
            {"row", {{"header", csv_header()}, {"csv", to_csv(out.row)}}},
            {"simulator", {{"C_T", out.sim_cost}, {"steps", out.sim_steps}}},
            {"validity",
             {{"covers", out.validity.covers},
              {"ax_valid", out.validity.ax_valid},
              {"max_gap", format_number(out.validity.max_gap)},
              {"controllable", out.validity.controllable},
              {"gaps", gaps}}},
            {"result", to_json(out.result)}};
}

std::vector<RunParams> sweep_rows(const ExperimentConfig& c) {
    auto or_scalar = [](const std::vector<double>& axis, double v) {
        return axis.empty() ? std::vector<double>{v} : axis;
    };
    const auto Ls = or_scalar(c.sweep.L, c.L);
    const auto epss = or_scalar(c.sweep.eps, c.eps);
    const auto scales = or_scalar(c.sweep.scale, c.scale);
    const auto seeds = c.sweep.seeds.empty() ? std::vector<std::uint64_t>{c.seed} : c.sweep.seeds;
    std::vector<RunParams> rows;
    for (double L : Ls)
        for (double e : epss)
            for (double s : scales)
                for (auto seed : seeds) rows.push_back({L, e, c.delta, s, seed});
    return rows;
}

namespace {

std::string expected_key(const std::string& env_id, const RunParams& p) {
    ResultRow r;
    r.seed = p.seed;
    r.env = env_id;
    r.L = p.L;
    r.eps = p.eps;
    r.delta = p.delta;
    r.scale = p.scale;
    return r.key();
}

// Number of rows already present and consistent with the planned order.
std::size_t check_existing(const std::string& path, const std::string& env_id,
                           const std::vector<RunParams>& rows) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return 0;
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (content.empty()) return 0;
    if (content.back() != '\n')
        throw ValidationError("cannot resume '" + path + "': last line is truncated");
    std::istringstream lines(content);
    std::string line;
    std::getline(lines, line);
    if (line != csv_header())
        throw ValidationError("cannot resume '" + path + "': header does not match");
    std::size_t i = 0;
    while (std::getline(lines, line)) {
        if (i >= rows.size())
            throw ValidationError("cannot resume '" + path + "': more rows than the sweep defines");
        const auto want = expected_key(env_id, rows[i]);
        ResultRow r;
        try {
            r = parse_csv(line);
        } catch (const ValidationError& e) {
            throw ValidationError("cannot resume '" + path + "': row " + std::to_string(i + 1) +
                                  " (expected key " + want + ") is corrupt: " + e.what());
        }
        if (r.key() != want)
            throw ValidationError("cannot resume '" + path + "': row " + std::to_string(i + 1) +
                                  " has key " + r.key() + ", expected " + want);
        ++i;
    }
    return i;
}

} // namespace

std::size_t run_sweep(const ExperimentConfig& c, std::ostream& log) {
    c.validate();
    const auto mdp = build_environment(c.env);
    const auto env_id = environment_id(c.env);
    const auto rows = sweep_rows(c);
    const std::size_t done = check_existing(c.output, env_id, rows);

    std::ofstream out;
    if (done == 0) {
        out.open(c.output, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write '" + c.output + "'");
        out << csv_header() << '\n';
    } else {
        out.open(c.output, std::ios::binary | std::ios::app);
        if (!out) throw ValidationError("cannot append to '" + c.output + "'");
        log << "resuming after " << done << " of " << rows.size() << " rows\n";
    }
    out.flush();
    if (!c.trace_dir.empty()) std::filesystem::create_directories(c.trace_dir);

    const std::size_t todo = rows.size() - done;
    std::vector<std::optional<RunOutput>> results(todo);
    std::vector<std::exception_ptr> errors(todo);
    std::vector<char> ready(todo, 0);
    std::mutex mu;
    std::condition_variable cv;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= todo || stop) return;
            std::optional<RunOutput> r;
            std::exception_ptr err;
            try {
                r = run_one(mdp, env_id, rows[done + i], c.mode, c.goals);
            } catch (...) {
                err = std::current_exception();
            }
            std::lock_guard lk(mu);
            results[i] = std::move(r);
            errors[i] = err;
            ready[i] = 1;
            cv.notify_all();
        }
    };
    const unsigned n_workers = std::max(1u, std::min<unsigned>(c.workers, static_cast<unsigned>(todo)));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers && todo > 0; ++w) pool.emplace_back(worker);

    std::exception_ptr failure;
    std::size_t written = 0;
    for (std::size_t i = 0; i < todo; ++i) {
        std::unique_lock lk(mu);
        cv.wait(lk, [&] { return ready[i] != 0; });
        if (errors[i]) {
            failure = errors[i];
            stop = true;
            break;
        }
        RunOutput r = std::move(*results[i]);
        results[i].reset();
        lk.unlock();
        out << to_csv(r.row) << '\n';
        out.flush();
        ++written;
        if (!c.trace_dir.empty()) {
            auto eff = to_json(c);
            const auto& p = rows[done + i];
            eff["L"] = p.L;
            eff["eps"] = p.eps;
            eff["scale"] = p.scale;
            eff["seed"] = p.seed;
            std::ofstream t(std::filesystem::path(c.trace_dir) /
                            ("row_" + std::to_string(done + i) + ".json"));
            t << trace_json(eff, r).dump(1) << '\n';
        }
        log << "row " << (done + i + 1) << "/" << rows.size() << " " << r.row.key()
            << " C_T=" << format_number(r.row.C_T) << " valid=" << (r.row.ax_valid ? 1 : 0)
            << '\n';
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return written;
}

} // namespace valae
