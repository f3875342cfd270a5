// Experiment runner: build surfaces, simulate, run the acceptance suite.
// Exit codes: 0 ok, 1 verification failure, 2 config error, 3 numerical failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mfgpi/acceptance.hpp"
#include "mfgpi/config.hpp"
#include "mfgpi/errors.hpp"
#include "mfgpi/io.hpp"
#include "mfgpi/mfg.hpp"
#include "mfgpi/nplayer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mfgpi;

namespace {

constexpr const char* kVersion = "0.1.0";

// Owns the output directory of one run: emitted files, per-stage wall clock and check results.
class Run {
public:
    Run(std::string command, const ExperimentConfig& cfg) : command_(std::move(command)), cfg_(cfg) {
        fs::create_directories(cfg.out_dir);
    }

    std::string path(const std::string& name) {
        files_.push_back(name);
        return (fs::path(cfg_.out_dir) / name).string();
    }

    template <class F>
    auto stage(const std::string& name, F body) {
        const auto t0 = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(body())>) {
            body();
            timings_[name] = seconds_since(t0);
        } else {
            auto r = body();
            timings_[name] = seconds_since(t0);
            return r;
        }
    }

    void check(const std::string& name, bool pass, double value, const std::string& relation, double threshold,
               std::optional<double> threshold_hi = std::nullopt) {
        json c{{"name", name}, {"pass", pass}, {"value", value}, {"relation", relation}, {"threshold", threshold}};
        if (threshold_hi) c["threshold_hi"] = *threshold_hi;
        checks_.push_back(c);
        all_pass_ = all_pass_ && pass;
    }
    void add_checks(const json& arr) {
        for (const auto& c : arr) {
            checks_.push_back(c);
            all_pass_ = all_pass_ && c.at("pass").get<bool>();
        }
    }
    bool all_pass() const { return all_pass_; }

    void write_json(const std::string& name, const json& j) {
        std::ofstream(path(name)) << j.dump(2) << "\n";
    }

    // timings.json holds the only run-dependent numbers, so manifest.json is reproducible byte for byte.
    void finish() {
        json t;
        for (const auto& [k, v] : timings_) t[k] = v;
        std::ofstream(path("timings.json")) << json{{"seconds", t}}.dump(2) << "\n";
        files_.push_back("manifest.json");
        std::sort(files_.begin(), files_.end());
        json m{{"command", command_},
               {"version", kVersion},
               {"config_hash", config_hash(cfg_)},
               {"seed", cfg_.seed},
               {"files", files_},
               {"checks", checks_},
               {"pass", all_pass_}};
        std::ofstream((fs::path(cfg_.out_dir) / "manifest.json").string()) << m.dump(2) << "\n";
        finished_ = true;
    }

    // Partial outputs are removed when a run fails.
    ~Run() {
        if (finished_) return;
        std::error_code ec;
        for (const auto& f : files_) fs::remove(fs::path(cfg_.out_dir) / f, ec);
    }

private:
    static double seconds_since(std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    std::string command_;
    const ExperimentConfig& cfg_;
    std::vector<std::string> files_;
    std::map<std::string, double> timings_;
    json checks_ = json::array();
    bool all_pass_ = true;
    bool finished_ = false;
};

std::shared_ptr<const MarketModel> build_market_for(Run& run, const ExperimentConfig& cfg) {
    return run.stage("market", [&] {
        return std::make_shared<const MarketModel>(build_market(make_prior(cfg), cfg.grid));
    });
}

bool is_exponential(const ExperimentConfig& cfg) { return cfg.utility_kind == "exponential"; }

void require_exponential_for_general(const ExperimentConfig& cfg) {
    if (cfg.coupling.kind == "general_mean" && !is_exponential(cfg))
        throw InputError("general_mean couplings are solved for the exponential utility only");
}

SimulationRequest simulation_request(const ExperimentConfig& cfg) {
    SimulationRequest r;
    r.x0 = cfg.x0;
    r.y0 = cfg.y0;
    r.t0 = cfg.t0;
    r.n_paths = cfg.n_paths;
    r.n_steps = cfg.n_steps;
    r.seed = cfg.seed;
    r.measure = make_measure(cfg);
    r.record_stride = cfg.record_stride;
    return r;
}

int cmd_build(const ExperimentConfig& cfg) {
    require_exponential_for_general(cfg);
    Run run("build", cfg);
    const auto market = build_market_for(run, cfg);
    const auto& g = market->grid();
    run.stage("write_market", [&] {
        CsvWriter w(run.path("market.csv"), {"y", "t", "F", "b", "k", "c", "n"});
        for (std::size_t n = 0; n < g.nt; ++n)
            for (std::size_t i = 0; i < g.ny; ++i)
                w.row({g.y(i), g.t(n), market->filter.F(i, n), market->filter.b(i, n), market->k(i, n),
                       market->c(i, n), market->n(i, n)});
    });
    run.check("market c = b + k_y on the interior third", market->c_mismatch <= 1e-4, market->c_mismatch, "<=",
              1e-4);
    const auto surface = run.stage("H", [&] { return build_H_surface(make_utility(cfg), market); });
    run.check("h inequalities", surface.inequalities.ok, surface.inequalities.ok ? 0.0 : 1.0, "<=", 0.0);
    run.stage("write_H", [&] {
        const auto& hg = surface.hgrid;
        CsvWriter w(run.path("H.csv"), {"y", "t", "z", "H"});
        for (std::size_t p = 0; p < hg.z.n; p += 4)
            for (std::size_t n = 0; n < hg.grid.nt; n += 10)
                for (std::size_t i = 0; i < hg.grid.ny; i += 4) {
                    const double y = hg.grid.y(i), t = hg.grid.t(n), z = hg.z.at(p);
                    double H = NAN;
                    try {
                        H = surface.H(z, y, t);
                    } catch (const RangeError&) {
                    }
                    w.row({y, t, z, H});
                }
    });
    if (const auto coupling = make_coupling(cfg); coupling && is_exponential(cfg)) {
        const auto sol = run.stage("mfg", [&] { return build_mfg(*coupling, market); });
        const double k1 = sol.coupling.k1;
        run.check("min 1 - f_m >= k1 - 1e-6", sol.min_one_minus_f_m >= k1 - 1e-6, sol.min_one_minus_f_m, ">=",
                  k1 - 1e-6);
        run.check("q against its quadrature formula", sol.q_mismatch <= 1e-4, sol.q_mismatch, "<=", 1e-4);
        run.stage("write_mfg", [&] {
            write_field_csv(sol.q, run.path("q.csv"), "q", "", 2);
            write_field_csv(sol.f, run.path("f.csv"), "f", "mbar", 4);
        });
    }
    run.finish();
    return run.all_pass() ? 0 : 1;
}

int cmd_simulate(const ExperimentConfig& cfg) {
    Run run("simulate", cfg);
    const auto market = build_market_for(run, cfg);
    const auto surface = run.stage("H", [&] { return build_H_surface(make_utility(cfg), market); });
    const auto b = run.stage("paths", [&] { return simulate_paths(surface, simulation_request(cfg)); });
    run.stage("write_paths", [&] {
        CsvWriter w(run.path("paths.csv"), {"path_id", "s", "W", "Y", "L", "X", "alpha"});
        for (std::size_t p = 0; p < b.n_paths; ++p)
            for (std::size_t k = 0; k < b.n_records(); ++k)
                w.row(p, {b.times[k], b.at(b.W, p, k), b.at(b.Y, p, k), b.at(b.L, p, k), b.at(b.X, p, k),
                          b.at(b.alpha, p, k)});
    });
    const auto v = estimate_value(b, make_utility(cfg));
    const auto adm = b.admissibility();
    json out{{"value", {{"mean", v.mean}, {"std_error", v.std_error}, {"n_paths", v.n_paths}}},
             {"admissibility", {{"mean", adm.mean}, {"std_error", adm.std_error}}},
             {"excluded", b.excluded}};
    if (is_exponential(cfg) && make_measure(cfg) == Measure::Physical) {
        const double B = cfg.utility_B;
        const double exact = -B * std::exp(-cfg.x0 / B + market->k.eval(cfg.y0, cfg.t0));
        const double z = v.std_error > 0 ? std::abs(v.mean - exact) / v.std_error : std::abs(v.mean - exact);
        out["closed_form"] = exact;
        out["z_score"] = z;
        run.check("|value - closed form| / stderr", z <= 3.0, z, "<=", 3.0);
    }
    run.write_json("value.json", out);
    run.finish();
    return run.all_pass() ? 0 : 1;
}

int cmd_mfg(const ExperimentConfig& cfg) {
    const auto coupling = make_coupling(cfg);
    if (!coupling) throw InputError("mfg needs coupling.kind linear or general_mean");
    require_exponential_for_general(cfg);
    Run run("mfg", cfg);
    const auto market = build_market_for(run, cfg);
    json out;
    if (cfg.coupling.kind == "linear") {
        // Decomposition through single-agent paths; the initial law is a point mass at mbar0.
        const auto single = run.stage("H", [&] { return build_H_surface(make_utility(cfg), market); });
        const auto le = run.stage("paths", [&] {
            return linear_coupling_solution(single, cfg.coupling.theta, {{cfg.mbar0, 1.0}}, simulation_request(cfg));
        });
        const auto& b = le.base;
        run.stage("write_paths", [&] {
            CsvWriter w(run.path("equilibrium.csv"), {"path_id", "s", "Y", "L", "Xbar", "X", "pi", "X_base"});
            const std::size_t R = b.n_records();
            for (std::size_t p = 0; p < b.n_paths; ++p)
                for (std::size_t k = 0; k < R; ++k)
                    w.row(p, {b.times[k], b.at(b.Y, p, k), b.at(b.L, p, k), le.Xbar[p * R + k], le.X[p * R + k],
                              le.pi[p * R + k], b.at(b.X, p, k)});
        });
        out = {{"route", "linear_decomposition"},
               {"theta", le.theta},
               {"mbar", le.mbar},
               {"value", {{"mean", le.value.mean}, {"std_error", le.value.std_error}}},
               {"excluded", b.excluded}};
    } else {
        const auto sol = run.stage("mfg", [&] { return build_mfg(*coupling, market); });
        EquilibriumRequest r;
        r.x0 = cfg.x0;
        r.mbar0 = cfg.mbar0;
        r.y0 = cfg.y0;
        r.t0 = cfg.t0;
        r.n_paths = cfg.n_paths;
        r.n_steps = cfg.n_steps;
        r.seed = cfg.seed;
        r.measure = make_measure(cfg);
        r.record_stride = cfg.record_stride;
        const auto eb = run.stage("paths", [&] { return simulate_equilibrium_expo(sol, r); });
        const auto& b = eb.paths;
        run.stage("write_paths", [&] {
            CsvWriter w(run.path("equilibrium.csv"), {"path_id", "s", "Y", "L", "Xbar", "X", "pi"});
            const std::size_t R = b.n_records();
            for (std::size_t p = 0; p < b.n_paths; ++p)
                for (std::size_t k = 0; k < R; ++k)
                    w.row(p, {b.times[k], b.at(b.Y, p, k), b.at(b.L, p, k), eb.Xbar[p * R + k], b.at(b.X, p, k),
                              b.at(b.alpha, p, k)});
        });
        run.check("conservation of X* - f(Y,Xbar) - L", eb.conservation_max <= 1e-8, eb.conservation_max, "<=", 1e-8);
        out = {{"route", "general_mean"},
               {"f0", eb.f0},
               {"conservation_max", eb.conservation_max},
               {"route_gap", {{"mean", eb.route_gap.mean}, {"std_error", eb.route_gap.std_error}}},
               {"min_one_minus_f_m", sol.min_one_minus_f_m},
               {"excluded", b.excluded}};
    }
    run.write_json("equilibrium.json", out);
    run.finish();
    return run.all_pass() ? 0 : 1;
}

int cmd_nplayer(const ExperimentConfig& cfg) {
    const auto coupling = make_coupling(cfg);
    if (!coupling || !is_exponential(cfg) || cfg.utility_B != 1.0)
        throw InputError("nplayer needs a coupling and the exponential utility with B = 1");
    Run run("nplayer", cfg);
    const auto market = build_market_for(run, cfg);
    const auto sol = run.stage("mfg", [&] { return build_mfg(*coupling, market); });
    const auto& np = cfg.nplayer;
    const auto atoms = uniform_atoms(np.atoms_lo, np.atoms_hi, np.atoms_n);
    ConvergenceRequest cr;
    cr.N_list = np.N_list;
    cr.replications = np.replications;
    cr.atoms = atoms;
    cr.y0 = cfg.y0;
    cr.t0 = cfg.t0;
    cr.n_steps = np.n_steps;
    cr.seed = cfg.seed;
    cr.threads = cfg.threads;
    const auto conv = run.stage("convergence", [&] { return convergence_study(sol, cr); });
    {
        CsvWriter w(run.path("convergence.csv"), {"N", "gap_mean", "gap_stderr"});
        for (const auto& row : conv.rows) w.row(row.N, {row.gap.mean, row.gap.std_error});
    }
    NashRequest nr;
    nr.N = np.nash_N;
    nr.deltas = np.deltas;
    nr.n_paths = np.nash_paths;
    nr.atoms = atoms;
    nr.y0 = cfg.y0;
    nr.t0 = cfg.t0;
    nr.n_steps = np.n_steps;
    nr.seed = cfg.seed;
    nr.threads = cfg.threads;
    const auto dev = run.stage("nash", [&] { return nash_gap(sol, nr); });
    {
        CsvWriter w(run.path("nash.csv"), {"delta", "gain", "stderr"});
        for (const auto& row : dev.rows) w.row({row.delta, row.gain.mean, row.gain.std_error});
    }
    run.check("log-log slope of the mean gap", conv.slope >= -0.65 && conv.slope <= -0.35, conv.slope, "in",
              -0.65, -0.35);
    const double ratio = dev.max_gain_std_error > 0 ? dev.max_gain / dev.max_gain_std_error : 0.0;
    run.check("max deviation gain / stderr", ratio <= 2.0, ratio, "<=", 2.0);
    run.write_json("nplayer.json", {{"slope", conv.slope},
                                    {"baseline", {{"mean", dev.baseline.mean}, {"std_error", dev.baseline.std_error}}},
                                    {"max_gain", dev.max_gain},
                                    {"max_gain_std_error", dev.max_gain_std_error},
                                    {"argmax_delta", dev.argmax_delta}});
    run.finish();
    return run.all_pass() ? 0 : 1;
}

int cmd_verify(const ExperimentConfig& cfg, bool inject) {
    Run run("verify", cfg);
    AcceptanceOptions opt;
    opt.seed = cfg.seed;
    opt.threads = cfg.threads;
    opt.inject_hjb_perturbation = inject;
    opt.on_result = [](const CriterionResult& r) {
        std::cout << result_line(r) << std::endl;
    };
    const auto results = run.stage("verify", [&] { return run_acceptance(opt, cfg.checks); });
    run.add_checks(json::parse(results_json(results)));
    run.finish();
    return run.all_pass() ? 0 : 1;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Partial-information portfolio and mean field game experiments"};
    app.require_subcommand(1);
    std::string config_path, out_dir, only, N_list;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::size_t> replications;
    bool inject = false;
    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config file");
        sub->add_option("--seed", seed, "override simulation.seed");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--threads", threads, "worker threads for replication loops")->check(CLI::PositiveNumber);
    };
    auto* build = app.add_subcommand("build", "build filter, market, H (and q, f with a coupling) surfaces");
    auto* simulate = app.add_subcommand("simulate", "simulate optimal single-agent paths");
    auto* mfg = app.add_subcommand("mfg", "simulate the mean field equilibrium");
    auto* nplayer = app.add_subcommand("nplayer", "N-player convergence sweep and deviation gains");
    auto* verify = app.add_subcommand("verify", "run the acceptance suite");
    for (auto* s : {build, simulate, mfg, nplayer, verify}) common(s);
    nplayer->add_option("--N", N_list, "comma separated player counts");
    nplayer->add_option("--replications", replications, "replications per N");
    verify->add_option("--only", only, "comma separated check names");
    verify->add_flag("--inject-hjb-perturbation", inject, "perturb the HJB check input (harness sanity)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        else if (!verify->parsed()) throw InputError("--config is required");
        if (seed) cfg.seed = *seed;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (threads) cfg.threads = *threads;
        if (!only.empty()) cfg.checks = split_list(only);
        if (!N_list.empty()) {
            cfg.nplayer.N_list.clear();
            for (const auto& s : split_list(N_list)) {
                std::size_t used = 0;
                const unsigned long long v = std::stoull(s, &used);
                if (used != s.size()) throw InputError("--N takes comma separated integers");
                cfg.nplayer.N_list.push_back(v);
            }
        }
        if (replications) cfg.nplayer.replications = *replications;
        validate_config(cfg);
        if (build->parsed()) return cmd_build(cfg);
        if (simulate->parsed()) return cmd_simulate(cfg);
        if (mfg->parsed()) return cmd_mfg(cfg);
        if (nplayer->parsed()) return cmd_nplayer(cfg);
        return cmd_verify(cfg, inject);
    } catch (const InputError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
