#include "mfgpi/config.hpp"

#include <cctype>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mfgpi/errors.hpp"
#include "mfgpi/io.hpp"

namespace mfgpi {

namespace {

using json = nlohmann::json;

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k] == '"' && (k == 0 || s[k - 1] != '\\')) quoted = !quoted;
        if (s[k] == '#' && !quoted) return s.substr(0, k);
    }
    return s;
}

bool bare_word(const std::string& s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == '/')) return false;
    return true;
}

json parse_value(const std::string& text) {
    if (bare_word(text) && text != "true" && text != "false") return json(text);
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        throw InputError("cannot parse value '" + text + "'");
    }
}

int bracket_depth(const std::string& s) {
    int d = 0;
    bool quoted = false;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k] == '"' && (k == 0 || s[k - 1] != '\\')) quoted = !quoted;
        if (quoted) continue;
        if (s[k] == '[') ++d;
        if (s[k] == ']') --d;
    }
    return d;
}

double as_number(const json& v, const std::string& key) {
    if (!v.is_number()) throw InputError(key + " must be a number");
    return v.get<double>();
}

std::size_t as_count(const json& v, const std::string& key) {
    const double d = as_number(v, key);
    if (!(d >= 0.0) || d != std::floor(d) || d > 9.007199254740992e15)
        throw InputError(key + " must be a non-negative integer");
    return static_cast<std::size_t>(d);
}

std::string as_string(const json& v, const std::string& key) {
    if (!v.is_string()) throw InputError(key + " must be a string");
    return v.get<std::string>();
}

std::vector<std::pair<double, double>> as_pairs(const json& v, const std::string& key) {
    if (!v.is_array()) throw InputError(key + " must be a list of [a, b] pairs");
    std::vector<std::pair<double, double>> out;
    for (const auto& e : v) {
        if (!e.is_array() || e.size() != 2) throw InputError(key + " must be a list of [a, b] pairs");
        out.push_back({as_number(e[0], key), as_number(e[1], key)});
    }
    return out;
}

template <class T, class F>
std::vector<T> as_list(const json& v, const std::string& key, F item) {
    if (!v.is_array()) throw InputError(key + " must be a list");
    std::vector<T> out;
    for (const auto& e : v) out.push_back(item(e, key));
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const json&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto num = [&](const char* k, double ExperimentConfig::*field) {
            t[k] = [field](ExperimentConfig& c, const json& v, const std::string& key) { c.*field = as_number(v, key); };
        };
        auto count = [&](const char* k, std::size_t ExperimentConfig::*field) {
            t[k] = [field](ExperimentConfig& c, const json& v, const std::string& key) { c.*field = as_count(v, key); };
        };
        t["prior.atoms"] = [](ExperimentConfig& c, const json& v, const std::string& key) {
            c.prior.clear();
            for (const auto& [th, w] : as_pairs(v, key)) c.prior.push_back({th, w});
        };
        t["grid.y_lo"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.grid.y_lo = as_number(v, k); };
        t["grid.y_hi"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.grid.y_hi = as_number(v, k); };
        t["grid.ny"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.grid.ny = as_count(v, k); };
        t["grid.nt"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.grid.nt = as_count(v, k); };
        t["grid.T"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.grid.T = as_number(v, k); };
        t["simulation.T"] = t["grid.T"];
        t["utility.kind"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.utility_kind = as_string(v, k); };
        num("utility.A", &ExperimentConfig::utility_A);
        num("utility.B", &ExperimentConfig::utility_B);
        t["utility.cmim_atoms"] = [](ExperimentConfig& c, const json& v, const std::string& key) {
            c.cmim_atoms.clear();
            for (const auto& [rho, mu] : as_pairs(v, key)) c.cmim_atoms.push_back({rho, mu});
        };
        t["coupling.kind"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.coupling.kind = as_string(v, k); };
        t["coupling.name"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.coupling.name = as_string(v, k); };
        t["coupling.theta"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.coupling.theta = as_number(v, k); };
        t["coupling.a"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.coupling.a = as_number(v, k); };
        t["coupling.b"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.coupling.b = as_number(v, k); };
        t["coupling.k1"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.coupling.k1 = as_number(v, k); };
        t["coupling.k2"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.coupling.k2 = as_number(v, k); };
        num("simulation.x0", &ExperimentConfig::x0);
        num("simulation.y0", &ExperimentConfig::y0);
        num("simulation.mbar0", &ExperimentConfig::mbar0);
        num("simulation.t0", &ExperimentConfig::t0);
        count("simulation.n_paths", &ExperimentConfig::n_paths);
        count("simulation.n_steps", &ExperimentConfig::n_steps);
        count("simulation.record_stride", &ExperimentConfig::record_stride);
        t["simulation.seed"] = [](ExperimentConfig& c, const json& v, const std::string& k) {
            if (!v.is_number_unsigned()) throw InputError(k + " must be a non-negative integer");
            c.seed = v.get<std::uint64_t>();
        };
        t["simulation.measure"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.measure = as_string(v, k); };
        t["nplayer.N"] = [](ExperimentConfig& c, const json& v, const std::string& k) {
            c.nplayer.N_list = as_list<std::size_t>(v, k, as_count);
        };
        t["nplayer.replications"] = [](ExperimentConfig& c, const json& v, const std::string& k) {
            c.nplayer.replications = as_count(v, k);
        };
        t["nplayer.atoms_lo"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.nplayer.atoms_lo = as_number(v, k); };
        t["nplayer.atoms_hi"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.nplayer.atoms_hi = as_number(v, k); };
        t["nplayer.atoms_n"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.nplayer.atoms_n = as_count(v, k); };
        t["nplayer.n_steps"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.nplayer.n_steps = as_count(v, k); };
        t["nplayer.nash_N"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.nplayer.nash_N = as_count(v, k); };
        t["nplayer.nash_paths"] = [](ExperimentConfig& c, const json& v, const std::string& k) {
            c.nplayer.nash_paths = as_count(v, k);
        };
        t["nplayer.deltas"] = [](ExperimentConfig& c, const json& v, const std::string& k) {
            c.nplayer.deltas = as_list<double>(v, k, as_number);
        };
        t["output.dir"] = [](ExperimentConfig& c, const json& v, const std::string& k) { c.out_dir = as_string(v, k); };
        t["verify.checks"] = [](ExperimentConfig& c, const json& v, const std::string& k) {
            c.checks = as_list<std::string>(v, k, as_string);
        };
        t["run.threads"] = [](ExperimentConfig& c, const json& v, const std::string& k) {
            c.threads = static_cast<unsigned>(as_count(v, k));
        };
        return t;
    }();
    return table;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line, section, pending;
    std::size_t line_no = 0, start_line = 0;
    std::set<std::string> seen;
    const auto fail = [&](std::size_t ln, const std::string& msg) {
        throw InputError("config line " + std::to_string(ln) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const std::string s = trim(strip_comment(line));
        if (!pending.empty()) {
            pending += " " + s;
            if (bracket_depth(pending) > 0) continue;
        } else {
            if (s.empty()) continue;
            if (s.front() == '[' && s.find('=') == std::string::npos) {
                if (s.back() != ']') fail(line_no, "malformed section header");
                section = trim(s.substr(1, s.size() - 2));
                if (!bare_word(section)) fail(line_no, "malformed section name");
                continue;
            }
            pending = s;
            start_line = line_no;
            if (bracket_depth(pending) > 0) continue;
        }
        const auto eq = pending.find('=');
        if (eq == std::string::npos) fail(start_line, "expected key = value");
        const std::string key = trim(pending.substr(0, eq));
        const std::string full = section.empty() ? key : section + "." + key;
        const std::string value = trim(pending.substr(eq + 1));
        pending.clear();
        const auto it = setters().find(full);
        if (it == setters().end()) fail(start_line, "unknown key '" + full + "'");
        if (!seen.insert(full).second) fail(start_line, "repeated key '" + full + "'");
        try {
            it->second(cfg, parse_value(value), full);
        } catch (const InputError& e) {
            fail(start_line, e.what());
        }
    }
    if (!pending.empty()) fail(start_line, "unterminated array");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

PriorMeasure make_prior(const ExperimentConfig& cfg) { return PriorMeasure::from_atoms(cfg.prior); }

UtilitySpec make_utility(const ExperimentConfig& cfg) {
    if (cfg.utility_kind == "exponential") return Exponential{cfg.utility_B};
    if (cfg.utility_kind == "sahara") return Sahara{cfg.utility_A, cfg.utility_B};
    if (cfg.utility_kind == "cmim") return Cmim{cfg.cmim_atoms};
    throw InputError("utility.kind must be exponential, sahara or cmim");
}

std::optional<CouplingSpec> make_coupling(const ExperimentConfig& cfg) {
    const auto& c = cfg.coupling;
    if (c.kind == "none") return std::nullopt;
    if (c.kind == "linear") return CouplingSpec{LinearCoupling{c.theta}};
    if (c.kind == "general_mean") {
        if (c.name == "linear") {
            auto g = linear_mean_coupling(c.theta);
            return CouplingSpec{g};
        }
        if (c.name == "linear_plus_tanh") return CouplingSpec{linear_plus_tanh(c.a, c.b, c.k1, c.k2)};
        throw InputError("coupling.name must be linear or linear_plus_tanh");
    }
    throw InputError("coupling.kind must be none, linear or general_mean");
}

Measure make_measure(const ExperimentConfig& cfg) {
    if (cfg.measure == "physical") return Measure::Physical;
    if (cfg.measure == "risk_neutral") return Measure::RiskNeutral;
    throw InputError("simulation.measure must be physical or risk_neutral");
}

void validate_config(const ExperimentConfig& cfg) {
    make_prior(cfg).validate();
    cfg.grid.validate();
    validate_utility(make_utility(cfg));
    if (cfg.coupling.kind == "linear" || (cfg.coupling.kind == "general_mean" && cfg.coupling.name == "linear"))
        if (!(cfg.coupling.theta > 0.0 && cfg.coupling.theta < 1.0))
            throw InputError("coupling.theta must lie in (0,1)");
    if (const auto c = make_coupling(cfg)) validate_coupling(*c);
    make_measure(cfg);
    if (cfg.n_paths < 1 || cfg.n_steps < 1) throw InputError("simulation.n_paths and n_steps must be >= 1");
    if (!(cfg.t0 >= 0.0 && cfg.t0 <= cfg.grid.T)) throw InputError("simulation.t0 must lie in [0, T]");
    if (!(cfg.y0 >= cfg.grid.y_lo && cfg.y0 <= cfg.grid.y_hi)) throw InputError("simulation.y0 must lie in the grid");
    if (cfg.record_stride > 0 && cfg.n_steps % cfg.record_stride != 0)
        throw InputError("simulation.record_stride must divide n_steps");
    if (cfg.nplayer.atoms_n < 1 || !(cfg.nplayer.atoms_lo <= cfg.nplayer.atoms_hi))
        throw InputError("nplayer atoms need atoms_n >= 1 and atoms_lo <= atoms_hi");
    if (cfg.threads < 1) throw InputError("run.threads must be >= 1");
}

std::string canonical_json(const ExperimentConfig& c) {
    json j;
    json prior = json::array();
    for (const auto& a : c.prior) prior.push_back({a.theta, a.weight});
    j["prior"] = prior;
    j["grid"] = {{"y_lo", c.grid.y_lo}, {"y_hi", c.grid.y_hi}, {"ny", c.grid.ny}, {"nt", c.grid.nt}, {"T", c.grid.T}};
    json cm = json::array();
    for (const auto& a : c.cmim_atoms) cm.push_back({a.rho, a.mu});
    j["utility"] = {{"kind", c.utility_kind}, {"A", c.utility_A}, {"B", c.utility_B}, {"cmim_atoms", cm}};
    j["coupling"] = {{"kind", c.coupling.kind}, {"theta", c.coupling.theta}, {"name", c.coupling.name},
                     {"a", c.coupling.a},       {"b", c.coupling.b},         {"k1", c.coupling.k1},
                     {"k2", c.coupling.k2}};
    j["simulation"] = {{"x0", c.x0},           {"y0", c.y0},           {"mbar0", c.mbar0},
                       {"t0", c.t0},           {"n_paths", c.n_paths}, {"n_steps", c.n_steps},
                       {"seed", c.seed},       {"measure", c.measure}, {"record_stride", c.record_stride}};
    const auto& n = c.nplayer;
    j["nplayer"] = {{"N", n.N_list},           {"replications", n.replications}, {"atoms_lo", n.atoms_lo},
                    {"atoms_hi", n.atoms_hi},  {"atoms_n", n.atoms_n},           {"n_steps", n.n_steps},
                    {"nash_N", n.nash_N},      {"nash_paths", n.nash_paths},     {"deltas", n.deltas}};
    j["verify"] = {{"checks", c.checks}};
    // The output directory and thread count do not change any result, so they are left out.
    return j.dump();
}

std::string config_hash(const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", fnv1a64(canonical_json(cfg)));
    return buf;
}

}  // namespace mfgpi
