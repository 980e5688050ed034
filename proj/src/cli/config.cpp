#include "lactodyn/cli/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "lactodyn/errors.hpp"

namespace lactodyn::cli {

namespace {

struct Entry {
    std::string key;
    std::string value;
    int line;
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<Entry> split_entries(std::string_view text) {
    std::vector<Entry> entries;
    std::set<std::string> seen;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view body(raw);
        if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
        const std::string t = trim(body);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("expected `key = value`, got '" + t + "'", line);
        Entry e{trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)), line};
        if (e.key.empty()) throw ParseError("empty key", line);
        if (e.value.empty()) throw ParseError("empty value for key '" + e.key + "'", line);
        if (!seen.insert(e.key).second) throw ParseError("duplicate key '" + e.key + "'", line);
        entries.push_back(std::move(e));
    }
    return entries;
}

double to_double(const Entry& e) {
    double v = 0.0;
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw ParseError("expected a number for '" + e.key + "', got '" + e.value + "'", e.line);
    return v;
}

long long to_integer(const Entry& e) {
    long long v = 0;
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw ParseError("expected an integer for '" + e.key + "', got '" + e.value + "'", e.line);
    return v;
}

std::optional<double> to_period(const Entry& e) {
    if (e.value == "none") return std::nullopt;
    return to_double(e);
}

const std::vector<std::string> kSignalNames{"F", "J", "J0", "J1", "J2"};

SignalSpec& signal_slot(ScenarioConfig& cfg, const std::string& name) {
    if (name == "F") return cfg.F;
    if (name == "J") return cfg.J;
    if (name == "J0") return cfg.J0;
    if (name == "J1") return cfg.J1;
    return cfg.J2;
}

SignalSpec::Kind to_kind(const Entry& e) {
    if (e.value == "constant") return SignalSpec::Kind::Constant;
    if (e.value == "trapezoid") return SignalSpec::Kind::Trapezoid;
    if (e.value == "dip") return SignalSpec::Kind::Dip;
    if (e.value == "file") return SignalSpec::Kind::Points;
    throw ParseError("unknown signal kind '" + e.value + "' (expected constant, trapezoid, dip or file)", e.line);
}

using Setter = std::function<void(const Entry&)>;

// Keys valid for one signal given its kind.
std::map<std::string, Setter> signal_setters(SignalSpec& s, bool is_control, const std::filesystem::path& base_dir,
                                             std::vector<std::filesystem::path>& inputs) {
    std::map<std::string, Setter> m;
    auto num = [](double& field) { return [&field](const Entry& e) { field = to_double(e); }; };
    switch (s.kind) {
        case SignalSpec::Kind::Constant:
            m["value"] = num(s.value);
            break;
        case SignalSpec::Kind::Trapezoid:
            m["base"] = num(s.trapezoid.base);
            m["boost"] = num(s.trapezoid.boost_fraction);
            m["t_start"] = num(s.trapezoid.t_start);
            m["t_rise_end"] = num(s.trapezoid.t_rise_end);
            m["t_fall_start"] = num(s.trapezoid.t_fall_start);
            m["t_end"] = num(s.trapezoid.t_end);
            m["period"] = [&s](const Entry& e) { s.trapezoid.period = to_period(e); };
            break;
        case SignalSpec::Kind::Dip:
            m["J0"] = num(s.dip.J0);
            m["J1"] = num(s.dip.J1);
            m["Jm1"] = num(s.dip.Jm1);
            m["t_rise_start"] = num(s.dip.t_rise_start);
            m["t_rise_end"] = num(s.dip.t_rise_end);
            m["t_fall_start"] = num(s.dip.t_fall_start);
            m["t_fall_end"] = num(s.dip.t_fall_end);
            m["t_recover_start"] = num(s.dip.t_recover_start);
            m["t_recover_end"] = num(s.dip.t_recover_end);
            m["period"] = [&s](const Entry& e) { s.dip.period = to_period(e); };
            break;
        case SignalSpec::Kind::Points:
            m["file"] = [&s, &base_dir, &inputs](const Entry& e) {
                std::filesystem::path path(e.value);
                if (path.is_relative()) path = base_dir / path;
                path = std::filesystem::weakly_canonical(path);
                std::ifstream in(path, std::ios::binary);
                if (!in) throw ParseError("cannot read signal file '" + path.string() + "'", e.line);
                std::stringstream buf;
                buf << in.rdbuf();
                try {
                    s.points = signal_from_text(buf.str());
                } catch (const ParseError& inner) {
                    throw ParseError("signal file '" + path.string() + "': " + inner.what(), e.line);
                }
                s.file = path.string();
                inputs.push_back(path);
            };
            break;
    }
    if (is_control) {
        m["coupling"] = num(s.coupling);
        m["x_ref"] = num(s.x_ref);
    }
    return m;
}

std::map<std::string, Setter> scalar_setters(ScenarioConfig& cfg) {
    std::map<std::string, Setter> m;
    auto num = [](double& field) { return [&field](const Entry& e) { field = to_double(e); }; };
    Params4D& p = cfg.params;
    m["params.C"] = num(p.C);
    m["params.k"] = num(p.k);
    m["params.kprime"] = num(p.kprime);
    m["params.L"] = num(p.L);
    m["params.eps"] = num(p.eps);
    m["params.eps_prime"] = num(p.eps_prime);
    m["params.C1"] = num(p.C1);
    m["params.C2"] = num(p.C2);
    m["params.Ca"] = num(p.Ca);
    m["params.kn"] = num(p.kn);
    m["params.ka"] = num(p.ka);
    m["integrator.rel_tol"] = num(cfg.integrator.rel_tol);
    m["integrator.abs_tol"] = num(cfg.integrator.abs_tol);
    m["integrator.max_step"] = num(cfg.integrator.max_step);
    m["integrator.mode"] = [&cfg](const Entry& e) {
        if (e.value == "implicit")
            cfg.integrator.mode = StiffnessMode::Implicit;
        else if (e.value == "explicit")
            cfg.integrator.mode = StiffnessMode::ExplicitAdaptive;
        else
            throw ParseError("integrator.mode must be implicit or explicit", e.line);
    };
    m["integrator.max_steps"] = [&cfg](const Entry& e) {
        const long long v = to_integer(e);
        if (v <= 0) throw ParseError("integrator.max_steps must be positive", e.line);
        cfg.integrator.max_steps = static_cast<std::size_t>(v);
    };
    m["run.horizon"] = num(cfg.horizon);
    m["run.period"] = num(cfg.period);
    m["run.n_periods"] = [&cfg](const Entry& e) { cfg.n_periods = static_cast<int>(to_integer(e)); };
    m["run.delta"] = num(cfg.sensitivity_delta);
    m["detect.dip_fraction"] = num(cfg.detect.dip_fraction);
    m["detect.return_tol"] = num(cfg.detect.return_tol);
    m["detect.lock_threshold"] = num(cfg.detect.lock_threshold);
    m["shooting.max_iterations"] = [&cfg](const Entry& e) {
        cfg.shooting_max_iterations = static_cast<int>(to_integer(e));
    };
    m["shooting.tol"] = num(cfg.shooting_tol);
    m["detect.lock_periods"] = [&cfg](const Entry& e) { cfg.detect.lock_periods = static_cast<int>(to_integer(e)); };
    return m;
}

std::string kind_period(const std::optional<double>& period) { return period ? format_number(*period) : "none"; }

void emit_signal(std::ostream& out, const std::string& name, const SignalSpec& s, bool is_control) {
    const std::string pre = "signal." + name + ".";
    auto line = [&](const std::string& key, const std::string& value) { out << pre << key << " = " << value << '\n'; };
    auto num = [&](const std::string& key, double v) { line(key, format_number(v)); };
    line("kind", to_string(s.kind));
    switch (s.kind) {
        case SignalSpec::Kind::Constant:
            num("value", s.value);
            break;
        case SignalSpec::Kind::Trapezoid:
            num("base", s.trapezoid.base);
            num("boost", s.trapezoid.boost_fraction);
            num("t_start", s.trapezoid.t_start);
            num("t_rise_end", s.trapezoid.t_rise_end);
            num("t_fall_start", s.trapezoid.t_fall_start);
            num("t_end", s.trapezoid.t_end);
            line("period", kind_period(s.trapezoid.period));
            break;
        case SignalSpec::Kind::Dip:
            num("J0", s.dip.J0);
            num("J1", s.dip.J1);
            num("Jm1", s.dip.Jm1);
            num("t_rise_start", s.dip.t_rise_start);
            num("t_rise_end", s.dip.t_rise_end);
            num("t_fall_start", s.dip.t_fall_start);
            num("t_fall_end", s.dip.t_fall_end);
            num("t_recover_start", s.dip.t_recover_start);
            num("t_recover_end", s.dip.t_recover_end);
            line("period", kind_period(s.dip.period));
            break;
        case SignalSpec::Kind::Points:
            line("file", s.file);
            break;
    }
    if (is_control) {
        num("coupling", s.coupling);
        num("x_ref", s.x_ref);
    }
}

}  // namespace

LoadedConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    const std::vector<Entry> entries = split_entries(text);
    LoadedConfig loaded;
    ScenarioConfig& cfg = loaded.config;

    std::vector<const Entry*> rest;
    const Entry* name_entry = nullptr;
    for (const Entry& e : entries) {
        if (e.key == "scenario") {
            try {
                cfg = default_scenario(e.value);
            } catch (const InvalidArgument& ex) {
                throw ParseError(ex.what(), e.line);
            }
        } else if (e.key == "name") {
            name_entry = &e;
        } else {
            rest.push_back(&e);
        }
    }
    if (name_entry) cfg.name = name_entry->value;

    // Model and signal kinds first: they decide which other keys exist.
    std::vector<const Entry*> later;
    for (const Entry* e : rest) {
        if (e->key == "model") {
            if (e->value == "2d" || e->value == "2D")
                cfg.model = Model::TwoD;
            else if (e->value == "4d" || e->value == "4D")
                cfg.model = Model::FourD;
            else
                throw ParseError("model must be 2d or 4d", e->line);
            continue;
        }
        bool handled = false;
        for (const std::string& s : kSignalNames) {
            if (e->key == "signal." + s + ".kind") {
                SignalSpec& slot = signal_slot(cfg, s);
                const SignalSpec::Kind kind = to_kind(*e);
                if (slot.kind != kind) {
                    const double coupling = slot.coupling, x_ref = slot.x_ref;
                    slot = SignalSpec{};
                    slot.kind = kind;
                    slot.coupling = coupling;
                    slot.x_ref = x_ref;
                }
                handled = true;
            }
        }
        if (!handled) later.push_back(e);
    }

    std::map<std::string, Setter> setters = scalar_setters(cfg);
    for (const std::string& s : kSignalNames)
        for (auto& [k, fn] : signal_setters(signal_slot(cfg, s), s != "F", base_dir, loaded.inputs))
            setters.emplace("signal." + s + "." + k, std::move(fn));

    for (const Entry* e : later) {
        const auto it = setters.find(e->key);
        if (it == setters.end()) throw ParseError("unknown key '" + e->key + "'", e->line);
        it->second(*e);
    }
    for (const std::string& s : kSignalNames) {
        const SignalSpec& spec = signal_slot(cfg, s);
        if (spec.kind == SignalSpec::Kind::Points && spec.file.empty())
            throw ParseError("signal." + s + " has kind file but no signal." + s + ".file");
    }
    try {
        cfg.validate();
    } catch (const InvalidArgument& ex) {
        throw ParseError(std::string("invalid configuration: ") + ex.what());
    }
    return loaded;
}

LoadedConfig load_config(const std::string& path_or_name) {
    std::filesystem::path path(path_or_name);
    const bool bare = path_or_name.find('/') == std::string::npos && path_or_name.find('.') == std::string::npos;
    if (bare && !std::filesystem::exists(path)) {
        if (const char* seed = std::getenv("LACTODYN_SEED_DIR")) {
            const std::filesystem::path candidate = std::filesystem::path(seed) / (path_or_name + ".cfg");
            if (std::filesystem::exists(candidate)) return load_config(candidate.string());
        }
        LoadedConfig loaded;
        try {
            loaded.config = default_scenario(path_or_name);
        } catch (const InvalidArgument& ex) {
            throw ParseError(ex.what());
        }
        return loaded;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read config '" + path_or_name + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    LoadedConfig loaded = parse_config(buf.str(), std::filesystem::absolute(path).parent_path());
    loaded.inputs.insert(loaded.inputs.begin(), std::filesystem::weakly_canonical(path));
    return loaded;
}

std::string serialize_config(const ScenarioConfig& cfg) {
    std::ostringstream out;
    auto num = [&](const std::string& key, double v) { out << key << " = " << format_number(v) << '\n'; };
    out << "name = " << cfg.name << '\n';
    out << "model = " << to_string(cfg.model) << '\n';
    const Params4D& p = cfg.params;
    num("params.C", p.C);
    num("params.k", p.k);
    num("params.kprime", p.kprime);
    num("params.L", p.L);
    num("params.eps", p.eps);
    num("params.eps_prime", p.eps_prime);
    num("params.C1", p.C1);
    num("params.C2", p.C2);
    num("params.Ca", p.Ca);
    num("params.kn", p.kn);
    num("params.ka", p.ka);
    emit_signal(out, "F", cfg.F, false);
    emit_signal(out, "J", cfg.J, true);
    emit_signal(out, "J0", cfg.J0, true);
    emit_signal(out, "J1", cfg.J1, true);
    emit_signal(out, "J2", cfg.J2, true);
    num("integrator.rel_tol", cfg.integrator.rel_tol);
    num("integrator.abs_tol", cfg.integrator.abs_tol);
    num("integrator.max_step", cfg.integrator.max_step);
    out << "integrator.mode = " << (cfg.integrator.mode == StiffnessMode::Implicit ? "implicit" : "explicit") << '\n';
    out << "integrator.max_steps = " << cfg.integrator.max_steps << '\n';
    num("run.horizon", cfg.horizon);
    num("run.period", cfg.period);
    out << "run.n_periods = " << cfg.n_periods << '\n';
    num("run.delta", cfg.sensitivity_delta);
    num("detect.dip_fraction", cfg.detect.dip_fraction);
    num("detect.return_tol", cfg.detect.return_tol);
    num("detect.lock_threshold", cfg.detect.lock_threshold);
    out << "detect.lock_periods = " << cfg.detect.lock_periods << '\n';
    out << "shooting.max_iterations = " << cfg.shooting_max_iterations << '\n';
    num("shooting.tol", cfg.shooting_tol);
    return out.str();
}

}  // namespace lactodyn::cli
