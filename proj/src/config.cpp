#include "lampsde/config.hpp"

#include "lampsde/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace lampsde {

namespace {

std::string_view trim(std::string_view s) {
    auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && ws(s.front())) s.remove_prefix(1);
    while (!s.empty() && ws(s.back())) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    while (true) {
        auto pos = s.find(',');
        auto item = trim(s.substr(0, pos));
        if (!item.empty()) out.push_back(item);
        if (pos == std::string_view::npos) break;
        s.remove_prefix(pos + 1);
    }
    return out;
}

std::string format_real(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::pair<const char*, double*>> param_fields(ModelParams& params) {
    return std::visit(
        [](auto& p) -> std::vector<std::pair<const char*, double*>> {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, CIRParams>)
                return {{"kappa", &p.kappa}, {"theta", &p.theta}, {"sigma", &p.sigma}};
            else if constexpr (std::is_same_v<P, CEVParams>)
                return {{"kappa", &p.kappa}, {"theta", &p.theta}, {"sigma", &p.sigma}, {"alpha", &p.alpha}};
            else if constexpr (std::is_same_v<P, Heston32Params>)
                return {{"c1", &p.c1}, {"c2", &p.c2}, {"c3", &p.c3}};
            else if constexpr (std::is_same_v<P, WrightFisherParams>)
                return {{"a", &p.a}, {"b", &p.b}, {"gamma", &p.gamma}};
            else
                return {{"alpha_m1", &p.alpha_m1}, {"alpha_0", &p.alpha_0}, {"alpha_1", &p.alpha_1},
                        {"alpha_2", &p.alpha_2},   {"sigma", &p.sigma},     {"r", &p.r},
                        {"rho", &p.rho}};
        },
        params);
}

ModelParams default_params(ModelId id) {
    switch (id) {
        case ModelId::CIR: return CIRParams{};
        case ModelId::CEV: return CEVParams{};
        case ModelId::Heston32: return Heston32Params{};
        case ModelId::WrightFisher: return WrightFisherParams{};
        case ModelId::AitSahalia: return AitSahaliaParams{};
    }
    return CIRParams{};
}

class Reader {
public:
    Reader(const ConfigDocument& doc) : doc_(doc) {}

    const ConfigDocument::Entry* find(const std::string& section, const std::string& key) {
        used_[section].insert(key);
        auto s = doc_.sections().find(section);
        if (s == doc_.sections().end()) return nullptr;
        auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }

    [[noreturn]] void fail(const std::string& section, const std::string& key, const ConfigDocument::Entry& e,
                           const std::string& why) const {
        std::ostringstream os;
        os << doc_.source();
        if (e.line > 0) os << ':' << e.line;
        os << ": [" << section << "] " << key << ": " << why;
        throw ConfigError(os.str());
    }

    template <class Fn>
    void read(const std::string& section, const std::string& key, Fn&& assign) {
        const auto* e = find(section, key);
        if (!e) return;
        try {
            assign(e->value);
        } catch (const ConfigError& err) {
            fail(section, key, *e, err.what());
        } catch (const std::exception& err) {
            fail(section, key, *e, err.what());
        }
    }

    void real(const std::string& section, const std::string& key, double& out) {
        read(section, key, [&](const std::string& v) { out = parse_real(v); });
    }

    template <class Int>
    void integer(const std::string& section, const std::string& key, Int& out) {
        read(section, key, [&](const std::string& v) {
            std::string_view s = trim(v);
            Int value{};
            auto res = std::from_chars(s.data(), s.data() + s.size(), value);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size())
                throw ConfigError("expected an integer, got '" + v + "'");
            out = value;
        });
    }

    void reject_unknown() const {
        for (const auto& [section, keys] : doc_.sections()) {
            auto u = used_.find(section);
            for (const auto& [key, entry] : keys) {
                if (u == used_.end() || !u->second.count(key))
                    fail(section, key, entry, u == used_.end() ? "unknown section" : "unknown key");
            }
        }
    }

private:
    const ConfigDocument& doc_;
    std::map<std::string, std::set<std::string>> used_;
};

}  // namespace

double parse_real(std::string_view text) {
    std::string_view s = trim(text);
    if (s.size() > 2 && s[0] == '2' && s[1] == '^') {
        std::string_view e = s.substr(2);
        int k = 0;
        auto res = std::from_chars(e.data() + (e.front() == '+' ? 1 : 0), e.data() + e.size(), k);
        if (res.ec != std::errc() || res.ptr != e.data() + e.size())
            throw ConfigError("malformed power of two '" + std::string(s) + "'");
        return std::ldexp(1.0, k);
    }
    double v = 0.0;
    const char* first = s.data() + (!s.empty() && s.front() == '+' ? 1 : 0);
    auto res = std::from_chars(first, s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("expected a number, got '" + std::string(s) + "'");
    return v;
}

ConfigDocument ConfigDocument::parse(std::string_view text, std::string source) {
    ConfigDocument doc;
    doc.source_ = std::move(source);
    std::string section;
    int line_no = 0;
    while (!text.empty()) {
        ++line_no;
        auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        auto hash = line.find_first_of("#;");
        line = trim(line.substr(0, hash));
        if (line.empty()) continue;
        auto where = [&] { return doc.source_ + ":" + std::to_string(line_no) + ": "; };
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where() + "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section.empty()) throw ConfigError(where() + "empty section name");
            doc.sections_[section];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where() + "expected 'key = value'");
        if (section.empty()) throw ConfigError(where() + "key outside of any section");
        std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw ConfigError(where() + "empty key");
        auto& slot = doc.sections_[section];
        if (slot.count(key)) throw ConfigError(where() + "[" + section + "] " + key + ": duplicate key");
        slot[key] = {std::string(trim(line.substr(eq + 1))), line_no};
    }
    return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw IoError("cannot read config " + file.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str(), file.string());
}

void ConfigDocument::set(const std::string& section, const std::string& key, std::string value) {
    sections_[section][key] = {std::move(value), 0};
}

void ConfigDocument::set_assignment(std::string_view assignment) {
    auto eq = assignment.find('=');
    auto dot = assignment.find('.');
    if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq)
        throw ConfigError("override '" + std::string(assignment) + "' is not of the form section.key=value");
    std::string section(trim(assignment.substr(0, dot)));
    std::string key(trim(assignment.substr(dot + 1, eq - dot - 1)));
    if (section.empty() || key.empty())
        throw ConfigError("override '" + std::string(assignment) + "' has an empty section or key");
    set(section, key, std::string(trim(assignment.substr(eq + 1))));
}

ExperimentConfig interpret(const ConfigDocument& doc) {
    ExperimentConfig cfg;
    Reader r(doc);

    ModelId id = ModelId::CIR;
    r.read("model", "id", [&](const std::string& v) { id = model_id_from_string(trim(v)); });
    cfg.params = default_params(id);
    for (auto [name, field] : param_fields(cfg.params)) r.real("model", name, *field);
    r.read("model", "y0", [&](const std::string& v) { cfg.y0 = parse_real(v); });

    r.real("grid", "T", cfg.horizon);
    r.real("grid", "dt", cfg.dt);
    r.real("grid", "dt_ref", cfg.dt_ref);
    r.read("grid", "ladder", [&](const std::string& v) {
        cfg.ladder.clear();
        for (auto item : split_list(v)) cfg.ladder.push_back(parse_real(item));
        if (cfg.ladder.empty()) throw ConfigError("empty ladder");
    });
    auto positive = [&](const char* key, double v) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            ConfigDocument::Entry e;
            if (const auto* found = r.find("grid", key)) e = *found;
            r.fail("grid", key, e, "must be a positive finite number");
        }
    };
    positive("T", cfg.horizon);
    positive("dt", cfg.dt);
    positive("dt_ref", cfg.dt_ref);
    for (double v : cfg.ladder) positive("ladder", v);

    r.read("scheme", "id", [&](const std::string& v) { cfg.scheme = scheme_id_from_string(trim(v)); });
    r.real("scheme", "residual_tol", cfg.solver.residual_tol);
    r.integer("scheme", "max_iter", cfg.solver.max_iterations);
    r.real("scheme", "eta", cfg.solver.eta);
    r.read("scheme", "closed_form", [&](const std::string& v) {
        auto s = trim(v);
        if (s == "true") cfg.solver.use_closed_form = true;
        else if (s == "false") cfg.solver.use_closed_form = false;
        else throw ConfigError("expected true or false");
    });
    r.read("scheme", "metric", [&](const std::string& v) { cfg.metric = error_metric_from_string(trim(v)); });
    r.real("scheme", "p", cfg.p);
    try {
        cfg.solver.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(doc.source() + ": [scheme] " + e.what());
    }
    if (!(cfg.p >= 1.0)) {
        ConfigDocument::Entry e;
        if (const auto* found = r.find("scheme", "p")) e = *found;
        r.fail("scheme", "p", e, "must be at least 1");
    }

    r.integer("montecarlo", "paths", cfg.n_paths);
    r.integer("montecarlo", "stream", cfg.stream);
    r.integer("montecarlo", "workers", cfg.workers);
    if (cfg.n_paths == 0) {
        ConfigDocument::Entry e;
        if (const auto* found = r.find("montecarlo", "paths")) e = *found;
        r.fail("montecarlo", "paths", e, "must be positive");
    }

    r.read("output", "dir", [&](const std::string& v) { cfg.output_dir = std::string(trim(v)); });
    r.read("output", "formats", [&](const std::string& v) {
        cfg.formats.clear();
        for (auto item : split_list(v)) {
            if (item != "csv" && item != "json") throw ConfigError("unknown format '" + std::string(item) + "'");
            cfg.formats.emplace_back(item);
        }
    });

    r.reject_unknown();
    return cfg;
}

ExperimentConfig parse_config(std::string_view text) { return interpret(ConfigDocument::parse(text)); }

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    ModelParams params = cfg.params;
    os << "[model]\nid = " << to_string(static_cast<ModelId>(params.index())) << '\n';
    for (auto [name, field] : param_fields(params)) os << name << " = " << format_real(*field) << '\n';
    if (cfg.y0) os << "y0 = " << format_real(*cfg.y0) << '\n';

    os << "\n[grid]\nT = " << format_real(cfg.horizon) << "\ndt = " << format_real(cfg.dt)
       << "\ndt_ref = " << format_real(cfg.dt_ref) << "\nladder = ";
    for (std::size_t i = 0; i < cfg.ladder.size(); ++i) os << (i ? ", " : "") << format_real(cfg.ladder[i]);

    os << "\n\n[scheme]\nid = " << to_string(cfg.scheme) << "\nresidual_tol = " << format_real(cfg.solver.residual_tol)
       << "\nmax_iter = " << cfg.solver.max_iterations << "\neta = " << format_real(cfg.solver.eta)
       << "\nclosed_form = " << (cfg.solver.use_closed_form ? "true" : "false") << "\nmetric = " << to_string(cfg.metric)
       << "\np = " << format_real(cfg.p);

    os << "\n\n[montecarlo]\npaths = " << cfg.n_paths << "\nstream = " << cfg.stream << "\nworkers = " << cfg.workers
       << "\n\n[output]\n";
    if (cfg.output_dir) os << "dir = " << *cfg.output_dir << '\n';
    os << "formats = ";
    for (std::size_t i = 0; i < cfg.formats.size(); ++i) os << (i ? ", " : "") << cfg.formats[i];
    os << '\n';
    return os.str();
}

ModelSpec ExperimentConfig::model_spec() const {
    return y0 ? ModelSpec(params, *y0) : ModelSpec::with_default_start(params);
}

MonteCarloOptions ExperimentConfig::mc_options() const {
    MonteCarloOptions o;
    o.horizon = horizon;
    o.n_paths = n_paths;
    o.stream = stream;
    o.workers = workers;
    o.solver = solver;
    return o;
}

bool ExperimentConfig::wants_format(std::string_view fmt) const {
    return std::find(formats.begin(), formats.end(), fmt) != formats.end();
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
    if (params.index() != o.params.index()) return false;
    ModelParams a = params, b = o.params;
    auto fa = param_fields(a), fb = param_fields(b);
    for (std::size_t i = 0; i < fa.size(); ++i)
        if (*fa[i].second != *fb[i].second) return false;
    auto same_solver = solver.residual_tol == o.solver.residual_tol &&
                       solver.max_iterations == o.solver.max_iterations && solver.eta == o.solver.eta &&
                       solver.use_closed_form == o.solver.use_closed_form;
    return y0 == o.y0 && horizon == o.horizon && dt == o.dt && dt_ref == o.dt_ref && ladder == o.ladder &&
           scheme == o.scheme && same_solver && metric == o.metric && p == o.p && n_paths == o.n_paths &&
           stream == o.stream && workers == o.workers && output_dir == o.output_dir && formats == o.formats;
}

}  // namespace lampsde
