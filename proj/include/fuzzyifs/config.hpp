#pragma once

/* Run configuration files.
 *
 * Sectioned key = value text; '#' starts a comment. Sections:
 *
 *   [space]    dim, box (a1 b1 [a2 b2])
 *   [system]   mode (ifs | fuzzy-ifs | gifs | fuzzy-gifs), arity
 *   [map.K]    x, y (coordinate expressions), lipschitz (optional override)
 *   [grey.K]   rho (expression in t)  or repeated  piece = <lower> : <value or expression>
 *   [net]      kind (uniform | aleatory), n, na, seed
 *   [run]      iterations | delta [theta diameter], tol, stall, initial, initial_fuzzy,
 *              backend (ram | file), table, max_evaluations, max_records, max_n
 *   [output]   image, invert, report
 *
 * Maps are numbered from 1 and must be contiguous. `initial` is a
 * ';'-separated list of points, `initial_fuzzy` a list of "point : membership".
 */

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"
#include "expr.hpp"
#include "nets.hpp"
#include "operators.hpp"
#include "systems.hpp"

namespace fuzzyifs {

enum class Mode { ifs, fuzzy_ifs, gifs, fuzzy_gifs };

inline const char* to_string(Mode m) {
    switch (m) {
    case Mode::ifs: return "ifs";
    case Mode::fuzzy_ifs: return "fuzzy-ifs";
    case Mode::gifs: return "gifs";
    case Mode::fuzzy_gifs: return "fuzzy-gifs";
    }
    return "?";
}

inline bool is_fuzzy(Mode m) { return m == Mode::fuzzy_ifs || m == Mode::fuzzy_gifs; }
inline bool is_generalized(Mode m) { return m == Mode::gifs || m == Mode::fuzzy_gifs; }

struct NetConfig {
    NetKind kind = NetKind::uniform;
    std::optional<std::uint32_t> n;
    std::uint64_t na = 0;
    std::uint64_t seed = 1;
};

struct RunConfig {
    Mode mode = Mode::ifs;
    SystemSpec system;
    NetConfig net;

    std::optional<double> delta;
    std::optional<double> theta;
    std::optional<double> diameter;
    std::optional<long> iterations;
    double tol = 0.0;
    int stall = 3;

    std::vector<Point> initial;
    std::vector<std::pair<Point, double>> initial_fuzzy;

    TableBackend backend = TableBackend::ram;
    std::string table_path;
    std::string image_path;
    std::string report_path;
    bool invert = false;

    Limits limits;
    std::uint32_t max_n = 20000;

    ValidationReport validation;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos)
            return out;
        start = pos + 1;
    }
}

inline std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    for (std::string w; in >> w;)
        out.push_back(w);
    return out;
}

struct Entry {
    std::string value;
    std::size_t line = 0;
};

struct Section {
    std::string name;
    std::size_t line = 0;
    std::map<std::string, Entry> keys;
    std::vector<Entry> pieces;
};

inline double to_double(const std::string& s, std::size_t line, const std::string& key) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e)
        throw ConfigError("'" + key + "' expects a number, got '" + s + "'", line);
    return v;
}

inline std::uint64_t to_uint(const std::string& s, std::size_t line, const std::string& key) {
    // Accept 1e6-style values as long as they are exact integers.
    const double v = to_double(s, line, key);
    if (!(v >= 0.0) || v != static_cast<double>(static_cast<std::uint64_t>(v)))
        throw ConfigError("'" + key + "' expects a non-negative integer, got '" + s + "'", line);
    return static_cast<std::uint64_t>(v);
}

inline bool to_bool(const std::string& s, std::size_t line, const std::string& key) {
    if (s == "true" || s == "yes" || s == "1")
        return true;
    if (s == "false" || s == "no" || s == "0")
        return false;
    throw ConfigError("'" + key + "' expects true or false", line);
}

inline Point to_point(const std::string& s, int dim, std::size_t line) {
    const auto w = words(s);
    if (static_cast<int>(w.size()) != dim)
        throw ConfigError("point '" + s + "' needs " + std::to_string(dim) + " coordinates", line);
    Point p{0.0, 0.0};
    for (int k = 0; k < dim; ++k)
        p[k] = to_double(w[k], line, "point");
    return p;
}

class SectionReader {
public:
    explicit SectionReader(const Section& s) : s_(s) {}

    const Entry* find(const std::string& key) {
        used_.push_back(key);
        auto it = s_.keys.find(key);
        return it == s_.keys.end() ? nullptr : &it->second;
    }

    void reject_unknown() const {
        for (const auto& [k, e] : s_.keys)
            if (std::find(used_.begin(), used_.end(), k) == used_.end())
                throw ConfigError("unknown key '" + k + "' in [" + s_.name + "]", e.line);
    }

private:
    const Section& s_;
    std::vector<std::string> used_;
};

} // namespace detail

/// Parse configuration text. With `validate`, system validation errors are thrown.
inline RunConfig parse_config(std::string_view text, bool validate = true) {
    using namespace detail;
    std::vector<Section> sections;
    std::size_t lineno = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
        ++lineno;
        std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("malformed section header", lineno);
            const std::string name = trim(line.substr(1, line.size() - 2));
            for (const auto& s : sections)
                if (s.name == name)
                    throw ConfigError("duplicate section [" + name + "]", lineno);
            sections.push_back({name, lineno, {}, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value", lineno);
        if (sections.empty())
            throw ConfigError("key outside of any section", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        Section& sec = sections.back();
        if (key == "piece") {
            sec.pieces.push_back({value, lineno});
            continue;
        }
        if (!sec.keys.emplace(key, Entry{value, lineno}).second)
            throw ConfigError("duplicate key '" + key + "'", lineno);
    }

    auto section = [&](const std::string& name) -> const Section* {
        for (const auto& s : sections)
            if (s.name == name)
                return &s;
        return nullptr;
    };
    const Section empty_section{};

    RunConfig cfg;

    // [space]
    const Section* space = section("space");
    if (!space)
        throw ConfigError("missing [space] section");
    {
        SectionReader r(*space);
        int dim = 2;
        if (const Entry* e = r.find("dim")) {
            dim = static_cast<int>(to_uint(e->value, e->line, "dim"));
            if (dim != 1 && dim != 2)
                throw ConfigError("dim must be 1 or 2", e->line);
        }
        const Entry* box = r.find("box");
        if (!box) {
            cfg.system.box = Box::unit(dim);
        } else {
            const auto w = words(box->value);
            if (static_cast<int>(w.size()) != 2 * dim)
                throw ConfigError("box needs " + std::to_string(2 * dim) + " numbers", box->line);
            std::vector<double> v;
            for (const auto& s : w)
                v.push_back(to_double(s, box->line, "box"));
            try {
                cfg.system.box = dim == 1 ? Box::interval(v[0], v[1]) : Box::rect(v[0], v[1], v[2], v[3]);
            } catch (const Error& e) {
                throw ConfigError(e.what(), box->line);
            }
        }
        r.reject_unknown();
    }
    const int dim = cfg.system.box.dim;

    // [system]
    const Section* sys = section("system");
    if (!sys)
        throw ConfigError("missing [system] section");
    {
        SectionReader r(*sys);
        const Entry* mode = r.find("mode");
        if (!mode)
            throw ConfigError("missing 'mode' in [system]", sys->line);
        if (mode->value == "ifs")
            cfg.mode = Mode::ifs;
        else if (mode->value == "fuzzy-ifs")
            cfg.mode = Mode::fuzzy_ifs;
        else if (mode->value == "gifs")
            cfg.mode = Mode::gifs;
        else if (mode->value == "fuzzy-gifs")
            cfg.mode = Mode::fuzzy_gifs;
        else
            throw ConfigError("unknown mode '" + mode->value + "'", mode->line);
        int arity = is_generalized(cfg.mode) ? 2 : 1;
        if (const Entry* e = r.find("arity"))
            arity = static_cast<int>(to_uint(e->value, e->line, "arity"));
        if (arity < 1)
            throw ConfigError("arity must be at least 1", sys->line);
        if (!is_generalized(cfg.mode) && arity != 1)
            throw ConfigError("mode " + mode->value + " needs arity 1; use gifs for arity > 1", sys->line);
        if (is_generalized(cfg.mode) && arity < 2)
            throw ConfigError("mode " + mode->value + " needs arity >= 2", sys->line);
        cfg.system.arity = arity;
        r.reject_unknown();
    }

    // [map.K] and [grey.K]
    auto numbered = [&](const std::string& prefix) {
        std::vector<const Section*> out;
        for (const auto& s : sections) {
            if (s.name.rfind(prefix, 0) != 0)
                continue;
            const std::string idx = s.name.substr(prefix.size());
            const std::uint64_t k = to_uint(idx, s.line, s.name);
            if (k == 0)
                throw ConfigError("sections are numbered from 1", s.line);
            if (out.size() < k)
                out.resize(k, nullptr);
            out[k - 1] = &s;
        }
        for (std::size_t k = 0; k < out.size(); ++k)
            if (!out[k])
                throw ConfigError("missing section [" + prefix + std::to_string(k + 1) + "]");
        return out;
    };

    const auto map_secs = numbered("map.");
    if (map_secs.empty())
        throw ConfigError("no [map.K] sections");
    for (const Section* s : map_secs) {
        SectionReader r(*s);
        std::vector<Expression> exprs;
        for (const char* axis : {"x", "y"}) {
            if (exprs.size() == static_cast<std::size_t>(dim))
                break;
            const Entry* e = r.find(axis);
            if (!e)
                throw ConfigError("missing coordinate '" + std::string(axis) + "' in [" + s->name + "]", s->line);
            try {
                exprs.push_back(parse_expression(e->value, map_variables(dim, cfg.system.arity)));
            } catch (const ParseError& err) {
                throw ConfigError(std::string("[") + s->name + "] " + axis + ": " + err.what(), e->line);
            }
        }
        MapSpec map = MapSpec::from_expressions(dim, cfg.system.arity, std::move(exprs));
        if (auto form = detect_affine(map, cfg.system.box))
            map.set_affine(*form);
        if (const Entry* e = r.find("lipschitz"))
            map.set_lipschitz_override(to_double(e->value, e->line, "lipschitz"));
        r.reject_unknown();
        cfg.system.maps.push_back(std::move(map));
    }

    const auto grey_secs = numbered("grey.");
    if (is_fuzzy(cfg.mode)) {
        if (grey_secs.empty())
            throw ConfigError(std::string("mode ") + to_string(cfg.mode) + " needs [grey.K] sections");
        if (grey_secs.size() != map_secs.size())
            throw ConfigError("need exactly one [grey.K] per [map.K]");
        for (const Section* s : grey_secs) {
            SectionReader r(*s);
            const Entry* rho = r.find("rho");
            std::size_t at_line = rho ? rho->line : s->line;
            try {
                if (rho && !s->pieces.empty())
                    throw ConfigError("[" + s->name + "] has both rho and piece entries", s->line);
                if (rho) {
                    cfg.system.grey.emplace_back(parse_expression(rho->value, {"t"}));
                } else if (!s->pieces.empty()) {
                    std::vector<PiecewiseMap::Piece> pieces;
                    for (const Entry& p : s->pieces) {
                        at_line = p.line;
                        const auto parts = split(p.value, ':');
                        if (parts.size() != 2)
                            throw ConfigError("piece expects '<lower> : <value>'", p.line);
                        PiecewiseMap::Piece piece;
                        piece.lower = to_double(parts[0], p.line, "piece");
                        double c = 0.0;
                        auto [ptr, ec] = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), c);
                        if (ec == std::errc() && ptr == parts[1].data() + parts[1].size())
                            piece.value = c;
                        else
                            piece.value = parse_expression(parts[1], {"t"});
                        pieces.push_back(std::move(piece));
                    }
                    cfg.system.grey.emplace_back(PiecewiseMap(std::move(pieces)));
                } else {
                    throw ConfigError("[" + s->name + "] needs rho or piece entries", s->line);
                }
            } catch (const ConfigError&) {
                throw;
            } catch (const Error& e) {
                throw ConfigError(std::string("[") + s->name + "] " + e.what(), at_line);
            }
            r.reject_unknown();
        }
    } else if (!grey_secs.empty()) {
        cfg.warnings.push_back("grey maps ignored in crisp mode");
    }

    // [net]
    {
        const Section* net = section("net");
        SectionReader r(net ? *net : empty_section);
        if (const Entry* e = r.find("kind")) {
            if (e->value == "uniform")
                cfg.net.kind = NetKind::uniform;
            else if (e->value == "aleatory")
                cfg.net.kind = NetKind::aleatory;
            else
                throw ConfigError("net kind must be uniform or aleatory", e->line);
        }
        if (const Entry* e = r.find("n")) {
            const auto n = to_uint(e->value, e->line, "n");
            if (n == 0 || n > 0xFFFFFFFFull)
                throw ConfigError("n must be a positive 32-bit integer", e->line);
            cfg.net.n = static_cast<std::uint32_t>(n);
        }
        if (const Entry* e = r.find("na"))
            cfg.net.na = to_uint(e->value, e->line, "na");
        if (const Entry* e = r.find("seed"))
            cfg.net.seed = to_uint(e->value, e->line, "seed");
        if (cfg.net.kind == NetKind::aleatory && cfg.net.na == 0)
            throw ConfigError("aleatory net needs na > 0", net ? net->line : 0);
        r.reject_unknown();
    }

    // [run]
    {
        const Section* run = section("run");
        if (!run)
            throw ConfigError("missing [run] section");
        SectionReader r(*run);
        if (const Entry* e = r.find("iterations"))
            cfg.iterations = static_cast<long>(to_uint(e->value, e->line, "iterations"));
        if (const Entry* e = r.find("delta")) {
            cfg.delta = to_double(e->value, e->line, "delta");
            if (!(*cfg.delta > 0.0))
                throw ConfigError("delta must be positive", e->line);
        }
        if (const Entry* e = r.find("theta")) {
            cfg.theta = to_double(e->value, e->line, "theta");
            if (!(*cfg.theta > 0.0 && *cfg.theta < 1.0))
                throw ConfigError("theta must lie in (0,1)", e->line);
        }
        if (const Entry* e = r.find("diameter"))
            cfg.diameter = to_double(e->value, e->line, "diameter");
        if (cfg.delta && cfg.iterations)
            throw ConfigError("give either delta or iterations, not both", run->line);
        if (!cfg.delta && !cfg.iterations)
            throw ConfigError("give delta (with optional theta) or iterations (with net n)", run->line);
        if (cfg.theta && !cfg.delta)
            throw ConfigError("theta only applies together with delta", run->line);
        if (cfg.iterations && !cfg.net.n)
            throw ConfigError("iterations needs an explicit net n", run->line);
        if (const Entry* e = r.find("tol"))
            cfg.tol = to_double(e->value, e->line, "tol");
        if (const Entry* e = r.find("stall")) {
            cfg.stall = static_cast<int>(to_uint(e->value, e->line, "stall"));
            if (cfg.stall == 1)
                throw ConfigError("stall must be 0 (off) or at least 2", e->line);
        }
        if (const Entry* e = r.find("initial"))
            for (const auto& p : split(e->value, ';'))
                cfg.initial.push_back(to_point(p, dim, e->line));
        if (const Entry* e = r.find("initial_fuzzy")) {
            if (!is_fuzzy(cfg.mode))
                throw ConfigError("initial_fuzzy needs a fuzzy mode", e->line);
            for (const auto& item : split(e->value, ';')) {
                const auto parts = split(item, ':');
                if (parts.size() != 2)
                    throw ConfigError("initial_fuzzy entries are '<point> : <membership>'", e->line);
                const double mu = to_double(parts[1], e->line, "membership");
                if (!(mu >= 0.0 && mu <= 1.0))
                    throw ConfigError("membership outside [0,1]", e->line);
                cfg.initial_fuzzy.emplace_back(to_point(parts[0], dim, e->line), mu);
            }
            const bool normal = std::any_of(cfg.initial_fuzzy.begin(), cfg.initial_fuzzy.end(),
                                            [](const auto& pm) { return pm.second == 1.0; });
            if (!normal)
                throw ConfigError("initial fuzzy set must be normal (some membership 1)", e->line);
        }
        if (!cfg.initial.empty() && !cfg.initial_fuzzy.empty())
            throw ConfigError("give either initial or initial_fuzzy", run->line);
        if (const Entry* e = r.find("backend")) {
            if (e->value == "ram")
                cfg.backend = TableBackend::ram;
            else if (e->value == "file")
                cfg.backend = TableBackend::file;
            else
                throw ConfigError("backend must be ram or file", e->line);
        }
        if (const Entry* e = r.find("table"))
            cfg.table_path = e->value;
        if (const Entry* e = r.find("max_evaluations"))
            cfg.limits.max_evaluations = to_uint(e->value, e->line, "max_evaluations");
        if (const Entry* e = r.find("max_records")) {
            cfg.limits.max_ram_records = to_uint(e->value, e->line, "max_records");
            cfg.limits.max_file_records = std::max(cfg.limits.max_file_records, cfg.limits.max_ram_records);
        }
        if (const Entry* e = r.find("max_n"))
            cfg.max_n = static_cast<std::uint32_t>(to_uint(e->value, e->line, "max_n"));
        r.reject_unknown();
    }

    // [output]
    if (const Section* out = section("output")) {
        SectionReader r(*out);
        if (const Entry* e = r.find("image"))
            cfg.image_path = e->value;
        if (const Entry* e = r.find("report"))
            cfg.report_path = e->value;
        if (const Entry* e = r.find("invert"))
            cfg.invert = to_bool(e->value, e->line, "invert");
        r.reject_unknown();
    }

    for (const auto& s : sections) {
        static const char* known[] = {"space", "system", "net", "run", "output"};
        const bool numbered_section = s.name.rfind("map.", 0) == 0 || s.name.rfind("grey.", 0) == 0;
        if (!numbered_section && std::find(std::begin(known), std::end(known), s.name) == std::end(known))
            throw ConfigError("unknown section [" + s.name + "]", s.line);
        if (!s.pieces.empty() && s.name.rfind("grey.", 0) != 0)
            throw ConfigError("'piece' only belongs in [grey.K]", s.pieces.front().line);
    }

    cfg.validation = validate_system(cfg.system);
    if (validate && !cfg.validation.ok()) {
        std::string msg = "invalid system:";
        for (const auto& e : cfg.validation.errors)
            msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path, bool validate = true) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), validate);
}

} // namespace fuzzyifs
