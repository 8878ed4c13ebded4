#include "lagmc/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

namespace lagmc {

const char* to_string(Command c) {
    switch (c) {
        case Command::Solve: return "solve";
        case Command::VerifyForms: return "verify-forms";
        case Command::Jacobi: return "jacobi";
        case Command::Identities: return "identities";
        case Command::Approx: return "approx";
        case Command::Refine: return "refine";
    }
    return "?";
}

std::optional<Command> command_from_string(const std::string& s) {
    for (auto c : {Command::Solve, Command::VerifyForms, Command::Jacobi, Command::Identities, Command::Approx,
                   Command::Refine})
        if (s == to_string(c)) return c;
    return std::nullopt;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

const char* kind_name(PhaseKind k) {
    switch (k) {
        case PhaseKind::Catalog: return "catalog";
        case PhaseKind::Constant: return "constant";
        case PhaseKind::Expression: return "expression";
        case PhaseKind::Kink: return "kink";
    }
    return "?";
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string number(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

template <class T>
T parse_integer(const std::string& s, int line) {
    T v{};
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec == std::errc::result_out_of_range) throw OutOfRangeError("integer '" + s + "' out of range", line);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigSyntaxError("expected an integer, got '" + s + "'", line);
    return v;
}

double parse_real(const std::string& s, int line) {
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
        throw ConfigSyntaxError("expected a finite number, got '" + s + "'", line);
    return v;
}

void require(bool ok, const std::string& what, int line) {
    if (!ok) throw OutOfRangeError(what, line);
}

struct Field {
    const char* section;
    const char* key;
    std::function<void(RunConfig&, const std::string&, int)> set;
    std::function<std::optional<std::string>(const RunConfig&)> get;
};

template <class T>
std::optional<std::string> show(const std::optional<T>& v) {
    if (!v) return std::nullopt;
    if constexpr (std::is_same_v<T, double>) return number(*v);
    else if constexpr (std::is_same_v<T, std::string>) return *v;
    else return std::to_string(*v);
}

auto real_in(std::optional<double> RunConfig::*m, double lo, double hi, bool lo_open, bool hi_open, const char* name) {
    return [=](RunConfig& c, const std::string& s, int line) {
        const double v = parse_real(s, line);
        const bool ok = (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
        require(ok, std::string(name) + " = " + s + " outside " + (lo_open ? "(" : "[") + number(lo) + ", " + number(hi) + (hi_open ? ")" : "]"), line);
        c.*m = v;
    };
}

auto int_in(std::optional<int> RunConfig::*m, int lo, int hi, const char* name) {
    return [=](RunConfig& c, const std::string& s, int line) {
        const int v = parse_integer<int>(s, line);
        require(v >= lo && v <= hi, std::string(name) + " = " + s + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]", line);
        c.*m = v;
    };
}

auto word_in(std::optional<std::string> RunConfig::*m, std::vector<std::string> allowed, const char* name) {
    return [=](RunConfig& c, const std::string& s, int line) {
        for (const auto& a : allowed)
            if (s == a) {
                c.*m = s;
                return;
            }
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : "|") + a;
        throw OutOfRangeError(std::string(name) + " = '" + s + "' is not one of " + list, line);
    };
}

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kHalfPi = std::numbers::pi / 2;

const std::vector<Field>& schema() {
    static const std::vector<Field> fields = {
        {"run", "command",
         [](RunConfig& c, const std::string& s, int line) {
             auto v = command_from_string(s);
             if (!v) throw OutOfRangeError("unknown command '" + s + "'", line);
             c.command = v;
         },
         [](const RunConfig& c) -> std::optional<std::string> {
             if (!c.command) return std::nullopt;
             return to_string(*c.command);
         }},
        {"run", "n", int_in(&RunConfig::n, 2, 6, "n"), [](const RunConfig& c) { return show(c.n); }},
        {"run", "seed",
         [](RunConfig& c, const std::string& s, int line) { c.seed = parse_integer<std::uint64_t>(s, line); },
         [](const RunConfig& c) { return show(c.seed); }},
        {"run", "out",
         [](RunConfig& c, const std::string& s, int line) {
             require(!s.empty(), "out must not be empty", line);
             c.out = s;
         },
         [](const RunConfig& c) { return show(c.out); }},
        {"grid", "points", int_in(&RunConfig::points, 5, 1025, "points"), [](const RunConfig& c) { return show(c.points); }},
        {"grid", "lo", real_in(&RunConfig::lo, -kInf, kInf, true, true, "lo"), [](const RunConfig& c) { return show(c.lo); }},
        {"grid", "hi", real_in(&RunConfig::hi, -kInf, kInf, true, true, "hi"), [](const RunConfig& c) { return show(c.hi); }},
        {"grid", "refine",
         [](RunConfig& c, const std::string& s, int line) {
             std::vector<int> v;
             std::stringstream ss(s);
             std::string item;
             while (std::getline(ss, item, ',')) {
                 const int p = parse_integer<int>(trim(item), line);
                 require(p >= 5 && p <= 1025, "refine entry " + std::to_string(p) + " outside [5, 1025]", line);
                 require(v.empty() || p > v.back(), "refine entries must increase", line);
                 v.push_back(p);
             }
             require(v.size() >= 2, "refine needs at least two grids", line);
             c.refine = v;
         },
         [](const RunConfig& c) -> std::optional<std::string> {
             if (!c.refine) return std::nullopt;
             std::string s;
             for (int p : *c.refine) s += (s.empty() ? "" : ",") + std::to_string(p);
             return s;
         }},
        {"phase", "kind",
         [](RunConfig& c, const std::string& s, int line) {
             for (auto k : {PhaseKind::Catalog, PhaseKind::Constant, PhaseKind::Expression, PhaseKind::Kink})
                 if (s == kind_name(k)) {
                     c.kind = k;
                     return;
                 }
             throw OutOfRangeError("phase kind '" + s + "' is not one of catalog|constant|expression|kink", line);
         },
         [](const RunConfig& c) -> std::optional<std::string> {
             if (!c.kind) return std::nullopt;
             return kind_name(*c.kind);
         }},
        {"phase", "catalog", word_in(&RunConfig::catalog, {"quadratic", "convex", "supercritical"}, "catalog"),
         [](const RunConfig& c) { return show(c.catalog); }},
        {"phase", "value", real_in(&RunConfig::value, -kInf, kInf, true, true, "value"), [](const RunConfig& c) { return show(c.value); }},
        {"phase", "expression",
         [](RunConfig& c, const std::string& s, int line) {
             require(!s.empty(), "expression must not be empty", line);
             c.expression = s;
         },
         [](const RunConfig& c) { return show(c.expression); }},
        {"phase", "lipschitz", real_in(&RunConfig::lipschitz, 0, kInf, false, true, "lipschitz"),
         [](const RunConfig& c) { return show(c.lipschitz); }},
        {"phase", "theta", real_in(&RunConfig::theta, 0, kHalfPi, true, true, "theta"), [](const RunConfig& c) { return show(c.theta); }},
        {"phase", "slope", real_in(&RunConfig::slope, 0, kInf, true, true, "slope"), [](const RunConfig& c) { return show(c.slope); }},
        {"constants", "A", real_in(&RunConfig::A, 3, kInf, false, true, "A"), [](const RunConfig& c) { return show(c.A); }},
        {"constants", "C", real_in(&RunConfig::C, 0, kInf, true, true, "C"), [](const RunConfig& c) { return show(c.C); }},
        {"constants", "eps", real_in(&RunConfig::eps, 0, 1, true, true, "eps"), [](const RunConfig& c) { return show(c.eps); }},
        {"constants", "delta", real_in(&RunConfig::delta, 0, 1, true, true, "delta"), [](const RunConfig& c) { return show(c.delta); }},
        {"constants", "mu", real_in(&RunConfig::mu, 0, 1, true, true, "mu"), [](const RunConfig& c) { return show(c.mu); }},
        {"solver", "tol", real_in(&RunConfig::tol, 0, 1e-2, true, false, "tol"), [](const RunConfig& c) { return show(c.tol); }},
        {"solver", "max_iter", int_in(&RunConfig::max_iter, 1, 1000, "max_iter"), [](const RunConfig& c) { return show(c.max_iter); }},
        {"solver", "mode", word_in(&RunConfig::mode, {"supercritical", "convex"}, "mode"), [](const RunConfig& c) { return show(c.mode); }},
        {"solver", "linear", word_in(&RunConfig::linear, {"auto", "direct", "iterative"}, "linear"),
         [](const RunConfig& c) { return show(c.linear); }},
        {"solver", "format", word_in(&RunConfig::format, {"text", "binary"}, "format"), [](const RunConfig& c) { return show(c.format); }},
        {"approx", "K", int_in(&RunConfig::K, 2, 4096, "K"), [](const RunConfig& c) { return show(c.K); }},
        {"approx", "alpha", real_in(&RunConfig::alpha, 0, 1, true, true, "alpha"), [](const RunConfig& c) { return show(c.alpha); }},
        {"approx", "samples", int_in(&RunConfig::dense_samples, 0, 10000000, "samples"),
         [](const RunConfig& c) { return show(c.dense_samples); }},
        {"forms", "samples", int_in(&RunConfig::samples, 1, 100000000, "samples"), [](const RunConfig& c) { return show(c.samples); }},
        {"forms", "theta", real_in(&RunConfig::forms_theta, 0, kHalfPi, true, true, "theta"),
         [](const RunConfig& c) { return show(c.forms_theta); }},
    };
    return fields;
}

bool grid_command(Command c) { return c != Command::VerifyForms; }

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::map<std::string, int> seen;      // "section.key" -> line
    std::map<std::string, int> sections;  // section -> header line
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        if (const auto h = s.find_first_of("#;"); h != std::string::npos) s = s.substr(0, h);
        s = trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigSyntaxError("unterminated section header", line);
            section = trim(s.substr(1, s.size() - 2));
            bool known = false;
            for (const auto& f : schema()) known = known || section == f.section;
            if (!known) throw UnknownKeyError("unknown section [" + section + "]", line);
            if (sections.count(section)) throw ConfigSyntaxError("duplicate section [" + section + "]", line);
            sections[section] = line;
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigSyntaxError("expected key = value", line);
        if (section.empty()) throw ConfigSyntaxError("key outside of any section", line);
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        const Field* field = nullptr;
        for (const auto& f : schema())
            if (section == f.section && key == f.key) field = &f;
        if (!field) throw UnknownKeyError("unknown key '" + key + "' in [" + section + "]", line);
        const std::string id = section + "." + key;
        if (seen.count(id)) throw ConfigSyntaxError("duplicate key '" + key + "' in [" + section + "]", line);
        seen[id] = line;
        field->set(c, value, line);
    }
    const int end = line;
    auto at = [&](const std::string& id) { return seen.count(id) ? seen[id] : end; };
    auto missing = [&](const std::string& section_name, const std::string& key, const std::string& why) {
        const int l = sections.count(section_name) ? sections[section_name] : end;
        throw MissingKeyError("missing required key '" + key + "' in [" + section_name + "]" + why, l);
    };

    if (!c.command) missing("run", "command", "");
    if (!c.n) missing("run", "n", "");
    const Command cmd = *c.command;
    const int n = *c.n;
    if (grid_command(cmd)) require(n <= 3, "grid commands support n = 2 or 3", at("run.n"));
    if (c.lo && c.hi) require(*c.lo < *c.hi, "grid needs lo < hi", at("grid.hi"));
    if (c.value) require(std::abs(*c.value) < n * kHalfPi, "phase value must lie in (-n pi/2, n pi/2)", at("phase.value"));
    if (c.expression) {
        try {
            Expression::parse(*c.expression, n);
        } catch (const ExpressionError& e) {
            throw ConfigSyntaxError(std::string("bad expression: ") + e.what(), at("phase.expression"));
        }
    }
    const std::string because = std::string(" (required by ") + to_string(cmd) + ")";
    if (grid_command(cmd)) {
        if (cmd == Command::Refine) {
            if (!c.refine) missing("grid", "refine", because);
        } else if (!c.points) {
            missing("grid", "points", because);
        }
        if (!c.kind) missing("phase", "kind", because);
        const PhaseKind k = *c.kind;
        const bool catalog_only = cmd == Command::Jacobi || cmd == Command::Identities || cmd == Command::Refine;
        if (catalog_only && k != PhaseKind::Catalog)
            throw OutOfRangeError(std::string(to_string(cmd)) + " needs phase kind catalog", at("phase.kind"));
        if (cmd == Command::Approx && k != PhaseKind::Kink && k != PhaseKind::Expression)
            throw OutOfRangeError("approx needs a kink or expression phase", at("phase.kind"));
        switch (k) {
            case PhaseKind::Catalog:
                if (!c.catalog) missing("phase", "catalog", " (phase kind catalog)");
                break;
            case PhaseKind::Constant:
                if (!c.value) missing("phase", "value", " (phase kind constant)");
                break;
            case PhaseKind::Expression:
                if (!c.expression) missing("phase", "expression", " (phase kind expression)");
                if (!c.lipschitz) missing("phase", "lipschitz", " (phase kind expression)");
                break;
            case PhaseKind::Kink:
                if (!c.slope) missing("phase", "slope", " (phase kind kink)");
                if (!c.theta) missing("phase", "theta", " (phase kind kink)");
                break;
        }
        if (cmd == Command::Approx && !c.K) missing("approx", "K", because);
    }
    return c;
}

std::string emit_config(const RunConfig& c) {
    std::string out;
    std::string current;
    for (const auto& f : schema()) {
        const auto v = f.get(c);
        if (!v) continue;
        if (current != f.section) {
            if (!out.empty()) out += "\n";
            out += std::string("[") + f.section + "]\n";
            current = f.section;
        }
        out += std::string(f.key) + " = " + *v + "\n";
    }
    return out;
}

}  // namespace lagmc
