#include "homloop_cli/config.hpp"

#include "homloop/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace homloop::cli {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::ConfigParse, msg); }

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Removes a trailing # comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

int bracket_balance(const std::string& s) {
    int depth = 0;
    bool quoted = false;
    for (char c : s) {
        if (c == '"') quoted = !quoted;
        if (quoted) continue;
        if (c == '[') ++depth;
        if (c == ']') --depth;
    }
    return depth;
}

json parse_value(const std::string& raw, const std::string& field) {
    const std::string v = trim(raw);
    if (v.empty()) fail(field + ": missing value");
    const char c = v.front();
    const bool literal = c == '[' || c == '"' || c == '-' || c == '+' || c == '.' || std::isdigit(static_cast<unsigned char>(c)) ||
                         v == "true" || v == "false";
    if (!literal) return json(v);
    try {
        return json::parse(v);
    } catch (const json::exception&) {
        fail(field + ": cannot parse value '" + v + "'");
    }
}

double as_double(const json& v, const std::string& field) {
    if (!v.is_number()) fail(field + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(field + ": expected a finite number");
    return x;
}

double positive(const json& v, const std::string& field) {
    const double x = as_double(v, field);
    if (!(x > 0.0)) fail(field + ": must be positive (got " + v.dump() + ")");
    return x;
}

int as_int(const json& v, const std::string& field, int lo) {
    if (!v.is_number_integer()) fail(field + ": expected an integer");
    const auto x = v.get<long long>();
    if (x < lo) fail(field + ": must be at least " + std::to_string(lo));
    return static_cast<int>(x);
}

bool as_bool(const json& v, const std::string& field) {
    if (!v.is_boolean()) fail(field + ": expected true or false");
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& field) {
    if (!v.is_string()) fail(field + ": expected a string");
    return v.get<std::string>();
}

std::vector<double> as_list(const json& v, const std::string& field, bool require_positive) {
    if (!v.is_array()) fail(field + ": expected an array");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const std::string entry = field + "[" + std::to_string(k) + "]";
        const double x = as_double(v[k], entry);
        if (require_positive && !(x > 0.0)) fail(entry + ": must be positive (got " + v[k].dump() + ")");
        out.push_back(x);
    }
    if (std::set<double>(out.begin(), out.end()).size() != out.size()) fail(field + ": entries must be distinct");
    return out;
}

std::vector<PolyTerm> as_terms(const json& v, const std::string& field, bool trig) {
    if (!v.is_array()) fail(field + ": expected an array of terms");
    std::vector<PolyTerm> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const std::string entry = field + "[" + std::to_string(k) + "]";
        const json& t = v[k];
        const std::size_t n = trig ? 5 : 3;
        if (!t.is_array() || (t.size() != 3 && t.size() != n))
            fail(entry + (trig ? ": expected [coef, i, j] or [coef, i, j, omega, phase]" : ": expected [coef, i, j]"));
        PolyTerm p;
        p.coef = as_double(t[0], entry + ".coef");
        p.i = as_int(t[1], entry + ".i", 0);
        p.j = as_int(t[2], entry + ".j", 0);
        if (t.size() == 5) {
            p.omega = as_double(t[3], entry + ".omega");
            p.phase = as_double(t[4], entry + ".phase");
        }
        out.push_back(p);
    }
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const json&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
    static const std::map<std::string, std::map<std::string, Setter>> s = {
        {"system",
         {{"builtin", [](auto& c, const json& v, const std::string& f) { c.system.builtin = as_string(v, f); }},
          {"name", [](auto& c, const json& v, const std::string& f) { c.system.name = as_string(v, f); }},
          {"f_plus_x", [](auto& c, const json& v, const std::string& f) { c.system.f_plus_x = as_terms(v, f, false); }},
          {"f_plus_y", [](auto& c, const json& v, const std::string& f) { c.system.f_plus_y = as_terms(v, f, false); }},
          {"f_minus_x", [](auto& c, const json& v, const std::string& f) { c.system.f_minus_x = as_terms(v, f, false); }},
          {"f_minus_y", [](auto& c, const json& v, const std::string& f) { c.system.f_minus_y = as_terms(v, f, false); }},
          {"G", [](auto& c, const json& v, const std::string& f) { c.system.G = as_terms(v, f, false); }}}},
        {"perturbation",
         {{"kind", [](auto& c, const json& v, const std::string& f) { c.perturbation.kind = as_string(v, f); }},
          {"coefficient", [](auto& c, const json& v, const std::string& f) { c.perturbation.coefficient = as_double(v, f); }},
          {"omega", [](auto& c, const json& v, const std::string& f) { c.perturbation.omega = positive(v, f); }},
          {"g_x", [](auto& c, const json& v, const std::string& f) { c.perturbation.g_x = as_terms(v, f, true); }},
          {"g_y", [](auto& c, const json& v, const std::string& f) { c.perturbation.g_y = as_terms(v, f, true); }},
          {"epsilon",
           [](auto& c, const json& v, const std::string& f) {
               const double e = as_double(v, f);
               if (e < 0.0) fail(f + ": must be non-negative (got " + v.dump() + ")");
               c.perturbation.epsilon = e;
           }}}},
        {"session",
         {{"mu", [](auto& c, const json& v, const std::string& f) { c.session.mu = positive(v, f); }},
          {"beta",
           [](auto& c, const json& v, const std::string& f) {
               const double b = as_double(v, f);
               if (b < 0.0) fail(f + ": must be non-negative (0 selects the policy)");
               c.session.beta = b;
           }},
          {"beta_floor", [](auto& c, const json& v, const std::string& f) { c.session.beta_floor = positive(v, f); }},
          {"log_varpi_cap", [](auto& c, const json& v, const std::string& f) { c.session.log_varpi_cap = positive(v, f); }},
          {"seed",
           [](auto& c, const json& v, const std::string& f) {
               if (!v.is_number_integer() || v.get<long long>() < 0) fail(f + ": expected a non-negative integer");
               c.session.seed = v.get<std::uint64_t>();
           }},
          {"n_loops", [](auto& c, const json& v, const std::string& f) { c.session.n_loops = as_int(v, f, 1); }},
          {"d0", [](auto& c, const json& v, const std::string& f) { c.session.d0 = positive(v, f); }},
          {"containment", [](auto& c, const json& v, const std::string& f) { c.session.containment = as_bool(v, f); }}}},
        {"grid",
         {{"d", [](auto& c, const json& v, const std::string& f) { c.grid.d = as_list(v, f, true); }},
          {"tau", [](auto& c, const json& v, const std::string& f) { c.grid.tau = as_list(v, f, false); }},
          {"epsilon", [](auto& c, const json& v, const std::string& f) { c.grid.epsilon = as_list(v, f, true); }},
          {"alpha_points", [](auto& c, const json& v, const std::string& f) { c.grid.alpha_points = as_int(v, f, 4); }},
          {"direction",
           [](auto& c, const json& v, const std::string& f) {
               const std::string d = as_string(v, f);
               if (d != "fwd" && d != "bwd" && d != "both") fail(f + ": expected fwd, bwd or both");
               c.grid.forward = d != "bwd";
               c.grid.backward = d != "fwd";
           }}}},
        {"tolerances",
         {{"rtol", [](auto& c, const json& v, const std::string& f) { c.tolerances.rtol = positive(v, f); }},
          {"atol", [](auto& c, const json& v, const std::string& f) { c.tolerances.atol = positive(v, f); }},
          {"crossing", [](auto& c, const json& v, const std::string& f) { c.tolerances.crossing = positive(v, f); }},
          {"transversality_floor",
           [](auto& c, const json& v, const std::string& f) { c.tolerances.transversality_floor = positive(v, f); }},
          {"h_max", [](auto& c, const json& v, const std::string& f) { c.tolerances.h_max = positive(v, f); }},
          {"max_steps", [](auto& c, const json& v, const std::string& f) { c.tolerances.max_steps = as_int(v, f, 1); }}}},
        {"output", {{"prefix", [](auto& c, const json& v, const std::string& f) { c.output.prefix = as_string(v, f); }}}},
    };
    return s;
}

double pow_int(double x, int n) {
    double r = 1.0;
    for (int k = 0; k < n; ++k) r *= x;
    return r;
}

}  // namespace

double eval_poly(const std::vector<PolyTerm>& terms, const Point2& x, double t) {
    double s = 0.0;
    for (const auto& p : terms) {
        double v = p.coef * pow_int(x.x1, p.i) * pow_int(x.x2, p.j);
        if (p.omega != 0.0 || p.phase != 0.0) v *= std::cos(p.omega * t + p.phase);
        s += v;
    }
    return s;
}

Point2 grad_poly(const std::vector<PolyTerm>& terms, const Point2& x, double t) {
    Point2 g{};
    for (const auto& p : terms) {
        const double c = (p.omega != 0.0 || p.phase != 0.0) ? p.coef * std::cos(p.omega * t + p.phase) : p.coef;
        if (p.i > 0) g.x1 += c * p.i * pow_int(x.x1, p.i - 1) * pow_int(x.x2, p.j);
        if (p.j > 0) g.x2 += c * p.j * pow_int(x.x1, p.i) * pow_int(x.x2, p.j - 1);
    }
    return g;
}

PiecewiseSystem ExperimentConfig::build_system() const {
    Perturbation p;
    const auto& pc = perturbation;
    if (pc.kind == "zero") {
        p = perturbations::zero();
    } else if (pc.kind == "damping") {
        p = perturbations::damping(pc.coefficient);
    } else if (pc.kind == "x_cos") {
        p = perturbations::x_cos(pc.omega);
    } else if (pc.kind == "polynomial") {
        const auto gx = pc.g_x;
        const auto gy = pc.g_y;
        p.label = "polynomial";
        p.g = [gx, gy](double t, const Point2& x, double) { return Point2{eval_poly(gx, x, t), eval_poly(gy, x, t)}; };
        p.g_jac = [gx, gy](double t, const Point2& x, double) {
            const Point2 a = grad_poly(gx, x, t);
            const Point2 b = grad_poly(gy, x, t);
            return Mat2{a.x1, a.x2, b.x1, b.x2};
        };
        std::set<double> omegas;
        for (const auto* terms : {&gx, &gy})
            for (const auto& t : *terms)
                if (t.omega != 0.0) omegas.insert(std::abs(t.omega));
        p.autonomous = omegas.empty();
        if (omegas.size() == 1) p.period = 2.0 * std::numbers::pi / *omegas.begin();
    } else {
        fail("perturbation.kind: unknown kind '" + pc.kind + "' (zero, damping, x_cos, polynomial)");
    }

    if (system.builtin != "custom") {
        try {
            return builtin::by_name(system.builtin, p, pc.epsilon);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::InvalidSystem) throw;
            fail("system.builtin: unknown system '" + system.builtin + "'");
        }
    }
    const auto& s = system;
    for (const auto& [field, terms] : {std::pair{"f_plus_x", &s.f_plus_x}, std::pair{"f_plus_y", &s.f_plus_y},
                                       std::pair{"f_minus_x", &s.f_minus_x}, std::pair{"f_minus_y", &s.f_minus_y},
                                       std::pair{"G", &s.G}}) {
        if (terms->empty()) fail(std::string("system.") + field + ": required for a custom system");
    }
    SystemDefinition def;
    def.name = s.name;
    def.f_plus = [a = s.f_plus_x, b = s.f_plus_y](const Point2& x) { return Point2{eval_poly(a, x), eval_poly(b, x)}; };
    def.f_minus = [a = s.f_minus_x, b = s.f_minus_y](const Point2& x) { return Point2{eval_poly(a, x), eval_poly(b, x)}; };
    def.jac_plus = [a = s.f_plus_x, b = s.f_plus_y](const Point2& x) {
        const Point2 u = grad_poly(a, x), v = grad_poly(b, x);
        return Mat2{u.x1, u.x2, v.x1, v.x2};
    };
    def.jac_minus = [a = s.f_minus_x, b = s.f_minus_y](const Point2& x) {
        const Point2 u = grad_poly(a, x), v = grad_poly(b, x);
        return Mat2{u.x1, u.x2, v.x1, v.x2};
    };
    def.G = [g = s.G](const Point2& x) { return eval_poly(g, x); };
    def.grad_G = [g = s.G](const Point2& x) { return grad_poly(g, x); };
    def.perturbation = p;
    def.epsilon = pc.epsilon;
    return PiecewiseSystem(std::move(def));
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    ExperimentConfig cfg;
    cfg.source = source;
    std::istringstream in(text);
    std::string line, section;
    std::set<std::string> seen;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string content = trim(strip_comment(line));
        if (content.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno);
        if (content.front() == '[' && content.find('=') == std::string::npos) {
            if (content.back() != ']') fail(where + ": malformed section header '" + content + "'");
            section = trim(content.substr(1, content.size() - 2));
            if (!schema().count(section)) fail(where + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = content.find('=');
        if (eq == std::string::npos) fail(where + ": expected 'key = value'");
        if (section.empty()) fail(where + ": key outside of any [section]");
        const std::string key = trim(content.substr(0, eq));
        std::string value = content.substr(eq + 1);
        while (bracket_balance(value) > 0 && std::getline(in, line)) {
            ++lineno;
            value += " " + trim(strip_comment(line));
        }
        const std::string field = section + "." + key;
        const auto& keys = schema().at(section);
        const auto it = keys.find(key);
        if (it == keys.end()) fail(where + ": unknown key '" + field + "'");
        if (!seen.insert(field).second) fail(where + ": duplicate key '" + field + "'");
        it->second(cfg, parse_value(value, field), field);
    }
    if (cfg.grid.d.empty()) fail("grid.d: must not be empty");
    if (cfg.grid.tau.empty()) fail("grid.tau: must not be empty");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail("cannot read configuration file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path);
}

}  // namespace homloop::cli
