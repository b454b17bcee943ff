#include "hamens/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace hamens {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, int line, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x)) {
        throw ConfigError("line " + std::to_string(line) + ": key '" + key + "': expected a number, got '" + v + "'",
                          line, key);
    }
    return x;
}

std::uint64_t to_count(const std::string& v, int line, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    if (v.empty() || v[0] == '-') {
        throw ConfigError("line " + std::to_string(line) + ": key '" + key + "': expected a non-negative integer",
                          line, key);
    }
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || errno == ERANGE) {
        throw ConfigError("line " + std::to_string(line) + ": key '" + key + "': expected a non-negative integer, got '" +
                              v + "'",
                          line, key);
    }
    return x;
}

std::string resolve(const std::string& base, const std::string& p) {
    if (p.empty()) return p;
    std::filesystem::path path(p);
    if (path.is_absolute()) return p;
    return (std::filesystem::path(base) / path).lexically_normal().string();
}

} // namespace

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    std::string item;
    std::string s = text;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream is(s);
    while (is >> item) out.push_back(to_double(item, 0, "list"));
    return out;
}

RunConfig parse_config(std::istream& in, const std::string& base_dir) {
    RunConfig c;
    using Setter = std::function<void(const std::string&, int, const std::string&)>;
    std::map<std::string, Setter> keys{
        {"radial.model", [&](const std::string& v, int, const std::string&) { c.radial_model = v; }},
        {"radial.omega_c", [&](const std::string& v, int l, const std::string& k) { c.omega_c = to_double(v, l, k); }},
        {"radial.table", [&](const std::string& v, int, const std::string&) { c.radial_table = resolve(base_dir, v); }},
        {"angular.model", [&](const std::string& v, int, const std::string&) { c.angular_model = v; }},
        {"angular.a", [&](const std::string& v, int l, const std::string& k) { c.a = to_double(v, l, k); }},
        {"angular.table", [&](const std::string& v, int, const std::string&) { c.angular_table = resolve(base_dir, v); }},
        {"angular.a_values",
         [&](const std::string& v, int l, const std::string& k) {
             try {
                 c.a_values = parse_number_list(v);
             } catch (const ConfigError&) {
                 throw ConfigError("line " + std::to_string(l) + ": key '" + k + "': expected a list of numbers", l, k);
             }
         }},
        {"state.theta0", [&](const std::string& v, int l, const std::string& k) { c.theta0 = to_double(v, l, k); }},
        {"state.bloch",
         [&](const std::string& v, int l, const std::string& k) {
             std::vector<double> xs;
             try {
                 xs = parse_number_list(v);
             } catch (const ConfigError&) {
             }
             if (xs.size() != 3) {
                 throw ConfigError("line " + std::to_string(l) + ": key '" + k + "': expected three numbers", l, k);
             }
             c.bloch = Vec3(xs[0], xs[1], xs[2]);
         }},
        {"grid.t_min", [&](const std::string& v, int l, const std::string& k) { c.t_min = to_double(v, l, k); }},
        {"grid.t_max", [&](const std::string& v, int l, const std::string& k) { c.t_max = to_double(v, l, k); }},
        {"grid.n_points",
         [&](const std::string& v, int l, const std::string& k) { c.n_points = static_cast<int>(to_count(v, l, k)); }},
        {"mc.seed", [&](const std::string& v, int l, const std::string& k) { c.seed = to_count(v, l, k); }},
        {"mc.samples", [&](const std::string& v, int l, const std::string& k) { c.samples = to_count(v, l, k); }},
        {"mc.chunk", [&](const std::string& v, int l, const std::string& k) { c.chunk = to_count(v, l, k); }},
        {"output.path", [&](const std::string& v, int, const std::string&) { c.out_path = v; }},
    };
    static const std::vector<std::string> sections{"radial", "angular", "state", "grid", "mc", "output"};

    std::string section;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']') throw ConfigError("line " + std::to_string(line) + ": malformed section header", line, "");
            section = trim(text.substr(1, text.size() - 2));
            if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
                throw ConfigError("line " + std::to_string(line) + ": unknown section [" + section + "]", line, section);
            }
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'", line, "");
        }
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (section.empty()) {
            throw ConfigError("line " + std::to_string(line) + ": key '" + key + "' outside any section", line, key);
        }
        const std::string full = section + "." + key;
        auto it = keys.find(full);
        if (it == keys.end()) {
            throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "' in [" + section + "]", line,
                              full);
        }
        it->second(value, line, full);
    }

    // validation
    if (!(c.omega_c > 0.0)) throw ConfigError("radial.omega_c must be positive", 0, "radial.omega_c");
    if (c.n_points < 2) throw ConfigError("grid.n_points must be at least 2", 0, "grid.n_points");
    if (!(c.t_max > c.t_min) || c.t_min < 0.0) throw ConfigError("grid requires 0 <= t_min < t_max", 0, "grid.t_max");
    if (c.samples < 1) throw ConfigError("mc.samples must be at least 1", 0, "mc.samples");
    if (c.chunk < 1) throw ConfigError("mc.chunk must be at least 1", 0, "mc.chunk");
    if (c.a < 0.0 || c.a > 1.0) throw ConfigError("angular.a must lie in [0, 1]", 0, "angular.a");
    for (double v : c.a_values)
        if (v < 0.0 || v > 1.0) throw ConfigError("angular.a_values must lie in [0, 1]", 0, "angular.a_values");
    if (c.theta0 && c.bloch) throw ConfigError("state: give either theta0 or bloch, not both", 0, "state.bloch");
    if (c.bloch && c.bloch->norm() > 1.0 + 1e-12) throw ConfigError("state.bloch lies outside the unit ball", 0, "state.bloch");
    static const std::vector<std::string> radials{"gaussian", "exp_cutoff", "reciprocal_square", "tabulated"};
    static const std::vector<std::string> angulars{"sphere", "bagel", "dumbbell", "cardioid", "kneaded", "tabulated"};
    if (std::find(radials.begin(), radials.end(), c.radial_model) == radials.end()) {
        throw ConfigError("unknown radial model '" + c.radial_model + "'", 0, "radial.model");
    }
    if (std::find(angulars.begin(), angulars.end(), c.angular_model) == angulars.end()) {
        throw ConfigError("unknown angular model '" + c.angular_model + "'", 0, "angular.model");
    }
    if (c.radial_model == "tabulated" && c.radial_table.empty()) {
        throw ConfigError("radial.model = tabulated needs radial.table", 0, "radial.table");
    }
    if (c.angular_model == "tabulated" && c.angular_table.empty()) {
        throw ConfigError("angular.model = tabulated needs angular.table", 0, "angular.table");
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'", 0, "");
    const auto base = std::filesystem::path(path).parent_path().string();
    return parse_config(in, base.empty() ? "." : base);
}

Vec3 RunConfig::initial_bloch() const {
    if (bloch) return *bloch;
    const double th = theta0.value_or(0.0);
    return Vec3(std::sin(th), 0.0, std::cos(th));
}

std::vector<double> RunConfig::time_grid() const {
    std::vector<double> g(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        const double s = t_min + (t_max - t_min) * static_cast<double>(i) / static_cast<double>(n_points - 1);
        g[static_cast<std::size_t>(i)] = s / omega_c;
    }
    return g;
}

RadialModel RunConfig::radial() const {
    if (radial_model == "gaussian") return RadialModel::gaussian(omega_c);
    if (radial_model == "exp_cutoff") return RadialModel::exp_cutoff(omega_c);
    if (radial_model == "reciprocal_square") return RadialModel::reciprocal_square(omega_c);
    return load_radial_table(radial_table);
}

AngularModel RunConfig::angular_with(double a_value) const {
    if (angular_model == "sphere") return AngularModel::sphere();
    if (angular_model == "bagel") return AngularModel::bagel();
    if (angular_model == "dumbbell") return AngularModel::dumbbell();
    if (angular_model == "cardioid") return AngularModel::cardioid();
    if (angular_model == "kneaded") return AngularModel::kneaded_cardioid(a_value);
    return load_angular_table(angular_table);
}

AngularModel RunConfig::angular() const { return angular_with(a); }

SeparableEnsemble RunConfig::ensemble() const {
    const auto r = radial();
    if (r.kind() == RadialKind::tabulated) return SeparableEnsemble::normalized(r, angular());
    return SeparableEnsemble(r, angular());
}

} // namespace hamens
