#include "pdrkit/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pdrkit/errors.hpp"
#include "pdrkit/field_io.hpp"

namespace pdrkit {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("malformed section header on line " +
                                  std::to_string(lineno) + ": " + line);
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("empty section name on line " +
                                  std::to_string(lineno));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected `key = value` on line " +
                              std::to_string(lineno) + ": " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("empty key on line " + std::to_string(lineno));
        const std::string full = section.empty() ? key : section + "." + key;
        if (cfg.kv_.count(full))
            throw ConfigError("duplicate configuration key: " + full);
        cfg.kv_[full] = value;
    }
    return cfg;
}

bool Config::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string Config::get_string(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing configuration key: " + key);
    seen_.insert(key);
    return it->second;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

double Config::get_double(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("value for " + key + " is not a number: " + v);
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        std::size_t pos = 0;
        const int i = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError("value for " + key + " is not an integer: " + v);
    }
}

int Config::get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

void Config::require_all_consumed() const {
    std::string leftovers;
    for (const auto& [k, v] : kv_)
        if (!seen_.count(k)) leftovers += (leftovers.empty() ? "" : ", ") + k;
    if (!leftovers.empty())
        throw ConfigError("unused configuration keys: " + leftovers);
}

std::vector<std::string> Config::keys() const {
    std::vector<std::string> out;
    out.reserve(kv_.size());
    for (const auto& [k, v] : kv_) out.push_back(k);
    return out;
}

void Config::set(const std::string& key, const std::string& value) {
    kv_[key] = value;
}

SymMatrixField constant_tensor(const Grid2D& grid, const Mat2& value) {
    SymMatrixField f(grid);
    for (std::size_t k = 0; k < grid.num_nodes(); ++k) f.set(k, value);
    return f;
}

SymMatrixField sample_tensor(const Grid2D& grid, const TensorFunction& fun) {
    SymMatrixField f(grid);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            f.set(grid.index(i, j), fun.value(Vec2(grid.x(i), grid.y(j))));
    return f;
}

TensorFunction diagpoly_background() {
    TensorFunction fun;
    fun.value = [](const Vec2& x) {
        Mat2 m;
        m << 1.0 + 0.5 * x[0] * x[0], 0.0, 0.0, 1.0;
        return m;
    };
    fun.deriv = [](const Vec2& x, int k) {
        Mat2 m = Mat2::Zero();
        if (k == 0) m(0, 0) = x[0];
        return m;
    };
    return fun;
}

TensorFunction constant_background(const Mat2& value) {
    TensorFunction fun;
    fun.value = [value](const Vec2&) { return value; };
    fun.deriv = [](const Vec2&, int) { return Mat2::Zero(); };
    return fun;
}

SymMatrixField bump_tensor(const Grid2D& grid, const Vec2& center,
                           double radius, const Mat2& amplitude) {
    if (!(radius > 0.0)) throw ConfigError("bump radius must be positive");
    SymMatrixField f(grid);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const Vec2 d(grid.x(i) - center[0], grid.y(j) - center[1]);
            const double s = 1.0 - d.squaredNorm() / (radius * radius);
            const double w = s > 0.0 ? s * s * s * s : 0.0;
            f.set(grid.index(i, j), w * amplitude);
        }
    return f;
}

std::vector<ScalarField> quadratic_boundary(const Grid2D& grid, const Mat2& q) {
    std::vector<ScalarField> g(3, ScalarField(grid));
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const double x = grid.x(i), y = grid.y(j);
            const std::size_t k = grid.index(i, j);
            g[0][k] = x;
            g[1][k] = y;
            g[2][k] =
                0.5 * (q(0, 0) * x * x + 2.0 * q(0, 1) * x * y + q(1, 1) * y * y);
        }
    return g;
}

std::vector<std::uint8_t> subdomain_mask(const Grid2D& grid, double x0,
                                         double y0, double x1, double y1) {
    if (!(x0 <= x1) || !(y0 <= y1))
        throw ConfigError("subdomain box has negative extent");
    std::vector<std::uint8_t> mask(grid.num_nodes(), 0);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const double x = grid.x(i), y = grid.y(j);
            if (x >= x0 && x <= x1 && y >= y0 && y <= y1)
                mask[grid.index(i, j)] = 1;
        }
    return mask;
}

namespace {

Mat2 read_sym_entries(const Config& cfg, const std::string& section,
                      const std::string& prefix) {
    Mat2 m;
    m(0, 0) = cfg.get_double(section + "." + prefix + "11");
    m(0, 1) = m(1, 0) = cfg.get_double(section + "." + prefix + "12", 0.0);
    m(1, 1) = cfg.get_double(section + "." + prefix + "22");
    return m;
}

} // namespace

Scenario build_scenario(const Config& cfg) {
    Scenario sc;

    if (cfg.has("grid.n")) {
        const int n = cfg.get_int("grid.n");
        sc.grid = Grid2D(n, n, cfg.get_double("grid.x0", 0.0),
                         cfg.get_double("grid.y0", 0.0),
                         cfg.get_double("grid.lx", 1.0),
                         cfg.get_double("grid.ly", 1.0));
    } else {
        sc.grid = Grid2D(cfg.get_int("grid.nx"), cfg.get_int("grid.ny"),
                         cfg.get_double("grid.x0", 0.0),
                         cfg.get_double("grid.y0", 0.0),
                         cfg.get_double("grid.lx", 1.0),
                         cfg.get_double("grid.ly", 1.0));
    }

    const std::string bgfam = cfg.get_string("background.family");
    if (bgfam == "constant") {
        const Mat2 value = read_sym_entries(cfg, "background", "a");
        sc.gamma0_fun = constant_background(value);
        sc.gamma0_is_analytic = true;
        sc.gamma0 = constant_tensor(sc.grid, value);
    } else if (bgfam == "diagpoly") {
        sc.gamma0_fun = diagpoly_background();
        sc.gamma0_is_analytic = true;
        sc.gamma0 = sample_tensor(sc.grid, sc.gamma0_fun);
    } else if (bgfam == "file") {
        sc.gamma0 = read_symmat(cfg.get_string("background.path"));
        require_same_grid(sc.grid, sc.gamma0.grid, "background tensor");
    } else {
        throw ConfigError("unknown background family: " + bgfam);
    }

    const std::string bdfam = cfg.get_string("boundary.family");
    if (bdfam == "coordinates-quadratic") {
        Mat2 q;
        q(0, 0) = cfg.get_double("boundary.q11");
        q(0, 1) = q(1, 0) = cfg.get_double("boundary.q12", 0.0);
        q(1, 1) = cfg.get_double("boundary.q22");
        sc.g = quadratic_boundary(sc.grid, q);
    } else {
        throw ConfigError("unknown boundary family: " + bdfam);
    }

    const std::string ptfam = cfg.get_string("perturbation.family");
    if (ptfam == "zero") {
        sc.gamma = SymMatrixField(sc.grid);
    } else if (ptfam == "bump") {
        const Vec2 center(cfg.get_double("perturbation.center_x"),
                          cfg.get_double("perturbation.center_y"));
        const double radius = cfg.get_double("perturbation.radius");
        const Mat2 amp = read_sym_entries(cfg, "perturbation", "a");
        sc.gamma = bump_tensor(sc.grid, center, radius, amp);
    } else if (ptfam == "file") {
        sc.gamma = read_symmat(cfg.get_string("perturbation.path"));
        require_same_grid(sc.grid, sc.gamma.grid, "perturbation tensor");
    } else {
        throw ConfigError("unknown perturbation family: " + ptfam);
    }

    sc.c0 = cfg.get_double("thresholds.c0", 1e-6);
    sc.sigma_min = cfg.get_double("thresholds.sigma_min", 1e-6);
    sc.solver_rtol = cfg.get_double("solver.rtol", 1e-10);
    sc.noise_amplitude = cfg.get_double("noise.amplitude", 0.0);

    cfg.require_all_consumed();
    return sc;
}

} // namespace pdrkit
