#include "pdrkit/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "pdrkit/errors.hpp"

namespace pdrkit {

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
}

int thread_cap() {
    if (const char* env = std::getenv("PDRKIT_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? int(hw) : 1;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    int workers = std::min<std::size_t>(thread_cap(), n ? n : 1);
    if (workers <= 1 || n < 2) {
        for (std::size_t k = 0; k < n; ++k) fn(k);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t k = w; k < n; k += workers) fn(k);
        });
    for (auto& t : pool) t.join();
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        lx[k] = std::log(x[k]);
        ly[k] = std::log(y[k]);
    }
    return fit_linear(lx, ly).slope;
}

LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
    std::size_t n = x.size();
    double sx = 0, sy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        sx += x[k];
        sy += y[k];
    }
    double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    double slope = sxy / sxx;
    double ss_res = 0;
    for (std::size_t k = 0; k < n; ++k) {
        double e = y[k] - (my + slope * (x[k] - mx));
        ss_res += e * e;
    }
    double r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
    return {my - slope * mx, slope, r2};
}

std::string format_double(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

void write_kv_file(const std::string& path, const std::map<std::string, std::string>& kv) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
    if (!os) throw IoError("write failed: " + path);
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open for reading: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            auto a = s.find_first_not_of(" \t\r");
            auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        if (!key.empty()) kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

} // namespace pdrkit
