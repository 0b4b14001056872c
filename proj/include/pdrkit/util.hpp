#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace pdrkit {

// Deterministic RNG: the mt19937_64 engine is standardized, but the std::
// distributions are implementation-defined, so the variate transforms are
// spelled out here to make outputs reproduce bit-for-bit across toolchains.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform() { return (eng_() >> 11) * 0x1.0p-53; } // [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal(); // Box-Muller
  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// worker cap from PDRKIT_THREADS (default: hardware concurrency, >= 1)
int thread_cap();

// chunked parallel map over [0, n); each index writes only its own slots, so
// results do not depend on the thread count
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// least-squares slope of log(y) against log(x); callers pass positive data
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// ordinary least-squares y ~ a + b x, with coefficient of determination
struct LinearFit {
    double intercept, slope, r2;
};
LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);

// shortest float formatting that round-trips (used everywhere text output
// must be deterministic)
std::string format_double(double v);

// plain-text "key = value" report files, keys emitted in sorted order
void write_kv_file(const std::string& path, const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> read_kv_file(const std::string& path);

} // namespace pdrkit
