#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pdrkit/field.hpp"
#include "pdrkit/microlocal.hpp"

namespace pdrkit {

// Line-oriented configuration: `key = value` entries grouped by `[section]`
// headers, '#' comments.  Keys are addressed as "section.key".  Every key
// must be consumed by the scenario builder; leftovers raise ConfigError so
// typos never pass silently.
class Config {
  public:
    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;

    // ConfigError naming every key that was never read
    void require_all_consumed() const;
    std::vector<std::string> keys() const;

    void set(const std::string& key, const std::string& value);

  private:
    std::map<std::string, std::string> kv_;
    mutable std::set<std::string> seen_;
};

// fully materialized problem instance
struct Scenario {
    Grid2D grid = Grid2D::unit_square(3);
    SymMatrixField gamma0;
    SymMatrixField gamma;
    std::vector<ScalarField> g; // boundary data evaluated on the full grid

    double c0 = 1e-6;        // basis-determinant threshold
    double sigma_min = 1e-6; // Z singular-value threshold
    double solver_rtol = 1e-10;
    double noise_amplitude = 0.0;

    bool gamma0_is_analytic = false;
    TensorFunction gamma0_fun; // set when the background family is analytic
};

// builds a scenario, resolving the named families:
//   [grid]         n (square) or nx/ny; optional x0,y0,lx,ly (unit square)
//   [background]   family = constant (a11,a12,a22) | diagpoly | file (path)
//   [boundary]     family = coordinates-quadratic (q11,q12,q22)
//   [perturbation] family = zero | bump (center_x,center_y,radius,
//                  a11,a12,a22) | file (path)
//   [thresholds]   c0, sigma_min          (defaults 1e-6)
//   [solver]       rtol                   (default 1e-10)
//   [noise]        amplitude              (default 0)
// Physics inputs (grid, background, boundary, perturbation) have no
// defaults; missing sections raise ConfigError.
Scenario build_scenario(const Config& cfg);

// named catalogs, also used directly by tests
SymMatrixField constant_tensor(const Grid2D& grid, const Mat2& value);
SymMatrixField sample_tensor(const Grid2D& grid, const TensorFunction& fun);
TensorFunction diagpoly_background(); // diag(1 + x^2/2, 1)
TensorFunction constant_background(const Mat2& value);

// C^3 compactly supported bump: amplitude * (1 - (r/radius)^2)^4 inside the
// disk, zero outside
SymMatrixField bump_tensor(const Grid2D& grid, const Vec2& center,
                           double radius, const Mat2& amplitude);

// g_1 = x, g_2 = y, g_3 = (q11 x^2 + 2 q12 x y + q22 y^2)/2, evaluated on
// the full grid (only boundary values are consumed by the solver)
std::vector<ScalarField> quadratic_boundary(const Grid2D& grid, const Mat2& q);

// 1 inside the closed box [x0,x1] x [y0,y1], 0 outside
std::vector<std::uint8_t> subdomain_mask(const Grid2D& grid, double x0,
                                         double y0, double x1, double y1);

} // namespace pdrkit
