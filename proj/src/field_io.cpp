#include "pdrkit/field_io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pdrkit/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "field files are little-endian; big-endian hosts are unsupported");
static_assert(sizeof(double) == 8);

namespace pdrkit {

namespace {

const char* kind_name(FieldKind k) {
    switch (k) {
    case FieldKind::scalar: return "scalar";
    case FieldKind::vector: return "vector";
    default: return "symmat";
    }
}

void write_raw(const std::string& path, FieldKind kind, const Grid2D& g,
               const std::vector<double>& data) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    char head[96];
    int len = std::snprintf(head, sizeof(head), "PDF1 %s %d %d %d\n", kind_name(kind),
                            g.nx, g.ny, ncomp_of(kind));
    os.write(head, len);
    double geom[4] = {g.x0, g.y0, g.Lx, g.Ly};
    os.write(reinterpret_cast<const char*>(geom), sizeof(geom));
    os.write(reinterpret_cast<const char*>(data.data()),
             std::streamsize(data.size() * sizeof(double)));
    if (!os) throw IoError("write failed: " + path);
}

struct RawField {
    FieldKind kind;
    Grid2D grid;
    std::vector<double> data;
};

RawField read_raw(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    std::string header;
    if (!std::getline(is, header)) throw TruncatedFileError("missing header: " + path);
    std::istringstream hs(header);
    std::string magic, kind_str;
    int nx = 0, ny = 0, ncomp = 0;
    hs >> magic >> kind_str >> nx >> ny >> ncomp;
    if (magic != "PDF1") throw BadMagicError("not a PDF1 field file: " + path);
    if (hs.fail()) throw TruncatedFileError("malformed header: " + path);
    FieldKind kind;
    if (kind_str == "scalar") kind = FieldKind::scalar;
    else if (kind_str == "vector") kind = FieldKind::vector;
    else if (kind_str == "symmat") kind = FieldKind::symmat;
    else throw ComponentMismatchError("unknown field kind '" + kind_str + "': " + path);
    if (ncomp != ncomp_of(kind))
        throw ComponentMismatchError("kind/component count mismatch: " + path);
    double geom[4];
    if (!is.read(reinterpret_cast<char*>(geom), sizeof(geom)))
        throw TruncatedFileError("missing geometry block: " + path);
    Grid2D grid;
    try {
        grid = Grid2D(nx, ny, geom[0], geom[1], geom[2], geom[3]);
    } catch (const GridError& e) {
        throw IoError(std::string(e.what()) + ": " + path);
    }
    std::vector<double> data(grid.num_nodes() * ncomp);
    if (!is.read(reinterpret_cast<char*>(data.data()),
                 std::streamsize(data.size() * sizeof(double))))
        throw TruncatedFileError("payload shorter than header promises: " + path);
    return {kind, grid, std::move(data)};
}

} // namespace

void write_field(const std::string& path, const ScalarField& f) {
    write_raw(path, FieldKind::scalar, f.grid, f.data);
}
void write_field(const std::string& path, const VectorField& f) {
    write_raw(path, FieldKind::vector, f.grid, f.data);
}
void write_field(const std::string& path, const SymMatrixField& f) {
    write_raw(path, FieldKind::symmat, f.grid, f.data);
}

AnyField read_field(const std::string& path) {
    RawField r = read_raw(path);
    switch (r.kind) {
    case FieldKind::scalar: {
        ScalarField f(r.grid);
        f.data = std::move(r.data);
        return f;
    }
    case FieldKind::vector: {
        VectorField f(r.grid);
        f.data = std::move(r.data);
        return f;
    }
    default: {
        SymMatrixField f(r.grid);
        f.data = std::move(r.data);
        return f;
    }
    }
}

ScalarField read_scalar(const std::string& path) {
    AnyField f = read_field(path);
    if (auto* s = std::get_if<ScalarField>(&f)) return std::move(*s);
    throw ComponentMismatchError("expected a scalar field: " + path);
}
VectorField read_vector(const std::string& path) {
    AnyField f = read_field(path);
    if (auto* v = std::get_if<VectorField>(&f)) return std::move(*v);
    throw ComponentMismatchError("expected a vector field: " + path);
}
SymMatrixField read_symmat(const std::string& path) {
    AnyField f = read_field(path);
    if (auto* m = std::get_if<SymMatrixField>(&f)) return std::move(*m);
    throw ComponentMismatchError("expected a symmat field: " + path);
}

} // namespace pdrkit
