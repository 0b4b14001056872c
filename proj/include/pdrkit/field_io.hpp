#pragma once

#include <string>
#include <variant>

#include "pdrkit/field.hpp"

namespace pdrkit {

// Field file format (bit-exact round trips on little-endian hosts):
//   ASCII header line   "PDF1 <kind> <nx> <ny> <ncomp>\n"
//                       kind in {scalar, vector, symmat}
//   4 little-endian float64: x0 y0 Lx Ly
//   nx*ny*ncomp little-endian float64, node-major, component-minor
// Errors: BadMagicError (wrong magic), ComponentMismatchError (kind/ncomp
// disagree), TruncatedFileError (short payload), IoError (anything else).

void write_field(const std::string& path, const ScalarField& f);
void write_field(const std::string& path, const VectorField& f);
void write_field(const std::string& path, const SymMatrixField& f);

using AnyField = std::variant<ScalarField, VectorField, SymMatrixField>;
AnyField read_field(const std::string& path);

ScalarField read_scalar(const std::string& path);
VectorField read_vector(const std::string& path);
SymMatrixField read_symmat(const std::string& path);

} // namespace pdrkit
