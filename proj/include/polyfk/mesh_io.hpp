#pragma once

#include "polyfk/agglomerate.hpp"
#include "polyfk/mesh.hpp"

#include <filesystem>
#include <iosfwd>

namespace polyfk {

/// Text mesh format, version 1. Grammar (`#` starts a comment, blank lines
/// are ignored, tokens are whitespace separated):
///
///     polyfk-mesh v1
///     vertices <N>
///     <x> <y>                              N lines
///     elements <M>
///     <k> <v_0> ... <v_{k-1}> <label>      M lines, counter-clockwise loops
///     boundary <B>
///     <v_a> <v_b> <dirichlet|neumann>      B lines
///
/// Vertex indices are zero based.
RawMesh read_raw_mesh(std::istream &in);
RawMesh read_raw_mesh(const std::filesystem::path &path);

PolyMesh read_mesh(const std::filesystem::path &path);

/// Same format restricted to triangles.
TriMesh read_tri_mesh(const std::filesystem::path &path);
TriMesh to_tri_mesh(const RawMesh &raw);

void write_mesh(std::ostream &out, const PolyMesh &mesh);
void write_mesh(const std::filesystem::path &path, const PolyMesh &mesh);
void write_tri_mesh(std::ostream &out, const TriMesh &mesh);

} // namespace polyfk
