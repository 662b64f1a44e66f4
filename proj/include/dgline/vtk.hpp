#pragma once

#include "dgline/field.hpp"
#include "dgline/mesh.hpp"

#include <fstream>
#include <ostream>
#include <string>

namespace dgline {

/// Writes a broken field as legacy ASCII VTK. Vertices are duplicated per
/// element so discontinuities survive; point data holds the element
/// polynomial at its vertices and cell data the value at the barycenter.
inline void write_vtk_field(std::ostream& os, const FieldFunction& field, const std::string& name = "u") {
    const Mesh& m = field.mesh();
    const std::size_t ne = m.num_elements();
    os.precision(12);
    os << "# vtk DataFile Version 3.0\ndgline field " << name << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << 4 * ne << " double\n";
    for (std::size_t e = 0; e < ne; ++e)
        for (int i = 0; i < 4; ++i) {
            const Vec3 v = m.vertex(static_cast<int>(e), i);
            os << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
        }
    os << "CELLS " << ne << ' ' << 5 * ne << '\n';
    for (std::size_t e = 0; e < ne; ++e)
        os << "4 " << 4 * e << ' ' << 4 * e + 1 << ' ' << 4 * e + 2 << ' ' << 4 * e + 3 << '\n';
    os << "CELL_TYPES " << ne << '\n';
    for (std::size_t e = 0; e < ne; ++e) os << "10\n";
    os << "POINT_DATA " << 4 * ne << "\nSCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (std::size_t e = 0; e < ne; ++e)
        for (int i = 0; i < 4; ++i) os << field.value(static_cast<int>(e), m.vertex(static_cast<int>(e), i)) << '\n';
    os << "CELL_DATA " << ne << "\nSCALARS " << name << "_center double 1\nLOOKUP_TABLE default\n";
    for (std::size_t e = 0; e < ne; ++e) os << field.value(static_cast<int>(e), m.centroid(static_cast<int>(e))) << '\n';
}

inline void write_vtk_field(const std::string& path, const FieldFunction& field, const std::string& name = "u") {
    std::ofstream f(path);
    if (!f) throw InvalidArgument("cannot write '" + path + "'");
    write_vtk_field(f, field, name);
}

} // namespace dgline
