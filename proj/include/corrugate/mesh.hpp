#pragma once

#include <string>

#include "corrugate/fields.hpp"

namespace corrugate {

/// Triangulated OBJ of a surface snapshot (n = 2, three components): one vertex
/// per lattice point, two triangles per cell, counterclockwise in the parameter
/// plane.  wrong-dimension otherwise, io-error if the file cannot be written.
void export_obj(const Field& u, const std::string& path);
std::string obj_text(const Field& u);

}  // namespace corrugate
